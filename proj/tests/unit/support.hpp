#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "lawlab/objectives.hpp"
#include "lawlab/run_ledger.hpp"
#include "lawlab/synth.hpp"

namespace test_support {

inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::path(LAWLAB_TEST_TMP) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline void write(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline lawlab::Dataset csv(const std::string& text) {
  std::istringstream in(text);
  return lawlab::ingest(in, lawlab::DataFormat::csv);
}

inline const char* kHeader = "run_id,n_total,n_nonembed,tokens_seen,step,total_steps,peak_lr,loss,source\n";

/// n in [1e7, 1e10], d in [1e9, 1e12], 8 x 8 log grid.
inline lawlab::FitProblem synthetic_problem(lawlab::LawForm form, const lawlab::Vector& theta, double sigma,
                                            std::uint64_t seed, lawlab::ObjectiveSpec objective,
                                            std::size_t per_axis = 8) {
  auto obs = lawlab::synthetic_observations(form, theta, lawlab::logspace(1e7, 1e10, per_axis),
                                            lawlab::logspace(1e9, 1e12, per_axis), sigma, seed);
  return lawlab::FitProblem(std::move(obs), form, objective);
}

}  // namespace test_support
