#include "lawlab/synth.hpp"

#include <cmath>

#include <fmt/format.h>

#include "lawlab/error.hpp"

namespace lawlab {

double GaussianSampler::uniform() {
  // 53 random bits, shifted off zero
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianSampler::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform(), u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * M_PI * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

std::vector<double> logspace(double lo, double hi, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {lo};
  std::vector<double> out;
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    if (i == 0) {
      out.push_back(lo);
    } else if (i + 1 == count) {
      out.push_back(hi);
    } else {
      out.push_back(std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1)));
    }
  }
  return out;
}

std::vector<Observation> synthetic_observations(LawForm form, const Vector& theta, const std::vector<double>& ns,
                                                const std::vector<double>& ds, double sigma, std::uint64_t seed) {
  GaussianSampler g(seed);
  std::vector<Observation> out;
  out.reserve(ns.size() * ds.size());
  for (std::size_t i = 0; i < ns.size(); ++i)
    for (std::size_t j = 0; j < ds.size(); ++j) {
      const double lp = log_predict_loss(form, theta, ns[i], ds[j]);
      out.push_back({ns[i], ds[j], std::exp(lp + sigma * g.normal()), fmt::format("s{}_{}", i, j)});
    }
  return out;
}

ChinchillaParams synthetic_lab_truth() {
  ChinchillaParams p;
  p.log_e = std::log(1.8);
  p.log_a = std::log(400.0);
  p.log_b = std::log(800.0);
  p.alpha = 0.34;
  p.beta = 0.32;
  return p;
}

Dataset synthetic_lab_dataset(const ArchTable& arch, std::uint64_t seed) {
  const ChinchillaParams truth = synthetic_lab_truth();
  const Vector theta = truth.to_vector();
  const double ratios[] = {5, 10, 20, 40, 80};
  const char* lrs[] = {"2e-3", "4e-3", "8e-3"};
  constexpr std::uint64_t kSteps = 10;
  GaussianSampler g(seed);

  Dataset ds;
  ds.label = fmt::format("synthetic lab dataset (seed {})", seed);
  for (const auto& [arch_id, a] : arch) {
    const std::uint64_t n_total = count_params(a, true);
    const std::uint64_t n_nonembed = count_params(a, false);
    // the best peak learning rate shrinks with size
    const double lr_best = 8e-3 * std::pow(static_cast<double>(n_nonembed) / 1e7, -0.25);
    for (double rho : ratios) {
      const double d_total = rho * static_cast<double>(n_total);
      for (const char* lr_text : lrs) {
        const Decimal lr = Decimal::parse(lr_text);
        const double lr_miss = std::log2(lr.value() / lr_best);
        for (std::uint64_t step = 1; step <= kSteps; ++step) {
          const double frac = static_cast<double>(step) / kSteps;
          const auto tokens = static_cast<std::uint64_t>(std::llround(d_total * frac));
          double loss = predict_loss(LawForm::chinchilla, theta, static_cast<double>(n_nonembed),
                                     static_cast<double>(tokens));
          loss *= 1.0 + 0.03 * (1.0 - frac);           // schedule not yet annealed
          loss *= 1.0 + 0.01 * lr_miss * lr_miss;      // learning-rate mismatch
          loss *= std::exp(0.005 * g.normal());
          RunRecord r;
          r.run_id = fmt::format("{}_r{}_lr{}", arch_id, rho, lr_text);
          r.n_total = n_total;
          r.n_nonembed = n_nonembed;
          r.tokens_seen = tokens;
          r.step = step;
          r.total_steps = kSteps;
          r.peak_lr = lr;
          r.loss = Decimal::parse(fmt::format("{:.6f}", loss));
          r.source = "synthetic-lab";
          r.arch_id = arch_id;
          ds.records.push_back(std::move(r));
        }
      }
    }
  }
  return ds;
}

Dataset synthetic_learning_curves(LawForm form, const Vector& theta, const std::vector<double>& ns, double min_ratio,
                                  double max_ratio, std::size_t checkpoints) {
  Dataset ds;
  ds.label = "synthetic learning curves";
  const auto ratios = logspace(min_ratio, max_ratio, checkpoints);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const auto n = static_cast<std::uint64_t>(std::llround(ns[i]));
    for (std::size_t k = 0; k < ratios.size(); ++k) {
      RunRecord r;
      r.run_id = fmt::format("curve{:03d}", i);
      r.n_total = n;
      r.tokens_seen = static_cast<std::uint64_t>(std::llround(ratios[k] * static_cast<double>(n)));
      r.step = k + 1;
      r.total_steps = ratios.size();
      r.loss = Decimal::parse(fmt::format("{:.17g}", predict_loss(form, theta, static_cast<double>(n),
                                                                   static_cast<double>(r.tokens_seen))));
      r.source = "synthetic-curves";
      ds.records.push_back(std::move(r));
    }
  }
  return ds;
}

Dataset synthetic_ratio_dataset() {
  constexpr double kE = 1.7, kA = 400.0, kAlpha = 0.34, kGamma = 1.3;
  const double kB = kA * std::pow(20.0, kAlpha);
  Dataset ds;
  ds.label = "synthetic ratio dataset (optimum D/N = 20)";
  const auto ns = logspace(1e7, std::pow(10.0, 9.5), 12);
  const auto ratios = logspace(2.0, 200.0, 15);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    for (std::size_t j = 0; j < ratios.size(); ++j) {
      const auto n = static_cast<std::uint64_t>(std::llround(ns[i]));
      const auto d = static_cast<std::uint64_t>(std::llround(ratios[j] * static_cast<double>(n)));
      const double inner = kA * std::pow(static_cast<double>(n), -kAlpha) + kB * std::pow(static_cast<double>(d), -kAlpha);
      const double loss = kE + std::pow(inner, kGamma);
      RunRecord r;
      r.run_id = fmt::format("dn_n{:02d}_r{:02d}", i, j);
      r.n_total = n;
      r.tokens_seen = d;
      r.step = 1;
      r.total_steps = 1;
      r.loss = Decimal::parse(fmt::format("{:.12g}", loss));
      r.source = "synthetic-ratio";
      ds.records.push_back(std::move(r));
    }
  }
  return ds;
}

}  // namespace lawlab
