// Runs the twelve acceptance criteria and prints one PASS/FAIL line each.
// Exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <fmt/format.h>

#include "lawlab/config.hpp"
#include "lawlab/error.hpp"
#include "lawlab/fitters.hpp"
#include "lawlab/flops.hpp"
#include "lawlab/isoflop.hpp"
#include "lawlab/lab.hpp"
#include "lawlab/law_forms.hpp"
#include "lawlab/objectives.hpp"
#include "lawlab/run_ledger.hpp"
#include "lawlab/synth.hpp"

using namespace lawlab;
namespace fs = std::filesystem;

namespace {

const std::string kSource = LAWLAB_SOURCE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(LAWLAB_TEST_TMP) / "acceptance" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ComputeAnnotatedDataset six_nd_annotated(const Dataset& ds) {
  return annotate_compute(ds, CountingPolicy{true, true, FlopMethod::six_nd}, {});
}

// Chinchilla parameters inside the default grid, scaled so both power-law
// terms are a visible share of the loss over n in [1e7, 1e10], d in [1e9, 1e12].
Vector interior_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double log_e = 0.2 + 0.6 * u(rng);
  const double alpha = 0.25 + 0.2 * u(rng), beta = 0.25 + 0.2 * u(rng);
  const double e = std::exp(log_e);
  const double log_a = alpha * std::log(3e8) + std::log((0.3 + 0.5 * u(rng)) * e);
  const double log_b = beta * std::log(3e10) + std::log((0.3 + 0.5 * u(rng)) * e);
  return (Vector(5) << log_e, log_a, log_b, alpha, beta).finished();
}

// ---------------------------------------------------------------------------

Outcome c1_recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int trials = 5;
  double worst_exp = 0, worst_alloc = 0;
  bool ok = true;
  for (int t = 0; t < trials; ++t) {
    const Vector truth = interior_params(rng);
    std::vector<Observation> obs;
    GaussianSampler noise(1000 + t);
    for (int i = 0; i < 200; ++i) {
      // four decades of d; over three, about 1 dataset in 100 misses the exponent bound
      const double n = std::pow(10.0, 7.0 + 3.0 * u(rng)), d = std::pow(10.0, 8.5 + 4.0 * u(rng));
      obs.push_back({n, d, predict_loss(LawForm::chinchilla, truth, n, d) * std::exp(0.01 * noise.normal()),
                     fmt::format("r{}", i)});
    }
    FitProblem p(obs, LawForm::chinchilla, ObjectiveSpec::log_huber());
    const auto rep = fit(p, InitStrategy::top_k(GridSpec::default_for(LawForm::chinchilla), 100), OptimizerSpec{}, 1);
    const Vector& got = rep.best().params;
    const double e_alpha = std::abs(got[3] - truth[3]), e_beta = std::abs(got[4] - truth[4]);
    const double e_alloc = std::abs(got[4] / (got[3] + got[4]) - truth[4] / (truth[3] + truth[4]));
    worst_exp = std::max({worst_exp, e_alpha, e_beta});
    worst_alloc = std::max(worst_alloc, e_alloc);
    ok = ok && e_alpha <= 0.03 && e_beta <= 0.03 && e_alloc <= 0.02;
  }
  const double per_fit = elapsed(t0) / trials;
  ok = ok && per_fit < 60.0;
  return {ok, fmt::format("{} datasets, max |d alpha|,|d beta| {:.4f} (<=0.03), max |d exponent| {:.4f} (<=0.02), "
                          "{:.2f} s per fit (<60)",
                          trials, worst_exp, worst_alloc, per_fit)};
}

Vector random_params(LawForm form, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  switch (form) {
    case LawForm::chinchilla: return interior_params(rng);
    case LawForm::tied: {
      Vector v = interior_params(rng);
      return (Vector(4) << v[0], v[1], v[2], v[3]).finished();
    }
    case LawForm::kaplan:
      return (Vector(4) << 15.0 + 15.0 * u(rng), 15.0 + 15.0 * u(rng), 0.05 + 0.5 * u(rng), 0.05 + 0.5 * u(rng))
          .finished();
  }
  return {};
}

Outcome c2_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const ObjectiveSpec spec = ObjectiveSpec::log_huber();
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;
  for (LawForm form : {LawForm::chinchilla, LawForm::tied, LawForm::kaplan}) {
    for (int t = 0; t < 100;) {
      // data from one parameter set, evaluated at another
      const Vector gen = random_params(form, rng), theta = random_params(form, rng);
      std::vector<Observation> obs;
      for (int i = 0; i < 30; ++i) {
        const double n = std::pow(10.0, 7.0 + 3.0 * u(rng)), d = std::pow(10.0, 9.0 + 3.0 * u(rng));
        obs.push_back({n, d, predict_loss(form, gen, n, d) * std::exp(0.05 * (u(rng) - 0.5)), ""});
      }
      FitProblem p(obs, form, spec);
      const Vector r = residual_vector(p, theta);
      bool near_knee = false;
      for (Eigen::Index i = 0; i < r.size(); ++i) near_knee = near_knee || std::abs(std::abs(r[i]) - spec.delta) < 1e-4;
      if (near_knee) {
        ++skipped;
        continue;
      }
      const Vector g = objective_grad(p, theta);
      Vector fd(theta.size());
      for (Eigen::Index k = 0; k < theta.size(); ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta[k]));
        Vector a = theta, b = theta;
        a[k] += h;
        b[k] -= h;
        fd[k] = (objective_value(p, a) - objective_value(p, b)) / (2 * h);
      }
      worst = std::max(worst, (fd - g).norm() / std::max(g.norm(), 1e-300));
      ++checked;
      ++t;
    }
  }
  const double secs = elapsed(t0);
  return {worst <= 1e-5 && secs < 10.0,
          fmt::format("{} triples ({} resampled near a knee), max relative error {:.2e} (<=1e-5), {:.2f} s (<10)",
                      checked, skipped, worst, secs)};
}

Outcome c3_allocation() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  int sets = 0;
  while (sets < 50) {
    const ChinchillaParams p{0.5 * u(rng), 3.0 + 7.0 * u(rng), 3.0 + 7.0 * u(rng), 0.2 + 0.4 * u(rng),
                             0.2 + 0.4 * u(rng)};
    const double c = std::pow(10.0, 15.0 + 10.0 * u(rng));
    const Allocation closed = optimal_allocation(p, c);
    // keep the optimum strictly inside the feasible range n in [1, c/6]
    if (closed.n < 10.0 || closed.n > c / 60.0) continue;
    ++sets;
    const double lo = 0.0, hi = std::log(c / 6.0);
    const int points = 10000;
    double best_f = INFINITY, best_n = 0;
    for (int i = 0; i < points; ++i) {
      const double n = std::exp(lo + (hi - lo) * i / (points - 1));
      const double f = predict_loss(LawForm::chinchilla, p.to_vector(), n, c / (6.0 * n));
      if (f < best_f) best_f = f, best_n = n;
    }
    worst = std::max(worst, std::abs(best_n / closed.n - 1.0));
  }
  const double secs = elapsed(t0);
  return {worst <= 0.005 && secs < 10.0,
          fmt::format("50 parameter sets, c in [1e15, 1e25], max |n_opt/n_grid - 1| {:.4f} (<=0.005), {:.2f} s (<10)",
                      worst, secs)};
}

Outcome c4_tied_ratio() {
  std::mt19937_64 rng(13);
  double worst = 0.0;
  const int fits = 5;
  for (int t = 0; t < fits; ++t) {
    const Vector gen = interior_params(rng);
    auto obs = synthetic_observations(LawForm::chinchilla, gen, logspace(1e7, 1e10, 8), logspace(1e9, 1e12, 8), 0.01,
                                      50 + t);
    FitProblem p(obs, LawForm::tied, ObjectiveSpec::log_huber());
    const auto rep = fit(p, InitStrategy::top_k(GridSpec::default_for(LawForm::tied), 10), OptimizerSpec{});
    const TiedParams tp = TiedParams::from_vector(rep.best().params);
    const double r0 = optimal_allocation(tp, 1e18).rho;
    for (double c : {1e21, 1e24}) worst = std::max(worst, std::abs(optimal_allocation(tp, c).rho / r0 - 1.0));
  }
  return {worst <= 1e-10, fmt::format("{} tied fits, max relative rho spread over 1e18..1e24 {:.1e} (<=1e-10)", fits,
                                      worst)};
}

Outcome c5_isoflop() {
  const double alpha = 0.3, a = 400.0, b = a * std::pow(20.0, alpha);
  const Vector theta = (Vector(5) << std::log(1.7), std::log(a), std::log(b), alpha, alpha).finished();
  const Dataset ds = synthetic_learning_curves(LawForm::chinchilla, theta, logspace(1e7, 3e10, 40), 0.5, 800.0, 40);
  const ComputeAnnotatedDataset annotated = six_nd_annotated(ds);

  const IsoflopAnalysis iso = run_isoflop(annotated, BudgetSpec::list(logspace(1e19, 1e22, 8)));
  if (!iso.ratio) return {false, "isoflop route produced no ratio law: " + iso.ratio_error};

  FitProblem p = FitProblem::from_dataset(annotated, LawForm::chinchilla, ObjectiveSpec::log_huber());
  const auto rep = fit(p, InitStrategy::top_k(GridSpec::default_for(LawForm::chinchilla), 20), OptimizerSpec{});

  double worst = 0.0;
  std::size_t kept = 0;
  for (const auto& bud : iso.budgets) {
    if (!bud.profile) continue;
    ++kept;
    const double via_fit = allocate(LawForm::chinchilla, rep.best().params, bud.c).n;
    const double via_ratio = ratio_predict(iso.ratio->params, bud.c).n;
    worst = std::max(worst, std::abs(via_fit / via_ratio - 1.0));
  }
  const double exp_err = std::abs(iso.ratio->params.exp_a - 0.5);
  return {kept >= 2 && worst <= 0.05 && exp_err <= 0.05,
          fmt::format("{} budgets kept, max |n_fit/n_isoflop - 1| {:.4f} (<=0.05), exp_a {:.4f} (|d|<=0.05)", kept,
                      worst, iso.ratio->params.exp_a)};
}

Outcome c6_grid() {
  const GridSpec g = GridSpec::default_for(LawForm::chinchilla);
  const std::size_t base = g.size();
  const Vector truth = (Vector(5) << 0.5, 6.0, 7.0, 0.34, 0.28).finished();
  auto obs = synthetic_observations(LawForm::chinchilla, truth, logspace(1e7, 1e10, 3), logspace(1e9, 1e12, 2), 0.0, 1);
  FitProblem p(obs, LawForm::chinchilla, ObjectiveSpec::log_huber());
  OptimizerSpec o;
  o.kind = OptimizerSpec::Kind::grid;
  o.density_multiplier = 5;
  const FitResult r = minimize(o, p, grid_point(g, LawForm::chinchilla, 0), &g);
  const std::size_t dense = g.densified(5).size();
  return {base == 4500 && r.iterations == base * 3125 && dense == base * 3125,
          fmt::format("default grid {} points (=4500), density-5 grid search evaluated {} = {} x 5^5", base,
                      r.iterations, base)};
}

RunRecord record(std::string id, std::uint64_t n, std::uint64_t tokens, std::uint64_t step, std::uint64_t total) {
  RunRecord r;
  r.run_id = std::move(id);
  r.n_total = n;
  r.tokens_seen = tokens;
  r.step = step;
  r.total_steps = total;
  r.loss = Decimal::parse("3.0");
  r.source = "acceptance";
  return r;
}

Outcome c7_filters() {
  Dataset ratios;
  for (std::uint64_t dn : {17, 18, 20, 22, 23}) ratios.records.push_back(record(fmt::format("dn{}", dn), 1000, 1000 * dn, 1, 1));
  auto kept = [](const Dataset& ds) {
    std::set<std::string> ids;
    for (const auto& r : ds.records) ids.insert(r.run_id);
    return ids;
  };
  const auto le18 = kept(filter_scale(ratios, std::nullopt, std::nullopt, 18.0, NConvention::total));
  const auto ge22 = kept(filter_scale(ratios, std::nullopt, 22.0, std::nullopt, NConvention::total));
  const bool ratio_ok = le18 == std::set<std::string>{"dn17", "dn18"} && ge22 == std::set<std::string>{"dn22", "dn23"};

  Dataset run;
  for (std::uint64_t s = 1; s <= 10; ++s) run.records.push_back(record("run", 1000, 100 * s, s, 10));
  auto steps = [](const Dataset& ds) {
    std::vector<std::uint64_t> out;
    for (const auto& r : ds.records) out.push_back(r.step);
    return out;
  };
  const auto s01 = steps(filter_checkpoints(run, CheckpointPolicy::min_fraction(0.1)));
  const auto s02 = steps(filter_checkpoints(run, CheckpointPolicy::min_fraction(0.2)));
  const auto s05 = steps(filter_checkpoints(run, CheckpointPolicy::min_fraction(0.5)));
  const bool ck_ok = s01 == std::vector<std::uint64_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10} &&
                     s02 == std::vector<std::uint64_t>{2, 3, 4, 5, 6, 7, 8, 9, 10} &&
                     s05 == std::vector<std::uint64_t>{5, 6, 7, 8, 9, 10};
  return {ratio_ok && ck_ok, fmt::format("D/N<=18 keeps {}, D/N>=22 keeps {}, 20 dropped by both; "
                                         "fractions 0.1/0.2/0.5 keep {}/{}/{} of 10 checkpoints",
                                         le18.size(), ge22.size(), s01.size(), s02.size(), s05.size())};
}

GridSpec coarse(LawForm form) {
  GridSpec g = GridSpec::default_for(form);
  for (auto& axis : g.axes) axis.count = 3;
  return g;
}

Outcome c8_monotonic() {
  std::size_t results = 0, violations = 0, grid_violations = 0;
  std::mt19937_64 rng(17);
  for (LawForm form : {LawForm::chinchilla, LawForm::tied, LawForm::kaplan}) {
    const Vector gen = interior_params(rng);
    auto obs = synthetic_observations(LawForm::chinchilla, gen, logspace(1e7, 1e10, 5), logspace(1e9, 1e12, 5), 0.02,
                                      90 + static_cast<int>(form));
    const GridSpec g = coarse(form);
    const Vector fixed = grid_point(g, form, g.size() / 2);
    const std::vector<InitStrategy> strategies = {InitStrategy::full(g), InitStrategy::best_of(g),
                                                  InitStrategy::top_k(g, 10), InitStrategy::random(g, 10, 3),
                                                  InitStrategy::fixed(fixed)};
    for (auto kind : {OptimizerSpec::Kind::lbfgs, OptimizerSpec::Kind::bfgs, OptimizerSpec::Kind::nls,
                      OptimizerSpec::Kind::grid}) {
      const ObjectiveSpec objective =
          kind == OptimizerSpec::Kind::nls ? ObjectiveSpec::mse(ResidualSpace::log) : ObjectiveSpec::log_huber();
      FitProblem p(obs, form, objective);
      OptimizerSpec o;
      o.kind = kind;
      o.density_multiplier = 2;
      double full_best = NAN, best_of_best = NAN;
      for (const auto& s : strategies) {
        const auto rep = fit(p, s, o);
        for (const auto& r : rep.results) {
          ++results;
          if (!(r.objective <= r.init_objective)) ++violations;
        }
        if (s.kind == InitStrategy::Kind::full_grid) full_best = rep.best().objective;
        if (s.kind == InitStrategy::Kind::best_of_grid) best_of_best = rep.best().objective;
      }
      if (!(full_best <= best_of_best)) ++grid_violations;
    }
  }
  return {violations == 0 && grid_violations == 0,
          fmt::format("{} local fits over 3 forms x 4 optimizers x 5 strategies: {} ended above their start, "
                      "{} cases of full_grid worse than best_of_grid",
                      results, violations, grid_violations)};
}

Outcome c9_determinism() {
  const json matrix = json::parse(slurp(kSource + "/configs/matrix_8axis.json"));
  RunOptions o;
  o.threads = 1;
  const fs::path one = scratch("matrix_t1"), eight = scratch("matrix_t8");
  const auto t0 = std::chrono::steady_clock::now();
  const MatrixOutcome a = run_matrix(matrix, kSource + "/configs", one.string(), o);
  o.threads = 8;
  const MatrixOutcome b = run_matrix(matrix, kSource + "/configs", eight.string(), o);
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(one)) {
    ++files;
    const fs::path other = eight / entry.path().filename();
    std::string x = slurp(entry.path()), y = fs::exists(other) ? slurp(other) : std::string("missing");
    if (entry.path().extension() == ".json" && x.find("\"timing\"") != std::string::npos) {
      x = dump_report(without_timing(json::parse(x)));
      y = y == "missing" ? y : dump_report(without_timing(json::parse(y)));
    }
    if (x != y) ++differing;
  }
  const bool ok = differing == 0 && files == a.variants.size() + 1 && a.comparison_csv == b.comparison_csv &&
                  std::distance(fs::directory_iterator(eight), fs::directory_iterator()) ==
                      static_cast<std::ptrdiff_t>(files);
  return {ok, fmt::format("{} variants ({} failed), {} files compared between 1 and 8 threads, {} differ; {:.1f} s",
                          a.variants.size(), a.failures.size(), files, differing, elapsed(t0))};
}

Outcome c10_counting() {
  const ArchTable arch = load_arch_table(kSource + "/data/arch_table.json");
  const Dataset ds = ingest_file(kSource + "/data/synthetic_lab.csv", DataFormat::csv);
  std::vector<std::vector<std::pair<double, double>>> variants;
  for (bool in_n : {true, false})
    for (bool in_c : {true, false}) {
      const auto a = annotate_compute(ds, CountingPolicy{in_n, in_c, FlopMethod::detailed}, arch);
      std::vector<std::pair<double, double>> nc;
      for (const auto& r : a.records) nc.emplace_back(r.n, r.c);
      variants.push_back(nc);
    }
  std::set<std::vector<std::pair<double, double>>> distinct(variants.begin(), variants.end());

  using boost::multiprecision::cpp_int;
  std::mt19937_64 rng(23);
  std::size_t exact = 0, refused = 0, trials = 10000;
  for (std::size_t i = 0; i < trials; ++i) {
    const std::uint64_t n = rng() >> (rng() % 64), d = rng() >> (rng() % 64);
    const cpp_int want = cpp_int(6) * n * d;
    try {
      if (cpp_int(six_nd(n, d)) == want) ++exact;
    } catch (const OverflowError&) {
      if (want > cpp_int(std::numeric_limits<std::int64_t>::max())) ++refused;
    }
  }
  return {distinct.size() == 4 && exact + refused == trials,
          fmt::format("{} distinct annotated datasets from 4 conventions; six_nd exact on {} of {} random pairs, "
                      "overflow refused on the other {}",
                      distinct.size(), exact, trials, refused)};
}

Outcome c11_user_data() {
  const char* csv_env = std::getenv("LAWLAB_CHINCHILLA_CSV");
  const char* preset_env = std::getenv("LAWLAB_PRESET_FILE");
  const char* preset_name_env = std::getenv("LAWLAB_PRESET_NAME");
  std::string csv_path, preset_path, preset_name, origin;
  if (csv_env && *csv_env) {
    csv_path = csv_env;
    origin = "user data " + csv_path;
  } else {
    // stand-in: 35 sizes x 7 token counts with 2% noise, in the ledger CSV schema
    const Vector truth = load_preset(kSource + "/configs/presets.json", "synthetic_truth", LawForm::chinchilla);
    const auto obs = synthetic_observations(LawForm::chinchilla, truth, logspace(4e7, 1.6e10, 35),
                                            logspace(1e9, 5e11, 7), 0.02, 245);
    Dataset ds;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      RunRecord r = record(fmt::format("standin{:03}", i), static_cast<std::uint64_t>(std::llround(obs[i].n)),
                           static_cast<std::uint64_t>(std::llround(obs[i].d)), 1, 1);
      r.loss = Decimal::parse(fmt::format("{:.17g}", obs[i].loss));
      r.source = "stand-in";
      ds.records.push_back(r);
    }
    csv_path = (scratch("standin") / "standin.csv").string();
    std::ofstream(csv_path, std::ios::binary) << to_csv(ds);
    origin = "stand-in data (set LAWLAB_CHINCHILLA_CSV for the real check)";
  }
  if (preset_env && *preset_env) {
    preset_path = preset_env;
    preset_name = preset_name_env ? preset_name_env : "reference";
  } else {
    preset_path = kSource + "/configs/presets.json";
    preset_name = "synthetic_truth";
  }

  const Dataset ds = ingest_file(csv_path, DataFormat::csv);
  const Vector preset = load_preset(preset_path, preset_name, LawForm::chinchilla);
  FitProblem p = FitProblem::from_dataset(six_nd_annotated(ds), LawForm::chinchilla, ObjectiveSpec::log_huber());
  const auto rep = fit(p, InitStrategy::fixed(preset, preset_name), OptimizerSpec{});
  const double at_preset = objective_value(p, preset);
  return {ds.size() == 245 && rep.best().objective <= at_preset,
          fmt::format("{}: {} records (=245); objective {:.6g} from preset '{}' at {:.6g}", origin, ds.size(),
                      rep.best().objective, preset_name, at_preset)};
}

Outcome c12_checklist() {
  json j = json::parse(slurp(kSource + "/configs/base.json"));
  j["init"]["k"] = 10;
  const ExperimentConfig cfg = parse_config(j);
  RunOptions o;
  o.base_dir = kSource + "/configs";
  const std::string md = render_checklist(cfg, run_experiment(cfg, o));
  std::istringstream in(md);
  std::string line;
  std::vector<std::size_t> per_section;
  std::size_t unanswered = 0;
  while (std::getline(in, line)) {
    if (line.rfind("## ", 0) == 0) per_section.push_back(0);
    if (line.rfind("- ", 0) == 0 && !per_section.empty()) {
      ++per_section.back();
      const auto colon = line.find(": ");
      if (colon == std::string::npos || colon + 2 >= line.size()) ++unanswered;
    }
  }
  // bullet counts of the four checklist sections
  const std::vector<std::size_t> expected = {5, 8, 5, 6};
  std::size_t total = 0;
  for (auto n : per_section) total += n;
  return {per_section == expected && unanswered == 0,
          fmt::format("{} answered lines in {} sections (expected 24 in 4: 5/8/5/6), {} unanswered", total,
                      per_section.size(), unanswered)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"synthetic parameter recovery", c1_recovery},
      {"gradient correctness", c2_gradients},
      {"allocation oracle", c3_allocation},
      {"tied-form constant ratio", c4_tied_ratio},
      {"isoflop pipeline consistency", c5_isoflop},
      {"grid accounting", c6_grid},
      {"filter semantics", c7_filters},
      {"monotonic improvement", c8_monotonic},
      {"matrix determinism across threads", c9_determinism},
      {"counting variants", c10_counting},
      {"user data ingestion and preset fit", c11_user_data},
      {"checklist parity", c12_checklist},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("raised: ") + e.what()};
    }
    failed += out.pass ? 0 : 1;
    fmt::print("C{:<2} {} {}: {}\n", i + 1, out.pass ? "PASS" : "FAIL", criteria[i].first, out.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
