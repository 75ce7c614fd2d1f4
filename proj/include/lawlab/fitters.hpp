#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lawlab/law_forms.hpp"
#include "lawlab/objectives.hpp"

namespace lawlab {

/// One axis of an initialization grid, tied to a named coordinate.
struct GridAxis {
  std::string param;
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 1;

  /// Linearly spaced, endpoints included; a single point sits at the midpoint.
  std::vector<double> points() const;
};

/// Cartesian grid. Enumeration is lexicographic in axis order (first axis
/// varies slowest).
struct GridSpec {
  std::vector<GridAxis> axes;

  std::size_t size() const;
  /// Each axis carries `multiplier` times as many points over the same range.
  GridSpec densified(std::size_t multiplier) const;
  void validate(LawForm form) const;  // throws ConfigError

  /// (log_a, log_b, log_e, alpha, beta) with counts (6, 6, 5, 5, 5) for the
  /// chinchilla form; the tied form drops beta, the Kaplan form has its own.
  static GridSpec default_for(LawForm form);
};

std::vector<Vector> generate_grid(const GridSpec& spec, LawForm form);
/// The `index`-th vector of generate_grid without materializing the grid.
Vector grid_point(const GridSpec& spec, LawForm form, std::size_t index);

struct InitStrategy {
  enum class Kind { full_grid, best_of_grid, top_k_of_grid, random_k, fixed };
  Kind kind = Kind::top_k_of_grid;
  GridSpec grid;
  std::size_t k = 1;
  std::uint64_t seed = 0;
  Vector fixed_params;
  std::string preset_name;  ///< label for fixed inits loaded from a preset file

  static InitStrategy full(GridSpec g) { return {Kind::full_grid, std::move(g), 0, 0, {}, {}}; }
  static InitStrategy best_of(GridSpec g) { return {Kind::best_of_grid, std::move(g), 1, 0, {}, {}}; }
  static InitStrategy top_k(GridSpec g, std::size_t k) { return {Kind::top_k_of_grid, std::move(g), k, 0, {}, {}}; }
  static InitStrategy random(GridSpec g, std::size_t k, std::uint64_t seed) {
    return {Kind::random_k, std::move(g), k, seed, {}, {}};
  }
  static InitStrategy fixed(Vector params, std::string name = {}) {
    return {Kind::fixed, {}, 1, 0, std::move(params), std::move(name)};
  }

  std::string describe() const;
};

std::string to_string(InitStrategy::Kind kind);
InitStrategy::Kind parse_init_kind(std::string_view name);

struct OptimizerSpec {
  enum class Kind { lbfgs, bfgs, nls, grid };
  enum class GradMode { analytic, finite_diff };
  Kind kind = Kind::lbfgs;
  std::size_t memory = 10;
  double tol = 1e-6;
  std::size_t max_iter = 1000;
  GradMode grad_mode = GradMode::analytic;
  double fd_step = 1e-6;
  std::size_t density_multiplier = 5;

  void validate() const;  // throws ConfigError
  std::string describe() const;
};

std::string to_string(OptimizerSpec::Kind kind);
OptimizerSpec::Kind parse_optimizer_kind(std::string_view name);

struct FitResult {
  Vector params;
  double objective = 0.0;
  double init_objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t init_index = 0;
  std::string termination_reason;
};

struct MultistartReport {
  std::vector<FitResult> results;  ///< in init selection order
  std::size_t best_index = 0;
  InitStrategy strategy;
  OptimizerSpec optimizer;

  const FitResult& best() const { return results.at(best_index); }
};

/// Indexed starting points. Grid indices refer to generate_grid order;
/// fixed inits use index 0. Throws ConfigError when k exceeds the grid.
std::vector<std::pair<std::size_t, Vector>> select_inits(const InitStrategy& strategy,
                                                          const FitProblem& problem,
                                                          unsigned threads = 1);

/// Local minimization from `init`. The grid optimizer ignores the local
/// search and returns the better of `init` and the argmin over `base_grid`
/// densified by the multiplier (default grid of the form when null).
FitResult minimize(const OptimizerSpec& optimizer, const FitProblem& problem, const Vector& init,
                   const GridSpec* base_grid = nullptr, unsigned threads = 1);

/// Objective with optional gradient output, for the quasi-Newton solvers.
using ValueGradFn = std::function<double(const Vector& x, Vector* grad)>;

/// L-BFGS or BFGS on an arbitrary smooth function.
FitResult minimize_smooth(const OptimizerSpec& optimizer, const ValueGradFn& fn, const Vector& init);

/// The 2-D Rosenbrock function, (1 - x)^2 + 100 (y - x^2)^2.
double rosenbrock(const Vector& x, Vector* grad);

/// Runs minimize from every selected init. The best result is the lowest
/// objective among converged runs (all runs if none converged), ties to the
/// lower init index.
MultistartReport fit(const FitProblem& problem, const InitStrategy& strategy, const OptimizerSpec& optimizer,
                     unsigned threads = 1);

struct BootstrapReport {
  Vector point;
  Vector lower;  ///< 2.5th percentile
  Vector upper;  ///< 97.5th percentile
  std::size_t resamples = 0;
  std::size_t redraws = 0;
  std::uint64_t seed = 0;
  std::vector<Vector> samples;
};

/// Percentile bootstrap over records. Resamples with fewer distinct (n, d)
/// pairs than parameters are redrawn, at most 100 times each.
BootstrapReport bootstrap_fit(const FitProblem& problem, const InitStrategy& strategy,
                              const OptimizerSpec& optimizer, std::size_t b, std::uint64_t seed,
                              unsigned threads = 1);

/// Linear-interpolation percentile (q in [0, 100]) of unsorted values.
double percentile(std::vector<double> values, double q);

/// Uniform integer in [0, bound) from a 64-bit Mersenne twister, by
/// rejection; identical on every platform.
class SeededIndexSampler {
 public:
  explicit SeededIndexSampler(std::uint64_t seed);
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

}  // namespace lawlab
