#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lawlab/flops.hpp"
#include "lawlab/law_forms.hpp"

namespace lawlab {

struct CurvePoint {
  double c = 0.0;
  double loss = 0.0;
};

/// Loss of one run at compute `target_c`, linear in (ln c, ln loss) between
/// the bracketing checkpoints. Needs >= 2 points with strictly increasing c;
/// throws OutOfRange outside [c_min, c_max].
double interpolate_at_flops(const std::vector<CurvePoint>& curve, double target_c);

struct ProfilePoint {
  double n = 0.0;
  double loss = 0.0;
  std::string run_id;
};

/// Least-squares parabola loss ~ a u^2 + b u + c0 in u = ln n - center.
struct IsoflopProfile {
  double n_star = 0.0;
  double loss_star = 0.0;  ///< parabola value at the vertex
  double a = 0.0, b = 0.0, c0 = 0.0;
  double center = 0.0;
};

/// Throws DomainError with fewer than 3 distinct n, NoInteriorMinimum when
/// the parabola opens downward or its vertex lies outside the sampled ln n.
IsoflopProfile isoflop_profile(const std::vector<ProfilePoint>& points);

struct RatioFit {
  RatioParams params;
  double se_log_n0 = 0.0;  ///< NaN with two samples
  double se_exp_a = 0.0;
  std::size_t samples = 0;
};

/// OLS of ln n_star on ln c. Throws Degenerate when every c is equal.
RatioFit fit_ratio_law(const std::vector<std::pair<double, double>>& c_nstar);

/// Either explicit budgets or `count` budgets placed log-uniformly between
/// the 10th and 90th percentile of the dataset's compute.
struct BudgetSpec {
  std::vector<double> explicit_budgets;
  std::size_t auto_count = 8;

  static BudgetSpec list(std::vector<double> budgets) { return {std::move(budgets), 0}; }
  static BudgetSpec automatic(std::size_t count = 8) { return {{}, count}; }
  bool is_auto() const noexcept { return explicit_budgets.empty(); }
  void validate() const;  // throws ConfigError
};

struct IsoflopBin {
  double c = 0.0;
  std::vector<ProfilePoint> points;  ///< ascending (n, run_id)
};

/// One point per run whose compute hull contains the budget. A run with a
/// single checkpoint contributes only at exactly its own compute.
std::vector<IsoflopBin> build_isoflop_bins(const ComputeAnnotatedDataset& ds, const BudgetSpec& budgets);

struct BudgetOutcome {
  double c = 0.0;
  std::size_t points = 0;
  std::optional<IsoflopProfile> profile;
  std::string dropped_reason;  ///< empty when the profile was kept
};

struct IsoflopAnalysis {
  std::vector<BudgetOutcome> budgets;
  std::optional<RatioFit> ratio;
  std::string ratio_error;
};

/// Bins, per-budget parabolas, then the ratio regression over kept budgets.
IsoflopAnalysis run_isoflop(const ComputeAnnotatedDataset& ds, const BudgetSpec& budgets);

}  // namespace lawlab
