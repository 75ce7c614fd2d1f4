#pragma once

#include <string>
#include <vector>

#include "lawlab/fitters.hpp"
#include "lawlab/flops.hpp"
#include "lawlab/objectives.hpp"

namespace lawlab {

struct ResidualSummary {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  std::string worst_id;  ///< record with the largest |residual|
  double worst = 0.0;
};

/// Diagnostics on ln-loss residuals, whatever the fitting objective.
struct GoodnessOfFit {
  double r2_log = 0.0;
  double rmse_log = 0.0;
  std::size_t records = 0;
  ResidualSummary residuals;
};

/// Needs >= 2 records. With no variance in ln loss, r2_log is 1 for an exact
/// fit and -inf otherwise.
GoodnessOfFit goodness_of_fit(const FitProblem& problem, const Vector& params);

/// Everything fit() needs besides the data.
struct FitSettings {
  LawForm form = LawForm::chinchilla;
  ObjectiveSpec objective;
  InitStrategy init = InitStrategy::top_k(GridSpec::default_for(LawForm::chinchilla), 10);
  OptimizerSpec optimizer;
};

struct HoldoutRow {
  std::string id;
  double n = 0.0, d = 0.0, c = 0.0;
  double observed = 0.0;
  double predicted = 0.0;
  double abs_log_error = 0.0;
};

struct HoldoutReport {
  double split_c = 0.0;
  std::size_t train_records = 0;
  Vector params;
  double train_objective = 0.0;
  std::vector<HoldoutRow> holdout;  ///< ascending c, then id
  double max_abs_log_error = 0.0;
  double mean_abs_log_error = 0.0;
};

/// Fits on records with c <= split_c and scores the final checkpoints above
/// it. Throws EmptySplit when either side is empty.
HoldoutReport validate_extrapolation(const ComputeAnnotatedDataset& ds, double split_c, const FitSettings& settings,
                                     unsigned threads = 1);

}  // namespace lawlab
