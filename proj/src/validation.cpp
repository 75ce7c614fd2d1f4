#include "lawlab/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

#include <fmt/format.h>

#include "lawlab/error.hpp"

namespace lawlab {

GoodnessOfFit goodness_of_fit(const FitProblem& problem, const Vector& params) {
  if (problem.size() < 2) throw DomainError("goodness of fit needs at least two records");
  const auto& obs = problem.observations();
  const auto& log_loss = problem.log_loss();
  const std::size_t m = problem.size();

  double mean = 0.0;
  for (double v : log_loss) mean += v;
  mean /= static_cast<double>(m);

  std::vector<double> res(m);
  double ssr = 0.0, sst = 0.0;
  GoodnessOfFit out;
  out.records = m;
  for (std::size_t i = 0; i < m; ++i) {
    res[i] = log_predict_loss_logs(problem.form(), params.data(), problem.log_n()[i], problem.log_d()[i]) -
             log_loss[i];
    ssr += res[i] * res[i];
    sst += (log_loss[i] - mean) * (log_loss[i] - mean);
    if (i == 0 || std::abs(res[i]) > std::abs(out.residuals.worst)) {
      out.residuals.worst = res[i];
      out.residuals.worst_id = obs[i].id;
    }
  }
  out.rmse_log = std::sqrt(ssr / static_cast<double>(m));
  if (sst > 0.0)
    out.r2_log = 1.0 - ssr / sst;
  else
    out.r2_log = ssr == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity();
  out.residuals.min = *std::min_element(res.begin(), res.end());
  out.residuals.max = *std::max_element(res.begin(), res.end());
  out.residuals.median = percentile(res, 50.0);
  return out;
}

HoldoutReport validate_extrapolation(const ComputeAnnotatedDataset& ds, double split_c, const FitSettings& settings,
                                     unsigned threads) {
  std::vector<Observation> train;
  std::vector<const AnnotatedRecord*> held;
  for (const auto& r : ds.records) {
    if (r.c <= split_c)
      train.push_back({r.n, r.d, r.record.loss.value(), r.record.key()});
    else if (r.record.is_final())
      held.push_back(&r);
  }
  if (train.empty()) throw EmptySplit(fmt::format("no records at or below split_c = {:g}", split_c));
  if (held.empty()) throw EmptySplit(fmt::format("no final checkpoints above split_c = {:g}", split_c));

  HoldoutReport out;
  out.split_c = split_c;
  out.train_records = train.size();
  FitProblem problem(std::move(train), settings.form, settings.objective);
  const auto report = fit(problem, settings.init, settings.optimizer, threads);
  out.params = report.best().params;
  out.train_objective = report.best().objective;

  std::sort(held.begin(), held.end(), [](const AnnotatedRecord* a, const AnnotatedRecord* b) {
    return std::make_tuple(a->c, a->record.key()) < std::make_tuple(b->c, b->record.key());
  });
  double total = 0.0;
  for (const auto* r : held) {
    HoldoutRow row;
    row.id = r->record.key();
    row.n = r->n;
    row.d = r->d;
    row.c = r->c;
    row.observed = r->record.loss.value();
    const double lp = log_predict_loss(settings.form, out.params, r->n, r->d);
    row.predicted = std::exp(lp);
    row.abs_log_error = std::abs(lp - std::log(row.observed));
    out.max_abs_log_error = std::max(out.max_abs_log_error, row.abs_log_error);
    total += row.abs_log_error;
    out.holdout.push_back(std::move(row));
  }
  out.mean_abs_log_error = total / static_cast<double>(out.holdout.size());
  return out;
}

}  // namespace lawlab
