#include "lawlab/isoflop.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "lawlab/error.hpp"
#include "lawlab/fitters.hpp"

namespace lawlab {

double interpolate_at_flops(const std::vector<CurvePoint>& curve, double target_c) {
  if (curve.size() < 2) throw DomainError("interpolation needs at least two checkpoints");
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (!(curve[i].c > curve[i - 1].c)) throw DomainError("checkpoint compute must be strictly increasing");
  if (!(target_c >= curve.front().c && target_c <= curve.back().c))
    throw OutOfRange(fmt::format("compute {:g} is outside the run's range [{:g}, {:g}]", target_c,
                                 curve.front().c, curve.back().c));
  auto hi = std::lower_bound(curve.begin(), curve.end(), target_c,
                             [](const CurvePoint& p, double c) { return p.c < c; });
  if (hi->c == target_c) return hi->loss;
  auto lo = hi - 1;
  const double t = (std::log(target_c) - std::log(lo->c)) / (std::log(hi->c) - std::log(lo->c));
  return std::exp((1.0 - t) * std::log(lo->loss) + t * std::log(hi->loss));
}

IsoflopProfile isoflop_profile(const std::vector<ProfilePoint>& points) {
  std::set<double> distinct;
  for (const auto& p : points) {
    if (!(p.n > 0.0) || !std::isfinite(p.loss)) throw DomainError("profile points need positive n and finite loss");
    distinct.insert(p.n);
  }
  if (distinct.size() < 3) throw DomainError("a parabola needs at least three distinct model sizes");

  const auto m = static_cast<Eigen::Index>(points.size());
  double center = 0.0;
  for (const auto& p : points) center += std::log(p.n);
  center /= static_cast<double>(m);

  Eigen::MatrixXd design(m, 3);
  Eigen::VectorXd y(m);
  double umin = std::numeric_limits<double>::infinity(), umax = -umin;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double u = std::log(points[static_cast<std::size_t>(i)].n) - center;
    design(i, 0) = u * u;
    design(i, 1) = u;
    design(i, 2) = 1.0;
    y[i] = points[static_cast<std::size_t>(i)].loss;
    umin = std::min(umin, u);
    umax = std::max(umax, u);
  }
  const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(y);
  IsoflopProfile out;
  out.a = coef[0];
  out.b = coef[1];
  out.c0 = coef[2];
  out.center = center;
  if (!(out.a > 0.0)) throw NoInteriorMinimum("the fitted parabola has no minimum (curvature <= 0)");
  const double vertex = -out.b / (2.0 * out.a);
  if (vertex < umin || vertex > umax)
    throw NoInteriorMinimum("the parabola's minimum lies outside the sampled model sizes");
  out.n_star = std::exp(center + vertex);
  out.loss_star = out.c0 - out.b * out.b / (4.0 * out.a);
  return out;
}

RatioFit fit_ratio_law(const std::vector<std::pair<double, double>>& c_nstar) {
  if (c_nstar.size() < 2) throw Degenerate("the ratio regression needs at least two budgets");
  const double m = static_cast<double>(c_nstar.size());
  double xbar = 0.0, ybar = 0.0;
  for (const auto& [c, n] : c_nstar) {
    if (!(c > 0.0) || !(n > 0.0)) throw DomainError("ratio regression needs positive c and n");
    xbar += std::log(c);
    ybar += std::log(n);
  }
  xbar /= m;
  ybar /= m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [c, n] : c_nstar) {
    const double dx = std::log(c) - xbar;
    sxx += dx * dx;
    sxy += dx * (std::log(n) - ybar);
  }
  if (sxx == 0.0) throw Degenerate("every budget has the same compute");
  RatioFit out;
  out.samples = c_nstar.size();
  out.params.exp_a = sxy / sxx;
  out.params.log_n0 = ybar - out.params.exp_a * xbar;
  if (c_nstar.size() <= 2) {
    out.se_exp_a = out.se_log_n0 = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  double ssr = 0.0;
  for (const auto& [c, n] : c_nstar) {
    const double r = std::log(n) - (out.params.log_n0 + out.params.exp_a * std::log(c));
    ssr += r * r;
  }
  const double s2 = ssr / (m - 2.0);
  out.se_exp_a = std::sqrt(s2 / sxx);
  out.se_log_n0 = std::sqrt(s2 * (1.0 / m + xbar * xbar / sxx));
  return out;
}

void BudgetSpec::validate() const {
  if (is_auto()) {
    if (auto_count < 1) throw ConfigError("isoflop.budgets.auto must be at least 1");
    return;
  }
  for (std::size_t i = 0; i < explicit_budgets.size(); ++i) {
    if (!(explicit_budgets[i] > 0.0) || !std::isfinite(explicit_budgets[i]))
      throw ConfigError("isoflop.budgets: budgets must be positive");
    if (i > 0 && !(explicit_budgets[i] > explicit_budgets[i - 1]))
      throw ConfigError("isoflop.budgets: budgets must be strictly ascending");
  }
}

namespace {

struct RunCurve {
  std::string run_id;
  double n = 0.0;
  std::vector<CurvePoint> curve;
};

std::vector<RunCurve> group_runs(const ComputeAnnotatedDataset& ds) {
  std::map<std::string, RunCurve> runs;
  for (const auto& r : ds.records) {
    auto& run = runs[r.record.run_id];
    if (run.curve.empty()) {
      run.run_id = r.record.run_id;
      run.n = r.n;
    }
    run.curve.push_back({r.c, r.record.loss.value()});
  }
  std::vector<RunCurve> out;
  out.reserve(runs.size());
  for (auto& [id, run] : runs) {
    std::stable_sort(run.curve.begin(), run.curve.end(),
                     [](const CurvePoint& a, const CurvePoint& b) { return a.c < b.c; });
    // Checkpoints at identical compute keep the first occurrence.
    run.curve.erase(std::unique(run.curve.begin(), run.curve.end(),
                                [](const CurvePoint& a, const CurvePoint& b) { return a.c == b.c; }),
                    run.curve.end());
    out.push_back(std::move(run));
  }
  std::sort(out.begin(), out.end(),
            [](const RunCurve& a, const RunCurve& b) { return std::tie(a.n, a.run_id) < std::tie(b.n, b.run_id); });
  return out;
}

std::vector<double> resolve_budgets(const ComputeAnnotatedDataset& ds, const BudgetSpec& spec) {
  spec.validate();
  if (!spec.is_auto()) return spec.explicit_budgets;
  if (ds.empty()) return {};
  std::vector<double> cs;
  cs.reserve(ds.size());
  for (const auto& r : ds.records) cs.push_back(r.c);
  const double lo = std::log(percentile(cs, 10.0));
  const double hi = std::log(percentile(cs, 90.0));
  std::vector<double> out;
  if (spec.auto_count == 1) return {std::exp(0.5 * (lo + hi))};
  for (std::size_t i = 0; i < spec.auto_count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(spec.auto_count - 1);
    const double c = std::exp(lo + t * (hi - lo));
    if (out.empty() || c > out.back()) out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<IsoflopBin> build_isoflop_bins(const ComputeAnnotatedDataset& ds, const BudgetSpec& budgets) {
  const auto runs = group_runs(ds);
  std::vector<IsoflopBin> bins;
  for (const double c : resolve_budgets(ds, budgets)) {
    IsoflopBin bin;
    bin.c = c;
    for (const auto& run : runs) {
      if (run.curve.size() == 1) {
        if (run.curve.front().c == c) bin.points.push_back({run.n, run.curve.front().loss, run.run_id});
        continue;
      }
      if (c < run.curve.front().c || c > run.curve.back().c) continue;
      bin.points.push_back({run.n, interpolate_at_flops(run.curve, c), run.run_id});
    }
    bins.push_back(std::move(bin));
  }
  return bins;
}

IsoflopAnalysis run_isoflop(const ComputeAnnotatedDataset& ds, const BudgetSpec& budgets) {
  IsoflopAnalysis out;
  std::vector<std::pair<double, double>> kept;
  for (auto& bin : build_isoflop_bins(ds, budgets)) {
    BudgetOutcome o;
    o.c = bin.c;
    o.points = bin.points.size();
    try {
      o.profile = isoflop_profile(bin.points);
      kept.emplace_back(bin.c, o.profile->n_star);
    } catch (const Error& e) {
      o.dropped_reason = std::string(e.code()) + ": " + e.what();
    }
    out.budgets.push_back(std::move(o));
  }
  try {
    out.ratio = fit_ratio_law(kept);
  } catch (const Error& e) {
    out.ratio_error = std::string(e.code()) + ": " + e.what();
  }
  return out;
}

}  // namespace lawlab
