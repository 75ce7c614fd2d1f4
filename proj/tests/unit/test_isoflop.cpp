#include <cmath>
#include <map>
#include <random>

#include "doctest.h"
#include "lawlab/error.hpp"
#include "lawlab/isoflop.hpp"
#include "support.hpp"

using namespace lawlab;

namespace {

ComputeAnnotatedDataset six_nd(const Dataset& ds) {
  return annotate_compute(ds, CountingPolicy{true, true, FlopMethod::six_nd}, {});
}

std::vector<ProfilePoint> parabola(double n0, double a, double half_width, int count) {
  std::vector<ProfilePoint> out;
  for (int i = 0; i < count; ++i) {
    const double u = -half_width + 2 * half_width * i / (count - 1);
    out.push_back({n0 * std::exp(u), 2.0 + a * u * u, "p" + std::to_string(i)});
  }
  return out;
}

}  // namespace

TEST_CASE("interpolation in log-log space") {
  const std::vector<CurvePoint> two = {{std::exp(1.0), std::exp(2.0)}, {std::exp(3.0), std::exp(4.0)}};
  CHECK(interpolate_at_flops(two, std::exp(2.0)) == doctest::Approx(std::exp(3.0)).epsilon(1e-14));
  CHECK(interpolate_at_flops(two, std::exp(1.0)) == std::exp(2.0));
  CHECK(interpolate_at_flops(two, std::exp(3.0)) == std::exp(4.0));
  CHECK_THROWS_AS(interpolate_at_flops(two, 1.0), OutOfRange);
  CHECK_THROWS_AS(interpolate_at_flops(two, 100.0), OutOfRange);
  CHECK_THROWS_AS(interpolate_at_flops({{1.0, 2.0}}, 1.0), DomainError);
  CHECK_THROWS_AS(interpolate_at_flops({{2.0, 2.0}, {1.0, 1.0}}, 1.5), DomainError);
}

TEST_CASE("interpolation of a power-law curve is exact up to rounding") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const double a = 10 + 100 * u(rng), k = 0.05 + 0.3 * u(rng);
    std::vector<CurvePoint> curve;
    double c = 1e15 * (1 + u(rng));
    for (int i = 0; i < 12; ++i) {
      curve.push_back({c, a * std::pow(c, -k)});
      c *= 1.5 + 3 * u(rng);
    }
    for (int q = 0; q < 20; ++q) {
      const double target = std::exp(std::log(curve.front().c) +
                                     u(rng) * (std::log(curve.back().c) - std::log(curve.front().c)));
      const double got = interpolate_at_flops(curve, target);
      CHECK(std::abs(got / (a * std::pow(target, -k)) - 1.0) < 1e-6);
      // stays between the bracketing knots of a decreasing curve
      for (std::size_t i = 0; i + 1 < curve.size(); ++i)
        if (curve[i].c <= target && target <= curve[i + 1].c) {
          CHECK(got <= curve[i].loss);
          CHECK(got >= curve[i + 1].loss);
        }
    }
  }
}

TEST_CASE("parabola vertex") {
  const IsoflopProfile p = isoflop_profile(parabola(3.7e8, 0.05, 1.5, 9));
  CHECK(std::abs(p.n_star / 3.7e8 - 1.0) < 1e-9);
  CHECK(p.a > 0);
  CHECK(p.loss_star == doctest::Approx(2.0).epsilon(1e-12));

  std::vector<ProfilePoint> falling;
  for (int i = 0; i < 6; ++i) falling.push_back({1e8 * (i + 1), 3.0 - 0.1 * i, "f"});
  CHECK_THROWS_AS(isoflop_profile(falling), NoInteriorMinimum);
  CHECK_THROWS_AS(isoflop_profile(parabola(1e9, -0.05, 1.0, 7)), NoInteriorMinimum);
  // vertex beyond the sampled sizes
  auto shifted = parabola(1e9, 0.05, 1.0, 7);
  for (auto& q : shifted) q.n *= 20.0;
  for (auto& q : shifted) q.loss = 2.0 + 0.05 * std::pow(std::log(q.n / 1e8), 2);
  CHECK_THROWS_AS(isoflop_profile(shifted), NoInteriorMinimum);
  CHECK_THROWS_AS(isoflop_profile({{1e8, 3, "a"}, {1e8, 2.9, "b"}, {2e8, 2.8, "c"}}), DomainError);
}

TEST_CASE("parabola vertex scales with n") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    std::vector<ProfilePoint> pts;
    for (int i = 0; i < 7; ++i) {
      const double x = -1.0 + 2.0 * i / 6.0 + 0.05 * u(rng);
      pts.push_back({1e9 * std::exp(x), 2.5 + 0.1 * (x - 0.2) * (x - 0.2) + 0.002 * u(rng), "p"});
    }
    const double base = isoflop_profile(pts).n_star;
    for (double k : {10.0, 1e-3, 7.5}) {
      auto scaled = pts;
      for (auto& q : scaled) q.n *= k;
      CHECK(std::abs(isoflop_profile(scaled).n_star / (k * base) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("parabola on a law at fixed compute lands near the closed-form optimum") {
  const ChinchillaParams p{std::log(1.7), std::log(400.0), std::log(900.0), 0.34, 0.28};
  for (double c : {1e19, 1e21, 1e23}) {
    const Allocation opt = optimal_allocation(p, c);
    std::vector<ProfilePoint> pts;
    for (int i = 0; i < 9; ++i) {
      const double n = opt.n * std::exp(-1.2 + 2.4 * i / 8.0);
      pts.push_back({n, predict_loss(LawForm::chinchilla, p.to_vector(), n, c / (6 * n)), "q"});
    }
    CHECK(std::abs(isoflop_profile(pts).n_star / opt.n - 1.0) < 0.02);
  }
}

TEST_CASE("ratio regression") {
  std::vector<std::pair<double, double>> s;
  for (double c : {1e18, 1e19, 1e20, 1e21, 1e22}) s.emplace_back(c, 2.0 * std::sqrt(c));
  const RatioFit f = fit_ratio_law(s);
  CHECK(f.params.exp_a == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.params.log_n0 == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  CHECK(f.samples == 5);
  CHECK(f.se_exp_a < 1e-10);
  // ratio_predict at the fitted budgets gives the inputs back
  for (const auto& [c, n] : s) CHECK(ratio_predict(f.params, c).n == doctest::Approx(n).epsilon(1e-10));

  CHECK_THROWS_AS(fit_ratio_law({{1e20, 1e9}, {1e20, 1e9}}), Degenerate);
  CHECK_THROWS_AS(fit_ratio_law({{1e20, 1e9}}), Degenerate);
  CHECK(std::isnan(fit_ratio_law({{1e20, 1e9}, {1e21, 3e9}}).se_exp_a));

  // residuals are orthogonal to [1, ln c]
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z(0.0, 0.1);
  std::vector<std::pair<double, double>> noisy;
  for (int i = 0; i < 12; ++i) {
    const double c = std::pow(10.0, 17 + 0.5 * i);
    noisy.emplace_back(c, 0.3 * std::pow(c, 0.48) * std::exp(z(rng)));
  }
  const RatioFit g = fit_ratio_law(noisy);
  double s0 = 0, s1 = 0;
  for (const auto& [c, n] : noisy) {
    const double r = std::log(n) - g.params.log_n0 - g.params.exp_a * std::log(c);
    s0 += r;
    s1 += r * std::log(c);
  }
  CHECK(std::abs(s0) < 1e-8);
  CHECK(std::abs(s1) < 1e-8 * 40);
  CHECK(g.se_exp_a > 0);
}

TEST_CASE("final checkpoints only meet budgets at their own compute") {
  Dataset ds = test_support::csv(std::string(test_support::kHeader) +
                                 "a,100,,1000,1,1,,3.0,x\n"
                                 "b,200,,1000,1,1,,2.9,x\n"
                                 "c,400,,500,1,1,,2.95,x\n");
  auto bins = build_isoflop_bins(six_nd(ds), BudgetSpec::list({6e5, 1.0e6, 1.2e6}));
  REQUIRE(bins.size() == 3);
  std::map<double, std::vector<std::string>> by_c;
  for (const auto& b : bins)
    for (const auto& p : b.points) by_c[b.c].push_back(p.run_id);
  CHECK(by_c[6e5] == std::vector<std::string>{"a"});
  CHECK(by_c[1.2e6] == std::vector<std::string>{"b", "c"});
  CHECK(by_c[1.0e6].empty());
}

TEST_CASE("bins list every contributing run") {
  const Vector theta = (Vector(5) << 0.5, 6.0, 7.0, 0.3, 0.3).finished();
  Dataset ds = synthetic_learning_curves(LawForm::chinchilla, theta, logspace(1e7, 1e9, 8), 1.0, 400.0, 20);
  const ComputeAnnotatedDataset annotated = six_nd(ds);
  const auto budgets = logspace(1e16, 1e21, 10);
  const auto bins = build_isoflop_bins(annotated, BudgetSpec::list(budgets));
  REQUIRE(bins.size() == 10);

  // brute-force hull membership per run
  std::map<std::string, std::pair<double, double>> hull;
  for (const auto& r : annotated.records) {
    auto [it, fresh] = hull.try_emplace(r.record.run_id, r.c, r.c);
    it->second.first = std::min(it->second.first, r.c);
    it->second.second = std::max(it->second.second, r.c);
  }
  std::size_t expected = 0, got = 0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    std::vector<std::string> members;
    for (const auto& [id, h] : hull)
      if (h.first <= bins[k].c && bins[k].c <= h.second) members.push_back(id);
    std::vector<std::string> ids;
    for (const auto& p : bins[k].points) ids.push_back(p.run_id);
    std::sort(ids.begin(), ids.end());
    CHECK(ids == members);
    expected += members.size();
    got += bins[k].points.size();
  }
  CHECK(got == expected);
  CHECK(got > 0);

  // automatic budgets sit between the 10th and 90th percentile of compute
  const auto autob = build_isoflop_bins(annotated, BudgetSpec::automatic(5));
  REQUIRE(autob.size() == 5);
  std::vector<double> cs;
  for (const auto& r : annotated.records) cs.push_back(r.c);
  std::sort(cs.begin(), cs.end());
  // linearly interpolated order statistics; budgets are log-spaced between them
  auto pct = [&](double q) {
    const double h = q * static_cast<double>(cs.size() - 1);
    const auto i = static_cast<std::size_t>(h);
    return i + 1 < cs.size() ? cs[i] + (h - static_cast<double>(i)) * (cs[i + 1] - cs[i]) : cs.back();
  };
  CHECK(autob.front().c == doctest::Approx(pct(0.1)).epsilon(1e-12));
  CHECK(autob.back().c == doctest::Approx(pct(0.9)).epsilon(1e-12));
  CHECK(autob[2].c == doctest::Approx(std::sqrt(pct(0.1) * pct(0.9))).epsilon(1e-12));
  for (std::size_t k = 1; k < autob.size(); ++k) CHECK(autob[k].c > autob[k - 1].c);
}

TEST_CASE("equal exponents give a square-root ratio law") {
  // optimum D/N of 20 at every budget, sizes wide enough to bracket it
  const double alpha = 0.3, a = 400.0, b = a * std::pow(20.0, alpha);
  const Vector theta = (Vector(5) << std::log(1.7), std::log(a), std::log(b), alpha, alpha).finished();
  Dataset ds = synthetic_learning_curves(LawForm::chinchilla, theta, logspace(1e7, 3e10, 40), 0.5, 800.0, 40);
  const IsoflopAnalysis iso = run_isoflop(six_nd(ds), BudgetSpec::list(logspace(1e19, 1e22, 8)));
  REQUIRE(iso.ratio.has_value());
  CHECK(std::abs(iso.ratio->params.exp_a - 0.5) < 0.05);
  std::size_t kept = 0;
  for (const auto& bud : iso.budgets) {
    if (!bud.profile) continue;
    ++kept;
    const Allocation closed = optimal_allocation(ChinchillaParams::from_vector(theta), bud.c);
    CHECK(std::abs(bud.profile->n_star / closed.n - 1.0) < 0.05);
  }
  CHECK(kept >= 6);
}

TEST_CASE("budgets without an interior minimum are dropped with a reason") {
  const Vector theta = (Vector(5) << 0.5, 6.0, 7.0, 0.3, 0.3).finished();
  // all runs far too small for the budget: loss falls monotonically with n
  Dataset ds = synthetic_learning_curves(LawForm::chinchilla, theta, logspace(1e6, 4e6, 4), 1000.0, 1e5, 10);
  const IsoflopAnalysis iso = run_isoflop(six_nd(ds), BudgetSpec::list({1e18}));
  REQUIRE(iso.budgets.size() == 1);
  CHECK_FALSE(iso.budgets[0].profile);
  CHECK_FALSE(iso.budgets[0].dropped_reason.empty());
  CHECK_FALSE(iso.ratio);
  CHECK_FALSE(iso.ratio_error.empty());
}
