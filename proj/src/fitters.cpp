#include "lawlab/fitters.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "lawlab/error.hpp"
#include "lawlab/parallel.hpp"

namespace lawlab {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kInf = std::numeric_limits<double>::infinity();

double finite_or_inf(double v) { return std::isfinite(v) ? v : kInf; }

bool all_finite(const Vector& v) { return v.allFinite(); }

std::vector<std::size_t> axis_slots(const GridSpec& spec, LawForm form) {
  const auto& names = param_names(form);
  std::vector<std::size_t> slots;
  slots.reserve(spec.axes.size());
  for (const auto& axis : spec.axes) {
    auto it = std::find(names.begin(), names.end(), axis.param);
    slots.push_back(static_cast<std::size_t>(it - names.begin()));
  }
  return slots;
}

void require_enough_data(const FitProblem& problem) {
  if (problem.size() < problem.dimension())
    throw DomainError(fmt::format("{} observations cannot determine the {} parameters of the {} form",
                                  problem.size(), problem.dimension(), to_string(problem.form())));
}

ValueGradFn problem_function(const FitProblem& problem, const OptimizerSpec& spec) {
  if (spec.grad_mode == OptimizerSpec::GradMode::analytic) {
    return [&problem](const Vector& x, Vector* grad) {
      if (!grad) return objective_value(problem, x);
      return objective_value_and_grad(problem, x, *grad);
    };
  }
  const double h = spec.fd_step;
  return [&problem, h](const Vector& x, Vector* grad) {
    const double f = objective_value(problem, x);
    if (grad) {
      grad->resize(x.size());
      Vector xp = x;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double step = h * std::max(1.0, std::abs(x[i]));
        xp[i] = x[i] + step;
        const double fp = objective_value(problem, xp);
        xp[i] = x[i] - step;
        const double fm = objective_value(problem, xp);
        xp[i] = x[i];
        (*grad)[i] = (fp - fm) / (2.0 * step);
      }
    }
    return f;
  };
}

// Search direction memory for the two quasi-Newton variants.
class InverseHessian {
 public:
  InverseHessian(OptimizerSpec::Kind kind, std::size_t memory, Eigen::Index dim)
      : kind_(kind), memory_(memory), dim_(dim) {
    reset();
  }

  void reset() {
    s_.clear();
    y_.clear();
    dense_ = Eigen::MatrixXd::Identity(dim_, dim_);
    dense_scaled_ = false;
  }

  bool empty() const { return kind_ == OptimizerSpec::Kind::lbfgs ? s_.empty() : !dense_scaled_; }

  Vector direction(const Vector& g) const {
    if (kind_ == OptimizerSpec::Kind::bfgs) return -(dense_ * g);
    // two-loop recursion
    Vector q = g;
    const std::size_t m = s_.size();
    std::vector<double> a(m);
    for (std::size_t k = m; k-- > 0;) {
      a[k] = s_[k].dot(q) / y_[k].dot(s_[k]);
      q -= a[k] * y_[k];
    }
    if (m > 0) q *= s_.back().dot(y_.back()) / y_.back().squaredNorm();
    for (std::size_t k = 0; k < m; ++k) {
      const double b = y_[k].dot(q) / y_[k].dot(s_[k]);
      q += s_[k] * (a[k] - b);
    }
    return -q;
  }

  void update(const Vector& s, const Vector& y) {
    const double sy = s.dot(y);
    // Nonpositive curvature would break positive definiteness; skip the pair.
    if (!(sy > 1e-12 * s.norm() * y.norm())) return;
    if (kind_ == OptimizerSpec::Kind::lbfgs) {
      s_.push_back(s);
      y_.push_back(y);
      if (s_.size() > memory_) {
        s_.pop_front();
        y_.pop_front();
      }
      return;
    }
    if (!dense_scaled_) {
      dense_ *= sy / y.squaredNorm();
      dense_scaled_ = true;
    }
    const double rho = 1.0 / sy;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(dim_, dim_);
    const Eigen::MatrixXd left = eye - rho * s * y.transpose();
    dense_ = left * dense_ * left.transpose() + rho * s * s.transpose();
  }

 private:
  OptimizerSpec::Kind kind_;
  std::size_t memory_;
  Eigen::Index dim_;
  std::deque<Vector> s_, y_;
  Eigen::MatrixXd dense_;
  bool dense_scaled_ = false;
};

FitResult quasi_newton(const OptimizerSpec& spec, const ValueGradFn& fn, const Vector& init) {
  FitResult out;
  Vector x = init;
  Vector g;
  double f = fn(x, &g);
  if (!std::isfinite(f) || !all_finite(g)) throw NonFinite("objective or gradient is not finite at the initial point");
  out.init_objective = f;

  InverseHessian hess(spec.kind, spec.memory, x.size());
  const double min_step = spec.tol * 1e-3;
  out.termination_reason = "max_iter";
  std::size_t iter = 0;
  for (; iter < spec.max_iter; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() == 0.0) {
      out.converged = true;
      out.termination_reason = "zero_gradient";
      break;
    }
    Vector p = hess.direction(g);
    double slope = g.dot(p);
    if (!(slope < 0.0) || !all_finite(p)) {
      hess.reset();
      p = -g;
      slope = g.dot(p);
    }
    const double pnorm = p.lpNorm<Eigen::Infinity>();
    double t = hess.empty() ? std::min(1.0, 1.0 / pnorm) : 1.0;

    Vector x_new, g_new;
    double f_new = kInf;
    bool accepted = false;
    while (t * pnorm >= min_step) {
      x_new = x + t * p;
      f_new = fn(x_new, &g_new);
      if (std::isfinite(f_new) && all_finite(g_new) && f_new <= f + kArmijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // No decrease for any step above tol/1000: both stopping quantities are
      // already below tol.
      out.converged = true;
      out.termination_reason = "no_decrease_above_tol";
      break;
    }
    const Vector s = x_new - x;
    const Vector y = g_new - g;
    const double decrease = f - f_new;
    hess.update(s, y);
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
    if (s.lpNorm<Eigen::Infinity>() < spec.tol && decrease < spec.tol) {
      ++iter;
      out.converged = true;
      out.termination_reason = "step_and_decrease_below_tol";
      break;
    }
  }
  out.params = x;
  out.objective = f;
  out.iterations = iter;
  return out;
}

Eigen::MatrixXd fd_jacobian(const FitProblem& problem, const Vector& x, double h) {
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(problem.size()), x.size());
  Vector xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = h * std::max(1.0, std::abs(x[j]));
    xp[j] = x[j] + step;
    const Vector rp = residual_vector(problem, xp);
    xp[j] = x[j] - step;
    const Vector rm = residual_vector(problem, xp);
    xp[j] = x[j];
    jac.col(j) = (rp - rm) / (2.0 * step);
  }
  return jac;
}

FitResult levenberg_marquardt(const OptimizerSpec& spec, const FitProblem& problem, const Vector& init) {
  FitResult out;
  Vector x = init;
  Vector r = residual_vector(problem, x);
  const double m = static_cast<double>(problem.size());
  double f = r.squaredNorm() / m;
  auto jacobian = [&](const Vector& at) {
    return spec.grad_mode == OptimizerSpec::GradMode::analytic ? residual_jacobian(problem, at)
                                                               : fd_jacobian(problem, at, spec.fd_step);
  };
  Eigen::MatrixXd jac = jacobian(x);
  if (!std::isfinite(f) || !jac.allFinite()) throw NonFinite("residuals or Jacobian not finite at the initial point");
  out.init_objective = f;

  double lambda = 1e-3;
  out.termination_reason = "max_iter";
  std::size_t iter = 0;
  for (; iter < spec.max_iter; ++iter) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Vector jtr = jac.transpose() * r;
    if (jtr.lpNorm<Eigen::Infinity>() == 0.0) {
      out.converged = true;
      out.termination_reason = "zero_gradient";
      break;
    }
    const double diag_floor = std::max(1e-12 * jtj.diagonal().maxCoeff(), 1e-300);
    bool accepted = false;
    Vector step;
    double f_new = kInf;
    Vector r_new;
    while (lambda < 1e20) {
      Eigen::MatrixXd lhs = jtj;
      for (Eigen::Index k = 0; k < lhs.rows(); ++k) lhs(k, k) += lambda * std::max(jtj(k, k), diag_floor);
      step = lhs.ldlt().solve(-jtr);
      if (all_finite(step)) {
        r_new = residual_vector(problem, x + step);
        f_new = r_new.squaredNorm() / m;
        if (std::isfinite(f_new) && f_new < f) {
          accepted = true;
          lambda = std::max(lambda * 0.1, 1e-15);
          break;
        }
      }
      if (all_finite(step) && step.lpNorm<Eigen::Infinity>() < spec.tol * 1e-3) break;
      lambda *= 10.0;
    }
    if (!accepted) {
      out.converged = true;
      out.termination_reason = "no_decrease_above_tol";
      break;
    }
    const double decrease = f - f_new;
    x += step;
    r = std::move(r_new);
    f = f_new;
    jac = jacobian(x);
    if (step.lpNorm<Eigen::Infinity>() < spec.tol && decrease < spec.tol) {
      ++iter;
      out.converged = true;
      out.termination_reason = "step_and_decrease_below_tol";
      break;
    }
  }
  out.params = x;
  out.objective = objective_value(problem, x);
  out.iterations = iter;
  return out;
}

struct GridOptimum {
  Vector params;
  double value = kInf;
  std::size_t evaluated = 0;
};

GridOptimum dense_grid_argmin(const FitProblem& problem, const GridSpec& base, std::size_t multiplier,
                              unsigned threads) {
  const GridSpec dense = base.densified(multiplier);
  dense.validate(problem.form());
  const std::size_t total = dense.size();
  const std::size_t chunks = std::min<std::size_t>(total, 512);
  std::vector<std::pair<double, std::size_t>> best(chunks, {kInf, total});
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t lo = total * c / chunks, hi = total * (c + 1) / chunks;
    auto& slot = best[c];
    for (std::size_t i = lo; i < hi; ++i) {
      const double v = finite_or_inf(objective_value(problem, grid_point(dense, problem.form(), i)));
      if (v < slot.first) slot = {v, i};
    }
  });
  auto winner = std::pair<double, std::size_t>{kInf, total};
  for (const auto& b : best)
    if (b < winner) winner = b;
  GridOptimum out;
  out.evaluated = total;
  out.value = winner.first;
  out.params = grid_point(dense, problem.form(), winner.second == total ? 0 : winner.second);
  return out;
}

FitResult from_grid(const GridOptimum& opt, const FitProblem& problem, const Vector& init) {
  FitResult out;
  out.init_objective = objective_value(problem, init);
  if (!std::isfinite(out.init_objective)) throw NonFinite("objective is not finite at the initial point");
  if (opt.value < out.init_objective) {
    out.params = opt.params;
  } else {
    out.params = init;
  }
  out.objective = objective_value(problem, out.params);
  out.iterations = opt.evaluated;
  out.converged = true;
  out.termination_reason = "grid_exhausted";
  return out;
}

void check_pairing(const OptimizerSpec& optimizer, const FitProblem& problem) {
  if (optimizer.kind == OptimizerSpec::Kind::nls && !problem.objective().is_quadratic())
    throw ObjectiveMismatch("optimizer.kind: nls needs an mse objective, got " +
                            to_string(problem.objective().kind));
}

}  // namespace

std::vector<double> GridAxis::points() const {
  std::vector<double> out;
  if (count == 1) {
    out.push_back(0.5 * (lo + hi));
    return out;
  }
  out.reserve(count);
  const double span = hi - lo;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(i + 1 == count ? hi : lo + span * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return out;
}

std::size_t GridSpec::size() const {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.count;
  return n;
}

GridSpec GridSpec::densified(std::size_t multiplier) const {
  GridSpec out = *this;
  for (auto& a : out.axes) a.count *= multiplier;
  return out;
}

void GridSpec::validate(LawForm form) const {
  const auto& names = param_names(form);
  std::set<std::string> seen;
  for (const auto& a : axes) {
    if (std::find(names.begin(), names.end(), a.param) == names.end())
      throw ConfigError("init.grid: '" + a.param + "' is not a parameter of the " + to_string(form) + " form");
    if (!seen.insert(a.param).second) throw ConfigError("init.grid: duplicate axis '" + a.param + "'");
    if (a.count < 1) throw ConfigError("init.grid: axis '" + a.param + "' needs at least one point");
    if (!(a.lo <= a.hi)) throw ConfigError("init.grid: axis '" + a.param + "' has lo > hi");
  }
  if (seen.size() != names.size())
    throw ConfigError("init.grid: every parameter of the " + to_string(form) + " form needs an axis");
}

GridSpec GridSpec::default_for(LawForm form) {
  switch (form) {
    case LawForm::chinchilla:
      return {{{"log_a", 0.0, 25.0, 6},
               {"log_b", 0.0, 25.0, 6},
               {"log_e", -1.0, 1.5, 5},
               {"alpha", 0.1, 1.0, 5},
               {"beta", 0.1, 1.0, 5}}};
    case LawForm::tied:
      return {{{"log_a", 0.0, 25.0, 6}, {"log_b", 0.0, 25.0, 6}, {"log_e", -1.0, 1.5, 5}, {"alpha", 0.1, 1.0, 5}}};
    case LawForm::kaplan:
      return {{{"log_n_c", 0.0, 35.0, 6},
               {"log_d_c", 0.0, 35.0, 6},
               {"alpha_n", 0.05, 1.0, 5},
               {"alpha_d", 0.05, 1.0, 5}}};
  }
  return {};
}

Vector grid_point(const GridSpec& spec, LawForm form, std::size_t index) {
  const auto slots = axis_slots(spec, form);
  Vector v(static_cast<Eigen::Index>(param_count(form)));
  for (std::size_t k = spec.axes.size(); k-- > 0;) {
    const auto& axis = spec.axes[k];
    const std::size_t i = index % axis.count;
    index /= axis.count;
    double value;
    if (axis.count == 1) {
      value = 0.5 * (axis.lo + axis.hi);
    } else if (i + 1 == axis.count) {
      value = axis.hi;
    } else {
      value = axis.lo + (axis.hi - axis.lo) * static_cast<double>(i) / static_cast<double>(axis.count - 1);
    }
    v[static_cast<Eigen::Index>(slots[k])] = value;
  }
  return v;
}

std::vector<Vector> generate_grid(const GridSpec& spec, LawForm form) {
  spec.validate(form);
  std::vector<Vector> out;
  out.reserve(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i) out.push_back(grid_point(spec, form, i));
  return out;
}

std::string to_string(InitStrategy::Kind kind) {
  switch (kind) {
    case InitStrategy::Kind::full_grid: return "full_grid";
    case InitStrategy::Kind::best_of_grid: return "best_of_grid";
    case InitStrategy::Kind::top_k_of_grid: return "top_k_of_grid";
    case InitStrategy::Kind::random_k: return "random_k";
    case InitStrategy::Kind::fixed: return "fixed";
  }
  return {};
}

InitStrategy::Kind parse_init_kind(std::string_view name) {
  if (name == "full_grid") return InitStrategy::Kind::full_grid;
  if (name == "best_of_grid") return InitStrategy::Kind::best_of_grid;
  if (name == "top_k_of_grid") return InitStrategy::Kind::top_k_of_grid;
  if (name == "random_k") return InitStrategy::Kind::random_k;
  if (name == "fixed") return InitStrategy::Kind::fixed;
  throw ConfigError("init.strategy: unknown strategy '" + std::string(name) + "'");
}

std::string InitStrategy::describe() const {
  std::vector<std::string> counts;
  for (const auto& a : grid.axes) counts.push_back(fmt::format("{}:{}", a.param, a.count));
  const std::string g = fmt::format("grid[{}]={}", fmt::join(counts, ","), grid.size());
  switch (kind) {
    case Kind::full_grid: return "full_grid " + g;
    case Kind::best_of_grid: return "best_of_grid " + g;
    case Kind::top_k_of_grid: return fmt::format("top_k_of_grid k={} {}", k, g);
    case Kind::random_k: return fmt::format("random_k k={} seed={} {}", k, seed, g);
    case Kind::fixed: return "fixed" + (preset_name.empty() ? std::string{} : " preset=" + preset_name);
  }
  return {};
}

void OptimizerSpec::validate() const {
  if (kind == Kind::lbfgs && memory < 1) throw ConfigError("optimizer.memory must be at least 1");
  if (!(tol > 0.0)) throw ConfigError("optimizer.tol must be positive");
  if (max_iter < 1) throw ConfigError("optimizer.max_iter must be at least 1");
  if (grad_mode == GradMode::finite_diff && !(fd_step > 0.0))
    throw ConfigError("optimizer.grad_mode: finite-difference step must be positive");
  if (kind == Kind::grid && density_multiplier < 1)
    throw ConfigError("optimizer.density_multiplier must be at least 1");
}

std::string OptimizerSpec::describe() const {
  const std::string grad =
      grad_mode == GradMode::analytic ? "analytic" : fmt::format("finite_diff(h={})", fd_step);
  switch (kind) {
    case Kind::lbfgs:
      return fmt::format("lbfgs memory={} tol={} max_iter={} grad={}", memory, tol, max_iter, grad);
    case Kind::bfgs: return fmt::format("bfgs tol={} max_iter={} grad={}", tol, max_iter, grad);
    case Kind::nls: return fmt::format("nls (levenberg-marquardt) tol={} max_iter={} jacobian={}", tol, max_iter, grad);
    case Kind::grid: return fmt::format("grid density_multiplier={}", density_multiplier);
  }
  return {};
}

std::string to_string(OptimizerSpec::Kind kind) {
  switch (kind) {
    case OptimizerSpec::Kind::lbfgs: return "lbfgs";
    case OptimizerSpec::Kind::bfgs: return "bfgs";
    case OptimizerSpec::Kind::nls: return "nls";
    case OptimizerSpec::Kind::grid: return "grid";
  }
  return {};
}

OptimizerSpec::Kind parse_optimizer_kind(std::string_view name) {
  if (name == "lbfgs") return OptimizerSpec::Kind::lbfgs;
  if (name == "bfgs") return OptimizerSpec::Kind::bfgs;
  if (name == "nls") return OptimizerSpec::Kind::nls;
  if (name == "grid") return OptimizerSpec::Kind::grid;
  throw ConfigError("optimizer.kind: unknown optimizer '" + std::string(name) + "'");
}

SeededIndexSampler::SeededIndexSampler(std::uint64_t seed) : engine_(seed) {}

std::uint64_t SeededIndexSampler::below(std::uint64_t bound) {
  if (bound == 0) throw DomainError("empty sampling range");
  const std::uint64_t threshold = (0 - bound) % bound;  // 2^64 mod bound
  for (;;) {
    const std::uint64_t x = engine_();
    if (x >= threshold) return x % bound;
  }
}

std::vector<std::pair<std::size_t, Vector>> select_inits(const InitStrategy& strategy, const FitProblem& problem,
                                                          unsigned threads) {
  std::vector<std::pair<std::size_t, Vector>> out;
  if (strategy.kind == InitStrategy::Kind::fixed) {
    if (static_cast<std::size_t>(strategy.fixed_params.size()) != problem.dimension())
      throw ConfigError(fmt::format("init: fixed parameters have {} entries, the {} form needs {}",
                                    strategy.fixed_params.size(), to_string(problem.form()), problem.dimension()));
    out.emplace_back(0, strategy.fixed_params);
    return out;
  }
  strategy.grid.validate(problem.form());
  const std::size_t total = strategy.grid.size();
  const LawForm form = problem.form();

  switch (strategy.kind) {
    case InitStrategy::Kind::full_grid:
      for (std::size_t i = 0; i < total; ++i) out.emplace_back(i, grid_point(strategy.grid, form, i));
      return out;
    case InitStrategy::Kind::random_k: {
      if (strategy.k < 1) throw ConfigError("init.k must be at least 1");
      if (strategy.k > total)
        throw ConfigError(fmt::format("init.k = {} exceeds the grid size {}", strategy.k, total));
      std::vector<std::size_t> idx(total);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      SeededIndexSampler sampler(strategy.seed);
      for (std::size_t i = 0; i < strategy.k; ++i) {
        const auto j = i + static_cast<std::size_t>(sampler.below(total - i));
        std::swap(idx[i], idx[j]);
        out.emplace_back(idx[i], grid_point(strategy.grid, form, idx[i]));
      }
      return out;
    }
    case InitStrategy::Kind::best_of_grid:
    case InitStrategy::Kind::top_k_of_grid: {
      const std::size_t k = strategy.kind == InitStrategy::Kind::best_of_grid ? 1 : strategy.k;
      if (k < 1) throw ConfigError("init.k must be at least 1");
      if (k > total) throw ConfigError(fmt::format("init.k = {} exceeds the grid size {}", k, total));
      std::vector<double> values(total);
      parallel_for(total, threads, [&](std::size_t i) {
        values[i] = finite_or_inf(objective_value(problem, grid_point(strategy.grid, form, i)));
      });
      std::vector<std::size_t> order(total);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t a, std::size_t b) {
                          return values[a] < values[b] || (values[a] == values[b] && a < b);
                        });
      for (std::size_t i = 0; i < k; ++i) out.emplace_back(order[i], grid_point(strategy.grid, form, order[i]));
      return out;
    }
    case InitStrategy::Kind::fixed: break;
  }
  return out;
}

FitResult minimize_smooth(const OptimizerSpec& optimizer, const ValueGradFn& fn, const Vector& init) {
  optimizer.validate();
  if (optimizer.kind != OptimizerSpec::Kind::lbfgs && optimizer.kind != OptimizerSpec::Kind::bfgs)
    throw ConfigError("minimize_smooth supports lbfgs and bfgs only");
  return quasi_newton(optimizer, fn, init);
}

double rosenbrock(const Vector& x, Vector* grad) {
  const double a = 1.0 - x[0];
  const double b = x[1] - x[0] * x[0];
  if (grad) {
    grad->resize(2);
    (*grad)[0] = -2.0 * a - 400.0 * x[0] * b;
    (*grad)[1] = 200.0 * b;
  }
  return a * a + 100.0 * b * b;
}

FitResult minimize(const OptimizerSpec& optimizer, const FitProblem& problem, const Vector& init,
                   const GridSpec* base_grid, unsigned threads) {
  optimizer.validate();
  check_pairing(optimizer, problem);
  require_enough_data(problem);
  if (static_cast<std::size_t>(init.size()) != problem.dimension())
    throw DomainError(fmt::format("initial vector has {} entries, the {} form needs {}", init.size(),
                                  to_string(problem.form()), problem.dimension()));

  FitResult out;
  switch (optimizer.kind) {
    case OptimizerSpec::Kind::lbfgs:
    case OptimizerSpec::Kind::bfgs: {
      {
        Vector g;
        const double f = objective_value_and_grad(problem, init, g);
        if (!std::isfinite(f) || !all_finite(g))
          throw NonFinite("objective or gradient is not finite at the initial point");
      }
      out = quasi_newton(optimizer, problem_function(problem, optimizer), init);
      out.objective = objective_value(problem, out.params);
      break;
    }
    case OptimizerSpec::Kind::nls: out = levenberg_marquardt(optimizer, problem, init); break;
    case OptimizerSpec::Kind::grid: {
      const GridSpec base = base_grid ? *base_grid : GridSpec::default_for(problem.form());
      out = from_grid(dense_grid_argmin(problem, base, optimizer.density_multiplier, threads), problem, init);
      break;
    }
  }
  return out;
}

MultistartReport fit(const FitProblem& problem, const InitStrategy& strategy, const OptimizerSpec& optimizer,
                     unsigned threads) {
  optimizer.validate();
  check_pairing(optimizer, problem);
  require_enough_data(problem);
  auto inits = select_inits(strategy, problem, threads);
  if (inits.empty()) throw EmptyInit("the initialization strategy produced no starting points");

  MultistartReport report;
  report.strategy = strategy;
  report.optimizer = optimizer;
  report.results.resize(inits.size());

  std::optional<GridOptimum> grid_cache;
  if (optimizer.kind == OptimizerSpec::Kind::grid) {
    const GridSpec base = strategy.grid.axes.empty() ? GridSpec::default_for(problem.form()) : strategy.grid;
    grid_cache = dense_grid_argmin(problem, base, optimizer.density_multiplier, threads);
  }

  parallel_for(inits.size(), threads, [&](std::size_t i) {
    const auto& [index, init] = inits[i];
    FitResult r;
    try {
      r = grid_cache ? from_grid(*grid_cache, problem, init) : minimize(optimizer, problem, init, nullptr, 1);
    } catch (const NonFinite&) {
      r.params = init;
      r.objective = objective_value(problem, init);
      r.init_objective = r.objective;
      r.converged = false;
      r.termination_reason = "non_finite_at_init";
    }
    r.init_index = index;
    report.results[i] = std::move(r);
  });

  auto better = [&](std::size_t a, std::size_t b) {
    const double fa = finite_or_inf(report.results[a].objective);
    const double fb = finite_or_inf(report.results[b].objective);
    return fa < fb || (fa == fb && report.results[a].init_index < report.results[b].init_index);
  };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < report.results.size(); ++i) {
    if (!report.results[i].converged) continue;
    if (!best || better(i, *best)) best = i;
  }
  if (!best) {
    best = 0;
    for (std::size_t i = 1; i < report.results.size(); ++i)
      if (better(i, *best)) best = i;
  }
  report.best_index = *best;
  return report;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

BootstrapReport bootstrap_fit(const FitProblem& problem, const InitStrategy& strategy, const OptimizerSpec& optimizer,
                              std::size_t b, std::uint64_t seed, unsigned threads) {
  if (b < 2) throw ConfigError("validation.bootstrap.b must be at least 2");
  constexpr std::size_t kMaxRedraws = 100;
  const auto& obs = problem.observations();
  const std::size_t m = obs.size();

  BootstrapReport out;
  out.resamples = b;
  out.seed = seed;
  out.point = fit(problem, strategy, optimizer, threads).best().params;

  SeededIndexSampler sampler(seed);
  std::vector<std::vector<Observation>> draws(b);
  for (std::size_t k = 0; k < b; ++k) {
    std::size_t attempts = 0;
    for (;;) {
      std::vector<Observation> sample;
      sample.reserve(m);
      std::set<std::pair<double, double>> distinct;
      for (std::size_t i = 0; i < m; ++i) {
        const auto& o = obs[static_cast<std::size_t>(sampler.below(m))];
        sample.push_back(o);
        distinct.emplace(o.n, o.d);
      }
      if (distinct.size() >= problem.dimension()) {
        draws[k] = std::move(sample);
        break;
      }
      ++out.redraws;
      if (++attempts > kMaxRedraws)
        throw DegenerateResamples(fmt::format("resample {} stayed degenerate after {} redraws", k, kMaxRedraws));
    }
  }

  out.samples.resize(b);
  parallel_for(b, threads, [&](std::size_t k) {
    FitProblem sub(draws[k], problem.form(), problem.objective());
    out.samples[k] = fit(sub, strategy, optimizer, 1).best().params;
  });

  const auto dim = static_cast<Eigen::Index>(problem.dimension());
  out.lower.resize(dim);
  out.upper.resize(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    std::vector<double> column;
    column.reserve(b);
    for (const auto& s : out.samples) column.push_back(s[j]);
    out.lower[j] = percentile(column, 2.5);
    out.upper[j] = percentile(column, 97.5);
  }
  return out;
}

}  // namespace lawlab
