#include "lawlab/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/format.h>

#include "lawlab/error.hpp"
#include "lawlab/format.hpp"

namespace lawlab {

void ObjectiveSpec::validate() const {
  if (has_delta() && !(delta > 0.0)) throw ConfigError("objective.delta must be positive");
  if (kind == Kind::log_huber && space != ResidualSpace::log)
    throw ConfigError("objective.space: log_huber is defined on log-space residuals");
}

std::string ObjectiveSpec::describe() const {
  std::string out = to_string(kind);
  if (has_delta()) out += ", delta=" + format_sci(delta);
  if (kind != Kind::log_huber) out += ", space=" + to_string(space);
  return out;
}

std::string to_string(ObjectiveSpec::Kind kind) {
  switch (kind) {
    case ObjectiveSpec::Kind::log_huber: return "log_huber";
    case ObjectiveSpec::Kind::huber: return "huber";
    case ObjectiveSpec::Kind::mse: return "mse";
    case ObjectiveSpec::Kind::mae: return "mae";
  }
  return {};
}

ObjectiveSpec::Kind parse_objective_kind(std::string_view name) {
  if (name == "log_huber") return ObjectiveSpec::Kind::log_huber;
  if (name == "huber") return ObjectiveSpec::Kind::huber;
  if (name == "mse") return ObjectiveSpec::Kind::mse;
  if (name == "mae") return ObjectiveSpec::Kind::mae;
  throw ConfigError("unknown objective kind '" + std::string(name) + "'");
}

std::string to_string(ResidualSpace space) { return space == ResidualSpace::log ? "log" : "linear"; }

ResidualSpace parse_residual_space(std::string_view name) {
  if (name == "log") return ResidualSpace::log;
  if (name == "linear") return ResidualSpace::linear;
  throw ConfigError("unknown residual space '" + std::string(name) + "'");
}

double residual(double pred, double obs, ResidualSpace space) {
  if (space == ResidualSpace::linear) return pred - obs;
  if (!(pred > 0.0) || !(obs > 0.0)) throw DomainError("log-space residual needs positive values");
  return std::log(pred) - std::log(obs);
}

double pointwise_loss(double r, const ObjectiveSpec& spec) {
  switch (spec.kind) {
    case ObjectiveSpec::Kind::mse: return r * r;
    case ObjectiveSpec::Kind::mae: return std::abs(r);
    case ObjectiveSpec::Kind::huber:
    case ObjectiveSpec::Kind::log_huber: {
      const double a = std::abs(r);
      return a <= spec.delta ? 0.5 * r * r : spec.delta * (a - 0.5 * spec.delta);
    }
  }
  return 0.0;
}

double pointwise_derivative(double r, const ObjectiveSpec& spec) {
  switch (spec.kind) {
    case ObjectiveSpec::Kind::mse: return 2.0 * r;
    case ObjectiveSpec::Kind::mae: return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
    case ObjectiveSpec::Kind::huber:
    case ObjectiveSpec::Kind::log_huber:
      if (std::abs(r) <= spec.delta) return r;
      return r > 0.0 ? spec.delta : -spec.delta;
  }
  return 0.0;
}

FitProblem::FitProblem(std::vector<Observation> observations, LawForm form, ObjectiveSpec objective)
    : obs_(std::move(observations)), form_(form), objective_(objective) {
  objective_.validate();
  if (obs_.empty()) throw DomainError("a fit problem needs at least one observation");
  for (const auto& o : obs_) {
    if (!(o.n > 0.0) || !(o.d > 0.0)) throw DomainError("observation " + o.id + " has nonpositive n or d");
    if (!(o.loss > 0.0)) throw DomainError("observation " + o.id + " has nonpositive loss");
  }
  std::sort(obs_.begin(), obs_.end(), [](const Observation& a, const Observation& b) {
    return std::tie(a.n, a.d, a.loss, a.id) < std::tie(b.n, b.d, b.loss, b.id);
  });
  log_n_.reserve(obs_.size());
  log_d_.reserve(obs_.size());
  log_loss_.reserve(obs_.size());
  for (const auto& o : obs_) {
    log_n_.push_back(std::log(o.n));
    log_d_.push_back(std::log(o.d));
    log_loss_.push_back(std::log(o.loss));
  }
}

FitProblem FitProblem::from_dataset(const ComputeAnnotatedDataset& ds, LawForm form, ObjectiveSpec objective) {
  std::vector<Observation> obs;
  obs.reserve(ds.size());
  for (const auto& r : ds.records) obs.push_back({r.n, r.d, r.record.loss.value(), r.record.key()});
  return FitProblem(std::move(obs), form, objective);
}

FitProblem FitProblem::with(LawForm form, ObjectiveSpec objective) const {
  return FitProblem(obs_, form, objective);
}

namespace {

// Residual of observation i and, optionally, its gradient.
double residual_at(const FitProblem& p, const Vector& theta, std::size_t i, double* grad) {
  const double lp = log_predict_loss_logs(p.form(), theta.data(), p.log_n()[i], p.log_d()[i], grad);
  if (p.objective().space == ResidualSpace::log) return lp - p.log_loss()[i];
  const double pred = std::exp(lp);
  if (grad)
    for (std::size_t j = 0; j < p.dimension(); ++j) grad[j] *= pred;
  return pred - p.observations()[i].loss;
}

void check_theta(const FitProblem& p, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != p.dimension())
    throw DomainError(fmt::format("parameter vector has {} entries, {} needs {}", theta.size(),
                                  to_string(p.form()), p.dimension()));
}

}  // namespace

double objective_value(const FitProblem& problem, const Vector& theta) {
  check_theta(problem, theta);
  double sum = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i)
    sum += pointwise_loss(residual_at(problem, theta, i, nullptr), problem.objective());
  return sum / static_cast<double>(problem.size());
}

double objective_value_and_grad(const FitProblem& problem, const Vector& theta, Vector& grad) {
  check_theta(problem, theta);
  const std::size_t dim = problem.dimension();
  grad = Vector::Zero(static_cast<Eigen::Index>(dim));
  double local[8];
  double sum = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const double r = residual_at(problem, theta, i, local);
    sum += pointwise_loss(r, problem.objective());
    const double psi = pointwise_derivative(r, problem.objective());
    for (std::size_t j = 0; j < dim; ++j) grad[static_cast<Eigen::Index>(j)] += psi * local[j];
  }
  const double m = static_cast<double>(problem.size());
  grad /= m;
  return sum / m;
}

Vector objective_grad(const FitProblem& problem, const Vector& theta) {
  Vector g;
  objective_value_and_grad(problem, theta, g);
  return g;
}

Vector residual_vector(const FitProblem& problem, const Vector& theta) {
  check_theta(problem, theta);
  Vector r(static_cast<Eigen::Index>(problem.size()));
  for (std::size_t i = 0; i < problem.size(); ++i)
    r[static_cast<Eigen::Index>(i)] = residual_at(problem, theta, i, nullptr);
  return r;
}

Eigen::MatrixXd residual_jacobian(const FitProblem& problem, const Vector& theta) {
  check_theta(problem, theta);
  const auto dim = static_cast<Eigen::Index>(problem.dimension());
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(problem.size()), dim);
  double local[8];
  for (std::size_t i = 0; i < problem.size(); ++i) {
    residual_at(problem, theta, i, local);
    for (Eigen::Index j = 0; j < dim; ++j) jac(static_cast<Eigen::Index>(i), j) = local[j];
  }
  return jac;
}

}  // namespace lawlab
