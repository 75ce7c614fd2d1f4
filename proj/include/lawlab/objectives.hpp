#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lawlab/flops.hpp"
#include "lawlab/law_forms.hpp"

namespace lawlab {

enum class ResidualSpace { log, linear };

/// Pointwise loss on residuals. mse is r^2 (no 0.5 factor); huber keeps the
/// 0.5 in its quadratic branch. log_huber is huber with log-space residuals.
struct ObjectiveSpec {
  enum class Kind { log_huber, huber, mse, mae };
  Kind kind = Kind::log_huber;
  double delta = 1e-3;
  ResidualSpace space = ResidualSpace::log;

  static ObjectiveSpec log_huber(double delta = 1e-3) { return {Kind::log_huber, delta, ResidualSpace::log}; }
  static ObjectiveSpec huber(double delta, ResidualSpace space = ResidualSpace::linear) {
    return {Kind::huber, delta, space};
  }
  static ObjectiveSpec mse(ResidualSpace space = ResidualSpace::linear) { return {Kind::mse, 0.0, space}; }
  static ObjectiveSpec mae(ResidualSpace space = ResidualSpace::linear) { return {Kind::mae, 0.0, space}; }

  bool has_delta() const { return kind == Kind::log_huber || kind == Kind::huber; }
  bool is_quadratic() const { return kind == Kind::mse; }
  void validate() const;  // throws ConfigError
  std::string describe() const;
};

std::string to_string(ObjectiveSpec::Kind kind);
ObjectiveSpec::Kind parse_objective_kind(std::string_view name);
std::string to_string(ResidualSpace space);
ResidualSpace parse_residual_space(std::string_view name);

/// log: ln(pred) - ln(obs); linear: pred - obs.
double residual(double pred, double obs, ResidualSpace space);
double pointwise_loss(double r, const ObjectiveSpec& spec);
/// d(loss)/dr. mae uses 0 at r = 0; huber uses the quadratic branch at the knee.
double pointwise_derivative(double r, const ObjectiveSpec& spec);

struct Observation {
  double n = 0.0;
  double d = 0.0;
  double loss = 0.0;
  std::string id;
};

/// A dataset bound to a law form and objective. Observations are held in
/// sorted (n, d, loss, id) order so reductions do not depend on input order.
/// Any non-empty set can be evaluated; the fitters additionally require at
/// least as many observations as parameters.
class FitProblem {
 public:
  FitProblem(std::vector<Observation> observations, LawForm form, ObjectiveSpec objective);

  static FitProblem from_dataset(const ComputeAnnotatedDataset& ds, LawForm form, ObjectiveSpec objective);

  const std::vector<Observation>& observations() const noexcept { return obs_; }
  LawForm form() const noexcept { return form_; }
  const ObjectiveSpec& objective() const noexcept { return objective_; }
  std::size_t size() const noexcept { return obs_.size(); }
  std::size_t dimension() const noexcept { return param_count(form_); }

  /// Same observations with another form or objective.
  FitProblem with(LawForm form, ObjectiveSpec objective) const;

  // Cached logs of the observations, in storage order.
  const std::vector<double>& log_n() const noexcept { return log_n_; }
  const std::vector<double>& log_d() const noexcept { return log_d_; }
  const std::vector<double>& log_loss() const noexcept { return log_loss_; }

 private:
  std::vector<Observation> obs_;
  LawForm form_;
  ObjectiveSpec objective_;
  std::vector<double> log_n_, log_d_, log_loss_;
};

/// Mean pointwise loss over observations.
double objective_value(const FitProblem& problem, const Vector& theta);
Vector objective_grad(const FitProblem& problem, const Vector& theta);
double objective_value_and_grad(const FitProblem& problem, const Vector& theta, Vector& grad);

/// Residuals in the objective's space, one per observation, in storage order.
Vector residual_vector(const FitProblem& problem, const Vector& theta);
/// d(residual_i)/d(theta_j).
Eigen::MatrixXd residual_jacobian(const FitProblem& problem, const Vector& theta);

}  // namespace lawlab
