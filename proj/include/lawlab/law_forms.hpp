#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace lawlab {

using Vector = Eigen::VectorXd;

/// Parametric loss families L(N, D; theta).
///
/// Every form is evaluated from a coordinate vector in the optimizer's
/// unconstrained space:
///   chinchilla  (log_e, log_a, log_b, alpha, beta)    E + A/N^alpha + B/D^beta
///   tied        (log_e, log_a, log_b, alpha)          same with beta = alpha
///   kaplan      (log_n_c, log_d_c, alpha_n, alpha_d)  [(N_c/N)^(alpha_n/alpha_d) + D_c/D]^alpha_d
///
/// The Kaplan form is oriented so that loss decreases in N and D.
enum class LawForm { chinchilla, tied, kaplan };

std::string to_string(LawForm form);
LawForm parse_law_form(std::string_view name);
std::size_t param_count(LawForm form);
const std::vector<std::string>& param_names(LawForm form);

struct Allocation {
  double n = 0.0;
  double d = 0.0;
  double rho = 0.0;  ///< d / n
};

struct ChinchillaParams {
  double log_e = 0.0;
  double log_a = 0.0;
  double log_b = 0.0;
  double alpha = 0.5;
  double beta = 0.5;

  double e() const;
  double a() const;
  double b() const;
  Vector to_vector() const;
  static ChinchillaParams from_vector(const Vector& v);
  void validate() const;  ///< positivity and finiteness; throws DomainError
};

struct TiedParams {
  double log_e = 0.0;
  double log_a = 0.0;
  double log_b = 0.0;
  double alpha = 0.5;

  ChinchillaParams untied() const { return {log_e, log_a, log_b, alpha, alpha}; }
  Vector to_vector() const;
  static TiedParams from_vector(const Vector& v);
};

struct KaplanParams {
  double n_c = 1.0;
  double d_c = 1.0;
  double alpha_n = 0.1;
  double alpha_d = 0.1;

  Vector to_vector() const;  ///< (log n_c, log d_c, alpha_n, alpha_d)
  static KaplanParams from_vector(const Vector& v);
  void validate() const;
};

/// N*(C) = N0 * C^a; D* and rho* follow from C = k*N*D.
struct RatioParams {
  double log_n0 = 0.0;
  double exp_a = 0.5;
};

double predict_loss(LawForm form, const Vector& theta, double n, double d);

/// ln L computed with log-sum-exp over the additive terms.
double log_predict_loss(LawForm form, const Vector& theta, double n, double d);

/// ln L at (ln n, ln d) for a raw coordinate array of param_count(form)
/// entries. When `grad` is non-null it receives d(ln L)/dtheta.
double log_predict_loss_logs(LawForm form, const double* theta, double log_n, double log_d,
                             double* grad = nullptr);

/// dL/dtheta in the form's coordinates.
Vector grad_params(LawForm form, const Vector& theta, double n, double d);

/// d(ln L)/dtheta, evaluated through softmax weights of the log-sum-exp.
Vector grad_log_params(LawForm form, const Vector& theta, double n, double d);

/// Minimizer of E + A n^-alpha + B d^-beta subject to c = k*n*d.
Allocation optimal_allocation(const ChinchillaParams& p, double c, double flop_constant = 6.0);
Allocation optimal_allocation(const TiedParams& p, double c, double flop_constant = 6.0);

/// Minimizer of the Kaplan form along c = k*n*d. Degenerate optima (d
/// collapsing to a handful of tokens) are returned as computed.
Allocation kaplan_allocation(const KaplanParams& p, double c, double flop_constant = 6.0);

Allocation ratio_predict(const RatioParams& p, double c, double flop_constant = 6.0);

/// Dispatches to the allocation rule for `form`.
Allocation allocate(LawForm form, const Vector& theta, double c, double flop_constant = 6.0);

}  // namespace lawlab
