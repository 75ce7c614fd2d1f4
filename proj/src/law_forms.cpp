#include "lawlab/law_forms.hpp"

#include <algorithm>
#include <cmath>

#include "lawlab/error.hpp"

namespace lawlab {

namespace {

void check_point(double n, double d) {
  if (!(n > 0.0) || !(d > 0.0)) throw DomainError("n and d must be positive");
}

void check_size(LawForm form, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != param_count(form))
    throw DomainError("parameter vector has " + std::to_string(theta.size()) + " entries, " +
                      to_string(form) + " needs " + std::to_string(param_count(form)));
}

// log-sum-exp of three terms; writes the softmax weights.
double lse3(double z0, double z1, double z2, double w[3]) {
  const double m = std::max({z0, z1, z2});
  const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m), e2 = std::exp(z2 - m);
  const double s = e0 + e1 + e2;
  w[0] = e0 / s;
  w[1] = e1 / s;
  w[2] = e2 / s;
  return m + std::log(s);
}

double lse2(double z0, double z1, double w[2]) {
  const double m = std::max(z0, z1);
  const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
  const double s = e0 + e1;
  w[0] = e0 / s;
  w[1] = e1 / s;
  return m + std::log(s);
}

}  // namespace

std::string to_string(LawForm form) {
  switch (form) {
    case LawForm::chinchilla: return "chinchilla";
    case LawForm::tied: return "tied";
    case LawForm::kaplan: return "kaplan";
  }
  return {};
}

LawForm parse_law_form(std::string_view name) {
  if (name == "chinchilla") return LawForm::chinchilla;
  if (name == "tied") return LawForm::tied;
  if (name == "kaplan") return LawForm::kaplan;
  throw DomainError("unknown law form '" + std::string(name) + "'");
}

std::size_t param_count(LawForm form) { return form == LawForm::chinchilla ? 5 : 4; }

const std::vector<std::string>& param_names(LawForm form) {
  static const std::vector<std::string> chin = {"log_e", "log_a", "log_b", "alpha", "beta"};
  static const std::vector<std::string> tied = {"log_e", "log_a", "log_b", "alpha"};
  static const std::vector<std::string> kap = {"log_n_c", "log_d_c", "alpha_n", "alpha_d"};
  switch (form) {
    case LawForm::chinchilla: return chin;
    case LawForm::tied: return tied;
    case LawForm::kaplan: return kap;
  }
  return chin;
}

double ChinchillaParams::e() const { return std::exp(log_e); }
double ChinchillaParams::a() const { return std::exp(log_a); }
double ChinchillaParams::b() const { return std::exp(log_b); }

Vector ChinchillaParams::to_vector() const {
  Vector v(5);
  v << log_e, log_a, log_b, alpha, beta;
  return v;
}

ChinchillaParams ChinchillaParams::from_vector(const Vector& v) {
  check_size(LawForm::chinchilla, v);
  return {v[0], v[1], v[2], v[3], v[4]};
}

void ChinchillaParams::validate() const {
  for (double x : {e(), a(), b()})
    if (!std::isfinite(x) || !(x > 0.0)) throw DomainError("E, A, B must be finite and positive");
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DomainError("alpha and beta must be positive");
}

Vector TiedParams::to_vector() const {
  Vector v(4);
  v << log_e, log_a, log_b, alpha;
  return v;
}

TiedParams TiedParams::from_vector(const Vector& v) {
  check_size(LawForm::tied, v);
  return {v[0], v[1], v[2], v[3]};
}

Vector KaplanParams::to_vector() const {
  Vector v(4);
  v << std::log(n_c), std::log(d_c), alpha_n, alpha_d;
  return v;
}

KaplanParams KaplanParams::from_vector(const Vector& v) {
  check_size(LawForm::kaplan, v);
  return {std::exp(v[0]), std::exp(v[1]), v[2], v[3]};
}

void KaplanParams::validate() const {
  if (!(n_c > 0.0) || !(d_c > 0.0) || !(alpha_n > 0.0) || !(alpha_d > 0.0) ||
      !std::isfinite(alpha_n / alpha_d))
    throw DomainError("Kaplan parameters must be positive");
}

double log_predict_loss_logs(LawForm form, const double* t, double ln, double ld, double* grad) {
  double w[3];
  switch (form) {
    case LawForm::chinchilla: {
      const double out = lse3(t[0], t[1] - t[3] * ln, t[2] - t[4] * ld, w);
      if (grad) {
        grad[0] = w[0];
        grad[1] = w[1];
        grad[2] = w[2];
        grad[3] = -w[1] * ln;
        grad[4] = -w[2] * ld;
      }
      return out;
    }
    case LawForm::tied: {
      const double out = lse3(t[0], t[1] - t[3] * ln, t[2] - t[3] * ld, w);
      if (grad) {
        grad[0] = w[0];
        grad[1] = w[1];
        grad[2] = w[2];
        grad[3] = -w[1] * ln - w[2] * ld;
      }
      return out;
    }
    case LawForm::kaplan: {
      const double ratio = t[2] / t[3];
      const double gap = t[0] - ln;  // log n_c - ln n
      const double s = lse2(ratio * gap, t[1] - ld, w);
      if (grad) {
        grad[0] = t[2] * w[0];
        grad[1] = t[3] * w[1];
        grad[2] = w[0] * gap;
        grad[3] = s - w[0] * ratio * gap;
      }
      return t[3] * s;
    }
  }
  return 0.0;
}

double log_predict_loss(LawForm form, const Vector& t, double n, double d) {
  check_point(n, d);
  check_size(form, t);
  return log_predict_loss_logs(form, t.data(), std::log(n), std::log(d));
}

double predict_loss(LawForm form, const Vector& t, double n, double d) {
  check_point(n, d);
  check_size(form, t);
  switch (form) {
    case LawForm::chinchilla:
      return std::exp(t[0]) + std::exp(t[1]) * std::pow(n, -t[3]) + std::exp(t[2]) * std::pow(d, -t[4]);
    case LawForm::tied:
      return std::exp(t[0]) + std::exp(t[1]) * std::pow(n, -t[3]) + std::exp(t[2]) * std::pow(d, -t[3]);
    case LawForm::kaplan: {
      const double ratio = t[2] / t[3];
      const double s = std::pow(std::exp(t[0]) / n, ratio) + std::exp(t[1]) / d;
      return std::pow(s, t[3]);
    }
  }
  return 0.0;
}

Vector grad_log_params(LawForm form, const Vector& t, double n, double d) {
  check_point(n, d);
  check_size(form, t);
  Vector g(param_count(form));
  log_predict_loss_logs(form, t.data(), std::log(n), std::log(d), g.data());
  return g;
}

Vector grad_params(LawForm form, const Vector& t, double n, double d) {
  check_point(n, d);
  check_size(form, t);
  if (form == LawForm::kaplan) return predict_loss(form, t, n, d) * grad_log_params(form, t, n, d);

  const double ln = std::log(n), ld = std::log(d);
  const double e = std::exp(t[0]);
  const double an = std::exp(t[1]) * std::pow(n, -t[3]);
  const double beta = form == LawForm::chinchilla ? t[4] : t[3];
  const double bd = std::exp(t[2]) * std::pow(d, -beta);
  Vector g(param_count(form));
  if (form == LawForm::chinchilla)
    g << e, an, bd, -an * ln, -bd * ld;
  else
    g << e, an, bd, -an * ln - bd * ld;
  return g;
}

Allocation optimal_allocation(const ChinchillaParams& p, double c, double flop_constant) {
  if (!(c > 0.0)) throw DomainError("compute budget must be positive");
  if (!(flop_constant > 0.0)) throw DomainError("flop constant must be positive");
  const double sum = p.alpha + p.beta;
  if (sum == 0.0) throw DomainError("alpha + beta must be nonzero");
  if (!(p.a() > 0.0) || !(p.b() > 0.0) || !std::isfinite(p.a()) || !std::isfinite(p.b()))
    throw DomainError("A and B must be positive");
  if (!(p.alpha > 0.0) || !(p.beta > 0.0)) throw DomainError("alpha and beta must be positive");

  // ln G = (ln(alpha A) - ln(beta B)) / (alpha + beta)
  const double log_g = (std::log(p.alpha) + p.log_a - std::log(p.beta) - p.log_b) / sum;
  const double log_budget = std::log(c / flop_constant);
  Allocation out;
  out.n = std::exp(log_g + p.beta / sum * log_budget);
  out.d = c / (flop_constant * out.n);
  out.rho = out.d / out.n;
  return out;
}

Allocation optimal_allocation(const TiedParams& p, double c, double flop_constant) {
  return optimal_allocation(p.untied(), c, flop_constant);
}

Allocation kaplan_allocation(const KaplanParams& p, double c, double flop_constant) {
  if (!(c > 0.0)) throw DomainError("compute budget must be positive");
  p.validate();
  // S(n) = (n_c/n)^r + d_c*k*n/c is minimized where n^(r+1) = r n_c^r c / (k d_c).
  const double r = p.alpha_n / p.alpha_d;
  const double log_n =
      (std::log(r) + r * std::log(p.n_c) + std::log(c) - std::log(flop_constant) - std::log(p.d_c)) /
      (r + 1.0);
  Allocation out;
  out.n = std::exp(log_n);
  out.d = c / (flop_constant * out.n);
  out.rho = out.d / out.n;
  return out;
}

Allocation ratio_predict(const RatioParams& p, double c, double flop_constant) {
  if (!(c > 0.0)) throw DomainError("compute budget must be positive");
  Allocation out;
  out.n = std::exp(p.log_n0) * std::pow(c, p.exp_a);
  out.d = c / (flop_constant * out.n);
  out.rho = out.d / out.n;
  return out;
}

Allocation allocate(LawForm form, const Vector& theta, double c, double flop_constant) {
  switch (form) {
    case LawForm::chinchilla:
      return optimal_allocation(ChinchillaParams::from_vector(theta), c, flop_constant);
    case LawForm::tied:
      return optimal_allocation(TiedParams::from_vector(theta), c, flop_constant);
    case LawForm::kaplan:
      return kaplan_allocation(KaplanParams::from_vector(theta), c, flop_constant);
  }
  return {};
}

}  // namespace lawlab
