#pragma once

// Scalar bound functions and the decay rates gamma built from them.
//
//   psi(x) = x^2 e^x,            psi~(x) = x e^x                 (continuous)
//   psi_d(x) = x^2 / (1 - x),    psi~_d(x) = x (2 - x) / (2(1 - x))   (discrete)
//   phi_delta(x) = 1/delta for x < delta, 1/x otherwise
//   w(x) = sqrt((x - r)(s - x)) on the gap (r, s)

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bjdecay/core.hpp"

namespace bjdecay {

class GapInterval {
 public:
  GapInterval(double r, double s) : r_(r), s_(s) {
    if (!(r < s) || !std::isfinite(r) || !std::isfinite(s))
      throw DomainError("gap interval needs finite r < s, got (" + std::to_string(r) + ", " + std::to_string(s) + ")");
  }
  double r() const noexcept { return r_; }
  double s() const noexcept { return s_; }
  double width() const noexcept { return s_ - r_; }
  double midpoint() const noexcept { return 0.5 * (r_ + s_); }
  bool contains(double x) const noexcept { return r_ < x && x < s_; }

 private:
  double r_, s_;
};

struct BoundParams {
  double delta = 1.0;
  double epsilon = 0.25;
  double eta = 0.5;

  void validate() const {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw DomainError("delta must be > 0");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw DomainError("epsilon must lie in (0, 1/2)");
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("eta must lie in (0, 1)");
  }
};

enum class Branch { SmallImaginary, LargeImaginary };
enum class Variant { Continuous, Discrete, Simplified };

inline const char* to_string(Branch b) { return b == Branch::SmallImaginary ? "small-imaginary" : "large-imaginary"; }
inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::Continuous: return "continuous";
    case Variant::Discrete: return "discrete";
    case Variant::Simplified: return "simplified";
  }
  return "?";
}

struct DecayRate {
  double gamma = 0.0;
  Branch branch = Branch::SmallImaginary;
  Variant variant = Variant::Continuous;
};

inline double psi(double x) {
  if (!(x > 0.0)) throw DomainError("psi requires x > 0");
  return x * x * std::exp(x);
}

inline double psi_tilde(double x) {
  if (!(x > 0.0)) throw DomainError("psi_tilde requires x > 0");
  return x * std::exp(x);
}

inline double phi_delta(double delta, double x) {
  if (!(delta > 0.0)) throw DomainError("phi_delta requires delta > 0");
  if (!(x >= 0.0)) throw DomainError("phi_delta requires x >= 0");
  return x < delta ? 1.0 / delta : 1.0 / x;
}

inline double w(const GapInterval& gap, double x) {
  if (!gap.contains(x)) throw DomainError("w(x) requires r < x < s");
  return std::sqrt((x - gap.r()) * (gap.s() - x));
}

namespace detail {

// Unique positive root of f(x) = t for f strictly increasing with f(0) = 0.
// Bisection down to a 1e-3 relative bracket, then safeguarded Newton.
template <typename F, typename DF>
double invert_increasing(double t, F&& f, DF&& df, const char* name) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError(std::string(name) + " requires t > 0");
  double lo = std::min(t, std::sqrt(t)) / std::exp(1.0);
  double hi = std::max(1.0, std::log1p(t)) + 1.0;
  while (f(lo) > t) lo *= 0.5;
  while (f(hi) < t) hi *= 2.0;

  constexpr int kMaxIter = 400;
  int iter = 0;
  while (hi - lo > 1e-3 * hi) {
    if (++iter > kMaxIter) throw NumericalError(std::string(name) + ": bisection did not converge");
    const double mid = 0.5 * (lo + hi);
    (f(mid) < t ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int k = 0; k < 100; ++k) {
    const double fx = f(x) - t;
    if (fx == 0.0) return x;
    (fx < 0.0 ? lo : hi) = x;
    double next = x - fx / df(x);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - x);
    x = next;
    if (step <= 4.0 * std::numeric_limits<double>::epsilon() * x) return x;
  }
  // Newton stalls in a two-cycle at the last ulp for some t; accept if tight.
  if (hi - lo <= 1e-12 * x) return x;
  throw NumericalError(std::string(name) + ": Newton polish did not converge");
}

}  // namespace detail

inline double inv_psi(double t) {
  return detail::invert_increasing(
      t, [](double x) { return x * x * std::exp(x); }, [](double x) { return x * (2.0 + x) * std::exp(x); },
      "inv_psi");
}

inline double inv_psi_tilde(double t) {
  return detail::invert_increasing(
      t, [](double x) { return x * std::exp(x); }, [](double x) { return (1.0 + x) * std::exp(x); },
      "inv_psi_tilde");
}

inline double psi_d(double x) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError("psi_d requires 0 < x < 1");
  return x * x / (1.0 - x);
}

inline double psi_tilde_d(double x) {
  if (!(x > 0.0 && x < 1.0)) throw DomainError("psi_tilde_d requires 0 < x < 1");
  return x * (2.0 - x) / (2.0 * (1.0 - x));
}

/// Positive root of x^2 + t x - t = 0, i.e. (-t + sqrt(t^2 + 4t)) / 2.
inline double inv_psi_d(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("inv_psi_d requires t > 0");
  return 2.0 * t / (t + std::sqrt(t * t + 4.0 * t));
}

/// Root in (0,1) of x^2 - 2(1+t) x + 2t = 0, i.e. (1 + t) - sqrt(1 + t^2).
inline double inv_psi_tilde_d(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("inv_psi_tilde_d requires t > 0");
  return 2.0 * t / ((1.0 + t) + std::sqrt(1.0 + t * t));
}

inline Branch select_branch(double w_value, double epsilon, double im_zeta) {
  return std::abs(im_zeta) <= w_value * epsilon / 2.0 ? Branch::SmallImaginary : Branch::LargeImaginary;
}

namespace detail {

template <typename InvPsi, typename InvPsiTilde>
DecayRate gamma_with(const BoundParams& p, const GapInterval& gap, const SpectralPoint& zeta, InvPsi inv_sq,
                     InvPsiTilde inv_lin, Variant variant) {
  p.validate();
  if (!gap.contains(zeta.re())) throw DomainError("gamma requires Re zeta inside the gap (r, s)");
  const double wv = w(gap, zeta.re());
  const double d = p.delta;
  DecayRate out;
  out.variant = variant;
  out.branch = select_branch(wv, p.epsilon, zeta.im());
  if (out.branch == Branch::SmallImaginary) {
    const double g1 = d * inv_sq(wv * wv * p.epsilon / (2.0 * d * gap.width()));
    const double g2 = d * inv_lin(wv * (1.0 - 2.0 * p.epsilon) / (2.0 * d));
    out.gamma = std::min(g1, g2);
  } else {
    out.gamma = d * inv_lin(wv * p.epsilon * (1.0 - p.eta) / (4.0 * d));
  }
  return out;
}

}  // namespace detail

inline DecayRate gamma_continuous(const BoundParams& p, const GapInterval& gap, const SpectralPoint& zeta) {
  return detail::gamma_with(p, gap, zeta, inv_psi, inv_psi_tilde, Variant::Continuous);
}

/// Same formulas with the rational psi_d, psi~_d; always below 1 * delta.
inline DecayRate gamma_discrete(const BoundParams& p, const GapInterval& gap, const SpectralPoint& zeta) {
  return detail::gamma_with(p, gap, zeta, inv_psi_d, inv_psi_tilde_d, Variant::Discrete);
}

/// Admissibility margin applied to the strict upper bound of the simplified rate.
inline constexpr double kSimplifiedShrink = 1.0 - 1e-9;

/// Rate for uncapped reciprocals 1/||A_k||: w (1/2 - eps') or w eps'/4.
inline DecayRate gamma_simplified(const GapInterval& gap, const SpectralPoint& zeta, double eps_prime) {
  if (!(eps_prime > 0.0 && eps_prime < 0.5)) throw DomainError("eps' must lie in (0, 1/2)");
  if (!gap.contains(zeta.re())) throw DomainError("gamma requires Re zeta inside the gap (r, s)");
  const double wv = w(gap, zeta.re());
  DecayRate out;
  out.variant = Variant::Simplified;
  out.branch = select_branch(wv, eps_prime, zeta.im());
  const double sup = out.branch == Branch::SmallImaginary ? wv * (0.5 - eps_prime) : wv * eps_prime / 4.0;
  out.gamma = sup * kSimplifiedShrink;
  return out;
}

inline DecayRate gamma_for(Variant v, const BoundParams& p, const GapInterval& gap, const SpectralPoint& zeta) {
  switch (v) {
    case Variant::Continuous: return gamma_continuous(p, gap, zeta);
    case Variant::Discrete: return gamma_discrete(p, gap, zeta);
    case Variant::Simplified: return gamma_simplified(gap, zeta, p.epsilon);
  }
  throw DomainError("unknown variant");
}

/// Logarithmic delta grid.
struct DeltaGrid {
  double lo = 1e-2;
  double hi = 1e4;
  int points = 121;

  std::vector<double> values() const {
    if (points < 2 || !(lo > 0.0) || !(hi > lo)) throw DomainError("delta grid needs 0 < lo < hi and >= 2 points");
    std::vector<double> out(points);
    const double a = std::log10(lo), b = std::log10(hi);
    for (int i = 0; i < points; ++i) out[i] = std::pow(10.0, a + (b - a) * i / (points - 1));
    return out;
  }
};

struct DeltaChoice {
  double delta = 0.0;
  double exponent = 0.0;  // gamma(delta) * sum_k phi_delta(||A_k||)
  DecayRate rate;
};

/// Grid search over delta maximising the whole exponent gamma(delta) * sum phi_delta(norms).
/// Ties go to the smaller delta.
inline DeltaChoice best_delta(const BoundParams& tmpl, const GapInterval& gap, const SpectralPoint& zeta,
                              std::span<const double> norms, Variant variant, const DeltaGrid& grid = {}) {
  if (norms.empty()) throw DomainError("best_delta needs at least one norm sample");
  if (variant == Variant::Simplified) throw DomainError("the simplified rate does not depend on delta");
  DeltaChoice best;
  best.exponent = -1.0;
  for (double d : grid.values()) {
    BoundParams p = tmpl;
    p.delta = d;
    const DecayRate rate = gamma_for(variant, p, gap, zeta);
    double sum = 0.0;
    for (double a : norms) sum += phi_delta(d, a);
    const double e = rate.gamma * sum;
    if (e > best.exponent) best = {d, e, rate};
  }
  return best;
}

}  // namespace bjdecay
