#pragma once

// Decay envelopes: scalar exponential sums over phi_delta(||A_k||), the
// operator-valued version over phi_delta(|A_k|) for commuting entries, and the
// discrete product over (1 - gamma/||A_k||).
//
// Windows run over k in [min(m,j), max(m,j) - 1]; m == j is the empty window.

#include <algorithm>
#include <cmath>
#include <vector>

#include "bjdecay/boundfns.hpp"
#include "bjdecay/core.hpp"
#include "bjdecay/operator.hpp"

namespace bjdecay {

class CumulativeProfile {
 public:
  /// delta == 0 marks the uncapped profile 1/||A_k||.
  CumulativeProfile(double delta, std::vector<double> terms) : delta_(delta), terms_(std::move(terms)) {
    prefix_.assign(terms_.size() + 1, 0.0);
    for (std::size_t k = 0; k < terms_.size(); ++k) prefix_[k + 1] = prefix_[k] + terms_[k];
  }

  double delta() const noexcept { return delta_; }
  int size() const noexcept { return int(terms_.size()); }
  const std::vector<double>& terms() const noexcept { return terms_; }
  /// term(k) for k = 1..size()
  double term(int k) const { return terms_.at(k - 1); }
  /// sum_{k <= p}, p = 0..size()
  double prefix(int p) const { return prefix_.at(p); }

  double window_sum(int m, int j) const {
    check_window(m, j);
    return prefix_[std::max(m, j) - 1] - prefix_[std::min(m, j) - 1];
  }

  void check_window(int m, int j) const {
    if (m < 1 || j < 1) throw DomainError("window indices must be >= 1");
    if (std::max(m, j) - 1 > size())
      throw DomainError("window (" + std::to_string(m) + ", " + std::to_string(j) + ") exceeds profile length " +
                        std::to_string(size()));
  }

 private:
  double delta_;
  std::vector<double> terms_;
  std::vector<double> prefix_;
};

inline CumulativeProfile cumulative_phi(const EntrySequence& seq, double delta, int upto) {
  if (upto < 1) throw DomainError("profile length must be >= 1");
  if (!(delta > 0.0)) throw DomainError("delta must be > 0");
  std::vector<double> terms(upto);
  for (int k = 1; k <= upto; ++k) terms[k - 1] = phi_delta(delta, seq.a_norm(k));
  return CumulativeProfile(delta, std::move(terms));
}

/// Uncapped 1/||A_k||; requires every A_k on the range to be nonzero.
inline CumulativeProfile cumulative_reciprocal(const EntrySequence& seq, int upto) {
  if (upto < 1) throw DomainError("profile length must be >= 1");
  std::vector<double> terms(upto);
  for (int k = 1; k <= upto; ++k) {
    const double a = seq.a_norm(k);
    if (!(a > 0.0)) throw DomainError("A_" + std::to_string(k) + " vanishes; 1/||A_k|| undefined");
    terms[k - 1] = 1.0 / a;
  }
  return CumulativeProfile(0.0, std::move(terms));
}

inline double scalar_envelope(const DecayRate& rate, const CumulativeProfile& profile, int m, int j) {
  return std::exp(-rate.gamma * profile.window_sum(m, j));
}

/// Prefix sums H_p = sum_{k <= p} phi_delta(|A_k|), applied eigenvalue-wise.
class OperatorProfile {
 public:
  OperatorProfile(double delta, std::vector<CMatrix> prefix) : delta_(delta), prefix_(std::move(prefix)) {}

  double delta() const noexcept { return delta_; }
  int size() const noexcept { return int(prefix_.size()) - 1; }
  const CMatrix& prefix(int p) const { return prefix_.at(p); }

  CMatrix window_sum(int m, int j) const {
    if (m < 1 || j < 1) throw DomainError("window indices must be >= 1");
    if (std::max(m, j) - 1 > size()) throw DomainError("window exceeds operator profile length");
    return prefix_[std::max(m, j) - 1] - prefix_[std::min(m, j) - 1];
  }

 private:
  double delta_;
  std::vector<CMatrix> prefix_;
};

inline CMatrix phi_delta_operator(double delta, const CMatrix& a) {
  return hermitian_function(modulus(a), [delta](double x) { return phi_delta(delta, std::max(x, 0.0)); });
}

inline OperatorProfile operator_profile(const EntrySequence& seq, double delta, int upto) {
  if (upto < 1) throw DomainError("profile length must be >= 1");
  if (!(delta > 0.0)) throw DomainError("delta must be > 0");
  const int d = seq.dim();
  std::vector<CMatrix> prefix;
  prefix.reserve(upto + 1);
  prefix.push_back(CMatrix::Zero(d, d));
  for (int k = 1; k <= upto; ++k) prefix.push_back(prefix.back() + phi_delta_operator(delta, seq.a(k)));
  return OperatorProfile(delta, std::move(prefix));
}

/// exp(+gamma * sum_{k in window} phi_delta(|A_k|)); Hermitian positive definite.
inline CMatrix operator_envelope(const DecayRate& rate, const OperatorProfile& profile, int m, int j) {
  CMatrix h = profile.window_sum(m, j);
  h = 0.5 * (h + h.adjoint());
  const double g = rate.gamma;
  return hermitian_function(h, [g](double x) { return std::exp(g * x); });
}

inline CMatrix operator_envelope(const DecayRate& rate, const EntrySequence& seq, double delta, int m, int j) {
  if (m == j) return CMatrix::Identity(seq.dim(), seq.dim());
  return operator_envelope(rate, operator_profile(seq, delta, std::max(m, j) - 1), m, j);
}

struct CommutingResult {
  bool commutes = false;
  double max_commutator = 0.0;
};

inline constexpr double kCommuteTol = 1e-10;

/// Max ||[X, Y]|| over all X, Y in {A_k, A_k^*, B_k : k <= upto}.
inline CommutingResult commuting_check(const EntrySequence& seq, int upto) {
  if (upto < 1) throw DomainError("commuting_check needs upto >= 1");
  std::vector<CMatrix> mats;
  mats.reserve(3 * std::size_t(upto));
  for (int k = 1; k <= upto; ++k) {
    const CMatrix a = seq.a(k);
    mats.push_back(a);
    mats.push_back(a.adjoint());
    mats.push_back(seq.b(k));
  }
  CommutingResult out;
  for (std::size_t i = 0; i < mats.size(); ++i)
    for (std::size_t k = i + 1; k < mats.size(); ++k)
      out.max_commutator = std::max(out.max_commutator, spectral_norm(mats[i] * mats[k] - mats[k] * mats[i]));
  out.commutes = out.max_commutator <= kCommuteTol;
  return out;
}

/// Factors (1 - gamma/||A_k||) for k = n0..upto.
class ProductProfile {
 public:
  ProductProfile(double gamma, int n0, std::vector<double> factors)
      : gamma_(gamma), n0_(n0), factors_(std::move(factors)) {
    log_prefix_.assign(factors_.size() + 1, 0.0);
    for (std::size_t i = 0; i < factors_.size(); ++i) log_prefix_[i + 1] = log_prefix_[i] + std::log(factors_[i]);
  }

  double gamma() const noexcept { return gamma_; }
  int n0() const noexcept { return n0_; }
  int upto() const noexcept { return n0_ + int(factors_.size()) - 1; }
  const std::vector<double>& factors() const noexcept { return factors_; }
  double factor(int k) const { return factors_.at(k - n0_); }

  /// log of prod_{k = max(min(m,j), n0)}^{max(m,j)-1} (1 - gamma/||A_k||)
  double log_window(int m, int j) const {
    if (m < 1 || j < 1) throw DomainError("window indices must be >= 1");
    const int hi = std::max(m, j) - 1;
    if (hi > upto()) throw DomainError("window exceeds product profile length");
    const int lo = std::max(std::min(m, j), n0_);
    if (hi < lo) return 0.0;
    return log_prefix_[hi - n0_ + 1] - log_prefix_[lo - n0_];
  }

 private:
  double gamma_;
  int n0_;
  std::vector<double> factors_;
  std::vector<double> log_prefix_;
};

inline ProductProfile product_profile(double gamma, const EntrySequence& seq, int upto) {
  if (upto < 1) throw DomainError("profile length must be >= 1");
  if (!(gamma > 0.0)) throw DomainError("gamma must be > 0");
  std::vector<double> u(upto);
  for (int k = 1; k <= upto; ++k) {
    const double a = seq.a_norm(k);
    u[k - 1] = a > 0.0 ? gamma / a : INFINITY;
  }
  int n0 = upto + 1;
  while (n0 > 1 && u[n0 - 2] < 1.0) --n0;
  if (n0 > upto)
    throw PreconditionError("no n0 on [1, " + std::to_string(upto) + "]: gamma/||A_k|| >= 1 at the end of the range");
  std::vector<double> factors;
  factors.reserve(upto - n0 + 1);
  for (int k = n0; k <= upto; ++k) factors.push_back(1.0 - u[k - 1]);
  return ProductProfile(gamma, n0, std::move(factors));
}

struct DiscreteEnvelope {
  double value = 1.0;
  int n0 = 1;
};

inline DiscreteEnvelope discrete_envelope(const ProductProfile& profile, int m, int j) {
  return {std::exp(profile.log_window(m, j)), profile.n0()};
}

inline DiscreteEnvelope discrete_envelope(const DecayRate& rate, const EntrySequence& seq, int m, int j) {
  const int upto = std::max(std::max(m, j) - 1, 1);
  return discrete_envelope(product_profile(rate.gamma, seq, upto), m, j);
}

/// Experimental, no bound attached: chronological product of (I - gamma |A_k|^{-1})
/// over the window, later indices multiplied on the left.
inline CMatrix ordered_product_envelope(const DecayRate& rate, const EntrySequence& seq, int m, int j) {
  if (m < 1 || j < 1) throw DomainError("window indices must be >= 1");
  const int d = seq.dim();
  CMatrix out = CMatrix::Identity(d, d);
  for (int k = std::min(m, j); k <= std::max(m, j) - 1; ++k) {
    const CMatrix inv = hermitian_function(modulus(seq.a(k)), [k](double x) -> double {
      if (!(x > 0.0)) throw SingularityError("|A_" + std::to_string(k) + "| is singular");
      return 1.0 / x;
    });
    out = (CMatrix::Identity(d, d) - rate.gamma * inv) * out;
  }
  return out;
}

}  // namespace bjdecay
