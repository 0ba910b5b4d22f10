#pragma once

// Entry sequences (A_n, B_n) of a block Jacobi operator and their finite
// sections. Indices are 1-based throughout, matching the block numbering of
// the operator: the truncation to N blocks keeps B_1..B_N and A_1..A_{N-1}.

#include <cmath>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "bjdecay/core.hpp"

namespace bjdecay {

/// Hermiticity tolerance enforced on every produced B_n.
inline constexpr double kHermitianTol = 1e-12;

/// Scalar coefficient rule n -> value used by the parametrised families.
struct ScalarRule {
  enum class Kind { Constant, Linear, Power, Geometric };
  Kind kind = Kind::Constant;
  double p = 0.0;  // value | slope | coefficient | coefficient
  double q = 0.0;  // -     | intercept | exponent | base

  static ScalarRule constant(double v) { return {Kind::Constant, v, 0.0}; }
  static ScalarRule linear(double slope, double intercept) { return {Kind::Linear, slope, intercept}; }
  static ScalarRule power(double coef, double exponent) { return {Kind::Power, coef, exponent}; }
  static ScalarRule geometric(double coef, double base) { return {Kind::Geometric, coef, base}; }

  double operator()(int n) const {
    switch (kind) {
      case Kind::Constant: return p;
      case Kind::Linear: return p * n + q;
      case Kind::Power: return p * std::pow(double(n), q);
      case Kind::Geometric: return p * std::pow(q, double(n));
    }
    return NAN;
  }
};

struct BlockPair {
  CMatrix a;
  CMatrix b;
};

// Family descriptors.
struct ExplicitFamily {};
struct ConstantFamily {
  CMatrix a, b;
};
/// A_n = [[eps_n, lambda_n], [0, eps_n]], B_n = 0, d = 2.
struct Example1Family {
  ScalarRule lambda = ScalarRule::linear(1.0, 0.0);
  ScalarRule epsilon = ScalarRule::constant(0.0);
};
/// A_n = [[1, x], [0, 1]], B_n = 0, d = 2.
struct Example2Family {
  double x = 3.0;
};
/// A_n = (n^alpha + c_n) [[1, x], [0, 1]] with c_odd = c1, c_even = c2, B_n = 0.
struct Example3Family {
  double x = 0.0;
  double alpha = 0.75;
  double c1 = 0.0;
  double c2 = 1.0;
};
/// A_n = diag(a_i(n)), B_n = diag(b_i(n)).
struct DiagonalFamily {
  std::vector<ScalarRule> a, b;
};

using FamilyParams =
    std::variant<ExplicitFamily, ConstantFamily, Example1Family, Example2Family, Example3Family, DiagonalFamily>;

/// Per-index replacement of A_n and/or B_n for n <= prefix length.
struct EntryOverride {
  std::optional<CMatrix> a;
  std::optional<CMatrix> b;
};

/// Full description of an entry sequence; input to build_sequence.
struct SequenceSpec {
  int dim = 2;
  FamilyParams family = Example2Family{};
  std::vector<EntryOverride> prefix;
  std::optional<BlockPair> tail;
};

inline std::string family_name(const FamilyParams& f) {
  struct {
    std::string operator()(const ExplicitFamily&) const { return "explicit"; }
    std::string operator()(const ConstantFamily&) const { return "constant"; }
    std::string operator()(const Example1Family&) const { return "example1"; }
    std::string operator()(const Example2Family&) const { return "example2"; }
    std::string operator()(const Example3Family&) const { return "example3"; }
    std::string operator()(const DiagonalFamily&) const { return "diagonal"; }
  } visitor;
  return std::visit(visitor, f);
}

inline CMatrix example2_block(double x) {
  CMatrix a(2, 2);
  a << 1.0, x, 0.0, 1.0;
  return a;
}

/// Deterministic rule n -> (A_n, B_n). Immutable after construction.
class EntrySequence {
 public:
  explicit EntrySequence(SequenceSpec spec) : spec_(std::move(spec)), dim_(spec_.dim) { validate(); }

  int dim() const noexcept { return dim_.value(); }
  const SequenceSpec& spec() const noexcept { return spec_; }
  const FamilyParams& family() const noexcept { return spec_.family; }
  std::string name() const { return family_name(spec_.family); }

  CMatrix a(int n) const {
    check_index(n);
    if (n <= int(spec_.prefix.size()) && spec_.prefix[n - 1].a) return *spec_.prefix[n - 1].a;
    return base_a(n);
  }

  CMatrix b(int n) const {
    check_index(n);
    CMatrix out = (n <= int(spec_.prefix.size()) && spec_.prefix[n - 1].b) ? *spec_.prefix[n - 1].b : base_b(n);
    if (!all_finite(out)) throw DomainError("B_" + std::to_string(n) + " has non-finite entries");
    if (hermitian_defect(out) > kHermitianTol)
      throw DomainError("B_" + std::to_string(n) + " is not Hermitian (defect " +
                        std::to_string(hermitian_defect(out)) + ")");
    return out;
  }

  double a_norm(int n) const { return spectral_norm(a(n)); }

  /// Period-1 entries from index 1 on (no prefix overrides).
  bool is_constant() const {
    if (!spec_.prefix.empty()) return false;
    return std::holds_alternative<ConstantFamily>(spec_.family) ||
           std::holds_alternative<Example2Family>(spec_.family);
  }

  /// Constant (A, B) the sequence settles to after its prefix, if any.
  std::optional<BlockPair> constant_tail() const {
    if (auto* c = std::get_if<ConstantFamily>(&spec_.family)) return BlockPair{c->a, c->b};
    if (auto* e = std::get_if<Example2Family>(&spec_.family))
      return BlockPair{example2_block(e->x), CMatrix::Zero(2, 2)};
    if (std::holds_alternative<ExplicitFamily>(spec_.family)) return spec_.tail;
    return std::nullopt;
  }

 private:
  void check_index(int n) const {
    if (n < 1) throw DomainError("block index must be >= 1, got " + std::to_string(n));
  }

  CMatrix base_a(int n) const {
    const int d = dim();
    return std::visit(
        [&](const auto& f) -> CMatrix {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, ExplicitFamily>) {
            if (!spec_.tail) throw DomainError("explicit sequence has no entry A_" + std::to_string(n));
            return spec_.tail->a;
          } else if constexpr (std::is_same_v<T, ConstantFamily>) {
            return f.a;
          } else if constexpr (std::is_same_v<T, Example1Family>) {
            const double e = f.epsilon(n);
            CMatrix a(2, 2);
            a << e, f.lambda(n), 0.0, e;
            return a;
          } else if constexpr (std::is_same_v<T, Example2Family>) {
            return example2_block(f.x);
          } else if constexpr (std::is_same_v<T, Example3Family>) {
            const double c = (n % 2 == 1) ? f.c1 : f.c2;
            return (std::pow(double(n), f.alpha) + c) * example2_block(f.x);
          } else {
            CMatrix a = CMatrix::Zero(d, d);
            for (int i = 0; i < d; ++i) a(i, i) = f.a[i](n);
            return a;
          }
        },
        spec_.family);
  }

  CMatrix base_b(int n) const {
    const int d = dim();
    if (auto* c = std::get_if<ConstantFamily>(&spec_.family)) return c->b;
    if (auto* g = std::get_if<DiagonalFamily>(&spec_.family)) {
      CMatrix b = CMatrix::Zero(d, d);
      for (int i = 0; i < d; ++i) b(i, i) = g->b[i](n);
      return b;
    }
    if (std::holds_alternative<ExplicitFamily>(spec_.family)) {
      if (!spec_.tail) throw DomainError("explicit sequence has no entry B_" + std::to_string(n));
      return spec_.tail->b;
    }
    return CMatrix::Zero(d, d);
  }

  void require_shape(const CMatrix& m, const std::string& what) const {
    if (m.rows() != dim() || m.cols() != dim())
      throw DomainError(what + " must be " + std::to_string(dim()) + "x" + std::to_string(dim()));
    if (!all_finite(m)) throw DomainError(what + " has non-finite entries");
  }

  void validate() const {
    const int d = dim();
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, ExplicitFamily>) {
            for (std::size_t i = 0; i < spec_.prefix.size(); ++i)
              if (!spec_.prefix[i].a || !spec_.prefix[i].b)
                throw DomainError("explicit family requires both A and B in prefix entry " + std::to_string(i + 1));
          } else if constexpr (std::is_same_v<T, ConstantFamily>) {
            require_shape(f.a, "constant A");
            require_shape(f.b, "constant B");
            if (hermitian_defect(f.b) > kHermitianTol) throw DomainError("constant B is not Hermitian");
          } else if constexpr (std::is_same_v<T, Example1Family>) {
            if (d != 2) throw DomainError("example1 requires dim 2");
          } else if constexpr (std::is_same_v<T, Example2Family>) {
            if (d != 2) throw DomainError("example2 requires dim 2");
            if (!std::isfinite(f.x)) throw DomainError("example2 requires a finite real x");
          } else if constexpr (std::is_same_v<T, Example3Family>) {
            if (d != 2) throw DomainError("example3 requires dim 2");
            if (!(f.alpha > 0.5 && f.alpha < 1.0)) throw DomainError("example3 requires alpha in (1/2, 1)");
            if (!(std::abs(f.x) < 2.0)) throw DomainError("example3 requires |x| < 2");
            if (!std::isfinite(f.c1) || !std::isfinite(f.c2)) throw DomainError("example3 requires finite c1, c2");
          } else {
            if (int(f.a.size()) != d || int(f.b.size()) != d)
              throw DomainError("diagonal family needs one rule per diagonal entry for A and B");
          }
        },
        spec_.family);
    for (std::size_t i = 0; i < spec_.prefix.size(); ++i) {
      const auto& o = spec_.prefix[i];
      if (o.a) require_shape(*o.a, "prefix A_" + std::to_string(i + 1));
      if (o.b) {
        require_shape(*o.b, "prefix B_" + std::to_string(i + 1));
        if (hermitian_defect(*o.b) > kHermitianTol)
          throw DomainError("prefix B_" + std::to_string(i + 1) + " is not Hermitian");
      }
    }
    if (spec_.tail) {
      require_shape(spec_.tail->a, "tail A");
      require_shape(spec_.tail->b, "tail B");
    }
  }

  SequenceSpec spec_;
  BlockDim dim_;
};

inline EntrySequence build_sequence(SequenceSpec spec) { return EntrySequence(std::move(spec)); }

// Convenience constructors for the named families.
inline EntrySequence example2_sequence(double x) { return build_sequence({2, Example2Family{x}, {}, {}}); }
inline EntrySequence example3_sequence(double x, double alpha, double c1, double c2) {
  return build_sequence({2, Example3Family{x, alpha, c1, c2}, {}, {}});
}
inline EntrySequence example1_sequence(ScalarRule lambda, ScalarRule epsilon) {
  return build_sequence({2, Example1Family{lambda, epsilon}, {}, {}});
}
inline EntrySequence constant_sequence(CMatrix a, CMatrix b) {
  const int d = int(a.rows());
  return build_sequence({d, ConstantFamily{std::move(a), std::move(b)}, {}, {}});
}
inline EntrySequence diagonal_sequence(std::vector<ScalarRule> a, std::vector<ScalarRule> b) {
  const int d = int(a.size());
  return build_sequence({d, DiagonalFamily{std::move(a), std::move(b)}, {}, {}});
}

/// Copy of seq with B_n replaced for the given indices.
inline EntrySequence with_b_override(const EntrySequence& seq, int n, const CMatrix& b) {
  SequenceSpec spec = seq.spec();
  if (int(spec.prefix.size()) < n) spec.prefix.resize(n);
  spec.prefix[n - 1].b = b;
  return build_sequence(std::move(spec));
}

/// N-block section of the operator. Stores only the nonzero blocks.
class TruncatedOperator {
 public:
  TruncatedOperator(int n_blocks, int d, std::vector<CMatrix> diag, std::vector<CMatrix> upper)
      : n_(n_blocks), d_(d), diag_(std::move(diag)), upper_(std::move(upper)) {}

  int blocks() const noexcept { return n_; }
  int dim() const noexcept { return d_; }
  int size() const noexcept { return n_ * d_; }

  /// B_k, 1-based.
  const CMatrix& diag(int k) const { return diag_.at(k - 1); }
  /// A_k, 1-based, k <= N-1.
  const CMatrix& upper(int k) const { return upper_.at(k - 1); }

  /// Block (i, j), zero outside the tridiagonal band.
  CMatrix block(int i, int j) const {
    if (i == j) return diag(i);
    if (j == i + 1) return upper(i);
    if (i == j + 1) return upper(j).adjoint();
    return CMatrix::Zero(d_, d_);
  }

  CMatrix dense() const {
    CMatrix m = CMatrix::Zero(size(), size());
    for (int k = 1; k <= n_; ++k) {
      m.block((k - 1) * d_, (k - 1) * d_, d_, d_) = diag(k);
      if (k < n_) {
        m.block((k - 1) * d_, k * d_, d_, d_) = upper(k);
        m.block(k * d_, (k - 1) * d_, d_, d_) = upper(k).adjoint();
      }
    }
    return m;
  }

  CVector apply(const CVector& u) const {
    CVector out = CVector::Zero(size());
    for (int k = 1; k <= n_; ++k) {
      const auto uk = u.segment((k - 1) * d_, d_);
      out.segment((k - 1) * d_, d_) += diag(k) * uk;
      if (k < n_) {
        out.segment((k - 1) * d_, d_) += upper(k) * u.segment(k * d_, d_);
        out.segment(k * d_, d_) += upper(k).adjoint() * uk;
      }
    }
    return out;
  }

  /// Max absolute row sum; bounds the spectral norm from above.
  double inf_norm() const {
    double best = 0.0;
    for (int k = 1; k <= n_; ++k) {
      for (int r = 0; r < d_; ++r) {
        double s = diag(k).row(r).cwiseAbs().sum();
        if (k < n_) s += upper(k).row(r).cwiseAbs().sum();
        if (k > 1) s += upper(k - 1).adjoint().row(r).cwiseAbs().sum();
        best = std::max(best, s);
      }
    }
    return best;
  }

 private:
  int n_, d_;
  std::vector<CMatrix> diag_;
  std::vector<CMatrix> upper_;
};

inline TruncatedOperator assemble_truncation(const EntrySequence& seq, int n_blocks) {
  if (n_blocks < 2) throw DomainError("truncation needs N >= 2 blocks");
  std::vector<CMatrix> diag, upper;
  diag.reserve(n_blocks);
  upper.reserve(n_blocks - 1);
  for (int k = 1; k <= n_blocks; ++k) {
    diag.push_back(seq.b(k));
    if (k < n_blocks) upper.push_back(seq.a(k));
  }
  return TruncatedOperator(n_blocks, seq.dim(), std::move(diag), std::move(upper));
}

enum class CarlemanVerdict { DivergentLooking, Inconclusive };

struct CarlemanDiagnostic {
  double partial_sum = 0.0;
  double second_half_sum = 0.0;
  CarlemanVerdict verdict = CarlemanVerdict::Inconclusive;
};

/// Advisory only: partial sum of 1/||A_k|| up to the horizon. The series looks
/// divergent when its second half still carries at least 5% of the total.
inline CarlemanDiagnostic carleman_check(const EntrySequence& seq, int horizon) {
  if (horizon < 1) throw DomainError("carleman horizon must be >= 1");
  CarlemanDiagnostic out;
  const int half = horizon / 2;
  for (int k = 1; k <= horizon; ++k) {
    const double nrm = seq.a_norm(k);
    const double term = nrm == 0.0 ? INFINITY : 1.0 / nrm;
    out.partial_sum += term;
    if (k > half) out.second_half_sum += term;
  }
  if (std::isinf(out.partial_sum) || out.second_half_sum >= 0.05 * out.partial_sum)
    out.verdict = CarlemanVerdict::DivergentLooking;
  return out;
}

}  // namespace bjdecay
