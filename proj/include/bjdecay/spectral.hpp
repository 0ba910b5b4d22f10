#pragma once

// Truncated spectra, symbol (Bloch) spectra of periodic sections, gap
// detection, Green blocks G_mj(zeta) = P_m (J_N - zeta)^{-1} P_j and
// eigenpairs inside a gap.

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bjdecay/boundfns.hpp"
#include "bjdecay/core.hpp"
#include "bjdecay/lapack.hpp"
#include "bjdecay/operator.hpp"

namespace bjdecay {

enum class SpectrumMethod { Truncation, Symbol };

struct SpectrumEstimate {
  SpectrumMethod method = SpectrumMethod::Truncation;
  std::vector<double> samples;  // ascending
  int resolution = 0;           // N (blocks) or theta-grid size

  // Symbol method only: the periodic cell and, per sample, where it came from.
  CMatrix symbol_a, symbol_b;
  std::vector<double> theta;
  std::vector<int> branch;  // index into the ascending eigenvalues of the symbol at theta
};

namespace detail {

inline lapack::HermitianBand hermitian_band(const TruncatedOperator& op) {
  const int d = op.dim();
  const int kd = op.blocks() > 1 ? 2 * d - 1 : d - 1;
  lapack::HermitianBand band(op.size(), kd);
  for (int k = 1; k <= op.blocks(); ++k) {
    const int o = (k - 1) * d;
    const CMatrix& b = op.diag(k);
    for (int c = 0; c < d; ++c)
      for (int r = 0; r <= c; ++r) band.upper(o + r, o + c) = b(r, c);
    if (k < op.blocks()) {
      const CMatrix& a = op.upper(k);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) band.upper(o + r, o + d + c) = a(r, c);
    }
  }
  return band;
}

}  // namespace detail

struct TruncatedEigensystem {
  Eigen::VectorXd values;  // ascending
  CMatrix vectors;         // unit columns
  double max_residual = 0.0;
};

/// All N*d eigenpairs of the truncation; residual ||J v - lambda v|| <= 1e-8 ||J|| per pair.
inline TruncatedEigensystem truncated_eigensystem(const TruncatedOperator& op) {
  const lapack::BandEigen be = detail::hermitian_band(op).solve(true);
  TruncatedEigensystem out{be.values, be.vectors, 0.0};
  const double jn = std::max(op.inf_norm(), 1e-300);
  for (int i = 0; i < out.values.size(); ++i) {
    const CVector v = out.vectors.col(i);
    out.max_residual = std::max(out.max_residual, (op.apply(v) - out.values(i) * v).norm());
  }
  if (out.max_residual > 1e-8 * jn)
    throw NumericalError("eigenpair residual " + std::to_string(out.max_residual) + " exceeds 1e-8 ||J||");
  return out;
}

inline SpectrumEstimate truncated_spectrum(const TruncatedOperator& op) {
  const TruncatedEigensystem es = truncated_eigensystem(op);
  SpectrumEstimate out;
  out.method = SpectrumMethod::Truncation;
  out.resolution = op.blocks();
  out.samples.assign(es.values.data(), es.values.data() + es.values.size());
  return out;
}

/// Ascending eigenvalues of e^{i theta} A + e^{-i theta} A^* + B.
inline Eigen::VectorXd symbol_eigenvalues(const CMatrix& a, const CMatrix& b, double theta) {
  const Complex z = std::polar(1.0, theta);
  CMatrix s = z * a + std::conj(z) * a.adjoint() + b;
  s = 0.5 * (s + s.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(s, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("symbol eigensolve failed");
  return es.eigenvalues();
}

/// Union of symbol eigenvalues over a uniform grid of theta in [0, 2 pi).
inline SpectrumEstimate symbol_spectrum(const CMatrix& a, const CMatrix& b, int grid_size) {
  if (grid_size < 1) throw DomainError("symbol grid needs >= 1 point");
  if (a.rows() != a.cols() || b.rows() != a.rows() || b.cols() != a.cols())
    throw DomainError("symbol blocks must be square and of equal size");
  if (hermitian_defect(b) > kHermitianTol) throw DomainError("symbol B must be Hermitian");
  struct Sample {
    double value, theta;
    int branch;
  };
  std::vector<Sample> all;
  all.reserve(std::size_t(grid_size) * a.rows());
  for (int g = 0; g < grid_size; ++g) {
    const double theta = 2.0 * std::numbers::pi * g / grid_size;
    const Eigen::VectorXd ev = symbol_eigenvalues(a, b, theta);
    for (int i = 0; i < ev.size(); ++i) all.push_back({ev(i), theta, i});
  }
  std::stable_sort(all.begin(), all.end(), [](const Sample& x, const Sample& y) { return x.value < y.value; });
  SpectrumEstimate out;
  out.method = SpectrumMethod::Symbol;
  out.resolution = grid_size;
  out.symbol_a = a;
  out.symbol_b = b;
  for (const Sample& s : all) {
    out.samples.push_back(s.value);
    out.theta.push_back(s.theta);
    out.branch.push_back(s.branch);
  }
  return out;
}

/// Period-2 entries (A1, B1), (A2, B2) folded into one 2d-block cell. Exact for
/// period-2 operators; an approximation for slowly varying ones frozen at some n.
inline SpectrumEstimate symbol_spectrum_period2(const CMatrix& a1, const CMatrix& b1, const CMatrix& a2,
                                                const CMatrix& b2, int grid_size) {
  const Eigen::Index d = a1.rows();
  CMatrix big_b = CMatrix::Zero(2 * d, 2 * d);
  big_b.topLeftCorner(d, d) = b1;
  big_b.topRightCorner(d, d) = a1;
  big_b.bottomLeftCorner(d, d) = a1.adjoint();
  big_b.bottomRightCorner(d, d) = b2;
  CMatrix big_a = CMatrix::Zero(2 * d, 2 * d);
  big_a.bottomLeftCorner(d, d) = a2;
  return symbol_spectrum(big_a, big_b, grid_size);
}

namespace detail {

/// Maximises f on [lo, hi] (unimodal near the grid optimum).
template <typename F>
double golden_max(F&& f, double lo, double hi, double tol = 1e-12) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  double best = std::max({f(lo), f(hi), f1, f2});
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = f(x1);
    }
    best = std::max({best, f1, f2});
  }
  return best;
}

}  // namespace detail

/// Maximal open intervals between consecutive samples longer than tol, longest first.
/// Symbol-based endpoints are refined by golden section on the branch functions.
inline std::vector<GapInterval> detect_gap(const SpectrumEstimate& est, double tol) {
  if (est.samples.size() < 2) throw DomainError("detect_gap needs at least two samples");
  if (!(tol >= 0.0)) throw DomainError("gap tolerance must be >= 0");
  const bool refine = est.method == SpectrumMethod::Symbol && est.theta.size() == est.samples.size();
  const double h = refine ? 2.0 * std::numbers::pi / est.resolution : 0.0;

  // Symbol branches are continuous in theta: a branch whose values at neighbouring grid points
  // lie on both sides of a candidate gap crosses it, so the candidate is a sampling artefact.
  std::vector<std::pair<double, double>> spans;  // (lo, hi) per branch per grid step, sorted by lo
  std::vector<double> reach;                      // running max of hi
  if (refine) {
    const int g_n = est.resolution;
    std::vector<Eigen::VectorXd> curve(g_n);
    for (int g = 0; g < g_n; ++g)
      curve[g] = symbol_eigenvalues(est.symbol_a, est.symbol_b, 2.0 * std::numbers::pi * g / g_n);
    for (int g = 0; g < g_n; ++g)
      for (Eigen::Index b = 0; b < curve[g].size(); ++b) {
        const double u = curve[g](b), v = curve[(g + 1) % g_n](b);
        spans.emplace_back(std::min(u, v), std::max(u, v));
      }
    std::sort(spans.begin(), spans.end());
    for (const auto& sp : spans) reach.push_back(reach.empty() ? sp.second : std::max(reach.back(), sp.second));
  }
  const auto crossed = [&](double r, double s) {
    auto it = std::upper_bound(spans.begin(), spans.end(), std::make_pair(r, double(INFINITY)));
    if (it == spans.begin()) return false;
    return reach[std::size_t(it - spans.begin()) - 1] >= s;
  };

  std::vector<GapInterval> gaps;
  for (std::size_t i = 0; i + 1 < est.samples.size(); ++i) {
    double r = est.samples[i], s = est.samples[i + 1];
    if (!(s - r > tol)) continue;
    if (refine) {
      if (crossed(r, s)) continue;
      const int br = est.branch[i], bs = est.branch[i + 1];
      const double tr = est.theta[i], ts = est.theta[i + 1];
      const double r_ref = detail::golden_max(
          [&](double t) { return symbol_eigenvalues(est.symbol_a, est.symbol_b, t)(br); }, tr - h, tr + h);
      const double s_ref = -detail::golden_max(
          [&](double t) { return -symbol_eigenvalues(est.symbol_a, est.symbol_b, t)(bs); }, ts - h, ts + h);
      if (!(r_ref < s_ref)) continue;
      r = std::max(r, r_ref);
      s = std::min(s, s_ref);
      if (!(s - r > tol)) continue;
    }
    gaps.emplace_back(r, s);
  }
  std::stable_sort(gaps.begin(), gaps.end(),
                   [](const GapInterval& x, const GapInterval& y) { return x.width() > y.width(); });
  return gaps;
}

/// One-sided Hausdorff distance sup_{x in from} dist(x, to); `to` ascending.
inline double one_sided_hausdorff(const std::vector<double>& from, const std::vector<double>& to) {
  if (to.empty()) throw DomainError("hausdorff target set is empty");
  double worst = 0.0;
  for (double x : from) {
    auto it = std::lower_bound(to.begin(), to.end(), x);
    double d = INFINITY;
    if (it != to.end()) d = std::min(d, *it - x);
    if (it != to.begin()) d = std::min(d, x - *std::prev(it));
    worst = std::max(worst, d);
  }
  return worst;
}

struct GreenEntry {
  CMatrix block;
  double norm = 0.0;
};

struct GreenTable {
  SpectralPoint zeta{0.0};
  std::map<std::pair<int, int>, GreenEntry> entries;
  bool ill_conditioned = false;
  double rcond = 0.0;

  bool contains(int m, int j) const { return entries.count({m, j}) != 0; }
  const GreenEntry& at(int m, int j) const {
    auto it = entries.find({m, j});
    if (it == entries.end()) throw DomainError("Green block (" + std::to_string(m) + ", " + std::to_string(j) + ") not computed");
    return it->second;
  }
  double norm(int m, int j) const { return at(m, j).norm; }
};

/// Threshold on the estimated ||(J_N - zeta)^{-1}||_1 above which zeta counts as an eigenvalue.
inline constexpr double kSingularInverseNorm = 1e8;
inline constexpr double kIllConditioned = 1e12;

/// One banded LU of J_N - zeta, reused for any number of block columns.
class GreenSolver {
 public:
  GreenSolver(const TruncatedOperator& op, const SpectralPoint& zeta)
      : n_blocks_(op.blocks()), d_(op.dim()), zeta_(zeta), lu_(op.size(), band(op), band(op)) {
    const int d = d_;
    for (int k = 1; k <= n_blocks_; ++k) {
      const int o = (k - 1) * d;
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
          lu_.at(o + r, o + c) = op.diag(k)(r, c) - (r == c ? zeta.value() : Complex(0.0));
          if (k < n_blocks_) {
            lu_.at(o + r, o + d + c) = op.upper(k)(r, c);
            lu_.at(o + d + c, o + r) = std::conj(op.upper(k)(r, c));
          }
        }
    }
    const int info = lu_.factor();
    if (info > 0) throw SingularityError("J_N - zeta is exactly singular (zero pivot " + std::to_string(info) + ")");
    if (info < 0) throw NumericalError("zgbtrf argument error " + std::to_string(info));
    rcond_ = lu_.rcond();
    const double inv_norm = rcond_ > 0.0 ? 1.0 / (rcond_ * lu_.anorm()) : INFINITY;
    if (!(inv_norm <= kSingularInverseNorm)) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "zeta = (%.6g, %.6g) is within tolerance of a truncation eigenvalue (||(J-zeta)^-1|| ~ %.3g)",
                    zeta.re(), zeta.im(), inv_norm);
      throw SingularityError(buf);
    }
  }

  int blocks() const noexcept { return n_blocks_; }
  int dim() const noexcept { return d_; }
  const SpectralPoint& zeta() const noexcept { return zeta_; }
  double rcond() const noexcept { return rcond_; }
  bool ill_conditioned() const noexcept { return rcond_ < 1.0 / kIllConditioned; }

  /// Block columns P_j of the resolvent for the listed j, stacked side by side (size N d x d |cols|).
  CMatrix columns(const std::vector<int>& cols) const {
    CMatrix rhs = CMatrix::Zero(Eigen::Index(n_blocks_) * d_, Eigen::Index(cols.size()) * d_);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      check(cols[c]);
      for (int i = 0; i < d_; ++i) rhs((cols[c] - 1) * d_ + i, Eigen::Index(c) * d_ + i) = 1.0;
    }
    lu_.solve(rhs);
    return rhs;
  }

 private:
  static int band(const TruncatedOperator& op) { return op.blocks() > 1 ? 2 * op.dim() - 1 : op.dim() - 1; }
  void check(int k) const {
    if (k < 1 || k > n_blocks_) throw DomainError("block index " + std::to_string(k) + " outside [1, N]");
  }

  int n_blocks_, d_;
  SpectralPoint zeta_;
  lapack::BandLU lu_;
  double rcond_ = 0.0;
};

inline GreenTable green_block(const GreenSolver& solver, const std::vector<int>& rows, const std::vector<int>& cols) {
  const int d = solver.dim();
  for (int m : rows)
    if (m < 1 || m > solver.blocks()) throw DomainError("row block " + std::to_string(m) + " outside [1, N]");
  GreenTable table;
  table.zeta = solver.zeta();
  table.rcond = solver.rcond();
  table.ill_conditioned = solver.ill_conditioned();
  const CMatrix x = solver.columns(cols);
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (int m : rows) {
      GreenEntry e;
      e.block = x.block(Eigen::Index(m - 1) * d, Eigen::Index(c) * d, d, d);
      e.norm = spectral_norm(e.block);
      table.entries[{m, cols[c]}] = std::move(e);
    }
  return table;
}

inline GreenTable green_block(const TruncatedOperator& op, const SpectralPoint& zeta, const std::vector<int>& rows,
                              const std::vector<int>& cols) {
  return green_block(GreenSolver(op, zeta), rows, cols);
}

inline std::vector<int> index_range(int lo, int hi) {
  std::vector<int> out;
  for (int k = lo; k <= hi; ++k) out.push_back(k);
  return out;
}

struct EigenpairInGap {
  double zeta = 0.0;
  std::vector<CVector> blocks;  // u_1 .. u_N, sum of squared norms = 1
  double residual = 0.0;
  double tail_weight = 0.0;  // squared norm carried by the last 10% of blocks

  std::vector<double> block_norms() const {
    std::vector<double> out;
    out.reserve(blocks.size());
    for (const auto& b : blocks) out.push_back(b.norm());
    return out;
  }
};

inline constexpr double kGapMarginFraction = 0.02;
inline constexpr double kDriftTol = 1e-6;
inline constexpr double kTailWeightTol = 1e-6;
inline constexpr double kClusterTol = 1e-9;

namespace detail {

inline double tail_weight(const CVector& v, int n_blocks, int d) {
  const int first = n_blocks - std::max(1, n_blocks / 10);
  return v.tail(Eigen::Index(n_blocks - first) * d).squaredNorm();
}

}  // namespace detail

/// Eigenpairs of J_N strictly inside (r + margin, s - margin), margin = 2% of the gap width.
/// Numerically degenerate clusters are rotated so that each vector has a definite tail weight.
inline std::vector<EigenpairInGap> gap_eigenpairs(const TruncatedOperator& op, const GapInterval& gap) {
  const double margin = kGapMarginFraction * gap.width();
  const double lo = gap.r() + margin, hi = gap.s() - margin;
  const TruncatedEigensystem es = truncated_eigensystem(op);
  const int n = op.blocks(), d = op.dim();

  std::vector<int> idx;
  for (int i = 0; i < es.values.size(); ++i)
    if (es.values(i) > lo && es.values(i) < hi) idx.push_back(i);

  std::vector<EigenpairInGap> out;
  for (std::size_t start = 0; start < idx.size();) {
    std::size_t stop = start + 1;
    while (stop < idx.size() && es.values(idx[stop]) - es.values(idx[stop - 1]) <= kClusterTol) ++stop;
    const int c = int(stop - start);
    CMatrix v(op.size(), c);
    for (int q = 0; q < c; ++q) v.col(q) = es.vectors.col(idx[start + q]);
    if (c > 1) {
      const int first = n - std::max(1, n / 10);
      const Eigen::Index t0 = Eigen::Index(first) * d;
      const CMatrix tail = v.bottomRows(op.size() - t0);
      CMatrix t = tail.adjoint() * tail;
      t = 0.5 * (t + t.adjoint());
      Eigen::SelfAdjointEigenSolver<CMatrix> rot(t);
      v = v * rot.eigenvectors();
    }
    for (int q = 0; q < c; ++q) {
      CVector u = v.col(q).normalized();
      Eigen::Index piv = 0;
      u.cwiseAbs().maxCoeff(&piv);
      u *= std::abs(u(piv)) / u(piv);
      EigenpairInGap p;
      p.zeta = es.values(idx[start + q]);
      p.residual = (op.apply(u) - p.zeta * u).norm();
      p.tail_weight = detail::tail_weight(u, n, d);
      for (int k = 0; k < n; ++k) p.blocks.push_back(u.segment(Eigen::Index(k) * d, d));
      out.push_back(std::move(p));
    }
    start = stop;
  }
  return out;
}

struct GapEigenResult {
  std::vector<EigenpairInGap> stable;    // at N
  std::vector<EigenpairInGap> partners;  // matching pairs at 2N
  std::vector<double> artifacts;         // eigenvalues rejected by the N-stability filter
};

/// N-stable eigenpairs: eigenvalue drift < 1e-6 between N and 2N and tail weight < 1e-6 at both sizes.
inline GapEigenResult eigenpairs_in_gap(const EntrySequence& seq, int n_blocks, const GapInterval& gap) {
  const auto small = gap_eigenpairs(assemble_truncation(seq, n_blocks), gap);
  const auto large = gap_eigenpairs(assemble_truncation(seq, 2 * n_blocks), gap);
  GapEigenResult out;
  for (const auto& p : small) {
    const EigenpairInGap* best = nullptr;
    for (const auto& q : large) {
      if (q.tail_weight >= kTailWeightTol) continue;
      if (!best || std::abs(q.zeta - p.zeta) < std::abs(best->zeta - p.zeta)) best = &q;
    }
    const bool ok = best && std::abs(best->zeta - p.zeta) < kDriftTol && p.tail_weight < kTailWeightTol;
    if (ok) {
      out.stable.push_back(p);
      out.partners.push_back(*best);
    } else {
      out.artifacts.push_back(p.zeta);
    }
  }
  return out;
}

}  // namespace bjdecay
