#pragma once

// Bound-versus-measurement experiments and their reports.
//
// Every experiment measures an empirical constant C_emp = max ratio of a
// computed quantity (Green block or eigenvector block norm) to its envelope, at
// N and at 2N. A run passes when all ratios are finite, C_emp moves by less
// than 5% between N and 2N, and the measured per-step decay is at least the
// envelope's.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bjdecay/boundfns.hpp"
#include "bjdecay/core.hpp"
#include "bjdecay/envelope.hpp"
#include "bjdecay/io.hpp"
#include "bjdecay/operator.hpp"
#include "bjdecay/spectral.hpp"
#include "bjdecay/transfer.hpp"

namespace bjdecay {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr double kStabilityTol = 0.05;     // relative C_emp change between N and 2N
inline constexpr int kFitSkipLow = 5;             // fit starts at j0 + 5
inline constexpr int kFitSkipHigh = 10;           // and stops at N - 10
inline constexpr double kResolvedFloor = 1e-12;   // eigenvector blocks below this are eigensolver noise
inline constexpr int kSymbolGrid = 4096;
inline constexpr double kSymbolGapTol = 1e-3;
inline constexpr double kTruncationGapTol = 0.2;
inline constexpr int kDirectionWindow = 50;

enum class ExperimentKind { Green, Eigenvector, Commuting, EdgeStudy };
enum class HarnessVariant { Continuous, Discrete, Simplified, Commuting };
enum class GapSource { Symbol, Truncation, Explicit };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Green: return "green";
    case ExperimentKind::Eigenvector: return "eigenvector";
    case ExperimentKind::Commuting: return "commuting";
    case ExperimentKind::EdgeStudy: return "edge-study";
  }
  return "?";
}

inline const char* to_string(HarnessVariant v) {
  switch (v) {
    case HarnessVariant::Continuous: return "continuous";
    case HarnessVariant::Discrete: return "discrete";
    case HarnessVariant::Simplified: return "simplified";
    case HarnessVariant::Commuting: return "commuting";
  }
  return "?";
}

inline HarnessVariant parse_variant(const std::string& s) {
  if (s == "continuous") return HarnessVariant::Continuous;
  if (s == "discrete") return HarnessVariant::Discrete;
  if (s == "simplified") return HarnessVariant::Simplified;
  if (s == "commuting") return HarnessVariant::Commuting;
  throw SchemaError("unknown variant '" + s + "' (continuous|discrete|simplified|commuting)");
}

struct ExperimentConfig {
  std::string name = "experiment";
  ExperimentKind kind = ExperimentKind::Green;
  SequenceSpec op;
  GapSource gap_source = GapSource::Symbol;
  std::optional<GapInterval> explicit_gap;
  std::vector<SpectralPoint> zetas{SpectralPoint(0.5)};
  std::optional<double> delta;  // empty: auto
  double epsilon = 0.25;
  double eta = 0.5;
  double epsilon_prime = 0.01;
  std::vector<HarnessVariant> variants{HarnessVariant::Continuous};
  int n = 300;
  int j0 = 1;
  std::optional<std::pair<int, int>> rows;
  double edge_x = 3.0;
  std::vector<double> edge_eps{1e-4, 1e-3, 1e-2};

  BoundParams params() const { return {delta.value_or(1.0), epsilon, eta}; }

  void validate() const {
    if (n < 4) throw SchemaError(name + ": N must be >= 4");
    if (j0 < 1 || j0 > n) throw SchemaError(name + ": j0 must lie in [1, N]");
    if (rows && (rows->first < 1 || rows->second > n || rows->first > rows->second))
      throw SchemaError(name + ": rows window must lie in [1, N]");
    if (delta && !(*delta > 0.0)) throw SchemaError(name + ": delta must be > 0 or \"auto\"");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw SchemaError(name + ": epsilon must lie in (0, 1/2)");
    if (!(eta > 0.0 && eta < 1.0)) throw SchemaError(name + ": eta must lie in (0, 1)");
    if (!(epsilon_prime > 0.0 && epsilon_prime < 0.5)) throw SchemaError(name + ": epsilon_prime must lie in (0, 1/2)");
    if (gap_source == GapSource::Explicit && !explicit_gap) throw SchemaError(name + ": explicit gap missing");
    if (variants.empty()) throw SchemaError(name + ": at least one variant required");
    if (kind == ExperimentKind::EdgeStudy)
      for (double e : edge_eps)
        if (!(e > 0.0 && e <= 0.01)) throw SchemaError(name + ": edge epsilons must lie in (0, 0.01]");
  }
};

struct RatioSample {
  int m = 0;
  int j = 0;
  double norm = 0.0;      // ||G_mj|| or ||u_m||
  double envelope = 0.0;  // scalar envelope (commuting: smallest eigenvalue of the inverse envelope)
  double ratio = 0.0;
};

struct ExperimentResult {
  std::string name;
  ExperimentKind kind = ExperimentKind::Green;
  HarnessVariant variant = HarnessVariant::Continuous;
  SpectralPoint zeta{0.0};
  int n = 0;
  std::optional<GapInterval> gap;
  std::optional<Branch> branch;
  double gamma = NAN;
  std::optional<double> delta;
  double c_emp = NAN;
  double c_emp_2n = NAN;
  double slope_measured = NAN;
  double slope_theoretical = NAN;
  bool ratios_finite = false;
  bool stable = false;
  bool pass = false;
  bool skipped = false;
  bool hypothesis_violated = false;
  bool ill_conditioned = false;
  std::optional<int> n0;
  std::optional<double> direction_factor;  // commuting: max operator/scalar exponent ratio
  std::vector<double> direction_c;         // commuting: per-direction C_emp
  std::optional<double> edge_epsilon;
  std::string error;
  std::string note;
  std::vector<RatioSample> samples;  // at N
};

/// Least-squares slope of y against x.
inline std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return NAN;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= double(n);
  my /= double(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : NAN;
}

inline bool relatively_close(double a, double b, double tol) {
  if (!std::isfinite(a) || !std::isfinite(b)) return false;
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 || std::abs(a - b) <= tol * scale;
}

/// Gap used by an experiment: explicit, or the detected gap containing `locate` (widest if none given).
inline GapInterval resolve_gap(const ExperimentConfig& cfg, const EntrySequence& seq, std::optional<double> locate) {
  if (cfg.gap_source == GapSource::Explicit) return *cfg.explicit_gap;
  std::vector<GapInterval> gaps;
  if (cfg.gap_source == GapSource::Symbol) {
    const auto tail = seq.constant_tail();
    if (!tail) throw PreconditionError("symbol gap needs a constant-entry tail; use gap \"truncation\" or [r, s]");
    gaps = detect_gap(symbol_spectrum(tail->a, tail->b, kSymbolGrid), kSymbolGapTol);
  } else {
    gaps = detect_gap(truncated_spectrum(assemble_truncation(seq, cfg.n)), kTruncationGapTol);
  }
  if (gaps.empty()) throw DomainError("no spectral gap detected");
  if (!locate) return gaps.front();
  for (const auto& g : gaps)
    if (g.contains(*locate)) return g;
  throw DomainError("Re zeta = " + std::to_string(*locate) + " is not inside any detected gap");
}

inline Variant rate_variant(HarnessVariant v) {
  switch (v) {
    case HarnessVariant::Discrete: return Variant::Discrete;
    case HarnessVariant::Simplified: return Variant::Simplified;
    default: return Variant::Continuous;
  }
}

/// Rate and delta (auto-delta maximises the exponent over norms of A_1..A_upto).
inline std::pair<DecayRate, std::optional<double>> choose_rate(const ExperimentConfig& cfg, HarnessVariant v,
                                                               const GapInterval& gap, const SpectralPoint& zeta,
                                                               const EntrySequence& seq, int upto) {
  if (v == HarnessVariant::Simplified) return {gamma_simplified(gap, zeta, cfg.epsilon_prime), std::nullopt};
  BoundParams p = cfg.params();
  if (!cfg.delta) {
    std::vector<double> norms;
    for (int k = 1; k <= upto; ++k) norms.push_back(seq.a_norm(k));
    p.delta = best_delta(p, gap, zeta, norms, rate_variant(v)).delta;
  }
  return {gamma_for(rate_variant(v), p, gap, zeta), p.delta};
}

/// Scalar envelope on windows inside [1, upto + 1] for the scalar variants.
class ScalarEnvelope {
 public:
  ScalarEnvelope(HarnessVariant v, const DecayRate& rate, std::optional<double> delta, const EntrySequence& seq,
                 int upto)
      : variant_(v), rate_(rate) {
    switch (v) {
      case HarnessVariant::Simplified: cumulative_.emplace(cumulative_reciprocal(seq, upto)); break;
      case HarnessVariant::Discrete: product_.emplace(product_profile(rate.gamma, seq, upto)); break;
      default: cumulative_.emplace(cumulative_phi(seq, *delta, upto)); break;
    }
  }

  double operator()(int m, int j) const {
    if (product_) return discrete_envelope(*product_, m, j).value;
    return scalar_envelope(rate_, *cumulative_, m, j);
  }
  double log_value(int m, int j) const {
    if (product_) return product_->log_window(m, j);
    return -rate_.gamma * cumulative_->window_sum(m, j);
  }
  std::optional<int> n0() const { return product_ ? std::optional<int>(product_->n0()) : std::nullopt; }

 private:
  HarnessVariant variant_;
  DecayRate rate_;
  std::optional<CumulativeProfile> cumulative_;
  std::optional<ProductProfile> product_;
};

namespace detail {

struct GreenPass {
  std::vector<RatioSample> samples;
  double c_emp = 0.0;
  bool finite = true;
  bool ill_conditioned = false;
  std::optional<int> n0;
  double slope_measured = NAN;
  double slope_theoretical = NAN;
  std::vector<double> direction_c;
  std::optional<double> direction_factor;
};

inline GreenPass green_pass(const ExperimentConfig& cfg, const EntrySequence& seq, HarnessVariant v,
                            const DecayRate& rate, std::optional<double> delta, const SpectralPoint& zeta, int n,
                            std::pair<int, int> rows) {
  GreenPass out;
  const TruncatedOperator op = assemble_truncation(seq, n);
  const GreenSolver solver(op, zeta);
  out.ill_conditioned = solver.ill_conditioned();
  const int j0 = cfg.j0;
  const GreenTable table = green_block(solver, index_range(rows.first, rows.second), {j0});
  const int upto = std::max(n - 1, 1);

  std::vector<double> fit_m, fit_g, fit_e;
  const int lo = j0 + kFitSkipLow, hi = n - kFitSkipHigh;

  if (v == HarnessVariant::Commuting) {
    const OperatorProfile prof = operator_profile(seq, *delta, upto);
    const int d = seq.dim();
    // Common eigenbasis of the envelopes; valid when the entries commute.
    const int far = std::min(n, j0 + kDirectionWindow);
    Eigen::SelfAdjointEigenSolver<CMatrix> basis(prof.window_sum(j0, std::max(far, j0 + 1)));
    const CMatrix dirs = basis.eigenvectors();
    out.direction_c.assign(d, 0.0);
    for (int m = rows.first; m <= rows.second; ++m) {
      const GreenEntry& g = table.at(m, j0);
      const CMatrix env = operator_envelope(rate, prof, m, j0);
      const CMatrix eg = env * g.block;
      const double ratio = spectral_norm(eg);
      Eigen::SelfAdjointEigenSolver<CMatrix> es(env, Eigen::EigenvaluesOnly);
      const double lam_min = es.eigenvalues()(0);
      out.samples.push_back({m, j0, g.norm, 1.0 / lam_min, ratio});
      out.c_emp = std::max(out.c_emp, ratio);
      out.finite = out.finite && std::isfinite(ratio);
      const CMatrix proj = dirs.adjoint() * eg;
      for (int i = 0; i < d; ++i) {
        const double r = proj.row(i).norm();
        out.direction_c[i] = std::max(out.direction_c[i], r);
        out.finite = out.finite && std::isfinite(r);
      }
      if (m >= lo && m <= hi && g.norm > 0.0) {
        fit_m.push_back(m);
        fit_g.push_back(std::log(g.norm));
        fit_e.push_back(-std::log(lam_min));
      }
    }
    // Direction-wise exponent against the scalar exponent on a window of fixed length.
    if (far > j0) {
      const CMatrix h = prof.window_sum(j0, far);
      Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
      const CumulativeProfile scalar = cumulative_phi(seq, *delta, upto);
      const double s = scalar.window_sum(j0, far);
      out.direction_factor = es.eigenvalues().maxCoeff() / s;
    }
  } else {
    const ScalarEnvelope env(v, rate, delta, seq, upto);
    out.n0 = env.n0();
    for (int m = rows.first; m <= rows.second; ++m) {
      const double g = table.norm(m, j0);
      const double e = env(m, j0);
      const double ratio = g / e;
      out.samples.push_back({m, j0, g, e, ratio});
      out.c_emp = std::max(out.c_emp, ratio);
      out.finite = out.finite && std::isfinite(ratio);
      if (m >= lo && m <= hi && g > 0.0) {
        fit_m.push_back(m);
        fit_g.push_back(std::log(g));
        fit_e.push_back(env.log_value(m, j0));
      }
    }
  }
  out.slope_measured = -fit_slope(fit_m, fit_g);
  out.slope_theoretical = -fit_slope(fit_m, fit_e);
  return out;
}

inline std::pair<int, int> rows_for(const ExperimentConfig& cfg, int n) {
  if (cfg.rows) return *cfg.rows;
  return {1, n};
}

template <typename F>
ExperimentResult guarded(ExperimentResult base, F&& body) {
  try {
    body(base);
  } catch (const Error& e) {
    base.error = e.what();
    base.pass = false;
  }
  return base;
}

}  // namespace detail

/// One (zeta, variant) Green experiment; commuting variant multiplies by the operator envelope.
inline ExperimentResult verify_green_bound(const ExperimentConfig& cfg, const SpectralPoint& zeta, HarnessVariant v) {
  ExperimentResult base;
  base.name = cfg.name;
  base.kind = cfg.kind;
  base.variant = v;
  base.zeta = zeta;
  base.n = cfg.n;
  return detail::guarded(base, [&](ExperimentResult& r) {
    cfg.validate();
    const EntrySequence seq = build_sequence(cfg.op);
    const GapInterval gap = resolve_gap(cfg, seq, zeta.re());
    r.gap = gap;
    if (v == HarnessVariant::Commuting) {
      const CommutingResult cc = commuting_check(seq, 2 * cfg.n);
      r.hypothesis_violated = !cc.commutes;
      if (!cc.commutes) {
        r.skipped = true;
        r.note = "hypothesis-violated: max commutator " + short_num(cc.max_commutator);
      }
    }
    const auto [rate, delta] = choose_rate(cfg, v, gap, zeta, seq, cfg.n - 1);
    r.gamma = rate.gamma;
    r.branch = rate.branch;
    r.delta = delta;
    const auto p1 = detail::green_pass(cfg, seq, v, rate, delta, zeta, cfg.n, detail::rows_for(cfg, cfg.n));
    const auto p2 = detail::green_pass(cfg, seq, v, rate, delta, zeta, 2 * cfg.n, detail::rows_for(cfg, 2 * cfg.n));
    r.samples = p1.samples;
    r.c_emp = p1.c_emp;
    r.c_emp_2n = p2.c_emp;
    r.n0 = p1.n0;
    r.ill_conditioned = p1.ill_conditioned || p2.ill_conditioned;
    r.slope_measured = p1.slope_measured;
    r.slope_theoretical = p1.slope_theoretical;
    r.direction_c = p1.direction_c;
    r.direction_factor = p1.direction_factor;
    r.ratios_finite = p1.finite && p2.finite;
    r.stable = relatively_close(r.c_emp, r.c_emp_2n, kStabilityTol);
    const bool decays = r.slope_measured >= r.slope_theoretical;
    r.pass = !r.skipped && r.ratios_finite && r.stable && decays;
  });
}

inline ExperimentResult verify_commuting_bound(const ExperimentConfig& cfg, const SpectralPoint& zeta) {
  return verify_green_bound(cfg, zeta, HarnessVariant::Commuting);
}

/// Requires every A_k, k <= upto, to be injective (cond < 1e12).
inline void require_trivial_kernels(const EntrySequence& seq, int upto) {
  for (int k = 1; k <= upto; ++k) {
    Eigen::JacobiSVD<CMatrix> svd(seq.a(k));
    const auto& sv = svd.singularValues();
    if (!(sv(sv.size() - 1) > 0.0) || sv(0) / sv(sv.size() - 1) >= 1e12)
      throw PreconditionError("A_" + std::to_string(k) + " has a nontrivial kernel; eigenvector bound needs ker A_k = {0}");
  }
}

namespace detail {

struct EigenPass {
  double c = 0.0;
  bool finite = true;
  std::vector<RatioSample> samples;
  std::vector<double> fit_m, fit_u, fit_e;
};

inline EigenPass eigen_pass(const EigenpairInGap& p, const ScalarEnvelope& env) {
  EigenPass out;
  const auto norms = p.block_norms();
  const int n = int(norms.size());
  int last = 0;
  for (int m = 1; m <= n; ++m)
    if (norms[m - 1] >= kResolvedFloor) last = m;
  for (int m = 1; m <= last; ++m) {
    const double e = env(1, m);
    const double ratio = norms[m - 1] / e;
    out.samples.push_back({m, 1, norms[m - 1], e, ratio});
    out.c = std::max(out.c, ratio);
    out.finite = out.finite && std::isfinite(ratio);
    if (m > kFitSkipLow && norms[m - 1] > 0.0) {
      out.fit_m.push_back(m);
      out.fit_u.push_back(std::log(norms[m - 1]));
      out.fit_e.push_back(env.log_value(1, m));
    }
  }
  return out;
}

}  // namespace detail

/// One result per (N-stable gap eigenpair, variant); a single skipped result when none exists.
inline std::vector<ExperimentResult> verify_eigenvector_bound(const ExperimentConfig& cfg) {
  std::vector<ExperimentResult> out;
  ExperimentResult base;
  base.name = cfg.name;
  base.kind = ExperimentKind::Eigenvector;
  base.variant = cfg.variants.front();
  base.n = cfg.n;
  try {
    cfg.validate();
    const EntrySequence seq = build_sequence(cfg.op);
    require_trivial_kernels(seq, 2 * cfg.n);
    const GapInterval gap = resolve_gap(cfg, seq, std::nullopt);
    base.gap = gap;
    const GapEigenResult found = eigenpairs_in_gap(seq, cfg.n, gap);
    if (found.stable.empty()) {
      base.skipped = true;
      base.note = "no N-stable eigenpair in the gap";
      if (!found.artifacts.empty()) {
        base.note += "; truncation artifacts at";
        for (double a : found.artifacts) base.note += " " + short_num(a);
      }
      out.push_back(base);
      return out;
    }
    for (std::size_t i = 0; i < found.stable.size(); ++i) {
      const EigenpairInGap& p = found.stable[i];
      const EigenpairInGap& q = found.partners[i];
      for (HarnessVariant v : cfg.variants) {
        ExperimentResult r = base;
        r.variant = v;
        r.zeta = SpectralPoint(p.zeta);
        out.push_back(detail::guarded(r, [&](ExperimentResult& res) {
          if (v == HarnessVariant::Commuting) throw DomainError("commuting variant applies to Green experiments only");
          const auto [rate, delta] = choose_rate(cfg, v, gap, res.zeta, seq, cfg.n - 1);
          res.gamma = rate.gamma;
          res.branch = rate.branch;
          res.delta = delta;
          const ScalarEnvelope env(v, rate, delta, seq, 2 * cfg.n);
          res.n0 = env.n0();
          const auto a = detail::eigen_pass(p, env);
          const auto b = detail::eigen_pass(q, env);
          res.samples = a.samples;
          res.c_emp = a.c;
          res.c_emp_2n = b.c;
          res.ratios_finite = a.finite && b.finite;
          res.stable = relatively_close(a.c, b.c, kStabilityTol);
          res.slope_measured = -fit_slope(a.fit_m, a.fit_u);
          res.slope_theoretical = -fit_slope(a.fit_m, a.fit_e);
          res.note = "eigenvalue drift " + short_num(std::abs(q.zeta - p.zeta)) + ", residual " + short_num(p.residual);
          res.pass = res.ratios_finite && res.stable && res.slope_measured >= res.slope_theoretical;
        }));
      }
    }
  } catch (const Error& e) {
    base.error = e.what();
    out.push_back(base);
  }
  return out;
}

struct EdgeRow {
  double epsilon = 0.0;
  double zeta = 0.0;
  int n = 0;
  double measured_rate = NAN;
  double gamma = NAN;
  double theoretical_rate = NAN;  // gamma * phi_delta(||A||)
  double c_emp = NAN;
  ExperimentResult result;
};

struct EdgeStudy {
  std::vector<EdgeRow> rows;
  double slope_measured = NAN;  // d log(measured rate) / d log(eps)
  double slope_gamma = NAN;     // d log(gamma) / d log(eps)
};

/// Truncation size that resolves decay length 1/sqrt(eps) inside the fit window.
inline int edge_truncation(double eps) { return std::max(300, int(std::ceil(60.0 / std::sqrt(eps)))); }

/// zeta = 2 - |x| + eps at the lower edge of the example2 gap; continuous variant.
inline EdgeStudy edge_scaling_study(const ExperimentConfig& cfg_in) {
  EdgeStudy out;
  std::vector<double> le, lm, lg;
  for (double eps : cfg_in.edge_eps) {
    ExperimentConfig cfg = cfg_in;
    cfg.kind = ExperimentKind::EdgeStudy;
    cfg.op = {2, Example2Family{cfg_in.edge_x}, {}, {}};
    cfg.gap_source = GapSource::Symbol;
    cfg.n = edge_truncation(eps);
    cfg.rows.reset();
    EdgeRow row;
    row.epsilon = eps;
    row.zeta = 2.0 - std::abs(cfg_in.edge_x) + eps;
    row.n = cfg.n;
    row.result = verify_green_bound(cfg, SpectralPoint(row.zeta), HarnessVariant::Continuous);
    row.result.edge_epsilon = eps;
    row.result.samples.clear();
    row.measured_rate = row.result.slope_measured;
    row.gamma = row.result.gamma;
    row.theoretical_rate = row.result.slope_theoretical;
    row.c_emp = row.result.c_emp;
    if (row.measured_rate > 0 && row.gamma > 0) {
      le.push_back(std::log(eps));
      lm.push_back(std::log(row.measured_rate));
      lg.push_back(std::log(row.gamma));
    }
    out.rows.push_back(std::move(row));
  }
  out.slope_measured = fit_slope(le, lm);
  out.slope_gamma = fit_slope(le, lg);
  return out;
}

// ---------------------------------------------------------------------------
// Configuration files and reports.

struct RunConfig {
  std::vector<ExperimentConfig> experiments;
  std::string output_dir = "bjdecay_out";
  unsigned threads = 0;  // 0: hardware concurrency
};

namespace detail {

inline SpectralPoint parse_zeta(const io::json& j, const std::string& where) {
  return SpectralPoint(io::parse_complex(j, where));
}

inline ExperimentConfig parse_experiment(const io::json& j, const std::string& where) {
  using io::json;
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  static const std::vector<std::string> known = {"name", "kind",  "operator", "gap",   "zeta",          "delta",
                                                 "epsilon", "eta", "epsilon_prime", "variants", "N", "j0",
                                                 "rows",  "edge"};
  for (const auto& [k, v] : j.items())
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw SchemaError(where + ": unknown field '" + k + "'");
  ExperimentConfig c;
  const auto num = [&](const char* key, double& dst) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) throw SchemaError(where + "." + key + ": expected a number");
    dst = j[key].get<double>();
  };
  if (j.contains("name")) {
    if (!j["name"].is_string()) throw SchemaError(where + ".name: expected a string");
    c.name = j["name"].get<std::string>();
  }
  if (c.name.empty() || c.name.find_first_of("/\\") != std::string::npos)
    throw SchemaError(where + ".name: must be a nonempty file-name-safe string");
  if (j.contains("kind")) {
    const std::string k = j["kind"].is_string() ? j["kind"].get<std::string>() : "";
    if (k == "green") c.kind = ExperimentKind::Green;
    else if (k == "eigenvector") c.kind = ExperimentKind::Eigenvector;
    else if (k == "commuting") c.kind = ExperimentKind::Commuting;
    else if (k == "edge-study") c.kind = ExperimentKind::EdgeStudy;
    else throw SchemaError(where + ".kind: expected green|eigenvector|commuting|edge-study");
  }
  if (c.kind != ExperimentKind::EdgeStudy) {
    if (!j.contains("operator")) throw SchemaError(where + ".operator: required");
    try {
      c.op = j["operator"].is_string() ? io::load_operator(j["operator"].get<std::string>())
                                       : io::parse_operator(j["operator"]);
    } catch (const SchemaError& e) {
      throw SchemaError(where + "." + e.what());
    }
  }
  if (j.contains("gap")) {
    const json& g = j["gap"];
    if (g == "symbol") c.gap_source = GapSource::Symbol;
    else if (g == "truncation") c.gap_source = GapSource::Truncation;
    else if (g.is_array() && g.size() == 2 && g[0].is_number() && g[1].is_number()) {
      c.gap_source = GapSource::Explicit;
      try {
        c.explicit_gap = GapInterval(g[0].get<double>(), g[1].get<double>());
      } catch (const DomainError& e) {
        throw SchemaError(where + ".gap: " + e.what());
      }
    } else {
      throw SchemaError(where + ".gap: expected \"symbol\", \"truncation\" or [r, s]");
    }
  }
  if (j.contains("zeta")) {
    const json& z = j["zeta"];
    c.zetas.clear();
    if (io::is_complex_literal(z)) {
      c.zetas.push_back(parse_zeta(z, where + ".zeta"));
    } else if (z.is_array()) {
      for (std::size_t i = 0; i < z.size(); ++i)
        c.zetas.push_back(parse_zeta(z[i], where + ".zeta[" + std::to_string(i) + "]"));
    } else {
      throw SchemaError(where + ".zeta: expected a number, [re, im] or a list of them");
    }
    if (c.zetas.empty()) throw SchemaError(where + ".zeta: empty list");
  }
  if (j.contains("delta")) {
    if (j["delta"] == "auto") c.delta.reset();
    else if (j["delta"].is_number()) c.delta = j["delta"].get<double>();
    else throw SchemaError(where + ".delta: expected a number or \"auto\"");
  }
  num("epsilon", c.epsilon);
  num("eta", c.eta);
  num("epsilon_prime", c.epsilon_prime);
  if (j.contains("variants")) {
    const json& v = j["variants"];
    c.variants.clear();
    if (v.is_string()) c.variants.push_back(parse_variant(v.get<std::string>()));
    else if (v.is_array())
      for (const auto& e : v) {
        if (!e.is_string()) throw SchemaError(where + ".variants: expected strings");
        c.variants.push_back(parse_variant(e.get<std::string>()));
      }
    else throw SchemaError(where + ".variants: expected a string or list of strings");
  } else if (c.kind == ExperimentKind::Commuting) {
    c.variants = {HarnessVariant::Commuting};
  }
  if (j.contains("N")) {
    if (!j["N"].is_number_integer()) throw SchemaError(where + ".N: expected an integer");
    c.n = j["N"].get<int>();
  }
  if (j.contains("j0")) {
    if (!j["j0"].is_number_integer()) throw SchemaError(where + ".j0: expected an integer");
    c.j0 = j["j0"].get<int>();
  }
  if (j.contains("rows")) {
    const json& r = j["rows"];
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() || !r[1].is_number_integer())
      throw SchemaError(where + ".rows: expected [first, last]");
    c.rows = std::pair{r[0].get<int>(), r[1].get<int>()};
  }
  if (j.contains("edge")) {
    const json& e = j["edge"];
    if (!e.is_object()) throw SchemaError(where + ".edge: expected an object");
    if (e.contains("x")) {
      if (!e["x"].is_number()) throw SchemaError(where + ".edge.x: expected a number");
      c.edge_x = e["x"].get<double>();
    }
    if (e.contains("eps")) {
      if (!e["eps"].is_array()) throw SchemaError(where + ".edge.eps: expected a list");
      c.edge_eps.clear();
      for (const auto& v : e["eps"]) {
        if (!v.is_number()) throw SchemaError(where + ".edge.eps: expected numbers");
        c.edge_eps.push_back(v.get<double>());
      }
    }
  }
  c.validate();
  if (c.kind != ExperimentKind::EdgeStudy) (void)build_sequence(c.op);  // family constraints fail at load time
  return c;
}

}  // namespace detail

/// Either {"experiments": [...], "output_dir": ..., "threads": ...} or a single experiment object.
inline RunConfig parse_run_config(const io::json& j) {
  RunConfig rc;
  if (!j.is_object()) throw SchemaError("config: expected an object");
  if (!j.contains("experiments")) {
    rc.experiments.push_back(detail::parse_experiment(j, "config"));
    return rc;
  }
  for (const auto& [k, v] : j.items())
    if (k != "experiments" && k != "output_dir" && k != "threads")
      throw SchemaError("config: unknown field '" + k + "'");
  if (!j["experiments"].is_array() || j["experiments"].empty())
    throw SchemaError("config.experiments: expected a nonempty array");
  for (std::size_t i = 0; i < j["experiments"].size(); ++i)
    rc.experiments.push_back(
        detail::parse_experiment(j["experiments"][i], "experiments[" + std::to_string(i) + "]"));
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string()) throw SchemaError("config.output_dir: expected a string");
    rc.output_dir = j["output_dir"].get<std::string>();
  }
  if (j.contains("threads")) {
    if (!j["threads"].is_number_unsigned()) throw SchemaError("config.threads: expected a non-negative integer");
    rc.threads = j["threads"].get<unsigned>();
  }
  for (std::size_t a = 0; a < rc.experiments.size(); ++a)
    for (std::size_t b = a + 1; b < rc.experiments.size(); ++b)
      if (rc.experiments[a].name == rc.experiments[b].name)
        throw SchemaError("config: duplicate experiment name '" + rc.experiments[a].name + "'");
  return rc;
}

/// Runs job(i) for i in [0, count) on a bounded pool of worker threads.
inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& job) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = unsigned(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) job(i);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline io::json to_json(const ExperimentResult& r) {
  using io::json;
  const auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json e = {{"name", r.name},
            {"kind", to_string(r.kind)},
            {"variant", to_string(r.variant)},
            {"branch", r.branch ? json(to_string(*r.branch)) : json(nullptr)},
            {"gamma", num(r.gamma)},
            {"delta", r.delta ? num(*r.delta) : json(nullptr)},
            {"C_emp", num(r.c_emp)},
            {"C_emp_2N", num(r.c_emp_2n)},
            {"slope_measured", num(r.slope_measured)},
            {"slope_theoretical", num(r.slope_theoretical)},
            {"ratios_finite", r.ratios_finite},
            {"stable", r.stable},
            {"pass", r.pass},
            {"skipped", r.skipped},
            {"N", r.n},
            {"zeta", json::array({r.zeta.re(), r.zeta.im()})}};
  if (r.gap) e["gap"] = json::array({r.gap->r(), r.gap->s()});
  if (r.hypothesis_violated) e["tags"] = json::array({"hypothesis-violated"});
  if (r.ill_conditioned) e["ill_conditioned"] = true;
  if (r.n0) e["n0"] = *r.n0;
  if (r.direction_factor) e["direction_factor"] = num(*r.direction_factor);
  if (!r.direction_c.empty()) {
    json dc = json::array();
    for (double c : r.direction_c) dc.push_back(num(c));
    e["direction_C_emp"] = dc;
  }
  if (r.edge_epsilon) e["edge_epsilon"] = *r.edge_epsilon;
  if (!r.error.empty()) e["error"] = r.error;
  if (!r.note.empty()) e["note"] = r.note;
  return e;
}

struct RunOutcome {
  std::vector<ExperimentResult> results;
  std::vector<std::pair<std::string, EdgeStudy>> edge_studies;
  io::json report;
  bool all_pass = true;
};

/// Runs every experiment (Green/commuting jobs per (zeta, variant)) and assembles the report in config order.
inline RunOutcome execute(const RunConfig& rc) {
  struct Job {
    std::size_t exp;
    std::function<std::vector<ExperimentResult>()> run;
  };
  std::vector<Job> jobs;
  std::vector<std::optional<EdgeStudy>> studies(rc.experiments.size());
  for (std::size_t e = 0; e < rc.experiments.size(); ++e) {
    const ExperimentConfig& cfg = rc.experiments[e];
    switch (cfg.kind) {
      case ExperimentKind::Green:
      case ExperimentKind::Commuting:
        for (const SpectralPoint& z : cfg.zetas)
          for (HarnessVariant v : cfg.variants)
            jobs.push_back({e, [&cfg, z, v] { return std::vector{verify_green_bound(cfg, z, v)}; }});
        break;
      case ExperimentKind::Eigenvector:
        jobs.push_back({e, [&cfg] { return verify_eigenvector_bound(cfg); }});
        break;
      case ExperimentKind::EdgeStudy:
        jobs.push_back({e, [&cfg, &studies, e] {
                          studies[e] = edge_scaling_study(cfg);
                          std::vector<ExperimentResult> rows;
                          for (const auto& row : studies[e]->rows) rows.push_back(row.result);
                          return rows;
                        }});
        break;
    }
  }
  std::vector<std::vector<ExperimentResult>> out(jobs.size());
  parallel_for(jobs.size(), rc.threads, [&](std::size_t i) { out[i] = jobs[i].run(); });

  RunOutcome outcome;
  io::json exps = io::json::array();
  for (auto& batch : out)
    for (auto& r : batch) {
      exps.push_back(to_json(r));
      if (!r.skipped && !r.pass) outcome.all_pass = false;
      outcome.results.push_back(std::move(r));
    }
  io::json edge = io::json::array();
  for (std::size_t e = 0; e < studies.size(); ++e) {
    if (!studies[e]) continue;
    const EdgeStudy& s = *studies[e];
    const auto num = [](double v) { return std::isfinite(v) ? io::json(v) : io::json(nullptr); };
    io::json rows = io::json::array();
    for (const auto& row : s.rows)
      rows.push_back({{"epsilon", row.epsilon},
                      {"zeta", row.zeta},
                      {"N", row.n},
                      {"measured_rate", num(row.measured_rate)},
                      {"gamma", num(row.gamma)},
                      {"theoretical_rate", num(row.theoretical_rate)},
                      {"C_emp", num(row.c_emp)}});
    edge.push_back({{"name", rc.experiments[e].name},
                    {"rows", rows},
                    {"loglog_slope_measured", num(s.slope_measured)},
                    {"loglog_slope_gamma", num(s.slope_gamma)}});
    outcome.edge_studies.emplace_back(rc.experiments[e].name, s);
  }
  outcome.report = {{"experiments", exps},
                    {"meta",
                     {{"tool", "bjdecay"},
                      {"version", kVersion},
                      {"seed", 0},
                      {"tolerances",
                       {{"stability", kStabilityTol},
                        {"singular_inverse_norm", kSingularInverseNorm},
                        {"ill_conditioned", kIllConditioned},
                        {"gap_margin_fraction", kGapMarginFraction},
                        {"drift", kDriftTol},
                        {"tail_weight", kTailWeightTol},
                        {"resolved_floor", kResolvedFloor}}},
                      {"fit_window", {{"skip_low", kFitSkipLow}, {"skip_high", kFitSkipHigh}}}}}};
  if (!edge.empty()) outcome.report["edge_studies"] = edge;
  return outcome;
}

inline std::string csv_header() { return std::string("# bjdecay ") + kVersion + "\n"; }

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SchemaError("cannot write '" + path.string() + "'");
  f << body;
}

/// Writes report.json and per-experiment CSVs; returns the process exit status (0 iff all non-skipped pass).
inline int run(const RunConfig& rc) {
  namespace fs = std::filesystem;
  const RunOutcome outcome = execute(rc);
  fs::create_directories(rc.output_dir);
  write_text(fs::path(rc.output_dir) / "report.json", outcome.report.dump(2) + "\n");

  for (const ExperimentConfig& cfg : rc.experiments) {
    std::string green = csv_header() + "m,j,re_zeta,im_zeta,norm_G\n";
    std::string bound = csv_header() + "variant,m,j,re_zeta,im_zeta,norm,envelope,ratio\n";
    bool any_green = false;
    for (const auto& r : outcome.results) {
      if (r.name != cfg.name) continue;
      for (const auto& s : r.samples) {
        const std::string z = fmt(r.zeta.re()) + "," + fmt(r.zeta.im());
        if (r.kind != ExperimentKind::Eigenvector && r.variant == cfg.variants.front()) {
          green += std::to_string(s.m) + "," + std::to_string(s.j) + "," + z + "," + fmt(s.norm) + "\n";
          any_green = true;
        }
        bound += std::string(to_string(r.variant)) + "," + std::to_string(s.m) + "," + std::to_string(s.j) + "," + z +
                 "," + fmt(s.norm) + "," + fmt(s.envelope) + "," + fmt(s.ratio) + "\n";
      }
    }
    if (any_green) write_text(fs::path(rc.output_dir) / (cfg.name + ".green.csv"), green);
    write_text(fs::path(rc.output_dir) / (cfg.name + ".bound.csv"), bound);
    if (cfg.kind != ExperimentKind::EdgeStudy) {
      try {
        const auto est = truncated_spectrum(assemble_truncation(build_sequence(cfg.op), cfg.n));
        std::string spec = csv_header() + "index,eigenvalue\n";
        for (std::size_t i = 0; i < est.samples.size(); ++i)
          spec += std::to_string(i + 1) + "," + fmt(est.samples[i]) + "\n";
        write_text(fs::path(rc.output_dir) / (cfg.name + ".spectrum.csv"), spec);
      } catch (const Error&) {
        // The experiment entry already carries the error.
      }
    }
  }
  return outcome.all_pass ? 0 : 1;
}

inline int run(const std::string& config_path) {
  return run(parse_run_config(io::read_json_file(config_path)));
}

}  // namespace bjdecay
