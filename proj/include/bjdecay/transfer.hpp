#pragma once

// Transfer matrices M_n(zeta), two-step monodromy W_n = M_{2n} M_{2n-1}, and the
// closed forms for the constant (x-coupled) and period-2 growing families.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bjdecay/boundfns.hpp"
#include "bjdecay/core.hpp"
#include "bjdecay/operator.hpp"

namespace bjdecay {

struct TransferMatrix {
  SpectralPoint zeta{0.0};
  int n = 0;
  CMatrix matrix;  // 2d x 2d
};

inline constexpr double kTransferCondLimit = 1e12;

/// (u_{n-1}, u_n) -> (u_n, u_{n+1}) for A_{n-1}^* u_{n-1} + B_n u_n + A_n u_{n+1} = zeta u_n:
///   [[0, I], [-A_n^{-1} A_{n-1}^*, A_n^{-1} (zeta - B_n)]]
inline TransferMatrix transfer_matrix(const EntrySequence& seq, int n, const SpectralPoint& zeta) {
  if (n < 2) throw DomainError("transfer matrix needs n >= 2");
  const int d = seq.dim();
  const CMatrix an = seq.a(n);
  Eigen::JacobiSVD<CMatrix> svd(an);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || sv(0) / smin >= kTransferCondLimit)
    throw SingularityError("A_" + std::to_string(n) + " is singular or too ill-conditioned to invert");
  const Eigen::PartialPivLU<CMatrix> lu(an);
  const CMatrix id = CMatrix::Identity(d, d);
  TransferMatrix t{zeta, n, CMatrix::Zero(2 * d, 2 * d)};
  t.matrix.topRightCorner(d, d) = id;
  t.matrix.bottomLeftCorner(d, d) = -lu.solve(seq.a(n - 1).adjoint());
  t.matrix.bottomRightCorner(d, d) = lu.solve(zeta.value() * id - seq.b(n));
  return t;
}

inline std::vector<Complex> eigenvalues(const CMatrix& m) {
  Eigen::ComplexEigenSolver<CMatrix> es(m, false);
  if (es.info() != Eigen::Success) throw NumericalError("nonsymmetric eigensolve failed");
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

/// [(z-x)/2 + s, (z-x)/2 - s, (z+x)/2 + s', (z+x)/2 - s'], s = sqrt(((z-x)/2)^2 - 1), principal roots.
inline std::array<Complex, 4> example2_eigenvalues(double x, const SpectralPoint& zeta) {
  const Complex hm = (zeta.value() - x) / 2.0, hp = (zeta.value() + x) / 2.0;
  const Complex sm = std::sqrt(hm * hm - 1.0), sp = std::sqrt(hp * hp - 1.0);
  return {hm + sm, hm - sm, hp + sp, hp - sp};
}

/// ln(||z| - |x|| / 2 + sqrt((|z| - |x|)^2 / 4 - 1)) for z in (2 - |x|, |x| - 2).
inline double example2_min_decay(double x, double zeta) {
  const double ax = std::abs(x);
  if (!(ax > 2.0)) throw DomainError("example2 gap needs |x| > 2");
  if (!(zeta > 2.0 - ax && zeta < ax - 2.0)) throw DomainError("zeta outside the example2 gap (2-|x|, |x|-2)");
  const double h = std::abs(std::abs(zeta) - ax) / 2.0;
  return std::log(h + std::sqrt(h * h - 1.0));
}

/// (+rho, -rho) with rho = sqrt((c2 - c1)^2 - zeta^2 / (1 - x^2/4)), principal root.
inline std::pair<Complex, Complex> example3_rho(double c1, double c2, double x, const SpectralPoint& zeta) {
  if (!(std::abs(x) < 2.0)) throw DomainError("example3 needs |x| < 2");
  const double dc = c2 - c1;
  const Complex z = zeta.value();
  const Complex r = std::sqrt(Complex(dc * dc) - z * z / (1.0 - x * x / 4.0));
  return {r, -r};
}

/// (-|c2 - c1| sqrt(1 - x^2/4), +|c2 - c1| sqrt(1 - x^2/4)); empty when c1 == c2.
inline std::optional<GapInterval> example3_gap(double c1, double c2, double x) {
  if (!(std::abs(x) < 2.0)) throw DomainError("example3 needs |x| < 2");
  const double h = std::abs(c2 - c1) * std::sqrt(1.0 - x * x / 4.0);
  if (!(h > 0.0)) return std::nullopt;
  return GapInterval(-h, h);
}

struct MonodromyResult {
  int n = 0;
  CMatrix w;  // M_{2n} M_{2n-1}
  std::vector<Complex> omega;
  std::vector<double> moduli;
};

inline MonodromyResult monodromy(const EntrySequence& seq, int n, const SpectralPoint& zeta) {
  if (n < 2) throw DomainError("monodromy needs n >= 2");
  MonodromyResult out;
  out.n = n;
  out.w = transfer_matrix(seq, 2 * n, zeta).matrix * transfer_matrix(seq, 2 * n - 1, zeta).matrix;
  out.omega = eigenvalues(out.w);
  for (const Complex& o : out.omega) out.moduli.push_back(std::abs(o));
  return out;
}

enum class SecondaryRegime { Hyperbolic, Elliptic, Indeterminate };

inline const char* to_string(SecondaryRegime r) {
  switch (r) {
    case SecondaryRegime::Hyperbolic: return "secondary-hyperbolic";
    case SecondaryRegime::Elliptic: return "secondary-elliptic";
    case SecondaryRegime::Indeterminate: return "indeterminate";
  }
  return "?";
}

struct AsymptoticData {
  Complex mu_plus, mu_minus;    // eigenvalues of -A^{-1} A^*
  double epsilon_n = 0.0;       // (2n)^{-alpha}
  std::vector<Complex> omega;   // eigenvalues of W_n / (1 - alpha/(2n))
  std::vector<Complex> paired;  // mu assigned to each omega
  std::vector<Complex> rho;     // (omega/mu - 1) (2n)^alpha, same order as omega
  SecondaryRegime regime = SecondaryRegime::Indeterminate;
};

inline constexpr double kRegimeRatio = 10.0;

inline SecondaryRegime classify_regime(const std::vector<Complex>& rho) {
  bool real = true, imag = true;
  for (const Complex& r : rho) {
    real = real && std::abs(r.real()) >= kRegimeRatio * std::abs(r.imag());
    imag = imag && std::abs(r.imag()) >= kRegimeRatio * std::abs(r.real());
  }
  if (real && !imag) return SecondaryRegime::Hyperbolic;
  if (imag && !real) return SecondaryRegime::Elliptic;
  return SecondaryRegime::Indeterminate;
}

/// Measured splitting of the monodromy eigenvalues off mu_{+-} for the period-2 growing family.
inline AsymptoticData monodromy_splitting(double c1, double c2, double x, double alpha, const SpectralPoint& zeta,
                                          int n) {
  if (n < 10) throw DomainError("monodromy_splitting needs n >= 10");
  const EntrySequence seq = example3_sequence(x, alpha, c1, c2);
  const MonodromyResult mr = monodromy(seq, n, zeta);

  const CMatrix a = example2_block(x);
  const auto mu = eigenvalues(-a.partialPivLu().solve(CMatrix(a.adjoint())));
  AsymptoticData out;
  out.mu_plus = mu[0];
  out.mu_minus = mu[1];
  if (std::arg(out.mu_plus) < std::arg(out.mu_minus)) std::swap(out.mu_plus, out.mu_minus);
  out.epsilon_n = std::pow(2.0 * n, -alpha);

  const double scale = 1.0 - alpha / (2.0 * n);
  double max_pert = 0.0;
  for (const Complex& o : mr.omega) {
    const Complex om = o / scale;
    const Complex m = std::abs(om - out.mu_plus) <= std::abs(om - out.mu_minus) ? out.mu_plus : out.mu_minus;
    max_pert = std::max(max_pert, std::abs(om - m));
    out.omega.push_back(om);
    out.paired.push_back(m);
    out.rho.push_back((om / m - 1.0) / out.epsilon_n);
  }
  const double sep = std::abs(out.mu_plus - out.mu_minus);
  if (sep > 1e-8) {
    const auto plus = std::count(out.paired.begin(), out.paired.end(), out.mu_plus);
    if (sep < 10.0 * max_pert || plus != 2)
      throw PairingError("ambiguous monodromy pairing: |mu+ - mu-| = " + std::to_string(sep) +
                         ", max |omega - mu| = " + std::to_string(max_pert) + ", omegas paired with mu+: " +
                         std::to_string(plus));
  }
  out.regime = classify_regime(out.rho);
  return out;
}

}  // namespace bjdecay
