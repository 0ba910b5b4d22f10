#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bjdecay {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Error hierarchy. Every failure the library reports is one of these.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Iterative method failed or a decomposition did not converge.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Spectral parameter too close to the spectrum, or a block that must be invertible is not.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Monodromy eigenvalues could not be matched unambiguously to the unperturbed values.
class PairingError : public Error {
 public:
  using Error::Error;
};

/// Malformed operator/config input.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Dimension of the block space: every A_n, B_n is d x d.
class BlockDim {
 public:
  explicit BlockDim(int d) : d_(d) {
    if (d < 1) throw DomainError("block dimension must be >= 1, got " + std::to_string(d));
  }
  int value() const noexcept { return d_; }
  friend bool operator==(BlockDim, BlockDim) = default;

 private:
  int d_;
};

/// Complex spectral parameter zeta.
class SpectralPoint {
 public:
  SpectralPoint(double re, double im = 0.0) : z_(re, im) { check(); }
  SpectralPoint(Complex z) : z_(z) { check(); }

  Complex value() const noexcept { return z_; }
  double re() const noexcept { return z_.real(); }
  double im() const noexcept { return z_.imag(); }
  SpectralPoint conj() const { return SpectralPoint(std::conj(z_)); }

 private:
  void check() const {
    if (!std::isfinite(z_.real()) || !std::isfinite(z_.imag())) throw DomainError("spectral point must be finite");
  }
  Complex z_;
};

inline double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

inline double smallest_singular_value(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

/// max_ij |m_ij - conj(m_ji)|
inline double hermitian_defect(const CMatrix& m) {
  if (m.rows() != m.cols()) return INFINITY;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline bool all_finite(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex v = m.data()[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

/// |A| = (A^* A)^{1/2}; eigenvalues of A^*A clamped at zero before the square root.
inline CMatrix modulus(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.adjoint() * a);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of A^*A failed");
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

/// Applies f to the eigenvalues of a Hermitian matrix.
template <typename F>
CMatrix hermitian_function(const CMatrix& h, F&& f) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigendecomposition failed");
  Eigen::VectorXd fv(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv(i) = f(es.eigenvalues()(i));
  return es.eigenvectors() * fv.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace bjdecay
