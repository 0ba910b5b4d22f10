#pragma once

// Thin wrappers over the LAPACK banded routines used for truncated operators.
// Band storage follows LAPACK: element (i, j) of a matrix with kl sub- and ku
// super-diagonals lives at ab[(kl + ku + i - j) + j * ldab] for the LU layout
// (ldab = 2 kl + ku + 1) and at ab[(kd + i - j) + j * ldab] for the Hermitian
// upper layout (ldab = kd + 1).

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "bjdecay/core.hpp"

extern "C" {
void zgbtrf_(const int* m, const int* n, const int* kl, const int* ku, std::complex<double>* ab, const int* ldab,
             int* ipiv, int* info);
void zgbtrs_(const char* trans, const int* n, const int* kl, const int* ku, const int* nrhs,
             const std::complex<double>* ab, const int* ldab, const int* ipiv, std::complex<double>* b,
             const int* ldb, int* info, std::size_t trans_len);
double zlangb_(const char* norm, const int* n, const int* kl, const int* ku, const std::complex<double>* ab,
               const int* ldab, double* work, std::size_t norm_len);
void zgbcon_(const char* norm, const int* n, const int* kl, const int* ku, const std::complex<double>* ab,
             const int* ldab, const int* ipiv, const double* anorm, double* rcond, std::complex<double>* work,
             double* rwork, int* info, std::size_t norm_len);
void zhbevd_(const char* jobz, const char* uplo, const int* n, const int* kd, std::complex<double>* ab,
             const int* ldab, double* w, std::complex<double>* z, const int* ldz, std::complex<double>* work,
             const int* lwork, double* rwork, const int* lrwork, int* iwork, const int* liwork, int* info,
             std::size_t jobz_len, std::size_t uplo_len);
}

namespace bjdecay::lapack {

/// LU factorisation with partial pivoting of a square band matrix.
class BandLU {
 public:
  BandLU(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1), ab_(std::size_t(ldab_) * n) {}

  Complex& at(int i, int j) { return ab_[std::size_t(kl_ + ku_ + i - j) + std::size_t(j) * ldab_]; }

  /// Returns LAPACK info (0 on success, k > 0 if U(k,k) is exactly zero).
  int factor() {
    std::vector<double> work(n_);
    const char one = '1';
    anorm_ = zlangb_(&one, &n_, &kl_, &ku_, ab_.data() + kl_, &ldab_, work.data(), 1);
    ipiv_.assign(n_, 0);
    int info = 0;
    zgbtrf_(&n_, &n_, &kl_, &ku_, ab_.data(), &ldab_, ipiv_.data(), &info);
    factored_ = info == 0;
    return info;
  }

  /// Reciprocal 1-norm condition number estimate.
  double rcond() const {
    if (!factored_) return 0.0;
    std::vector<Complex> work(2 * std::size_t(n_));
    std::vector<double> rwork(n_);
    double rc = 0.0;
    int info = 0;
    const char one = '1';
    zgbcon_(&one, &n_, &kl_, &ku_, ab_.data(), &ldab_, ipiv_.data(), &anorm_, &rc, work.data(), rwork.data(), &info,
            1);
    if (info != 0) throw NumericalError("zgbcon failed, info=" + std::to_string(info));
    return rc;
  }

  double anorm() const noexcept { return anorm_; }

  /// Solves in place; rhs must have n rows.
  void solve(CMatrix& rhs) const {
    if (!factored_) throw NumericalError("BandLU::solve called before a successful factor()");
    const char trans = 'N';
    const int nrhs = int(rhs.cols());
    const int ldb = int(rhs.rows());
    int info = 0;
    zgbtrs_(&trans, &n_, &kl_, &ku_, &nrhs, ab_.data(), &ldab_, ipiv_.data(), rhs.data(), &ldb, &info, 1);
    if (info != 0) throw NumericalError("zgbtrs failed, info=" + std::to_string(info));
  }

 private:
  int n_, kl_, ku_, ldab_;
  std::vector<Complex> ab_;
  std::vector<int> ipiv_;
  double anorm_ = 0.0;
  bool factored_ = false;
};

struct BandEigen {
  Eigen::VectorXd values;  // ascending
  CMatrix vectors;         // columns, empty unless requested
};

/// Eigen-decomposition of a Hermitian band matrix given by its upper band.
class HermitianBand {
 public:
  HermitianBand(int n, int kd) : n_(n), kd_(kd), ldab_(kd + 1), ab_(std::size_t(ldab_) * n) {}

  /// Upper triangle only: requires j >= i and j - i <= kd.
  Complex& upper(int i, int j) { return ab_[std::size_t(kd_ + i - j) + std::size_t(j) * ldab_]; }

  BandEigen solve(bool want_vectors) const {
    std::vector<Complex> ab = ab_;  // zhbevd overwrites the band
    const char jobz = want_vectors ? 'V' : 'N';
    const char uplo = 'U';
    BandEigen out;
    out.values.resize(n_);
    if (want_vectors) out.vectors.resize(n_, n_);
    const int ldz = want_vectors ? n_ : 1;
    std::vector<Complex> zdummy(1);
    Complex* z = want_vectors ? out.vectors.data() : zdummy.data();

    int info = 0, lwork = -1, lrwork = -1, liwork = -1;
    Complex wq;
    double rq = 0;
    int iq = 0;
    zhbevd_(&jobz, &uplo, &n_, &kd_, ab.data(), &ldab_, out.values.data(), z, &ldz, &wq, &lwork, &rq, &lrwork, &iq,
            &liwork, &info, 1, 1);
    if (info != 0) throw NumericalError("zhbevd workspace query failed, info=" + std::to_string(info));
    lwork = int(wq.real());
    lrwork = int(rq);
    liwork = iq;
    std::vector<Complex> work(std::max(1, lwork));
    std::vector<double> rwork(std::max(1, lrwork));
    std::vector<int> iwork(std::max(1, liwork));
    zhbevd_(&jobz, &uplo, &n_, &kd_, ab.data(), &ldab_, out.values.data(), z, &ldz, work.data(), &lwork,
            rwork.data(), &lrwork, iwork.data(), &liwork, &info, 1, 1);
    if (info != 0) throw NumericalError("zhbevd did not converge, info=" + std::to_string(info));
    return out;
  }

 private:
  int n_, kd_, ldab_;
  std::vector<Complex> ab_;
};

}  // namespace bjdecay::lapack
