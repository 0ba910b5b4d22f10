#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "bjdecay/transfer.hpp"

using namespace bjdecay;

namespace {

// Greedy matching distance between two multisets of the same size.
double multiset_distance(std::vector<Complex> a, std::vector<Complex> b) {
  double worst = 0.0;
  for (const Complex& x : a) {
    auto best = b.begin();
    for (auto it = b.begin(); it != b.end(); ++it)
      if (std::abs(*it - x) < std::abs(*best - x)) best = it;
    worst = std::max(worst, std::abs(*best - x));
    b.erase(best);
  }
  return worst;
}

CVector random_vector(std::mt19937& rng, int d) {
  std::normal_distribution<double> g;
  CVector v(d);
  for (int i = 0; i < d; ++i) v(i) = Complex(g(rng), g(rng));
  return v;
}

}  // namespace

TEST(TransferMatrix, AdvancesTheThreeTermRecurrence) {
  std::mt19937 rng(3);
  const auto seq = example3_sequence(0.7, 0.8, 0.4, -0.3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial * 7;
    const SpectralPoint z(u(rng), u(rng));
    const auto t = transfer_matrix(seq, n, z);
    CVector state(4);
    state << random_vector(rng, 2), random_vector(rng, 2);
    const CVector next = t.matrix * state;
    ASSERT_LE((next.head(2) - state.tail(2)).norm(), 1e-14 * state.norm());
    const CVector res = seq.a(n - 1).adjoint() * state.head(2) + seq.b(n) * state.tail(2) + seq.a(n) * next.tail(2) -
                        z.value() * state.tail(2);
    EXPECT_LE(res.norm(), 1e-10 * (1.0 + next.norm()));
  }
}

TEST(TransferMatrix, Errors) {
  EXPECT_THROW(transfer_matrix(example2_sequence(3.0), 1, SpectralPoint(0.5)), DomainError);
  const auto singular = example1_sequence(ScalarRule::linear(1, 0), ScalarRule::constant(0));
  EXPECT_THROW(transfer_matrix(singular, 4, SpectralPoint(0.5)), SingularityError);
}

TEST(TransferMatrix, DeterminantModulus) {
  const auto seq = example3_sequence(0.3, 0.75, 0.0, 1.0);
  for (int n : {2, 3, 10, 57}) {
    const auto t = transfer_matrix(seq, n, SpectralPoint(0.2, 0.1));
    const double expect = std::abs(seq.a(n - 1).determinant()) / std::abs(seq.a(n).determinant());
    EXPECT_NEAR(std::abs(t.matrix.determinant()), expect, 1e-12 * expect);
  }
}

TEST(Example2Eigenvalues, AgreeWithEigensolveOnComplexGrid) {
  const double x = 3.0;
  const auto seq = example2_sequence(x);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 5; ++j) {
      const SpectralPoint z(-4.5 + i, -1.0 + 0.5 * j);
      const auto closed = example2_eigenvalues(x, z);
      const auto numeric = eigenvalues(transfer_matrix(seq, 5, z).matrix);
      EXPECT_LE(multiset_distance({closed.begin(), closed.end()}, numeric), 1e-9) << z.re() << " " << z.im();
      EXPECT_NEAR(std::abs(closed[0] * closed[1] - 1.0), 0.0, 1e-12);
      EXPECT_NEAR(std::abs(closed[2] * closed[3] - 1.0), 0.0, 1e-12);
    }
}

TEST(Example2Eigenvalues, ZeroCouplingIsFreeJacobiTwice) {
  for (double theta : {0.3, 1.1, 2.5}) {
    const auto ev = example2_eigenvalues(0.0, SpectralPoint(2 * std::cos(theta)));
    const std::vector<Complex> expect{std::polar(1.0, theta), std::polar(1.0, -theta), std::polar(1.0, theta),
                                      std::polar(1.0, -theta)};
    EXPECT_LE(multiset_distance({ev.begin(), ev.end()}, expect), 1e-12);
  }
}

TEST(Example2MinDecay, KnownValues) {
  EXPECT_NEAR(example2_min_decay(3.0, 0.0), std::log((3.0 + std::sqrt(5.0)) / 2.0), 1e-15);
  EXPECT_NEAR(example2_min_decay(3.0, 0.0), 0.962424, 1e-6);
  // near the gap edge the rate behaves like sqrt(1 - zeta) for x = 3
  EXPECT_NEAR(example2_min_decay(3.0, 1.0 - 1e-4), 0.01, 0.001);
  EXPECT_DOUBLE_EQ(example2_min_decay(3.0, 0.4), example2_min_decay(3.0, -0.4));
}

TEST(Example2MinDecay, IsSmallestModulusLogOfTransferEigenvalues) {
  for (double z : {-0.9, -0.3, 0.0, 0.6}) {
    const auto ev = example2_eigenvalues(3.0, SpectralPoint(z));
    double smallest = INFINITY;
    for (const Complex& e : ev) smallest = std::min(smallest, std::abs(std::log(std::abs(e))));
    EXPECT_NEAR(example2_min_decay(3.0, z), smallest, 1e-12);
  }
}

TEST(Example2MinDecay, DomainErrors) {
  EXPECT_THROW(example2_min_decay(2.0, 0.0), DomainError);
  EXPECT_THROW(example2_min_decay(3.0, 1.0), DomainError);
  EXPECT_THROW(example2_min_decay(3.0, -1.5), DomainError);
}

TEST(Example3Rho, RealInsideGapImaginaryOutside) {
  const auto gap = example3_gap(0.0, 1.0, 0.0);
  ASSERT_TRUE(gap.has_value());
  EXPECT_DOUBLE_EQ(gap->r(), -1.0);
  EXPECT_DOUBLE_EQ(gap->s(), 1.0);
  for (double z : {0.0, 0.5, -0.99}) {
    const auto [p, m] = example3_rho(0.0, 1.0, 0.0, SpectralPoint(z));
    EXPECT_NEAR(p.real(), std::sqrt(1 - z * z), 1e-15);
    EXPECT_EQ(p.imag(), 0.0);
    EXPECT_EQ(m, -p);
  }
  for (double z : {1.01, -2.0}) {
    const auto [p, m] = example3_rho(0.0, 1.0, 0.0, SpectralPoint(z));
    EXPECT_EQ(p.real(), 0.0);
    EXPECT_NEAR(std::abs(p.imag()), std::sqrt(z * z - 1), 1e-15);
  }
}

TEST(Example3Gap, ShrinksWithCoupling) {
  const auto g = example3_gap(0.5, -1.0, 1.0);
  ASSERT_TRUE(g.has_value());
  EXPECT_NEAR(g->s(), 1.5 * std::sqrt(0.75), 1e-15);
  EXPECT_FALSE(example3_gap(0.3, 0.3, 1.0).has_value());
  EXPECT_THROW(example3_gap(0.0, 1.0, 2.0), DomainError);
  EXPECT_THROW(example3_rho(0.0, 1.0, -2.5, SpectralPoint(0.0)), DomainError);
}

TEST(Monodromy, ProductAndModuli) {
  const auto seq = example3_sequence(0.0, 0.75, 0.0, 1.0);
  const SpectralPoint z(0.3);
  const auto mr = monodromy(seq, 20, z);
  const CMatrix expect = transfer_matrix(seq, 40, z).matrix * transfer_matrix(seq, 39, z).matrix;
  EXPECT_LE((mr.w - expect).cwiseAbs().maxCoeff(), 1e-15);
  ASSERT_EQ(mr.omega.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(mr.moduli[i], std::abs(mr.omega[i]));
  Complex prod = 1.0;
  for (const Complex& o : mr.omega) prod *= o;
  const double det_ratio = std::abs(seq.a(38).determinant()) / std::abs(seq.a(40).determinant());
  EXPECT_NEAR(std::abs(prod), det_ratio, 1e-10 * det_ratio);
  EXPECT_THROW(monodromy(seq, 1, z), DomainError);
}

TEST(MonodromySplitting, MatchesClosedFormAtLargeN) {
  for (double z : {0.0, 0.5}) {
    const auto data = monodromy_splitting(0.0, 1.0, 0.0, 0.75, SpectralPoint(z), 10000);
    const double expect = std::sqrt(1 - z * z);
    EXPECT_EQ(data.regime, SecondaryRegime::Hyperbolic);
    EXPECT_NEAR(data.epsilon_n, std::pow(20000.0, -0.75), 1e-15);
    ASSERT_EQ(data.rho.size(), 4u);
    int plus = 0, minus = 0;
    for (const Complex& r : data.rho) {
      EXPECT_NEAR(std::abs(r), expect, 0.05 * expect);
      plus += r.real() > 0;
      minus += r.real() < 0;
    }
    EXPECT_EQ(plus, 2);
    EXPECT_EQ(minus, 2);
  }
}

TEST(MonodromySplitting, ConvergesAtOrderEpsilon) {
  const double alpha = 0.75;
  auto deviation = [&](int n) {
    const auto data = monodromy_splitting(0.0, 1.0, 0.0, alpha, SpectralPoint(0.0), n);
    double worst = 0.0;
    for (const Complex& r : data.rho) worst = std::max(worst, std::abs(std::abs(r.real()) - 1.0) + std::abs(r.imag()));
    return worst;
  };
  const double ratio = deviation(1000) / deviation(4000);
  EXPECT_GE(ratio, std::pow(3.5, alpha - 0.1));
  EXPECT_LE(ratio, std::pow(4.5, alpha + 0.1));
}

TEST(MonodromySplitting, ClassificationFollowsGapMembership) {
  for (double z : {0.0, 0.5, -0.5, 0.99, -0.99, 1.01, -1.01, 2.0, -2.0}) {
    const auto data = monodromy_splitting(0.0, 1.0, 0.0, 0.75, SpectralPoint(z), 10000);
    EXPECT_EQ(data.regime, std::abs(z) < 1.0 ? SecondaryRegime::Hyperbolic : SecondaryRegime::Elliptic) << z;
  }
}

TEST(MonodromySplitting, NearlyDegenerateMuRaisesPairingError) {
  // x = 1e-3 separates mu_+- by about 2e-3, far below the splitting at n = 10
  EXPECT_THROW(monodromy_splitting(0.0, 1.0, 1e-3, 0.75, SpectralPoint(0.0), 10), PairingError);
  EXPECT_THROW(monodromy_splitting(0.0, 1.0, 0.0, 0.75, SpectralPoint(0.0), 9), DomainError);
}

TEST(MonodromySplitting, MuProductIsOne) {
  for (double x : {0.5, 1.0, 1.5}) {
    const auto data = monodromy_splitting(0.0, 1.0, x, 0.75, SpectralPoint(0.2), 5000);
    EXPECT_NEAR(std::abs(data.mu_plus * data.mu_minus - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(data.mu_plus), 1.0, 1e-12);
  }
}

TEST(ClassifyRegime, Thresholds) {
  EXPECT_EQ(classify_regime({{1.0, 0.05}, {-1.0, 0.0}}), SecondaryRegime::Hyperbolic);
  EXPECT_EQ(classify_regime({{0.0, 1.0}, {0.05, -1.0}}), SecondaryRegime::Elliptic);
  EXPECT_EQ(classify_regime({{1.0, 0.5}, {-1.0, 0.0}}), SecondaryRegime::Indeterminate);
  EXPECT_EQ(classify_regime({{1.0, 0.0}, {0.0, 1.0}}), SecondaryRegime::Indeterminate);
  EXPECT_STREQ(to_string(SecondaryRegime::Elliptic), "secondary-elliptic");
}
