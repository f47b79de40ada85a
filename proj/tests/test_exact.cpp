#include <gtest/gtest.h>

#include "hellinger/exact.hpp"
#include "support/oracles.hpp"

using namespace hellinger;

namespace {

GaussianRational q(long num, long den = 1) { return GaussianRational(mpq_class(num, den)); }

}  // namespace

TEST(RationalText, ParsesFractionsAndDecimals) {
  EXPECT_EQ(parse_rational_text("3"), mpq_class(3));
  EXPECT_EQ(parse_rational_text("-1/4"), mpq_class(-1, 4));
  EXPECT_EQ(parse_rational_text("2.5e-3"), mpq_class(1, 400));
  EXPECT_EQ(parse_rational_text("0.1"), mpq_class(1, 10));
  EXPECT_THROW(parse_rational_text("1/0"), ConfigError);
  EXPECT_THROW(parse_rational_text("abc"), ConfigError);
}

TEST(RationalText, ParsesGaussian) {
  const auto z = parse_gaussian_rational("1/2+i");
  EXPECT_EQ(z.re, mpq_class(1, 2));
  EXPECT_EQ(z.im, mpq_class(1));
  EXPECT_EQ(parse_gaussian_rational("-3i").im, mpq_class(-3));
  EXPECT_TRUE(parse_gaussian_rational("0").is_zero());
}

TEST(GaussianRational, ArithmeticIsExact) {
  const GaussianRational i(0, 1);
  EXPECT_EQ(i * i, q(-1));
  EXPECT_EQ(q(1, 3) + q(2, 3), q(1));
  EXPECT_EQ((GaussianRational(1, 1) / GaussianRational(1, -1)), i);
  EXPECT_THROW(q(1) / q(0), NumericalError);
  EXPECT_EQ(GaussianRational::from_complex({0.5, -0.25}), GaussianRational(mpq_class(1, 2), mpq_class(-1, 4)));
}

TEST(RationalMatrix, InverseRoundTrip) {
  MatrixC m(2, 2);
  m << Complex(2, 1), 1.0, 0.5, Complex(0, -3);
  const auto r = RationalMatrix::from_matrix(m);
  EXPECT_EQ(r * r.inverse(), RationalMatrix::identity(2));
  EXPECT_THROW(RationalMatrix(2).inverse(), NumericalError);
}

TEST(ExactRecursion, CounterexampleInitialValues) {
  const auto seq = exact_fundamental_at_rational(counterexample_family(2), q(0), 8);
  const std::vector<GaussianRational> P{q(1), q(0), q(1), q(0), q(-2, 3), q(0), q(8, 15)};
  const std::vector<GaussianRational> Q{q(0), q(1), q(0), q(-1, 2), q(0), q(3, 8), q(0), q(-5, 16)};
  for (int j = 0; j < static_cast<int>(P.size()); ++j) {
    const auto c = seq.at(Fundamental::P, j - 1).scalar_multiple();
    ASSERT_TRUE(c.has_value()) << j;
    EXPECT_EQ(*c, P[static_cast<std::size_t>(j)]) << "P_" << j - 1;
  }
  for (int j = 0; j < static_cast<int>(Q.size()); ++j) {
    const auto c = seq.at(Fundamental::Q, j - 1).scalar_multiple();
    ASSERT_TRUE(c.has_value()) << j;
    EXPECT_EQ(*c, Q[static_cast<std::size_t>(j)]) << "Q_" << j - 1;
  }
}

TEST(ExactRecursion, CounterexampleClosedFormAndParity) {
  const int m_max = 500;
  const auto seq = exact_fundamental_at_rational(counterexample_family(1), q(0), 2 * m_max + 1);
  mpq_class even(1);  // (2m-1)!!/(2m)!!
  mpq_class odd(1);   // (2m)!!/(2m+1)!!
  for (int m = 0; m <= m_max; ++m) {
    if (m > 0) {
      even *= mpq_class(2 * m - 1, 2 * m);
      odd *= mpq_class(2 * m, 2 * m + 1);
    }
    const mpq_class sign = (m % 2 == 0) ? 1 : -1;
    ASSERT_EQ(*seq.at(Fundamental::Q, 2 * m).scalar_multiple(), GaussianRational(sign * even)) << m;
    ASSERT_EQ(*seq.at(Fundamental::P, 2 * m + 1).scalar_multiple(), GaussianRational(sign * odd)) << m;
    ASSERT_TRUE(seq.at(Fundamental::Q, 2 * m + 1).scalar_multiple()->is_zero());
    ASSERT_TRUE(seq.at(Fundamental::P, 2 * m).scalar_multiple()->is_zero());
  }
}

TEST(ExactRecursion, FreeJacobiAtTwo) {
  const auto seq = exact_fundamental_at_rational(free_jacobi_family(1), q(2), 60);
  for (int j = 0; j <= 60; ++j) {
    EXPECT_EQ(*seq.at(Fundamental::Q, j).scalar_multiple(), q(j + 1)) << j;
  }
}

TEST(ExactRecursion, LeftMatchesTransposeForSymmetricFamilies) {
  const auto seq = exact_fundamental_at_rational(counterexample_family(2), GaussianRational(mpq_class(1, 2), 1), 30);
  for (int j = -1; j <= 30; ++j) {
    EXPECT_EQ(seq.at(Fundamental::P, j), seq.at(Fundamental::P_plus, j));
    EXPECT_EQ(seq.at(Fundamental::Q, j), seq.at(Fundamental::Q_plus, j));
  }
}

TEST(ExactRecursion, MemoryCap) {
  EXPECT_THROW(exact_fundamental_at_rational(counterexample_family(2), q(1, 3), 200, 10000), NumericalError);
}

TEST(OracleComparison, FloatingAgreesOnOracleFamilies) {
  struct Case {
    OperatorFamily family;
    GaussianRational z;
  };
  const std::vector<Case> cases{
      {counterexample_family(2), q(0)},
      {counterexample_family(2), GaussianRational(mpq_class(1, 2))},
      {counterexample_family(2), GaussianRational(0, 1)},
      {free_jacobi_family(2), q(2)},
      {free_jacobi_family(2), q(3)},
      {free_jacobi_family(2), GaussianRational(1, 1)},
      {geometric_family(2, 2.0), q(0)},
      {geometric_family(2, 2.0), q(1)},
      {diag_geometric_family({2.0, 4.0}), q(0)},
      {diag_geometric_family({2.0, 4.0}), GaussianRational(mpq_class(1, 2), 1)},
  };
  for (const auto& c : cases) {
    const auto exact = exact_fundamental_at_rational(c.family, c.z, 200);
    const auto fs = fundamental_system(c.family, c.z.to_complex(), 200);
    const auto cmp = compare_with_oracle(fs, exact);
    EXPECT_EQ(cmp.J, 200);
    EXPECT_LE(cmp.max_relative_error, 1e-12) << c.family.spec().dump() << " z=" << c.z.to_string() << " worst j=" << cmp.worst_index;
  }
}

TEST(OracleComparison, DetectsCorruptedFloatingValues) {
  const auto family = random_family(2, 7);
  const auto z = GaussianRational(mpq_class(1, 4), mpq_class(-1, 2));
  const auto exact = exact_fundamental_at_rational(family, z, 20);
  const auto fs = fundamental_system(family, z.to_complex(), 20);
  EXPECT_LE(compare_with_oracle(fs, exact).max_relative_error, 1e-10);
  const auto other = exact_fundamental_at_rational(family, GaussianRational(mpq_class(1, 4)), 20);
  EXPECT_GT(compare_with_oracle(fs, other).max_relative_error, 1e-3);
}
