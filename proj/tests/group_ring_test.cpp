#include <gtest/gtest.h>

#include <random>

#include "gnorm/group_ring.hpp"
#include "test_support.hpp"

namespace gnorm {
namespace {

using testing::f2_group;
using testing::f2xf2_group;
using testing::random_element;
using testing::z_group;

TEST(ParseElement, Examples) {
  auto f2 = f2_group();
  const auto a = parse_element("2 + x*y^-1 - 3*y^2", f2);
  EXPECT_EQ(a.support_size(), 3u);
  EXPECT_EQ(format_element(a), "2 + x*y^-1 - 3*y^2");

  const auto s = parse_element("x + x^-1 + y + y^-1", f2);
  EXPECT_EQ(s.support_size(), 4u);
  EXPECT_EQ(star(s), s);

  EXPECT_EQ(parse_element("x*x^-1", f2), RingElement::one(f2));
  EXPECT_EQ(parse_element("(1+x)*(1-x)", f2), parse_element("1 - x^2", f2));
  EXPECT_EQ(parse_element("1/2*x + 1/2*x", f2), parse_element("x", f2));
  EXPECT_EQ(format_element(parse_element("0", f2)), "0");
  EXPECT_THROW(parse_element("x + q", f2), ParseError);
  EXPECT_THROW(parse_element("x +", f2), ParseError);
}

TEST(ParseElement, CanonicalPrintingRoundTrips) {
  std::mt19937_64 rng(3);
  for (const auto& p : {f2_group(), testing::z2_group(), f2xf2_group()}) {
    for (int i = 0; i < 50; ++i) {
      const auto a = random_element(rng, p, 6, 4);
      EXPECT_EQ(parse_element(format_element(a), p), a);
    }
  }
}

TEST(Multiply, Examples) {
  auto z = z_group();
  EXPECT_EQ(parse_element("1 + x", z) * parse_element("1 + x^-1", z), parse_element("2 + x + x^-1", z));
  auto f2 = f2_group();
  EXPECT_EQ(parse_element("x + y", f2) * parse_element("x^-1", f2), parse_element("1 + y*x^-1", f2));
  const auto a = parse_element("3 - x*y + 2*y^-2", f2);
  EXPECT_EQ(a * RingElement::one(f2), a);
}

TEST(Multiply, GenericClassIsRefused) {
  auto g = testing::commutator_generic();
  const auto a = parse_element("x + y", g);
  EXPECT_THROW(a * a, UnsupportedClassError);
  EXPECT_THROW(trace(a), UnsupportedClassError);
  EXPECT_THROW(parse_element("x", f2_group()) + parse_element("x", testing::z2_group()), MismatchError);
}

TEST(Star, Examples) {
  auto f2 = f2_group();
  EXPECT_EQ(star(parse_element("2*x + 3*y", f2)), parse_element("2*x^-1 + 3*y^-1", f2));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_element(rng, f2, 5, 3);
    const auto b = random_element(rng, f2, 5, 3);
    EXPECT_EQ(star(star(a)), a);
    EXPECT_EQ(star(a * b), star(b) * star(a));
  }
}

TEST(Trace, Examples) {
  auto z = z_group();
  EXPECT_EQ(trace(parse_element("2 + 3*x", z)), 2);
  EXPECT_EQ(trace(parse_element("x", z)), 0);
  const auto a = parse_element("1 + x", z);
  EXPECT_EQ(trace(star(a) * a), 2);
}

TEST(Trace, TracialOnRandomPairs) {
  std::mt19937_64 rng(17);
  for (const auto& p : {f2_group(), f2xf2_group()}) {
    for (int i = 0; i < 500; ++i) {
      const auto a = random_element(rng, p, 6, 3);
      const auto b = random_element(rng, p, 6, 3);
      ASSERT_EQ(trace(a * b), trace(b * a));
    }
  }
}

TEST(Trace, FaithfulOnHermitianSquares) {
  std::mt19937_64 rng(19);
  auto f2 = f2_group();
  for (int i = 0; i < 200; ++i) {
    const auto a = random_element(rng, f2, 5, 3);
    const Rational t = trace(star(a) * a);
    EXPECT_GE(t, 0);
    EXPECT_EQ(t == 0, a.is_zero());
  }
  EXPECT_EQ(trace(star(RingElement(f2)) * RingElement(f2)), 0);
}

TEST(L1Norm, ExamplesAndInequalities) {
  auto f2 = f2_group();
  EXPECT_EQ(l1_norm(parse_element("1 - x", f2)), 2);
  EXPECT_EQ(l1_norm(parse_element("x + x^-1 + y + y^-1", f2)), 4);
  EXPECT_EQ(l1_norm(RingElement(f2)), 0);
  std::mt19937_64 rng(23);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_element(rng, f2, 5, 3);
    const auto b = random_element(rng, f2, 5, 3);
    EXPECT_LE(l1_norm(a * b), l1_norm(a) * l1_norm(b));
    EXPECT_EQ(l1_norm(star(a)), l1_norm(a));
  }
}

ComplexMatrix random_unitary(std::mt19937_64& rng, Eigen::Index k) {
  std::normal_distribution<double> n(0, 1);
  ComplexMatrix g(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = {n(rng), n(rng)};
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  return qr.householderQ() * ComplexMatrix::Identity(k, k);
}

TEST(Evaluate, Examples) {
  auto z = z_group();
  MatrixAssignment swap{{ComplexMatrix(2, 2)}};
  swap.matrices[0] << 0, 1, 1, 0;
  ComplexMatrix expected(2, 2);
  expected << 0, 2, 2, 0;
  EXPECT_LT((evaluate(parse_element("x + x^-1", z), swap) - expected).norm(), 1e-14);
  EXPECT_LT((evaluate(RingElement::one(z), swap) - ComplexMatrix::Identity(2, 2)).norm(), 1e-14);

  MatrixAssignment singular{{ComplexMatrix::Zero(2, 2)}};
  EXPECT_THROW(evaluate(parse_element("x^-1", z), singular), MismatchError);
  EXPECT_NO_THROW(evaluate(parse_element("x", z), singular));
  MatrixAssignment wrong{{ComplexMatrix::Identity(2, 2), ComplexMatrix::Identity(3, 3)}};
  EXPECT_THROW(evaluate(parse_element("x", f2_group()), wrong), MismatchError);
}

TEST(Evaluate, HomomorphismAndStar) {
  std::mt19937_64 rng(29);
  auto f2 = f2_group();
  for (int i = 0; i < 100; ++i) {
    MatrixAssignment m{{random_unitary(rng, 3), random_unitary(rng, 3)}};
    const auto a = random_element(rng, f2, 4, 3);
    const auto b = random_element(rng, f2, 4, 3);
    const ComplexMatrix ea = evaluate(a, m), eb = evaluate(b, m);
    EXPECT_LT((evaluate(a * b, m) - ea * eb).norm(), 1e-10 * (1 + ea.norm() * eb.norm()));
    EXPECT_LT((evaluate(star(a), m) - ea.adjoint()).norm(), 1e-10);
  }
}

TEST(ProjectAndLift, RoundTrip) {
  auto z2 = testing::z2_group();
  const auto a = parse_element("x*y*x^-1 + y + 2*x^3*y^-1", z2);
  EXPECT_EQ(a, parse_element("2*y + 2*x^3*y^-1", z2));
  const auto lifted = lift_to_free(a);
  EXPECT_TRUE(std::holds_alternative<FreeClass>(lifted.presentation()->structure()));
  EXPECT_EQ(project(lifted, z2), a);
}

}  // namespace
}  // namespace gnorm
