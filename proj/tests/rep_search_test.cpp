#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gnorm/lambda_lower.hpp"
#include "gnorm/rep_search.hpp"
#include "gnorm/universal_upper.hpp"
#include "test_support.hpp"

namespace gnorm {
namespace {

using testing::commutator_generic;
using testing::f2_group;
using testing::random_element;
using testing::z_group;

ComplexMatrix scalar(double v) { return ComplexMatrix::Constant(1, 1, v); }

TEST(Choi, SmallExamples) {
  const auto u0 = choi_dilate(scalar(0));
  EXPECT_LE((u0 - (ComplexMatrix(2, 2) << 0, 1, 1, 0).finished()).norm(), 1e-15);
  const auto u1 = choi_dilate(scalar(1));
  EXPECT_LE((u1 - (ComplexMatrix(2, 2) << 1, 0, 0, -1).finished()).norm(), 1e-15);
  const double h = std::sqrt(3.0) / 2;
  const auto uh = choi_dilate(scalar(0.5));
  EXPECT_LE((uh - (ComplexMatrix(2, 2) << 0.5, h, h, -0.5).finished()).norm(), 1e-15);
}

TEST(Choi, RandomContractions) {
  std::mt19937_64 rng(61);
  for (Eigen::Index k : {1, 2, 4, 8}) {
    for (int trial = 0; trial < 100; ++trial) {
      const ComplexMatrix t = random_contraction(rng, k);
      const ComplexMatrix u = choi_dilate(t);
      ASSERT_EQ(u.rows(), 2 * k);
      EXPECT_LE((u.adjoint() * u - ComplexMatrix::Identity(2 * k, 2 * k)).norm(), 1e-9);
      EXPECT_LE((u.topLeftCorner(k, k) - t).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(Choi, ClipsLargeInputs) {
  std::mt19937_64 rng(67);
  const ComplexMatrix t = 3.0 * haar_unitary(rng, 3) + random_contraction(rng, 3);
  const ComplexMatrix u = choi_dilate(t);
  EXPECT_LE((u.adjoint() * u - ComplexMatrix::Identity(6, 6)).norm(), 1e-9);
}

TEST(Haar, IsUnitary) {
  std::mt19937_64 rng(71);
  for (Eigen::Index k : {1, 3, 7}) {
    const auto u = haar_unitary(rng, k);
    EXPECT_LE((u.adjoint() * u - ComplexMatrix::Identity(k, k)).norm(), 1e-12);
  }
}

TEST(StructuredSearch, TrivialRepresentationExamples) {
  auto f2 = f2_group();
  const auto sym = structured_rep_lower_bound(parse_element("x + x^-1 + y + y^-1", f2), *f2, 1, 1, 1);
  EXPECT_NEAR(sym.value, 4.0, 2e-8);
  EXPECT_LE(sym.value, 4.0);
  const auto three = structured_rep_lower_bound(parse_element("1 + x + y", f2), *f2, 2, 3, 1);
  EXPECT_NEAR(three.value, 3.0, 2e-8);

  auto z = z_group();
  for (std::size_t k : {1, 2, 4}) {
    EXPECT_NEAR(structured_rep_lower_bound(parse_element("x", z), *z, k, 3, 5).value, 1.0, 2e-8);
  }
}

TEST(StructuredSearch, AscentFindsTheIntegerNorm) {
  // ||1 - x|| = 2 on Z needs the character x -> -1; trial 0 gives 0.
  auto z = z_group();
  const auto r = structured_rep_lower_bound(parse_element("1 - x", z), *z, 2, 6, 3);
  EXPECT_GT(r.value, 2.0 - 1e-6);
  EXPECT_LE(r.value, 2.0);
}

TEST(StructuredSearch, RunningBestIsMonotoneAndDeterministic) {
  std::mt19937_64 rng(73);
  auto f2 = f2_group();
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_element(rng, f2, 4, 2);
    const auto r1 = structured_rep_lower_bound(a, *f2, 2, 6, 99);
    const auto r2 = structured_rep_lower_bound(a, *f2, 2, 6, 99);
    EXPECT_EQ(r1.running_best, r2.running_best);
    EXPECT_EQ(r1.best_trial, r2.best_trial);
    ASSERT_EQ(r1.running_best.size(), 6u);
    for (std::size_t i = 1; i < r1.running_best.size(); ++i) EXPECT_LE(r1.running_best[i - 1], r1.running_best[i]);
    EXPECT_EQ(r1.value, r1.running_best.back());
  }
}

TEST(StructuredSearch, TuplesAreExactForEveryClass) {
  std::mt19937_64 rng(79);
  for (const auto& p : {f2_group(), testing::z2_group(), testing::f2xf2_group()}) {
    const auto a = random_element(rng, p, 4, 2);
    const auto r = structured_rep_lower_bound(a, *p, 2, 4, 7);
    EXPECT_LE(tuple_residual(r.tuple, *p), kRelatorTolerance);
    EXPECT_TRUE(std::holds_alternative<ExactByConstruction>(r.tuple.feasibility));
    EXPECT_LE(r.value, l1_norm(a).get_d());
    // Recomputing from the stored tuple reproduces the value.
    EXPECT_EQ(tuple_lower_bound(a, r.tuple), r.value);
  }
  EXPECT_EQ(structured_rep_lower_bound(parse_element("x", testing::f2xf2_group()), *testing::f2xf2_group(), 3, 1, 1)
                .tuple.dimension,
            9u);
}

// Sup of |sum c_n e^{i<n,theta>}| over the torus on a fine grid, plus the
// Lipschitz error of the grid.
double torus_upper(const RingElement& a) {
  const int steps = 720;
  double best = 0, lip = 0;
  for (const auto& [u, c] : a.terms()) {
    const auto e = exponent_vector(u.word(), 2);
    lip += std::abs(c.get_d()) * (std::abs(e[0]) + std::abs(e[1]));
  }
  for (int i = 0; i < steps; ++i)
    for (int j = 0; j < steps; ++j) {
      const double s = 2 * M_PI * i / steps, t = 2 * M_PI * j / steps;
      std::complex<double> v = 0;
      for (const auto& [u, c] : a.terms()) {
        const auto e = exponent_vector(u.word(), 2);
        v += c.get_d() * std::polar(1.0, e[0] * s + e[1] * t);
      }
      best = std::max(best, std::abs(v));
    }
  return best + lip * M_PI / steps;
}

TEST(StructuredSearch, AbelianValuesStayBelowTheTorusMaximum) {
  std::mt19937_64 rng(83);
  auto z2 = testing::z2_group();
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_element(rng, z2, 4, 2);
    const auto r = structured_rep_lower_bound(a, *z2, 4, 4, 11);
    const double top = torus_upper(a);
    EXPECT_LE(r.value, top);
    EXPECT_GE(r.value, 0.9 * (top - 0.1));
  }
}

TEST(StructuredSearch, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(89);
  auto f2 = f2_group();
  const auto a = random_element(rng, f2, 5, 3);
  detail::TupleAscent ascent(a, detail::make_layout(*f2, 3));
  const std::vector<ComplexMatrix> factors{haar_unitary(rng, 3), haar_unitary(rng, 3)};
  const auto t = ascent.assemble(factors);
  const Eigen::VectorXcd xi = Eigen::VectorXcd::Random(3), eta = Eigen::VectorXcd::Random(3);
  const auto grad = ascent.gradient(t, xi, eta);
  const double eps = 1e-6;
  for (std::size_t g = 0; g < 2; ++g) {
    const ComplexMatrix dir = detail::gaussian(rng, 3, 3);
    auto plus = t, minus = t;
    plus.matrices[g] += eps * dir;
    minus.matrices[g] -= eps * dir;
    const double fd =
        (eta.dot(ascent.operator_of(plus) * xi).real() - eta.dot(ascent.operator_of(minus) * xi).real()) / (2 * eps);
    const double analytic = (grad[g].adjoint() * dir).trace().real();
    EXPECT_NEAR(fd, analytic, 1e-6 * std::max(1.0, std::abs(analytic)));
  }
}

TEST(StructuredSearch, Errors) {
  auto g = commutator_generic();
  EXPECT_THROW(structured_rep_lower_bound(parse_element("x", g), *g, 1, 1, 1), UnsupportedClassError);
  auto f = testing::f2xf2_group();
  EXPECT_THROW(structured_rep_lower_bound(parse_element("x", f), *f, 17, 1, 1), ResourceLimitError);
}

PermutationQuotient klein_four() {
  return {4, {{1, 0, 3, 2}, {2, 3, 0, 1}}};
}

TEST(QuotientBound, Examples) {
  auto g = commutator_generic();
  const double v = quotient_rep_lower_bound(parse_element("x + x^-1 + y + y^-1", g), klein_four());
  EXPECT_NEAR(v, 4.0, 2e-8);
  EXPECT_LE(v, 4.0);
  const PermutationQuotient trivial{1, {{0}, {0}}};
  EXPECT_EQ(quotient_rep_lower_bound(parse_element("1 - x", g), trivial), 0.0);
  EXPECT_NEAR(quotient_rep_lower_bound(parse_element("1", g), klein_four()), 1.0, 2e-8);
  EXPECT_NEAR(quotient_rep_lower_bound(parse_element("1", g), trivial), 1.0, 2e-8);
  // Explicit spectrum on the Klein four-group: 1 - x has eigenvalues 0 and 2.
  EXPECT_NEAR(quotient_rep_lower_bound(parse_element("1 - x", g), klein_four()), 2.0, 2e-8);
}

TEST(QuotientBound, RejectsNonQuotients) {
  auto g = commutator_generic();
  const PermutationQuotient s3{3, {{1, 2, 0}, {1, 0, 2}}};
  EXPECT_THROW(quotient_rep_lower_bound(parse_element("x", g), s3), VerificationError);
}

TEST(QuotientBound, PermutationTupleIsAHomomorphism) {
  const PermutationQuotient s3{3, {{1, 2, 0}, {1, 0, 2}}};
  const auto t = permutation_tuple(s3);
  auto f2 = f2_group();
  std::mt19937_64 rng(97);
  const auto m = t.assignment();
  const auto inv = inverse_matrices(m, {true, true});
  for (int trial = 0; trial < 30; ++trial) {
    const Word w = testing::random_word(rng, 2, 6);
    const auto img = s3.evaluate(w);
    const ComplexMatrix mw = evaluate_word(w, m, inv);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(mw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(img[i])), 1.0);
    }
  }
}

TEST(Dilation, DominatesTheCompressionBound) {
  std::mt19937_64 rng(101);
  auto f2 = f2_group();
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_element(rng, f2, 4, 1);
    const auto t = dilated_compression_tuple(a, 1);
    EXPECT_LE(tuple_residual(t, *f2), 1e-9);
    const double v = tuple_lower_bound(a, t);
    EXPECT_GE(v, compression_lower_bound(a, 1).bound.get_d() - 1e-6);
    EXPECT_LE(v, l1_norm(a).get_d());
  }
  auto z = z_group();
  const auto a = parse_element("1 + x", z);
  EXPECT_GE(tuple_lower_bound(a, dilated_compression_tuple(a, 3)), compression_lower_bound(a, 3).bound.get_d() - 1e-6);
}

TEST(Sandwich, RepresentationsStayBelowCertifiedUpperBounds) {
  std::mt19937_64 rng(103);
  auto f2 = f2_group();
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_element(rng, f2, 4, 1);
    const auto lower = structured_rep_lower_bound(a, *f2, 2, 4, 13);
    const auto upper = upper_bound_level(a, *f2, 1);
    ASSERT_TRUE(upper.certificate.has_value()) << upper.note;
    EXPECT_LE(exact(lower.value), upper.certificate->bound);
  }
}

TEST(ChoiDimension, Formula) {
  auto f2 = f2_group();
  EXPECT_EQ(choi_dimension(parse_element("x*y + 1", f2)), 16u);
  EXPECT_EQ(choi_dimension(parse_element("3", f2)), 4u);
}

}  // namespace
}  // namespace gnorm
