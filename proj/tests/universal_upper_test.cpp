#include <gtest/gtest.h>

#include <random>

#include "gnorm/universal_upper.hpp"
#include "test_support.hpp"

namespace gnorm {
namespace {

using testing::commutator_generic;
using testing::f2_group;
using testing::z_group;

TEST(SosProgram, Shapes) {
  auto z = z_group();
  const auto prog = assemble_sos_program(parse_element("1 + x", z), *z, 1);
  EXPECT_EQ(prog.block_count(), 1u);
  EXPECT_EQ(prog.block_size(), 3u);
  ASSERT_EQ(prog.rows.size(), 5u);
  EXPECT_TRUE(prog.rows[0].is_identity());

  auto f2 = f2_group();
  const auto pf = assemble_sos_program(parse_element("x + y", f2), *f2, 1);
  EXPECT_EQ(pf.block_count(), 1u);
  EXPECT_EQ(pf.block_size(), 5u);

  auto g = commutator_generic();
  const auto pg = assemble_sos_program(parse_element("x + y", g), *g, 1);
  EXPECT_EQ(pg.block_count(), 3u);
  EXPECT_EQ(pg.block_size(), 5u);
  EXPECT_THROW(assemble_sos_program(parse_element("x^2", z), *z, 1), MismatchError);
}

TEST(SosProgram, EntriesReproduceTheFormalSum) {
  // Summing coefficient * word over all entries of a Gram matrix of ones must
  // equal sum_{g,h} g^-1 (1 - r) h expanded directly.
  auto g = commutator_generic();
  const auto prog = assemble_sos_program(parse_element("x", g), *g, 1);
  for (std::size_t b = 0; b < prog.block_count(); ++b) {
    std::map<Word, long> from_entries, direct;
    for (std::size_t i = 0; i < prog.rows.size(); ++i)
      for (const auto& e : prog.entries[i])
        if (e.block == b) from_entries[prog.rows[i]] += e.coefficient;
    for (const auto& u : prog.basis)
      for (const auto& v : prog.basis) {
        direct[u.inverse() * v] += 1;
        if (!prog.block_words[b].is_identity()) direct[u.inverse() * prog.block_words[b] * v] -= 1;
      }
    std::erase_if(from_entries, [](const auto& kv) { return kv.second == 0; });
    std::erase_if(direct, [](const auto& kv) { return kv.second == 0; });
    EXPECT_EQ(from_entries, direct);
  }
}

TEST(SosSolve, ExactCertificateOnZ) {
  auto z = z_group();
  const auto a = parse_element("1 + x", z);
  const auto prog = assemble_sos_program(a, *z, 1);
  const auto num = solve_sos_program(prog);
  ASSERT_EQ(num.status, SdpStatus::Optimal);
  EXPECT_NEAR(num.lambda, 4.0, 1e-6);
  EXPECT_NEAR(num.dual_value, 4.0, 1e-6);
  const auto cert = certify_upper_bound(prog, num.gram);
  EXPECT_EQ(cert.bound, 2);
  EXPECT_TRUE(cert.residual.is_zero());
  EXPECT_EQ(verify_certificate(cert, a, *z), "");
}

TEST(SosSolve, SoundOnTheIntegerFamily) {
  auto z = z_group();
  const std::pair<const char*, double> family[] = {{"1 + x", 2.0}, {"x", 1.0}, {"2 + x + x^-1", 4.0}};
  for (const auto& [text, norm] : family) {
    const auto a = parse_element(text, z);
    const auto seq = upper_bound_sequence(a, *z, {1, 2});
    for (const auto& l : seq) {
      ASSERT_TRUE(l.certificate.has_value()) << text << " level " << l.level << ": " << l.note;
      EXPECT_GE(l.certificate->bound, Rational(exact(norm)));
      EXPECT_LE(l.certificate->bound.get_d(), norm + 1e-3);
      EXPECT_EQ(verify_certificate(*l.certificate, a, *z), "");
    }
    EXPECT_LE(seq[1].running_min, seq[0].running_min);
  }
}

TEST(SosSolve, StrongDualityAndDualFeasibility) {
  auto z = z_group();
  auto g = commutator_generic();
  const std::pair<RingElement, PresentationPtr> cases[] = {
      {parse_element("1 + x", z), z},
      {parse_element(testing::symmetric_sum_text(*g), g), g},
      {parse_element("1 + x + y", g), g},
  };
  for (const auto& [a, p] : cases) {
    const auto prog = assemble_sos_program(a, *p, 1);
    const auto num = solve_sos_program(prog);
    ASSERT_EQ(num.status, SdpStatus::Optimal);
    EXPECT_LE(std::abs(num.lambda - num.dual_value), 1e-6);
    const MomentProgram dual(prog);
    const auto check = dual.check(num.phi, 1e-6);
    EXPECT_TRUE(check.feasible) << check.reason << " " << check.min_eigenvalue;
    EXPECT_NEAR(dual.objective(num.phi), num.dual_value, 1e-6);
  }
}

TEST(MomentProgram, TraceFunctionalIsFeasible) {
  std::mt19937_64 rng(59);
  auto g = commutator_generic();
  for (std::size_t level = 1; level <= 2; ++level) {
    const auto a = testing::random_element(rng, testing::f2_group(), 3, 1);
    const auto lifted = parse_element(format_element(a), g);
    const MomentProgram dual = assemble_dual_program(lifted, *g, level);
    const auto phi = dual.trace_functional();
    EXPECT_TRUE(dual.check(phi).feasible);
    EXPECT_DOUBLE_EQ(dual.objective(phi), trace(star(a) * a).get_d());
    auto bad = phi;
    bad[0] = 0.5;
    EXPECT_FALSE(dual.check(bad).feasible);
  }
}

TEST(Certificate, FormulaAndForgeryDetection) {
  auto z = z_group();
  const auto a = parse_element("1 + x", z);
  const auto prog = assemble_sos_program(a, *z, 1);
  // Gram of (1 - x)*(1 - x) on the basis (e, x, x^-1).
  Eigen::MatrixXd gram(3, 3);
  gram << 1, -1, 0, -1, 1, 0, 0, 0, 0;
  auto cert = certify_upper_bound(prog, {gram});
  EXPECT_EQ(cert.bound_squared, 4);
  EXPECT_EQ(cert.bound, 2);

  // An exact Gram whose identity misses by 1/200 on x and on x^-1 pays 1/100.
  UpperCertificate off{1, prog.basis, prog.block_words, {RationalMatrix(3)}, 0, RingElement(prog.square.presentation()),
                       0, 0, "manual"};
  off.gram[0](0, 0) = 1;
  off.gram[0](1, 1) = 1;
  off.gram[0](0, 1) = off.gram[0](1, 0) = Rational(-199, 200);
  detail::finish_certificate(off, prog.square);
  EXPECT_EQ(off.lambda, 4);
  EXPECT_EQ(off.bound_squared, Rational(401, 100));
  EXPECT_EQ(off.bound, root_up(Rational(401, 100), 2));
  EXPECT_EQ(verify_certificate(off, a, *z), "");

  // Slightly indefinite input is clipped and still certifies near 2.
  gram << 1, -1, 0, -1, 1, 0, 0, 0, -1e-8;
  const auto clipped = certify_upper_bound(prog, {gram});
  EXPECT_GE(clipped.bound, 2);
  EXPECT_LE(clipped.bound.get_d(), 2 + 1e-6);

  auto forged = cert;
  forged.bound = Rational(199, 100);
  EXPECT_NE(verify_certificate(forged, a, *z), "");
  forged = cert;
  forged.gram[0](0, 0) = -1;
  EXPECT_NE(verify_certificate(forged, a, *z), "");
  forged = cert;
  forged.lambda = 3;
  EXPECT_NE(verify_certificate(forged, a, *z), "");
}

TEST(ExactPsd, SmallCases) {
  RationalMatrix m(2);
  m(0, 0) = 1; m(0, 1) = 1; m(1, 0) = 1; m(1, 1) = 1;
  EXPECT_TRUE(is_psd(m));
  m(1, 1) = Rational(99, 100);
  EXPECT_FALSE(is_psd(m));
  RationalMatrix z(2);
  z(0, 1) = 1; z(1, 0) = 1;
  EXPECT_FALSE(is_psd(z));
  EXPECT_TRUE(is_psd(RationalMatrix(3)));
}

TEST(UpperSequence, FreeGroupSymmetricSumIsSound) {
  auto f2 = f2_group();
  const auto a = parse_element(testing::symmetric_sum_text(*f2), f2);
  const auto seq = upper_bound_sequence(a, *f2, {1, 2});
  for (const auto& l : seq) {
    ASSERT_TRUE(l.certificate.has_value()) << l.note;
    EXPECT_GE(l.certificate->bound.get_d(), 4 - 1e-9);
  }
}

TEST(L1Certificate, ExactOnRandomElements) {
  std::mt19937_64 rng(107);
  for (const auto& p : {f2_group(), testing::z2_group(), testing::f2xf2_group(), commutator_generic()}) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto a = testing::random_element(rng, p, 5, 3);
      const auto cert = l1_certificate(a);
      EXPECT_TRUE(cert.residual.is_zero());
      EXPECT_EQ(cert.lambda, l1_norm(lift_to_free(a)) * l1_norm(lift_to_free(a)));
      EXPECT_EQ(cert.bound, l1_norm(lift_to_free(a)));
      EXPECT_EQ(verify_certificate(cert, a, *p), "");
    }
  }
}

}  // namespace
}  // namespace gnorm
