#include <gtest/gtest.h>

#include <random>

#include "gnorm/serialize.hpp"
#include "test_support.hpp"

namespace gnorm {
namespace {

using testing::commutator_generic;
using testing::f2_group;
using testing::z2_group;
using testing::z_group;

BoundsConfig quick() {
  BoundsConfig c;
  c.levels = 1;
  c.moments = 16;
  c.compression_radius = 3;
  c.trials = 4;
  return c;
}

// Every certificate in a report re-checks against the working element.
void expect_certificates_check(const BoundsReport& r) {
  for (const auto& e : r.upper) {
    ASSERT_TRUE(e.certificate.has_value());
    const auto& cert = std::get<UpperCertificate>(r.certificates.at(*e.certificate));
    EXPECT_EQ(verify_certificate(cert, r.working, *r.presentation), "");
    EXPECT_EQ(cert.bound, e.value);
  }
  for (const auto& e : r.lower) {
    if (!e.certificate) continue;
    const auto& body = r.certificates.at(*e.certificate);
    if (const auto* t = std::get_if<UnitaryTuple>(&body)) {
      EXPECT_LE(tuple_residual(*t, *r.presentation), kRelatorTolerance);
      EXPECT_EQ(exact(tuple_lower_bound(r.working, *t)), e.value);
    } else {
      const auto& q = std::get<PermutationQuotient>(body);
      EXPECT_EQ(exact(quotient_rep_lower_bound(r.working, q)), e.value);
    }
  }
}

TEST(Bounds, IntegerExampleReachesTargetGap) {
  auto z = z_group();
  BoundsConfig cfg;
  cfg.amenable = true;
  cfg.target_gap = 0.05;
  const auto r = run_norm_bounds(parse_element("1 + x", z), cfg);
  EXPECT_TRUE(r.target_reached);
  EXPECT_EQ(r.norm_kind, NormKind::ReducedViaAmenable);
  ASSERT_TRUE(r.best_upper().has_value());
  EXPECT_EQ(*r.best_upper(), 2);
  EXPECT_GE(r.best_lower().get_d(), 1.95);
  EXPECT_LE(r.gap()->get_d(), 0.05);
  expect_certificates_check(r);
}

TEST(Bounds, FreeSymmetricSumPinches) {
  auto f2 = f2_group();
  const auto r = run_norm_bounds(parse_element("x + x^-1 + y + y^-1", f2), quick());
  EXPECT_EQ(r.upper.front().level, 0u);
  EXPECT_EQ(r.upper.front().value, 4);
  EXPECT_LE(r.gap()->get_d(), 1e-6);
  EXPECT_TRUE(r.sandwich_holds());
  expect_certificates_check(r);
}

TEST(Bounds, AbelianMomentAtSixtyFour) {
  auto z2 = z2_group();
  BoundsConfig cfg = quick();
  cfg.amenable = true;
  cfg.moments = 64;
  const auto r = run_norm_bounds(parse_element("x + x^-1 + y + y^-1", z2), cfg);
  bool found = false;
  for (const auto& e : r.lower) {
    if (e.source == LowerSource::Moment && e.detail.rfind("n=64 ", 0) == 0) {
      found = true;
      EXPECT_GE(e.value.get_d(), 3.8);
    }
  }
  EXPECT_TRUE(found);
  for (const auto& e : r.upper) EXPECT_GE(e.value.get_d(), 4 - 1e-9);
}

TEST(Bounds, SandwichOnRandomFreeElements) {
  std::mt19937_64 rng(109);
  auto f2 = f2_group();
  for (int trial = 0; trial < 4; ++trial) {
    const auto a = testing::random_element(rng, f2, 4, 1);
    const auto r = run_norm_bounds(a, quick());
    EXPECT_TRUE(r.sandwich_holds()) << format_element(a);
    for (const auto& n : r.notes) EXPECT_EQ(n.find("sandwich violated"), std::string::npos);
    const auto rl = r.running_lower();
    const auto ru = r.running_upper();
    EXPECT_TRUE(nondecreasing(rl));
    EXPECT_TRUE(nonincreasing(ru));
    expect_certificates_check(r);
  }
}

TEST(Bounds, DeterministicUnderFixedSeed) {
  std::mt19937_64 rng(113);
  const auto a = testing::random_element(rng, testing::f2xf2_group(), 4, 1);
  const auto r1 = run_norm_bounds(a, quick());
  const auto r2 = run_norm_bounds(a, quick());
  EXPECT_EQ(report_json(r1, false), report_json(r2, false));
}

TEST(Bounds, GenericPresentationUsesQuotients) {
  auto g = commutator_generic();
  const auto r = run_norm_bounds(parse_element("x + x^-1 + y + y^-1", g), quick());
  bool quotient = false;
  for (const auto& e : r.lower) quotient |= e.source == LowerSource::Quotient;
  EXPECT_TRUE(quotient);
  EXPECT_LE(r.gap()->get_d(), 1e-6);
  expect_certificates_check(r);
}

TEST(Bounds, MergesEqualSupportWords) {
  auto g = commutator_generic();
  const auto a = parse_element("1 - x*y*x^-1*y^-1 + 2*x*y - 2*y*x", g);
  std::vector<std::string> notes;
  const auto merged = merge_equal_support(a, &notes);
  EXPECT_TRUE(merged.is_zero());
  EXPECT_EQ(notes.size(), 1u);
  const auto r = run_norm_bounds(a, quick());
  EXPECT_EQ(*r.best_upper(), 0);
}

TEST(Bounds, ConfigValidation) {
  auto z = z_group();
  BoundsConfig bad;
  bad.budget_steps = 0;
  EXPECT_THROW(run_norm_bounds(parse_element("x", z), bad), MismatchError);
  bad = {};
  bad.target_gap = -1;
  EXPECT_THROW(run_norm_bounds(parse_element("x", z), bad), MismatchError);
}

TEST(Bounds, BudgetIsStepCounted) {
  auto f2 = f2_group();
  BoundsConfig cfg = quick();
  cfg.budget_steps = 1;
  cfg.target_gap = 0;
  const auto r = run_norm_bounds(parse_element("1 + x + y*x", f2), cfg);
  EXPECT_EQ(r.rounds, 1u);
  for (const auto& [engine, used] : r.steps) EXPECT_LE(used, 1u) << engine;
  EXPECT_TRUE(r.budget_exhausted);
}

// Word problem and norm engines agree on ||1 - w|| for words over <x,y|[x,y]>.
TEST(Bounds, WordProblemConsistency) {
  std::mt19937_64 rng(127);
  auto g = commutator_generic();
  BoundsConfig cfg = quick();
  cfg.target_gap = 0.25;
  int decided = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Word w = testing::random_word(rng, 2, 6);
    const Verdict v = decide_word(w, *g, {100'000, 100'000, 6});
    ASSERT_FALSE(std::holds_alternative<Exhausted>(v));
    const auto a = RingElement::one(g) - RingElement::monomial(g, w, 1);
    const auto r = run_norm_bounds(a, cfg);
    const bool nontrivial = r.best_lower() >= Rational(1, 2);
    const bool trivial = r.best_upper() && *r.best_upper() < Rational(1, 2);
    EXPECT_FALSE(nontrivial && trivial);
    if (nontrivial) {
      EXPECT_TRUE(std::holds_alternative<Nontrivial>(v)) << format_word(w, g->alphabet());
    }
    if (trivial) {
      EXPECT_TRUE(std::holds_alternative<Trivial>(v)) << format_word(w, g->alphabet());
    }
    decided += nontrivial || trivial;
  }
  EXPECT_EQ(decided, 20);
}

TEST(Invertibility, Examples) {
  auto z = z_group();
  const auto inv = decide_invertibility(parse_element("3 + x", z), quick());
  EXPECT_EQ(inv.kind, InvertibilityKind::Invertible);
  EXPECT_EQ(inv.lambda, 16);
  ASSERT_TRUE(inv.certificate.has_value());
  EXPECT_LT(inv.certificate->bound, 16);
  EXPECT_EQ(verify_certificate(*inv.certificate, inv.shifted, *z), "");
  EXPECT_EQ(inv.shifted, parse_element("6 - 3*x - 3*x^-1", z));

  const auto not_inv = decide_invertibility(parse_element("1 - x", z), quick(), 1e-2);
  EXPECT_EQ(not_inv.kind, InvertibilityKind::NotInvertibleWithinTolerance);
  EXPECT_GE(not_inv.lower.get_d(), 4 - 1e-2);

  EXPECT_EQ(decide_invertibility(parse_element("3", z), quick()).kind, InvertibilityKind::Invertible);
  EXPECT_THROW(decide_invertibility(RingElement(z), quick()), MismatchError);
}

TEST(Spectrum, Examples) {
  auto z = z_group();
  const std::tuple<const char*, double, double> cases[] = {{"x + x^-1", -2, 2}, {"1", 1, 1}, {"2 + x + x^-1", 0, 4}};
  for (const auto& [text, lo, hi] : cases) {
    const auto s = spectrum_interval(parse_element(text, z), quick());
    EXPECT_LE(s.bottom.low, exact(lo)) << text;
    EXPECT_GE(s.bottom.high, exact(lo)) << text;
    EXPECT_LE(s.top.low, exact(hi)) << text;
    EXPECT_GE(s.top.high, exact(hi)) << text;
    EXPECT_LE(Rational(s.bottom.high - s.bottom.low).get_d(), 1e-3) << text;
    EXPECT_LE(Rational(s.top.high - s.top.low).get_d(), 1e-3) << text;
  }
  EXPECT_THROW(spectrum_interval(parse_element("x", z), quick()), MismatchError);
}

TEST(Report, JsonRoundTrip) {
  const std::pair<PresentationPtr, const char*> cases[] = {
      {z_group(), "1 + x"}, {testing::f2xf2_group(), "x + z^-1"}, {commutator_generic(), "x + y"}};
  for (const auto& [p, text] : cases) {
    const auto r = run_norm_bounds(parse_element(text, p), quick());
    const Json j = report_json(r);
    const Json again = report_json(report_from_json(Json::parse(j.dump())));
    EXPECT_EQ(j, again) << text;
    EXPECT_TRUE(monotone_flags_consistent(j));
    // Certificates parsed back still verify.
    expect_certificates_check(report_from_json(j));
  }
}

TEST(Report, TamperedFlagsAreDetected) {
  const auto r = run_norm_bounds(parse_element("1 + x", z_group()), quick());
  Json j = report_json(r);
  j["monotone"]["lower"] = false;
  EXPECT_FALSE(monotone_flags_consistent(j));
}

TEST(Report, EmptyLowerIsValid) {
  BoundsReport r(parse_element("x", z_group()));
  const Json j = report_json(r);
  EXPECT_TRUE(j.at("lower").is_array());
  EXPECT_TRUE(j.at("lower").empty());
  EXPECT_TRUE(j.at("gap").is_null());
  EXPECT_EQ(report_json(report_from_json(j)), j);
}

TEST(Report, Csv) {
  const auto r = run_norm_bounds(parse_element("x + x^-1 + y + y^-1", f2_group()), quick());
  const std::string csv = report_csv(r);
  EXPECT_EQ(csv.rfind("index,p_n,q_n\n0,", 0), 0u);
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), r.rounds + 2);
}

TEST(Certificates, TupleAndSosJson) {
  std::mt19937_64 rng(131);
  const UnitaryTuple t{2, {haar_unitary(rng, 2)}, Verified{1e-12}};
  const Json j = tuple_json(t);
  const auto back = tuple_from_json(j);
  EXPECT_EQ(back.matrices[0], t.matrices[0]);
  EXPECT_EQ(std::get<Verified>(back.feasibility).residual, 1e-12);

  auto g = commutator_generic();
  const auto a = parse_element("1 + x", g);
  const auto level = upper_bound_level(a, *g, 1);
  ASSERT_TRUE(level.certificate.has_value());
  const auto cert = certificate_from_json(certificate_json(*level.certificate, *g), *g);
  EXPECT_EQ(verify_certificate(cert, a, *g), "");
  EXPECT_EQ(cert.bound, level.certificate->bound);
}

}  // namespace
}  // namespace gnorm
