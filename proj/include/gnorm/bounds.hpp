#pragma once

// Orchestration of the bound engines: lock-step rounds, monotone merging,
// invertibility and spectrum decisions.

#include <chrono>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gnorm/group_ring.hpp"
#include "gnorm/lambda_lower.hpp"
#include "gnorm/rep_search.hpp"
#include "gnorm/universal_upper.hpp"
#include "gnorm/word_problem.hpp"

namespace gnorm {

enum class NormKind { Universal, ReducedViaAmenable };
enum class LowerSource { Moment, Compression, Representation, Quotient };

inline const char* to_string(NormKind k) { return k == NormKind::Universal ? "universal" : "reduced-via-amenable"; }

inline const char* to_string(LowerSource s) {
  switch (s) {
    case LowerSource::Moment: return "moment";
    case LowerSource::Compression: return "compression";
    case LowerSource::Representation: return "representation";
    case LowerSource::Quotient: return "quotient";
  }
  return "?";
}

struct BoundsConfig {
  std::optional<double> target_gap;
  std::size_t budget_steps = 64;  ///< per engine
  std::size_t levels = 2;
  std::size_t moments = 64;
  std::size_t compression_radius = 6;
  std::size_t rep_dim = 2;
  std::size_t trials = 8;
  std::uint64_t seed = 1;
  std::size_t quotient_degree = 4;
  bool amenable = false;
  std::size_t max_rows = 3000;
  std::size_t support_cap = 200'000;

  void validate() const {
    if (budget_steps == 0) throw MismatchError("budget must be positive");
    if (target_gap && !(*target_gap >= 0)) throw MismatchError("target gap must be nonnegative");
    if (rep_dim == 0) throw MismatchError("representation dimension must be positive");
    if (quotient_degree == 0) throw MismatchError("quotient degree must be positive");
  }
};

struct LowerEntry {
  Rational value;
  LowerSource source = LowerSource::Moment;
  bool certified = true;
  std::size_t round = 0;  ///< step-counted timestamp
  std::string detail;
  std::optional<std::size_t> certificate;
  double wall_seconds = 0;  ///< advisory
};

struct UpperEntry {
  Rational value;
  std::size_t level = 0;
  bool certified = true;
  std::size_t round = 0;
  std::string detail;
  std::optional<std::size_t> certificate;
  double wall_seconds = 0;
};

using CertificateBody = std::variant<UpperCertificate, UnitaryTuple, PermutationQuotient>;

struct BoundsReport {
  PresentationPtr presentation;
  RingElement element;
  RingElement working;  ///< element after merging equal support words
  NormKind norm_kind = NormKind::Universal;
  std::vector<LowerEntry> lower;
  std::vector<UpperEntry> upper;
  std::vector<CertificateBody> certificates;
  BoundsConfig config;
  std::map<std::string, std::size_t> steps;  ///< budget accounting per engine
  std::vector<std::string> notes;
  std::size_t rounds = 0;
  bool target_reached = false;
  bool budget_exhausted = false;
  double wall_seconds = 0;

  explicit BoundsReport(const RingElement& a) : presentation(a.presentation()), element(a), working(a) {}

  /// Largest certified lower bound; 0 when there is none.
  Rational best_lower() const {
    Rational b = 0;
    for (const auto& e : lower)
      if (e.certified && e.value > b) b = e.value;
    return b;
  }
  std::optional<Rational> best_upper() const {
    std::optional<Rational> b;
    for (const auto& e : upper)
      if (e.certified && (!b || e.value < *b)) b = e.value;
    return b;
  }
  std::optional<Rational> gap() const {
    const auto u = best_upper();
    if (!u) return std::nullopt;
    return *u - best_lower();
  }

  /// Running extremes after each entry: nondecreasing and nonincreasing.
  std::vector<Rational> running_lower() const {
    std::vector<Rational> out;
    Rational b = 0;
    for (const auto& e : lower) {
      if (e.certified && e.value > b) b = e.value;
      out.push_back(b);
    }
    return out;
  }
  std::vector<Rational> running_upper() const {
    std::vector<Rational> out;
    for (const auto& e : upper) {
      if (!e.certified) continue;
      out.push_back(out.empty() || e.value < out.back() ? e.value : out.back());
    }
    return out;
  }

  /// Every certified lower entry is at most every certified upper entry.
  bool sandwich_holds() const {
    const auto u = best_upper();
    return !u || best_lower() <= *u;
  }
};

// ---------------------------------------------------------------------------
// Support merging for generic presentations

/// Merges support words that the word problem proves equal in the group
/// (including words equal to e). Terms without a verdict are kept apart.
inline RingElement merge_equal_support(const RingElement& a, std::vector<std::string>* notes = nullptr,
                                       const WordBudget& budget = {20'000, 20'000, 4},
                                       std::size_t max_terms = 16) {
  const PresentationPtr& p = a.presentation();
  if (p->has_normal_form() || a.support_size() > max_terms) return a;
  std::vector<std::pair<Word, Rational>> reps;
  std::size_t merged = 0;
  for (const auto& [u, c] : a.terms()) {
    const Word& w = u.word();
    bool done = false;
    std::vector<Word> candidates{Word{}};
    for (const auto& r : reps) candidates.push_back(r.first);
    for (const auto& r : candidates) {
      if (r == w) continue;
      const Verdict v = decide_word(w * r.inverse(), *p, budget);
      if (!std::holds_alternative<Trivial>(v)) continue;
      auto it = std::find_if(reps.begin(), reps.end(), [&](const auto& kv) { return kv.first == r; });
      if (it == reps.end()) reps.emplace_back(r, c);
      else it->second += c;
      ++merged;
      done = true;
      break;
    }
    if (!done) {
      auto it = std::find_if(reps.begin(), reps.end(), [&](const auto& kv) { return kv.first == w; });
      if (it == reps.end()) reps.emplace_back(w, c);
      else it->second += c;
    }
  }
  if (merged == 0) return a;
  RingElement out(p);
  for (const auto& [w, c] : reps) out = out + RingElement::monomial(p, w, c);
  if (notes) {
    notes->push_back("merged " + std::to_string(merged) + " support words equal in the group; working element " +
                     format_element(out));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Engines

namespace detail {

struct LowerFinding {
  Rational value;
  LowerSource source;
  std::string detail;
  std::optional<CertificateBody> certificate;
};

struct UpperFinding {
  Rational value;
  std::size_t level;
  std::string detail;
  UpperCertificate certificate;
};

struct StepResult {
  std::vector<LowerFinding> lower;
  std::vector<UpperFinding> upper;
  std::vector<std::string> notes;
  bool finished = false;  ///< the engine has nothing left to do
};

class Engine {
 public:
  virtual ~Engine() = default;
  virtual const char* name() const = 0;
  virtual StepResult step() = 0;
};

class UpperEngine : public Engine {
 public:
  UpperEngine(const RingElement& a, const BoundsConfig& cfg) : a_(a), cfg_(cfg) {
    level_ = std::max<std::size_t>(1, lift_to_free(a).radius());
    last_ = level_ + cfg.levels;
    opt_.max_rows = cfg.max_rows;
  }
  const char* name() const override { return "upper"; }
  StepResult step() override {
    StepResult out;
    const std::size_t level = level_++;
    UpperLevel l = upper_bound_level(a_, *a_.presentation(), level, opt_);
    if (l.certificate) {
      out.upper.push_back({l.certificate->bound, level, l.certificate->method, std::move(*l.certificate)});
    }
    if (!l.note.empty()) out.notes.push_back("upper level " + std::to_string(level) + ": " + l.note);
    out.finished = level_ >= last_ || l.note.rfind("skipped", 0) == 0;
    return out;
  }

 private:
  RingElement a_;
  BoundsConfig cfg_;
  UpperOptions opt_;
  std::size_t level_ = 1, last_ = 1;
};

class MomentEngine : public Engine {
 public:
  MomentEngine(const RingElement& a, const BoundsConfig& cfg) : ladder_(a, cfg.support_cap), n_max_(cfg.moments) {}
  const char* name() const override { return "moment"; }
  StepResult step() override {
    StepResult out;
    const std::size_t n = std::min(next_, n_max_);
    try {
      const Rational m = ladder_.moment(n);
      out.lower.push_back({root_down(m, 2 * n), LowerSource::Moment, "n=" + std::to_string(n) + " tau=" + to_string(m),
                           std::nullopt});
    } catch (const ResourceLimitError& e) {
      out.notes.push_back(std::string("moments stopped: ") + e.what());
      out.finished = true;
      return out;
    }
    next_ = 2 * n;
    out.finished = n >= n_max_;
    return out;
  }

 private:
  MomentLadder ladder_;
  std::size_t n_max_;
  std::size_t next_ = 1;
};

class CompressionEngine : public Engine {
 public:
  CompressionEngine(const RingElement& a, const BoundsConfig& cfg)
      : seq_(a, cfg.support_cap), radius_max_(cfg.compression_radius) {}
  const char* name() const override { return "compression"; }
  StepResult step() override {
    StepResult out;
    const std::size_t r = radius_++;
    try {
      const auto b = seq_.at(r);
      out.lower.push_back({b.bound, LowerSource::Compression,
                           "radius=" + std::to_string(r) + " dimension=" + std::to_string(b.dimension) +
                               " rayleigh=" + to_string(b.rayleigh),
                           std::nullopt});
    } catch (const ResourceLimitError& e) {
      out.notes.push_back(std::string("compression stopped: ") + e.what());
      out.finished = true;
      return out;
    }
    out.finished = radius_ > radius_max_;
    return out;
  }

 private:
  CompressionSequence seq_;
  std::size_t radius_max_;
  std::size_t radius_ = 0;
};

class RepEngine : public Engine {
 public:
  RepEngine(const RingElement& a, const BoundsConfig& cfg)
      : search_(a, *a.presentation(), cfg.rep_dim, cfg.seed), trials_(std::max<std::size_t>(cfg.trials, 1)) {}
  const char* name() const override { return "representation"; }
  StepResult step() override {
    StepResult out;
    const std::size_t trial = search_.trials();
    const double v = search_.step();
    if (trial == 0 || v > best_) {
      best_ = v;
      out.lower.push_back({exact(v), LowerSource::Representation,
                           "trial=" + std::to_string(trial) + " dimension=" +
                               std::to_string(search_.best().tuple.dimension) + " (search, not exhaustive)",
                           search_.best().tuple});
    }
    out.finished = search_.trials() >= trials_;
    return out;
  }

 private:
  RepSearch search_;
  std::size_t trials_;
  double best_ = 0;
};

class QuotientEngine : public Engine {
 public:
  static constexpr std::size_t kBatch = 64;
  QuotientEngine(const RingElement& a, const BoundsConfig& cfg) : a_(a), stream_(*a.presentation(), cfg.quotient_degree) {}
  const char* name() const override { return "quotient"; }
  StepResult step() override {
    StepResult out;
    for (std::size_t i = 0; i < kBatch; ++i) {
      auto q = stream_.next();
      if (!q) {
        out.finished = true;
        break;
      }
      ++seen_;
      const double v = quotient_rep_lower_bound(a_, *q);
      if (seen_ == 1 || v > best_) {
        best_ = v;
        out.lower.push_back({exact(v), LowerSource::Quotient,
                             "quotient #" + std::to_string(seen_) + " degree=" + std::to_string(q->degree), *q});
      }
    }
    return out;
  }

 private:
  RingElement a_;
  QuotientStream stream_;
  std::size_t seen_ = 0;
  double best_ = 0;
};

}  // namespace detail

using StopPredicate = std::function<bool(const BoundsReport&)>;

/// Runs the applicable engines in lock-step rounds; every round steps each
/// live engine concurrently and merges the results in a fixed order, so the
/// report depends only on the inputs, the seed and the budgets.
inline BoundsReport run_norm_bounds(const RingElement& a_in, const BoundsConfig& cfg,
                                    const StopPredicate& stop_when = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto seconds = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  BoundsReport report(a_in);
  report.config = cfg;
  report.norm_kind = cfg.amenable ? NormKind::ReducedViaAmenable : NormKind::Universal;
  report.working = merge_equal_support(a_in, &report.notes);
  const RingElement& a = report.working;
  const Presentation& p = *a.presentation();

  const UpperCertificate l1 = l1_certificate(a);
  report.certificates.emplace_back(l1);
  report.upper.push_back({l1.bound, 0, true, 0, "l1", 0, seconds()});

  std::vector<std::unique_ptr<detail::Engine>> engines;
  auto add = [&](auto make) {
    try {
      engines.push_back(make());
    } catch (const Error& e) {
      report.notes.push_back(e.what());
    }
  };
  add([&] { return std::make_unique<detail::UpperEngine>(a, cfg); });
  if (p.has_normal_form()) {
    add([&] { return std::make_unique<detail::MomentEngine>(a, cfg); });
    add([&] { return std::make_unique<detail::CompressionEngine>(a, cfg); });
    add([&] { return std::make_unique<detail::RepEngine>(a, cfg); });
  } else {
    report.notes.push_back("trace engines need a normal form; lower bounds come from permutation quotients");
    add([&] { return std::make_unique<detail::QuotientEngine>(a, cfg); });
  }
  if (std::holds_alternative<FreeClass>(p.structure())) {
    report.notes.push_back("free-group norms are attained in dimension " + std::to_string(choi_dimension(a)));
  }
  for (const auto& e : engines) report.steps[e->name()] = 0;

  std::vector<bool> live(engines.size(), true);
  auto done = [&] {
    if (cfg.target_gap) {
      const auto g = report.gap();
      if (g && *g <= exact(*cfg.target_gap)) {
        report.target_reached = true;
        return true;
      }
    }
    return stop_when && stop_when(report);
  };

  while (!done()) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < engines.size(); ++i) {
      if (live[i] && report.steps[engines[i]->name()] < cfg.budget_steps) active.push_back(i);
    }
    if (active.empty()) break;
    ++report.rounds;
    std::vector<std::future<detail::StepResult>> futures;
    for (std::size_t i : active) {
      futures.push_back(std::async(std::launch::async, [&engines, i] { return engines[i]->step(); }));
    }
    for (std::size_t k = 0; k < active.size(); ++k) {
      const std::size_t i = active[k];
      detail::StepResult r;
      try {
        r = futures[k].get();
      } catch (const std::exception& e) {
        r.notes.push_back(std::string(engines[i]->name()) + " failed: " + e.what());
        r.finished = true;
      }
      ++report.steps[engines[i]->name()];
      const double now = seconds();
      for (auto& f : r.lower) {
        std::optional<std::size_t> cert;
        if (f.certificate) {
          cert = report.certificates.size();
          report.certificates.push_back(std::move(*f.certificate));
        }
        report.lower.push_back({f.value, f.source, true, report.rounds, f.detail, cert, now});
      }
      for (auto& f : r.upper) {
        const std::size_t cert = report.certificates.size();
        report.certificates.emplace_back(std::move(f.certificate));
        report.upper.push_back({f.value, f.level, true, report.rounds, f.detail, cert, now});
      }
      for (auto& n : r.notes) report.notes.push_back(std::move(n));
      if (r.finished) live[i] = false;
    }
    if (!report.sandwich_holds()) report.notes.push_back("sandwich violated in round " + std::to_string(report.rounds));
  }
  for (std::size_t i = 0; i < engines.size(); ++i) {
    if (live[i] && report.steps[engines[i]->name()] >= cfg.budget_steps) report.budget_exhausted = true;
  }
  report.wall_seconds = seconds();
  return report;
}

// ---------------------------------------------------------------------------
// Invertibility

enum class InvertibilityKind { Invertible, NotInvertibleWithinTolerance, Unknown };

inline const char* to_string(InvertibilityKind k) {
  switch (k) {
    case InvertibilityKind::Invertible: return "invertible";
    case InvertibilityKind::NotInvertibleWithinTolerance: return "not-invertible-within-tolerance";
    case InvertibilityKind::Unknown: return "unknown";
  }
  return "?";
}

struct InvertibilityVerdict {
  InvertibilityKind kind = InvertibilityKind::Unknown;
  Rational lambda;  ///< ||a||_1^2
  RingElement shifted;  ///< lambda - a*a
  std::optional<Rational> upper;
  Rational lower;
  double tolerance = 1e-3;
  std::optional<UpperCertificate> certificate;
  BoundsReport report;
};

/// a*a is invertible exactly when ||lambda - a*a||_u < lambda for
/// lambda = ||a||_1^2. The strict comparison is exact on a certificate.
inline InvertibilityVerdict decide_invertibility(const RingElement& a, const BoundsConfig& cfg,
                                                 double tolerance = 1e-3) {
  if (a.is_zero()) throw MismatchError("invertibility of 0 is not asked");
  const RingElement lifted = lift_to_free(a);
  const Rational lambda = l1_norm(lifted) * l1_norm(lifted);
  const RingElement shifted =
      project(RingElement::scalar(lifted.presentation(), lambda) - star(lifted) * lifted, a.presentation());
  const Rational threshold = lambda - exact(tolerance);
  auto settled = [&](const BoundsReport& r) {
    const auto u = r.best_upper();
    return (u && *u < lambda) || r.best_lower() >= threshold;
  };
  BoundsReport report = run_norm_bounds(shifted, cfg, settled);
  InvertibilityVerdict out{InvertibilityKind::Unknown, lambda, shifted, report.best_upper(), report.best_lower(),
                           tolerance, std::nullopt, report};
  if (out.upper && *out.upper < lambda) {
    for (const auto& e : report.upper) {
      if (e.value == *out.upper && e.certificate) {
        out.certificate = std::get<UpperCertificate>(report.certificates[*e.certificate]);
        break;
      }
    }
    out.kind = InvertibilityKind::Invertible;
  } else if (out.lower >= threshold) {
    out.kind = InvertibilityKind::NotInvertibleWithinTolerance;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectrum

struct Enclosure {
  Rational low, high;
};

struct SpectrumEnclosure {
  Rational shift;  ///< ||a||_1
  Enclosure bottom, top;  ///< around min and max of the spectrum
  BoundsReport plus, minus;  ///< reports for a + shift and shift - a
};

inline SpectrumEnclosure spectrum_interval(const RingElement& a, const BoundsConfig& cfg) {
  const RingElement lifted = lift_to_free(a);
  if (!is_self_adjoint(a)) throw MismatchError("element is not self-adjoint");
  const Rational c = l1_norm(lifted);
  const PresentationPtr& p = a.presentation();
  const RingElement plus = project(lifted + RingElement::scalar(lifted.presentation(), c), p);
  const RingElement minus = project(RingElement::scalar(lifted.presentation(), c) - lifted, p);
  BoundsReport rp = run_norm_bounds(plus, cfg);
  BoundsReport rm = run_norm_bounds(minus, cfg);
  // Both reports always carry the l1 entry, so best_upper is set.
  const Rational up = *rp.best_upper(), um = *rm.best_upper();
  return {c, {c - um, c - rm.best_lower()}, {rp.best_lower() - c, up - c}, std::move(rp), std::move(rm)};
}

}  // namespace gnorm
