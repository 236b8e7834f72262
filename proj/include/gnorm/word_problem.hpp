#pragma once

// Word problem: consequence search, finite permutation quotients and the
// concurrent decision procedure.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <mutex>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "gnorm/presentation.hpp"

namespace gnorm {

/// One factor g r^sign g^-1 of a consequence expression.
struct ConjugateFactor {
  Word conjugator;
  std::size_t relator = 0;
  int sign = 1;

  Word value(const Presentation& p) const {
    const Word& r = p.relators().at(relator);
    return conjugator * (sign > 0 ? r : r.inverse()) * conjugator.inverse();
  }
  friend bool operator==(const ConjugateFactor&, const ConjugateFactor&) = default;
};

/// Product of conjugates of relators; the empty product is the identity.
struct Consequence {
  std::vector<ConjugateFactor> factors;

  Word value(const Presentation& p) const {
    Word out;
    for (const auto& f : factors) out = out * f.value(p);
    return out;
  }
};

/// Emits the identity, then every new reduced word expressible with at most
/// d factors whose conjugators lie in ball(d), for d = 1, 2, ... up to
/// `max_depth`. Within a depth, factor tuples are visited lexicographically
/// with factors ordered by (conjugator shortlex, relator, sign).
class ConsequenceStream {
 public:
  ConsequenceStream(const Presentation& p, std::size_t max_depth, std::size_t cap = kDefaultElementCap)
      : p_(p), max_depth_(max_depth), cap_(cap) {
    if (max_depth == 0) throw MismatchError("consequence depth must be at least 1");
  }

  std::optional<Consequence> next() {
    if (!emitted_identity_) {
      emitted_identity_ = true;
      seen_.insert(Word{});
      return Consequence{};
    }
    if (p_.relators().empty()) return std::nullopt;
    while (true) {
      if (tuple_.empty()) {
        if (!open_depth(depth_ + 1)) return std::nullopt;
        continue;
      }
      std::vector<std::size_t> current = tuple_;
      const bool fresh = current.size() >= depth_ ||
                         *std::max_element(current.begin(), current.end()) >= previous_factor_count_;
      advance();
      ++steps_;
      if (!fresh) continue;
      Consequence c;
      for (std::size_t i : current) c.factors.push_back(factors_[i]);
      Word v = c.value(p_);
      if (seen_.insert(v).second) {
        if (seen_.size() > cap_) throw ResourceLimitError("consequence set exceeds cap " + std::to_string(cap_));
        return c;
      }
    }
  }

  std::size_t steps() const noexcept { return steps_; }
  std::size_t depth() const noexcept { return depth_; }

 private:
  bool open_depth(std::size_t d) {
    if (d > max_depth_) return false;
    depth_ = d;
    previous_factor_count_ = factors_.size();
    factors_.clear();
    for (const auto& g : ball(p_.rank(), d, cap_)) {
      for (std::size_t r = 0; r < p_.relators().size(); ++r) {
        factors_.push_back({g, r, 1});
        factors_.push_back({g, r, -1});
      }
    }
    tuple_.assign(1, 0);
    return true;
  }

  void advance() {
    for (std::size_t i = tuple_.size(); i-- > 0;) {
      if (++tuple_[i] < factors_.size()) return;
      tuple_[i] = 0;
    }
    if (tuple_.size() < depth_) {
      tuple_.assign(tuple_.size() + 1, 0);
    } else {
      tuple_.clear();
    }
  }

  const Presentation& p_;
  std::size_t max_depth_;
  std::size_t cap_;
  bool emitted_identity_ = false;
  std::size_t depth_ = 0;
  std::size_t previous_factor_count_ = 0;
  std::vector<ConjugateFactor> factors_;
  std::vector<std::size_t> tuple_;
  std::unordered_set<Word> seen_;
  std::size_t steps_ = 0;
};

inline std::vector<Consequence> enumerate_consequences(const Presentation& p, std::size_t depth,
                                                       std::size_t cap = kDefaultElementCap) {
  ConsequenceStream s(p, depth, cap);
  std::vector<Consequence> out;
  while (auto c = s.next()) out.push_back(std::move(*c));
  return out;
}

using Permutation = std::vector<std::size_t>;

/// Right action: the image of point i under the word l1 l2 ... is obtained
/// by applying l1 first.
struct PermutationQuotient {
  std::size_t degree = 0;
  std::vector<Permutation> images;

  Permutation evaluate(const Word& w) const {
    Permutation out(degree);
    std::iota(out.begin(), out.end(), std::size_t{0});
    std::vector<Permutation> inverses;
    for (const auto& g : images) {
      Permutation inv(degree);
      for (std::size_t i = 0; i < degree; ++i) inv[g[i]] = i;
      inverses.push_back(std::move(inv));
    }
    for (Letter l : w.letters()) {
      const Permutation& s = l > 0 ? images.at(generator_of(l)) : inverses.at(generator_of(l));
      for (auto& pt : out) pt = s[pt];
    }
    return out;
  }

  bool maps_to_identity(const Word& w) const {
    const auto img = evaluate(w);
    for (std::size_t i = 0; i < degree; ++i)
      if (img[i] != i) return false;
    return true;
  }

  bool satisfies(const Presentation& p) const {
    if (images.size() != p.rank()) return false;
    for (const auto& g : images) {
      if (g.size() != degree) return false;
      std::vector<bool> hit(degree, false);
      for (std::size_t x : g) {
        if (x >= degree || hit[x]) return false;
        hit[x] = true;
      }
    }
    for (const auto& r : p.relators())
      if (!maps_to_identity(r)) return false;
    return true;
  }

  friend bool operator==(const PermutationQuotient&, const PermutationQuotient&) = default;
};

/// Cycle notation with points numbered from 1, e.g. "(1 2)(3 4)"; "()" for
/// the identity.
inline std::string format_cycles(const Permutation& s) {
  std::string out;
  std::vector<bool> done(s.size(), false);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (done[i] || s[i] == i) continue;
    out += "(";
    for (std::size_t j = i; !done[j]; j = s[j]) {
      done[j] = true;
      if (out.back() != '(') out += " ";
      out += std::to_string(j + 1);
    }
    out += ")";
  }
  return out.empty() ? "()" : out;
}

/// Tuples in S_m^A satisfying every relator, for m = 1, 2, ..., in
/// lexicographic order of (m, tuple). Relators are checked as soon as all of
/// their generators are assigned.
class QuotientStream {
 public:
  QuotientStream(const Presentation& p, std::size_t max_degree) : p_(p), max_degree_(max_degree) {
    if (max_degree == 0) throw MismatchError("quotient degree must be at least 1");
    const std::size_t n = p.rank();
    checks_.resize(n);
    for (std::size_t r = 0; r < p.relators().size(); ++r) {
      std::size_t top = 0;
      for (Letter l : p.relators()[r].letters()) top = std::max(top, generator_of(l));
      checks_[top].push_back(r);
    }
  }

  std::optional<PermutationQuotient> next() {
    if (p_.rank() == 0) return std::nullopt;
    while (true) {
      if (!started_) {
        if (degree_ + 1 > max_degree_) return std::nullopt;
        ++degree_;
        current_.degree = degree_;
        current_.images.assign(p_.rank(), Permutation{});
        level_ = 0;
        started_ = true;
        fresh_ = true;
      }
      // Step the permutation at level_; fresh_ means it starts at the identity.
      Permutation& s = current_.images[level_];
      bool ok;
      if (fresh_) {
        s.resize(degree_);
        std::iota(s.begin(), s.end(), std::size_t{0});
        ok = true;
      } else {
        ok = std::next_permutation(s.begin(), s.end());
      }
      ++steps_;
      if (!ok) {
        s.clear();
        if (level_ == 0) {
          started_ = false;
          continue;
        }
        --level_;
        fresh_ = false;
        continue;
      }
      if (!prefix_consistent(level_)) {
        fresh_ = false;
        continue;
      }
      if (level_ + 1 == p_.rank()) {
        fresh_ = false;
        return current_;
      }
      ++level_;
      fresh_ = true;
    }
  }

  std::size_t steps() const noexcept { return steps_; }
  std::size_t degree() const noexcept { return degree_; }

 private:
  bool prefix_consistent(std::size_t level) const {
    if (checks_[level].empty()) return true;
    PermutationQuotient partial = current_;
    for (std::size_t g = level + 1; g < partial.images.size(); ++g) {
      partial.images[g].resize(degree_);
      std::iota(partial.images[g].begin(), partial.images[g].end(), std::size_t{0});
    }
    for (std::size_t r : checks_[level])
      if (!partial.maps_to_identity(p_.relators()[r])) return false;
    return true;
  }

  const Presentation& p_;
  std::size_t max_degree_;
  std::vector<std::vector<std::size_t>> checks_;
  std::size_t degree_ = 0;
  std::size_t level_ = 0;
  bool started_ = false;
  bool fresh_ = true;
  PermutationQuotient current_;
  std::size_t steps_ = 0;
};

inline std::vector<PermutationQuotient> enumerate_finite_quotients(const Presentation& p, std::size_t max_degree) {
  QuotientStream s(p, max_degree);
  std::vector<PermutationQuotient> out;
  while (auto q = s.next()) out.push_back(std::move(*q));
  return out;
}

/// The word's normal form, recomputable by anyone holding the presentation.
struct NormalFormCertificate {
  Word normal_form;
};

struct Trivial {
  std::variant<Consequence, NormalFormCertificate> witness;
};

struct Nontrivial {
  std::variant<PermutationQuotient, NormalFormCertificate> witness;
};

struct Exhausted {
  std::size_t consequence_steps = 0;
  std::size_t quotient_steps = 0;
  std::size_t largest_word_length = 0;
  std::size_t largest_degree = 0;
};

using Verdict = std::variant<Trivial, Nontrivial, Exhausted>;

struct WordBudget {
  std::size_t consequence_steps = 1'000'000;
  std::size_t quotient_steps = 1'000'000;
  std::size_t max_degree = 8;
};

/// Independent re-check of a verdict's witness.
inline bool verify_verdict(const Verdict& v, const Word& w, const Presentation& p) {
  if (const auto* t = std::get_if<Trivial>(&v)) {
    if (const auto* c = std::get_if<Consequence>(&t->witness)) {
      for (const auto& f : c->factors)
        if (f.relator >= p.relators().size() || (f.sign != 1 && f.sign != -1)) return false;
      return c->value(p) == w;
    }
    const auto& nf = std::get<NormalFormCertificate>(t->witness);
    return p.has_normal_form() && nf.normal_form.is_identity() && normal_form(w, p).is_identity();
  }
  if (const auto* n = std::get_if<Nontrivial>(&v)) {
    if (const auto* q = std::get_if<PermutationQuotient>(&n->witness)) {
      return q->satisfies(p) && !q->maps_to_identity(w);
    }
    const auto& nf = std::get<NormalFormCertificate>(n->witness);
    return p.has_normal_form() && !nf.normal_form.is_identity() && normal_form(w, p).word() == nf.normal_form;
  }
  return true;
}

namespace detail {

/// Best-first search for a relator expression of w: from the current word u
/// move to u * f for conjugate factors f that splice a cyclic relator variant
/// into u. Reaching e gives w = f_k^-1 ... f_1^-1.
class TrivialitySearch {
 public:
  TrivialitySearch(const Word& w, const Presentation& p) : p_(p), root_(w) {
    for (std::size_t r = 0; r < p.relators().size(); ++r) {
      const Word& rel = p.relators()[r];
      for (int sign : {1, -1}) {
        const Word base = sign > 0 ? rel : rel.inverse();
        // Cyclic variant a^-1 base a for each prefix a of base.
        Word prefix;
        for (std::size_t k = 0; k < base.length(); ++k) {
          variants_.push_back({prefix.inverse() * base * prefix, prefix.inverse(), r, sign});
          prefix.push(base[k]);
        }
      }
    }
    parent_.emplace(w, Edge{});
    queue_.insert(w);
  }

  /// Runs until e is reached, `stop` is raised or `budget` steps are spent.
  std::optional<Consequence> run(std::size_t budget, const std::atomic<bool>& stop) {
    if (parent_.count(Word{})) return witness();
    while (!queue_.empty() && steps_ < budget && !stop.load(std::memory_order_relaxed)) {
      const Word u = *queue_.begin();
      queue_.erase(queue_.begin());
      longest_ = std::max(longest_, u.length());
      const auto letters = u.letters();
      for (std::size_t pos = 0; pos <= u.length(); ++pos) {
        // u = u1 u2; u1 v u2 = u * (u2^-1 v u2).
        const Word u2 = Word::reduce_unchecked(letters.subspan(pos));
        const Word u1 = Word::reduce_unchecked(letters.subspan(0, pos));
        const Word u2inv = u2.inverse();
        for (const auto& v : variants_) {
          ++steps_;
          Word next = u1 * v.word * u2;
          if (parent_.count(next)) continue;
          parent_.emplace(next, Edge{u, ConjugateFactor{u2inv * v.conjugator, v.relator, v.sign}});
          if (next.is_identity()) return witness();
          queue_.insert(std::move(next));
        }
      }
    }
    return std::nullopt;
  }

  std::size_t steps() const noexcept { return steps_; }
  std::size_t longest() const noexcept { return longest_; }

 private:
  struct Variant {
    Word word;
    Word conjugator;
    std::size_t relator;
    int sign;
  };
  struct Edge {
    Word from;
    ConjugateFactor factor;
  };

  // Walking back from e yields f_k, ..., f_1 where w f_1 ... f_k = e, so
  // w = f_k^-1 ... f_1^-1 in the same order.
  Consequence witness() const {
    Consequence c;
    for (Word cur; !(cur == root_);) {
      const Edge& e = parent_.at(cur);
      c.factors.push_back({e.factor.conjugator, e.factor.relator, -e.factor.sign});
      cur = e.from;
    }
    return c;
  }

  const Presentation& p_;
  Word root_;
  std::vector<Variant> variants_;
  std::unordered_map<Word, Edge> parent_;
  std::set<Word> queue_;
  std::size_t steps_ = 0;
  std::size_t longest_ = 0;
};

}  // namespace detail

/// Structured classes are decided by their normal forms. Generic
/// presentations run the triviality search and the quotient search on two
/// threads; the first verified witness wins.
inline Verdict decide_word(const Word& w, const Presentation& p, const WordBudget& budget = {}) {
  for (Letter l : w.letters()) {
    if (generator_of(l) >= p.rank()) throw MismatchError("word uses a generator outside the alphabet");
  }
  if (p.has_normal_form()) {
    NormalFormCertificate nf{normal_form(w, p).word()};
    if (nf.normal_form.is_identity()) return Trivial{nf};
    return Nontrivial{nf};
  }
  if (w.is_identity()) return Trivial{Consequence{}};

  std::atomic<bool> stop{false};
  std::mutex cell_mutex;
  std::optional<Verdict> cell;
  auto offer = [&](Verdict v) {
    if (!verify_verdict(v, w, p)) return;
    std::lock_guard lock(cell_mutex);
    if (!cell) {
      cell = std::move(v);
      stop.store(true);
    }
  };

  Exhausted report;
  std::thread trivial_side([&] {
    detail::TrivialitySearch search(w, p);
    if (auto c = search.run(budget.consequence_steps, stop)) offer(Trivial{std::move(*c)});
    report.consequence_steps = search.steps();
    report.largest_word_length = search.longest();
  });
  std::thread quotient_side([&] {
    QuotientStream s(p, budget.max_degree);
    while (s.steps() < budget.quotient_steps && !stop.load(std::memory_order_relaxed)) {
      auto q = s.next();
      if (!q) break;
      if (!q->maps_to_identity(w)) {
        offer(Nontrivial{std::move(*q)});
        break;
      }
    }
    report.quotient_steps = s.steps();
    report.largest_degree = s.degree();
  });
  trivial_side.join();
  quotient_side.join();
  if (cell) return *cell;
  return report;
}

inline const char* verdict_name(const Verdict& v) {
  if (std::holds_alternative<Trivial>(v)) return "trivial";
  if (std::holds_alternative<Nontrivial>(v)) return "nontrivial";
  return "exhausted";
}

}  // namespace gnorm
