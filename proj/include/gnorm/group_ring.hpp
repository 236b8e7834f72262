#pragma once

// Exact sparse arithmetic in the rational group ring QΓ of a presented group
// with a structured class: involution, convolution, trace, l1 norm and
// evaluation at matrix tuples.

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gnorm/error.hpp"
#include "gnorm/presentation.hpp"
#include "gnorm/rational.hpp"
#include "gnorm/word.hpp"

namespace gnorm {

/// Sparse element of QΓ. Terms are kept sorted in shortlex order of their
/// normal forms and never carry a zero coefficient.
class RingElement {
 public:
  using Term = std::pair<NormalForm, Rational>;

  explicit RingElement(PresentationPtr group) : group_(std::move(group)) {
    if (!group_) throw MismatchError("ring element needs a presentation");
  }

  static RingElement scalar(PresentationPtr group, const Rational& c) {
    RingElement out(std::move(group));
    if (c != 0) out.terms_.emplace_back(NormalForm(), c);
    return out;
  }
  static RingElement one(PresentationPtr group) { return scalar(std::move(group), 1); }

  /// c * w for a free word w, mapped to the group's support key.
  static RingElement monomial(PresentationPtr group, const Word& w, const Rational& c = 1) {
    RingElement out(group);
    if (c != 0) out.terms_.emplace_back(support_key(w, *group), c);
    return out;
  }

  /// Builds an element from an accumulation map, dropping zeros.
  static RingElement from_map(PresentationPtr group,
                              std::unordered_map<NormalForm, Rational, NormalFormHash> coefficients) {
    RingElement out(std::move(group));
    out.terms_.reserve(coefficients.size());
    for (auto& [key, c] : coefficients) {
      if (c != 0) out.terms_.emplace_back(key, std::move(c));
    }
    std::sort(out.terms_.begin(), out.terms_.end(),
              [](const Term& a, const Term& b) { return a.first < b.first; });
    return out;
  }

  const PresentationPtr& presentation() const noexcept { return group_; }
  std::span<const Term> terms() const noexcept { return terms_; }
  std::size_t support_size() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }

  Rational coefficient(const NormalForm& key) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), key,
                               [](const Term& t, const NormalForm& k) { return t.first < k; });
    if (it != terms_.end() && it->first == key) return it->second;
    return 0;
  }

  /// Longest canonical word in the support.
  std::size_t radius() const noexcept {
    std::size_t r = 0;
    for (const auto& t : terms_) r = std::max(r, t.first.word().length());
    return r;
  }

  bool has_integer_coefficients() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.second.get_den() == 1; });
  }

  friend bool operator==(const RingElement& a, const RingElement& b) {
    return (a.group_ == b.group_ || *a.group_ == *b.group_) && a.terms_ == b.terms_;
  }

  friend RingElement operator+(const RingElement& a, const RingElement& b) { return a.combine(b, 1); }
  friend RingElement operator-(const RingElement& a, const RingElement& b) { return a.combine(b, -1); }
  friend RingElement operator-(const RingElement& a) { return a.scaled(-1); }
  friend RingElement operator*(const Rational& c, const RingElement& a) { return a.scaled(c); }
  friend RingElement operator*(const RingElement& a, const Rational& c) { return a.scaled(c); }
  friend RingElement operator*(const RingElement& a, const RingElement& b);

  RingElement scaled(const Rational& c) const {
    RingElement out(group_);
    if (c == 0) return out;
    out.terms_ = terms_;
    for (auto& t : out.terms_) t.second *= c;
    return out;
  }

 private:
  void require_same_group(const RingElement& other) const {
    if (group_ != other.group_ && !(*group_ == *other.group_)) {
      throw MismatchError("ring elements live over different presentations");
    }
  }

  RingElement combine(const RingElement& b, int sign) const {
    require_same_group(b);
    RingElement out(group_);
    out.terms_.reserve(terms_.size() + b.terms_.size());
    std::size_t i = 0, j = 0;
    while (i < terms_.size() || j < b.terms_.size()) {
      if (j == b.terms_.size() || (i < terms_.size() && terms_[i].first < b.terms_[j].first)) {
        out.terms_.push_back(terms_[i++]);
      } else if (i == terms_.size() || b.terms_[j].first < terms_[i].first) {
        out.terms_.emplace_back(b.terms_[j].first, sign > 0 ? b.terms_[j].second : Rational(-b.terms_[j].second));
        ++j;
      } else {
        Rational c = terms_[i].second;
        if (sign > 0) c += b.terms_[j].second; else c -= b.terms_[j].second;
        if (c != 0) out.terms_.emplace_back(terms_[i].first, std::move(c));
        ++i;
        ++j;
      }
    }
    return out;
  }

  PresentationPtr group_;
  std::vector<Term> terms_;
};

// ---------------------------------------------------------------------------
// Group operations on normal forms

/// Product of two normal forms in the presentation's class.
class FormMultiplier {
 public:
  explicit FormMultiplier(const Presentation& p) : p_(p) {
    if (!p.has_normal_form()) {
      throw UnsupportedClassError("multiplication in a generic presentation needs a normal form");
    }
  }

  NormalForm operator()(const NormalForm& u, const NormalForm& v) const {
    struct Visitor {
      const Presentation& p;
      const NormalForm& u;
      const NormalForm& v;
      NormalForm operator()(const FreeClass&) const { return NormalForm(u.word() * v.word()); }
      NormalForm operator()(const FreeAbelianClass&) const {
        auto e = exponent_vector(u.word(), p.rank());
        for (Letter l : v.word().letters()) e[generator_of(l)] += l < 0 ? -1 : 1;
        return NormalForm(word_from_exponents(e));
      }
      NormalForm operator()(const ProductOfFreesClass&) const { return normal_form(u.word() * v.word(), p); }
      NormalForm operator()(const GenericClass&) const { throw UnsupportedClassError("generic"); }
    };
    return std::visit(Visitor{p_, u, v}, p_.structure());
  }

 private:
  const Presentation& p_;
};

inline NormalForm invert_form(const NormalForm& u, const Presentation& p) {
  return support_key(u.word().inverse(), p);
}

inline RingElement operator*(const RingElement& a, const RingElement& b) {
  a.require_same_group(b);
  const Presentation& p = *a.group_;
  FormMultiplier mul(p);
  std::unordered_map<NormalForm, Rational, NormalFormHash> acc;
  acc.reserve(std::min<std::size_t>(a.support_size() * b.support_size(), std::size_t{1} << 20));
  for (const auto& [u, cu] : a.terms_) {
    for (const auto& [v, cv] : b.terms_) {
      acc[mul(u, v)] += cu * cv;
    }
  }
  return RingElement::from_map(a.group_, std::move(acc));
}

inline RingElement multiply(const RingElement& a, const RingElement& b) { return a * b; }

/// Involution: coefficient of g in a* is the coefficient of g^-1 in a.
inline RingElement star(const RingElement& a) {
  const Presentation& p = *a.presentation();
  std::unordered_map<NormalForm, Rational, NormalFormHash> acc;
  acc.reserve(a.support_size());
  for (const auto& [u, c] : a.terms()) acc[invert_form(u, p)] += c;
  return RingElement::from_map(a.presentation(), std::move(acc));
}

/// Coefficient of the identity. Generic presentations have no canonical
/// identity coefficient, so the trace is refused there.
inline Rational trace(const RingElement& a) {
  if (!a.presentation()->has_normal_form()) {
    throw UnsupportedClassError("trace of an element of a generic presentation needs the word problem");
  }
  return a.coefficient(NormalForm());
}

inline Rational l1_norm(const RingElement& a) {
  Rational s = 0;
  for (const auto& t : a.terms()) s += abs(t.second);
  return s;
}

inline bool is_self_adjoint(const RingElement& a) { return star(a) == a; }

/// Same element viewed in ZF_A via canonical words.
inline RingElement lift_to_free(const RingElement& a) {
  auto free = Presentation::free_group(a.presentation()->generator_names());
  std::unordered_map<NormalForm, Rational, NormalFormHash> acc;
  for (const auto& [u, c] : a.terms()) acc[NormalForm(u.word())] += c;
  return RingElement::from_map(free, std::move(acc));
}

/// Image of an element of ZF_A (any class over the same alphabet) in p.
inline RingElement project(const RingElement& a, PresentationPtr p) {
  if (a.presentation()->generator_names() != p->generator_names()) {
    throw MismatchError("projection between different alphabets");
  }
  std::unordered_map<NormalForm, Rational, NormalFormHash> acc;
  for (const auto& [u, c] : a.terms()) acc[support_key(u.word(), *p)] += c;
  return RingElement::from_map(std::move(p), std::move(acc));
}

// ---------------------------------------------------------------------------
// Text form

/// Canonical printing: shortlex order, explicit signs, e.g. "2 + x*y^-1 - 3*y^2".
inline std::string format_element(const RingElement& a) {
  if (a.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [u, c] : a.terms()) {
    const bool negative = c < 0;
    const Rational mag = abs(c);
    if (first) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    first = false;
    if (u.is_identity()) {
      out += to_string(mag);
    } else {
      if (mag != 1) out += to_string(mag) + "*";
      out += format_word(u.word(), a.presentation()->alphabet());
    }
  }
  return out;
}

namespace detail {

class ElementParser {
 public:
  ElementParser(std::string_view text, PresentationPtr free) : cur_(text, 1), free_(std::move(free)) {}

  RingElement parse() {
    RingElement e = expression();
    if (!cur_.at_end()) cur_.fail("unexpected trailing input");
    return e;
  }

 private:
  RingElement expression() {
    RingElement sum(free_);
    bool negative = false;
    if (cur_.consume('-')) negative = true;
    else cur_.consume('+');
    while (true) {
      RingElement t = term();
      sum = negative ? sum - t : sum + t;
      if (cur_.consume('+')) negative = false;
      else if (cur_.consume('-')) negative = true;
      else break;
    }
    return sum;
  }

  RingElement term() {
    RingElement prod = factor();
    while (cur_.consume('*')) prod = prod * factor();
    return prod;
  }

  RingElement factor() {
    RingElement base = atom();
    if (cur_.consume('^')) {
      const long exponent = cur_.signed_integer();
      if (exponent < 0) cur_.fail("negative powers of elements are not supported");
      RingElement out = RingElement::one(free_);
      for (long k = 0; k < exponent; ++k) out = out * base;
      return out;
    }
    return base;
  }

  RingElement atom() {
    if (cur_.consume('(')) {
      RingElement e = expression();
      cur_.expect(')');
      return e;
    }
    if (auto d = cur_.digits()) {
      Rational q(*d);
      if (cur_.consume('/')) {
        auto den = cur_.digits();
        if (!den) cur_.fail("expected denominator");
        if (Integer(*den) == 0) cur_.fail("zero denominator");
        q = Rational(Integer(*d), Integer(*den));
        q.canonicalize();
      }
      return RingElement::scalar(free_, q);
    }
    if (auto id = cur_.identifier()) {
      auto index = free_->find_generator(*id);
      if (!index) cur_.fail("unknown generator '" + *id + "'");
      // Generator powers bind to the letter, so x^-1 is a word.
      long exponent = 1;
      if (cur_.peek() == '^') {
        cur_.consume('^');
        exponent = cur_.signed_integer();
      }
      std::vector<Letter> raw;
      const Letter l = exponent < 0 ? inverse_letter(*index) : letter(*index);
      for (long k = 0; k < std::abs(exponent); ++k) raw.push_back(l);
      return RingElement::monomial(free_, Word::reduce_unchecked(raw));
    }
    cur_.fail("expected number, generator or '('");
  }

  Cursor cur_;
  PresentationPtr free_;
};

}  // namespace detail

/// Parses an element expression: sums and products of rational numbers,
/// generator powers (x^-2) and parenthesized subexpressions, then maps it
/// into the group.
inline RingElement parse_element(std::string_view text, PresentationPtr p) {
  auto free = Presentation::free_group(p->generator_names());
  RingElement over_free = detail::ElementParser(text, free).parse();
  return project(over_free, std::move(p));
}

// ---------------------------------------------------------------------------
// Evaluation at matrix tuples

using ComplexMatrix = Eigen::MatrixXcd;

/// One square complex matrix per generator, all of the same dimension.
struct MatrixAssignment {
  std::vector<ComplexMatrix> matrices;

  std::size_t dimension() const { return matrices.empty() ? 0 : static_cast<std::size_t>(matrices.front().rows()); }

  void validate(std::size_t generators) const {
    if (matrices.size() != generators) {
      throw MismatchError("assignment has " + std::to_string(matrices.size()) + " matrices for " +
                          std::to_string(generators) + " generators");
    }
    for (const auto& m : matrices) {
      if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != dimension()) {
        throw MismatchError("assignment matrices must be square of equal dimension");
      }
    }
  }
};

/// Product of assigned matrices along a word; `inverses[g]` must be set for
/// every generator whose inverse occurs.
inline ComplexMatrix evaluate_word(const Word& w, const MatrixAssignment& m,
                                   const std::vector<ComplexMatrix>& inverses) {
  const auto k = static_cast<Eigen::Index>(m.dimension());
  ComplexMatrix out = ComplexMatrix::Identity(k, k);
  for (Letter l : w.letters()) {
    const std::size_t g = generator_of(l);
    out = (out * (l > 0 ? m.matrices[g] : inverses[g])).eval();
  }
  return out;
}

inline std::vector<ComplexMatrix> inverse_matrices(const MatrixAssignment& m, const std::vector<bool>& needed) {
  std::vector<ComplexMatrix> inverses(m.matrices.size());
  for (std::size_t g = 0; g < m.matrices.size(); ++g) {
    if (!needed[g]) continue;
    Eigen::FullPivLU<ComplexMatrix> lu(m.matrices[g]);
    if (!lu.isInvertible()) {
      throw MismatchError("matrix assigned to generator " + std::to_string(g) + " is singular");
    }
    inverses[g] = lu.inverse();
  }
  return inverses;
}

/// Image of a under the homomorphism fixed by the assignment. For classes
/// other than Free the assignment must satisfy the relators.
inline ComplexMatrix evaluate(const RingElement& a, const MatrixAssignment& m) {
  const Presentation& p = *a.presentation();
  m.validate(p.rank());
  std::vector<bool> needed(p.rank(), false);
  for (const auto& t : a.terms()) {
    for (Letter l : t.first.word().letters()) {
      if (l < 0) needed[generator_of(l)] = true;
    }
  }
  const auto inverses = inverse_matrices(m, needed);
  const auto k = static_cast<Eigen::Index>(m.dimension());
  ComplexMatrix out = ComplexMatrix::Zero(k, k);
  for (const auto& [u, c] : a.terms()) {
    out += c.get_d() * evaluate_word(u.word(), m, inverses);
  }
  return out;
}

}  // namespace gnorm
