#pragma once

// Finite group presentations <A | R> with a user-declared structure class,
// their text format, and class-specific normal forms.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "gnorm/error.hpp"
#include "gnorm/word.hpp"

namespace gnorm {

struct Generator {
  std::size_t index = 0;
  std::string name;
  friend bool operator==(const Generator&, const Generator&) = default;
};

struct FreeClass {
  friend bool operator==(const FreeClass&, const FreeClass&) = default;
};
struct FreeAbelianClass {
  friend bool operator==(const FreeAbelianClass&, const FreeAbelianClass&) = default;
};
/// Direct product of free groups; each block lists generator indices.
struct ProductOfFreesClass {
  std::vector<std::vector<std::size_t>> blocks;
  friend bool operator==(const ProductOfFreesClass&, const ProductOfFreesClass&) = default;
};
struct GenericClass {
  friend bool operator==(const GenericClass&, const GenericClass&) = default;
};

using StructureClass = std::variant<FreeClass, FreeAbelianClass, ProductOfFreesClass, GenericClass>;

inline bool has_normal_form(const StructureClass& c) {
  return !std::holds_alternative<GenericClass>(c);
}

class Presentation;
using PresentationPtr = std::shared_ptr<const Presentation>;

/// Validated presentation. Immutable after construction.
class Presentation {
 public:
  Presentation(std::vector<Generator> alphabet, std::vector<Word> relators, StructureClass cls)
      : alphabet_(std::move(alphabet)), relators_(std::move(relators)), class_(std::move(cls)) {
    validate();
  }

  /// The free group on `names`.
  static PresentationPtr free_group(const std::vector<std::string>& names) {
    return std::make_shared<const Presentation>(make_alphabet(names), std::vector<Word>{}, FreeClass{});
  }

  static std::vector<Generator> make_alphabet(const std::vector<std::string>& names) {
    std::vector<Generator> out;
    for (std::size_t i = 0; i < names.size(); ++i) out.push_back({i, names[i]});
    return out;
  }

  const std::vector<Generator>& alphabet() const noexcept { return alphabet_; }
  std::size_t rank() const noexcept { return alphabet_.size(); }
  const std::vector<Word>& relators() const noexcept { return relators_; }
  const StructureClass& structure() const noexcept { return class_; }
  bool has_normal_form() const noexcept { return gnorm::has_normal_form(class_); }

  std::vector<std::string> generator_names() const {
    std::vector<std::string> out;
    for (const auto& g : alphabet_) out.push_back(g.name);
    return out;
  }

  std::optional<std::size_t> find_generator(std::string_view name) const {
    for (const auto& g : alphabet_) {
      if (g.name == name) return g.index;
    }
    return std::nullopt;
  }

  /// Block index of every generator (ProductOfFrees); one block per
  /// generator for FreeAbelian; a single block otherwise.
  std::vector<std::size_t> block_of_generator() const {
    std::vector<std::size_t> out(rank(), 0);
    if (const auto* p = std::get_if<ProductOfFreesClass>(&class_)) {
      for (std::size_t b = 0; b < p->blocks.size(); ++b) {
        for (std::size_t g : p->blocks[b]) out[g] = b;
      }
    } else if (std::holds_alternative<FreeAbelianClass>(class_)) {
      for (std::size_t g = 0; g < rank(); ++g) out[g] = g;
    }
    return out;
  }

  std::size_t block_count() const {
    if (const auto* p = std::get_if<ProductOfFreesClass>(&class_)) return p->blocks.size();
    if (std::holds_alternative<FreeAbelianClass>(class_)) return rank();
    return 1;
  }

  friend bool operator==(const Presentation& a, const Presentation& b) {
    return a.alphabet_ == b.alphabet_ && a.relators_ == b.relators_ && a.class_ == b.class_;
  }

 private:
  void validate() const;

  std::vector<Generator> alphabet_;
  std::vector<Word> relators_;
  StructureClass class_;
};

// ---------------------------------------------------------------------------
// Printing

inline std::string format_word(const Word& w, const std::vector<Generator>& alphabet) {
  if (w.is_identity()) return "1";
  std::string out;
  const auto letters = w.letters();
  std::size_t i = 0;
  while (i < letters.size()) {
    std::size_t j = i;
    while (j < letters.size() && letters[j] == letters[i]) ++j;
    const long run = static_cast<long>(j - i);
    if (!out.empty()) out += '*';
    out += alphabet.at(generator_of(letters[i])).name;
    const long exponent = letters[i] < 0 ? -run : run;
    if (exponent != 1) out += "^" + std::to_string(exponent);
    i = j;
  }
  return out;
}

inline std::string format_class(const StructureClass& c, const std::vector<Generator>& alphabet) {
  struct Visitor {
    const std::vector<Generator>& alphabet;
    std::string operator()(const FreeClass&) const { return "free"; }
    std::string operator()(const FreeAbelianClass&) const { return "free-abelian"; }
    std::string operator()(const GenericClass&) const { return "generic"; }
    std::string operator()(const ProductOfFreesClass& p) const {
      std::string out = "product-of-frees(";
      for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        if (b) out += ';';
        for (std::size_t k = 0; k < p.blocks[b].size(); ++k) {
          if (k) out += ' ';
          out += alphabet.at(p.blocks[b][k]).name;
        }
      }
      return out + ")";
    }
  };
  return std::visit(Visitor{alphabet}, c);
}

/// Text form accepted by parse_presentation.
inline std::string format_presentation(const Presentation& p) {
  std::string out = "generators:";
  for (const auto& g : p.alphabet()) out += " " + g.name;
  out += "\nrelators:";
  for (const auto& r : p.relators()) out += " " + format_word(r, p.alphabet());
  out += "\nclass: " + format_class(p.structure(), p.alphabet()) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

/// Cursor over one line of text with 1-based position reporting.
class Cursor {
 public:
  Cursor(std::string_view text, std::size_t line, std::size_t column_offset = 0)
      : text_(text), line_(line), offset_(column_offset) {}

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool at_end() {
    skip_space();
    return pos_ >= text_.size();
  }
  char peek() {
    skip_space();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }
  /// Next character without skipping whitespace.
  char peek_raw() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }
  bool consume(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c)) fail(std::string("expected '") + c + "'");
  }
  std::optional<std::string> identifier() {
    skip_space();
    const std::size_t start = pos_;
    if (pos_ < text_.size() && (std::isalpha(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      return std::string(text_.substr(start, pos_ - start));
    }
    return std::nullopt;
  }
  /// Unsigned decimal digits.
  std::optional<std::string> digits() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start) return std::nullopt;
    return std::string(text_.substr(start, pos_ - start));
  }
  long signed_integer() {
    skip_space();
    bool negative = false;
    if (consume('-')) negative = true;
    else consume('+');
    auto d = digits();
    if (!d) fail("expected integer");
    if (d->size() > 9) fail("exponent too large");
    const long v = std::stol(*d);
    return negative ? -v : v;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, line_, offset_ + pos_ + 1);
  }
  std::size_t position() const { return pos_; }

 private:
  std::string_view text_;
  std::size_t line_;
  std::size_t offset_;
  std::size_t pos_ = 0;
};

inline Word parse_word_at(Cursor& cur, const std::vector<Generator>& alphabet) {
  std::vector<Letter> raw;
  auto term = [&]() {
    if (auto id = cur.identifier()) {
      std::optional<std::size_t> index;
      for (const auto& g : alphabet) {
        if (g.name == *id) index = g.index;
      }
      if (!index) cur.fail("unknown generator '" + *id + "'");
      long exponent = 1;
      if (cur.consume('^')) exponent = cur.signed_integer();
      const Letter l = exponent < 0 ? inverse_letter(*index) : letter(*index);
      for (long k = 0; k < (exponent < 0 ? -exponent : exponent); ++k) raw.push_back(l);
      return;
    }
    if (auto d = cur.digits()) {
      if (*d != "1") cur.fail("only '1' may denote the identity");
      return;
    }
    cur.fail("expected generator name or 1");
  };
  term();
  while (cur.consume('*')) term();
  return Word::reduce_unchecked(raw);
}

}  // namespace detail

/// Parses a word `term ('*' term)*`, term = `name ('^' integer)?`, `1` = e.
inline Word parse_word(std::string_view text, const std::vector<Generator>& alphabet) {
  detail::Cursor cur(text, 1);
  Word w = detail::parse_word_at(cur, alphabet);
  if (!cur.at_end()) cur.fail("unexpected trailing input");
  return w;
}

inline Word parse_word(std::string_view text, const Presentation& p) {
  return parse_word(text, p.alphabet());
}

/// Parses the line-oriented presentation format:
///   generators: x y
///   relators: x*y*x^-1*y^-1
///   class: free | free-abelian | product-of-frees(x y; z w) | generic
/// Lines starting with '#' are comments. A missing class line means `free`
/// when there are no relators and `generic` otherwise.
inline PresentationPtr parse_presentation(std::string_view text) {
  std::optional<std::vector<Generator>> alphabet;
  std::vector<std::pair<std::string, std::size_t>> relator_line;  // text, line no
  std::optional<std::pair<std::string, std::size_t>> class_line;
  std::size_t relator_column = 0;

  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;

    std::size_t first = 0;
    while (first < line.size() && std::isspace(static_cast<unsigned char>(line[first]))) ++first;
    if (first == line.size() || line[first] == '#') {
      if (end == text.size()) break;
      continue;
    }
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError("expected 'key: value'", line_no, first + 1);
    }
    std::string key(line.substr(first, colon - first));
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back()))) key.pop_back();
    std::string_view value = line.substr(colon + 1);

    if (key == "generators") {
      if (alphabet) throw ParseError("duplicate generators line", line_no, first + 1);
      detail::Cursor cur(value, line_no, colon + 1);
      std::vector<std::string> names;
      while (!cur.at_end()) {
        auto id = cur.identifier();
        if (!id) cur.fail("expected generator name");
        if (std::find(names.begin(), names.end(), *id) != names.end()) {
          cur.fail("duplicate generator '" + *id + "'");
        }
        names.push_back(*id);
      }
      alphabet = Presentation::make_alphabet(names);
    } else if (key == "relators") {
      relator_line.emplace_back(std::string(value), line_no);
      relator_column = colon + 1;
    } else if (key == "class") {
      if (class_line) throw ParseError("duplicate class line", line_no, first + 1);
      class_line = {std::string(value), line_no};
    } else {
      throw ParseError("unknown key '" + key + "'", line_no, first + 1);
    }
    if (end == text.size()) break;
  }
  if (!alphabet) throw ParseError("missing generators line", line_no == 0 ? 1 : line_no, 1);

  std::vector<Word> relators;
  for (const auto& [value, no] : relator_line) {
    detail::Cursor cur(value, no, relator_column);
    while (!cur.at_end()) {
      const std::size_t at = cur.position();
      Word r = detail::parse_word_at(cur, *alphabet);
      if (r.is_identity()) throw ParseError("relator reduces to the identity", no, relator_column + at + 1);
      relators.push_back(std::move(r));
    }
  }

  StructureClass cls = relators.empty() ? StructureClass{FreeClass{}} : StructureClass{GenericClass{}};
  if (class_line) {
    const auto& [value, no] = *class_line;
    detail::Cursor cur(value, no, 0);
    std::string name;
    // Class names contain '-'.
    cur.skip_space();
    while (true) {
      const char c = cur.peek_raw();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '-') {
        name += c;
        cur.consume(c);
      } else {
        break;
      }
    }
    if (name == "free") {
      cls = FreeClass{};
    } else if (name == "free-abelian") {
      cls = FreeAbelianClass{};
    } else if (name == "generic") {
      cls = GenericClass{};
    } else if (name == "product-of-frees") {
      cur.expect('(');
      ProductOfFreesClass p;
      p.blocks.emplace_back();
      while (true) {
        if (cur.consume(')')) break;
        if (cur.consume(';')) {
          p.blocks.emplace_back();
          continue;
        }
        if (cur.consume(',')) continue;
        auto id = cur.identifier();
        if (!id) cur.fail("expected generator name in block");
        std::optional<std::size_t> index;
        for (const auto& g : *alphabet) {
          if (g.name == *id) index = g.index;
        }
        if (!index) cur.fail("unknown generator '" + *id + "'");
        p.blocks.back().push_back(*index);
      }
      cls = std::move(p);
    } else {
      cur.fail("unknown class '" + name + "'");
    }
    if (!cur.at_end()) cur.fail("unexpected trailing input");
  }
  try {
    return std::make_shared<const Presentation>(std::move(*alphabet), std::move(relators), std::move(cls));
  } catch (const MismatchError& e) {
    const std::size_t no = class_line ? class_line->second : 1;
    throw ParseError(e.what(), no, 1);
  }
}

// ---------------------------------------------------------------------------
// Validation

namespace detail {

/// If w = a b a^-1 b^-1 for letters a, b on distinct generators, the
/// unordered generator pair.
inline std::optional<std::pair<std::size_t, std::size_t>> commutator_pair(const Word& w) {
  if (w.length() != 4) return std::nullopt;
  const Letter a = w[0], b = w[1];
  if (w[2] != -a || w[3] != -b) return std::nullopt;
  const std::size_t ga = generator_of(a), gb = generator_of(b);
  if (ga == gb) return std::nullopt;
  return std::minmax(ga, gb);
}

}  // namespace detail

inline void Presentation::validate() const {
  for (std::size_t i = 0; i < alphabet_.size(); ++i) {
    if (alphabet_[i].index != i) throw MismatchError("generator index does not match its position");
    for (std::size_t j = 0; j < i; ++j) {
      if (alphabet_[j].name == alphabet_[i].name) {
        throw MismatchError("duplicate generator name '" + alphabet_[i].name + "'");
      }
    }
  }
  for (const auto& r : relators_) {
    if (r.is_identity()) throw MismatchError("relator is the identity");
    for (Letter l : r.letters()) {
      if (l == 0 || generator_of(l) >= alphabet_.size()) throw MismatchError("relator letter outside alphabet");
    }
    if (Word::reduce_unchecked(r.letters()) != r) throw MismatchError("relator is not freely reduced");
  }

  auto required_pairs = [&](auto&& needs) {
    std::set<std::pair<std::size_t, std::size_t>> covered;
    for (const auto& r : relators_) {
      auto pair = detail::commutator_pair(r);
      if (!pair || !needs(pair->first, pair->second)) {
        throw MismatchError("relator " + format_word(r, alphabet_) + " is not a commutator allowed by class " +
                            format_class(class_, alphabet_));
      }
      covered.insert(*pair);
    }
    for (std::size_t i = 0; i < alphabet_.size(); ++i) {
      for (std::size_t j = i + 1; j < alphabet_.size(); ++j) {
        if (needs(i, j) && !covered.count({i, j})) {
          throw MismatchError("class " + format_class(class_, alphabet_) + " requires a commutator of " +
                              alphabet_[i].name + " and " + alphabet_[j].name);
        }
      }
    }
  };

  if (std::holds_alternative<FreeClass>(class_)) {
    if (!relators_.empty()) throw MismatchError("class free admits no relators");
  } else if (std::holds_alternative<FreeAbelianClass>(class_)) {
    required_pairs([](std::size_t, std::size_t) { return true; });
  } else if (const auto* p = std::get_if<ProductOfFreesClass>(&class_)) {
    std::vector<int> seen(alphabet_.size(), -1);
    for (std::size_t b = 0; b < p->blocks.size(); ++b) {
      if (p->blocks[b].empty()) throw MismatchError("empty block in product-of-frees");
      for (std::size_t g : p->blocks[b]) {
        if (g >= alphabet_.size()) throw MismatchError("block generator outside alphabet");
        if (seen[g] != -1) throw MismatchError("generator " + alphabet_[g].name + " appears in two blocks");
        seen[g] = static_cast<int>(b);
      }
    }
    for (std::size_t g = 0; g < alphabet_.size(); ++g) {
      if (seen[g] == -1) throw MismatchError("generator " + alphabet_[g].name + " is in no block");
    }
    required_pairs([&](std::size_t i, std::size_t j) { return seen[i] != seen[j]; });
  }
}

// ---------------------------------------------------------------------------
// Normal forms

/// Canonical representative of a group element for a structured class. The
/// representative is stored as a reduced word:
///   Free: the reduced word itself;
///   FreeAbelian: x1^e1 x2^e2 ... in alphabet order;
///   ProductOfFrees: the block components concatenated in block order.
/// Two elements are equal in the group iff their normal forms are equal.
class NormalForm {
 public:
  NormalForm() = default;
  explicit NormalForm(Word canonical) : word_(std::move(canonical)) {}

  const Word& word() const noexcept { return word_; }
  bool is_identity() const noexcept { return word_.is_identity(); }

  friend bool operator==(const NormalForm&, const NormalForm&) = default;
  friend std::strong_ordering operator<=>(const NormalForm& a, const NormalForm& b) {
    return a.word_ <=> b.word_;
  }
  std::size_t hash() const noexcept { return word_.hash(); }

 private:
  Word word_;
};

struct NormalFormHash {
  std::size_t operator()(const NormalForm& f) const noexcept { return f.hash(); }
};

/// Exponent vector of a word in the abelianization.
inline std::vector<long> exponent_vector(const Word& w, std::size_t rank) {
  std::vector<long> e(rank, 0);
  for (Letter l : w.letters()) e[generator_of(l)] += l < 0 ? -1 : 1;
  return e;
}

inline Word word_from_exponents(std::span<const long> exponents) {
  std::vector<Letter> raw;
  for (std::size_t g = 0; g < exponents.size(); ++g) {
    const Letter l = exponents[g] < 0 ? inverse_letter(g) : letter(g);
    for (long k = 0; k < std::abs(exponents[g]); ++k) raw.push_back(l);
  }
  return Word::reduce_unchecked(raw);
}

/// Block components of a word in a product of free groups.
inline std::vector<Word> block_components(const Word& w, const ProductOfFreesClass& p, std::size_t rank) {
  std::vector<std::size_t> block(rank, 0);
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    for (std::size_t g : p.blocks[b]) block[g] = b;
  }
  std::vector<Word> parts(p.blocks.size());
  for (Letter l : w.letters()) parts[block[generator_of(l)]].push(l);
  return parts;
}

inline NormalForm normal_form(const Word& w, const Presentation& p) {
  struct Visitor {
    const Word& w;
    const Presentation& p;
    NormalForm operator()(const FreeClass&) const { return NormalForm(w); }
    NormalForm operator()(const FreeAbelianClass&) const {
      const auto e = exponent_vector(w, p.rank());
      return NormalForm(word_from_exponents(e));
    }
    NormalForm operator()(const ProductOfFreesClass& c) const {
      Word out;
      for (const Word& part : block_components(w, c, p.rank())) out = out * part;
      return NormalForm(std::move(out));
    }
    NormalForm operator()(const GenericClass&) const {
      throw UnsupportedClassError("generic presentations have no normal form; use the word problem solver");
    }
  };
  return std::visit(Visitor{w, p}, p.structure());
}

/// Key used to store a free word as a ring-element support point. For
/// structured classes this is the normal form; generic classes keep the
/// freely reduced representative.
inline NormalForm support_key(const Word& w, const Presentation& p) {
  if (!p.has_normal_form()) return NormalForm(w);
  return normal_form(w, p);
}

}  // namespace gnorm

template <>
struct std::hash<gnorm::NormalForm> {
  std::size_t operator()(const gnorm::NormalForm& f) const noexcept { return f.hash(); }
};
