#pragma once

// Reduced words in a free group F_A. A letter is a signed 1-based generator
// index: +(i+1) is generator i, -(i+1) its inverse.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "gnorm/error.hpp"

namespace gnorm {

using Letter = int;

constexpr Letter letter(std::size_t generator) { return static_cast<Letter>(generator) + 1; }
constexpr Letter inverse_letter(std::size_t generator) { return -letter(generator); }
constexpr std::size_t generator_of(Letter l) { return static_cast<std::size_t>(l < 0 ? -l : l) - 1; }

/// Position of a letter in the shortlex alphabet: generators in alphabet
/// order, each inverse ranked directly after its generator.
constexpr int letter_rank(Letter l) { return 2 * static_cast<int>(generator_of(l)) + (l < 0 ? 1 : 0); }

/// Freely reduced word; the empty word is the identity.
class Word {
 public:
  Word() = default;

  /// Freely reduces an arbitrary letter sequence. Letters must reference an
  /// alphabet of `alphabet_size` generators.
  static Word reduce(std::span<const Letter> raw, std::size_t alphabet_size) {
    for (Letter l : raw) {
      if (l == 0 || generator_of(l) >= alphabet_size) {
        throw MismatchError("letter " + std::to_string(l) + " outside alphabet of size " +
                            std::to_string(alphabet_size));
      }
    }
    return reduce_unchecked(raw);
  }
  static Word reduce(std::initializer_list<Letter> raw, std::size_t alphabet_size) {
    return reduce(std::span<const Letter>(raw.begin(), raw.size()), alphabet_size);
  }

  /// Reduction without alphabet validation; letters must be nonzero.
  static Word reduce_unchecked(std::span<const Letter> raw) {
    Word w;
    w.letters_.reserve(raw.size());
    for (Letter l : raw) w.push(l);
    return w;
  }

  std::span<const Letter> letters() const noexcept { return letters_; }
  std::size_t length() const noexcept { return letters_.size(); }
  bool is_identity() const noexcept { return letters_.empty(); }
  Letter operator[](std::size_t i) const { return letters_[i]; }

  Word inverse() const {
    Word w;
    w.letters_.resize(letters_.size());
    std::transform(letters_.rbegin(), letters_.rend(), w.letters_.begin(),
                   [](Letter l) { return -l; });
    return w;
  }

  friend Word operator*(const Word& u, const Word& v) {
    Word w;
    // Cancellation only happens at the seam.
    std::size_t k = 0;
    const std::size_t nu = u.letters_.size(), nv = v.letters_.size();
    while (k < nu && k < nv && u.letters_[nu - 1 - k] == -v.letters_[k]) ++k;
    w.letters_.reserve(nu + nv - 2 * k);
    w.letters_.insert(w.letters_.end(), u.letters_.begin(), u.letters_.end() - static_cast<std::ptrdiff_t>(k));
    w.letters_.insert(w.letters_.end(), v.letters_.begin() + static_cast<std::ptrdiff_t>(k), v.letters_.end());
    return w;
  }

  /// Appends one letter with free cancellation.
  void push(Letter l) {
    if (!letters_.empty() && letters_.back() == -l) {
      letters_.pop_back();
    } else {
      letters_.push_back(l);
    }
  }

  friend bool operator==(const Word&, const Word&) = default;

  /// Shortlex order: length first, then letter ranks lexicographically.
  friend std::strong_ordering operator<=>(const Word& u, const Word& v) {
    if (u.length() != v.length()) return u.length() <=> v.length();
    for (std::size_t i = 0; i < u.length(); ++i) {
      const int ru = letter_rank(u.letters_[i]), rv = letter_rank(v.letters_[i]);
      if (ru != rv) return ru <=> rv;
    }
    return std::strong_ordering::equal;
  }

  std::size_t hash() const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (Letter l : letters_) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(l));
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }

 private:
  std::vector<Letter> letters_;
};

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept { return w.hash(); }
};

/// Default element cap for balls and other enumerations.
inline constexpr std::size_t kDefaultElementCap = 2'000'000;

/// Number of reduced words of length <= n over m generators.
inline std::uint64_t ball_size(std::size_t generators, std::size_t n) {
  if (generators == 0) return 1;
  std::uint64_t total = 1, sphere = 2 * generators;
  for (std::size_t k = 1; k <= n; ++k) {
    total += sphere;
    if (total > (std::uint64_t{1} << 62)) return total;
    sphere *= (2 * generators - 1);
  }
  return total;
}

/// All reduced words of length <= n over the free alphabet, in shortlex
/// order. Relations are never applied.
inline std::vector<Word> ball(std::size_t generators, std::size_t n,
                              std::size_t cap = kDefaultElementCap) {
  const std::uint64_t size = ball_size(generators, n);
  if (size > cap) {
    throw ResourceLimitError("ball of radius " + std::to_string(n) + " over " +
                             std::to_string(generators) + " generators has " +
                             std::to_string(size) + " elements, above the element cap " +
                             std::to_string(cap));
  }
  std::vector<Letter> alphabet;
  for (std::size_t g = 0; g < generators; ++g) {
    alphabet.push_back(letter(g));
    alphabet.push_back(inverse_letter(g));
  }
  std::vector<Word> out;
  out.reserve(static_cast<std::size_t>(size));
  out.emplace_back();
  std::size_t sphere_begin = 0;
  for (std::size_t len = 1; len <= n; ++len) {
    const std::size_t sphere_end = out.size();
    for (std::size_t i = sphere_begin; i < sphere_end; ++i) {
      for (Letter l : alphabet) {
        const Word& base = out[i];
        if (!base.is_identity() && base.letters().back() == -l) continue;
        Word w = base;
        w.push(l);
        out.push_back(std::move(w));
      }
    }
    sphere_begin = sphere_end;
  }
  return out;
}

}  // namespace gnorm

template <>
struct std::hash<gnorm::Word> {
  std::size_t operator()(const gnorm::Word& w) const noexcept { return w.hash(); }
};
