#pragma once

// Certified lower bounds on the reduced norm: trace moments and finite
// compressions of a*a to balls in the group.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <optional>
#include <unordered_map>
#include <vector>

#include "gnorm/group_ring.hpp"
#include "gnorm/rational.hpp"

namespace gnorm {

struct MomentEntry {
  std::size_t n = 0;
  Rational moment;  ///< tau((a*a)^n)
  Rational bound;   ///< moment^(1/2n), rounded down
};

struct MomentSequence {
  std::vector<MomentEntry> entries;
  /// Set when the support cap stopped the ladder before the requested n.
  std::optional<std::string> stopped;

  Rational best() const {
    Rational b = 0;
    for (const auto& e : entries) b = std::max(b, e.bound);
    return b;
  }
};

/// tau((a*a)^n) via the powers P_k = (a*a)^k and
/// tau(c^n) = sum_g (P_i)_g (P_j)_{g^-1} with i = floor(n/2), j = n - i.
class MomentLadder {
 public:
  MomentLadder(RingElement a, std::size_t support_cap = kDefaultElementCap)
      : c_(star(a) * a), cap_(support_cap) {
    if (!c_.presentation()->has_normal_form()) {
      throw UnsupportedClassError("moments need a structure class with a normal form");
    }
    powers_.push_back(RingElement::one(c_.presentation()));
  }

  /// Exact tau((a*a)^n). Throws ResourceLimitError when a needed power would
  /// exceed the support cap; computed powers are kept.
  Rational moment(std::size_t n) {
    const std::size_t i = n / 2, j = n - i;
    ensure_power(j);
    const RingElement& pi = powers_[i];
    const RingElement& pj = powers_[j];
    const Presentation& p = *c_.presentation();
    Rational s = 0;
    for (const auto& [g, coeff] : pi.terms()) {
      const Rational other = pj.coefficient(invert_form(g, p));
      if (other != 0) s += coeff * other;
    }
    return s;
  }

  std::size_t largest_power() const noexcept { return powers_.size() - 1; }
  const RingElement& square() const noexcept { return c_; }

 private:
  void ensure_power(std::size_t k) {
    while (powers_.size() <= k) {
      RingElement next = powers_.back() * c_;
      if (next.support_size() > cap_) {
        throw ResourceLimitError("support of (a*a)^" + std::to_string(powers_.size()) + " exceeds cap " +
                                 std::to_string(cap_));
      }
      powers_.push_back(std::move(next));
    }
  }

  RingElement c_;
  std::size_t cap_;
  std::vector<RingElement> powers_;
};

/// Moments for n = 1..n_max with 2n-th roots rounded down. When the support
/// cap is hit the completed prefix is returned with `stopped` set.
inline MomentSequence moment_lower_sequence(const RingElement& a, std::size_t n_max,
                                            std::size_t support_cap = kDefaultElementCap) {
  if (n_max == 0) throw MismatchError("n_max must be at least 1");
  MomentLadder ladder(a, support_cap);
  MomentSequence out;
  for (std::size_t n = 1; n <= n_max; ++n) {
    try {
      Rational m = ladder.moment(n);
      Rational b = root_down(m, 2 * n);
      out.entries.push_back({n, std::move(m), std::move(b)});
    } catch (const ResourceLimitError& e) {
      out.stopped = std::string(e.what()) + "; largest completed n = " + std::to_string(n - 1);
      break;
    }
  }
  return out;
}

struct CompressionBound {
  std::size_t radius = 0;
  std::size_t dimension = 0;
  Rational rayleigh;       ///< exact quadratic-form ratio of the test vector
  Rational bound;          ///< sqrt(rayleigh), rounded down
  double top_eigenvalue;   ///< floating estimate of the top eigenvalue
};

namespace detail {

/// Normal forms of the free ball of the given radius, sorted and distinct.
inline std::vector<NormalForm> normal_form_ball(const Presentation& p, std::size_t radius, std::size_t cap) {
  std::vector<NormalForm> out;
  for (const auto& w : ball(p.rank(), radius, cap)) out.push_back(normal_form(w, p));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Compression of c to span(B): entry (g, h) is the coefficient of g h^-1.
/// Entries are listed per term of c as index pairs.
struct Compression {
  std::vector<NormalForm> basis;
  std::vector<std::pair<Rational, std::vector<std::pair<std::size_t, std::size_t>>>> terms;
  Eigen::SparseMatrix<double> matrix;
};

inline Compression assemble_compression(const RingElement& c, std::size_t radius, std::size_t cap) {
  const Presentation& p = *c.presentation();
  Compression out;
  out.basis = normal_form_ball(p, radius, cap);
  std::unordered_map<NormalForm, std::size_t, NormalFormHash> index;
  for (std::size_t i = 0; i < out.basis.size(); ++i) index.emplace(out.basis[i], i);
  FormMultiplier mul(p);
  std::vector<Eigen::Triplet<double>> trip;
  for (const auto& [u, cu] : c.terms()) {
    const NormalForm uinv = invert_form(u, p);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t gi = 0; gi < out.basis.size(); ++gi) {
      const auto it = index.find(mul(uinv, out.basis[gi]));
      if (it == index.end()) continue;
      pairs.emplace_back(gi, it->second);
      trip.emplace_back(static_cast<int>(gi), static_cast<int>(it->second), cu.get_d());
    }
    out.terms.emplace_back(cu, std::move(pairs));
  }
  const auto n = static_cast<Eigen::Index>(out.basis.size());
  out.matrix.resize(n, n);
  out.matrix.setFromTriplets(trip.begin(), trip.end());
  return out;
}

/// Exact v^T M v / v^T v for an integer vector v.
inline Rational exact_rayleigh(const Compression& m, const std::vector<Integer>& v) {
  Integer norm2 = 0;
  for (const auto& x : v) norm2 += x * x;
  if (norm2 == 0) return 0;
  Rational num = 0;
  for (const auto& [cu, pairs] : m.terms) {
    Integer s = 0;
    for (const auto& [g, h] : pairs) s += v[g] * v[h];
    num += cu * Rational(s);
  }
  Rational q = num / Rational(norm2);
  q.canonicalize();
  return q;
}

inline std::vector<Integer> integer_vector(const Eigen::VectorXd& v) {
  const double scale = std::ldexp(1.0, 31) / std::max(v.cwiseAbs().maxCoeff(), 1e-300);
  std::vector<Integer> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = Integer(static_cast<long>(std::lround(v[i] * scale)));
  return out;
}

/// Power iteration: 200 steps or relative Rayleigh change below 1e-12.
inline double power_iteration(const Eigen::SparseMatrix<double>& m, Eigen::VectorXd& v) {
  double lambda = 0;
  v.normalize();
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd w = m * v;
    const double next = v.dot(w);
    const double wn = w.norm();
    if (wn == 0) return 0;
    v = w / wn;
    if (it > 0 && std::abs(next - lambda) <= 1e-12 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return lambda;
}

}  // namespace detail

/// Radius-by-radius compression bounds. Each radius warm-starts power
/// iteration from the previous vector, and the previous certified vector
/// (extended by zero) stays a candidate, so the sequence is nondecreasing.
class CompressionSequence {
 public:
  CompressionSequence(const RingElement& a, std::size_t cap = kDefaultElementCap)
      : c_(star(a) * a), cap_(cap) {
    if (!c_.presentation()->has_normal_form()) {
      throw UnsupportedClassError("compression bounds need a structure class with a normal form");
    }
  }

  CompressionBound at(std::size_t radius) {
    const auto m = detail::assemble_compression(c_, radius, cap_);
    const auto n = static_cast<Eigen::Index>(m.basis.size());
    std::unordered_map<NormalForm, std::size_t, NormalFormHash> index;
    for (std::size_t i = 0; i < m.basis.size(); ++i) index.emplace(m.basis[i], i);

    // Deterministic start without symmetries; a previous vector dominates.
    const double base = previous_basis_.empty() ? 1.0 : 1e-6;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = base * (1.0 + 0.25 * std::sin(static_cast<double>(i) + 1.0));
    std::vector<Integer> carried(m.basis.size(), 0);
    for (std::size_t i = 0; i < previous_basis_.size(); ++i) {
      const auto it = index.find(previous_basis_[i]);
      if (it == index.end()) continue;
      v[static_cast<Eigen::Index>(it->second)] += previous_vector_[i];
      carried[it->second] = previous_exact_[i];
    }
    const double lambda = detail::power_iteration(m.matrix, v);

    std::vector<Integer> best = detail::integer_vector(v);
    Rational q = detail::exact_rayleigh(m, best);
    if (n <= 800) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(m.matrix));
      auto cand = detail::integer_vector(es.eigenvectors().col(n - 1));
      Rational qc = detail::exact_rayleigh(m, cand);
      if (qc > q) {
        q = qc;
        best = std::move(cand);
      }
    }
    if (!previous_basis_.empty()) {
      Rational qc = detail::exact_rayleigh(m, carried);
      if (qc > q) {
        q = qc;
        best = carried;
      }
    }
    previous_basis_ = m.basis;
    previous_exact_ = best;
    previous_vector_.assign(v.data(), v.data() + v.size());
    return {radius, m.basis.size(), q, root_down(q, 2), lambda};
  }

 private:
  RingElement c_;
  std::size_t cap_;
  std::vector<NormalForm> previous_basis_;
  std::vector<Integer> previous_exact_;
  std::vector<double> previous_vector_;
};

inline CompressionBound compression_lower_bound(const RingElement& a, std::size_t radius,
                                                std::size_t cap = kDefaultElementCap) {
  CompressionSequence s(a, cap);
  return s.at(radius);
}

}  // namespace gnorm
