#pragma once

// Lower bounds on the universal norm from finite-dimensional unitary
// representations whose relators hold by construction.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "gnorm/group_ring.hpp"
#include "gnorm/word_problem.hpp"

namespace gnorm {

inline constexpr double kRepSlack = 1e-8;
inline constexpr double kRelatorTolerance = 1e-10;

struct ExactByConstruction {
  std::string construction;
  friend bool operator==(const ExactByConstruction&, const ExactByConstruction&) = default;
};
struct Verified {
  double residual = 0;
  friend bool operator==(const Verified&, const Verified&) = default;
};
using Feasibility = std::variant<ExactByConstruction, Verified>;

struct UnitaryTuple {
  std::size_t dimension = 0;
  std::vector<ComplexMatrix> matrices;
  Feasibility feasibility = ExactByConstruction{"free"};

  MatrixAssignment assignment() const { return {matrices}; }
};

/// Largest of the unitarity defects and relator defects (Frobenius norms).
inline double tuple_residual(const UnitaryTuple& t, const Presentation& p) {
  double worst = 0;
  const auto k = static_cast<Eigen::Index>(t.dimension);
  for (const auto& u : t.matrices) {
    worst = std::max(worst, (u.adjoint() * u - ComplexMatrix::Identity(k, k)).norm());
  }
  if (p.relators().empty()) return worst;
  const auto m = t.assignment();
  m.validate(p.rank());
  const auto inverses = inverse_matrices(m, std::vector<bool>(p.rank(), true));
  for (const auto& r : p.relators()) {
    worst = std::max(worst, (evaluate_word(r, m, inverses) - ComplexMatrix::Identity(k, k)).norm());
  }
  return worst;
}

inline void require_exact(const UnitaryTuple& t, const Presentation& p) {
  const double res = tuple_residual(t, p);
  if (!(res <= kRelatorTolerance)) {
    throw VerificationError("unitary tuple misses its relators by " + std::to_string(res));
  }
}

// ---------------------------------------------------------------------------
// Choi dilation

namespace detail {

inline ComplexMatrix polar(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline ComplexMatrix gaussian(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = {n(rng), n(rng)};
  return m;
}

}  // namespace detail

/// [[T, sqrt(1 - TT*)], [sqrt(1 - T*T), -T*]]. Singular values above 1 are
/// clipped to 1 first; a contraction is used as given.
inline ComplexMatrix choi_dilate(const ComplexMatrix& t_in) {
  if (t_in.rows() != t_in.cols()) throw MismatchError("choi_dilate needs a square matrix");
  const Eigen::Index k = t_in.rows();
  ComplexMatrix t = t_in;
  ComplexMatrix u(2 * k, 2 * k);
  // Both defect roots share the singular vectors of T.
  Eigen::JacobiSVD<ComplexMatrix> svd(t, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd s = svd.singularValues();
  if (k > 0 && s(0) > 1.0) {
    s = s.cwiseMin(1.0);
    t = svd.matrixU() * s.asDiagonal() * svd.matrixV().adjoint();
  }
  const Eigen::VectorXd defect = (Eigen::VectorXd::Ones(k) - s.cwiseProduct(s)).cwiseMax(0.0).cwiseSqrt();
  u.topLeftCorner(k, k) = t;
  u.topRightCorner(k, k) = svd.matrixU() * defect.asDiagonal() * svd.matrixU().adjoint();
  u.bottomLeftCorner(k, k) = svd.matrixV() * defect.asDiagonal() * svd.matrixV().adjoint();
  u.bottomRightCorner(k, k) = -t.adjoint();
  return u;
}

/// Haar-distributed unitary (QR of a complex Gaussian, phases fixed).
inline ComplexMatrix haar_unitary(std::mt19937_64& rng, Eigen::Index k) {
  Eigen::HouseholderQR<ComplexMatrix> qr(detail::gaussian(rng, k, k));
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < k; ++j) {
    const double m = std::abs(r(j, j));
    if (m > 0) q.col(j) *= r(j, j) / m;
  }
  return q;
}

/// Random contraction with operator norm uniform in (0, 1).
inline ComplexMatrix random_contraction(std::mt19937_64& rng, Eigen::Index k) {
  ComplexMatrix t = detail::gaussian(rng, k, k);
  const double top = Eigen::JacobiSVD<ComplexMatrix>(t).singularValues()(0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return t * (u(rng) / top);
}

// ---------------------------------------------------------------------------
// Certified evaluation

/// Largest ||A v|| / ||v|| over an explicit set of test vectors (500 power
/// iterations on A*A and, for moderate sizes, the top eigenvector), minus
/// the slack; never negative.
inline double certified_norm_lower(const ComplexMatrix& a, int iterations = 500) {
  const Eigen::Index k = a.cols();
  if (k == 0) return 0;
  const ComplexMatrix h = a.adjoint() * a;
  Eigen::VectorXcd v(k);
  for (Eigen::Index i = 0; i < k; ++i) v(i) = 1.0 + 0.25 * std::sin(static_cast<double>(i + 1));
  v.normalize();
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXcd w = h * v;
    const double n = w.norm();
    if (n == 0) break;
    v = w / n;
  }
  std::vector<Eigen::VectorXcd> tests{v};
  if (k <= 512) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
    tests.push_back(es.eigenvectors().col(k - 1));
  }
  double best = 0;
  for (const auto& t : tests) {
    const double n = t.norm();
    if (n > 0) best = std::max(best, (a * t).norm() / n);
  }
  return std::max(0.0, best - kRepSlack);
}

inline double tuple_lower_bound(const RingElement& a, const UnitaryTuple& t) {
  return certified_norm_lower(evaluate(a, t.assignment()));
}

/// Choi's dimension 4 n^d at which free-group norms are attained
/// (n generators, d the longest support word); saturates at 2^64 - 1.
inline std::uint64_t choi_dimension(const RingElement& a) {
  const std::uint64_t n = a.presentation()->rank();
  const std::size_t d = lift_to_free(a).radius();
  std::uint64_t out = 4;
  for (std::size_t i = 0; i < d; ++i) {
    if (n != 0 && out > std::numeric_limits<std::uint64_t>::max() / n) return std::numeric_limits<std::uint64_t>::max();
    out *= n;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Permutation quotients

inline UnitaryTuple permutation_tuple(const PermutationQuotient& q) {
  UnitaryTuple t;
  t.dimension = q.degree;
  const auto k = static_cast<Eigen::Index>(q.degree);
  for (const auto& s : q.images) {
    ComplexMatrix m = ComplexMatrix::Zero(k, k);
    for (std::size_t i = 0; i < q.degree; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s[i])) = 1.0;
    t.matrices.push_back(std::move(m));
  }
  t.feasibility = ExactByConstruction{"permutation-quotient"};
  return t;
}

inline double quotient_rep_lower_bound(const RingElement& a, const PermutationQuotient& q) {
  const Presentation& p = *a.presentation();
  if (!q.satisfies(p)) throw VerificationError("permutation assignment does not satisfy the relators");
  return tuple_lower_bound(a, permutation_tuple(q));
}

// ---------------------------------------------------------------------------
// Structured search

struct RepSearchOptions {
  std::size_t ascent_steps = 60;
  std::size_t max_dimension = 256;
};

struct RepBound {
  double value = 0;
  UnitaryTuple tuple;
  std::size_t best_trial = 0;
  std::vector<double> running_best;
};

namespace detail {

/// Tensor layout: generator g acts as I ⊗ V_g ⊗ I on factor factor_of[g].
struct RepLayout {
  std::vector<Eigen::Index> dims;
  std::vector<std::size_t> factor_of;
  bool diagonal = false;
  std::string construction;

  Eigen::Index total() const {
    Eigen::Index n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
  Eigen::Index left(std::size_t f) const {
    Eigen::Index n = 1;
    for (std::size_t i = 0; i < f; ++i) n *= dims[i];
    return n;
  }
  Eigen::Index right(std::size_t f) const {
    Eigen::Index n = 1;
    for (std::size_t i = f + 1; i < dims.size(); ++i) n *= dims[i];
    return n;
  }

  ComplexMatrix embed(std::size_t g, const ComplexMatrix& v) const {
    const std::size_t f = factor_of[g];
    const Eigen::Index l = left(f), r = right(f);
    return kron(ComplexMatrix::Identity(l, l), kron(v, ComplexMatrix::Identity(r, r)));
  }

  ComplexMatrix partial_trace(std::size_t g, const ComplexMatrix& full) const {
    const std::size_t f = factor_of[g];
    const Eigen::Index l = left(f), r = right(f), d = dims[f];
    ComplexMatrix out = ComplexMatrix::Zero(d, d);
    for (Eigen::Index a = 0; a < l; ++a)
      for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
          for (Eigen::Index b = 0; b < r; ++b) out(i, j) += full((a * d + i) * r + b, (a * d + j) * r + b);
    return out;
  }
};

inline RepLayout make_layout(const Presentation& p, Eigen::Index k) {
  RepLayout out;
  out.factor_of.assign(p.rank(), 0);
  const auto& cls = p.structure();
  if (std::holds_alternative<FreeClass>(cls)) {
    out.dims = {k};
    out.construction = "free";
  } else if (std::holds_alternative<FreeAbelianClass>(cls)) {
    out.dims = {k};
    out.diagonal = true;
    out.construction = "free-abelian";
  } else if (std::holds_alternative<ProductOfFreesClass>(cls)) {
    out.factor_of = p.block_of_generator();
    out.dims.assign(p.block_count(), k);
    out.construction = "product-of-frees";
  } else {
    throw UnsupportedClassError("representation search on a generic presentation needs a permutation quotient");
  }
  return out;
}

class TupleAscent {
 public:
  TupleAscent(const RingElement& a, RepLayout layout) : layout_(std::move(layout)) {
    for (const auto& [u, c] : a.terms()) terms_.emplace_back(u.word(), c.get_d());
  }

  UnitaryTuple assemble(const std::vector<ComplexMatrix>& factors) const {
    UnitaryTuple t;
    t.dimension = static_cast<std::size_t>(layout_.total());
    for (std::size_t g = 0; g < factors.size(); ++g) t.matrices.push_back(layout_.embed(g, factors[g]));
    t.feasibility = ExactByConstruction{layout_.construction};
    return t;
  }

  ComplexMatrix operator_of(const UnitaryTuple& t) const {
    const Eigen::Index n = static_cast<Eigen::Index>(t.dimension);
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    for (const auto& [w, c] : terms_) {
      ComplexMatrix m = ComplexMatrix::Identity(n, n);
      for (Letter l : w.letters()) {
        const auto& u = t.matrices[generator_of(l)];
        m = (l > 0 ? (m * u).eval() : (m * u.adjoint()).eval());
      }
      out += c * m;
    }
    return out;
  }

  static double top_singular(const ComplexMatrix& a, Eigen::VectorXcd* right, Eigen::VectorXcd* left) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a.adjoint() * a);
    const Eigen::Index k = a.cols();
    const double s = std::sqrt(std::max(0.0, es.eigenvalues()(k - 1)));
    if (right) {
      *right = es.eigenvectors().col(k - 1);
      Eigen::VectorXcd img = a * *right;
      const double n = img.norm();
      *left = n > 0 ? Eigen::VectorXcd(img / n) : *right;
    }
    return s;
  }

  /// Gradient of Re <eta, A xi> in each full generator matrix.
  std::vector<ComplexMatrix> gradient(const UnitaryTuple& t, const Eigen::VectorXcd& xi,
                                      const Eigen::VectorXcd& eta) const {
    const Eigen::Index n = static_cast<Eigen::Index>(t.dimension);
    std::vector<ComplexMatrix> grad(t.matrices.size(), ComplexMatrix::Zero(n, n));
    for (const auto& [w, c] : terms_) {
      const auto letters = w.letters();
      const std::size_t len = letters.size();
      std::vector<Eigen::VectorXcd> suffix(len + 1);
      suffix[len] = xi;
      for (std::size_t i = len; i-- > 0;) {
        const auto& u = t.matrices[generator_of(letters[i])];
        suffix[i] = letters[i] > 0 ? Eigen::VectorXcd(u * suffix[i + 1]) : Eigen::VectorXcd(u.adjoint() * suffix[i + 1]);
      }
      Eigen::VectorXcd prefix = eta;
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t g = generator_of(letters[i]);
        const auto& u = t.matrices[g];
        if (letters[i] > 0) {
          grad[g] += c * prefix * suffix[i + 1].adjoint();
          prefix = u.adjoint() * prefix;
        } else {
          grad[g] += c * suffix[i + 1] * prefix.adjoint();
          prefix = u * prefix;
        }
      }
    }
    return grad;
  }

  ComplexMatrix retract(const ComplexMatrix& v) const {
    if (!layout_.diagonal) return polar(v);
    ComplexMatrix out = ComplexMatrix::Zero(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double m = std::abs(v(i, i));
      out(i, i) = m > 0 ? v(i, i) / m : std::complex<double>(1.0);
    }
    return out;
  }

  /// Monotone ascent on the top singular value with polar retraction.
  std::vector<ComplexMatrix> ascend(std::vector<ComplexMatrix> factors, std::size_t steps) const {
    UnitaryTuple t = assemble(factors);
    Eigen::VectorXcd xi, eta;
    double sigma = top_singular(operator_of(t), &xi, &eta);
    double step = 0.5;
    for (std::size_t it = 0; it < steps && step > 1e-6; ++it) {
      const auto grad = gradient(t, xi, eta);
      std::vector<ComplexMatrix> local;
      for (std::size_t g = 0; g < factors.size(); ++g) local.push_back(layout_.partial_trace(g, grad[g]));
      bool improved = false;
      while (step > 1e-6) {
        std::vector<ComplexMatrix> trial;
        for (std::size_t g = 0; g < factors.size(); ++g) trial.push_back(retract(factors[g] + step * local[g]));
        UnitaryTuple tt = assemble(trial);
        Eigen::VectorXcd x2, e2;
        const double s2 = top_singular(operator_of(tt), &x2, &e2);
        if (s2 > sigma + 1e-12) {
          factors = std::move(trial);
          t = std::move(tt);
          sigma = s2;
          xi = std::move(x2);
          eta = std::move(e2);
          step *= 1.5;
          improved = true;
          break;
        }
        step *= 0.5;
      }
      if (!improved) break;
    }
    return factors;
  }

  const RepLayout& layout() const { return layout_; }

 private:
  RepLayout layout_;
  std::vector<std::pair<Word, double>> terms_;
};

}  // namespace detail

/// Trial-by-trial search over tuples of factor dimension k (per block for
/// products of free groups). Trial 0 is the trivial representation; later
/// trials start from seeded random tuples and climb.
class RepSearch {
 public:
  RepSearch(const RingElement& a, const Presentation& p, std::size_t k, std::uint64_t seed,
            const RepSearchOptions& opt = {})
      : a_(a), p_(p), seed_(seed), opt_(opt), ascent_(a, checked_layout(a, p, k, opt)) {}

  std::size_t trials() const noexcept { return trial_; }
  const RepBound& best() const noexcept { return best_; }

  /// Runs the next trial and returns its certified value.
  double step() {
    const std::size_t trial = trial_++;
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(trial)};
    std::mt19937_64 rng(seq);
    const auto& layout = ascent_.layout();
    std::vector<ComplexMatrix> factors;
    for (std::size_t g = 0; g < p_.rank(); ++g) {
      const Eigen::Index d = layout.dims[layout.factor_of[g]];
      if (trial == 0) {
        factors.push_back(ComplexMatrix::Identity(d, d));
      } else if (layout.diagonal) {
        std::uniform_real_distribution<double> phase(-M_PI, M_PI);
        ComplexMatrix m = ComplexMatrix::Zero(d, d);
        for (Eigen::Index i = 0; i < d; ++i) m(i, i) = std::polar(1.0, phase(rng));
        factors.push_back(std::move(m));
      } else if (trial % 2 == 0 && d % 2 == 0) {
        factors.push_back(choi_dilate(random_contraction(rng, d / 2)));
      } else {
        factors.push_back(haar_unitary(rng, d));
      }
    }
    if (trial > 0) factors = ascent_.ascend(std::move(factors), opt_.ascent_steps);
    UnitaryTuple t = ascent_.assemble(factors);
    require_exact(t, p_);
    const double v = tuple_lower_bound(a_, t);
    if (trial == 0 || v > best_.value) {
      best_.value = v;
      best_.tuple = std::move(t);
      best_.best_trial = trial;
    }
    best_.running_best.push_back(best_.value);
    return v;
  }

 private:
  static detail::RepLayout checked_layout(const RingElement& a, const Presentation& p, std::size_t k,
                                          const RepSearchOptions& opt) {
    if (k == 0) throw MismatchError("representation dimension must be positive");
    if (a.presentation()->generator_names() != p.generator_names()) {
      throw MismatchError("element and presentation use different alphabets");
    }
    auto layout = detail::make_layout(p, static_cast<Eigen::Index>(k));
    double total = 1;
    for (auto d : layout.dims) total *= static_cast<double>(d);
    if (total > static_cast<double>(opt.max_dimension)) {
      throw ResourceLimitError("representation dimension " + std::to_string(static_cast<std::uint64_t>(total)) +
                               " exceeds the limit " + std::to_string(opt.max_dimension));
    }
    return layout;
  }

  RingElement a_;
  const Presentation& p_;
  std::uint64_t seed_;
  RepSearchOptions opt_;
  detail::TupleAscent ascent_;
  std::size_t trial_ = 0;
  RepBound best_;
};

inline RepBound structured_rep_lower_bound(const RingElement& a, const Presentation& p, std::size_t k,
                                           std::size_t trials, std::uint64_t seed,
                                           const RepSearchOptions& opt = {}) {
  RepSearch search(a, p, k, seed, opt);
  for (std::size_t t = 0; t < std::max<std::size_t>(trials, 1); ++t) search.step();
  return search.best();
}

/// Unitary dilation of the ball compressions of the left generators of the
/// free group: on the ball of radius `radius` plus the radius of a, words of
/// a act as in the regular representation, so the value dominates the
/// compression bound at `radius`.
inline UnitaryTuple dilated_compression_tuple(const RingElement& a, std::size_t radius,
                                              std::size_t max_dimension = 2048) {
  const Presentation& p = *a.presentation();
  if (!std::holds_alternative<FreeClass>(p.structure())) {
    throw UnsupportedClassError("compression dilation is implemented for free groups");
  }
  const std::size_t reach = radius + a.radius();
  if (2 * ball_size(p.rank(), reach) > max_dimension) {
    throw ResourceLimitError("dilation dimension exceeds the limit " + std::to_string(max_dimension));
  }
  const auto basis = ball(p.rank(), reach);
  std::unordered_map<Word, Eigen::Index> index;
  for (std::size_t i = 0; i < basis.size(); ++i) index.emplace(basis[i], static_cast<Eigen::Index>(i));
  const auto n = static_cast<Eigen::Index>(basis.size());
  UnitaryTuple t;
  t.dimension = static_cast<std::size_t>(2 * n);
  for (std::size_t g = 0; g < p.rank(); ++g) {
    ComplexMatrix c = ComplexMatrix::Zero(n, n);
    const Word x = Word::reduce_unchecked(std::vector<Letter>{letter(g)});
    for (std::size_t j = 0; j < basis.size(); ++j) {
      const auto it = index.find(x * basis[j]);
      if (it != index.end()) c(it->second, static_cast<Eigen::Index>(j)) = 1.0;
    }
    t.matrices.push_back(choi_dilate(c));
  }
  t.feasibility = ExactByConstruction{"free"};
  return t;
}

}  // namespace gnorm
