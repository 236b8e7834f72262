#pragma once

// Certified upper bounds on the universal norm from sum-of-squares
// certificates Lambda - a*a = sum_r sum_{g,h} C_{r,g,h} g^-1 (1 - r) h in QF_A,
// found numerically and then verified in exact arithmetic.

#include <Eigen/Dense>
#include <Eigen/SparseQR>
#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "gnorm/group_ring.hpp"
#include "gnorm/rational.hpp"
#include "gnorm/sdp_solver.hpp"

namespace gnorm {

/// One nonzero of the map A_{r,w}: C_{r,g,h} contributes `coefficient` to word w.
struct SosEntry {
  std::size_t block;
  std::size_t g;
  std::size_t h;
  int coefficient;
};

struct SosProgram {
  std::size_t level = 0;
  RingElement square;             ///< a*a in QF_A
  std::vector<Word> basis;        ///< ball(level) in shortlex order
  std::vector<Word> block_words;  ///< empty word for the hermitian-square block, else r or r^-1
  std::vector<Word> rows;         ///< constraint words, rows[0] = e
  std::vector<std::vector<SosEntry>> entries;  ///< per row

  std::size_t block_count() const { return block_words.size(); }
  std::size_t block_size() const { return basis.size(); }
};

/// Builds the program for Lambda - a*a in Q_n(A, R). The element is lifted to
/// the free group over the presentation's alphabet first.
inline SosProgram assemble_sos_program(const RingElement& a, const Presentation& p, std::size_t level,
                                       std::size_t cap = kDefaultElementCap) {
  const RingElement lifted = lift_to_free(a);
  if (a.presentation()->generator_names() != p.generator_names()) {
    throw MismatchError("element and presentation use different alphabets");
  }
  if (lifted.radius() > level) {
    throw MismatchError("level " + std::to_string(level) + " is below the word-length radius " +
                        std::to_string(lifted.radius()) + " of the element");
  }
  SosProgram prog{level, star(lifted) * lifted, ball(p.rank(), level, cap), {Word{}}, {}, {}};
  for (const auto& r : p.relators()) {
    for (const Word& w : {r, r.inverse()}) {
      if (std::find(prog.block_words.begin(), prog.block_words.end(), w) == prog.block_words.end()) {
        prog.block_words.push_back(w);
      }
    }
  }
  std::map<Word, std::vector<SosEntry>> rows;
  rows[Word{}];
  for (const auto& [u, c] : prog.square.terms()) rows[u.word()];
  const std::size_t n = prog.basis.size();
  std::vector<Word> inverses;
  for (const auto& g : prog.basis) inverses.push_back(g.inverse());
  for (std::size_t b = 0; b < prog.block_words.size(); ++b) {
    const Word& r = prog.block_words[b];
    for (std::size_t g = 0; g < n; ++g) {
      const Word ginv_r = inverses[g] * r;
      for (std::size_t h = 0; h < n; ++h) {
        rows[inverses[g] * prog.basis[h]].push_back({b, g, h, 1});
        if (!r.is_identity()) rows[ginv_r * prog.basis[h]].push_back({b, g, h, -1});
      }
    }
  }
  for (auto& [w, list] : rows) {
    prog.rows.push_back(w);
    prog.entries.push_back(std::move(list));
  }
  return prog;
}

// ---------------------------------------------------------------------------
// Moment (dual) form

/// The dual program: functionals phi on the constraint words with phi(e) = 1
/// whose localized moment matrices M_r[g][h] = phi(sym(g^-1 (1 - r) h)) are
/// psd; objective phi(a*a).
class MomentProgram {
 public:
  explicit MomentProgram(SosProgram prog) : prog_(std::move(prog)) {}

  const SosProgram& program() const { return prog_; }

  std::vector<Eigen::MatrixXd> moment_matrices(const std::vector<double>& phi) const {
    const auto n = static_cast<Eigen::Index>(prog_.block_size());
    std::vector<Eigen::MatrixXd> out(prog_.block_count(), Eigen::MatrixXd::Zero(n, n));
    for (std::size_t i = 0; i < prog_.rows.size(); ++i) {
      for (const auto& e : prog_.entries[i]) {
        const double v = 0.5 * phi.at(i) * e.coefficient;
        out[e.block](static_cast<Eigen::Index>(e.g), static_cast<Eigen::Index>(e.h)) += v;
        out[e.block](static_cast<Eigen::Index>(e.h), static_cast<Eigen::Index>(e.g)) += v;
      }
    }
    return out;
  }

  double objective(const std::vector<double>& phi) const {
    double s = 0;
    for (std::size_t i = 0; i < prog_.rows.size(); ++i) {
      s += phi.at(i) * prog_.square.coefficient(NormalForm(prog_.rows[i])).get_d();
    }
    return s;
  }

  struct Check {
    bool feasible;
    std::string reason;
    double min_eigenvalue;
  };

  Check check(const std::vector<double>& phi, double tol = 1e-9) const {
    if (phi.size() != prog_.rows.size()) return {false, "functional has the wrong number of values", 0};
    if (std::abs(phi[0] - 1.0) > tol) return {false, "phi(1) != 1", 0};
    double lmin = std::numeric_limits<double>::infinity();
    for (const auto& m : moment_matrices(phi)) {
      lmin = std::min(lmin, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m, Eigen::EigenvaluesOnly).eigenvalues()(0));
    }
    if (lmin < -tol) return {false, "moment matrix not psd", lmin};
    return {true, "", lmin};
  }

  /// The trace functional phi(w) = [w = e].
  std::vector<double> trace_functional() const {
    std::vector<double> phi(prog_.rows.size(), 0.0);
    phi[0] = 1.0;
    return phi;
  }

 private:
  SosProgram prog_;
};

inline MomentProgram assemble_dual_program(const RingElement& a, const Presentation& p, std::size_t level) {
  return MomentProgram(assemble_sos_program(a, p, level));
}

// ---------------------------------------------------------------------------
// Numeric solve

/// Standard-form reduction of an SosProgram: Lambda is eliminated through the
/// e row; identical rows are merged and linearly dependent rows dropped.
struct ReducedProgram {
  SdpProblem sdp;
  /// For each SDP row, the program rows it stands for.
  std::vector<std::vector<std::size_t>> members;
  double trace_square = 0;  ///< tau(a*a)
  /// Set when a row with no Gram entries needs a nonzero value.
  bool infeasible = false;
};

inline ReducedProgram reduce_program(const SosProgram& prog) {
  ReducedProgram out;
  const auto n = static_cast<Eigen::Index>(prog.block_size());
  const std::size_t nb = prog.block_count();
  out.trace_square = trace(prog.square).get_d();
  out.sdp.block_sizes.assign(nb, n);

  // Symmetrized rows keyed by (block, i <= j).
  using Key = std::tuple<std::size_t, std::size_t, std::size_t>;
  auto symmetrize = [](const std::vector<SosEntry>& list) {
    std::map<Key, Rational> m;
    for (const auto& e : list) {
      if (e.g == e.h) {
        m[{e.block, e.g, e.g}] += e.coefficient;
      } else {
        m[{e.block, std::min(e.g, e.h), std::max(e.g, e.h)}] += Rational(e.coefficient, 2);
      }
    }
    std::vector<std::pair<Key, Rational>> v;
    for (auto& [k, c] : m)
      if (c != 0) v.emplace_back(k, c);
    return v;
  };

  out.sdp.c.assign(nb, Eigen::MatrixXd::Zero(n, n));
  for (const auto& [k, c] : symmetrize(prog.entries[0])) {
    const auto [b, i, j] = k;
    out.sdp.c[b](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.get_d();
    out.sdp.c[b](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c.get_d();
  }

  std::map<std::pair<std::vector<std::pair<Key, Rational>>, Rational>, std::size_t> seen;
  std::vector<std::vector<std::pair<Key, Rational>>> rows;
  std::vector<Rational> rhs;
  for (std::size_t r = 1; r < prog.rows.size(); ++r) {
    auto sym = symmetrize(prog.entries[r]);
    const Rational b = -prog.square.coefficient(NormalForm(prog.rows[r]));
    if (sym.empty()) {
      if (b != 0) out.infeasible = true;
      continue;
    }
    auto [it, fresh] = seen.try_emplace({sym, b}, rows.size());
    if (fresh) {
      rows.push_back(std::move(sym));
      rhs.push_back(b);
      out.members.push_back({r});
    } else {
      out.members[it->second].push_back(r);
    }
  }

  // Linearly independent rows via rank-revealing sparse QR of A^T.
  std::map<Key, int> coord;
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& [k, c] : rows[i]) {
      const auto [it, fresh] = coord.try_emplace(k, static_cast<int>(coord.size()));
      trip.emplace_back(it->second, static_cast<int>(i), c.get_d());
    }
  }
  std::vector<std::size_t> keep;
  if (!rows.empty()) {
    Eigen::SparseMatrix<double> at(static_cast<Eigen::Index>(coord.size()), static_cast<Eigen::Index>(rows.size()));
    at.setFromTriplets(trip.begin(), trip.end());
    at.makeCompressed();
    Eigen::SparseQR<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> qr;
    qr.setPivotThreshold(1e-9);
    qr.compute(at);
    const auto perm = qr.colsPermutation().indices();
    for (Eigen::Index i = 0; i < qr.rank(); ++i) keep.push_back(static_cast<std::size_t>(perm[i]));
    std::sort(keep.begin(), keep.end());
  }

  std::vector<std::vector<std::size_t>> members;
  Eigen::VectorXd b(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    const std::size_t i = keep[k];
    std::vector<SdpEntry> list;
    for (const auto& [key, c] : rows[i]) {
      const auto [blk, p, q] = key;
      const double v = c.get_d();
      list.push_back({static_cast<int>(blk), static_cast<int>(p), static_cast<int>(q), v});
      if (p != q) list.push_back({static_cast<int>(blk), static_cast<int>(q), static_cast<int>(p), v});
    }
    out.sdp.constraints.push_back(std::move(list));
    b[static_cast<Eigen::Index>(k)] = rhs[i].get_d();
    members.push_back(out.members[i]);
  }
  out.sdp.b = b;
  out.members = std::move(members);
  return out;
}

struct NumericSosSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  double lambda = 0;         ///< primal optimum of Lambda
  double dual_value = 0;     ///< phi(a*a) of the dual functional
  std::vector<Eigen::MatrixXd> gram;
  std::vector<double> phi;   ///< functional values on the program rows
  SdpSolution raw;
  std::size_t reduced_rows = 0;
};

inline NumericSosSolution solve_sos_program(const SosProgram& prog, const SdpOptions& opt = {}) {
  NumericSosSolution out;
  const ReducedProgram red = reduce_program(prog);
  out.reduced_rows = red.sdp.rows();
  if (red.infeasible) {
    out.status = SdpStatus::PrimalInfeasible;
    return out;
  }
  out.raw = solve_sdp(red.sdp, opt);
  out.status = out.raw.status;
  out.lambda = out.raw.primal_objective + red.trace_square;
  out.dual_value = out.raw.dual_objective + red.trace_square;
  out.gram = out.raw.x;
  out.phi.assign(prog.rows.size(), 0.0);
  out.phi[0] = 1.0;
  for (std::size_t i = 0; i < red.members.size(); ++i) {
    const double share = -out.raw.y[static_cast<Eigen::Index>(i)] / static_cast<double>(red.members[i].size());
    for (std::size_t r : red.members[i]) out.phi[r] = share;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact certification

/// Dense square matrix of rationals, row-major.
struct RationalMatrix {
  std::size_t n = 0;
  std::vector<Rational> data;

  explicit RationalMatrix(std::size_t size = 0) : n(size), data(size * size) {}
  Rational& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
  const Rational& operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
  bool symmetric() const {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
  }
};

/// Exact psd test by symmetric LDL^T with largest-diagonal pivoting. A zero
/// pivot requires the remaining row to vanish.
inline bool is_psd(RationalMatrix m) {
  if (!m.symmetric()) return false;
  const std::size_t n = m.n;
  std::vector<std::size_t> rest(n);
  std::iota(rest.begin(), rest.end(), std::size_t{0});
  while (!rest.empty()) {
    auto best = rest.begin();
    for (auto it = rest.begin(); it != rest.end(); ++it)
      if (m(*it, *it) > m(*best, *best)) best = it;
    const std::size_t k = *best;
    const Rational pivot = m(k, k);
    rest.erase(best);
    if (pivot < 0) return false;
    if (pivot == 0) {
      for (std::size_t i : rest)
        if (m(i, k) != 0) return false;
      continue;
    }
    for (std::size_t i : rest) {
      if (m(i, k) == 0) continue;
      const Rational f = m(i, k) / pivot;
      for (std::size_t j : rest) m(i, j) -= f * m(k, j);
    }
  }
  return true;
}

struct UpperCertificate {
  std::size_t level = 0;
  std::vector<Word> basis;
  std::vector<Word> block_words;
  std::vector<RationalMatrix> gram;
  Rational lambda;
  RingElement residual;   ///< Lambda - a*a - sum of block terms, in QF_A
  Rational bound_squared; ///< Lambda + ||residual||_1
  Rational bound;         ///< sqrt(bound_squared), rounded up
  std::string method;
};

namespace detail {

/// sum_{g,h} G[g][h] g^-1 (1 - r) h for every block, in QF_A.
inline RingElement block_sum(const PresentationPtr& free, const std::vector<Word>& basis,
                             const std::vector<Word>& block_words, const std::vector<RationalMatrix>& gram) {
  std::unordered_map<NormalForm, Rational, NormalFormHash> acc;
  for (std::size_t b = 0; b < block_words.size(); ++b) {
    const Word& r = block_words[b];
    for (std::size_t g = 0; g < basis.size(); ++g) {
      const Word ginv = basis[g].inverse();
      const Word ginv_r = ginv * r;
      for (std::size_t h = 0; h < basis.size(); ++h) {
        const Rational& c = gram[b](g, h);
        if (c == 0) continue;
        acc[NormalForm(ginv * basis[h])] += c;
        if (!r.is_identity()) acc[NormalForm(ginv_r * basis[h])] -= c;
      }
    }
  }
  return RingElement::from_map(free, std::move(acc));
}

inline void finish_certificate(UpperCertificate& cert, const RingElement& square) {
  const PresentationPtr& free = square.presentation();
  const RingElement q = block_sum(free, cert.basis, cert.block_words, cert.gram);
  cert.lambda = trace(square) + trace(q);
  cert.residual = RingElement::scalar(free, cert.lambda) - square - q;
  cert.bound_squared = cert.lambda + l1_norm(cert.residual);
  cert.bound = root_up(cert.bound_squared, 2);
}

inline RationalMatrix rationalize_matrix(const Eigen::MatrixXd& m, std::uint64_t max_den) {
  RationalMatrix out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i; j < m.cols(); ++j) {
      const Rational v = rationalize(0.5 * (m(i, j) + m(j, i)), max_den);
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = v;
      out(static_cast<std::size_t>(j), static_cast<std::size_t>(i)) = v;
    }
  }
  return out;
}

inline Eigen::MatrixXd clip_eigenvalues(const Eigen::MatrixXd& m, double delta) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(delta);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace detail

/// Small-denominator snaps of the unclipped Gram blocks, tried before clipping.
inline constexpr std::uint64_t kSnapDenominators[] = {1, 2, 4, 6, 12, 60, 1024, 1u << 20};
/// Eigenvalue floors tried in turn.
inline constexpr double kClipDeltas[] = {1e-9, 1e-7, 1e-5, 1e-3};

/// Rounds the numeric Gram blocks to exact psd rational matrices and
/// computes the exact residual. Every successful candidate is a valid
/// certificate; the smallest bound is returned. Throws VerificationError if
/// no candidate passes.
inline UpperCertificate certify_upper_bound(const SosProgram& prog, const std::vector<Eigen::MatrixXd>& gram) {
  if (gram.size() != prog.block_count()) throw MismatchError("Gram block count does not match the program");
  std::optional<UpperCertificate> best;
  auto attempt = [&](std::vector<RationalMatrix> blocks, std::string method) {
    for (const auto& b : blocks)
      if (!is_psd(b)) return false;
    UpperCertificate cert{prog.level, prog.basis, prog.block_words, std::move(blocks), 0, RingElement(prog.square.presentation()),
                          0, 0, std::move(method)};
    detail::finish_certificate(cert, prog.square);
    if (!best || cert.bound < best->bound) best = std::move(cert);
    return true;
  };
  const std::size_t total = prog.block_count() * prog.block_size();
  if (total <= 400) {
    for (std::uint64_t den : kSnapDenominators) {
      std::vector<RationalMatrix> blocks;
      for (const auto& g : gram) blocks.push_back(detail::rationalize_matrix(g, den));
      attempt(std::move(blocks), "snap/" + std::to_string(den));
    }
  }
  for (double delta : kClipDeltas) {
    std::vector<RationalMatrix> blocks;
    for (const auto& g : gram) blocks.push_back(detail::rationalize_matrix(detail::clip_eigenvalues(g, delta), 1ull << 32));
    char label[32];
    std::snprintf(label, sizeof label, "clip/%g", delta);
    if (attempt(std::move(blocks), label)) break;
  }
  if (!best) throw VerificationError("no rounded Gram candidate passed the exact psd test");
  return *best;
}

/// Independent check of a certificate against the element and presentation:
/// block words must be e or relators (or their inverses), every Gram block
/// exactly psd, and the recorded residual and bound must match a fresh
/// computation. Returns an empty string on success, else the failure.
inline std::string verify_certificate(const UpperCertificate& cert, const RingElement& a, const Presentation& p) {
  const RingElement lifted = lift_to_free(a);
  const RingElement square = star(lifted) * lifted;
  if (cert.gram.size() != cert.block_words.size()) return "block count mismatch";
  for (const auto& w : cert.block_words) {
    if (w.is_identity()) continue;
    bool ok = false;
    for (const auto& r : p.relators()) ok |= w == r || w == r.inverse();
    if (!ok) return "block word is not a relator";
  }
  for (const auto& g : cert.gram) {
    if (g.n != cert.basis.size()) return "Gram size mismatch";
    if (!is_psd(g)) return "Gram block is not psd";
  }
  const RingElement q = detail::block_sum(square.presentation(), cert.basis, cert.block_words, cert.gram);
  const RingElement residual = RingElement::scalar(square.presentation(), cert.lambda) - square - q;
  if (!(residual == cert.residual)) {
    return "residual does not match";
  }
  if (cert.bound_squared != cert.lambda + l1_norm(residual)) return "bound_squared does not match";
  if (cert.bound < 0 || cert.bound * cert.bound < cert.bound_squared) return "bound is below sqrt(bound_squared)";
  return "";
}

/// ||a||_1^2 - a*a = sum_{g,h} (||a||_1 |c_g| [g = h] - c_g c_h) g^-1 h with a
/// psd Gram on the support of a; certifies ||a||_u <= ||a||_1 at level 0.
inline UpperCertificate l1_certificate(const RingElement& a) {
  const RingElement lifted = lift_to_free(a);
  UpperCertificate cert{0, {}, {Word{}}, {}, 0, RingElement(lifted.presentation()), 0, 0, "l1"};
  std::vector<Rational> c;
  for (const auto& [u, coeff] : lifted.terms()) {
    cert.basis.push_back(u.word());
    c.push_back(coeff);
  }
  const Rational norm = l1_norm(lifted);
  RationalMatrix g(cert.basis.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) g(i, j) = -c[i] * c[j];
    g(i, i) += norm * abs(c[i]);
  }
  cert.gram = {std::move(g)};
  detail::finish_certificate(cert, star(lifted) * lifted);
  return cert;
}

struct UpperLevel {
  std::size_t level = 0;
  std::optional<UpperCertificate> certificate;
  NumericSosSolution numeric;
  Rational running_min;  ///< min over certified levels so far; 0 if none yet
  bool has_running_min = false;
  std::string note;      ///< why a level gave no bound
};

struct UpperOptions {
  SdpOptions sdp;
  std::size_t max_rows = 3000;
  std::size_t cap = kDefaultElementCap;
};

/// Solves and certifies one level; never throws for per-level failures.
inline UpperLevel upper_bound_level(const RingElement& a, const Presentation& p, std::size_t level,
                                    const UpperOptions& opt = {}) {
  UpperLevel out;
  out.level = level;
  try {
    // Words g^-1 h already fill the free ball of twice the level.
    if (ball_size(p.rank(), 2 * level) > opt.max_rows) {
      out.note = "skipped: more than " + std::to_string(opt.max_rows) + " constraint rows";
      return out;
    }
    const SosProgram prog = assemble_sos_program(a, p, level, opt.cap);
    if (prog.rows.size() > opt.max_rows) {
      out.note = "skipped: " + std::to_string(prog.rows.size()) + " constraint rows exceed the limit " +
                 std::to_string(opt.max_rows);
      return out;
    }
    out.numeric = solve_sos_program(prog, opt.sdp);
    if (out.numeric.status == SdpStatus::PrimalInfeasible) {
      out.note = "no bound at this level";
      return out;
    }
    if (out.numeric.gram.empty()) {
      out.note = std::string("solver: ") + to_string(out.numeric.status);
      return out;
    }
    out.certificate = certify_upper_bound(prog, out.numeric.gram);
    if (out.numeric.status != SdpStatus::Optimal) out.note = std::string("solver: ") + to_string(out.numeric.status);
  } catch (const Error& e) {
    out.note = e.what();
  }
  return out;
}

/// Certified bounds for ascending levels; the running minimum makes the
/// reported sequence nonincreasing.
inline std::vector<UpperLevel> upper_bound_sequence(const RingElement& a, const Presentation& p,
                                                    const std::vector<std::size_t>& levels,
                                                    const UpperOptions& opt = {}) {
  if (levels.empty()) throw MismatchError("no levels requested");
  std::vector<UpperLevel> out;
  std::optional<Rational> best;
  for (std::size_t level : levels) {
    if (!out.empty() && level <= out.back().level) throw MismatchError("levels must be ascending");
    UpperLevel l = upper_bound_level(a, p, level, opt);
    if (l.certificate && (!best || l.certificate->bound < *best)) best = l.certificate->bound;
    if (best) {
      l.running_min = *best;
      l.has_running_min = true;
    }
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace gnorm
