#pragma once

// Dense block-diagonal SDP solver: infeasible primal-dual interior point with
// the HKM search direction and Mehrotra predictor-corrector steps.
//
//   primal:  minimize <C, X>  subject to <A_i, X> = b_i, X psd
//   dual:    maximize b^T y   subject to Z = C - sum_i y_i A_i psd

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace gnorm {

/// One entry of a symmetric constraint matrix. Off-diagonal entries are
/// listed twice, once per triangle.
struct SdpEntry {
  int block;
  int row;
  int col;
  double value;
};

struct SdpProblem {
  std::vector<Eigen::Index> block_sizes;
  std::vector<Eigen::MatrixXd> c;
  std::vector<std::vector<SdpEntry>> constraints;
  Eigen::VectorXd b;

  std::size_t rows() const { return constraints.size(); }
};

enum class SdpStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations, NumericalFailure };

inline const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::PrimalInfeasible: return "primal infeasible";
    case SdpStatus::DualInfeasible: return "dual infeasible";
    case SdpStatus::MaxIterations: return "max iterations";
    case SdpStatus::NumericalFailure: return "numerical failure";
  }
  return "unknown";
}

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  std::vector<Eigen::MatrixXd> x;
  std::vector<Eigen::MatrixXd> z;
  Eigen::VectorXd y;
  double primal_objective = 0;
  double dual_objective = 0;
  double primal_residual = 0;  ///< ||b - A(X)|| / (1 + ||b||)
  double dual_residual = 0;    ///< ||C - Z - A^T y|| / (1 + ||C||)
  double gap = 0;              ///< |pobj - dobj| / (1 + |pobj| + |dobj|)
  int iterations = 0;
};

struct SdpOptions {
  double tolerance = 1e-9;
  int max_iterations = 120;
  double step_fraction = 0.95;
  /// Dual objective beyond this (relative to the data scale) is taken as a
  /// sign of primal infeasibility.
  double unbounded_threshold = 1e8;
};

namespace detail {

using Blocks = std::vector<Eigen::MatrixXd>;

inline double inner(const Blocks& a, const Blocks& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k].array() * b[k].array()).sum();
  return s;
}

inline double frobenius(const Blocks& a) { return std::sqrt(inner(a, a)); }

inline Eigen::VectorXd apply_a(const SdpProblem& p, const Blocks& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.rows()));
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0;
    for (const auto& e : p.constraints[i]) s += e.value * x[static_cast<std::size_t>(e.block)](e.row, e.col);
    out[static_cast<Eigen::Index>(i)] = s;
  }
  return out;
}

inline Blocks apply_at(const SdpProblem& p, const Eigen::VectorXd& y) {
  Blocks out;
  for (auto n : p.block_sizes) out.push_back(Eigen::MatrixXd::Zero(n, n));
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const double yi = y[static_cast<Eigen::Index>(i)];
    if (yi == 0) continue;
    for (const auto& e : p.constraints[i]) out[static_cast<std::size_t>(e.block)](e.row, e.col) += yi * e.value;
  }
  return out;
}

/// Largest alpha in (0, inf] with x + alpha dx psd, given x = L L^T.
inline double max_step(const Blocks& x, const Blocks& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (x[k].rows() == 0) continue;
    Eigen::LLT<Eigen::MatrixXd> llt(x[k]);
    if (llt.info() != Eigen::Success) return 0;
    Eigen::MatrixXd t = llt.matrixL().solve(dx[k]);
    t = llt.matrixL().solve(t.transpose().eval());
    t = 0.5 * (t + t.transpose()).eval();
    const double lmin = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(t, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

/// Schur complement M_ij = tr(A_i X A_j Z^-1) by pairing constraint entries
/// within each block.
inline Eigen::MatrixXd schur_complement(const SdpProblem& p, const Blocks& x, const Blocks& zinv) {
  const auto m = static_cast<Eigen::Index>(p.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  struct Tagged {
    Eigen::Index constraint;
    int row;
    int col;
    double value;
  };
  std::vector<std::vector<Tagged>> by_block(p.block_sizes.size());
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (const auto& e : p.constraints[i])
      by_block[static_cast<std::size_t>(e.block)].push_back({static_cast<Eigen::Index>(i), e.row, e.col, e.value});
  for (std::size_t k = 0; k < by_block.size(); ++k) {
    const auto& list = by_block[k];
    const Eigen::MatrixXd& xk = x[k];
    const Eigen::MatrixXd& zk = zinv[k];
    for (const auto& e1 : list) {
      for (const auto& e2 : list) {
        if (e2.constraint < e1.constraint) continue;
        out(e1.constraint, e2.constraint) += e1.value * e2.value * xk(e1.row, e2.row) * zk(e2.col, e1.col);
      }
    }
  }
  out.triangularView<Eigen::StrictlyLower>() = out.transpose().triangularView<Eigen::StrictlyLower>();
  return out;
}

class SchurSolver {
 public:
  explicit SchurSolver(const Eigen::MatrixXd& m) {
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) return;
    use_ldlt_ = true;
    Eigen::MatrixXd reg = m;
    const double shift = 1e-12 * std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
    reg.diagonal().array() += shift;
    ldlt_.compute(reg);
    ok_ = ldlt_.info() == Eigen::Success;
  }
  bool ok() const { return ok_; }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    if (use_ldlt_) return ldlt_.solve(rhs);
    return llt_.solve(rhs);
  }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
  bool use_ldlt_ = false;
  bool ok_ = true;
};

inline Blocks symmetric_part(Blocks a) {
  for (auto& m : a) m = 0.5 * (m + m.transpose()).eval();
  return a;
}

}  // namespace detail

inline SdpSolution solve_sdp(const SdpProblem& p, const SdpOptions& opt = {}) {
  using detail::Blocks;
  const std::size_t nb = p.block_sizes.size();
  const auto m = static_cast<Eigen::Index>(p.rows());
  double total_dim = 0;
  for (auto n : p.block_sizes) total_dim += static_cast<double>(n);

  // Scaled identity start.
  double a_scale = 0, c_norm = detail::frobenius(p.c);
  double alpha0 = 1, beta0 = 1;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double f = 0;
    for (const auto& e : p.constraints[i]) f += e.value * e.value;
    f = std::sqrt(f);
    a_scale = std::max(a_scale, f);
    alpha0 = std::max(alpha0, total_dim * (1 + std::abs(p.b[static_cast<Eigen::Index>(i)])) / (1 + f));
  }
  beta0 = std::max(beta0, (1 + std::max(a_scale, c_norm)) / std::sqrt(std::max(total_dim, 1.0)));

  Blocks x, z;
  for (auto n : p.block_sizes) {
    x.push_back(alpha0 * Eigen::MatrixXd::Identity(n, n));
    z.push_back(beta0 * Eigen::MatrixXd::Identity(n, n));
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  const double b_norm = p.b.norm();

  SdpSolution sol;
  for (int it = 0; it <= opt.max_iterations; ++it) {
    const Eigen::VectorXd rp = p.b - detail::apply_a(p, x);
    Blocks rd = detail::apply_at(p, y);
    for (std::size_t k = 0; k < nb; ++k) rd[k] = p.c[k] - z[k] - rd[k];
    const double pobj = detail::inner(p.c, x);
    const double dobj = p.b.dot(y);
    const double mu = detail::inner(x, z) / std::max(total_dim, 1.0);

    sol.iterations = it;
    sol.primal_objective = pobj;
    sol.dual_objective = dobj;
    sol.primal_residual = rp.norm() / (1 + b_norm);
    sol.dual_residual = detail::frobenius(rd) / (1 + c_norm);
    sol.gap = std::abs(pobj - dobj) / (1 + std::abs(pobj) + std::abs(dobj));
    sol.x = x;
    sol.z = z;
    sol.y = y;

    if (sol.primal_residual <= opt.tolerance && sol.dual_residual <= opt.tolerance && sol.gap <= opt.tolerance) {
      sol.status = SdpStatus::Optimal;
      return sol;
    }
    const double scale = 1 + b_norm + c_norm;
    if (dobj > opt.unbounded_threshold * scale && sol.dual_residual <= 1e-6) {
      sol.status = SdpStatus::PrimalInfeasible;
      return sol;
    }
    if (pobj < -opt.unbounded_threshold * scale && sol.primal_residual <= 1e-6) {
      sol.status = SdpStatus::DualInfeasible;
      return sol;
    }
    if (it == opt.max_iterations) break;

    Blocks zinv;
    for (std::size_t k = 0; k < nb; ++k) {
      Eigen::LLT<Eigen::MatrixXd> llt(z[k]);
      if (llt.info() != Eigen::Success) {
        sol.status = SdpStatus::NumericalFailure;
        return sol;
      }
      Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(z[k].rows(), z[k].cols()));
      zinv.push_back(0.5 * (inv + inv.transpose()));
    }
    const detail::SchurSolver schur(detail::schur_complement(p, x, zinv));
    if (!schur.ok()) {
      sol.status = SdpStatus::NumericalFailure;
      return sol;
    }

    Blocks x_rd_zinv(nb);
    for (std::size_t k = 0; k < nb; ++k) x_rd_zinv[k] = x[k] * rd[k] * zinv[k];
    const Eigen::VectorXd a_x_rd_zinv = detail::apply_a(p, x_rd_zinv);

    // dX = sym(G - X dZ Z^-1), dZ = Rd - A^T dy, A(dX) = rp.
    auto direction = [&](const Blocks& g, Blocks& dx, Blocks& dz, Eigen::VectorXd& dy) {
      dy = schur.solve(rp - detail::apply_a(p, g) + a_x_rd_zinv);
      dz = detail::apply_at(p, dy);
      for (std::size_t k = 0; k < nb; ++k) dz[k] = rd[k] - dz[k];
      dz = detail::symmetric_part(dz);
      dx.resize(nb);
      for (std::size_t k = 0; k < nb; ++k) dx[k] = g[k] - x[k] * dz[k] * zinv[k];
      dx = detail::symmetric_part(dx);
    };

    Blocks g(nb), dx, dz;
    Eigen::VectorXd dy;
    for (std::size_t k = 0; k < nb; ++k) g[k] = -x[k];
    direction(g, dx, dz, dy);
    const double ap_aff = std::min(1.0, detail::max_step(x, dx));
    const double ad_aff = std::min(1.0, detail::max_step(z, dz));
    Blocks xa(nb), za(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      xa[k] = x[k] + ap_aff * dx[k];
      za[k] = z[k] + ad_aff * dz[k];
    }
    const double mu_aff = detail::inner(xa, za) / std::max(total_dim, 1.0);
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

    for (std::size_t k = 0; k < nb; ++k) {
      g[k] = sigma * mu * zinv[k] - x[k] - dx[k] * dz[k] * zinv[k];
    }
    direction(g, dx, dz, dy);

    const double ap = std::min(1.0, opt.step_fraction * detail::max_step(x, dx));
    const double ad = std::min(1.0, opt.step_fraction * detail::max_step(z, dz));
    if (!(ap > 0) || !(ad > 0) || !std::isfinite(ap) || !std::isfinite(ad)) {
      sol.status = SdpStatus::NumericalFailure;
      return sol;
    }
    for (std::size_t k = 0; k < nb; ++k) {
      x[k] += ap * dx[k];
      z[k] += ad * dz[k];
    }
    y += ad * dy;
  }
  sol.status = SdpStatus::MaxIterations;
  return sol;
}

}  // namespace gnorm
