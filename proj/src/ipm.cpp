#include "ipm.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "mpcport/errors.hpp"

namespace mpcport::detail {
namespace {

// Precomputed structure: which constraint rows touch each P block, plus the
// dense slice of A restricted to that block, so the Schur complement can be
// assembled block by block. A is constant across IPM iterations.
struct BlockInfo {
  int offset = 0;
  int size = 0;
  std::vector<int> rows;   // constraint rows touching this block's columns
  Eigen::MatrixXd at;      // size x |rows|, equals A(rows, cols)'
};

struct DiagColumn {
  std::vector<std::pair<int, double>> entries;  // (row, value) of this column of A
};

struct Workspace {
  std::vector<BlockInfo> blocks;
  std::vector<DiagColumn> diag_cols;
  int block_vars = 0;

  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors;  // per-block P_k + D_k
  Eigen::VectorXd diag_w;                            // 1/(p_i + d_i) for diag vars
  Eigen::LLT<Eigen::MatrixXd> schur_llt;
  Eigen::LDLT<Eigen::MatrixXd> schur_ldlt;
  bool use_ldlt = false;
};

Workspace build_workspace(const BlockDiagQp& qp) {
  Workspace ws;
  int offset = 0;
  for (const auto& blk : qp.blocks) {
    BlockInfo info;
    info.offset = offset;
    info.size = static_cast<int>(blk.rows());
    if (blk.rows() != blk.cols()) throw ValidationError("quadratic block is not square");
    offset += info.size;
    ws.blocks.push_back(std::move(info));
  }
  ws.block_vars = offset;
  const int n = qp.num_vars();
  if (offset + static_cast<int>(qp.diag.size()) != n)
    throw ValidationError("quadratic blocks and diagonal do not cover the variable vector");
  if (qp.A.cols() != n) throw ValidationError("constraint matrix column count mismatch");
  if (qp.A.rows() != qp.b.size()) throw ValidationError("constraint right-hand side size mismatch");

  // Row sets and dense slices per block.
  for (auto& info : ws.blocks) {
    std::vector<int> mark(qp.num_cons(), -1);
    for (int c = info.offset; c < info.offset + info.size; ++c) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(qp.A, c); it; ++it) {
        if (mark[it.row()] < 0) {
          mark[it.row()] = static_cast<int>(info.rows.size());
          info.rows.push_back(static_cast<int>(it.row()));
        }
      }
    }
    info.at.setZero(info.size, static_cast<int>(info.rows.size()));
    for (int c = info.offset; c < info.offset + info.size; ++c) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(qp.A, c); it; ++it) {
        info.at(c - info.offset, mark[it.row()]) = it.value();
      }
    }
  }
  ws.diag_cols.resize(static_cast<std::size_t>(n - ws.block_vars));
  for (int c = ws.block_vars; c < n; ++c) {
    auto& col = ws.diag_cols[static_cast<std::size_t>(c - ws.block_vars)];
    for (Eigen::SparseMatrix<double>::InnerIterator it(qp.A, c); it; ++it) {
      col.entries.emplace_back(static_cast<int>(it.row()), it.value());
    }
  }
  ws.factors.resize(ws.blocks.size());
  return ws;
}

Eigen::VectorXd apply_p(const BlockDiagQp& qp, const Workspace& ws, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (std::size_t k = 0; k < ws.blocks.size(); ++k) {
    const auto& info = ws.blocks[k];
    out.segment(info.offset, info.size).noalias() =
        qp.blocks[k] * v.segment(info.offset, info.size);
  }
  const int nd = static_cast<int>(qp.diag.size());
  if (nd > 0)
    out.tail(nd) = qp.diag.cwiseProduct(v.tail(nd));
  return out;
}

// Factor P + D with D = diag(z ./ x) and assemble + factor the Schur
// complement S = A (P + D)^-1 A'. Falls back to LDLT with a ridge when the
// Cholesky of S breaks down (near-degenerate complementarity pairs).
void factorize(const BlockDiagQp& qp, Workspace& ws, const Eigen::VectorXd& d) {
  for (std::size_t k = 0; k < ws.blocks.size(); ++k) {
    const auto& info = ws.blocks[k];
    Eigen::MatrixXd kkt = qp.blocks[k];
    kkt.diagonal() += d.segment(info.offset, info.size);
    ws.factors[k].compute(kkt);
    if (ws.factors[k].info() != Eigen::Success) {
      kkt.diagonal().array() += 1e-12 * (1.0 + kkt.diagonal().maxCoeff());
      ws.factors[k].compute(kkt);
      if (ws.factors[k].info() != Eigen::Success)
        throw DegenerateRiskError("quadratic block factorization failed");
    }
  }
  const int nd = static_cast<int>(qp.diag.size());
  ws.diag_w.resize(nd);
  for (int i = 0; i < nd; ++i) ws.diag_w[i] = 1.0 / (qp.diag[i] + d[ws.block_vars + i]);

  const int m = qp.num_cons();
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t k = 0; k < ws.blocks.size(); ++k) {
    const auto& info = ws.blocks[k];
    if (info.rows.empty()) continue;
    Eigen::MatrixXd y = ws.factors[k].matrixL().solve(info.at);
    Eigen::MatrixXd g(static_cast<int>(info.rows.size()), static_cast<int>(info.rows.size()));
    g.noalias() = y.transpose() * y;
    for (std::size_t i = 0; i < info.rows.size(); ++i)
      for (std::size_t j = 0; j < info.rows.size(); ++j)
        s(info.rows[i], info.rows[j]) += g(static_cast<int>(i), static_cast<int>(j));
  }
  for (int c = 0; c < nd; ++c) {
    const auto& col = ws.diag_cols[static_cast<std::size_t>(c)];
    for (const auto& [r1, v1] : col.entries)
      for (const auto& [r2, v2] : col.entries) s(r1, r2) += ws.diag_w[c] * v1 * v2;
  }
  const double ridge = 1e-13 * std::max(1.0, s.diagonal().maxCoeff());
  s.diagonal().array() += ridge;
  ws.schur_llt.compute(s);
  ws.use_ldlt = ws.schur_llt.info() != Eigen::Success;
  if (ws.use_ldlt) {
    s.diagonal().array() += 1e4 * ridge;
    ws.schur_ldlt.compute(s);
    if (ws.schur_ldlt.info() != Eigen::Success)
      throw DegenerateRiskError("Schur complement factorization failed");
  }
}

Eigen::VectorXd apply_w(const Workspace& ws, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(v.size());
  for (std::size_t k = 0; k < ws.blocks.size(); ++k) {
    const auto& info = ws.blocks[k];
    out.segment(info.offset, info.size) = ws.factors[k].solve(v.segment(info.offset, info.size));
  }
  const int nd = static_cast<int>(ws.diag_w.size());
  if (nd > 0)
    out.tail(nd) = ws.diag_w.cwiseProduct(v.tail(nd));
  return out;
}

// One reduced-KKT solve: (P+D) dx - A' dy = r1, A dx = r2.
void solve_kkt(const BlockDiagQp& qp, const Workspace& ws, const Eigen::VectorXd& r1,
               const Eigen::VectorXd& r2, Eigen::VectorXd& dx, Eigen::VectorXd& dy) {
  const Eigen::VectorXd rhs = r2 - qp.A * apply_w(ws, r1);
  if (ws.use_ldlt)
    dy = ws.schur_ldlt.solve(rhs);
  else
    dy = ws.schur_llt.solve(rhs);
  dx = apply_w(ws, r1 + qp.A.transpose() * dy);
}

double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double alpha = 1.0;
  for (int i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

}  // namespace

IpmResult solve_ipm(const BlockDiagQp& qp, const IpmOptions& options, const IpmWarmStart* warm) {
  const int n = qp.num_vars();
  Workspace ws = build_workspace(qp);

  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(qp.num_cons());
  Eigen::VectorXd z = Eigen::VectorXd::Ones(n);
  if (warm != nullptr) {
    // Floors keep warm points strictly interior without erasing the
    // active-set information carried by near-zero entries.
    if (warm->x.size() == n) x = warm->x.cwiseMax(1e-7);
    if (warm->y.size() == qp.num_cons()) y = warm->y;
    if (warm->z.size() == n) z = warm->z.cwiseMax(1e-7);
  }

  IpmResult best;
  IpmResult current;

  // Raw (unnormalized) KKT residual: the public contract pins the definition
  // as the max of the three infinity-norms, so no data-relative scaling here.
  for (int iter = 0; iter <= options.max_iterations; ++iter) {
    const Eigen::VectorXd r_dual = apply_p(qp, ws, x) + qp.q - qp.A.transpose() * y - z;
    const Eigen::VectorXd r_prim = qp.A * x - qp.b;
    const double comp = x.cwiseProduct(z).lpNorm<Eigen::Infinity>();
    const double kkt = std::max(
        {r_dual.lpNorm<Eigen::Infinity>(), r_prim.lpNorm<Eigen::Infinity>(), comp});

    current.x = x;
    current.y = y;
    current.z = z;
    current.kkt_residual = kkt;
    current.iterations = iter;
    if (kkt < best.kkt_residual) best = current;
    if (kkt <= options.tolerance) {
      best = current;
      best.converged = true;
      return best;
    }
    if (iter == options.max_iterations) break;

    const double mu = x.dot(z) / n;
    const Eigen::VectorXd d = z.cwiseQuotient(x);
    factorize(qp, ws, d);

    // Affine predictor.
    Eigen::VectorXd dx_a, dy_a;
    solve_kkt(qp, ws, -r_dual - z, -r_prim, dx_a, dy_a);
    Eigen::VectorXd dz_a = -z - d.cwiseProduct(dx_a);
    const double ap_a = max_step(x, dx_a);
    const double ad_a = max_step(z, dz_a);
    const double mu_aff = (x + ap_a * dx_a).dot(z + ad_a * dz_a) / n;
    const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-8, 1.0);

    // Centering + Mehrotra corrector.
    const Eigen::VectorXd rc =
        (-x.cwiseProduct(z)).array() + sigma * mu - dx_a.cwiseProduct(dz_a).array();
    const Eigen::VectorXd r1 = -r_dual + rc.cwiseQuotient(x);
    Eigen::VectorXd dx, dy;
    solve_kkt(qp, ws, r1, -r_prim, dx, dy);

    // One round of iterative refinement on the reduced system.
    {
      const Eigen::VectorXd e1 =
          r1 - (apply_p(qp, ws, dx) + d.cwiseProduct(dx) - qp.A.transpose() * dy);
      const Eigen::VectorXd e2 = -r_prim - qp.A * dx;
      if (e1.lpNorm<Eigen::Infinity>() + e2.lpNorm<Eigen::Infinity>() > 1e-13) {
        Eigen::VectorXd cx, cy;
        solve_kkt(qp, ws, e1, e2, cx, cy);
        dx += cx;
        dy += cy;
      }
    }
    const Eigen::VectorXd dz = rc.cwiseQuotient(x) - d.cwiseProduct(dx);

    const double eta = mu < 1e-6 ? 0.99995 : 0.995;
    const double ap = std::min(1.0, eta * max_step(x, dx));
    const double ad = std::min(1.0, eta * max_step(z, dz));
    if (ap < 1e-11 && ad < 1e-11) break;  // jammed; report best iterate

    x += ap * dx;
    y += ad * dy;
    z += ad * dz;
  }
  best.converged = best.kkt_residual <= options.tolerance;
  return best;
}

}  // namespace mpcport::detail
