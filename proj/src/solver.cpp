#include "vf/solver.hpp"

#include <algorithm>
#include <cmath>

#include "vf/errors.hpp"
#include "vf/parallel.hpp"
#include "vf/rng.hpp"

namespace vf {

namespace {

std::uint64_t slot_seed(const Problem& p, int iter, int kappa, bool gradient) {
  return derive_seed(p.scenario.seed,
                     {0x736f6c76ULL, static_cast<std::uint64_t>(iter),
                      static_cast<std::uint64_t>(kappa), gradient ? 1ULL : 0ULL});
}

}  // namespace

MatrixXd node_aggregate(const Problem& p, const std::vector<VectorXd>& contributions_w) {
  MatrixXd node(p.n_nodes, p.horizon);
  node.setZero();
  for (int i = 0; i < p.n_ev; ++i)
    node.row(p.scenario.fleet.evs[i].node) += contributions_w[i].transpose();
  return node;
}

MatrixXd compute_z(const Problem& p, const MatrixXd& node_ev_w) {
  if (node_ev_w.rows() != p.n_nodes || node_ev_w.cols() != p.horizon)
    throw DimensionError("compute_z: nodal aggregate shape mismatch");
  return p.z_from_node_watts * node_ev_w;
}

VectorXd chance_constraint_value(const Problem& p, const MatrixXd& z_v2, int iter) {
  VectorXd d(p.horizon);
  MvnCdfOptions opts;
  opts.accuracy = p.scenario.solver.mvn_accuracy;
  opts.shifts = p.scenario.solver.mvn_shifts;
  parallel_for(
      static_cast<std::size_t>(p.horizon),
      [&](std::size_t k) {
        const auto res =
            mvn_cdf(z_v2.col(static_cast<int>(k)), p.yhat_v2[k], opts,
                    slot_seed(p, iter, static_cast<int>(k), false));
        d(static_cast<int>(k)) = p.scenario.solver.delta - res.value;
      },
      p.scenario.solver.threads);
  return d;
}

MatrixXd weighted_adjusted_gradients(const Problem& p, const MatrixXd& z_v2,
                                     const VectorXd& lambda, int iter) {
  MatrixXd w(p.n_nodes, p.horizon);
  w.setZero();
  MvnCdfOptions opts;
  opts.accuracy = p.scenario.solver.mvn_gradient_accuracy;
  opts.shifts = p.scenario.solver.mvn_shifts;
  parallel_for(
      static_cast<std::size_t>(p.horizon),
      [&](std::size_t k) {
        const int kk = static_cast<int>(k);
        if (lambda(kk) == 0.0) return;  // inactive duals broadcast zero blocks
        const VectorXd grad =
            adjusted_mvncdf_gradient(z_v2.col(kk), p.yhat_v2[kk], opts,
                                     slot_seed(p, iter, kk, true), p.yhat_conditionals.get());
        w.col(kk) = lambda(kk) * grad;
      },
      p.scenario.solver.threads);
  return w;
}

VectorXd agent_gradient(const EvSpec& ev, const VectorXd& u, double rho,
                        const VectorXd& mean_total_w, const MatrixXd& weighted_grads,
                        const VectorXd& dcol_v2) {
  const int K = static_cast<int>(u.size());
  if (mean_total_w.size() != K || weighted_grads.cols() != K)
    throw DimensionError("agent_gradient: horizon mismatch");
  VectorXd g = ev.pbar_w * mean_total_w + rho * u;
  // chance-constraint pressure: minus the private key applied to the
  // broadcast blocks; D <= 0 makes this nonnegative, pushing charging down.
  g -= weighted_grads.transpose() * dcol_v2;
  return g;
}

VectorXd primal_step(const VectorXd& u, const VectorXd& grad, double required, double alpha,
                     double tau_u) {
  const VectorXd inner = project_onto_box_sum(tau_u * u - alpha * grad, tau_u, tau_u * required);
  return project_onto_U(inner / tau_u, required);
}

VectorXd dual_step(const VectorXd& lambda, const VectorXd& d, double beta, double tau_lambda,
                   double d_lambda) {
  if (lambda.size() != d.size()) throw DimensionError("dual_step: length mismatch");
  VectorXd out(lambda.size());
  for (int k = 0; k < lambda.size(); ++k) {
    const double inner =
        std::clamp(tau_lambda * lambda(k) + beta * d(k), 0.0, tau_lambda * d_lambda);
    out(k) = std::clamp(inner / tau_lambda, 0.0, d_lambda);
  }
  return out;
}

MatrixXd objective_mean_gradient(const Problem& p, const MatrixXd& U,
                                 const VectorXd& aggregate_w) {
  if (U.rows() != p.horizon || U.cols() != p.n_ev)
    throw DimensionError("objective_mean_gradient: U must be K x n");
  const VectorXd total = p.mean_total_w + aggregate_w;
  MatrixXd g(p.horizon, p.n_ev);
  for (int i = 0; i < p.n_ev; ++i)
    g.col(i) = p.scenario.fleet.evs[i].pbar_w * total + p.rho * U.col(i);
  return g;
}

namespace {

struct LoopState {
  MatrixXd U;                          // K x n
  std::vector<VectorXd> contrib_w;     // per EV, K
  MatrixXd node_w;                     // h x K
  VectorXd aggregate_w;                // K
};

LoopState init_state(const Problem& p) {
  LoopState st;
  st.U = MatrixXd::Zero(p.horizon, p.n_ev);
  st.contrib_w.assign(p.n_ev, VectorXd::Zero(p.horizon));
  st.node_w = MatrixXd::Zero(p.n_nodes, p.horizon);
  st.aggregate_w = VectorXd::Zero(p.horizon);
  return st;
}

void refresh_aggregates(const Problem& p, LoopState& st) {
  st.node_w = node_aggregate(p, st.contrib_w);
  st.aggregate_w = st.node_w.colwise().sum().transpose();
}

void record_iteration(const Problem& p, const LoopState& st, int iter, const VectorXd& d_slot,
                      const VectorXd& lambda_slot, double primal_norm, double dual_norm,
                      std::vector<IterationRecord>& hist) {
  IterationRecord rec;
  rec.iter = iter;
  const VectorXd total = p.mean_total_w + st.aggregate_w;
  rec.objective_quadratic = 0.5 * total.squaredNorm();
  rec.objective_with_rho = rec.objective_quadratic + 0.5 * p.rho * st.U.squaredNorm();
  rec.max_d = d_slot.size() ? d_slot.maxCoeff() : 0.0;
  rec.primal_step_norm = primal_norm;
  rec.dual_step_norm = dual_norm;
  rec.aggregate_w = st.aggregate_w;
  rec.d = d_slot;
  rec.lambda = lambda_slot;
  hist.push_back(std::move(rec));
}

bool hit_stop_rule(const Problem& p, const std::vector<IterationRecord>& hist) {
  const auto& cfg = p.scenario.solver;
  if (!cfg.stop_on_converge) return false;
  const int w = cfg.converge_window;
  if (static_cast<int>(hist.size()) < w) return false;
  for (int k = 0; k < w; ++k) {
    const auto& rec = hist[hist.size() - 1 - k];
    const double scale = std::max(1.0, rec.aggregate_w.norm());
    if (rec.primal_step_norm > cfg.converge_tol * scale) return false;
  }
  return true;
}

}  // namespace

SolveResult run_ccspds(const Problem& p) {
  const auto& cfg = p.scenario.solver;
  LoopState st = init_state(p);
  VectorXd lambda = VectorXd::Zero(p.horizon);
  std::vector<IterationRecord> hist;
  hist.reserve(cfg.max_iters);

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    const MatrixXd z = compute_z(p, st.node_w);
    const VectorXd d = chance_constraint_value(p, z, iter);
    const MatrixXd wgrads = weighted_adjusted_gradients(p, z, lambda, iter);
    const VectorXd total = p.mean_total_w + st.aggregate_w;

    double primal_norm_sq = 0.0;
    for (int i = 0; i < p.n_ev; ++i) {
      const EvSpec& ev = p.scenario.fleet.evs[i];
      const VectorXd g = agent_gradient(ev, st.U.col(i), p.rho, total, wgrads, p.dcol_v2.col(i));
      const VectorXd u_new = primal_step(st.U.col(i), g, p.required(i), cfg.alpha, cfg.tau_u);
      primal_norm_sq += (u_new - st.U.col(i)).squaredNorm();
      st.U.col(i) = u_new;
      VectorXd delta(p.horizon);
      for (int t = 0; t < p.horizon; ++t)
        delta(t) = contribution_delta(ev.pbar_w, u_new(t), st.contrib_w[i](t));
      st.contrib_w[i] += delta;
    }

    const VectorXd lambda_new = dual_step(lambda, d, cfg.beta, cfg.tau_lambda, cfg.d_lambda);
    const double dual_norm = (lambda_new - lambda).norm();
    lambda = lambda_new;

    refresh_aggregates(p, st);
    record_iteration(p, st, iter, d, lambda, std::sqrt(primal_norm_sq), dual_norm, hist);
    if (hit_stop_rule(p, hist)) {
      ++iter;
      break;
    }
  }

  SolveResult res;
  res.U = st.U;
  res.lambda = lambda;
  res.node_ev_w = st.node_w;
  res.aggregate_w = st.aggregate_w;
  res.history = std::move(hist);
  res.iters_run = iter;
  res.converged_by_rule = cfg.stop_on_converge && iter < cfg.max_iters;
  return res;
}

SolveResult run_spds_deterministic(const Problem& p) {
  const auto& cfg = p.scenario.solver;
  LoopState st = init_state(p);
  MatrixXd lambda = MatrixXd::Zero(p.n_nodes, p.horizon);
  std::vector<IterationRecord> hist;
  hist.reserve(cfg.max_iters);

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    const MatrixXd z = compute_z(p, st.node_w);
    // d(U) = (nu^2 - 1)V0 + H mu - D u, elementwise over nodes and slots
    const MatrixXd d = p.det_threshold_v2 - z;
    const VectorXd total = p.mean_total_w + st.aggregate_w;

    double primal_norm_sq = 0.0;
    for (int i = 0; i < p.n_ev; ++i) {
      const EvSpec& ev = p.scenario.fleet.evs[i];
      // linear constraint gradient: minus the private key applied to lambda
      VectorXd g = ev.pbar_w * total + p.rho * st.U.col(i);
      g -= lambda.transpose() * p.dcol_v2.col(i);
      const VectorXd u_new = primal_step(st.U.col(i), g, p.required(i), cfg.alpha, cfg.tau_u);
      primal_norm_sq += (u_new - st.U.col(i)).squaredNorm();
      st.U.col(i) = u_new;
      VectorXd delta(p.horizon);
      for (int t = 0; t < p.horizon; ++t)
        delta(t) = contribution_delta(ev.pbar_w, u_new(t), st.contrib_w[i](t));
      st.contrib_w[i] += delta;
    }

    MatrixXd lambda_new(p.n_nodes, p.horizon);
    for (int k = 0; k < p.horizon; ++k)
      lambda_new.col(k) = dual_step(lambda.col(k), d.col(k), cfg.beta, cfg.tau_lambda,
                                    cfg.d_lambda);
    const double dual_norm = (lambda_new - lambda).norm();
    lambda = lambda_new;

    refresh_aggregates(p, st);
    record_iteration(p, st, iter, d.colwise().maxCoeff().transpose(),
                     lambda.colwise().sum().transpose(), std::sqrt(primal_norm_sq), dual_norm,
                     hist);
    if (hit_stop_rule(p, hist)) {
      ++iter;
      break;
    }
  }

  SolveResult res;
  res.U = st.U;
  res.lambda_det = lambda;
  res.node_ev_w = st.node_w;
  res.aggregate_w = st.aggregate_w;
  res.history = std::move(hist);
  res.iters_run = iter;
  res.converged_by_rule = cfg.stop_on_converge && iter < cfg.max_iters;
  return res;
}

}  // namespace vf
