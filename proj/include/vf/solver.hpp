#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "vf/scenario.hpp"

namespace vf {

struct IterationRecord {
  int iter = 0;
  double objective_quadratic = 0.0;  // 0.5 * || mean total load ||^2, watts^2
  double objective_with_rho = 0.0;
  double max_d = 0.0;                // most violated constraint value
  double primal_step_norm = 0.0;
  double dual_step_norm = 0.0;
  VectorXd aggregate_w;  // K, total EV charging power
  VectorXd d;            // K (chance) or per-slot max (deterministic)
  VectorXd lambda;       // K (chance) or per-slot sum (deterministic)
};

struct SolveResult {
  MatrixXd U;              // K x n, one column per EV
  VectorXd lambda;         // K duals (chance-constrained runs)
  MatrixXd lambda_det;     // h x K duals (deterministic runs)
  MatrixXd node_ev_w;      // h x K, nodal EV charging power at the end
  VectorXd aggregate_w;    // K
  std::vector<IterationRecord> history;
  int iters_run = 0;
  bool converged_by_rule = false;
};

// --- building blocks shared by the centralized loop and the message protocol ---

// Per-EV contribution bookkeeping: replies/updates carry deltas, and both the
// agent and the aggregator advance their copies with the same addition, so the
// two sides stay bit-identical.
inline double contribution_delta(double pbar_w, double u_new, double c_old) {
  return pbar_w * u_new - c_old;
}

// Nodal EV charging power from per-EV contributions, summed in EV order.
MatrixXd node_aggregate(const Problem& p, const std::vector<VectorXd>& contributions_w);

// z_k = D u(k), assembled from nodal EV watts; h x K in volts^2.
MatrixXd compute_z(const Problem& p, const MatrixXd& node_ev_w);

// Chance-constraint values d_k = delta - F(z_k) for all slots (parallel over
// slots, seeded per slot and iteration).
VectorXd chance_constraint_value(const Problem& p, const MatrixXd& z_v2, int iter);

// Dual-weighted adjusted gradients, one h-column per slot: lambda_k *
// adjusted_mvncdf_gradient(z_k). Zero columns where lambda_k == 0.
MatrixXd weighted_adjusted_gradients(const Problem& p, const MatrixXd& z_v2,
                                     const VectorXd& lambda, int iter);

// One EV's Lagrangian gradient given the broadcast content.
VectorXd agent_gradient(const EvSpec& ev, const VectorXd& u, double rho,
                        const VectorXd& mean_total_w, const MatrixXd& weighted_grads,
                        const VectorXd& dcol_v2);

// Shrunken double projection: project tau*u - alpha*g onto the tau-scaled
// feasible set, rescale, and project onto the feasible set.
VectorXd primal_step(const VectorXd& u, const VectorXd& grad, double required, double alpha,
                     double tau_u);

// Elementwise shrunken dual update on the box [0, d_lambda]; works for the
// K chance duals and the h*K deterministic duals alike.
VectorXd dual_step(const VectorXd& lambda, const VectorXd& d, double beta, double tau_lambda,
                   double d_lambda);

// Objective gradient blocks for all EVs at once (K x n): column i is
// pbar_i * (mean_total + aggregate) + rho * u_i.
MatrixXd objective_mean_gradient(const Problem& p, const MatrixXd& U, const VectorXd& aggregate_w);

// --- full runs ---

SolveResult run_ccspds(const Problem& p);
SolveResult run_spds_deterministic(const Problem& p);

}  // namespace vf
