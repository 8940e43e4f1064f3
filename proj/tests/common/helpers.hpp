#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "vf/rng.hpp"
#include "vf/scenario.hpp"

namespace vf::testing {

// Random PSD covariance with eigenvalues in [lo, hi].
inline MatrixXd random_psd(Rng& rng, int dim, double lo = 0.2, double hi = 2.0) {
  MatrixXd A(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) A(i, j) = rng.normal();
  Eigen::HouseholderQR<MatrixXd> qr(A);
  MatrixXd Q = qr.householderQ();
  VectorXd lam(dim);
  for (int i = 0; i < dim; ++i) lam(i) = rng.uniform(lo, hi);
  MatrixXd cov = Q * lam.asDiagonal() * Q.transpose();
  return 0.5 * (cov + cov.transpose());
}

inline VectorXd random_vector(Rng& rng, int dim, double lo, double hi) {
  VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v(i) = rng.uniform(lo, hi);
  return v;
}

// Random radial feeder; impedances are exact multiples of 1/1024 so path sums
// are exact in double precision. Unit bases (z_base = 1).
inline FeederModel random_feeder(Rng& rng, int max_nodes = 8, int max_houses = 3) {
  FeederModel f;
  f.node_count = rng.uniform_int(1, max_nodes);
  f.v0_sq = 1.0;
  f.gamma = rng.uniform(0.0, 0.8);
  f.s_base_va = 1e6;
  f.v_base_v = 1000.0;
  for (int i = 1; i <= f.node_count; ++i) {
    LineSegment seg;
    seg.parent = i == 1 ? 0 : rng.uniform_int(1, i - 1);
    seg.child = i;
    seg.r_ohm = rng.uniform_int(1, 512) / 1024.0;
    seg.x_ohm = rng.uniform_int(1, 512) / 1024.0;
    f.lines.push_back(seg);
  }
  f.houses_per_node.resize(f.node_count);
  for (int i = 0; i < f.node_count; ++i) f.houses_per_node[i] = rng.uniform_int(0, max_houses);
  if (f.total_houses() == 0) f.houses_per_node[0] = 1;
  return f;
}

// Small random scenario with one EV per house; parameters sized so that both
// the objective and the constraints are active at toy scale.
inline Scenario random_toy_scenario(std::uint64_t seed, int max_nodes = 4, int max_houses = 2,
                                    int max_slots = 8) {
  Rng rng(seed);
  Scenario sc;
  sc.name = "toy";
  sc.seed = seed;
  sc.feeder = random_feeder(rng, max_nodes, max_houses);
  sc.window.start_hour = 19.0;
  sc.window.dt_minutes = 60.0;
  sc.window.slots = rng.uniform_int(2, max_slots);

  const int n = sc.feeder.total_houses();
  sc.baseline_mu_w.resize(sc.window.slots, n);
  for (int k = 0; k < sc.window.slots; ++k)
    sc.baseline_mu_w.row(k).setConstant(rng.uniform(400.0, 1500.0));
  sc.sigma_p_w = rng.uniform(100.0, 400.0);
  sc.nu_lower = rng.uniform(0.93, 0.97);
  sc.mc_samples = 10;

  for (int m = 0; m < sc.feeder.node_count; ++m) {
    for (int c = 0; c < sc.feeder.houses_per_node[m]; ++c) {
      EvSpec ev;
      ev.node = m;
      ev.slot = c;
      ev.eta = rng.uniform(0.85, 0.95);
      ev.pbar_w = rng.uniform(3300.0, 7200.0);
      ev.capacity_kwh = rng.uniform(18.0, 20.0);
      ev.soc0 = rng.uniform(0.3, 0.5);
      // keep the requirement feasible for the random horizon
      const double dt_h = sc.window.dt_hours();
      const double max_gain = ev.eta * dt_h * ev.pbar_w / 1e3 * sc.window.slots / ev.capacity_kwh;
      ev.soc_target = std::min(0.9, ev.soc0 + 0.8 * max_gain * rng.uniform(0.2, 1.0));
      sc.fleet.evs.push_back(ev);
    }
  }
  sc.solver.alpha = 3e-9;
  sc.solver.beta = 2e3;
  sc.solver.max_iters = 12;
  sc.solver.mvn_accuracy = 1e-4;
  sc.solver.mvn_gradient_accuracy = 1e-3;
  return sc;
}

}  // namespace vf::testing
