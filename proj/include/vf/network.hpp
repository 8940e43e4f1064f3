#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "vf/gaussian.hpp"

namespace vf {

// One line segment of the radial feeder, in ohms as read from the feeder file.
struct LineSegment {
  int parent = 0;  // 0 = feeder head, 1..h = downstream nodes
  int child = 0;
  double r_ohm = 0.0;
  double x_ohm = 0.0;
};

// Radial feeder rooted at the head node. Downstream nodes are 1..h in the
// file and 0..h-1 internally; the head holds its voltage fixed.
struct FeederModel {
  int node_count = 0;  // h, downstream nodes only
  std::vector<LineSegment> lines;
  double v0_sq = 1.0;       // squared head voltage magnitude, per-unit^2
  double gamma = 0.0;       // constant reactive/real baseline power ratio
  double s_base_va = 5e6;   // power base
  double v_base_v = 4160.0; // voltage base
  std::vector<int> houses_per_node;  // n_i, one entry per downstream node

  int total_houses() const;
  double z_base_ohm() const { return v_base_v * v_base_v / s_base_va; }

  // parent index of downstream node i (0-based), -1 when attached to the head
  std::vector<int> parent_index() const;

  // Throws StructuralError/DimensionError if the line list is not a tree
  // covering all downstream nodes or the header fields are out of range.
  void validate() const;
};

struct NetworkMatrices {
  MatrixXd R;  // h x h, per-unit, common-path resistance sums
  MatrixXd X;  // h x h, per-unit
  MatrixXd G;  // h x n, block rows of ones (nodal aggregation)
  MatrixXd H;  // h x n, 2(R + gamma*X)G
  MatrixXd D;  // h x n, -2 R G diag(pbar_pu), per-unit^2 per unit control
};

// pbar_pu: per-EV maximum charging power, per-unit, one entry per house.
NetworkMatrices build_network_matrices(const FeederModel& feeder, const VectorXd& pbar_pu);

// LinDistFlow: squared voltages V0 - 2Rp - 2Xq (all per-unit).
VectorXd lindistflow_voltages(const NetworkMatrices& nm, const FeederModel& feeder,
                              const VectorXd& p_pu, const VectorXd& q_pu);

// Per-house mean baseline loads over the horizon, per-unit; the standard
// deviation is one constant across houses and slots.
struct BaselineLoadModel {
  int horizon = 0;    // K
  MatrixXd mu_pu;     // K x n
  double sigma_pu = 0.0;

  void validate(int n) const;
};

// Distribution of the per-slot constraint threshold: mean
// (nu^2 - 1)V0 + H mu(k) and covariance H diag(sigma^2) H^T shared across
// slots. All per-unit^2.
std::vector<GaussianVector> yhat_distribution(const NetworkMatrices& nm,
                                              const FeederModel& feeder,
                                              const BaselineLoadModel& loads,
                                              double nu_lower);

FeederModel load_feeder(const std::string& path);

}  // namespace vf
