#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "vf/network.hpp"

namespace vf {

// One EV, bound to one house slot at one node.
struct EvSpec {
  int node = 0;  // downstream node, 0-based
  int slot = 0;  // house index within the node, 0-based
  double eta = 0.9;
  double pbar_w = 6600.0;
  double capacity_kwh = 20.0;
  double soc0 = 0.3;
  double soc_target = 0.9;

  double energy_needed_kwh() const { return (soc_target - soc0) * capacity_kwh; }
  // B = -eta * dt * pbar, the energy removed from the remaining-need state by
  // one full-power step, in kWh.
  double b_kwh(double dt_hours) const { return -eta * dt_hours * pbar_w / 1e3; }

  void validate(double dt_hours, int horizon, const std::string& label) const;
};

// x' = x + B u for one step; x is energy remaining to be charged (kWh).
double dynamics_step(double x_kwh, double u, const EvSpec& ev, double dt_hours);

// Total control mass needed to finish charging: sum_t u_t must equal this.
double required_sum(const EvSpec& ev, double dt_hours, int horizon);

// Euclidean projection onto { u : 0 <= u <= ub, sum u = target }, by bisection
// on the uniform shift theta in clip(v + theta, 0, ub). The sum residual of
// the result is below 1e-10.
VectorXd project_onto_box_sum(const VectorXd& v, double ub, double target);

// Projection onto the charging-profile set (unit box + required sum).
VectorXd project_onto_U(const VectorXd& v, double required);

// Lazy hK x K block-diagonal operator: every diagonal block is one column of
// the network sensitivity matrix D. Stored as that single column.
class PrivateKey {
 public:
  PrivateKey(VectorXd d_column, int horizon) : col_(std::move(d_column)), horizon_(horizon) {}

  const VectorXd& column() const { return col_; }
  int horizon() const { return horizon_; }

  // (D u): block k of the result is column * u(k).
  MatrixXd apply(const VectorXd& u) const;  // h x K
  // (D^T y): entry k is column . y(:,k).
  VectorXd apply_transpose(const MatrixXd& y_blocks) const;  // K

 private:
  VectorXd col_;
  int horizon_ = 0;
};

PrivateKey build_private_key(int ev_index, const NetworkMatrices& nm, int horizon);

struct FleetModel {
  std::vector<EvSpec> evs;  // ordered by node, then slot

  int size() const { return static_cast<int>(evs.size()); }
  // Throws InfeasibilityError naming every EV whose target cannot be met;
  // checks the per-node counts against the feeder house counts.
  void validate(const FeederModel& feeder, double dt_hours, int horizon) const;
  VectorXd pbar_w() const;
};

FleetModel load_fleet(const std::string& path, const FeederModel& feeder,
                      std::uint64_t default_seed);

}  // namespace vf
