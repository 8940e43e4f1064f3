#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vf/protocol.hpp"
#include "vf/scenario.hpp"
#include "vf/solver.hpp"

namespace vf {

// Sampled-voltage statistics for one converged charging plan.
struct ViolationStats {
  int samples = 0;
  // histogram over slot-observations: index = number of violating nodes
  std::vector<long> histogram;
  // per slot: fraction of samples in which at least one node violates
  VectorXd joint_violation_prob;  // K
  // per (node, slot): count of violating samples
  Eigen::MatrixXi node_slot_violations;  // h x K
  long total_node_slot_violations = 0;   // summed over nodes, slots, samples
  // per (slot, node) voltage magnitude stats over samples (pu)
  MatrixXd v_min, v_p25, v_p50, v_p75, v_max;  // K x h

  long slot_observations() const { return static_cast<long>(samples) * joint_violation_prob.size(); }
};

// Draws per-house baseline realizations, runs the linearized power flow per
// slot, and counts nodes below the voltage bound. Seeded per sample.
ViolationStats monte_carlo_violations(const Problem& p, const MatrixXd& node_ev_w, int samples,
                                      std::uint64_t seed);

struct RunReport {
  Scenario scenario_meta;  // copy of configuration for the manifest
  std::string mode;        // "ccspds", "spds", or "both"
  std::optional<SolveResult> cc;
  std::optional<SolveResult> spds;
  std::optional<ViolationStats> cc_stats;
  std::optional<ViolationStats> spds_stats;
  MessageLog messages;
  double wall_seconds = 0.0;  // reported on stdout only, never in files
};

// Writes total_load.csv, voltages.csv, violations_hist.csv, iterations.csv,
// messages.csv and manifest.json into out_dir. Deterministic byte-for-byte
// for a fixed report.
void emit_report(const RunReport& report, const std::string& out_dir);

}  // namespace vf
