#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "vf/solver.hpp"

namespace vf {

// Downlink: one aggregator broadcast per iteration, identical for every EV.
// The gradient blocks are the dual-weighted adjusted MVNCDF gradients; each EV
// interprets them through its own private sensitivity column.
struct BroadcastMessage {
  int iter = 0;
  VectorXd mean_total_load_w;          // K: baseline mean + current EV aggregate
  MatrixXd weighted_adjusted_gradients;  // h x K, entrywise >= 0

  std::size_t element_count() const {
    return static_cast<std::size_t>(mean_total_load_w.size()) +
           static_cast<std::size_t>(weighted_adjusted_gradients.size());
  }
  std::size_t byte_size() const { return element_count() * sizeof(double) + 2 * sizeof(int); }
};

// Uplink: the change in this EV's aggregate charging-power contribution.
struct AgentReply {
  int ev = 0;
  VectorXd delta_aggregate_w;  // K

  std::size_t element_count() const {
    return static_cast<std::size_t>(delta_aggregate_w.size());
  }
  std::size_t byte_size() const { return element_count() * sizeof(double) + sizeof(int); }
};

// One EV charger. Holds nothing about other EVs: its inputs are the broadcast
// and its own spec, profile, and private key column.
class EvAgent {
 public:
  EvAgent(EvSpec spec, VectorXd dcol_v2, double required, double rho, double alpha, double tau_u,
          int horizon);

  AgentReply agent_round(const BroadcastMessage& msg);
  const VectorXd& profile() const { return u_; }

 private:
  EvSpec spec_;
  VectorXd dcol_v2_;
  double required_, rho_, alpha_, tau_u_;
  VectorXd u_;
  VectorXd contribution_w_;  // what the aggregator believes this EV adds
};

struct MessageStat {
  int iter = 0;
  char direction = 'b';  // 'b' broadcast, 'r' reply
  int count = 0;
  std::size_t elements_per_message = 0;
};

struct MessageLog {
  std::vector<MessageStat> stats;
  std::size_t total_messages() const;
  std::size_t total_elements() const;
};

// Aggregator side: tracks per-EV contributions, evaluates the network model
// and the chance constraints, owns the dual update.
class Aggregator {
 public:
  explicit Aggregator(const Problem& p);

  BroadcastMessage aggregator_round(int iter);  // also performs the dual update
  void absorb(const AgentReply& reply);
  void finish_round();

  const VectorXd& lambda() const { return lambda_; }
  const MatrixXd& node_ev_w() const { return node_w_; }
  VectorXd aggregate_w() const { return node_w_.colwise().sum().transpose(); }
  VectorXd last_d() const { return d_; }

 private:
  const Problem& p_;
  std::vector<VectorXd> contrib_w_;
  MatrixXd node_w_;
  VectorXd lambda_;
  VectorXd d_;
};

struct DecentralizedResult {
  SolveResult solve;
  MessageLog log;
};

// Full message-level run. Produces bit-identical iterates to run_ccspds for
// the same problem: both sides execute the same arithmetic in the same order.
DecentralizedResult run_decentralized(const Problem& p);

}  // namespace vf
