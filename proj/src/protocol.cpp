#include "vf/protocol.hpp"

#include <cmath>

#include "vf/errors.hpp"

namespace vf {

EvAgent::EvAgent(EvSpec spec, VectorXd dcol_v2, double required, double rho, double alpha,
                 double tau_u, int horizon)
    : spec_(spec),
      dcol_v2_(std::move(dcol_v2)),
      required_(required),
      rho_(rho),
      alpha_(alpha),
      tau_u_(tau_u),
      u_(VectorXd::Zero(horizon)),
      contribution_w_(VectorXd::Zero(horizon)) {}

AgentReply EvAgent::agent_round(const BroadcastMessage& msg) {
  const VectorXd g = agent_gradient(spec_, u_, rho_, msg.mean_total_load_w,
                                    msg.weighted_adjusted_gradients, dcol_v2_);
  u_ = primal_step(u_, g, required_, alpha_, tau_u_);

  AgentReply reply;
  reply.delta_aggregate_w.resize(u_.size());
  for (int t = 0; t < u_.size(); ++t)
    reply.delta_aggregate_w(t) = contribution_delta(spec_.pbar_w, u_(t), contribution_w_(t));
  contribution_w_ += reply.delta_aggregate_w;
  return reply;
}

std::size_t MessageLog::total_messages() const {
  std::size_t n = 0;
  for (const auto& s : stats) n += s.count;
  return n;
}

std::size_t MessageLog::total_elements() const {
  std::size_t n = 0;
  for (const auto& s : stats) n += s.count * s.elements_per_message;
  return n;
}

Aggregator::Aggregator(const Problem& p)
    : p_(p),
      contrib_w_(p.n_ev, VectorXd::Zero(p.horizon)),
      node_w_(MatrixXd::Zero(p.n_nodes, p.horizon)),
      lambda_(VectorXd::Zero(p.horizon)),
      d_(VectorXd::Zero(p.horizon)) {}

BroadcastMessage Aggregator::aggregator_round(int iter) {
  const MatrixXd z = compute_z(p_, node_w_);
  d_ = chance_constraint_value(p_, z, iter);

  BroadcastMessage msg;
  msg.iter = iter;
  msg.mean_total_load_w = p_.mean_total_w + aggregate_w();
  msg.weighted_adjusted_gradients = weighted_adjusted_gradients(p_, z, lambda_, iter);

  const auto& cfg = p_.scenario.solver;
  lambda_ = dual_step(lambda_, d_, cfg.beta, cfg.tau_lambda, cfg.d_lambda);
  return msg;
}

void Aggregator::absorb(const AgentReply& reply) {
  if (reply.ev < 0 || reply.ev >= p_.n_ev) throw DimensionError("reply from unknown EV");
  contrib_w_[reply.ev] += reply.delta_aggregate_w;
}

void Aggregator::finish_round() { node_w_ = node_aggregate(p_, contrib_w_); }

DecentralizedResult run_decentralized(const Problem& p) {
  const auto& cfg = p.scenario.solver;
  Aggregator agg(p);
  std::vector<EvAgent> agents;
  agents.reserve(p.n_ev);
  for (int i = 0; i < p.n_ev; ++i)
    agents.emplace_back(p.scenario.fleet.evs[i], p.dcol_v2.col(i), p.required(i), p.rho,
                        cfg.alpha, cfg.tau_u, p.horizon);

  DecentralizedResult out;
  std::vector<IterationRecord> hist;
  hist.reserve(cfg.max_iters);

  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    const VectorXd lambda_before = agg.lambda();
    const BroadcastMessage msg = agg.aggregator_round(iter);
    out.log.stats.push_back({iter, 'b', 1, msg.element_count()});

    double primal_norm_sq = 0.0;
    std::size_t reply_elems = 0;
    for (int i = 0; i < p.n_ev; ++i) {
      const VectorXd before = agents[i].profile();
      AgentReply reply = agents[i].agent_round(msg);
      reply.ev = i;
      primal_norm_sq += (agents[i].profile() - before).squaredNorm();
      reply_elems = reply.element_count();
      agg.absorb(reply);
    }
    out.log.stats.push_back({iter, 'r', p.n_ev, reply_elems});
    agg.finish_round();

    IterationRecord rec;
    rec.iter = iter;
    rec.aggregate_w = agg.aggregate_w();
    const VectorXd total = p.mean_total_w + rec.aggregate_w;
    rec.objective_quadratic = 0.5 * total.squaredNorm();
    double u_sq = 0.0;
    for (const auto& a : agents) u_sq += a.profile().squaredNorm();
    rec.objective_with_rho = rec.objective_quadratic + 0.5 * p.rho * u_sq;
    rec.d = agg.last_d();
    rec.max_d = rec.d.maxCoeff();
    rec.lambda = agg.lambda();
    rec.primal_step_norm = std::sqrt(primal_norm_sq);
    rec.dual_step_norm = (agg.lambda() - lambda_before).norm();
    hist.push_back(std::move(rec));
  }

  SolveResult& res = out.solve;
  res.U.resize(p.horizon, p.n_ev);
  for (int i = 0; i < p.n_ev; ++i) res.U.col(i) = agents[i].profile();
  res.lambda = agg.lambda();
  res.node_ev_w = agg.node_ev_w();
  res.aggregate_w = agg.aggregate_w();
  res.history = std::move(hist);
  res.iters_run = iter;
  return out;
}

}  // namespace vf
