#include "vf/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vf/errors.hpp"
#include "vf/rng.hpp"

namespace vf {

void EvSpec::validate(double dt_hours, int horizon, const std::string& label) const {
  if (!(eta > 0.0) || eta > 1.0)
    throw InfeasibilityError(label + ": eta must be in (0, 1]");
  if (!(pbar_w > 0.0)) throw InfeasibilityError(label + ": pbar must be positive");
  if (!(capacity_kwh > 0.0)) throw InfeasibilityError(label + ": capacity must be positive");
  if (soc0 < 0.0 || soc0 > 1.0 || soc_target < 0.0 || soc_target > 1.0)
    throw InfeasibilityError(label + ": SOC values must be in [0, 1]");
  if (soc_target < soc0)
    throw InfeasibilityError(label + ": target SOC below initial SOC");
  const double s = energy_needed_kwh() / (-b_kwh(dt_hours));
  if (s > horizon * (1.0 + 1e-12))
    throw InfeasibilityError(label + ": needs " + std::to_string(s) +
                             " full-power slots but the horizon has only " +
                             std::to_string(horizon));
}

double dynamics_step(double x_kwh, double u, const EvSpec& ev, double dt_hours) {
  if (u < 0.0 || u > 1.0) throw DimensionError("control signal outside [0, 1]");
  return x_kwh + ev.b_kwh(dt_hours) * u;
}

double required_sum(const EvSpec& ev, double dt_hours, int horizon) {
  double s = ev.energy_needed_kwh() / (-ev.b_kwh(dt_hours));
  if (s < 0.0 || s > horizon * (1.0 + 1e-12))
    throw InfeasibilityError("required charging mass " + std::to_string(s) +
                             " outside [0, " + std::to_string(horizon) + "]");
  return std::min(s, static_cast<double>(horizon));
}

VectorXd project_onto_box_sum(const VectorXd& v, double ub, double target) {
  const int K = static_cast<int>(v.size());
  if (!(ub > 0.0)) throw InfeasibilityError("projection: box upper bound must be positive");
  if (target < -1e-12 || target > ub * K + 1e-12)
    throw InfeasibilityError("projection: sum target outside [0, K*ub]");
  if (target <= 0.0) return VectorXd::Zero(K);
  if (target >= ub * K) return VectorXd::Constant(K, ub);

  auto sum_at = [&](double theta) {
    double s = 0.0;
    for (int i = 0; i < K; ++i) s += std::clamp(v(i) + theta, 0.0, ub);
    return s;
  };
  double lo = -v.maxCoeff();            // sum 0
  double hi = ub - v.minCoeff();        // sum K*ub
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s = sum_at(mid);
    if (std::abs(s - target) <= 1e-11) {
      lo = hi = mid;
      break;
    }
    (s < target ? lo : hi) = mid;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(lo))) break;
  }
  const double theta = 0.5 * (lo + hi);
  VectorXd u(K);
  for (int i = 0; i < K; ++i) u(i) = std::clamp(v(i) + theta, 0.0, ub);
  return u;
}

VectorXd project_onto_U(const VectorXd& v, double required) {
  return project_onto_box_sum(v, 1.0, required);
}

MatrixXd PrivateKey::apply(const VectorXd& u) const {
  if (u.size() != horizon_) throw DimensionError("private key: control length mismatch");
  return col_ * u.transpose();  // h x K
}

VectorXd PrivateKey::apply_transpose(const MatrixXd& y_blocks) const {
  if (y_blocks.rows() != col_.size() || y_blocks.cols() != horizon_)
    throw DimensionError("private key: block stack shape mismatch");
  return y_blocks.transpose() * col_;
}

PrivateKey build_private_key(int ev_index, const NetworkMatrices& nm, int horizon) {
  if (ev_index < 0 || ev_index >= nm.D.cols())
    throw DimensionError("private key: EV index out of range");
  if (horizon < 1) throw DimensionError("private key: horizon must be >= 1");
  return {nm.D.col(ev_index), horizon};
}

void FleetModel::validate(const FeederModel& feeder, double dt_hours, int horizon) const {
  std::vector<int> per_node(feeder.node_count, 0);
  std::string failures;
  for (int i = 0; i < size(); ++i) {
    const EvSpec& ev = evs[i];
    if (ev.node < 0 || ev.node >= feeder.node_count)
      throw DimensionError("EV " + std::to_string(i) + " assigned to unknown node");
    ++per_node[ev.node];
    try {
      ev.validate(dt_hours, horizon, "EV " + std::to_string(i) + " (node " +
                                         std::to_string(ev.node + 1) + ")");
    } catch (const InfeasibilityError& e) {
      failures += failures.empty() ? e.what() : std::string("; ") + e.what();
    }
  }
  if (!failures.empty()) throw InfeasibilityError(failures);
  for (int m = 0; m < feeder.node_count; ++m)
    if (per_node[m] != feeder.houses_per_node[m])
      throw DimensionError("node " + std::to_string(m + 1) + " declares " +
                           std::to_string(feeder.houses_per_node[m]) + " houses but the fleet has " +
                           std::to_string(per_node[m]) + " EVs there");
}

VectorXd FleetModel::pbar_w() const {
  VectorXd p(size());
  for (int i = 0; i < size(); ++i) p(i) = evs[i].pbar_w;
  return p;
}

// ---------------------------------------------------------------------------
// Fleet file: either explicit records
//   ev <node> <eta> <pbar_kw> <capacity_kwh> <soc0> <soc_target>
// or seeded generator blocks
//   generate <node> <count> <eta> <pbar_kw> <cap_lo> <cap_hi>
//            <soc0_lo> <soc0_hi> <tgt_lo> <tgt_hi> [seed]
// ---------------------------------------------------------------------------

FleetModel load_fleet(const std::string& path, const FeederModel& feeder,
                      std::uint64_t default_seed) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open fleet file: " + path);

  FleetModel fleet;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;

    auto need = [&](auto& v, const char* what) {
      if (!(ss >> v)) throw ParseError(path, lineno, std::string("expected ") + what);
    };
    if (key == "ev") {
      EvSpec ev;
      int node;
      double pbar_kw;
      need(node, "node id");
      need(ev.eta, "eta");
      need(pbar_kw, "pbar_kw");
      need(ev.capacity_kwh, "capacity_kwh");
      need(ev.soc0, "soc0");
      need(ev.soc_target, "soc_target");
      ev.node = node - 1;
      ev.pbar_w = pbar_kw * 1e3;
      fleet.evs.push_back(ev);
    } else if (key == "generate") {
      int node, count;
      double eta, pbar_kw, cap_lo, cap_hi, s0_lo, s0_hi, t_lo, t_hi;
      need(node, "node id");
      need(count, "count");
      need(eta, "eta");
      need(pbar_kw, "pbar_kw");
      need(cap_lo, "cap_lo");
      need(cap_hi, "cap_hi");
      need(s0_lo, "soc0_lo");
      need(s0_hi, "soc0_hi");
      need(t_lo, "tgt_lo");
      need(t_hi, "tgt_hi");
      std::uint64_t seed = default_seed;
      ss >> seed;  // optional trailing seed
      Rng rng(derive_seed(seed, {0x666c656574ULL, static_cast<std::uint64_t>(node)}));
      for (int k = 0; k < count; ++k) {
        EvSpec ev;
        ev.node = node - 1;
        ev.eta = eta;
        ev.pbar_w = pbar_kw * 1e3;
        ev.capacity_kwh = rng.uniform(cap_lo, cap_hi);
        ev.soc0 = rng.uniform(s0_lo, s0_hi);
        ev.soc_target = rng.uniform(t_lo, t_hi);
        fleet.evs.push_back(ev);
      }
    } else {
      throw ParseError(path, lineno, "unknown directive '" + key + "'");
    }
  }

  // stable order: by node, then input order; slot indices follow
  std::stable_sort(fleet.evs.begin(), fleet.evs.end(),
                   [](const EvSpec& a, const EvSpec& b) { return a.node < b.node; });
  std::vector<int> slot_counter(feeder.node_count, 0);
  for (auto& ev : fleet.evs) {
    if (ev.node < 0 || ev.node >= feeder.node_count)
      throw ParseError(path, 0, "EV references node outside the feeder");
    ev.slot = slot_counter[ev.node]++;
  }
  return fleet;
}

}  // namespace vf
