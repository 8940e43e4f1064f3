#include "vf/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vf/errors.hpp"

namespace vf {

using nlohmann::json;

void SolverConfig::validate() const {
  if (!(alpha > 0.0) || !(beta > 0.0)) throw DimensionError("step sizes must be positive");
  if (!(tau_u > 0.0 && tau_u < 1.0) || !(tau_lambda > 0.0 && tau_lambda < 1.0))
    throw DimensionError("shrinking parameters must be in (0, 1)");
  if (!(d_lambda > 0.0)) throw DimensionError("d_lambda must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DimensionError("delta must be in (0, 1)");
  if (max_iters < 0) throw DimensionError("max_iters must be nonnegative");
}

double WindowSpec::hour_of(int slot) const {
  double h = start_hour + slot * dt_minutes / 60.0;
  while (h >= 24.0) h -= 24.0;
  return h;
}

void Scenario::validate() const {
  feeder.validate();
  solver.validate();
  if (!(nu_lower > 0.0 && nu_lower < 1.0)) throw DimensionError("nu_lower must be in (0, 1)");
  if (sigma_p_w < 0.0) throw DimensionError("sigma_p must be nonnegative");
  if (window.slots < 1 || !(window.dt_minutes > 0.0))
    throw DimensionError("window must have at least one positive-length slot");
  if (mc_samples < 1) throw DimensionError("mc_samples must be >= 1");
  const int n = feeder.total_houses();
  if (baseline_mu_w.rows() != window.slots || baseline_mu_w.cols() != n)
    throw DimensionError("baseline means must be slots x houses");
  fleet.validate(feeder, window.dt_hours(), window.slots);
}

MatrixXd load_baseline_profile(const std::string& path, const FeederModel& feeder, int slots) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open baseline profile: " + path);

  const int h = feeder.node_count;
  const int n = feeder.total_houses();
  MatrixXd mu = MatrixXd::Constant(slots, n, -1.0);

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    if (key == "slot") {
      int t;
      double w;
      if (!(ss >> t >> w)) throw ParseError(path, lineno, "expected: slot <index> <watts>");
      if (t < 0 || t >= slots) throw ParseError(path, lineno, "slot index out of range");
      mu.row(t).setConstant(w);
    } else if (key == "slot_node") {
      int t, node;
      double w;
      if (!(ss >> t >> node >> w))
        throw ParseError(path, lineno, "expected: slot_node <slot> <node> <watts>");
      if (t < 0 || t >= slots) throw ParseError(path, lineno, "slot index out of range");
      if (node < 1 || node > h) throw ParseError(path, lineno, "node id out of range");
      int col = 0;
      for (int m = 0; m < node - 1; ++m) col += feeder.houses_per_node[m];
      for (int k = 0; k < feeder.houses_per_node[node - 1]; ++k) mu(t, col + k) = w;
    } else {
      throw ParseError(path, lineno, "unknown directive '" + key + "'");
    }
  }
  if ((mu.array() < 0.0).any())
    throw ParseError(path, 0, "baseline profile leaves some (slot, house) means unset");
  return mu;
}

namespace {

std::string resolve(const std::filesystem::path& base, const std::string& ref) {
  std::filesystem::path p(ref);
  if (p.is_absolute()) return p.string();
  return (base / p).string();
}

}  // namespace

Scenario load_scenario(const std::string& path, const ScenarioOverrides& ov) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ParseError(path, 0, std::string("invalid JSON: ") + e.what());
  }

  Scenario sc;
  const auto base = std::filesystem::path(path).parent_path();
  try {
    sc.name = doc.value("name", std::filesystem::path(path).stem().string());
    sc.seed = doc.value("seed", 1ULL);
    sc.nu_lower = doc.value("nu_lower", 0.954);
    sc.sigma_p_w = doc.value("sigma_p_watts", 400.0);
    sc.mc_samples = doc.value("mc_samples", 1000);

    if (doc.contains("window")) {
      const auto& w = doc["window"];
      sc.window.start_hour = w.value("start_hour", 19.0);
      sc.window.dt_minutes = w.value("dt_minutes", 15.0);
      sc.window.slots = w.value("slots", 52);
    }
    if (doc.contains("solver")) {
      const auto& s = doc["solver"];
      sc.solver.alpha = s.value("alpha", sc.solver.alpha);
      sc.solver.beta = s.value("beta", sc.solver.beta);
      sc.solver.tau_u = s.value("tau_u", sc.solver.tau_u);
      sc.solver.tau_lambda = s.value("tau_lambda", sc.solver.tau_lambda);
      sc.solver.d_lambda = s.value("d_lambda", sc.solver.d_lambda);
      sc.solver.rho = s.value("rho", sc.solver.rho);
      sc.solver.delta = s.value("delta", sc.solver.delta);
      sc.solver.max_iters = s.value("max_iters", sc.solver.max_iters);
      sc.solver.stop_on_converge = s.value("stop_on_converge", sc.solver.stop_on_converge);
      sc.solver.converge_tol = s.value("converge_tol", sc.solver.converge_tol);
      sc.solver.mvn_accuracy = s.value("mvn_accuracy", sc.solver.mvn_accuracy);
      sc.solver.mvn_gradient_accuracy =
          s.value("mvn_gradient_accuracy", sc.solver.mvn_gradient_accuracy);
      sc.solver.mvn_shifts = s.value("mvn_shifts", sc.solver.mvn_shifts);
    }

    sc.feeder = load_feeder(resolve(base, doc.at("feeder").get<std::string>()));
    sc.fleet = load_fleet(resolve(base, doc.at("fleet").get<std::string>()), sc.feeder, sc.seed);
    sc.baseline_mu_w = load_baseline_profile(resolve(base, doc.at("baseline").get<std::string>()),
                                             sc.feeder, sc.window.slots);
  } catch (const json::exception& e) {
    throw ParseError(path, 0, std::string("scenario field: ") + e.what());
  }

  if (ov.iters) sc.solver.max_iters = *ov.iters;
  if (ov.seed) sc.seed = *ov.seed;
  if (ov.mc_samples) sc.mc_samples = *ov.mc_samples;
  if (ov.sigma_p_w) sc.sigma_p_w = *ov.sigma_p_w;
  if (ov.nu_lower) sc.nu_lower = *ov.nu_lower;
  if (ov.alpha) sc.solver.alpha = *ov.alpha;
  if (ov.beta) sc.solver.beta = *ov.beta;
  if (ov.delta) sc.solver.delta = *ov.delta;

  sc.validate();
  return sc;
}

Problem build_problem(const Scenario& scenario) {
  scenario.validate();
  Problem p;
  p.scenario = scenario;
  p.horizon = scenario.window.slots;
  p.n_ev = scenario.fleet.size();
  p.n_nodes = scenario.feeder.node_count;

  const double s_base = scenario.feeder.s_base_va;
  const VectorXd pbar_pu = scenario.fleet.pbar_w() / s_base;
  p.net = build_network_matrices(scenario.feeder, pbar_pu);

  p.baseline.horizon = p.horizon;
  p.baseline.mu_pu = scenario.baseline_mu_w / s_base;
  p.baseline.sigma_pu = scenario.sigma_p_w / s_base;

  p.volts2_per_pu2 = scenario.feeder.v_base_v * scenario.feeder.v_base_v;
  p.mean_total_w = scenario.baseline_mu_w.rowwise().sum();
  p.dcol_v2 = p.net.D * p.volts2_per_pu2;
  p.z_from_node_watts = -2.0 * p.net.R * (p.volts2_per_pu2 / s_base);

  const auto yhat_pu = yhat_distribution(p.net, scenario.feeder, p.baseline, scenario.nu_lower);
  const MatrixXd cov_v2 =
      yhat_pu.front().cov() * (p.volts2_per_pu2 * p.volts2_per_pu2);
  auto factor = CovarianceFactor::make(cov_v2);
  p.yhat_v2.reserve(p.horizon);
  for (const auto& g : yhat_pu)
    p.yhat_v2.emplace_back(g.mean() * p.volts2_per_pu2, factor);
  if (p.n_nodes > 1) p.yhat_conditionals = std::make_shared<ConditionalTable>(factor);

  p.det_threshold_v2.resize(p.n_nodes, p.horizon);
  const double head = (scenario.nu_lower * scenario.nu_lower - 1.0) * scenario.feeder.v0_sq;
  for (int k = 0; k < p.horizon; ++k)
    p.det_threshold_v2.col(k) =
        (VectorXd::Constant(p.n_nodes, head) +
         p.net.H * p.baseline.mu_pu.row(k).transpose()) *
        p.volts2_per_pu2;

  p.required.resize(p.n_ev);
  for (int i = 0; i < p.n_ev; ++i)
    p.required(i) = required_sum(scenario.fleet.evs[i], p.dt_hours(), p.horizon);

  const double pbar_mean = p.n_ev > 0 ? scenario.fleet.pbar_w().mean() : 0.0;
  p.rho = scenario.solver.rho >= 0.0 ? scenario.solver.rho : 1e-3 * pbar_mean * pbar_mean;
  return p;
}

}  // namespace vf
