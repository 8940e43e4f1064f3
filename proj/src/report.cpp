#include "vf/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vf/errors.hpp"
#include "vf/rng.hpp"

namespace vf {

namespace {

// type-7 linear interpolation on a sorted copy
double percentile(std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * (n - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - lo;
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

ViolationStats monte_carlo_violations(const Problem& p, const MatrixXd& node_ev_w, int samples,
                                      std::uint64_t seed) {
  if (node_ev_w.rows() != p.n_nodes || node_ev_w.cols() != p.horizon)
    throw DimensionError("monte_carlo_violations: nodal EV load shape mismatch");
  const int h = p.n_nodes;
  const int K = p.horizon;
  const double s_base = p.scenario.feeder.s_base_va;
  const double vmin = p.scenario.nu_lower * std::sqrt(p.scenario.feeder.v0_sq);
  const double gamma = p.scenario.feeder.gamma;

  ViolationStats st;
  st.samples = samples;
  st.histogram.assign(h + 1, 0);
  st.joint_violation_prob = VectorXd::Zero(K);
  st.node_slot_violations = Eigen::MatrixXi::Zero(h, K);
  st.v_min = MatrixXd::Constant(K, h, 1e300);
  st.v_max = MatrixXd::Constant(K, h, -1e300);
  st.v_p25.resize(K, h);
  st.v_p50.resize(K, h);
  st.v_p75.resize(K, h);

  // voltages stored per (slot, node) across samples for the box statistics
  std::vector<std::vector<std::vector<double>>> volt(
      K, std::vector<std::vector<double>>(h, std::vector<double>(samples)));

  const MatrixXd node_ev_pu = node_ev_w / s_base;
  for (int s = 0; s < samples; ++s) {
    Rng rng(derive_seed(seed, {0x6d63ULL, static_cast<std::uint64_t>(s)}));
    for (int k = 0; k < K; ++k) {
      // per-house baseline draw, aggregated per node on the fly
      VectorXd p_node = VectorXd::Zero(h);
      int house = 0;
      for (int m = 0; m < h; ++m) {
        double acc = 0.0;
        for (int c = 0; c < p.scenario.feeder.houses_per_node[m]; ++c, ++house) {
          const double w = p.baseline.mu_pu(k, house) + p.baseline.sigma_pu * rng.normal();
          acc += w;
        }
        p_node(m) = acc;
      }
      const VectorXd q_node = gamma * p_node;  // EVs draw no reactive power
      const VectorXd v_sq = lindistflow_voltages(
          p.net, p.scenario.feeder, p_node + node_ev_pu.col(k), q_node);
      int violating = 0;
      for (int m = 0; m < h; ++m) {
        const double v = std::sqrt(std::max(0.0, v_sq(m)));
        volt[k][m][s] = v;
        if (v < vmin) {
          ++violating;
          st.node_slot_violations(m, k) += 1;
        }
      }
      st.histogram[violating] += 1;
      if (violating > 0) st.joint_violation_prob(k) += 1.0;
      st.total_node_slot_violations += violating;
    }
  }
  st.joint_violation_prob /= samples;

  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < h; ++m) {
      auto& v = volt[k][m];
      std::sort(v.begin(), v.end());
      st.v_min(k, m) = v.front();
      st.v_max(k, m) = v.back();
      st.v_p25(k, m) = percentile(v, 0.25);
      st.v_p50(k, m) = percentile(v, 0.50);
      st.v_p75(k, m) = percentile(v, 0.75);
    }
  }
  return st;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);  // fixed newlines on every platform
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

void write_total_load(const RunReport& r, const std::filesystem::path& dir) {
  auto out = open_out(dir / "total_load.csv");
  out << "slot,hour,baseline_mean_w,ccspds_total_w,spds_total_w\n";
  const int K = r.scenario_meta.window.slots;
  const VectorXd base = r.scenario_meta.baseline_mu_w.rowwise().sum();
  for (int k = 0; k < K; ++k) {
    out << k << ',' << fmt(r.scenario_meta.window.hour_of(k)) << ',' << fmt(base(k));
    out << ',' << (r.cc ? fmt(base(k) + r.cc->aggregate_w(k)) : "");
    out << ',' << (r.spds ? fmt(base(k) + r.spds->aggregate_w(k)) : "");
    out << '\n';
  }
}

void write_voltages(const RunReport& r, const std::filesystem::path& dir) {
  auto out = open_out(dir / "voltages.csv");
  out << "algorithm,slot,node,v_min,v_p25,v_p50,v_p75,v_max\n";
  auto dump = [&](const char* name, const ViolationStats& st) {
    for (int k = 0; k < st.v_min.rows(); ++k)
      for (int m = 0; m < st.v_min.cols(); ++m)
        out << name << ',' << k << ',' << m + 1 << ',' << fmt(st.v_min(k, m)) << ','
            << fmt(st.v_p25(k, m)) << ',' << fmt(st.v_p50(k, m)) << ',' << fmt(st.v_p75(k, m))
            << ',' << fmt(st.v_max(k, m)) << '\n';
  };
  if (r.cc_stats) dump("ccspds", *r.cc_stats);
  if (r.spds_stats) dump("spds", *r.spds_stats);
}

void write_hist(const RunReport& r, const std::filesystem::path& dir) {
  auto out = open_out(dir / "violations_hist.csv");
  out << "algorithm,violating_nodes,slot_observations\n";
  auto dump = [&](const char* name, const ViolationStats& st) {
    for (std::size_t b = 0; b < st.histogram.size(); ++b)
      if (st.histogram[b] > 0) out << name << ',' << b << ',' << st.histogram[b] << '\n';
  };
  if (r.cc_stats) dump("ccspds", *r.cc_stats);
  if (r.spds_stats) dump("spds", *r.spds_stats);
}

void write_iterations(const RunReport& r, const std::filesystem::path& dir) {
  auto out = open_out(dir / "iterations.csv");
  out << "algorithm,iter,slot,aggregate_w,d,lambda\n";
  auto dump = [&](const char* name, const SolveResult& res) {
    for (const auto& rec : res.history)
      for (int k = 0; k < rec.aggregate_w.size(); ++k)
        out << name << ',' << rec.iter << ',' << k << ',' << fmt(rec.aggregate_w(k)) << ','
            << fmt(rec.d(k)) << ',' << fmt(rec.lambda(k)) << '\n';
  };
  if (r.cc) dump("ccspds", *r.cc);
  if (r.spds) dump("spds", *r.spds);
}

void write_messages(const RunReport& r, const std::filesystem::path& dir) {
  auto out = open_out(dir / "messages.csv");
  out << "iter,direction,messages,elements_per_message\n";
  for (const auto& s : r.messages.stats)
    out << s.iter << ',' << (s.direction == 'b' ? "broadcast" : "reply") << ',' << s.count << ','
        << s.elements_per_message << '\n';
}

void write_manifest(const RunReport& r, const std::filesystem::path& dir) {
  nlohmann::json m;
  m["version"] = "0.1.0";
  m["mode"] = r.mode;
  const Scenario& sc = r.scenario_meta;
  m["scenario"] = {{"name", sc.name},
                   {"seed", sc.seed},
                   {"nu_lower", sc.nu_lower},
                   {"sigma_p_watts", sc.sigma_p_w},
                   {"mc_samples", sc.mc_samples},
                   {"nodes", sc.feeder.node_count},
                   {"houses", sc.feeder.total_houses()},
                   {"evs", sc.fleet.size()}};
  m["window"] = {{"start_hour", sc.window.start_hour},
                 {"dt_minutes", sc.window.dt_minutes},
                 {"slots", sc.window.slots}};
  m["solver"] = {{"alpha", sc.solver.alpha},
                 {"beta", sc.solver.beta},
                 {"tau_u", sc.solver.tau_u},
                 {"tau_lambda", sc.solver.tau_lambda},
                 {"d_lambda", sc.solver.d_lambda},
                 {"rho", sc.solver.rho},
                 {"delta", sc.solver.delta},
                 {"max_iters", sc.solver.max_iters},
                 {"stop_on_converge", sc.solver.stop_on_converge},
                 {"mvn_accuracy", sc.solver.mvn_accuracy},
                 {"mvn_gradient_accuracy", sc.solver.mvn_gradient_accuracy},
                 {"mvn_shifts", sc.solver.mvn_shifts}};
  if (r.cc) m["ccspds"] = {{"iters_run", r.cc->iters_run}};
  if (r.spds) m["spds"] = {{"iters_run", r.spds->iters_run}};
  auto out = open_out(dir / "manifest.json");
  out << m.dump(2) << '\n';
}

}  // namespace

void emit_report(const RunReport& report, const std::string& out_dir) {
  std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir + ": " + ec.message());
  write_total_load(report, dir);
  write_voltages(report, dir);
  write_hist(report, dir);
  write_iterations(report, dir);
  write_messages(report, dir);
  write_manifest(report, dir);
}

}  // namespace vf
