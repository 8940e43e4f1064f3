#include "vf/network.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "vf/errors.hpp"

namespace vf {

int FeederModel::total_houses() const {
  return std::accumulate(houses_per_node.begin(), houses_per_node.end(), 0);
}

std::vector<int> FeederModel::parent_index() const {
  std::vector<int> parent(node_count, -2);
  for (const auto& ln : lines) {
    if (ln.child < 1 || ln.child > node_count || ln.parent < 0 || ln.parent > node_count)
      throw StructuralError("line endpoint out of range");
    if (parent[ln.child - 1] != -2)
      throw StructuralError("node " + std::to_string(ln.child) + " has two parent lines");
    parent[ln.child - 1] = ln.parent - 1;
  }
  for (int i = 0; i < node_count; ++i)
    if (parent[i] == -2)
      throw StructuralError("node " + std::to_string(i + 1) + " is not connected");
  return parent;
}

void FeederModel::validate() const {
  if (node_count < 1) throw StructuralError("feeder needs at least one downstream node");
  if (static_cast<int>(lines.size()) != node_count)
    throw StructuralError("a radial feeder with h downstream nodes needs exactly h lines, got " +
                          std::to_string(lines.size()));
  if (!(v0_sq > 0.0)) throw StructuralError("v0_sq must be positive");
  if (gamma < 0.0) throw StructuralError("gamma must be nonnegative");
  if (!(s_base_va > 0.0) || !(v_base_v > 0.0)) throw StructuralError("bases must be positive");
  if (static_cast<int>(houses_per_node.size()) != node_count)
    throw DimensionError("houses_per_node length must equal node_count");
  for (int n : houses_per_node)
    if (n < 0) throw StructuralError("negative house count");
  for (const auto& ln : lines)
    if (!(ln.r_ohm > 0.0) || !(ln.x_ohm > 0.0))
      throw StructuralError("line impedances must be positive");

  // tree check: unique parents + every node reaches the head without cycles
  const auto parent = parent_index();
  for (int i = 0; i < node_count; ++i) {
    int cur = i, steps = 0;
    while (cur != -1) {
      cur = parent[cur];
      if (++steps > node_count)
        throw StructuralError("cycle detected at node " + std::to_string(i + 1));
    }
  }
}

NetworkMatrices build_network_matrices(const FeederModel& feeder, const VectorXd& pbar_pu) {
  feeder.validate();
  const int h = feeder.node_count;
  const int n = feeder.total_houses();
  if (pbar_pu.size() != n)
    throw DimensionError("pbar must have one entry per house, expected " + std::to_string(n) +
                         " got " + std::to_string(pbar_pu.size()));
  for (int i = 0; i < n; ++i)
    if (!(pbar_pu(i) > 0.0)) throw DimensionError("pbar entries must be positive");

  const auto parent = feeder.parent_index();
  const double zb = feeder.z_base_ohm();
  std::vector<double> r_up(h), x_up(h);  // impedance of the line above each node
  for (const auto& ln : feeder.lines) {
    r_up[ln.child - 1] = ln.r_ohm / zb;
    x_up[ln.child - 1] = ln.x_ohm / zb;
  }

  NetworkMatrices nm;
  nm.R = MatrixXd::Zero(h, h);
  nm.X = MatrixXd::Zero(h, h);

  // R_ij = sum of r over the common head path of i and j. Accumulate each
  // node's path once, then intersect by walking ancestors.
  std::vector<std::vector<int>> path(h);  // node lists, head-excluded, deep to shallow
  for (int i = 0; i < h; ++i)
    for (int cur = i; cur != -1; cur = parent[cur]) path[i].push_back(cur);
  std::vector<char> on_path(h, 0);
  for (int i = 0; i < h; ++i) {
    for (int v : path[i]) on_path[v] = 1;
    for (int j = i; j < h; ++j) {
      double rs = 0.0, xs = 0.0;
      for (int v : path[j]) {
        if (on_path[v]) {
          rs += r_up[v];
          xs += x_up[v];
        }
      }
      nm.R(i, j) = nm.R(j, i) = rs;
      nm.X(i, j) = nm.X(j, i) = xs;
    }
    for (int v : path[i]) on_path[v] = 0;
  }

  nm.G = MatrixXd::Zero(h, n);
  int col = 0;
  for (int i = 0; i < h; ++i)
    for (int k = 0; k < feeder.houses_per_node[i]; ++k) nm.G(i, col++) = 1.0;

  nm.H = 2.0 * (nm.R + feeder.gamma * nm.X) * nm.G;
  nm.D = -2.0 * nm.R * nm.G * pbar_pu.asDiagonal();
  return nm;
}

VectorXd lindistflow_voltages(const NetworkMatrices& nm, const FeederModel& feeder,
                              const VectorXd& p_pu, const VectorXd& q_pu) {
  const int h = static_cast<int>(nm.R.rows());
  if (p_pu.size() != h || q_pu.size() != h)
    throw DimensionError("lindistflow: nodal power vectors must have length h");
  return VectorXd::Constant(h, feeder.v0_sq) - 2.0 * nm.R * p_pu - 2.0 * nm.X * q_pu;
}

void BaselineLoadModel::validate(int n) const {
  if (horizon < 1) throw DimensionError("baseline horizon must be >= 1");
  if (mu_pu.rows() != horizon || mu_pu.cols() != n)
    throw DimensionError("baseline means must be K x n");
  if (mu_pu.size() > 0 && mu_pu.minCoeff() < 0.0)
    throw DimensionError("baseline means must be nonnegative");
  if (sigma_pu < 0.0) throw DimensionError("baseline sigma must be nonnegative");
}

std::vector<GaussianVector> yhat_distribution(const NetworkMatrices& nm,
                                              const FeederModel& feeder,
                                              const BaselineLoadModel& loads, double nu_lower) {
  const int h = static_cast<int>(nm.H.rows());
  const int n = static_cast<int>(nm.H.cols());
  loads.validate(n);

  const MatrixXd cov = loads.sigma_pu * loads.sigma_pu * (nm.H * nm.H.transpose());
  auto factor = CovarianceFactor::make(cov);

  const VectorXd head = VectorXd::Constant(h, (nu_lower * nu_lower - 1.0) * feeder.v0_sq);
  std::vector<GaussianVector> out;
  out.reserve(loads.horizon);
  for (int k = 0; k < loads.horizon; ++k) {
    VectorXd mean = head + nm.H * loads.mu_pu.row(k).transpose();
    out.emplace_back(std::move(mean), factor);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feeder file
//
//   # comment
//   v0_pu      1.0
//   gamma      0.4
//   s_base_mva 5.0
//   v_base_kv  4.16
//   nodes      3
//   houses     2 0 4          (one count per downstream node, in node order)
//   line 0 1 0.35 1.02        (parent child r_ohm x_ohm; 0 is the head)
//   line 1 2 0.25 0.60
//   line 1 3 0.20 0.40
// ---------------------------------------------------------------------------

FeederModel load_feeder(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open feeder file: " + path);

  FeederModel f;
  bool have_nodes = false;
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
    if (key == "v0_pu") {
      double v;
      need(v, "value after v0_pu");
      f.v0_sq = v * v;
    } else if (key == "gamma") {
      need(f.gamma, "value after gamma");
    } else if (key == "s_base_mva") {
      double v;
      need(v, "value after s_base_mva");
      f.s_base_va = v * 1e6;
    } else if (key == "v_base_kv") {
      double v;
      need(v, "value after v_base_kv");
      f.v_base_v = v * 1e3;
    } else if (key == "nodes") {
      need(f.node_count, "node count");
      have_nodes = true;
    } else if (key == "houses") {
      if (!have_nodes) throw ParseError(path, lineno, "houses must follow the nodes line");
      f.houses_per_node.resize(f.node_count);
      for (int i = 0; i < f.node_count; ++i) need(f.houses_per_node[i], "house count");
    } else if (key == "line") {
      LineSegment seg;
      need(seg.parent, "parent node id");
      need(seg.child, "child node id");
      need(seg.r_ohm, "line resistance");
      need(seg.x_ohm, "line reactance");
      f.lines.push_back(seg);
    } else {
      throw ParseError(path, lineno, "unknown directive '" + key + "'");
    }
  }
  if (!have_nodes) throw ParseError(path, 0, "missing nodes line");
  try {
    f.validate();
  } catch (const std::runtime_error& e) {
    throw ParseError(path, 0, e.what());
  }
  return f;
}

}  // namespace vf
