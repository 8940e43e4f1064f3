#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vf/rng.hpp"

namespace vf::testing {

McEstimate mc_mvncdf(const VectorXd& z, const VectorXd& mean, const MatrixXd& cov, long samples,
                     std::uint64_t seed) {
  const int s = static_cast<int>(mean.size());
  Eigen::LLT<MatrixXd> llt(cov + 1e-13 * cov.trace() * MatrixXd::Identity(s, s));
  const MatrixXd L = llt.matrixL();
  Rng rng(seed);
  long hits = 0;
  VectorXd g(s), x(s);
  for (long k = 0; k < samples; ++k) {
    for (int i = 0; i < s; ++i) g(i) = rng.normal();
    x = mean + L * g;
    bool inside = true;
    for (int i = 0; i < s; ++i)
      if (x(i) > z(i)) {
        inside = false;
        break;
      }
    hits += inside;
  }
  McEstimate est;
  est.value = static_cast<double>(hits) / samples;
  est.se = std::sqrt(std::max(est.value * (1.0 - est.value), 1e-12) / samples);
  return est;
}

VectorXd fd_mvncdf_gradient(const VectorXd& z, const GaussianVector& g, double step,
                            double accuracy, std::uint64_t seed) {
  MvnCdfOptions opts;
  opts.accuracy = accuracy;
  opts.max_points = 1 << 15;
  VectorXd grad(z.size());
  for (int j = 0; j < z.size(); ++j) {
    VectorXd zp = z, zm = z;
    zp(j) += step;
    zm(j) -= step;
    const double fp = mvn_cdf(zp, g, opts, seed).value;
    const double fm = mvn_cdf(zm, g, opts, seed).value;
    grad(j) = (fp - fm) / (2.0 * step);
  }
  return grad;
}

void schur_conditional(const VectorXd& mean, const MatrixXd& cov, int j, double z_j,
                       VectorXd& mean_out, MatrixXd& cov_out) {
  const int s = static_cast<int>(mean.size());
  std::vector<int> keep;
  for (int i = 0; i < s; ++i)
    if (i != j) keep.push_back(i);
  const int r = static_cast<int>(keep.size());

  VectorXd mu1(r);
  MatrixXd s11(r, r), s12(r, 1);
  for (int a = 0; a < r; ++a) {
    mu1(a) = mean(keep[a]);
    s12(a, 0) = cov(keep[a], j);
    for (int b = 0; b < r; ++b) s11(a, b) = cov(keep[a], keep[b]);
  }
  const MatrixXd s22(MatrixXd::Constant(1, 1, cov(j, j)));
  const MatrixXd s22inv = s22.inverse();
  mean_out = mu1 + s12 * s22inv * VectorXd::Constant(1, z_j - mean(j));
  cov_out = s11 - s12 * s22inv * s12.transpose();
}

VectorXd breakpoint_projection(const VectorXd& v, double ub, double target) {
  const int K = static_cast<int>(v.size());
  // sum(theta) = sum_i clip(v_i + theta, 0, ub) is piecewise linear with
  // breakpoints at -v_i and ub - v_i; walk segments to find theta exactly.
  std::vector<double> bp;
  bp.reserve(2 * K);
  for (int i = 0; i < K; ++i) {
    bp.push_back(-v(i));
    bp.push_back(ub - v(i));
  }
  std::sort(bp.begin(), bp.end());
  auto sum_at = [&](double theta) {
    double s = 0.0;
    for (int i = 0; i < K; ++i) s += std::clamp(v(i) + theta, 0.0, ub);
    return s;
  };
  double theta;
  if (target <= sum_at(bp.front())) {
    theta = bp.front();
  } else if (target >= sum_at(bp.back())) {
    theta = bp.back();
  } else {
    theta = bp.back();
    for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
      const double s0 = sum_at(bp[k]);
      const double s1 = sum_at(bp[k + 1]);
      if (s0 <= target && target <= s1) {
        // linear on [bp_k, bp_{k+1}] with slope = active count
        int active = 0;
        const double mid = 0.5 * (bp[k] + bp[k + 1]);
        for (int i = 0; i < K; ++i) {
          const double val = v(i) + mid;
          if (val > 0.0 && val < ub) ++active;
        }
        theta = active > 0 ? bp[k] + (target - s0) / active : bp[k];
        break;
      }
    }
  }
  VectorXd u(K);
  for (int i = 0; i < K; ++i) u(i) = std::clamp(v(i) + theta, 0.0, ub);
  return u;
}

void path_walk_rx(const FeederModel& feeder, MatrixXd& R, MatrixXd& X) {
  const int h = feeder.node_count;
  const double zb = feeder.z_base_ohm();
  const auto parent = feeder.parent_index();
  std::vector<double> r_up(h), x_up(h);
  for (const auto& ln : feeder.lines) {
    r_up[ln.child - 1] = ln.r_ohm / zb;
    x_up[ln.child - 1] = ln.x_ohm / zb;
  }
  auto path_of = [&](int i) {
    std::vector<int> path;
    for (int cur = i; cur != -1; cur = parent[cur]) path.push_back(cur);
    return path;
  };
  R = MatrixXd::Zero(h, h);
  X = MatrixXd::Zero(h, h);
  for (int i = 0; i < h; ++i) {
    const auto pi = path_of(i);
    for (int j = 0; j < h; ++j) {
      const auto pj = path_of(j);
      double rs = 0.0, xs = 0.0;
      for (int a : pi)
        for (int b : pj)
          if (a == b) {
            rs += r_up[a];
            xs += x_up[a];
          }
      R(i, j) = rs;
      X(i, j) = xs;
    }
  }
}

VectorXd tree_accumulation_voltages(const FeederModel& feeder, const VectorXd& p_pu,
                                    const VectorXd& q_pu) {
  const int h = feeder.node_count;
  const double zb = feeder.z_base_ohm();
  const auto parent = feeder.parent_index();
  std::vector<double> r_up(h), x_up(h);
  for (const auto& ln : feeder.lines) {
    r_up[ln.child - 1] = ln.r_ohm / zb;
    x_up[ln.child - 1] = ln.x_ohm / zb;
  }
  // flow through the edge above node i = sum of loads in i's subtree
  VectorXd pflow = p_pu, qflow = q_pu;
  // accumulate children into parents; process deepest-first via repeated sweeps
  std::vector<int> depth(h, 0);
  int maxd = 0;
  for (int i = 0; i < h; ++i) {
    int d = 0;
    for (int cur = parent[i]; cur != -1; cur = parent[cur]) ++d;
    depth[i] = d;
    maxd = std::max(maxd, d);
  }
  for (int d = maxd; d >= 1; --d)
    for (int i = 0; i < h; ++i)
      if (depth[i] == d) {
        pflow(parent[i]) += pflow(i);
        qflow(parent[i]) += qflow(i);
      }
  VectorXd v(h);
  for (int i = 0; i < h; ++i) {
    double drop = 0.0;
    for (int cur = i; cur != -1; cur = parent[cur])
      drop += 2.0 * (r_up[cur] * pflow(cur) + x_up[cur] * qflow(cur));
    v(i) = feeder.v0_sq - drop;
  }
  return v;
}

}  // namespace vf::testing
