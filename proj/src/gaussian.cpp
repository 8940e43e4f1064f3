#include "vf/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vf/errors.hpp"
#include "vf/rng.hpp"

namespace vf {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779;
constexpr double kSqrt2 = 1.4142135623730950488;

void require_sigma(double sigma) {
  if (!(sigma > 0.0)) throw DimensionError("normal: sigma must be positive");
}

}  // namespace

double normal_pdf(double z, double mu, double sigma) {
  require_sigma(sigma);
  const double t = (z - mu) / sigma;
  return kInvSqrt2Pi / sigma * std::exp(-0.5 * t * t);
}

double normal_cdf(double z, double mu, double sigma) {
  require_sigma(sigma);
  return 0.5 * std::erfc(-(z - mu) / (sigma * kSqrt2));
}

double normal_cdf_inv(double p) {
  // Wichura, Applied Statistics 37 (1988), algorithm AS 241 (PPND16).
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  const double q = p - 0.5;
  double r;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
            4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
            2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
            5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -val : val;
}

double adjusted_pdf(double z, double mu, double sigma) {
  require_sigma(sigma);
  if (z >= mu) return normal_pdf(z, mu, sigma);
  return 2.0 * normal_pdf(mu, mu, sigma) - normal_pdf(2.0 * mu - z, mu, sigma);
}

double adjusted_cdf(double z, double mu, double sigma) {
  require_sigma(sigma);
  if (z >= mu) return normal_cdf(z, mu, sigma);
  return normal_cdf(2.0 * mu - z, mu, sigma);
}

// ---------------------------------------------------------------------------
// Covariance factorization
// ---------------------------------------------------------------------------

std::shared_ptr<const CovarianceFactor> CovarianceFactor::make(const MatrixXd& cov_in) {
  if (cov_in.rows() != cov_in.cols())
    throw DimensionError("covariance must be square");
  const double scale = std::max(1.0, cov_in.cwiseAbs().maxCoeff());
  if ((cov_in - cov_in.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw NumericError("covariance is not symmetric within tolerance");

  auto f = std::make_shared<CovarianceFactor>();
  f->cov = 0.5 * (cov_in + cov_in.transpose());

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(f->cov);
  if (eig.info() != Eigen::Success)
    throw NumericError("covariance eigendecomposition failed");
  const double tr = f->cov.trace();
  // Keep the floor strictly positive even for an all-zero covariance so the
  // CDF degenerates to a componentwise indicator instead of failing.
  f->clamp_floor = std::max(1e-12 * tr, 1e-150);
  VectorXd lam = eig.eigenvalues().cwiseMax(f->clamp_floor);
  f->repaired = eig.eigenvectors() * lam.asDiagonal() * eig.eigenvectors().transpose();
  f->repaired = 0.5 * (f->repaired + f->repaired.transpose());

  Eigen::LLT<MatrixXd> llt(f->repaired);
  if (llt.info() != Eigen::Success) {
    // Clamped spectrum can still be borderline for LLT; nudge the diagonal.
    MatrixXd bumped = f->repaired;
    bumped.diagonal().array() += f->clamp_floor;
    llt.compute(bumped);
    if (llt.info() != Eigen::Success)
      throw NumericError("Cholesky factorization failed after spectrum clamping");
    f->repaired = bumped;
  }
  f->chol = llt.matrixL();
  f->sd = f->repaired.diagonal().cwiseSqrt();
  return f;
}

GaussianVector::GaussianVector(VectorXd mean, const MatrixXd& cov)
    : mean_(std::move(mean)), factor_(CovarianceFactor::make(cov)) {
  if (mean_.size() != factor_->cov.rows())
    throw DimensionError("mean/covariance dimension mismatch");
}

GaussianVector::GaussianVector(VectorXd mean, std::shared_ptr<const CovarianceFactor> factor)
    : mean_(std::move(mean)), factor_(std::move(factor)) {
  if (mean_.size() != factor_->cov.rows())
    throw DimensionError("mean/covariance dimension mismatch");
}

// ---------------------------------------------------------------------------
// MVNCDF via separation of variables on a randomly shifted rank-1 lattice
// ---------------------------------------------------------------------------

namespace {

// Square roots of the first primes as lattice generators.
const double kLatticeGen[] = {
    1.4142135623730951, 1.7320508075688772, 2.23606797749979,  2.6457513110645907,
    3.3166247903554,    3.605551275463989,  4.123105625617661, 4.358898943540674,
    4.795831523312719,  5.385164807134504,  5.5677643628300215, 6.082762530298219,
    6.4031242374328485, 6.557438524302,     6.855654600401044, 7.280109889280518,
    7.681145747868608,  7.810249675906654,  8.18535277187245,  8.426149773176359,
    8.544003745317531,  8.888194417315589,  9.1104335791443,   9.433981132056603};

double clip_prob(double p) {
  constexpr double tiny = 1e-100;
  return std::min(std::max(p, tiny), 1.0 - 1e-16);
}

// Mean of the separated-integrand over one batch of lattice points for a
// single shift. `idx0` numbers the first point so batches can be appended.
double lattice_batch(const VectorXd& b, const MatrixXd& L, const VectorXd& shift,
                     int idx0, int count, VectorXd& y) {
  const int s = static_cast<int>(b.size());
  double total = 0.0;
  for (int k = 0; k < count; ++k) {
    const double point = static_cast<double>(idx0 + k);
    double e_prev = normal_cdf(b(0) / L(0, 0), 0.0, 1.0);
    double prod = e_prev;
    for (int d = 1; d < s; ++d) {
      double w = point * kLatticeGen[d - 1] + shift(d - 1);
      w -= std::floor(w);
      // sample the d-1 component inside its conditional slab, then condition
      y(d - 1) = normal_cdf_inv(clip_prob(w * e_prev));
      double t = b(d);
      for (int j = 0; j < d; ++j) t -= L(d, j) * y(j);
      e_prev = normal_cdf(t / L(d, d), 0.0, 1.0);
      prod *= e_prev;
    }
    total += prod;
  }
  return total;
}

}  // namespace

MvnCdfResult mvn_cdf(const VectorXd& z, const GaussianVector& g, const MvnCdfOptions& opts,
                     std::uint64_t seed) {
  const int s = g.dim();
  if (z.size() != s) throw DimensionError("mvn_cdf: point/distribution dimension mismatch");
  if (s < 1) throw DimensionError("mvn_cdf: empty distribution");

  if (s == 1) {
    const double sd = std::max(g.sd(0), 1e-150);
    return {normal_cdf(z(0), g.mean()(0), sd), 0.0};
  }
  if (s - 1 > static_cast<int>(sizeof(kLatticeGen) / sizeof(double)))
    throw DimensionError("mvn_cdf: dimension exceeds lattice generator table");

  const VectorXd b = z - g.mean();
  const MatrixXd& L = g.chol();

  const int shifts = std::max(2, opts.shifts);
  std::vector<VectorXd> shift(shifts, VectorXd(s - 1));
  Rng rng(derive_seed(seed, {0x6d766e63ULL}));
  for (int r = 0; r < shifts; ++r)
    for (int d = 0; d < s - 1; ++d) shift[r](d) = rng.uniform01();

  std::vector<double> sums(shifts, 0.0);
  VectorXd y(s - 1);
  int done = 0;
  int batch = std::max(16, opts.min_points);
  MvnCdfResult res;
  while (true) {
    for (int r = 0; r < shifts; ++r)
      sums[r] += lattice_batch(b, L, shift[r], done + 1, batch, y);
    done += batch;

    double mean = 0.0;
    for (int r = 0; r < shifts; ++r) mean += sums[r] / done;
    mean /= shifts;
    double var = 0.0;
    for (int r = 0; r < shifts; ++r) {
      const double d = sums[r] / done - mean;
      var += d * d;
    }
    var /= (shifts - 1.0) * shifts;
    res.value = std::min(1.0, std::max(0.0, mean));
    res.error = 3.0 * std::sqrt(var);
    if (res.error <= opts.accuracy || done >= opts.max_points) break;
    batch = std::min(done, opts.max_points - done);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Conditionals and gradients
// ---------------------------------------------------------------------------

namespace {

VectorXd drop_component(const VectorXd& v, int j) {
  VectorXd out(v.size() - 1);
  int k = 0;
  for (int i = 0; i < v.size(); ++i)
    if (i != j) out(k++) = v(i);
  return out;
}

MatrixXd drop_row_col(const MatrixXd& m, int j) {
  const int s = static_cast<int>(m.rows());
  MatrixXd out(s - 1, s - 1);
  int r = 0;
  for (int i = 0; i < s; ++i) {
    if (i == j) continue;
    int c = 0;
    for (int k = 0; k < s; ++k) {
      if (k == j) continue;
      out(r, c++) = m(i, k);
    }
    ++r;
  }
  return out;
}

}  // namespace

GaussianVector conditional_complement(const GaussianVector& g, int j, double z_j) {
  const int s = g.dim();
  if (j < 0 || j >= s) throw DimensionError("conditional_complement: index out of range");
  if (s < 2) throw DimensionError("conditional_complement: dimension must be >= 2");
  const MatrixXd& cov = g.repaired_cov();
  const double sjj = cov(j, j);
  if (!(sjj > 0.0)) throw DimensionError("conditional_complement: zero marginal variance");

  const VectorXd col = cov.col(j);
  VectorXd mean_full = g.mean() + (z_j - g.mean()(j)) / sjj * col;
  MatrixXd cov_full = cov - col * col.transpose() / sjj;
  return {drop_component(mean_full, j), drop_row_col(cov_full, j)};
}

ConditionalTable::ConditionalTable(std::shared_ptr<const CovarianceFactor> factor) {
  const MatrixXd& cov = factor->repaired;
  const int s = static_cast<int>(cov.rows());
  slices_.reserve(s);
  for (int j = 0; j < s; ++j) {
    Slice sl;
    const double sjj = cov(j, j);
    const VectorXd col = cov.col(j);
    sl.scaled_col = drop_component(col, j) / sjj;
    if (s >= 2) {
      MatrixXd cond = cov - col * col.transpose() / sjj;
      sl.factor = CovarianceFactor::make(drop_row_col(cond, j));
    }
    slices_.push_back(std::move(sl));
  }
}

GaussianVector ConditionalTable::conditional(int j, double z_j, const VectorXd& mean) const {
  const Slice& sl = slices_.at(j);
  VectorXd out = drop_component(mean, j) + (z_j - mean(j)) * sl.scaled_col;
  return {std::move(out), sl.factor};
}

namespace {

template <typename CondFn>
VectorXd gradient_impl(const VectorXd& z, const GaussianVector& g, const MvnCdfOptions& opts,
                       std::uint64_t seed, bool adjusted, CondFn&& make_conditional) {
  const int s = g.dim();
  if (z.size() != s) throw DimensionError("mvncdf_gradient: dimension mismatch");
  VectorXd grad(s);
  for (int j = 0; j < s; ++j) {
    const double sd = std::max(g.sd(j), 1e-150);
    const double f =
        adjusted ? adjusted_pdf(z(j), g.mean()(j), sd) : normal_pdf(z(j), g.mean()(j), sd);
    double F = 1.0;  // s == 1: marginal density is the whole gradient
    if (s > 1) {
      GaussianVector cond = make_conditional(j);
      VectorXd zr = drop_component(z, j);
      if (adjusted) {
        for (int m = 0; m < zr.size(); ++m)
          if (zr(m) < cond.mean()(m)) zr(m) = 2.0 * cond.mean()(m) - zr(m);
      }
      F = mvn_cdf(zr, cond, opts, derive_seed(seed, {static_cast<std::uint64_t>(j) + 1})).value;
    }
    grad(j) = f * F;
  }
  return grad;
}

}  // namespace

VectorXd mvncdf_gradient(const VectorXd& z, const GaussianVector& g, const MvnCdfOptions& opts,
                         std::uint64_t seed, const ConditionalTable* table) {
  return gradient_impl(z, g, opts, seed, false, [&](int j) {
    return table ? table->conditional(j, z(j), g.mean()) : conditional_complement(g, j, z(j));
  });
}

VectorXd adjusted_mvncdf_gradient(const VectorXd& z, const GaussianVector& g,
                                  const MvnCdfOptions& opts, std::uint64_t seed,
                                  const ConditionalTable* table) {
  return gradient_impl(z, g, opts, seed, true, [&](int j) {
    return table ? table->conditional(j, z(j), g.mean()) : conditional_complement(g, j, z(j));
  });
}

}  // namespace vf
