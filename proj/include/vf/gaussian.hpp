#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

namespace vf {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Univariate normal
// ---------------------------------------------------------------------------

double normal_pdf(double z, double mu, double sigma);
double normal_cdf(double z, double mu, double sigma);

// Inverse of the standard normal CDF (Wichura's PPND16 rational fits,
// accurate to ~1e-15 over (0,1)).
double normal_cdf_inv(double p);

// Reflected variants. For z >= mu these equal the plain pdf/cdf; for z < mu the
// left half-plane is replaced by the mirror image of the right one, so the pdf
// stays bounded away from zero and the cdf stays >= 1/2. This keeps iterative
// updates alive when a probabilistic constraint is violated by a wide margin.
double adjusted_pdf(double z, double mu, double sigma);
double adjusted_cdf(double z, double mu, double sigma);

// ---------------------------------------------------------------------------
// Multivariate normal
// ---------------------------------------------------------------------------

// Symmetric-eigendecomposition factorization of a covariance matrix with a
// clamped spectrum: eigenvalues below 1e-12 * trace are raised to that floor,
// then a Cholesky factor of the repaired matrix is cached. Shared between all
// Gaussians that have the same covariance.
struct CovarianceFactor {
  MatrixXd cov;       // symmetrized input
  MatrixXd repaired;  // after eigenvalue clamping
  MatrixXd chol;      // lower-triangular, chol * chol^T = repaired
  VectorXd sd;        // sqrt of repaired diagonal
  double clamp_floor = 0.0;

  static std::shared_ptr<const CovarianceFactor> make(const MatrixXd& cov);
};

class GaussianVector {
 public:
  GaussianVector(VectorXd mean, const MatrixXd& cov);
  GaussianVector(VectorXd mean, std::shared_ptr<const CovarianceFactor> factor);

  int dim() const { return static_cast<int>(mean_.size()); }
  const VectorXd& mean() const { return mean_; }
  const MatrixXd& cov() const { return factor_->cov; }
  const MatrixXd& repaired_cov() const { return factor_->repaired; }
  const MatrixXd& chol() const { return factor_->chol; }
  double sd(int j) const { return factor_->sd(j); }
  const std::shared_ptr<const CovarianceFactor>& factor() const { return factor_; }

 private:
  VectorXd mean_;
  std::shared_ptr<const CovarianceFactor> factor_;
};

struct MvnCdfOptions {
  double accuracy = 1e-4;  // absolute target on the 3-sigma error estimate
  int shifts = 8;          // randomized lattice shifts
  int min_points = 128;    // per shift, first batch
  int max_points = 1 << 14;  // per shift, total cap
};

struct MvnCdfResult {
  double value = 0.0;
  double error = 0.0;  // 3 standard errors across shifts
};

// Pr(xi <= z componentwise) for xi ~ g, by separation-of-variables lattice
// integration over the cached Cholesky factor. Deterministic for a given seed.
MvnCdfResult mvn_cdf(const VectorXd& z, const GaussianVector& g,
                     const MvnCdfOptions& opts = {}, std::uint64_t seed = 0);

// Distribution of the remaining components given component j pinned at z_j.
GaussianVector conditional_complement(const GaussianVector& g, int j, double z_j);

// Precomputed drop-one-component conditionals for a fixed covariance. Only the
// conditional mean depends on z (and on the mean of the Gaussian being
// conditioned), so the (s-1)-dimensional factorizations are built once and
// shared across every evaluation with this covariance.
class ConditionalTable {
 public:
  explicit ConditionalTable(std::shared_ptr<const CovarianceFactor> factor);
  explicit ConditionalTable(const GaussianVector& g) : ConditionalTable(g.factor()) {}

  GaussianVector conditional(int j, double z_j, const VectorXd& mean) const;
  int dim() const { return static_cast<int>(slices_.size()); }

 private:
  struct Slice {
    VectorXd scaled_col;  // sigma_j / sigma_jj with component j removed
    std::shared_ptr<const CovarianceFactor> factor;
  };
  std::vector<Slice> slices_;
};

// Gradient of the MVNCDF at z: component j is the marginal density of
// component j times the conditional CDF of the rest.
VectorXd mvncdf_gradient(const VectorXd& z, const GaussianVector& g,
                         const MvnCdfOptions& opts = {}, std::uint64_t seed = 0,
                         const ConditionalTable* table = nullptr);

// Same structure with the reflected pdf/cdf: the marginal factor uses
// adjusted_pdf, and the conditional CDF is evaluated with every component
// below its conditional mean reflected about that mean. Strictly positive.
VectorXd adjusted_mvncdf_gradient(const VectorXd& z, const GaussianVector& g,
                                  const MvnCdfOptions& opts = {}, std::uint64_t seed = 0,
                                  const ConditionalTable* table = nullptr);

}  // namespace vf
