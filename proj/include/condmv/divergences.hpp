#pragma once

#include "condmv/core.hpp"
#include "condmv/ensemble.hpp"
#include "condmv/gaussian.hpp"
#include "condmv/kernels.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace condmv {

// Total variation uses the L1 convention throughout:
//   ||a - b||_TV = 2 sup_S |a(S) - b(S)| = sum_i |a_i - b_i|, values in [0, 2].
// Half of this is the more common "sup" convention; do not mix them.

/// Probability vector over a finite alphabet.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(Vector probabilities);
  /// Normalizes nonnegative weights with a positive sum.
  static DiscreteDistribution from_weights(const Vector& weights);

  Index size() const noexcept { return p_.size(); }
  double operator[](Index i) const { return p_[i]; }
  const Vector& probabilities() const noexcept { return p_; }

 private:
  Vector p_;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

template <typename A, typename B>
void check_alphabet(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::alphabet_mismatch, "alphabet sizes differ: " + std::to_string(a.size()) + " vs " +
                                                  std::to_string(b.size()));
}

}  // namespace detail

template <typename A, typename B>
double tv(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::check_alphabet(a, b);
  return (a.derived() - b.derived()).cwiseAbs().sum();
}

/// Relative entropy sum a_i log(a_i / b_i), with 0 log 0 = 0 and +inf when
/// some a_i > 0 = b_i.
template <typename A, typename B>
double kl(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::check_alphabet(a, b);
  double total = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double ai = a.coeff(i), bi = b.coeff(i);
    if (ai == 0.0) continue;
    if (bi == 0.0) return detail::kInf;
    total += ai * std::log(ai / bi);
  }
  return std::max(total, 0.0);
}

/// p-divergence sum (a_i / b_i)^p b_i, p >= 1; +inf off absolute continuity.
template <typename A, typename B>
double d_p(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, double p) {
  detail::check_alphabet(a, b);
  require(p >= 1.0, ErrorCode::invalid_parameter, "p-divergence needs p >= 1");
  double total = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    const double ai = a.coeff(i), bi = b.coeff(i);
    if (ai == 0.0) continue;
    if (bi == 0.0) return detail::kInf;
    total += std::pow(ai / bi, p) * bi;
  }
  return total;
}

/// chi^2 = D_2 - 1.
template <typename A, typename B>
double chi2(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return std::max(d_p(a, b, 2.0) - 1.0, 0.0);
}

double tv(const DiscreteDistribution& a, const DiscreteDistribution& b);
double kl(const DiscreteDistribution& a, const DiscreteDistribution& b);
double chi2(const DiscreteDistribution& a, const DiscreteDistribution& b);
double d_p(const DiscreteDistribution& a, const DiscreteDistribution& b, double p);

/// Closed-form relative entropy between Gaussians.
double gaussian_kl(const GaussianLaw& p, const GaussianLaw& q);

/// D_alpha for Gaussians sharing a covariance:
/// exp(alpha (alpha - 1) / 2 * dmu^T Sigma^{-1} dmu).
double gaussian_renyi_D(const GaussianLaw& p, const GaussianLaw& q, double alpha);

/// Closed-form density on the real line. The quadrature domain is
/// center +- (offset + w * scale) for a widening w; the grid step is
/// resolution / points_per_scale (resolution 0 means scale).
struct Density1D {
  std::string name;
  std::function<double(double)> pdf;
  double center = 0.0;
  double scale = 1.0;
  double offset = 0.0;
  double resolution = 0.0;

  static Density1D normal(double mean, double sd);
  /// Two-component normal mixture w N(m1, s1^2) + (1 - w) N(m2, s2^2).
  static Density1D normal_mixture(double w, double m1, double s1, double m2, double s2);
};

struct MollificationOptions {
  double tail_mass = 1e-10;
  double initial_half_width = 8.0;  // in units of scale
  double max_half_width = 64.0;
  int points_per_scale = 40;        // outer grid resolution
  int inner_nodes = 400;            // Gauss-Legendre nodes across the kernel support
};

/// Quadrature value of H(p || p * K_h) = integral of p log(p / (p * K_h)).
/// The domain widens until the mass outside it is below tail_mass.
double mollification_entropy(const Density1D& density, const KernelSpec& kernel, double h,
                             const MollificationOptions& options = {});

// Histograms -----------------------------------------------------------------

struct HistogramAxis {
  double lo = -1.0;
  double hi = 1.0;
  int bins = 10;
};

/// Axis-aligned uniform bins over R^D.
class Histogram {
 public:
  explicit Histogram(std::vector<HistogramAxis> axes);

  int dims() const noexcept { return static_cast<int>(axes_.size()); }
  const std::vector<HistogramAxis>& axes() const noexcept { return axes_; }
  /// Returns false (and counts nothing) when the point falls outside the bins.
  bool add(const double* point);
  double total() const noexcept { return total_; }
  Vector probabilities() const;

 private:
  std::vector<HistogramAxis> axes_;
  std::vector<double> counts_;
  double total_ = 0.0;
};

/// Which coordinates of each particle are binned: one block, and either a
/// single component or all d components.
struct MarginalSelector {
  int block = 0;
  int component = -1;  // -1 selects the whole block
};

/// TV (L1 convention) between binned empirical marginals. A biased,
/// binning-dependent estimate; only compare values that share the binning.
/// Throws when any selected sample falls outside the bins.
double histogram_tv(const ParticleEnsemble& e1, const ParticleEnsemble& e2, const MarginalSelector& marginal,
                    const std::vector<HistogramAxis>& bins);

// Inequality suite -----------------------------------------------------------

struct InequalityRecord {
  std::int64_t trial = 0;
  std::string quantity;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

struct InequalityReport {
  std::vector<InequalityRecord> records;
  std::int64_t trials = 0;
  std::int64_t violations() const;
  /// CSV with header trial,quantity,lhs,rhs,pass.
  void write_csv(const std::filesystem::path& path) const;
};

struct InequalityOptions {
  std::uint64_t seed = 1;
  int max_alphabet = 32;
  int workers = 1;
};

/// Random checks of Pinsker, KL <= chi^2, data processing (TV, KL, chi^2, D_4),
/// the chain rule on product alphabets and the Donsker-Varadhan lower bound.
InequalityReport inequality_suite(std::int64_t trials, const InequalityOptions& options = {});

}  // namespace condmv
