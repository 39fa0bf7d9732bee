#pragma once

#include "condmv/core.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <string_view>

namespace condmv {

enum class KernelKind { gaussian, epanechnikov, uniform_ball, custom };

/// A mollification kernel K on R^d.
///
/// The shipped kernels are radial, K(z) = profile(|z|^2), which lets the drift
/// loops evaluate whole batches of squared distances at once. Custom kernels
/// only carry a pointwise density and are meant for the assumption checker.
struct KernelSpec {
  KernelKind kind = KernelKind::custom;
  std::string id;
  int dim = 1;
  std::function<double(const Vector&)> density;
  double support_radius = std::numeric_limits<double>::infinity();
  double sup_value = 0.0;

  bool radial() const noexcept { return kind != KernelKind::custom; }
  bool compact() const noexcept { return std::isfinite(support_radius); }

  /// K as a function of r2 = |z|^2. Radial kernels only.
  double profile(double r2) const;
};

/// Builds one of the shipped kernels: gaussian, epanechnikov, uniform-ball.
KernelSpec make_kernel(std::string_view id, int dim);

KernelSpec custom_kernel(std::string id, int dim, std::function<double(const Vector&)> density,
                         double support_radius, double sup_value);

/// Normalizing constant of the unit ball volume in R^d.
double unit_ball_volume(int dim);

/// K_h(z) = h^{-d/2} K(z / sqrt(h)).
///
/// Note that h is a VARIANCE scale: the standard deviation of K_h is sqrt(h)
/// times that of K. Statistics packages usually parameterize by the standard
/// deviation instead.
class ScaledKernel {
 public:
  ScaledKernel(KernelSpec base, double h);

  const KernelSpec& base() const noexcept { return base_; }
  double h() const noexcept { return h_; }
  int dim() const noexcept { return base_.dim; }

  double operator()(const Vector& z) const;

  /// Value at the origin, the largest value for the shipped kernels.
  double at_origin() const;

  /// Scaled support radius R * sqrt(h); +inf for non-compact kernels.
  double scaled_radius() const noexcept { return base_.support_radius * std::sqrt(h_); }

  /// Batch evaluation on squared distances. Radial kernels only.
  template <typename Derived>
  Array on_squared_distance(const Eigen::ArrayBase<Derived>& r2) const {
    switch (base_.kind) {
      case KernelKind::gaussian:
        return scale_ * (r2 * (-0.5 / h_)).exp();
      case KernelKind::epanechnikov:
        return scale_ * (1.0 - r2 * (1.0 / h_)).max(0.0);
      case KernelKind::uniform_ball:
        return (r2 <= h_).select(Array::Constant(r2.size(), scale_), 0.0);
      case KernelKind::custom:
        break;
    }
    throw Error(ErrorCode::invalid_parameter, "batch evaluation requires a radial kernel");
  }

 private:
  KernelSpec base_;
  double h_;
  double scale_;  // h^{-d/2} times the profile's normalizing constant
};

double eval_scaled(const ScaledKernel& k, const Vector& z);

struct QuadratureCheck {
  double value = 0.0;
  bool pass = false;
};

/// Quadrature report for the kernel hypotheses: unit mass, zero mean,
/// symmetry, finite Gaussian-weighted exponential moment and bounded sup.
/// The exponential moment carries no threshold, only a finiteness flag.
struct AssumptionKReport {
  QuadratureCheck mass;
  QuadratureCheck mean;  // value is the largest |component|
  QuadratureCheck exp_moment;
  QuadratureCheck symmetric;  // value is the largest |K(z) - K(-z)| seen
  QuadratureCheck sup;
  bool all_pass() const noexcept {
    return mass.pass && mean.pass && exp_moment.pass && symmetric.pass && sup.pass;
  }
};

inline constexpr double kAssumptionKTolerance = 1e-6;

/// Composite 10-point Gauss-Legendre over the support ball of radius L (the
/// support radius, or 12 for non-compact kernels), d <= 2. d = 1 splits
/// [-L, L] into panels; d = 2 splits the radius into panels and uses 256
/// angles. panels = 0 picks 400.
AssumptionKReport check_assumption_K(const KernelSpec& k, int panels = 0);

/// Quadrature value of the integral of K(z)|z|^2.
double second_moment(const KernelSpec& k, int panels = 0);

}  // namespace condmv
