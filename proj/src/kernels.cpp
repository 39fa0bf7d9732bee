#include "condmv/kernels.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace condmv {

double unit_ball_volume(int dim) {
  const double d = dim;
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

namespace {

double profile_constant(KernelKind kind, int dim) {
  switch (kind) {
    case KernelKind::gaussian:
      return std::pow(2.0 * std::numbers::pi, -0.5 * dim);
    case KernelKind::epanechnikov:
      return (dim + 2.0) / (2.0 * unit_ball_volume(dim));
    case KernelKind::uniform_ball:
      return 1.0 / unit_ball_volume(dim);
    case KernelKind::custom:
      break;
  }
  return 0.0;
}

}  // namespace

double KernelSpec::profile(double r2) const {
  const double c = profile_constant(kind, dim);
  switch (kind) {
    case KernelKind::gaussian:
      return c * std::exp(-0.5 * r2);
    case KernelKind::epanechnikov:
      return c * std::max(0.0, 1.0 - r2);
    case KernelKind::uniform_ball:
      return r2 <= 1.0 ? c : 0.0;
    case KernelKind::custom:
      break;
  }
  throw Error(ErrorCode::invalid_parameter, "kernel '" + id + "' has no radial profile");
}

KernelSpec make_kernel(std::string_view id, int dim) {
  require(dim >= 1, ErrorCode::invalid_parameter, "kernel dimension must be positive");
  KernelSpec k;
  k.dim = dim;
  k.id = std::string(id);
  if (id == "gaussian") {
    k.kind = KernelKind::gaussian;
  } else if (id == "epanechnikov") {
    k.kind = KernelKind::epanechnikov;
    k.support_radius = 1.0;
  } else if (id == "uniform-ball") {
    k.kind = KernelKind::uniform_ball;
    k.support_radius = 1.0;
  } else {
    throw Error(ErrorCode::invalid_parameter, "unknown kernel id '" + std::string(id) + "'");
  }
  k.sup_value = profile_constant(k.kind, dim);
  // Copy only the kind and dimension into the closure.
  KernelSpec shape{k.kind, k.id, dim, {}, k.support_radius, k.sup_value};
  k.density = [shape](const Vector& z) { return shape.profile(z.squaredNorm()); };
  return k;
}

KernelSpec custom_kernel(std::string id, int dim, std::function<double(const Vector&)> density,
                         double support_radius, double sup_value) {
  require(dim >= 1, ErrorCode::invalid_parameter, "kernel dimension must be positive");
  require(static_cast<bool>(density), ErrorCode::invalid_parameter, "custom kernel needs a density");
  return KernelSpec{KernelKind::custom, std::move(id), dim, std::move(density), support_radius,
                    sup_value};
}

ScaledKernel::ScaledKernel(KernelSpec base, double h) : base_(std::move(base)), h_(h) {
  require(h > 0.0 && std::isfinite(h), ErrorCode::invalid_parameter,
          "bandwidth h must be positive and finite");
  scale_ = std::pow(h_, -0.5 * base_.dim) * profile_constant(base_.kind, base_.dim);
}

double ScaledKernel::operator()(const Vector& z) const {
  return std::pow(h_, -0.5 * base_.dim) * base_.density(z / std::sqrt(h_));
}

double ScaledKernel::at_origin() const { return (*this)(Vector::Zero(base_.dim)); }

double eval_scaled(const ScaledKernel& k, const Vector& z) {
  require(z.size() == k.dim(), ErrorCode::invalid_parameter, "point dimension mismatch");
  return k(z);
}

namespace {

struct Moments {
  double mass = 0.0;
  Vector mean;
  double second = 0.0;
  double exp_moment = 0.0;
};

Moments integrate_moments(const KernelSpec& k, int panels) {
  if (k.dim > 2)
    throw Error(ErrorCode::unsupported_dimension,
                "quadrature checks support d <= 2, got d = " + std::to_string(k.dim));
  if (panels <= 0) panels = 400;
  require(panels >= 1, ErrorCode::invalid_parameter, "need at least one quadrature panel");
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const double L = k.compact() ? k.support_radius : 12.0;

  Moments m;
  m.mean = Vector::Zero(k.dim);
  Vector z(k.dim);
  auto accumulate = [&](double w) {
    const double v = k.density(z) * w;
    const double r2 = z.squaredNorm();
    m.mass += v;
    m.mean += v * z;
    m.second += v * r2;
    m.exp_moment += v * std::exp(0.25 * r2);
  };
  // Gauss-Legendre nodes on [a, b]; the rule stores the nonnegative half.
  auto panel = [&](double a, double b, const auto& f) {
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    const auto& x = Rule::abscissa();
    const auto& w = Rule::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
      f(c + hw * x[i], hw * w[i]);
      if (x[i] != 0.0) f(c - hw * x[i], hw * w[i]);
    }
  };
  if (k.dim == 1) {
    const double width = 2.0 * L / panels;
    for (int p = 0; p < panels; ++p)
      panel(-L + p * width, -L + (p + 1) * width, [&](double t, double w) {
        z[0] = t;
        accumulate(w);
      });
  } else {
    // Polar coordinates: the support boundary is a panel edge in r, and the
    // periodic trapezoid rule in theta converges geometrically.
    const int angles = 256;
    const double width = L / panels, dtheta = 2.0 * std::numbers::pi / angles;
    for (int p = 0; p < panels; ++p)
      panel(p * width, (p + 1) * width, [&](double r, double w) {
        for (int a = 0; a < angles; ++a) {
          const double theta = a * dtheta;
          z[0] = r * std::cos(theta);
          z[1] = r * std::sin(theta);
          accumulate(w * r * dtheta);
        }
      });
  }
  return m;
}

}  // namespace

AssumptionKReport check_assumption_K(const KernelSpec& k, int panels) {
  const Moments m = integrate_moments(k, panels);
  AssumptionKReport r;
  r.mass = {m.mass, std::abs(m.mass - 1.0) <= kAssumptionKTolerance};
  const double worst_mean = m.mean.cwiseAbs().maxCoeff();
  r.mean = {worst_mean, worst_mean <= kAssumptionKTolerance};
  r.exp_moment = {m.exp_moment, std::isfinite(m.exp_moment)};

  std::mt19937_64 gen(20240917);
  std::normal_distribution<double> normal(0.0, 2.0);
  double worst_asym = 0.0;
  double observed_sup = 0.0;
  Vector z(k.dim);
  for (int s = 0; s < 2000; ++s) {
    for (int c = 0; c < k.dim; ++c) z[c] = normal(gen);
    const double a = k.density(z);
    const double b = k.density(-z);
    worst_asym = std::max(worst_asym, std::abs(a - b));
    observed_sup = std::max({observed_sup, a, b});
  }
  observed_sup = std::max(observed_sup, k.density(Vector::Zero(k.dim)));
  r.symmetric = {worst_asym, worst_asym <= kAssumptionKTolerance};
  r.sup = {k.sup_value, std::isfinite(k.sup_value) && observed_sup <= k.sup_value * (1.0 + 1e-12)};
  return r;
}

double second_moment(const KernelSpec& k, int panels) {
  return integrate_moments(k, panels).second;
}

}  // namespace condmv
