#include "condmv/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace condmv {

InitialLaw InitialLaw::from_gaussian(GaussianLaw law, int block_dim) {
  InitialLaw mu0;
  mu0.name = "gaussian";
  mu0.sample = [law, block_dim](const CounterRng& rng, std::uint64_t particle) {
    Vector xi(law.dim());
    for (Index c = 0; c < law.dim(); ++c) {
      xi[c] = rng.normal({particle, static_cast<std::uint32_t>(c / block_dim),
                          static_cast<std::uint32_t>(c % block_dim), 0, Stream::initial});
    }
    return law.transform(xi);
  };
  mu0.gaussian = std::move(law);
  return mu0;
}

namespace {

ModelSpec two_block_shell(std::string name) {
  ModelSpec model;
  model.name = std::move(name);
  model.m = 2;
  model.d = 1;
  model.b.resize(4);
  model.mu0 = InitialLaw::from_gaussian(GaussianLaw::standard(2), 1);
  model.mu0.name = "standard-normal";
  return model;
}

ModelSpec decoupled_oracle() {
  ModelSpec model = two_block_shell("decoupled-oracle");
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      model.b[i * 2 + j] = {CoefficientForm::query_only,
                            [j](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) {
                              out[0] = std::tanh(x[j]);
                            }};
    }
  }
  model.bounds = {1.0, 0.0};
  model.oracle = Oracle{[](const Vector& x, double) {
    const double s = std::tanh(x[0]) + std::tanh(x[1]);
    return Vector::Constant(2, s).eval();
  }};
  return model;
}

ModelSpec frozen_independence() {
  ModelSpec model = two_block_shell("frozen-independence");
  // b^1_2 reads block 1 only, b^2_1 reads block 2 only; the diagonal is zero.
  model.b[0 * 2 + 1] = {CoefficientForm::atom_only,
                        [](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) { out[0] = std::tanh(x[0]); }};
  model.b[1 * 2 + 0] = {CoefficientForm::atom_only,
                        [](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) { out[0] = std::tanh(x[1]); }};
  model.potential = [](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) {
    out[0] = -std::tanh(x[0]);
    out[1] = -std::tanh(x[1]);
  };
  model.bounds = {1.0, 1.0};
  // Under the product initial law, E[tanh(X^1) | X^2] = E[tanh(X^1)] = 0.
  model.oracle = Oracle{[](const Vector& x, double) {
                          Vector v(2);
                          v << -std::tanh(x[0]), -std::tanh(x[1]);
                          return v;
                        },
                        0.0};
  return model;
}

ModelSpec eot_flow(const PresetOptions& opt) {
  ModelSpec model = two_block_shell("eot-flow");
  const double B = opt.saturation;
  const double lambda = opt.entropic_reg;
  require(B > 0.0 && lambda > 0.0, ErrorCode::invalid_parameter,
          "eot-flow needs positive saturation and entropic regularization");
  // Cost c(x, y) = -x y, so grad_x c = -y and grad_y c = -x (saturated).
  // Block i conditions on itself: b^i_i = grad_{x_i} c, read from the other block.
  model.b[0] = {CoefficientForm::atom_only,
                [B](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) { out[0] = saturate(-x[1], B); }};
  model.b[3] = {CoefficientForm::atom_only,
                [B](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) { out[0] = saturate(-x[0], B); }};
  // V^i = -grad_{x_i} c - lambda * U'(x_i), U(u) = u^2 / 2.
  model.potential = [B, lambda](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) {
    out[0] = -saturate(-x[1], B) - lambda * saturate(x[0], B);
    out[1] = -saturate(-x[0], B) - lambda * saturate(x[1], B);
  };
  model.sigma = std::sqrt(lambda);
  model.bounds = {B, B * (1.0 + lambda)};
  model.saturation = B;
  return model;
}

ModelSpec local_field(const PresetOptions& opt) {
  ModelSpec model = two_block_shell("local-field");
  const double B = opt.saturation;
  require(B > 0.0 && opt.degree >= 2, ErrorCode::invalid_parameter,
          "local-field needs positive saturation and degree >= 2");
  const double weight = opt.degree - 1.0;
  // Pair potential W(u) = u^2 / 2 and confinement U(u) = u^2 / 2, both saturated.
  model.b[0] = {CoefficientForm::general, [B, weight](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) {
                  out[0] = -weight * saturate(x[0] - x[1], B);
                }};
  model.b[3] = {CoefficientForm::general, [B, weight](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) {
                  out[0] = -weight * saturate(x[1] - x[0], B);
                }};
  model.potential = [B](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) {
    out[0] = -saturate(x[0] - x[1], B) - saturate(x[0], B);
    out[1] = -saturate(x[1] - x[0], B) - saturate(x[1], B);
  };
  model.bounds = {weight * B, 2.0 * B};
  model.saturation = B;
  return model;
}

ModelSpec abf(const PresetOptions& opt) {
  ModelSpec model = two_block_shell("abf");
  const double B = opt.saturation;
  const double kappa = opt.coupling;
  require(B > 0.0, ErrorCode::invalid_parameter, "abf needs positive saturation");
  // Potential (x1^2 - 1)^2 / 4 + kappa (x2 - x1)^2 / 2 with saturated gradient.
  auto d1 = [B, kappa](double x1, double x2) {
    return saturate(x1 * x1 * x1 - x1 - kappa * (x2 - x1), B);
  };
  auto d2 = [B, kappa](double x1, double x2) { return saturate(kappa * (x2 - x1), B); };
  model.b[0] = {CoefficientForm::general,
                [d1](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) { out[0] = d1(x[0], x[1]); }};
  model.potential = [d1, d2](Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) {
    out[0] = -d1(x[0], x[1]);
    out[1] = -d2(x[0], x[1]);
  };
  // Unit noise in dX = ... + dW means sqrt(2) sigma = 1.
  model.sigma = 1.0 / std::numbers::sqrt2;
  model.bounds = {B, B};
  model.saturation = B;
  return model;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"eot-flow", "local-field", "abf", "decoupled-oracle",
                                              "frozen-independence"};
  return names;
}

ModelSpec preset(std::string_view name, const PresetOptions& options) {
  if (name == "decoupled-oracle") return decoupled_oracle();
  if (name == "frozen-independence") return frozen_independence();
  if (name == "eot-flow") return eot_flow(options);
  if (name == "local-field") return local_field(options);
  if (name == "abf") return abf(options);
  throw Error(ErrorCode::unknown_preset, "unknown preset '" + std::string(name) + "'");
}

Vector potential_at(const ModelSpec& model, const Vector& x) {
  Vector v = Vector::Zero(model.state_dim());
  if (model.potential) model.potential(x, v);
  return v;
}

Vector oracle_drift(const ModelSpec& model, const Vector& x, double t) {
  if (!model.oracle || t > model.oracle->valid_until)
    throw Error(ErrorCode::no_oracle_available,
                "model '" + model.name + "' has no oracle drift at t = " + std::to_string(t));
  require(x.size() == model.state_dim(), ErrorCode::invalid_parameter, "state dimension mismatch");
  return model.oracle->drift(x, t);
}

double gaussian_block_shift_D4(const GaussianLaw& law, int block, int block_dim, const Vector& shift) {
  const Matrix p = law.precision().block(block * block_dim, block * block_dim, block_dim, block_dim);
  return std::exp(6.0 * shift.dot(p * shift));
}

namespace {

double simpson_weight(int i, int n) {
  if (i == 0 || i == n - 1) return 1.0;
  return (i % 2 == 1) ? 4.0 : 2.0;
}

R1Estimate r1_gaussian_kernel(const GaussianLaw& law, int block, int d, double h, int points) {
  // Shift sqrt(h)(s u z1 + z2) ~ N(0, h (1 + s^2 u^2) I) under a Gaussian kernel,
  // and E exp(6 a^T P a) = det(I - 12 v P)^{-1/2} while that matrix is PD.
  const Matrix p = law.precision().block(block * d, block * d, d, d);
  R1Estimate est{block, 0.0, 0.0, false, "closed-form+quadrature"};
  const double lambda_max = Eigen::SelfAdjointEigenSolver<Matrix>(p).eigenvalues().maxCoeff();
  if (24.0 * h * lambda_max >= 1.0) {
    est.value = std::numeric_limits<double>::infinity();
    return est;
  }
  if (points % 2 == 0) ++points;
  const double step = 1.0 / (points - 1);
  double total = 0.0;
  for (int a = 0; a < points; ++a) {
    const double s = a * step;
    for (int c = 0; c < points; ++c) {
      const double u = c * step;
      const double v = h * (1.0 + s * s * u * u);
      const Matrix m = Matrix::Identity(d, d) - 12.0 * v * p;
      total += simpson_weight(a, points) * simpson_weight(c, points) / std::sqrt(m.determinant());
    }
  }
  est.value = total * (step / 3.0) * (step / 3.0);
  est.finite = std::isfinite(est.value);
  return est;
}

R1Estimate r1_monte_carlo(const GaussianLaw& law, int block, int d, double h, const KernelSpec& kernel,
                          std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 gen(seed + static_cast<std::uint64_t>(block) * 0x9E3779B97F4A7C15ull);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double root_h = std::sqrt(h);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const double s = unif(gen);
    const double u = unif(gen);
    const Vector z1 = sample_kernel(kernel, gen);
    const Vector z2 = sample_kernel(kernel, gen);
    const double v = gaussian_block_shift_D4(law, block, d, root_h * (s * u * z1 + z2));
    const double delta = v - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta * (v - mean);
  }
  R1Estimate est{block, mean, 0.0, std::isfinite(mean), "monte-carlo"};
  if (samples > 1) est.std_error = std::sqrt(m2 / static_cast<double>(samples - 1) / samples);
  return est;
}

R3Values r3_quadrature(const GaussianLaw& law) {
  const Index dim = law.dim();
  const int n = dim == 1 ? 4001 : 601;
  const double half = 12.0;
  const double step = 2.0 * half / (n - 1);
  const double log_norm = -0.5 * dim * std::log(2.0 * std::numbers::pi);
  R3Values out;
  Vector u(dim);
  auto visit = [&](double w) {
    const Vector x = law.transform(u);
    const double weight = w * std::exp(log_norm - 0.5 * u.squaredNorm());
    const double lr = law.laplacian_ratio(x);
    out.abs_log_density += weight * std::abs(law.log_density(x));
    out.score_fourth += weight * std::pow(law.score(x).squaredNorm(), 2);
    out.laplacian_ratio_sq += weight * lr * lr;
  };
  auto w = [&](int i) { return (i == 0 || i == n - 1) ? 0.5 * step : step; };
  for (int i = 0; i < n; ++i) {
    u[0] = -half + i * step;
    if (dim == 1) {
      visit(w(i));
      continue;
    }
    for (int j = 0; j < n; ++j) {
      u[1] = -half + j * step;
      visit(w(i) * w(j));
    }
  }
  return out;
}

}  // namespace

bool AssumptionRReport::all_finite() const {
  const bool r1_ok = std::all_of(r1.begin(), r1.end(), [](const R1Estimate& e) { return e.finite; });
  bool r3_ok = true;
  if (r3) {
    r3_ok = std::isfinite(r3->abs_log_density) && std::isfinite(r3->score_fourth) &&
            std::isfinite(r3->laplacian_ratio_sq);
  }
  return r1_ok && moments_finite && r3_ok && bounded && positive;
}

AssumptionRReport check_assumption_R(const InitialLaw& mu0, double h, const KernelSpec& kernel,
                                     const AssumptionROptions& options) {
  if (!mu0.gaussian)
    throw Error(ErrorCode::unsupported_law,
                "initial law '" + mu0.name + "' has no closed-form density for assumption checks");
  require(h > 0.0, ErrorCode::invalid_parameter, "bandwidth h must be positive");
  const GaussianLaw& law = *mu0.gaussian;
  const int d = options.block_dim;
  require(d == kernel.dim, ErrorCode::invalid_parameter, "kernel dimension must equal the block dimension");
  require(d >= 1 && law.dim() % d == 0, ErrorCode::invalid_parameter, "law dimension is not a multiple of d");
  const int m = static_cast<int>(law.dim() / d);

  AssumptionRReport report;
  for (int i = 0; i < m; ++i) {
    if (kernel.kind == KernelKind::gaussian)
      report.r1.push_back(r1_gaussian_kernel(law, i, d, h, options.outer_points));
    else
      report.r1.push_back(r1_monte_carlo(law, i, d, h, kernel, options.monte_carlo_samples, options.seed));
  }
  report.moments_finite = true;  // Gaussian tails
  if (law.dim() <= 2) report.r3 = r3_quadrature(law);
  report.sup_density = law.sup_density();
  report.bounded = std::isfinite(report.sup_density);
  report.positive = true;
  return report;
}

double subexponential_D4_bound(double score_bound, double h, double z) {
  return std::exp(4.0 * std::sqrt(h) * score_bound * std::abs(z));
}

}  // namespace condmv
