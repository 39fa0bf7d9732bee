#include "condmv/divergences.hpp"
#include "condmv/parallel.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cstdio>
#include <numbers>
#include <random>

namespace condmv {

DiscreteDistribution::DiscreteDistribution(Vector probabilities) : p_(std::move(probabilities)) {
  require(p_.size() >= 1, ErrorCode::invalid_parameter, "empty alphabet");
  require(p_.allFinite() && (p_.array() >= 0.0).all(), ErrorCode::invalid_parameter,
          "probabilities must be finite and nonnegative");
  require(std::abs(p_.sum() - 1.0) <= 1e-12, ErrorCode::invalid_parameter, "probabilities must sum to 1");
}

DiscreteDistribution DiscreteDistribution::from_weights(const Vector& weights) {
  require(weights.size() >= 1 && weights.allFinite() && (weights.array() >= 0.0).all(),
          ErrorCode::invalid_parameter, "weights must be finite and nonnegative");
  const double total = weights.sum();
  require(total > 0.0, ErrorCode::invalid_parameter, "weights must have a positive sum");
  Vector p = weights / total;
  // Push the rounding residue into the largest entry so the sum is exact to 1e-12.
  Index top = 0;
  p.maxCoeff(&top);
  p[top] += 1.0 - p.sum();
  return DiscreteDistribution(std::move(p));
}

double tv(const DiscreteDistribution& a, const DiscreteDistribution& b) {
  return tv(a.probabilities(), b.probabilities());
}
double kl(const DiscreteDistribution& a, const DiscreteDistribution& b) {
  return kl(a.probabilities(), b.probabilities());
}
double chi2(const DiscreteDistribution& a, const DiscreteDistribution& b) {
  return chi2(a.probabilities(), b.probabilities());
}
double d_p(const DiscreteDistribution& a, const DiscreteDistribution& b, double p) {
  return d_p(a.probabilities(), b.probabilities(), p);
}

double gaussian_kl(const GaussianLaw& p, const GaussianLaw& q) {
  require(p.dim() == q.dim(), ErrorCode::invalid_parameter, "Gaussian dimensions differ");
  const Vector dmu = q.mean() - p.mean();
  const Matrix& Pq = q.precision();
  const double trace = (Pq * p.covariance()).trace();
  const double quad = dmu.dot(Pq * dmu);
  return 0.5 * (trace + quad - static_cast<double>(p.dim()) + q.log_det() - p.log_det());
}

double gaussian_renyi_D(const GaussianLaw& p, const GaussianLaw& q, double alpha) {
  require(p.dim() == q.dim(), ErrorCode::invalid_parameter, "Gaussian dimensions differ");
  require(alpha >= 1.0, ErrorCode::invalid_parameter, "alpha must be at least 1");
  require((p.covariance() - q.covariance()).cwiseAbs().maxCoeff() <= 1e-12, ErrorCode::invalid_parameter,
          "closed form needs equal covariances");
  const Vector dmu = p.mean() - q.mean();
  return std::exp(0.5 * alpha * (alpha - 1.0) * dmu.dot(q.precision() * dmu));
}

// Mollification entropy -------------------------------------------------------

Density1D Density1D::normal(double mean, double sd) {
  require(sd > 0.0, ErrorCode::invalid_parameter, "sd must be positive");
  Density1D out;
  out.name = "normal";
  out.center = mean;
  out.scale = sd;
  out.pdf = [mean, sd](double x) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
  };
  return out;
}

Density1D Density1D::normal_mixture(double w, double m1, double s1, double m2, double s2) {
  require(w >= 0.0 && w <= 1.0 && s1 > 0.0 && s2 > 0.0, ErrorCode::invalid_parameter, "invalid mixture");
  const Density1D a = normal(m1, s1), b = normal(m2, s2);
  Density1D out;
  out.name = "normal-mixture";
  out.center = 0.5 * (m1 + m2);
  out.offset = 0.5 * std::abs(m1 - m2);
  out.scale = std::max(s1, s2);
  out.resolution = std::min(s1, s2);
  out.pdf = [w, a, b](double x) { return w * a.pdf(x) + (1.0 - w) * b.pdf(x); };
  return out;
}

namespace {

double trapezoid_mass(const Density1D& density, double lo, double hi, Index points) {
  const double dx = (hi - lo) / static_cast<double>(points - 1);
  CompensatedSum s;
  for (Index i = 0; i < points; ++i) {
    const double w = (i == 0 || i == points - 1) ? 0.5 : 1.0;
    s.add(w * density.pdf(lo + dx * static_cast<double>(i)));
  }
  return s.value() * dx;
}

}  // namespace

double mollification_entropy(const Density1D& density, const KernelSpec& kernel, double h,
                             const MollificationOptions& options) {
  require(static_cast<bool>(density.pdf), ErrorCode::invalid_parameter, "density has no pdf");
  require(kernel.dim == 1, ErrorCode::unsupported_dimension, "mollification entropy is one-dimensional");
  require(h > 0.0 && std::isfinite(h), ErrorCode::invalid_parameter, "h must be positive");
  require(density.scale > 0.0, ErrorCode::invalid_parameter, "density scale must be positive");
  const ScaledKernel kh(kernel, h);

  // Inner convolution q(x) = integral p(x - z) K_h(z) dz, composite 10-point
  // Gauss-Legendre over the kernel window; no node sits on the support edge.
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const double R = kernel.compact() ? kernel.support_radius : 12.0;
  const double zmax = R * std::sqrt(h);
  const int panels = std::max(1, (options.inner_nodes + 9) / 10);
  const double width = 2.0 * zmax / panels;
  std::vector<double> z, wz;
  Vector zi(1);
  auto node = [&](double at, double weight) {
    zi[0] = at;
    z.push_back(at);
    wz.push_back(weight * kh(zi));
  };
  for (int p = 0; p < panels; ++p) {
    const double c = -zmax + (p + 0.5) * width, hw = 0.5 * width;
    for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
      const double x = Rule::abscissa()[i], w = Rule::weights()[i];
      node(c + hw * x, hw * w);
      if (x != 0.0) node(c - hw * x, hw * w);
    }
  }
  const std::size_t N = z.size();

  double half = options.initial_half_width;
  for (;;) {
    const double reach = density.offset + half * density.scale;
    const double lo = density.center - reach;
    const double hi = density.center + reach;
    const double resolution = density.resolution > 0.0 ? density.resolution : density.scale;
    const Index points = static_cast<Index>(std::ceil(2.0 * reach / resolution * options.points_per_scale)) + 1;
    const double mass = trapezoid_mass(density, lo, hi, points);
    if (1.0 - mass < options.tail_mass) {
      const double dx = (hi - lo) / static_cast<double>(points - 1);
      CompensatedSum total;
      for (Index i = 0; i < points; ++i) {
        const double x = lo + dx * static_cast<double>(i);
        const double px = density.pdf(x);
        if (px <= 0.0) continue;
        CompensatedSum q;
        for (std::size_t j = 0; j < N; ++j) q.add(wz[j] * density.pdf(x - z[j]));
        const double qx = q.value();
        if (qx <= 0.0) return std::numeric_limits<double>::infinity();
        const double w = (i == 0 || i == points - 1) ? 0.5 : 1.0;
        total.add(w * px * std::log(px / qx));
      }
      return total.value() * dx;
    }
    if (half >= options.max_half_width)
      throw Error(ErrorCode::widen_domain,
                  "tail mass " + std::to_string(1.0 - mass) + " exceeds tolerance at the widest domain");
    half = std::min(half * 1.5, options.max_half_width);
  }
}

// Histograms -----------------------------------------------------------------

Histogram::Histogram(std::vector<HistogramAxis> axes) : axes_(std::move(axes)) {
  require(!axes_.empty(), ErrorCode::invalid_parameter, "histogram needs at least one axis");
  std::size_t cells = 1;
  for (const auto& a : axes_) {
    require(a.bins >= 1 && a.hi > a.lo && std::isfinite(a.lo) && std::isfinite(a.hi), ErrorCode::invalid_parameter,
            "histogram axis needs lo < hi and at least one bin");
    cells *= static_cast<std::size_t>(a.bins);
  }
  require(cells <= (std::size_t{1} << 26), ErrorCode::invalid_parameter, "histogram has too many cells");
  counts_.assign(cells, 0.0);
}

bool Histogram::add(const double* point) {
  std::size_t index = 0;
  for (const auto& a : axes_) {
    const double x = *point++;
    if (!(x >= a.lo && x <= a.hi)) return false;
    auto b = static_cast<long long>(std::floor((x - a.lo) / (a.hi - a.lo) * a.bins));
    b = std::clamp<long long>(b, 0, a.bins - 1);
    index = index * static_cast<std::size_t>(a.bins) + static_cast<std::size_t>(b);
  }
  counts_[index] += 1.0;
  total_ += 1.0;
  return true;
}

Vector Histogram::probabilities() const {
  require(total_ > 0.0, ErrorCode::empty_ensemble, "histogram is empty");
  return Eigen::Map<const Vector>(counts_.data(), static_cast<Index>(counts_.size())) / total_;
}

namespace {

Histogram bin_marginal(const ParticleEnsemble& e, const MarginalSelector& marginal,
                       const std::vector<HistogramAxis>& bins) {
  require(e.size() > 0, ErrorCode::empty_ensemble, "ensemble is empty");
  require(marginal.block >= 0 && marginal.block < e.blocks(), ErrorCode::invalid_parameter, "block out of range");
  require(marginal.component >= -1 && marginal.component < e.block_dim(), ErrorCode::invalid_parameter,
          "component out of range");
  std::vector<int> cols;
  if (marginal.component >= 0) {
    cols.push_back(marginal.block * e.block_dim() + marginal.component);
  } else {
    for (int c = 0; c < e.block_dim(); ++c) cols.push_back(marginal.block * e.block_dim() + c);
  }
  require(bins.size() == cols.size(), ErrorCode::invalid_parameter, "one histogram axis per selected coordinate");
  Histogram hist(bins);
  std::vector<double> point(cols.size());
  for (Index k = 0; k < e.size(); ++k) {
    for (std::size_t c = 0; c < cols.size(); ++c) point[c] = e.positions()(k, cols[c]);
    if (!hist.add(point.data()))
      throw Error(ErrorCode::invalid_parameter,
                  "sample of particle " + std::to_string(k) + " falls outside the histogram bins");
  }
  return hist;
}

}  // namespace

double histogram_tv(const ParticleEnsemble& e1, const ParticleEnsemble& e2, const MarginalSelector& marginal,
                    const std::vector<HistogramAxis>& bins) {
  require(e1.blocks() == e2.blocks() && e1.block_dim() == e2.block_dim(), ErrorCode::invalid_parameter,
          "ensembles have different shapes");
  return tv(bin_marginal(e1, marginal, bins).probabilities(), bin_marginal(e2, marginal, bins).probabilities());
}

// Inequality suite -----------------------------------------------------------

std::int64_t InequalityReport::violations() const {
  return std::count_if(records.begin(), records.end(), [](const InequalityRecord& r) { return !r.pass; });
}

void InequalityReport::write_csv(const std::filesystem::path& path) const {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error(ErrorCode::io, "cannot open " + path.string() + " for writing");
  std::fprintf(f, "trial,quantity,lhs,rhs,pass\n");
  for (const auto& r : records)
    std::fprintf(f, "%lld,%s,%.17g,%.17g,%s\n", static_cast<long long>(r.trial), r.quantity.c_str(), r.lhs, r.rhs,
                 r.pass ? "true" : "false");
  std::fclose(f);
}

namespace {

using Gen = std::mt19937_64;

Vector random_distribution(Gen& gen, Index k, bool allow_zeros) {
  std::exponential_distribution<double> expo(1.0);
  std::bernoulli_distribution drop(0.3);
  Vector w(k);
  for (Index i = 0; i < k; ++i) w[i] = expo(gen);
  if (allow_zeros) {
    for (Index i = 0; i < k; ++i)
      if (drop(gen)) w[i] = 0.0;
    if (w.sum() == 0.0) w[0] = 1.0;
  }
  return w / w.sum();
}

/// Row-stochastic k x l channel.
Matrix random_channel(Gen& gen, Index k, Index l) {
  Matrix M(k, l);
  for (Index i = 0; i < k; ++i) M.row(i) = random_distribution(gen, l, true).transpose();
  return M;
}

bool le(double lhs, double rhs) {
  if (std::isinf(rhs) && rhs > 0) return true;
  return lhs <= rhs + 1e-12 * std::max(1.0, std::abs(rhs));
}

}  // namespace

InequalityReport inequality_suite(std::int64_t trials, const InequalityOptions& options) {
  require(trials >= 1, ErrorCode::invalid_parameter, "trials must be positive");
  require(options.max_alphabet >= 2, ErrorCode::invalid_parameter, "max_alphabet must be at least 2");
  std::vector<std::vector<InequalityRecord>> per_trial(static_cast<std::size_t>(trials));

  parallel_for(static_cast<std::size_t>(trials), options.workers, [&](std::size_t first, std::size_t last) {
    for (std::size_t t = first; t < last; ++t) {
      std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
      Gen gen(seq);
      std::uniform_int_distribution<Index> size(2, options.max_alphabet);
      auto& out = per_trial[t];
      const auto trial = static_cast<std::int64_t>(t);
      auto record = [&](const char* name, double lhs, double rhs, bool pass) {
        out.push_back({trial, name, lhs, rhs, pass});
      };

      const Index k = size(gen);
      const Vector a = random_distribution(gen, k, true);
      const Vector b = random_distribution(gen, k, false);
      const double tv_ab = tv(a, b), kl_ab = kl(a, b), chi_ab = chi2(a, b), d4_ab = d_p(a, b, 4.0);

      record("pinsker", tv_ab * tv_ab, 2.0 * kl_ab, le(tv_ab * tv_ab, 2.0 * kl_ab));
      record("kl_le_chi2", kl_ab, chi_ab, le(kl_ab, chi_ab));

      const Index l = size(gen);
      const Matrix M = random_channel(gen, k, l);
      const Vector aM = M.transpose() * a, bM = M.transpose() * b;
      const double tv_m = tv(aM, bM), kl_m = kl(aM, bM), chi_m = chi2(aM, bM), d4_m = d_p(aM, bM, 4.0);
      record("dpi_tv", tv_m, tv_ab, le(tv_m, tv_ab));
      record("dpi_kl", kl_m, kl_ab, le(kl_m, kl_ab));
      record("dpi_chi2", chi_m, chi_ab, le(chi_m, chi_ab));
      record("dpi_d4", d4_m, d4_ab, le(d4_m, d4_ab));

      // Chain rule on a product alphabet with b's kernel strictly positive.
      const Index k2 = size(gen);
      const Matrix Ka = random_channel(gen, k, k2);
      Matrix Kb(k, k2);
      for (Index i = 0; i < k; ++i) Kb.row(i) = random_distribution(gen, k2, false).transpose();
      Vector joint_a(k * k2), joint_b(k * k2);
      double conditional = 0.0;
      for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < k2; ++j) {
          joint_a[i * k2 + j] = a[i] * Ka(i, j);
          joint_b[i * k2 + j] = b[i] * Kb(i, j);
        }
        if (a[i] > 0.0) conditional += a[i] * kl(Ka.row(i).transpose(), Kb.row(i).transpose());
      }
      const double kl_joint = kl(joint_a, joint_b);
      const double chain = kl_ab + conditional;
      record("chain_rule", kl_joint, chain, std::abs(kl_joint - chain) <= 1e-10 * std::max(1.0, std::abs(chain)));

      std::uniform_real_distribution<double> phi_dist(-3.0, 3.0);
      Vector phi(k);
      for (Index i = 0; i < k; ++i) phi[i] = phi_dist(gen);
      const double dv = a.dot(phi) - std::log(b.dot(phi.array().exp().matrix()));
      record("donsker_varadhan", dv, kl_ab, le(dv, kl_ab));
    }
  });

  InequalityReport report;
  report.trials = trials;
  for (auto& v : per_trial)
    for (auto& r : v) report.records.push_back(std::move(r));
  return report;
}

}  // namespace condmv
