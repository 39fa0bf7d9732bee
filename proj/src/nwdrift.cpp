#include "condmv/nwdrift.hpp"
#include "condmv/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

namespace condmv {

WeightedMeasure::WeightedMeasure(Matrix atoms, Vector weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  require(atoms_.rows() >= 1, ErrorCode::invalid_parameter, "measure needs at least one atom");
  require(weights_.size() == atoms_.rows(), ErrorCode::invalid_parameter, "one weight per atom");
  require((weights_.array() >= 0.0).all(), ErrorCode::invalid_parameter, "weights must be nonnegative");
  require(std::abs(weights_.sum() - 1.0) <= 1e-12, ErrorCode::invalid_parameter, "weights must sum to 1");
}

WeightedMeasure WeightedMeasure::empirical(const ParticleEnsemble& ensemble) {
  const Index n = ensemble.size();
  require(n >= 1, ErrorCode::empty_ensemble, "empirical measure of an empty ensemble");
  return WeightedMeasure(ensemble.positions(), Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

void DriftParams::validate() const {
  require(h > 0.0 && std::isfinite(h), ErrorCode::invalid_parameter, "h must be positive");
  require(epsilon > 0.0 && std::isfinite(epsilon), ErrorCode::invalid_parameter, "epsilon must be positive");
  require(static_cast<bool>(kernel.density), ErrorCode::invalid_parameter, "kernel has no density");
}

Strategy parse_strategy(std::string_view name) {
  if (name == "naive") return Strategy::naive;
  if (name == "celllist") return Strategy::celllist;
  throw Error(ErrorCode::invalid_parameter, "unknown strategy '" + std::string(name) + "'");
}

std::string to_string(Strategy s) { return s == Strategy::naive ? "naive" : "celllist"; }

Vector nw_block(const Vector& x_j, int j, const BlockFunction& b_ij, const WeightedMeasure& nu,
                const DriftParams& p, int block_dim) {
  p.validate();
  const int d = block_dim;
  require(x_j.size() == d, ErrorCode::invalid_parameter, "query must live in R^d");
  require(nu.atoms().cols() % d == 0 && j >= 0 && (j + 1) * d <= nu.atoms().cols(),
          ErrorCode::invalid_parameter, "block index out of range");
  const ScaledKernel kh(p.kernel, p.h);
  std::vector<CompensatedSum> num(static_cast<std::size_t>(d));
  CompensatedSum den;
  Vector mixed(nu.atoms().cols());
  Vector value = Vector::Zero(d);
  for (Index l = 0; l < nu.size(); ++l) {
    mixed = nu.atoms().row(l).transpose();
    const double k = kh(x_j - mixed.segment(static_cast<Index>(j) * d, d));
    const double wk = nu.weights()[l] * k;
    den.add(wk);
    if (!b_ij || wk == 0.0) continue;
    mixed.segment(static_cast<Index>(j) * d, d) = x_j;
    b_ij(mixed, value);
    for (int c = 0; c < d; ++c) num[static_cast<std::size_t>(c)].add(wk * value[c]);
  }
  const double floor = std::max(p.epsilon, den.value());
  Vector out(d);
  for (int c = 0; c < d; ++c) out[c] = num[static_cast<std::size_t>(c)].value() / floor;
  return out;
}

namespace {

/// Coefficients of one conditioning block j, grouped by form.
struct BlockPlan {
  int j = 0;
  std::vector<int> query_only;
  std::vector<int> atom_only;  // channel 1 + slot * d holds row atom_only[slot]
  std::vector<int> general;

  int channels(int d) const { return 1 + static_cast<int>(atom_only.size()) * d; }
};

BlockPlan plan_block(const ModelSpec& model, int j) {
  BlockPlan plan;
  plan.j = j;
  for (int i = 0; i < model.m; ++i) {
    const Coefficient& c = model.coefficient(i, j);
    if (!c) continue;
    switch (c.form) {
      case CoefficientForm::query_only: plan.query_only.push_back(i); break;
      case CoefficientForm::atom_only: plan.atom_only.push_back(i); break;
      case CoefficientForm::general: plan.general.push_back(i); break;
    }
  }
  return plan;
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Squared block-j distances from particle k to particles [begin, begin + len).
Array squared_distances(const Matrix& pos, int j, int d, Index k, Index begin, Index len) {
  const Index c0 = static_cast<Index>(j) * d;
  Array r2 = (pos.col(c0).segment(begin, len).array() - pos(k, c0)).square();
  for (int c = 1; c < d; ++c) r2 += (pos.col(c0 + c).segment(begin, len).array() - pos(k, c0 + c)).square();
  return r2;
}

/// Channel values per atom: column 0 is 1 (denominator), then atom_only
/// coefficients evaluated at each atom.
Matrix channel_matrix(const ParticleEnsemble& e, const ModelSpec& model, const BlockPlan& plan,
                      const RowMatrix& atoms, int workers) {
  const Index n = e.size();
  const int d = e.block_dim();
  Matrix g(n, plan.channels(d));
  g.col(0).setOnes();
  if (plan.atom_only.empty()) return g;
  parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t b, std::size_t end) {
    Vector out(d);
    for (std::size_t l = b; l < end; ++l) {
      const auto row = atoms.row(static_cast<Index>(l));
      for (std::size_t s = 0; s < plan.atom_only.size(); ++s) {
        model.coefficient(plan.atom_only[s], plan.j).eval(row.transpose(), out);
        g.row(static_cast<Index>(l)).segment(1 + static_cast<Index>(s) * d, d) = out.transpose();
      }
    }
  });
  return g;
}

/// All-pairs sums S(k, c) = sum_l K_h(X_k^j - X_l^j) G(l, c).
///
/// Particles are cut into tiles; each tile pair (I, J), I <= J, evaluates the
/// kernel once per pair of particles and fills the per-tile partial sums of
/// both rows. Partials land in fixed slots and are combined per row in tile
/// order, so the result does not depend on the worker count.
Matrix all_pairs_sums(const Matrix& pos, int j, int d, const ScaledKernel& kh, const Matrix& g, int workers) {
  const Index n = pos.rows();
  const Index channels = g.cols();
  const Index tile = std::max<Index>(256, (n + 63) / 64);
  const Index tiles = (n + tile - 1) / tile;
  std::vector<double> partial(static_cast<std::size_t>(n * tiles * channels), 0.0);
  auto slot = [&](Index k, Index t, Index c) -> double& {
    return partial[static_cast<std::size_t>((k * tiles + t) * channels + c)];
  };

  std::vector<std::pair<Index, Index>> pairs;
  for (Index a = 0; a < tiles; ++a)
    for (Index b = a; b < tiles; ++b) pairs.emplace_back(a, b);

  parallel_for(pairs.size(), workers, [&](std::size_t first, std::size_t last) {
    Eigen::ArrayXXd column_acc;
    for (std::size_t p = first; p < last; ++p) {
      const auto [ti, tj] = pairs[p];
      const Index ib = ti * tile, ilen = std::min(tile, n - ib);
      const Index jb = tj * tile, jlen = std::min(tile, n - jb);
      const bool diagonal = ti == tj;
      if (!diagonal) column_acc.setZero(jlen, channels);
      for (Index k = ib; k < ib + ilen; ++k) {
        const Array w = kh.on_squared_distance(squared_distances(pos, j, d, k, jb, jlen));
        slot(k, tj, 0) = w.sum();
        for (Index c = 1; c < channels; ++c) slot(k, tj, c) = (w * g.col(c).segment(jb, jlen).array()).sum();
        if (diagonal) continue;
        column_acc.col(0) += w;
        for (Index c = 1; c < channels; ++c) column_acc.col(c) += w * g(k, c);
      }
      if (diagonal) continue;
      for (Index l = 0; l < jlen; ++l)
        for (Index c = 0; c < channels; ++c) slot(jb + l, ti, c) = column_acc(l, c);
    }
  });

  Matrix sums(n, channels);
  for (Index k = 0; k < n; ++k) {
    for (Index c = 0; c < channels; ++c) {
      CompensatedSum acc;
      for (Index t = 0; t < tiles; ++t) acc.add(slot(k, t, c));
      sums(k, c) = acc.value();
    }
  }
  return sums;
}

/// Uniform grid over the block-j projection with cell size equal to the
/// scaled support radius, so every atom within reach of a query sits in one
/// of the 3^d neighboring cells. Atoms are stored in cell order, which makes
/// the neighborhood of a query 3^(d-1) contiguous runs.
class CellGrid {
 public:
  CellGrid(const Matrix& pos, int j, int d, double cell) : d_(d), cell_(cell) {
    require(d <= kMaxDim, ErrorCode::unsupported_dimension, "celllist supports block dimension up to 8");
    const Index n = pos.rows();
    const Index c0 = static_cast<Index>(j) * d;
    std::vector<std::int64_t> coords(static_cast<std::size_t>(n * d));
    for (Index k = 0; k < n; ++k)
      for (int c = 0; c < d; ++c) coords[static_cast<std::size_t>(k * d + c)] = cell_of(pos(k, c0 + c));
    order_.resize(static_cast<std::size_t>(n));
    std::iota(order_.begin(), order_.end(), Index{0});
    auto key = [&](Index k) { return std::span<const std::int64_t>(&coords[static_cast<std::size_t>(k * d)], d); };
    std::stable_sort(order_.begin(), order_.end(), [&](Index a, Index b) {
      const auto ka = key(a), kb = key(b);
      return std::lexicographical_compare(ka.begin(), ka.end(), kb.begin(), kb.end());
    });
    sorted_.resize(n, d);
    for (std::size_t s = 0; s < order_.size(); ++s) {
      const Index k = order_[s];
      sorted_.row(static_cast<Index>(s)) = pos.row(k).segment(c0, d);
      const auto kk = key(k);
      if (s == 0 || !std::equal(kk.begin(), kk.end(), key(order_[s - 1]).begin())) {
        keys_.insert(keys_.end(), kk.begin(), kk.end());
        start_.push_back(static_cast<Index>(s));
      }
    }
    start_.push_back(n);
  }

  const std::vector<Index>& order() const noexcept { return order_; }
  /// Block-j coordinates in cell order.
  const Matrix& sorted() const noexcept { return sorted_; }

  /// Calls f(begin, length) for each run of sorted atoms near the query.
  template <typename F>
  void for_each_run(const double* query, F&& f) const {
    std::int64_t base[kMaxDim], lo[kMaxDim], hi[kMaxDim];
    for (int c = 0; c < d_; ++c) base[c] = cell_of(query[c]);
    int combos = 1;
    for (int c = 0; c + 1 < d_; ++c) combos *= 3;
    for (int code = 0; code < combos; ++code) {
      int rest = code;
      for (int c = d_ - 2; c >= 0; --c) {
        lo[c] = hi[c] = base[c] + (rest % 3) - 1;
        rest /= 3;
      }
      lo[d_ - 1] = base[d_ - 1] - 1;
      hi[d_ - 1] = base[d_ - 1] + 2;
      const Index a = lower_bound(lo), b = lower_bound(hi);
      if (a < b) f(start_[static_cast<std::size_t>(a)], start_[static_cast<std::size_t>(b)] - start_[static_cast<std::size_t>(a)]);
    }
  }

  static constexpr int kMaxDim = 8;

 private:
  std::int64_t cell_of(double x) const { return static_cast<std::int64_t>(std::floor(x / cell_)); }

  /// First cell whose key is not below probe.
  Index lower_bound(const std::int64_t* probe) const {
    Index lo = 0, hi = static_cast<Index>(start_.size()) - 1;
    while (lo < hi) {
      const Index mid = (lo + hi) / 2;
      const auto* k = &keys_[static_cast<std::size_t>(mid * d_)];
      if (std::lexicographical_compare(k, k + d_, probe, probe + d_))
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

  int d_;
  double cell_;
  std::vector<Index> order_;
  Matrix sorted_;
  std::vector<std::int64_t> keys_;
  std::vector<Index> start_;
};

/// Per-query sums over the cell-list neighborhood, or over all atoms when
/// grid is null (naive with general coefficients). Fills channel sums and the
/// general-coefficient numerators for each query.
void per_query_sums(const ParticleEnsemble& e, const ModelSpec& model, const BlockPlan& plan,
                    const ScaledKernel& kh, const Matrix& g, const RowMatrix& atoms, const CellGrid* grid,
                    int workers, Matrix& sums, Matrix& general) {
  const Index n = e.size();
  const int d = e.block_dim();
  const Index channels = g.cols();
  const Index c0 = static_cast<Index>(plan.j) * d;
  sums.resize(n, channels);
  general.setZero(n, static_cast<Index>(plan.general.size()) * d);

  // Atom coordinates and channel values in visiting order.
  const Matrix coords = grid ? grid->sorted() : Matrix(e.positions().middleCols(c0, d));
  Matrix ordered_g(n, channels);
  if (grid) {
    for (Index s = 0; s < n; ++s) ordered_g.row(s) = g.row(grid->order()[static_cast<std::size_t>(s)]);
  } else {
    ordered_g = g;
  }

  parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t first, std::size_t last) {
    std::vector<CompensatedSum> acc(static_cast<std::size_t>(channels));
    std::vector<CompensatedSum> gacc(plan.general.size() * static_cast<std::size_t>(d));
    Vector mixed(e.state_dim()), out(d), query(d);
    Array r2;
    auto run = [&](Index begin, Index len) {
      r2 = (coords.col(0).segment(begin, len).array() - query[0]).square();
      for (int c = 1; c < d; ++c) r2 += (coords.col(c).segment(begin, len).array() - query[c]).square();
      const Array w = kh.on_squared_distance(r2);
      acc[0].add(w.sum());
      for (Index c = 1; c < channels; ++c)
        acc[static_cast<std::size_t>(c)].add((w * ordered_g.col(c).segment(begin, len).array()).sum());
      if (plan.general.empty()) return;
      for (Index s = 0; s < len; ++s) {
        const double ws = w[s];
        if (ws == 0.0) continue;
        const Index l = grid ? grid->order()[static_cast<std::size_t>(begin + s)] : begin + s;
        mixed = atoms.row(l).transpose();
        mixed.segment(c0, d) = query;
        for (std::size_t gi = 0; gi < plan.general.size(); ++gi) {
          model.coefficient(plan.general[gi], plan.j).eval(mixed, out);
          for (int c = 0; c < d; ++c)
            gacc[gi * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)].add(ws * out[c]);
        }
      }
    };
    for (std::size_t q = first; q < last; ++q) {
      const Index k = static_cast<Index>(q);
      query = atoms.row(k).segment(c0, d).transpose();
      std::fill(acc.begin(), acc.end(), CompensatedSum{});
      std::fill(gacc.begin(), gacc.end(), CompensatedSum{});
      if (grid) {
        grid->for_each_run(query.data(), run);
      } else {
        run(0, n);
      }
      for (Index c = 0; c < channels; ++c) sums(k, c) = acc[static_cast<std::size_t>(c)].value();
      for (std::size_t s = 0; s < gacc.size(); ++s) general(k, static_cast<Index>(s)) = gacc[s].value();
    }
  });
}

struct BlockSums {
  Matrix channels;  // n x C raw kernel sums
  Matrix general;   // n x (|general| d) raw numerators
};

BlockSums block_sums(const ParticleEnsemble& e, const ModelSpec* model, const BlockPlan& plan,
                     const DriftParams& p, const DriftOptions& options, const RowMatrix& atoms) {
  const ScaledKernel kh(p.kernel, p.h);
  require(p.kernel.radial(), ErrorCode::invalid_parameter, "particle drift needs a radial kernel");
  require(p.kernel.dim == e.block_dim(), ErrorCode::invalid_parameter, "kernel dimension must equal d");
  const Matrix g = channel_matrix(e, *model, plan, atoms, options.workers);
  BlockSums out;
  if (options.strategy == Strategy::celllist) {
    if (!p.kernel.compact())
      throw Error(ErrorCode::strategy_unsupported, "celllist strategy needs a compactly supported kernel");
    const CellGrid grid(e.positions(), plan.j, e.block_dim(), kh.scaled_radius());
    per_query_sums(e, *model, plan, kh, g, atoms, &grid, options.workers, out.channels, out.general);
  } else if (!plan.general.empty()) {
    per_query_sums(e, *model, plan, kh, g, atoms, nullptr, options.workers, out.channels, out.general);
  } else {
    out.channels = all_pairs_sums(e.positions(), plan.j, e.block_dim(), kh, g, options.workers);
  }
  return out;
}

}  // namespace

Matrix particle_drift(const ParticleEnsemble& ensemble, const ModelSpec& model, const DriftParams& p,
                      const DriftOptions& options, Matrix* denominators) {
  p.validate();
  const Index n = ensemble.size();
  require(n >= 1, ErrorCode::empty_ensemble, "drift of an empty ensemble");
  require(ensemble.blocks() == model.m && ensemble.block_dim() == model.d, ErrorCode::invalid_parameter,
          "ensemble dimensions do not match the model");
  const int m = model.m;
  const int d = model.d;
  const RowMatrix atoms = ensemble.positions();
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<BlockPlan> plans;
  std::vector<BlockSums> sums;
  for (int j = 0; j < m; ++j) {
    plans.push_back(plan_block(model, j));
    const BlockPlan& plan = plans.back();
    if (!plan.general.empty() || !plan.atom_only.empty() || !plan.query_only.empty() || denominators) {
      sums.push_back(block_sums(ensemble, &model, plans.back(), p, options, atoms));
    } else {
      sums.emplace_back();
    }
  }
  if (denominators) {
    denominators->resize(n, m);
    for (int j = 0; j < m; ++j) denominators->col(j) = sums[static_cast<std::size_t>(j)].channels.col(0) * inv_n;
  }

  Matrix drift(n, model.state_dim());
  parallel_for(static_cast<std::size_t>(n), options.workers, [&](std::size_t first, std::size_t last) {
    Vector x(model.state_dim()), v(model.state_dim()), out(d);
    for (std::size_t q = first; q < last; ++q) {
      const Index k = static_cast<Index>(q);
      x = atoms.row(k).transpose();
      v.setZero();
      if (model.potential) model.potential(x, v);
      for (int j = 0; j < m; ++j) {
        const BlockPlan& plan = plans[static_cast<std::size_t>(j)];
        const BlockSums& s = sums[static_cast<std::size_t>(j)];
        if (s.channels.size() == 0) continue;
        const double den = s.channels(k, 0) * inv_n;
        const double floor = std::max(p.epsilon, den);
        for (int i : plan.query_only) {
          model.coefficient(i, j).eval(x, out);
          v.segment(static_cast<Index>(i) * d, d) += out * (den / floor);
        }
        for (std::size_t a = 0; a < plan.atom_only.size(); ++a) {
          const Index c = 1 + static_cast<Index>(a) * d;
          v.segment(static_cast<Index>(plan.atom_only[a]) * d, d) +=
              s.channels.row(k).segment(c, d).transpose() * (inv_n / floor);
        }
        for (std::size_t gi = 0; gi < plan.general.size(); ++gi) {
          v.segment(static_cast<Index>(plan.general[gi]) * d, d) +=
              s.general.row(k).segment(static_cast<Index>(gi) * d, d).transpose() * (inv_n / floor);
        }
      }
      drift.row(k) = v.transpose();
    }
  });
  return drift;
}

Vector block_denominators(const ParticleEnsemble& ensemble, int j, const DriftParams& p,
                          const DriftOptions& options) {
  p.validate();
  require(ensemble.size() >= 1, ErrorCode::empty_ensemble, "denominators of an empty ensemble");
  require(j >= 0 && j < ensemble.blocks(), ErrorCode::invalid_parameter, "block index out of range");
  BlockPlan plan;
  plan.j = j;
  const RowMatrix atoms = ensemble.positions();
  // A coefficient-free model: only the denominator channel is summed.
  ModelSpec shell;
  shell.m = ensemble.blocks();
  shell.d = ensemble.block_dim();
  shell.b.resize(static_cast<std::size_t>(shell.m * shell.m));
  const BlockSums s = block_sums(ensemble, &shell, plan, p, options, atoms);
  return s.channels.col(0) / static_cast<double>(ensemble.size());
}

double floor_hit_rate(const ParticleEnsemble& ensemble, int j, const DriftParams& p, const DriftOptions& options) {
  const Vector den = block_denominators(ensemble, j, p, options);
  const Index hits = (den.array() < p.epsilon).count();
  return static_cast<double>(hits) / static_cast<double>(den.size());
}

}  // namespace condmv
