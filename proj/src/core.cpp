#include "mpr/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "mpr/rng.hpp"

namespace mpr {

namespace {

constexpr long long kMaxSubsetScan = 1'000'000;
constexpr double kMaxBruteForceWork = 1e7;

void require_compatible(const SampleSet& g, const SampleSet& r) {
  if (g.dim() != r.dim())
    throw input_error("sample sets have mismatched dimensions: " +
                      std::to_string(g.dim()) + " vs " + std::to_string(r.dim()));
  if (g.schema() && r.schema() && !(*g.schema() == *r.schema()))
    throw input_error("sample sets have mismatched schemas");
}

void require_sign_valued(const SampleSet& s) {
  if (!s.sign_valued())
    throw input_error("operation requires -1/+1 valued features (set '" + s.label() +
                      "' is not sign-valued)");
}

void check_subset(std::span<const int> features, int dim) {
  if (features.empty()) throw input_error("feature subset must be nonempty");
  if (features.size() > 63) throw guard_error("feature subset wider than 63 bits");
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (features[j] < 0 || features[j] >= dim)
      throw input_error("feature index " + std::to_string(features[j]) + " out of range");
    if (j > 0 && features[j] <= features[j - 1])
      throw input_error("feature subset must be strictly increasing");
  }
}

// Leaf rule shared by the closed form and the exact variant: +1 wherever the
// generated cell mass is at least the reference mass.
std::vector<std::int8_t> majority_leaf_signs(const CellDistribution& g,
                                             const CellDistribution& r) {
  const std::size_t cells = std::size_t{1} << g.arity;
  std::vector<std::int8_t> signs(cells, 1);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    const auto gi = g.mass.find(cell);
    const auto ri = r.mass.find(cell);
    const double gm = gi == g.mass.end() ? 0.0 : gi->second;
    const double rm = ri == r.mass.end() ? 0.0 : ri->second;
    signs[cell] = gm >= rm ? 1 : -1;
  }
  return signs;
}

struct TreeScanResult {
  double value = -1.0;
  std::vector<int> subset;
  CellDistribution marg_g, marg_r;
};

// Scans all size-l subsets with the given marginal providers; keeps the
// first (lexicographically smallest) maximizer.
TreeScanResult scan_subsets(
    int dim, int depth,
    const std::function<CellDistribution(std::span<const int>)>& marginal_g,
    const std::function<CellDistribution(std::span<const int>)>& marginal_r) {
  if (depth < 1 || depth > dim)
    throw input_error("tree depth " + std::to_string(depth) +
                      " out of range for dimension " + std::to_string(dim));
  const double count = subset_count(dim, depth);
  if (count > static_cast<double>(kMaxSubsetScan))
    throw guard_error("tree scan over " +
                      std::to_string(static_cast<long long>(count)) +
                      " subsets exceeds the enumeration limit");
  TreeScanResult best;
  SubsetEnumerator en(dim, depth);
  std::vector<int> subset;
  while (en.next(subset)) {
    CellDistribution mg = marginal_g(subset);
    CellDistribution mr = marginal_r(subset);
    const double value = 2.0 * tv_distance(mg, mr);
    if (value > best.value) {
      best.value = value;
      best.subset = subset;
      best.marg_g = std::move(mg);
      best.marg_r = std::move(mr);
    }
  }
  return best;
}

MprEstimate tree_estimate_from_scan(TreeScanResult&& scan, int depth, long long k,
                                    long long m) {
  MprEstimate est;
  est.value = scan.value;
  est.spec = DecisionTree{depth};
  est.witness = make_tree_witness(std::move(scan.subset),
                                  majority_leaf_signs(scan.marg_g, scan.marg_r));
  est.k = k;
  est.m = m;
  return est;
}

MprEstimate linear_estimate(std::vector<double> diff, long long k, long long m) {
  double norm2 = 0.0;
  for (double v : diff) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  MprEstimate est;
  est.value = norm;
  est.spec = BoundedLinear{};
  est.k = k;
  est.m = m;
  if (norm > 0.0) {
    for (double& v : diff) v /= norm;
    est.witness = make_linear_witness(std::move(diff));
  } else {
    // the supremum is genuinely 0; report the zero direction
    est.witness = LinearWitness{std::vector<double>(diff.size(), 0.0)};
  }
  return est;
}

double explicit_mean(const Indicator& ind, const SampleSet& s) {
  double p = 0.0;
  for (long long i = 0; i < s.size(); ++i)
    if (ind.when.matches(s.row(i))) p += s.weight(i);
  return ind.out_miss + (ind.out_hit - ind.out_miss) * p;
}

double explicit_mean(const Indicator& ind, const ExactDistribution& d) {
  double p = 0.0;
  for (long long cell = 0; cell < d.cell_count(); ++cell) {
    if (d.prob(cell) == 0.0) continue;
    const auto x = d.schema().encode_cell(cell);
    if (ind.when.matches(x)) p += d.prob(cell);
  }
  return ind.out_miss + (ind.out_hit - ind.out_miss) * p;
}

MprEstimate explicit_estimate(const ExplicitSet& spec,
                              const std::function<double(const Indicator&)>& mean_g,
                              const std::function<double(const Indicator&)>& mean_r,
                              long long k, long long m) {
  if (spec.indicators.empty()) throw input_error("explicit set must be nonempty");
  MprEstimate est;
  est.spec = spec;
  est.k = k;
  est.m = m;
  double best = -1.0;
  int best_idx = 0;
  for (int i = 0; i < static_cast<int>(spec.indicators.size()); ++i) {
    const double diff = std::abs(mean_g(spec.indicators[i]) - mean_r(spec.indicators[i]));
    if (diff > best) {
      best = diff;
      best_idx = i;
    }
  }
  est.value = best;
  est.witness = IndicatorWitness{best_idx, spec.indicators[best_idx]};
  return est;
}

}  // namespace

MeanDifferenceVector mean_diff_vector(const SampleSet& g, const SampleSet& r) {
  require_compatible(g, r);
  MeanDifferenceVector d;
  d.v = g.mean_vector();
  const auto rm = r.mean_vector();
  for (std::size_t j = 0; j < d.v.size(); ++j) d.v[j] -= rm[j];
  d.k = g.size();
  d.m = r.size();
  return d;
}

double tv_distance(const CellDistribution& a, const CellDistribution& b) {
  if (a.arity != b.arity)
    throw input_error("cell distributions have mismatched arity: " +
                      std::to_string(a.arity) + " vs " + std::to_string(b.arity));
  double l1 = 0.0;
  auto ia = a.mass.begin();
  auto ib = b.mass.begin();
  while (ia != a.mass.end() || ib != b.mass.end()) {
    if (ib == b.mass.end() || (ia != a.mass.end() && ia->first < ib->first)) {
      l1 += std::abs(ia->second);
      ++ia;
    } else if (ia == a.mass.end() || ib->first < ia->first) {
      l1 += std::abs(ib->second);
      ++ib;
    } else {
      l1 += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return 0.5 * l1;
}

CellDistribution marginal_cells(const SampleSet& s, std::span<const int> features) {
  check_subset(features, s.dim());
  require_sign_valued(s);
  CellDistribution dist;
  dist.arity = static_cast<int>(features.size());
  for (long long i = 0; i < s.size(); ++i) {
    const auto row = s.row(i);
    std::uint64_t key = 0;
    for (std::size_t j = 0; j < features.size(); ++j)
      if (row[features[j]] > 0) key |= std::uint64_t{1} << j;
    dist.mass[key] += s.weight(i);
  }
  return dist;
}

CellDistribution exact_marginal_cells(const ExactDistribution& d,
                                      std::span<const int> features) {
  check_subset(features, d.schema().feature_dim());
  CellDistribution dist;
  dist.arity = static_cast<int>(features.size());
  for (long long cell = 0; cell < d.cell_count(); ++cell) {
    if (d.prob(cell) == 0.0) continue;
    const auto x = d.schema().encode_cell(cell);
    std::uint64_t key = 0;
    for (std::size_t j = 0; j < features.size(); ++j)
      if (x[features[j]] > 0) key |= std::uint64_t{1} << j;
    dist.mass[key] += d.prob(cell);
  }
  return dist;
}

MprEstimate mpr_linear(const SampleSet& g, const SampleSet& r) {
  auto diff = mean_diff_vector(g, r);
  return linear_estimate(std::move(diff.v), diff.k, diff.m);
}

MprEstimate mpr_linear(const SampleSet& g, const ExactDistribution& r) {
  if (g.dim() != r.schema().feature_dim())
    throw input_error("sample set and exact reference have mismatched dimensions");
  auto v = g.mean_vector();
  const auto rm = r.mean_vector();
  for (std::size_t j = 0; j < v.size(); ++j) v[j] -= rm[j];
  return linear_estimate(std::move(v), g.size(), 0);
}

MprEstimate mpr_tree(const SampleSet& g, const SampleSet& r, int depth) {
  require_compatible(g, r);
  require_sign_valued(g);
  require_sign_valued(r);
  auto scan = scan_subsets(
      g.dim(), depth, [&](std::span<const int> s) { return marginal_cells(g, s); },
      [&](std::span<const int> s) { return marginal_cells(r, s); });
  return tree_estimate_from_scan(std::move(scan), depth, g.size(), r.size());
}

MprEstimate mpr_tree(const SampleSet& g, const ExactDistribution& r, int depth) {
  if (g.dim() != r.schema().feature_dim())
    throw input_error("sample set and exact reference have mismatched dimensions");
  require_sign_valued(g);
  auto scan = scan_subsets(
      g.dim(), depth, [&](std::span<const int> s) { return marginal_cells(g, s); },
      [&](std::span<const int> s) { return exact_marginal_cells(r, s); });
  return tree_estimate_from_scan(std::move(scan), depth, g.size(), 0);
}

MprEstimate mpr_explicit(const SampleSet& g, const SampleSet& r, const ExplicitSet& spec) {
  require_compatible(g, r);
  validate(FunctionClassSpec{spec}, g.dim());
  return explicit_estimate(
      spec, [&](const Indicator& ind) { return explicit_mean(ind, g); },
      [&](const Indicator& ind) { return explicit_mean(ind, r); }, g.size(), r.size());
}

MprEstimate mpr_explicit(const SampleSet& g, const ExactDistribution& r,
                         const ExplicitSet& spec) {
  validate(FunctionClassSpec{spec}, g.dim());
  return explicit_estimate(
      spec, [&](const Indicator& ind) { return explicit_mean(ind, g); },
      [&](const Indicator& ind) { return explicit_mean(ind, r); }, g.size(), 0);
}

MprEstimate compute_mpr(const FunctionClassSpec& spec, const SampleSet& g,
                        const ReferenceSpec& r) {
  if (const auto* tree = std::get_if<DecisionTree>(&spec)) {
    return r.is_exact() ? mpr_tree(g, *r.exact(), tree->depth)
                        : mpr_tree(g, *r.samples(), tree->depth);
  }
  if (std::holds_alternative<BoundedLinear>(spec)) {
    return r.is_exact() ? mpr_linear(g, *r.exact()) : mpr_linear(g, *r.samples());
  }
  const auto& ex = std::get<ExplicitSet>(spec);
  return r.is_exact() ? mpr_explicit(g, *r.exact(), ex)
                      : mpr_explicit(g, *r.samples(), ex);
}

MprEstimate mpr_exact(const ExactDistribution& p, const ExactDistribution& r,
                      const FunctionClassSpec& spec) {
  if (!(p.schema() == r.schema()))
    throw input_error("exact distributions have mismatched schemas");
  if (const auto* tree = std::get_if<DecisionTree>(&spec)) {
    auto scan = scan_subsets(
        p.schema().feature_dim(), tree->depth,
        [&](std::span<const int> s) { return exact_marginal_cells(p, s); },
        [&](std::span<const int> s) { return exact_marginal_cells(r, s); });
    return tree_estimate_from_scan(std::move(scan), tree->depth, 0, 0);
  }
  if (std::holds_alternative<BoundedLinear>(spec)) {
    auto v = p.mean_vector();
    const auto rm = r.mean_vector();
    for (std::size_t j = 0; j < v.size(); ++j) v[j] -= rm[j];
    return linear_estimate(std::move(v), 0, 0);
  }
  const auto& ex = std::get<ExplicitSet>(spec);
  validate(spec, p.schema().feature_dim());
  return explicit_estimate(
      ex, [&](const Indicator& ind) { return explicit_mean(ind, p); },
      [&](const Indicator& ind) { return explicit_mean(ind, r); }, 0, 0);
}

double brute_force_linear(const SampleSet& g, const SampleSet& r, long long trials,
                          std::uint64_t seed) {
  require_compatible(g, r);
  if (trials < 1) throw input_error("trials must be >= 1");
  const int d = g.dim();
  Rng rng(seed);
  std::vector<double> w(d);
  double best = 0.0;
  for (long long t = 0; t < trials; ++t) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int j = 0; j < d; ++j) {
        w[j] = rng.gaussian();
        norm2 += w[j] * w[j];
      }
    } while (norm2 == 0.0);
    const double inv = 1.0 / std::sqrt(norm2);
    for (int j = 0; j < d; ++j) w[j] *= inv;

    double mg = 0.0, mr = 0.0;
    for (long long i = 0; i < g.size(); ++i) {
      const auto row = g.row(i);
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += w[j] * row[j];
      mg += g.weight(i) * dot;
    }
    for (long long i = 0; i < r.size(); ++i) {
      const auto row = r.row(i);
      double dot = 0.0;
      for (int j = 0; j < d; ++j) dot += w[j] * row[j];
      mr += r.weight(i) * dot;
    }
    best = std::max(best, std::abs(mg - mr));
  }
  return best;
}

std::pair<double, Witness> brute_force_tree(const SampleSet& g, const SampleSet& r,
                                            int depth) {
  require_compatible(g, r);
  require_sign_valued(g);
  require_sign_valued(r);
  const int n = g.dim();
  if (depth < 1 || depth > n) throw input_error("tree depth out of range");
  if (depth > 4) throw guard_error("exhaustive tree search limited to depth 4");
  const double labelings = std::pow(2.0, static_cast<double>(1 << depth));
  if (subset_count(n, depth) * labelings > kMaxBruteForceWork)
    throw guard_error("exhaustive tree search work exceeds the limit");

  const std::size_t cells = std::size_t{1} << depth;
  double best = -1.0;
  std::vector<int> best_subset;
  std::uint64_t best_assignment = 0;

  SubsetEnumerator en(n, depth);
  std::vector<int> subset;
  std::vector<double> mass_g(cells), mass_r(cells), diff(cells);
  while (en.next(subset)) {
    std::fill(mass_g.begin(), mass_g.end(), 0.0);
    std::fill(mass_r.begin(), mass_r.end(), 0.0);
    for (long long i = 0; i < g.size(); ++i) {
      const auto row = g.row(i);
      std::size_t key = 0;
      for (int j = 0; j < depth; ++j)
        if (row[subset[j]] > 0) key |= std::size_t{1} << j;
      mass_g[key] += g.weight(i);
    }
    for (long long i = 0; i < r.size(); ++i) {
      const auto row = r.row(i);
      std::size_t key = 0;
      for (int j = 0; j < depth; ++j)
        if (row[subset[j]] > 0) key |= std::size_t{1} << j;
      mass_r[key] += r.weight(i);
    }
    for (std::size_t cell = 0; cell < cells; ++cell)
      diff[cell] = mass_g[cell] - mass_r[cell];
    const std::uint64_t assignments = std::uint64_t{1} << cells;
    for (std::uint64_t a = 0; a < assignments; ++a) {
      double sum = 0.0;
      for (std::size_t cell = 0; cell < cells; ++cell)
        sum += ((a >> cell) & 1 ? 1.0 : -1.0) * diff[cell];
      const double value = std::abs(sum);
      if (value > best) {
        best = value;
        best_subset = subset;
        best_assignment = a;
      }
    }
  }

  std::vector<std::int8_t> signs(cells);
  for (std::size_t cell = 0; cell < cells; ++cell)
    signs[cell] = (best_assignment >> cell) & 1 ? 1 : -1;
  return {best, make_tree_witness(std::move(best_subset), std::move(signs))};
}

}  // namespace mpr
