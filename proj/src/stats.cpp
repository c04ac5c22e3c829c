#include "mpr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mpr/parallel.hpp"
#include "mpr/rng.hpp"

namespace mpr::stats {

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 3e-15;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 500; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

bool all_equal(std::span<const double> xs) {
  for (double x : xs)
    if (x != xs[0]) return false;
  return true;
}

// Exactly zero for constant data: the degenerate-rule paths key off this.
double sample_variance(std::span<const double> xs, double mean) {
  if (all_equal(xs)) return 0.0;
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return s / static_cast<double>(xs.size() - 1);
}

// Linear interpolation between order statistics, as in the common
// "type 7" definition.
double quantile_sorted(std::span<const double> sorted, double p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void validate_bound_common(const BoundInputs& in) {
  if (in.range_b <= 0.0) throw input_error("range constant B must be positive");
  if (in.k + in.m < 1) throw input_error("k + m must be >= 1");
  if (in.rad_g < 0.0 || in.rad_r < 0.0)
    throw input_error("Rademacher inputs must be nonnegative");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw input_error("incomplete beta requires a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (df <= 0.0) throw input_error("degrees of freedom must be positive");
  if (t == 0.0) return 0.5;
  const double x = df / (df + t * t);
  const double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
  return t < 0.0 ? tail : 1.0 - tail;
}

double variance_across_prompts(std::span<const double> values) {
  if (values.size() < 2)
    throw input_error("variance needs at least 2 values, got " +
                      std::to_string(values.size()));
  return sample_variance(values, mean_of(values));
}

BootstrapResult bootstrap_mpr(const SampleSet& g, const ReferenceSpec& r,
                              const FunctionClassSpec& spec, const BootstrapConfig& cfg,
                              std::uint64_t seed) {
  if (cfg.resample_size < 1) throw input_error("resample size must be >= 1");
  if (cfg.repetitions < 2) throw input_error("need >= 2 repetitions");
  if (cfg.alpha <= 0.0 || cfg.alpha >= 1.0) throw input_error("alpha must be in (0,1)");

  BootstrapResult result;
  result.alpha = cfg.alpha;
  result.point_estimate = compute_mpr(spec, g, r).value;
  result.replicates.resize(cfg.repetitions);

  // weighted sets resample by weight; the resample itself is uniform
  std::vector<double> cdf;
  if (!g.uniform_weights()) {
    cdf.resize(g.size());
    double acc = 0.0;
    for (long long i = 0; i < g.size(); ++i) {
      acc += g.weight(i);
      cdf[i] = acc;
    }
  }

  parallel_for(cfg.repetitions, [&](std::size_t rep) {
    Rng rng(derive_seed(seed, "bootstrap/rep", rep));
    std::vector<long long> rows(cfg.resample_size);
    for (auto& row : rows)
      row = cdf.empty()
                ? static_cast<long long>(rng.below(static_cast<std::uint64_t>(g.size())))
                : static_cast<long long>(rng.categorical(cdf));
    const SampleSet gb = g.take(rows, g.label());
    if (cfg.joint_resample && !r.is_exact()) {
      const SampleSet& rs = *r.samples();
      std::vector<long long> rrows(rs.size());
      for (auto& row : rrows)
        row = static_cast<long long>(rng.below(static_cast<std::uint64_t>(rs.size())));
      result.replicates[rep] =
          compute_mpr(spec, gb, ReferenceSpec(rs.take(rrows, rs.label()))).value;
    } else {
      result.replicates[rep] = compute_mpr(spec, gb, r).value;
    }
  });

  result.mean = mean_of(result.replicates);
  result.std_dev = std::sqrt(sample_variance(result.replicates, result.mean));
  std::vector<double> sorted = result.replicates;
  std::sort(sorted.begin(), sorted.end());
  result.ci_lo = quantile_sorted(sorted, cfg.alpha / 2.0);
  result.ci_hi = quantile_sorted(sorted, 1.0 - cfg.alpha / 2.0);
  return result;
}

RademacherEstimate empirical_rademacher(const FunctionClassSpec& spec, const SampleSet& s,
                                        int trials, std::uint64_t seed) {
  if (trials < 1) throw input_error("trials must be >= 1");
  validate(spec, s.dim());
  const long long n = s.size();
  std::vector<double> sups(trials);

  if (const auto* tree = std::get_if<DecisionTree>(&spec)) {
    if (!s.sign_valued())
      throw input_error("tree-class complexity requires -1/+1 valued features");
    const auto subsets = enumerate_subsets(s.dim(), tree->depth);
    const std::size_t cells = std::size_t{1} << tree->depth;
    parallel_for(trials, [&](std::size_t t) {
      Rng rng(derive_seed(seed, "rademacher/trial", t));
      std::vector<double> sigma(n);
      for (auto& v : sigma) v = rng.sign();
      std::vector<double> cell_sum(cells);
      double best = 0.0;
      for (const auto& subset : subsets) {
        std::fill(cell_sum.begin(), cell_sum.end(), 0.0);
        for (long long i = 0; i < n; ++i) {
          const auto row = s.row(i);
          std::size_t key = 0;
          for (std::size_t j = 0; j < subset.size(); ++j)
            if (row[subset[j]] > 0) key |= std::size_t{1} << j;
          cell_sum[key] += sigma[i];
        }
        double sum = 0.0;
        for (double c : cell_sum) sum += std::abs(c);
        best = std::max(best, sum / static_cast<double>(n));
      }
      sups[t] = best;
    });
  } else if (std::holds_alternative<BoundedLinear>(spec)) {
    parallel_for(trials, [&](std::size_t t) {
      Rng rng(derive_seed(seed, "rademacher/trial", t));
      std::vector<double> acc(s.dim(), 0.0);
      for (long long i = 0; i < n; ++i) {
        const double sigma = rng.sign();
        const auto row = s.row(i);
        for (int j = 0; j < s.dim(); ++j) acc[j] += sigma * row[j];
      }
      double norm2 = 0.0;
      for (double v : acc) norm2 += v * v;
      sups[t] = std::sqrt(norm2) / static_cast<double>(n);
    });
  } else {
    const auto& ex = std::get<ExplicitSet>(spec);
    // precompute indicator outputs per row
    std::vector<std::vector<double>> outputs(ex.indicators.size(),
                                             std::vector<double>(n));
    for (std::size_t c = 0; c < ex.indicators.size(); ++c)
      for (long long i = 0; i < n; ++i)
        outputs[c][i] = ex.indicators[c].when.matches(s.row(i))
                            ? ex.indicators[c].out_hit
                            : ex.indicators[c].out_miss;
    parallel_for(trials, [&](std::size_t t) {
      Rng rng(derive_seed(seed, "rademacher/trial", t));
      std::vector<double> sigma(n);
      for (auto& v : sigma) v = rng.sign();
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& out : outputs) {
        double sum = 0.0;
        for (long long i = 0; i < n; ++i) sum += sigma[i] * out[i];
        best = std::max(best, sum / static_cast<double>(n));
      }
      sups[t] = best;
    });
  }

  RademacherEstimate est;
  est.trials = trials;
  const double mean = mean_of(sups);
  // explicit sets need not be closed under negation; the complexity itself
  // is never negative
  est.value = std::max(0.0, mean);
  est.std_error =
      trials > 1 ? std::sqrt(sample_variance(sups, mean) / trials) : 0.0;
  return est;
}

double sample_gap_bound(const BoundInputs& in) {
  validate_bound_common(in);
  if (in.delta <= 0.0 || in.delta >= 1.0) throw input_error("delta must be in (0,1)");
  const double tail = in.range_b * std::sqrt(std::log(2.0 / in.delta) /
                                             (2.0 * static_cast<double>(in.k + in.m)));
  return 2.0 * in.rad_g + 2.0 * in.rad_r + tail;
}

BoundValue prompt_mean_bound(const BoundInputs& in, bool squared_tail) {
  validate_bound_common(in);
  if (in.epsilon <= 0.0) throw input_error("epsilon must be positive");
  if (in.prompt_count < 1) throw input_error("prompt count must be >= 1");
  if (in.lambda_sup < 0.0) throw input_error("lambda must be nonnegative");
  const double n = static_cast<double>(in.prompt_count);
  const double term1 = std::exp(-in.epsilon * in.epsilon * n / 8.0);
  const double gap = in.epsilon / 2.0 - 2.0 * in.lambda_sup;
  if (gap <= 0.0) return {1.0, true};
  const double arg = squared_tail ? gap * gap : gap;
  const double term2 = std::exp(-2.0 * static_cast<double>(in.k + in.m) /
                                (in.range_b * in.range_b) * arg);
  const double raw = term1 + term2;
  return {std::min(raw, 1.0), raw >= 1.0};
}

BoundValue prompt_mean_bound_bernstein(const BoundInputs& in) {
  validate_bound_common(in);
  if (in.epsilon <= 0.0) throw input_error("epsilon must be positive");
  if (in.prompt_count < 1) throw input_error("prompt count must be >= 1");
  if (in.sigma2 < 0.0) throw input_error("variance must be nonnegative");
  if (in.lambda_sup < 0.0) throw input_error("lambda must be nonnegative");
  const double n = static_cast<double>(in.prompt_count);
  const double denom = 8.0 * in.sigma2 + 4.0 * in.range_b * in.epsilon / 3.0;
  const double term1 = 2.0 * std::exp(-n * in.epsilon * in.epsilon / denom);
  const double gap = in.epsilon / 4.0 - 2.0 * in.lambda_sup;
  bool vacuous = false;
  double term2;
  if (gap <= 0.0) {
    term2 = 1.0;
    vacuous = true;
  } else {
    term2 = 2.0 * std::exp(-2.0 * static_cast<double>(in.k + in.m) * gap * gap /
                           (in.range_b * in.range_b));
  }
  const double raw = term1 + term2;
  return {std::min(raw, 1.0), vacuous || raw >= 1.0};
}

TestResult threshold_test(std::span<const double> replicates, double rho, double alpha) {
  if (replicates.size() < 2)
    throw input_error("need >= 2 replicates, got " + std::to_string(replicates.size()));
  if (alpha <= 0.0 || alpha >= 1.0) throw input_error("alpha must be in (0,1)");
  TestResult res;
  res.kind = TestKind::one_sided_threshold;
  res.alpha = alpha;
  const double n = static_cast<double>(replicates.size());
  const double mean = mean_of(replicates);
  const double var = sample_variance(replicates, mean);
  res.df = n - 1.0;
  if (var == 0.0) {
    res.statistic = mean < rho ? -std::numeric_limits<double>::infinity()
                               : std::numeric_limits<double>::infinity();
    res.p_value = mean < rho ? 0.0 : 1.0;
  } else {
    res.statistic = (mean - rho) / std::sqrt(var / n);
    res.p_value = student_t_cdf(res.statistic, res.df);
  }
  res.reject = res.p_value < alpha;
  return res;
}

TestResult model_compare_test(std::span<const double> a, std::span<const double> b,
                              double alpha) {
  if (a.size() < 2 || b.size() < 2) throw input_error("need >= 2 replicates per side");
  if (alpha <= 0.0 || alpha >= 1.0) throw input_error("alpha must be in (0,1)");
  TestResult res;
  res.kind = TestKind::two_sided_compare;
  res.alpha = alpha;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = sample_variance(a, ma), vb = sample_variance(b, mb);
  if (va == 0.0 && vb == 0.0) {
    res.statistic = ma == mb ? 0.0
                             : std::copysign(std::numeric_limits<double>::infinity(),
                                             ma - mb);
    res.p_value = ma == mb ? 1.0 : 0.0;
    res.df = 0.0;
  } else {
    const double ga = va / na, gb = vb / nb;
    res.statistic = (ma - mb) / std::sqrt(ga + gb);
    res.df = (ga + gb) * (ga + gb) /
             (ga * ga / (na - 1.0) + gb * gb / (nb - 1.0));
    res.p_value = 2.0 * student_t_cdf(-std::abs(res.statistic), res.df);
  }
  res.reject = res.p_value < alpha;
  return res;
}

std::vector<GapExperimentRow> gap_experiment(const ExactDistribution& p,
                                             const ExactDistribution& r,
                                             std::span<const int> depths,
                                             std::span<const long long> sample_sizes,
                                             int reps, std::uint64_t seed) {
  if (depths.empty() || sample_sizes.empty())
    throw input_error("gap experiment needs at least one depth and one sample size");
  if (reps < 1) throw input_error("repetitions must be >= 1");
  std::vector<GapExperimentRow> rows(depths.size() * sample_sizes.size());
  parallel_for(rows.size(), [&](std::size_t cell) {
    const std::size_t di = cell / sample_sizes.size();
    const std::size_t si = cell % sample_sizes.size();
    const int depth = depths[di];
    const long long size = sample_sizes[si];
    const double exact = mpr_exact(p, r, DecisionTree{depth}).value;
    double max_dev = 0.0, sum_dev = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      const std::uint64_t unit = cell * static_cast<std::uint64_t>(reps) + rep;
      const SampleSet gs = p.sample(size, derive_seed(seed, "gap/gen", unit), "gen");
      const SampleSet rs = r.sample(size, derive_seed(seed, "gap/ref", unit), "ref");
      const double dev = std::abs(mpr_tree(gs, rs, depth).value - exact);
      max_dev = std::max(max_dev, dev);
      sum_dev += dev;
    }
    rows[cell] = {depth, size, max_dev, sum_dev / reps, exact};
  });
  return rows;
}

std::vector<HeatmapCell> std_heatmap(const ExactDistribution& g_source,
                                     const ExactDistribution& r_source,
                                     const FunctionClassSpec& spec,
                                     std::span<const long long> k_list,
                                     std::span<const long long> m_list,
                                     const BootstrapConfig& cfg, std::uint64_t seed) {
  if (k_list.empty() || m_list.empty())
    throw input_error("heatmap needs nonempty k and m lists");
  std::vector<HeatmapCell> cells(k_list.size() * m_list.size());
  parallel_for(cells.size(), [&](std::size_t cell) {
    const long long k = k_list[cell / m_list.size()];
    const long long m = m_list[cell % m_list.size()];
    const SampleSet gs = g_source.sample(k, derive_seed(seed, "heatmap/gen", cell), "gen");
    const SampleSet rs = r_source.sample(m, derive_seed(seed, "heatmap/ref", cell), "ref");
    BootstrapConfig cell_cfg = cfg;
    if (cell_cfg.resample_size <= 0) cell_cfg.resample_size = k;
    const BootstrapResult boot = bootstrap_mpr(gs, ReferenceSpec(rs), spec, cell_cfg,
                                               derive_seed(seed, "heatmap/boot", cell));
    cells[cell] = {k, m, boot.std_dev, boot.mean};
  });
  return cells;
}

}  // namespace mpr::stats
