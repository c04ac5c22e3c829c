#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mpr/core.hpp"

namespace mpr::stats {

// Regularized incomplete beta I_x(a, b) via the Lentz continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

// Lower-tail CDF of Student's t with `df` degrees of freedom.
double student_t_cdf(double t, double df);

// Unbiased sample variance (divisor n-1) of per-prompt values.
double variance_across_prompts(std::span<const double> values);

struct BootstrapConfig {
  long long resample_size = 1000;
  int repetitions = 100;
  double alpha = 0.05;           // percentile interval level
  bool joint_resample = false;   // default: the reference is held fixed
};

struct BootstrapResult {
  double point_estimate = 0.0;
  std::vector<double> replicates;
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation of the replicates
  double ci_lo = 0.0, ci_hi = 0.0;
  double alpha = 0.05;
};

// Resamples the generated set with replacement `repetitions` times and
// recomputes the metric; deterministic per seed, repetitions independent.
BootstrapResult bootstrap_mpr(const SampleSet& g, const ReferenceSpec& r,
                              const FunctionClassSpec& spec, const BootstrapConfig& cfg,
                              std::uint64_t seed);

struct RademacherEstimate {
  double value = 0.0;
  int trials = 0;
  double std_error = 0.0;
};

// Monte-Carlo estimate of the empirical Rademacher complexity of a class on
// a sample: average over sign draws of the exact per-draw supremum.
RademacherEstimate empirical_rademacher(const FunctionClassSpec& spec, const SampleSet& s,
                                        int trials, std::uint64_t seed);

struct BoundInputs {
  double range_b = 2.0;      // B: output range width of the class
  double rad_g = 0.0;        // Rademacher complexity plug-in, generated side
  double rad_r = 0.0;        // same, reference side
  long long k = 0, m = 0;    // sample counts
  double delta = 0.05;       // confidence parameter
  long long prompt_count = 0;
  double lambda_sup = 0.0;   // sup over prompts of rad_g + rad_r
  double epsilon = 0.0;
  double sigma2 = 0.0;       // across-prompt variance (variance-aware bound)
};

struct BoundValue {
  double value = 0.0;
  bool vacuous = false;
};

// High-probability bound on |empirical - true| metric value for one prompt:
// 2*rad_g + 2*rad_r + B * sqrt(log(2/delta) / (2(k+m))).
double sample_gap_bound(const BoundInputs& in);

// Tail bound on the deviation of the across-prompt empirical mean:
// exp(-eps^2 N / 8) + exp(-(2(k+m)/B^2) * (eps/2 - 2*lambda)). The
// squared_tail variant squares the second exponent's deviation term.
BoundValue prompt_mean_bound(const BoundInputs& in, bool squared_tail = false);

// Variance-aware variant:
// 2*exp(-N eps^2 / (8 sigma^2 + 4 B eps / 3)) +
// 2*exp(-2(k+m)(eps/4 - 2*lambda)^2 / B^2).
BoundValue prompt_mean_bound_bernstein(const BoundInputs& in);

enum class TestKind { one_sided_threshold, two_sided_compare };

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject = false;
  double alpha = 0.05;
  double df = 0.0;
  TestKind kind = TestKind::one_sided_threshold;
};

// One-sided one-sample t-test of H0: mean >= rho (representation target not
// met) against mean < rho. Zero-variance replicates short-circuit to p=0/1.
TestResult threshold_test(std::span<const double> replicates, double rho, double alpha);

// Two-sided Welch test on two replicate sequences (unequal variances,
// Welch-Satterthwaite degrees of freedom).
TestResult model_compare_test(std::span<const double> a, std::span<const double> b,
                              double alpha);

struct GapExperimentRow {
  int depth = 0;
  long long sample_size = 0;
  double max_deviation = 0.0;   // max over repetitions of |empirical - exact|
  double mean_deviation = 0.0;  // mean over repetitions
  double exact_value = 0.0;
};

// Draws matched samples from known truth (p, r) at each size, recomputes the
// tree metric, and reports the deviation from the exact value.
std::vector<GapExperimentRow> gap_experiment(const ExactDistribution& p,
                                             const ExactDistribution& r,
                                             std::span<const int> depths,
                                             std::span<const long long> sample_sizes,
                                             int reps, std::uint64_t seed);

struct HeatmapCell {
  long long k = 0, m = 0;
  double std_dev = 0.0;
  double mean = 0.0;
};

// Bootstrap std of the metric on fresh (k, m) draws from the two sources,
// one cell per (k, m) pair. cfg.resample_size <= 0 means "resample to k".
std::vector<HeatmapCell> std_heatmap(const ExactDistribution& g_source,
                                     const ExactDistribution& r_source,
                                     const FunctionClassSpec& spec,
                                     std::span<const long long> k_list,
                                     std::span<const long long> m_list,
                                     const BootstrapConfig& cfg, std::uint64_t seed);

}  // namespace mpr::stats
