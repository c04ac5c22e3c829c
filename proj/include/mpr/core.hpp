#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mpr/attributes.hpp"
#include "mpr/function_classes.hpp"

namespace mpr {

// Difference of weighted feature means between a generated and a reference
// set; the linear-class supremum is its Euclidean norm.
struct MeanDifferenceVector {
  std::vector<double> v;
  long long k = 0, m = 0;
};

struct BootstrapSummary {
  double mean = 0.0;
  double std_dev = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double alpha = 0.05;
};

struct MprEstimate {
  double value = 0.0;
  FunctionClassSpec spec;
  Witness witness;
  long long k = 0, m = 0;  // m == 0 when the reference is exactly known
  std::optional<BootstrapSummary> bootstrap;
};

// Distribution over the projected sign cells of a feature subset.
// Key bit j is set iff the coordinate at the j-th (ascending) subset feature
// equals +1.
struct CellDistribution {
  int arity = 0;
  std::map<std::uint64_t, double> mass;
};

MeanDifferenceVector mean_diff_vector(const SampleSet& g, const SampleSet& r);

// Half the L1 distance over the union of cells; in [0, 1].
double tv_distance(const CellDistribution& a, const CellDistribution& b);

CellDistribution marginal_cells(const SampleSet& s, std::span<const int> features);
CellDistribution exact_marginal_cells(const ExactDistribution& d,
                                      std::span<const int> features);

// Supremum over { x -> w.x : ||w|| <= 1 }: the norm of the mean difference,
// witnessed by the normalized difference direction.
MprEstimate mpr_linear(const SampleSet& g, const SampleSet& r);
MprEstimate mpr_linear(const SampleSet& g, const ExactDistribution& r);

// Supremum over depth-l binary trees: max over size-l feature subsets of
// twice the marginal total variation, witnessed by the argmax subset with
// per-cell majority signs. Ties keep the lexicographically smallest subset.
MprEstimate mpr_tree(const SampleSet& g, const SampleSet& r, int depth);
MprEstimate mpr_tree(const SampleSet& g, const ExactDistribution& r, int depth);

// Maximum absolute mean difference over an explicit indicator list.
MprEstimate mpr_explicit(const SampleSet& g, const SampleSet& r, const ExplicitSet& spec);
MprEstimate mpr_explicit(const SampleSet& g, const ExactDistribution& r,
                         const ExplicitSet& spec);

MprEstimate compute_mpr(const FunctionClassSpec& spec, const SampleSet& g,
                        const ReferenceSpec& r);

// Population value between two exactly known cell distributions; ground
// truth for estimation-gap experiments.
MprEstimate mpr_exact(const ExactDistribution& p, const ExactDistribution& r,
                      const FunctionClassSpec& spec);

// Monte-Carlo lower bound on the linear supremum: best of `trials` seeded
// random unit directions, each evaluated row by row.
double brute_force_linear(const SampleSet& g, const SampleSet& r, long long trials,
                          std::uint64_t seed);

// Exhaustive tree supremum: every subset times every leaf labeling.
// Guarded to C(n,l) * 2^(2^l) <= 10^7.
std::pair<double, Witness> brute_force_tree(const SampleSet& g, const SampleSet& r,
                                            int depth);

}  // namespace mpr
