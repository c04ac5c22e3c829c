#pragma once

#include <vector>

#include "mpr/core.hpp"
#include "mpr/rng.hpp"

namespace mpr::testing {

inline SampleSet random_sign_set(long long rows, int dim, std::uint64_t seed,
                                 std::string label = "rand") {
  Rng rng(seed);
  std::vector<std::vector<double>> data(rows, std::vector<double>(dim));
  for (auto& row : data)
    for (auto& v : row) v = rng.sign();
  return SampleSet::from_raw(data, std::move(label));
}

// Weighted mean gap of a witness between two sets; the quantity an estimate's
// value must reproduce.
inline double witness_gap(const Witness& w, const SampleSet& g, const SampleSet& r) {
  double mg = 0.0, mr = 0.0;
  for (long long i = 0; i < g.size(); ++i) mg += g.weight(i) * evaluate(w, g.row(i));
  for (long long i = 0; i < r.size(); ++i) mr += r.weight(i) * evaluate(w, r.row(i));
  return std::abs(mg - mr);
}

inline AttributeSchema two_binary_schema() {
  return AttributeSchema({{"gender", {"male", "female"}}, {"age", {"young", "old"}}});
}

}  // namespace mpr::testing
