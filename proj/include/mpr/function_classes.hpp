#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mpr/attributes.hpp"

namespace mpr {

// The function classes over which the representation metric takes its
// supremum. Evaluation is pure and thread-safe.

struct BoundedLinear {};  // { x -> w.x : ||w||_2 <= 1 }, no bias term

struct DecisionTree {
  int depth = 1;  // number of binary features a tree may read
};

// Partial sign assignment over feature coordinates; matches when every
// constrained coordinate has the required sign.
struct CellPredicate {
  std::vector<std::pair<int, int>> required;  // (feature index, sign in {-1,+1})
  bool matches(std::span<const double> x) const;
};

struct Indicator {
  CellPredicate when;
  double out_miss = -1.0;
  double out_hit = +1.0;
};

// A finite, explicitly listed set of indicator functions. With outputs {0,1}
// the metric reduces to the familiar max probability-difference parity gap.
struct ExplicitSet {
  std::vector<Indicator> indicators;
};

using FunctionClassSpec = std::variant<BoundedLinear, DecisionTree, ExplicitSet>;

void validate(const FunctionClassSpec& spec, int feature_dim);
std::string class_name(const FunctionClassSpec& spec);

// --- Witnesses: the concrete maximizer found within a class ---

struct LinearWitness {
  std::vector<double> w;  // ||w|| <= 1 + 1e-9, enforced by make_linear_witness
};

// A depth-l tree in extensional form: any tree reading the features in
// `features` is equivalent to a sign assignment on their 2^l joint cells.
struct TreeWitness {
  std::vector<int> features;             // strictly increasing feature indices
  std::vector<std::int8_t> leaf_signs;   // size 2^features.size();
                                         // index bit j set iff x[features[j]] == +1
};

struct IndicatorWitness {
  int index = 0;
  Indicator fn;
};

using Witness = std::variant<LinearWitness, TreeWitness, IndicatorWitness>;

LinearWitness make_linear_witness(std::vector<double> w);
TreeWitness make_tree_witness(std::vector<int> features, std::vector<std::int8_t> leaf_signs);

double evaluate(const Witness& witness, std::span<const double> x);

// Short human-readable form (the tree's split features, etc.).
std::string witness_summary(const Witness& witness, const AttributeSchema* schema);

// --- Range constant B = sup over the class and input pair of |c(x)-c(x')| ---

struct RangeConstant {
  double b = 0.0;
};

RangeConstant range_constant(const FunctionClassSpec& spec, int feature_dim);
RangeConstant range_constant(const FunctionClassSpec& spec, const AttributeSchema& schema);

// --- Lexicographic enumeration of size-l index subsets of {0..n-1} ---

class SubsetEnumerator {
 public:
  SubsetEnumerator(int n, int l);
  // Fills `subset` with the next subset; false once exhausted.
  bool next(std::vector<int>& subset);

 private:
  int n_, l_;
  std::vector<int> current_;
  bool started_ = false;
  bool done_ = false;
};

// C(n, l), exact in double for the ranges the guards allow.
double subset_count(int n, int l);

// All C(n, l) subsets, guarded to at most 10^6.
std::vector<std::vector<int>> enumerate_subsets(int n, int l);

}  // namespace mpr
