#include "mpr/function_classes.hpp"

#include <algorithm>
#include <cmath>

namespace mpr {

namespace {
constexpr long long kMaxSubsets = 1'000'000;
constexpr int kMaxTreeDepthBits = 22;  // leaf tables stay under ~4M entries
}  // namespace

bool CellPredicate::matches(std::span<const double> x) const {
  for (const auto& [feature, sign] : required) {
    if (feature < 0 || feature >= static_cast<int>(x.size()))
      throw input_error("predicate feature index out of range");
    if ((x[feature] > 0 ? +1 : -1) != sign) return false;
  }
  return true;
}

void validate(const FunctionClassSpec& spec, int feature_dim) {
  if (const auto* tree = std::get_if<DecisionTree>(&spec)) {
    if (tree->depth < 1) throw input_error("tree depth must be >= 1");
    if (tree->depth > feature_dim)
      throw input_error("tree depth " + std::to_string(tree->depth) +
                        " exceeds feature dimension " + std::to_string(feature_dim));
  } else if (const auto* ex = std::get_if<ExplicitSet>(&spec)) {
    if (ex->indicators.empty()) throw input_error("explicit set must be nonempty");
    for (const auto& ind : ex->indicators)
      for (const auto& [feature, sign] : ind.when.required) {
        if (feature < 0 || feature >= feature_dim)
          throw input_error("indicator feature index out of range");
        if (sign != 1 && sign != -1) throw input_error("indicator sign must be -1 or +1");
      }
  }
}

std::string class_name(const FunctionClassSpec& spec) {
  if (std::holds_alternative<BoundedLinear>(spec)) return "linear";
  if (const auto* tree = std::get_if<DecisionTree>(&spec))
    return "tree(depth=" + std::to_string(tree->depth) + ")";
  return "explicit";
}

LinearWitness make_linear_witness(std::vector<double> w) {
  double norm2 = 0.0;
  for (double v : w) norm2 += v * v;
  if (std::sqrt(norm2) > 1.0 + 1e-9)
    throw input_error("linear witness norm " + std::to_string(std::sqrt(norm2)) +
                      " exceeds 1");
  return LinearWitness{std::move(w)};
}

TreeWitness make_tree_witness(std::vector<int> features,
                              std::vector<std::int8_t> leaf_signs) {
  if (features.empty()) throw input_error("tree witness needs at least one feature");
  if (static_cast<int>(features.size()) > kMaxTreeDepthBits)
    throw guard_error("tree witness depth exceeds the leaf-table limit");
  for (std::size_t j = 0; j + 1 < features.size(); ++j)
    if (features[j] >= features[j + 1])
      throw input_error("tree witness features must be strictly increasing");
  if (features.front() < 0) throw input_error("tree witness feature index negative");
  if (leaf_signs.size() != (std::size_t{1} << features.size()))
    throw input_error("tree witness needs a sign for each of the 2^depth cells");
  for (std::int8_t s : leaf_signs)
    if (s != 1 && s != -1) throw input_error("leaf signs must be -1 or +1");
  return TreeWitness{std::move(features), std::move(leaf_signs)};
}

double evaluate(const Witness& witness, std::span<const double> x) {
  if (const auto* lin = std::get_if<LinearWitness>(&witness)) {
    if (lin->w.size() != x.size()) throw input_error("witness dimension mismatch");
    double dot = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) dot += lin->w[j] * x[j];
    return dot;
  }
  if (const auto* tree = std::get_if<TreeWitness>(&witness)) {
    std::size_t idx = 0;
    for (std::size_t j = 0; j < tree->features.size(); ++j) {
      const int f = tree->features[j];
      if (f >= static_cast<int>(x.size())) throw input_error("witness dimension mismatch");
      if (x[f] > 0) idx |= std::size_t{1} << j;
    }
    return static_cast<double>(tree->leaf_signs[idx]);
  }
  const auto& ind = std::get<IndicatorWitness>(witness);
  return ind.fn.when.matches(x) ? ind.fn.out_hit : ind.fn.out_miss;
}

std::string witness_summary(const Witness& witness, const AttributeSchema* schema) {
  auto name = [&](int f) {
    return schema ? schema->feature_name(f) : "f" + std::to_string(f);
  };
  if (std::holds_alternative<LinearWitness>(witness)) return "linear";
  if (const auto* tree = std::get_if<TreeWitness>(&witness)) {
    std::string out;
    for (std::size_t j = 0; j < tree->features.size(); ++j) {
      if (j) out += "|";
      out += name(tree->features[j]);
    }
    return out;
  }
  const auto& ind = std::get<IndicatorWitness>(witness);
  std::string out = "indicator#" + std::to_string(ind.index);
  for (const auto& [f, s] : ind.fn.when.required)
    out += (s > 0 ? "+" : "-") + name(f);
  return out;
}

RangeConstant range_constant(const FunctionClassSpec& spec, int feature_dim) {
  if (std::holds_alternative<BoundedLinear>(spec)) {
    // max ||x - x'|| over the signed cube is 2*sqrt(d), attained at antipodes
    return RangeConstant{2.0 * std::sqrt(static_cast<double>(feature_dim))};
  }
  if (std::holds_alternative<DecisionTree>(spec)) return RangeConstant{2.0};
  const auto& ex = std::get<ExplicitSet>(spec);
  validate(spec, feature_dim);
  double b = 0.0;
  for (const auto& ind : ex.indicators)
    b = std::max(b, std::abs(ind.out_hit - ind.out_miss));
  return RangeConstant{b};
}

RangeConstant range_constant(const FunctionClassSpec& spec, const AttributeSchema& schema) {
  return range_constant(spec, schema.feature_dim());
}

SubsetEnumerator::SubsetEnumerator(int n, int l) : n_(n), l_(l) {
  if (l < 1) throw input_error("subset size must be >= 1");
  if (l > n)
    throw input_error("subset size " + std::to_string(l) + " exceeds ground set size " +
                      std::to_string(n));
  current_.resize(l);
}

bool SubsetEnumerator::next(std::vector<int>& subset) {
  if (done_) return false;
  if (!started_) {
    for (int j = 0; j < l_; ++j) current_[j] = j;
    started_ = true;
    subset = current_;
    return true;
  }
  int j = l_ - 1;
  while (j >= 0 && current_[j] == n_ - l_ + j) --j;
  if (j < 0) {
    done_ = true;
    return false;
  }
  ++current_[j];
  for (int i = j + 1; i < l_; ++i) current_[i] = current_[i - 1] + 1;
  subset = current_;
  return true;
}

double subset_count(int n, int l) {
  if (l < 0 || l > n) return 0.0;
  l = std::min(l, n - l);
  double c = 1.0;
  for (int i = 0; i < l; ++i) c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
  return std::round(c);
}

std::vector<std::vector<int>> enumerate_subsets(int n, int l) {
  SubsetEnumerator en(n, l);
  const double count = subset_count(n, l);
  if (count > static_cast<double>(kMaxSubsets))
    throw guard_error("C(" + std::to_string(n) + "," + std::to_string(l) + ") = " +
                      std::to_string(static_cast<long long>(count)) +
                      " subsets exceeds the enumeration limit");
  std::vector<std::vector<int>> all;
  all.reserve(static_cast<std::size_t>(count));
  std::vector<int> subset;
  while (en.next(subset)) all.push_back(subset);
  return all;
}

}  // namespace mpr
