#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mpr/errors.hpp"

namespace mpr {

struct Attribute {
  std::string name;
  std::vector<std::string> categories;
};

/// Ordered categorical attributes with a signed one-hot encoding. Each
/// attribute owns a contiguous block of features named "attr=category"; a
/// record encodes to +1 at its category and -1 elsewhere in the block, so
/// feature_dim is the total category count.
///
/// Joint cells (full category tuples) are indexed in mixed radix with the
/// first attribute most significant; cell keys render as "cat1|cat2|...".
class AttributeSchema {
 public:
  AttributeSchema() = default;
  explicit AttributeSchema(std::vector<Attribute> attributes);

  int attribute_count() const { return static_cast<int>(attributes_.size()); }
  const Attribute& attribute(int a) const { return attributes_[a]; }
  const std::vector<Attribute>& attributes() const { return attributes_; }

  int feature_dim() const { return feature_dim_; }
  int block_offset(int a) const { return offsets_[a]; }
  int block_size(int a) const { return static_cast<int>(attributes_[a].categories.size()); }

  int attribute_index(std::string_view name) const;            // -1 if absent
  int category_index(int a, std::string_view category) const;  // -1 if absent
  std::string feature_name(int feature) const;

  long long joint_cell_count() const;
  long long cell_index(std::span<const int> category_per_attribute) const;
  std::vector<int> cell_categories(long long cell) const;
  std::vector<double> encode_cell(long long cell) const;
  std::string cell_key(long long cell) const;
  long long cell_from_key(std::string_view key) const;

  bool operator==(const AttributeSchema& other) const;

 private:
  std::vector<Attribute> attributes_;
  std::vector<int> offsets_;
  int feature_dim_ = 0;
};

using CategoricalRecord = std::map<std::string, std::string>;

std::vector<double> encode_record(const AttributeSchema& schema, const CategoricalRecord& record);

// Inverse of encode_record: argmax per attribute block.
CategoricalRecord decode_vector(const AttributeSchema& schema, std::span<const double> x);

/// A weighted collection of feature vectors with a provenance label.
/// Schema-bound sets hold valid signed one-hot encodings; raw sets hold
/// arbitrary real vectors (the natural domain of the linear class).
/// Immutable after construction; safe to share across threads.
class SampleSet {
 public:
  static SampleSet from_records(const AttributeSchema& schema,
                                const std::vector<CategoricalRecord>& records,
                                std::string label = {});

  // Rows of arbitrary reals, no schema. Sign-valued operations (the tree
  // class) still apply when every entry is -1/+1.
  static SampleSet from_raw(const std::vector<std::vector<double>>& rows,
                            std::string label = {});

  // Pre-encoded rows; entries may be {0,1} (mapped affinely to -1/+1) or
  // already signed. Every row must be a valid encoding under the schema.
  static SampleSet from_encoded(const AttributeSchema& schema,
                                const std::vector<std::vector<double>>& rows,
                                std::string label = {});

  long long size() const { return static_cast<long long>(data_.size()) / dim_; }
  int dim() const { return dim_; }
  std::span<const double> row(long long i) const {
    return {data_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  double weight(long long i) const {
    return weights_.empty() ? 1.0 / static_cast<double>(size()) : weights_[i];
  }
  bool uniform_weights() const { return weights_.empty(); }
  const std::optional<AttributeSchema>& schema() const { return schema_; }
  const std::string& label() const { return label_; }
  bool sign_valued() const { return sign_valued_; }

  // Copy with explicit nonnegative weights (must sum to 1 within 1e-9;
  // renormalized exactly).
  SampleSet with_weights(std::vector<double> weights) const;

  // New set made of the given rows (repeats allowed), uniform weights.
  SampleSet take(std::span<const long long> rows, std::string label = {}) const;

  // Weighted per-feature mean.
  std::vector<double> mean_vector() const;

 private:
  SampleSet() = default;
  std::optional<AttributeSchema> schema_;
  int dim_ = 0;
  std::vector<double> data_;     // row-major, size() x dim()
  std::vector<double> weights_;  // empty means uniform
  std::string label_;
  bool sign_valued_ = false;
};

/// An exactly known distribution over the joint cells of a schema. Used both
/// as a reference target (e.g. census proportions) and as synthetic ground
/// truth for estimation experiments.
class ExactDistribution {
 public:
  ExactDistribution(AttributeSchema schema, std::vector<double> cell_probs);

  const AttributeSchema& schema() const { return schema_; }
  long long cell_count() const { return static_cast<long long>(probs_.size()); }
  double prob(long long cell) const { return probs_[cell]; }
  const std::vector<double>& probs() const { return probs_; }

  std::vector<double> mean_vector() const;  // E[x] under the signed encoding

  // n i.i.d. draws, deterministic per seed.
  SampleSet sample(long long n, std::uint64_t seed, std::string label = {}) const;

 private:
  AttributeSchema schema_;
  std::vector<double> probs_;
};

/// Reference population: either sampled (a SampleSet) or exactly known.
class ReferenceSpec {
 public:
  explicit ReferenceSpec(SampleSet samples) : ref_(std::move(samples)) {}
  explicit ReferenceSpec(ExactDistribution exact) : ref_(std::move(exact)) {}

  bool is_exact() const { return std::holds_alternative<ExactDistribution>(ref_); }
  const SampleSet* samples() const { return std::get_if<SampleSet>(&ref_); }
  const ExactDistribution* exact() const { return std::get_if<ExactDistribution>(&ref_); }

 private:
  std::variant<SampleSet, ExactDistribution> ref_;
};

// Schema document: {"attributes":[{"name":..., "categories":[...]}]}.
AttributeSchema load_schema(std::string_view json_text);
AttributeSchema load_schema_file(const std::string& path);

// CSV with a header naming every schema attribute exactly once (any order),
// one categorical record per row. Comma-delimited, no quoting.
SampleSet load_samples(const AttributeSchema& schema, std::string_view csv_text,
                       std::string label = {});
SampleSet load_samples_file(const AttributeSchema& schema, const std::string& path,
                            std::string label = {});

// Exact reference from joint-cell proportions keyed "cat1|cat2|..." in schema
// attribute order. Unlisted cells get probability 0.
ExactDistribution reference_from_proportions(
    const AttributeSchema& schema,
    const std::map<std::string, double>& proportions);

}  // namespace mpr
