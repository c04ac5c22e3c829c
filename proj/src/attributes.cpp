#include "mpr/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mpr/rng.hpp"

namespace mpr {

namespace {

constexpr long long kMaxExactCells = 1'000'000;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

AttributeSchema::AttributeSchema(std::vector<Attribute> attributes)
    : attributes_(std::move(attributes)) {
  if (attributes_.empty()) throw input_error("schema has no attributes");
  std::set<std::string> names;
  offsets_.reserve(attributes_.size());
  for (const auto& attr : attributes_) {
    if (attr.name.empty()) throw input_error("schema: empty attribute name");
    if (!names.insert(attr.name).second)
      throw input_error("schema: duplicate attribute name '" + attr.name + "'");
    if (attr.categories.size() < 2)
      throw input_error("schema: attribute '" + attr.name + "' has fewer than 2 categories");
    std::set<std::string> cats;
    for (const auto& c : attr.categories) {
      if (!cats.insert(c).second)
        throw input_error("schema: duplicate category '" + c + "' in attribute '" +
                          attr.name + "'");
    }
    offsets_.push_back(feature_dim_);
    feature_dim_ += static_cast<int>(attr.categories.size());
  }
}

int AttributeSchema::attribute_index(std::string_view name) const {
  for (int a = 0; a < attribute_count(); ++a)
    if (attributes_[a].name == name) return a;
  return -1;
}

int AttributeSchema::category_index(int a, std::string_view category) const {
  const auto& cats = attributes_[a].categories;
  for (int c = 0; c < static_cast<int>(cats.size()); ++c)
    if (cats[c] == category) return c;
  return -1;
}

std::string AttributeSchema::feature_name(int feature) const {
  for (int a = attribute_count() - 1; a >= 0; --a) {
    if (feature >= offsets_[a])
      return attributes_[a].name + "=" + attributes_[a].categories[feature - offsets_[a]];
  }
  throw input_error("feature index out of range");
}

long long AttributeSchema::joint_cell_count() const {
  long long n = 1;
  for (const auto& attr : attributes_) {
    n *= static_cast<long long>(attr.categories.size());
    if (n > kMaxExactCells * 1024) return n;  // saturate; callers guard
  }
  return n;
}

long long AttributeSchema::cell_index(std::span<const int> category_per_attribute) const {
  long long idx = 0;
  for (int a = 0; a < attribute_count(); ++a)
    idx = idx * block_size(a) + category_per_attribute[a];
  return idx;
}

std::vector<int> AttributeSchema::cell_categories(long long cell) const {
  std::vector<int> cats(attribute_count());
  for (int a = attribute_count() - 1; a >= 0; --a) {
    cats[a] = static_cast<int>(cell % block_size(a));
    cell /= block_size(a);
  }
  return cats;
}

std::vector<double> AttributeSchema::encode_cell(long long cell) const {
  std::vector<double> x(feature_dim_, -1.0);
  const auto cats = cell_categories(cell);
  for (int a = 0; a < attribute_count(); ++a) x[offsets_[a] + cats[a]] = 1.0;
  return x;
}

std::string AttributeSchema::cell_key(long long cell) const {
  const auto cats = cell_categories(cell);
  std::string key;
  for (int a = 0; a < attribute_count(); ++a) {
    if (a) key += '|';
    key += attributes_[a].categories[cats[a]];
  }
  return key;
}

long long AttributeSchema::cell_from_key(std::string_view key) const {
  std::vector<int> cats;
  cats.reserve(attribute_count());
  std::size_t start = 0;
  for (int a = 0; a < attribute_count(); ++a) {
    const std::size_t end = (a + 1 < attribute_count()) ? key.find('|', start) : key.size();
    if (end == std::string_view::npos)
      throw input_error("cell key '" + std::string(key) + "': expected " +
                        std::to_string(attribute_count()) + " pipe-delimited categories");
    const std::string_view piece = key.substr(start, end - start);
    const int c = category_index(a, piece);
    if (c < 0)
      throw input_error("cell key '" + std::string(key) + "': unknown category '" +
                        std::string(piece) + "' for attribute '" + attributes_[a].name + "'");
    cats.push_back(c);
    start = end + 1;
  }
  if (start <= key.size() && key.find('|', start) != std::string_view::npos)
    throw input_error("cell key '" + std::string(key) + "': too many categories");
  return cell_index(cats);
}

bool AttributeSchema::operator==(const AttributeSchema& other) const {
  if (attributes_.size() != other.attributes_.size()) return false;
  for (std::size_t a = 0; a < attributes_.size(); ++a) {
    if (attributes_[a].name != other.attributes_[a].name ||
        attributes_[a].categories != other.attributes_[a].categories)
      return false;
  }
  return true;
}

std::vector<double> encode_record(const AttributeSchema& schema,
                                  const CategoricalRecord& record) {
  std::vector<double> x(schema.feature_dim(), -1.0);
  if (static_cast<int>(record.size()) != schema.attribute_count()) {
    for (int a = 0; a < schema.attribute_count(); ++a)
      if (!record.count(schema.attribute(a).name))
        throw input_error("record: missing attribute '" + schema.attribute(a).name + "'");
    throw input_error("record: unknown extra attribute present");
  }
  for (const auto& [name, category] : record) {
    const int a = schema.attribute_index(name);
    if (a < 0) throw input_error("record: unknown attribute '" + name + "'");
    const int c = schema.category_index(a, category);
    if (c < 0)
      throw input_error("record: unknown category '" + category + "' for attribute '" +
                        name + "'");
    x[schema.block_offset(a) + c] = 1.0;
  }
  return x;
}

CategoricalRecord decode_vector(const AttributeSchema& schema, std::span<const double> x) {
  if (static_cast<int>(x.size()) != schema.feature_dim())
    throw input_error("decode: dimension mismatch");
  CategoricalRecord record;
  for (int a = 0; a < schema.attribute_count(); ++a) {
    const int off = schema.block_offset(a);
    int best = 0;
    for (int c = 1; c < schema.block_size(a); ++c)
      if (x[off + c] > x[off + best]) best = c;
    record[schema.attribute(a).name] = schema.attribute(a).categories[best];
  }
  return record;
}

SampleSet SampleSet::from_records(const AttributeSchema& schema,
                                  const std::vector<CategoricalRecord>& records,
                                  std::string label) {
  if (records.empty()) throw input_error("empty sample set");
  SampleSet s;
  s.schema_ = schema;
  s.dim_ = schema.feature_dim();
  s.label_ = std::move(label);
  s.sign_valued_ = true;
  s.data_.reserve(records.size() * schema.feature_dim());
  for (const auto& r : records) {
    const auto x = encode_record(schema, r);
    s.data_.insert(s.data_.end(), x.begin(), x.end());
  }
  return s;
}

SampleSet SampleSet::from_raw(const std::vector<std::vector<double>>& rows,
                              std::string label) {
  if (rows.empty()) throw input_error("empty sample set");
  SampleSet s;
  s.dim_ = static_cast<int>(rows.front().size());
  if (s.dim_ == 0) throw input_error("sample rows must be nonempty");
  s.label_ = std::move(label);
  s.sign_valued_ = true;
  s.data_.reserve(rows.size() * s.dim_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != s.dim_)
      throw input_error("row " + std::to_string(i + 1) + ": inconsistent dimension");
    for (double v : rows[i]) {
      if (v != 1.0 && v != -1.0) s.sign_valued_ = false;
      s.data_.push_back(v);
    }
  }
  return s;
}

SampleSet SampleSet::from_encoded(const AttributeSchema& schema,
                                  const std::vector<std::vector<double>>& rows,
                                  std::string label) {
  if (rows.empty()) throw input_error("empty sample set");
  bool zero_one = true, signed_ = true;
  for (const auto& r : rows)
    for (double v : r) {
      if (v != 0.0 && v != 1.0) zero_one = false;
      if (v != -1.0 && v != 1.0) signed_ = false;
    }
  if (!zero_one && !signed_)
    throw input_error("encoded rows must be {0,1} or {-1,+1} valued");
  SampleSet s;
  s.schema_ = schema;
  s.dim_ = schema.feature_dim();
  s.label_ = std::move(label);
  s.sign_valued_ = true;
  s.data_.reserve(rows.size() * s.dim_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != s.dim_)
      throw input_error("row " + std::to_string(i + 1) + ": expected " +
                        std::to_string(s.dim_) + " features");
    for (double v : rows[i]) s.data_.push_back(zero_one && !signed_ ? 2.0 * v - 1.0 : v);
    // one +1 per attribute block
    const double* x = s.data_.data() + i * s.dim_;
    for (int a = 0; a < schema.attribute_count(); ++a) {
      int ones = 0;
      for (int c = 0; c < schema.block_size(a); ++c)
        if (x[schema.block_offset(a) + c] == 1.0) ++ones;
      if (ones != 1)
        throw input_error("row " + std::to_string(i + 1) + ": block for attribute '" +
                          schema.attribute(a).name + "' is not one-hot");
    }
  }
  return s;
}

SampleSet SampleSet::with_weights(std::vector<double> weights) const {
  if (static_cast<long long>(weights.size()) != size())
    throw input_error("weights: expected " + std::to_string(size()) + " entries");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw input_error("weights must be nonnegative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw input_error("weights sum to " + std::to_string(sum) + ", expected 1");
  for (double& w : weights) w /= sum;
  SampleSet s = *this;
  s.weights_ = std::move(weights);
  return s;
}

SampleSet SampleSet::take(std::span<const long long> rows, std::string label) const {
  if (rows.empty()) throw input_error("empty sample set");
  SampleSet s;
  s.schema_ = schema_;
  s.dim_ = dim_;
  s.label_ = label.empty() ? label_ : std::move(label);
  s.sign_valued_ = sign_valued_;
  s.data_.reserve(rows.size() * dim_);
  for (long long i : rows) {
    if (i < 0 || i >= size()) throw input_error("take: row index out of range");
    const auto r = row(i);
    s.data_.insert(s.data_.end(), r.begin(), r.end());
  }
  return s;
}

std::vector<double> SampleSet::mean_vector() const {
  std::vector<double> mean(dim_, 0.0);
  const long long n = size();
  for (long long i = 0; i < n; ++i) {
    const double w = weight(i);
    const auto r = row(i);
    for (int j = 0; j < dim_; ++j) mean[j] += w * r[j];
  }
  return mean;
}

ExactDistribution::ExactDistribution(AttributeSchema schema, std::vector<double> cell_probs)
    : schema_(std::move(schema)), probs_(std::move(cell_probs)) {
  const long long cells = schema_.joint_cell_count();
  if (cells > kMaxExactCells)
    throw guard_error("exact distribution over " + std::to_string(cells) +
                      " joint cells exceeds the enumeration limit");
  if (static_cast<long long>(probs_.size()) != cells)
    throw input_error("exact distribution: expected " + std::to_string(cells) +
                      " cell probabilities");
  double sum = 0.0;
  for (double p : probs_) {
    if (p < 0.0) throw input_error("exact distribution: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw input_error("probabilities sum to " + std::to_string(sum) + ", expected 1");
  for (double& p : probs_) p /= sum;
}

std::vector<double> ExactDistribution::mean_vector() const {
  std::vector<double> mean(schema_.feature_dim(), 0.0);
  for (long long cell = 0; cell < cell_count(); ++cell) {
    if (probs_[cell] == 0.0) continue;
    const auto x = schema_.encode_cell(cell);
    for (int j = 0; j < schema_.feature_dim(); ++j) mean[j] += probs_[cell] * x[j];
  }
  return mean;
}

SampleSet ExactDistribution::sample(long long n, std::uint64_t seed, std::string label) const {
  if (n < 1) throw input_error("sample count must be >= 1");
  std::vector<double> cdf(probs_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    acc += probs_[i];
    cdf[i] = acc;
  }
  Rng rng(seed);
  std::vector<std::vector<double>> rows;
  rows.reserve(n);
  for (long long i = 0; i < n; ++i)
    rows.push_back(schema_.encode_cell(static_cast<long long>(rng.categorical(cdf))));
  return SampleSet::from_encoded(schema_, rows, std::move(label));
}

AttributeSchema load_schema(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("schema: parse failure: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("attributes") || !doc["attributes"].is_array())
    throw input_error("schema: expected {\"attributes\": [...]}");
  std::vector<Attribute> attrs;
  for (const auto& item : doc["attributes"]) {
    if (!item.is_object() || !item.contains("name") || !item.contains("categories"))
      throw input_error("schema: each attribute needs \"name\" and \"categories\"");
    Attribute a;
    a.name = item["name"].get<std::string>();
    for (const auto& c : item["categories"]) a.categories.push_back(c.get<std::string>());
    attrs.push_back(std::move(a));
  }
  return AttributeSchema(std::move(attrs));
}

AttributeSchema load_schema_file(const std::string& path) {
  return load_schema(read_file(path));
}

SampleSet load_samples(const AttributeSchema& schema, std::string_view csv_text,
                       std::string label) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= csv_text.size()) {
    std::size_t end = csv_text.find('\n', start);
    if (end == std::string_view::npos) end = csv_text.size();
    std::string_view line = csv_text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw input_error("empty sample set");

  auto split = [](std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      if (comma == std::string_view::npos) {
        fields.push_back(line.substr(pos));
        break;
      }
      fields.push_back(line.substr(pos, comma - pos));
      pos = comma + 1;
    }
    return fields;
  };

  const auto header = split(lines[0]);
  if (static_cast<int>(header.size()) != schema.attribute_count()) {
    for (int a = 0; a < schema.attribute_count(); ++a) {
      bool found = false;
      for (const auto& h : header)
        if (h == schema.attribute(a).name) found = true;
      if (!found)
        throw input_error("header: missing attribute '" + schema.attribute(a).name + "'");
    }
    throw input_error("header: expected " + std::to_string(schema.attribute_count()) +
                      " attribute columns, got " + std::to_string(header.size()));
  }
  std::vector<int> column_attr(header.size());
  std::vector<bool> seen(schema.attribute_count(), false);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const int a = schema.attribute_index(header[c]);
    if (a < 0)
      throw input_error("header: unknown attribute '" + std::string(header[c]) + "'");
    if (seen[a])
      throw input_error("header: duplicate attribute '" + std::string(header[c]) + "'");
    seen[a] = true;
    column_attr[c] = a;
  }

  if (lines.size() < 2) throw input_error("empty sample set");
  std::vector<std::vector<double>> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto fields = split(lines[li]);
    if (fields.size() != header.size())
      throw input_error("row " + std::to_string(li) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    std::vector<double> x(schema.feature_dim(), -1.0);
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const int a = column_attr[c];
      const int cat = schema.category_index(a, fields[c]);
      if (cat < 0)
        throw input_error("row " + std::to_string(li) + ": unknown category '" +
                          std::string(fields[c]) + "' for attribute '" +
                          schema.attribute(a).name + "'");
      x[schema.block_offset(a) + cat] = 1.0;
    }
    rows.push_back(std::move(x));
  }
  return SampleSet::from_encoded(schema, rows, std::move(label));
}

SampleSet load_samples_file(const AttributeSchema& schema, const std::string& path,
                            std::string label) {
  if (label.empty()) label = path;
  return load_samples(schema, read_file(path), std::move(label));
}

ExactDistribution reference_from_proportions(const AttributeSchema& schema,
                                             const std::map<std::string, double>& proportions) {
  const long long cells = schema.joint_cell_count();
  if (cells > kMaxExactCells)
    throw guard_error("schema has " + std::to_string(cells) +
                      " joint cells; exact references are limited to " +
                      std::to_string(kMaxExactCells));
  std::vector<double> probs(cells, 0.0);
  for (const auto& [key, p] : proportions) {
    if (p < 0.0)
      throw input_error("proportions: negative probability for cell '" + key + "'");
    probs[schema.cell_from_key(key)] += p;
  }
  return ExactDistribution(schema, std::move(probs));
}

}  // namespace mpr
