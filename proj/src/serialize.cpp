#include "mpr/serialize.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mpr/rng.hpp"

namespace mpr {

namespace {

std::string feature_label(int f, const AttributeSchema* schema) {
  return schema ? schema->feature_name(f) : "f" + std::to_string(f);
}

ordered_json class_to_json(const FunctionClassSpec& spec) {
  ordered_json j;
  if (std::holds_alternative<BoundedLinear>(spec)) {
    j["kind"] = "linear";
  } else if (const auto* tree = std::get_if<DecisionTree>(&spec)) {
    j["kind"] = "tree";
    j["depth"] = tree->depth;
  } else {
    j["kind"] = "explicit";
    j["indicators"] = std::get<ExplicitSet>(spec).indicators.size();
  }
  return j;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ordered_json witness_to_json(const Witness& witness, const AttributeSchema* schema) {
  if (const auto* lin = std::get_if<LinearWitness>(&witness)) return ordered_json(lin->w);
  if (const auto* tree = std::get_if<TreeWitness>(&witness)) {
    ordered_json j;
    ordered_json names = ordered_json::array();
    for (int f : tree->features) names.push_back(feature_label(f, schema));
    j["features"] = std::move(names);
    ordered_json signs = ordered_json::object();
    for (std::size_t cell = 0; cell < tree->leaf_signs.size(); ++cell) {
      std::string bits(tree->features.size(), '0');
      for (std::size_t b = 0; b < tree->features.size(); ++b)
        if ((cell >> b) & 1) bits[b] = '1';
      signs[bits] = static_cast<int>(tree->leaf_signs[cell]);
    }
    j["leaf_signs"] = std::move(signs);
    return j;
  }
  const auto& ind = std::get<IndicatorWitness>(witness);
  ordered_json j;
  j["index"] = ind.index;
  ordered_json where = ordered_json::object();
  for (const auto& [f, s] : ind.fn.when.required)
    where[feature_label(f, schema)] = s;
  j["where"] = std::move(where);
  j["outputs"] = {ind.fn.out_miss, ind.fn.out_hit};
  return j;
}

ordered_json estimate_to_json(const MprEstimate& est, const AttributeSchema* schema) {
  ordered_json j;
  j["value"] = est.value;
  j["class"] = class_to_json(est.spec);
  j["witness"] = witness_to_json(est.witness, schema);
  j["k"] = est.k;
  j["m"] = est.m;
  if (est.bootstrap) {
    j["bootstrap"] = {{"mean", est.bootstrap->mean},
                      {"std", est.bootstrap->std_dev},
                      {"ci", {est.bootstrap->ci_lo, est.bootstrap->ci_hi}},
                      {"alpha", est.bootstrap->alpha}};
  } else {
    j["bootstrap"] = nullptr;
  }
  return j;
}

ordered_json bootstrap_to_json(const stats::BootstrapResult& result) {
  ordered_json j;
  j["point_estimate"] = result.point_estimate;
  j["mean"] = result.mean;
  j["std"] = result.std_dev;
  j["ci"] = {result.ci_lo, result.ci_hi};
  j["alpha"] = result.alpha;
  j["repetitions"] = result.replicates.size();
  j["replicates"] = result.replicates;
  return j;
}

ordered_json test_to_json(const stats::TestResult& result) {
  ordered_json j;
  j["kind"] = result.kind == stats::TestKind::one_sided_threshold ? "one-sided-threshold"
                                                                  : "two-sided-compare";
  j["statistic"] = result.statistic;
  j["p_value"] = result.p_value;
  j["df"] = result.df;
  j["alpha"] = result.alpha;
  j["reject"] = result.reject;
  return j;
}

FunctionClassSpec function_class_from_json(const ordered_json& j,
                                           const AttributeSchema& schema) {
  if (!j.is_object() || !j.contains("kind"))
    throw input_error("class: expected {\"kind\": ...}");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "linear") return BoundedLinear{};
  if (kind == "tree") {
    if (!j.contains("depth")) throw input_error("class: tree needs \"depth\"");
    const int depth = j["depth"].get<int>();
    FunctionClassSpec spec = DecisionTree{depth};
    validate(spec, schema.feature_dim());
    return spec;
  }
  if (kind == "explicit") {
    if (!j.contains("indicators") || !j["indicators"].is_array())
      throw input_error("class: explicit needs \"indicators\" array");
    ExplicitSet set;
    for (const auto& item : j["indicators"]) {
      Indicator ind;
      if (!item.contains("where") || !item["where"].is_object())
        throw input_error("class: indicator needs a \"where\" object");
      for (const auto& [attr, category] : item["where"].items()) {
        const int a = schema.attribute_index(attr);
        if (a < 0) throw input_error("class: unknown attribute '" + attr + "'");
        const int c = schema.category_index(a, category.get<std::string>());
        if (c < 0)
          throw input_error("class: unknown category '" +
                            category.get<std::string>() + "' for attribute '" + attr +
                            "'");
        ind.when.required.emplace_back(schema.block_offset(a) + c, +1);
      }
      if (item.contains("outputs")) {
        const auto& out = item["outputs"];
        if (!out.is_array() || out.size() != 2)
          throw input_error("class: indicator outputs must be [miss, hit]");
        ind.out_miss = out[0].get<double>();
        ind.out_hit = out[1].get<double>();
      }
      set.indicators.push_back(std::move(ind));
    }
    FunctionClassSpec spec = std::move(set);
    validate(spec, schema.feature_dim());
    return spec;
  }
  throw input_error("class: unknown kind '" + kind + "'");
}

std::map<std::string, double> proportions_from_json(const ordered_json& j) {
  if (!j.is_object()) throw input_error("proportions: expected an object of cell keys");
  std::map<std::string, double> out;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number())
      throw input_error("proportions: value for '" + key + "' is not a number");
    out[key] = value.get<double>();
  }
  return out;
}

ordered_json distribution_to_json(const AttributeSchema& schema,
                                  std::span<const double> cell_probs) {
  ordered_json j = ordered_json::object();
  for (long long cell = 0; cell < static_cast<long long>(cell_probs.size()); ++cell)
    j[schema.cell_key(cell)] = cell_probs[cell];
  return j;
}

std::string gap_rows_to_csv(std::span<const stats::GapExperimentRow> rows) {
  std::string csv = "depth,sample_size,max_deviation,mean_deviation,exact_value\n";
  for (const auto& r : rows) {
    csv += std::to_string(r.depth) + "," + std::to_string(r.sample_size) + "," +
           format_double(r.max_deviation) + "," + format_double(r.mean_deviation) + "," +
           format_double(r.exact_value) + "\n";
  }
  return csv;
}

std::string heatmap_to_csv(std::span<const stats::HeatmapCell> cells) {
  std::string csv = "k,m,std,mean\n";
  for (const auto& c : cells) {
    csv += std::to_string(c.k) + "," + std::to_string(c.m) + "," +
           format_double(c.std_dev) + "," + format_double(c.mean) + "\n";
  }
  return csv;
}

std::string trajectory_to_csv(const TuneTrajectory& traj) {
  std::string csv = "iteration,mpr,loss_mpr,loss_drift,witness\n";
  for (const auto& r : traj.records) {
    csv += std::to_string(r.iteration) + "," + format_double(r.mpr_value) + "," +
           format_double(r.loss_mpr) + "," + format_double(r.loss_drift) + "," +
           r.witness_summary + "\n";
  }
  return csv;
}

ordered_json gap_rows_to_json(std::span<const stats::GapExperimentRow> rows) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back({{"depth", r.depth},
                   {"sample_size", r.sample_size},
                   {"max_deviation", r.max_deviation},
                   {"mean_deviation", r.mean_deviation},
                   {"exact_value", r.exact_value}});
  }
  return arr;
}

ordered_json heatmap_to_json(std::span<const stats::HeatmapCell> cells) {
  ordered_json arr = ordered_json::array();
  for (const auto& c : cells) {
    arr.push_back({{"k", c.k}, {"m", c.m}, {"std", c.std_dev}, {"mean", c.mean}});
  }
  return arr;
}

std::string content_digest(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string("fnv1a64:") + buf;
}

std::string file_digest(const std::string& path) {
  return content_digest(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write file: " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace mpr
