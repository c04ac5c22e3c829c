// Command-line front end: measurement, uncertainty, bounds, hypothesis
// tests, fine-tuning, and the estimation experiments, emitting reproducible
// JSON reports keyed by input digests and a single seed.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mpr/rng.hpp"
#include "mpr/serialize.hpp"

namespace fs = std::filesystem;
using mpr::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ReportContext {
  std::string command;
  std::uint64_t seed = 0;
  bool seeded = false;
  ordered_json inputs = ordered_json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::string out_path;

  void add_input(const std::string& role, const std::string& path) {
    inputs[role] = {{"path", path}, {"digest", mpr::file_digest(path)}};
  }

  void emit(ordered_json results) const {
    ordered_json report;
    report["tool"] = "mpr";
    report["version"] = kVersion;
    report["command"] = command;
    if (seeded) {
      report["seed"] = seed;
      report["seed_scheme"] = std::string(mpr::kSeedScheme);
    }
    report["inputs"] = inputs;
    report["results"] = std::move(results);
    report["wall_clock_sec"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string text = report.dump(2) + "\n";
    if (!out_path.empty()) mpr::write_text_file(out_path, text);
    std::fputs(text.c_str(), stdout);
  }
};

std::string join_args(int argc, char** argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

ordered_json parse_json_file(const std::string& path, const std::string& what) {
  try {
    return ordered_json::parse(mpr::read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw mpr::input_error(what + ": parse failure in " + path + ": " + e.what());
  }
}

// Shared measurement inputs: schema + generated CSV + reference CSV or
// proportions JSON + a function class.
struct MeasureInputs {
  std::string schema_path;
  std::string generated_path;
  std::string reference_path;
  std::string proportions_path;
  std::string class_name = "tree";
  int depth = 1;
  std::string explicit_path;
  std::string label;
};

void add_measure_flags(CLI::App* cmd, MeasureInputs& in) {
  cmd->add_option("--schema", in.schema_path, "attribute schema JSON")->required();
  cmd->add_option("--generated", in.generated_path, "generated sample CSV")->required();
  auto* ref = cmd->add_option("--reference", in.reference_path, "reference sample CSV");
  auto* prop = cmd->add_option("--proportions", in.proportions_path,
                               "exact reference proportions JSON");
  ref->excludes(prop);
  cmd->add_option("--class", in.class_name, "function class: linear|tree|explicit")
      ->check(CLI::IsMember({"linear", "tree", "explicit"}));
  cmd->add_option("--depth", in.depth, "tree depth (class=tree)");
  cmd->add_option("--explicit-file", in.explicit_path,
                  "indicator list JSON (class=explicit)");
  cmd->add_option("--label", in.label, "label for this run (e.g. the prompt)");
}

struct LoadedMeasure {
  mpr::AttributeSchema schema;
  mpr::SampleSet generated;
  mpr::ReferenceSpec reference;
  mpr::FunctionClassSpec spec;
  std::string label;
};

LoadedMeasure load_measure(const MeasureInputs& in, ReportContext& ctx) {
  if (in.reference_path.empty() && in.proportions_path.empty())
    throw mpr::input_error("need --reference or --proportions");
  ctx.add_input("schema", in.schema_path);
  ctx.add_input("generated", in.generated_path);
  auto schema = mpr::load_schema_file(in.schema_path);
  auto generated = mpr::load_samples_file(schema, in.generated_path,
                                          in.label.empty() ? in.generated_path : in.label);

  std::optional<mpr::ReferenceSpec> reference;
  if (!in.reference_path.empty()) {
    ctx.add_input("reference", in.reference_path);
    reference.emplace(mpr::load_samples_file(schema, in.reference_path, "reference"));
  } else {
    ctx.add_input("proportions", in.proportions_path);
    const auto props =
        mpr::proportions_from_json(parse_json_file(in.proportions_path, "proportions"));
    reference.emplace(mpr::reference_from_proportions(schema, props));
  }

  mpr::FunctionClassSpec spec = mpr::BoundedLinear{};
  if (in.class_name == "tree") {
    if (in.depth < 1) throw mpr::input_error("--depth must be >= 1");
    spec = mpr::DecisionTree{in.depth};
  } else if (in.class_name == "explicit") {
    if (in.explicit_path.empty())
      throw mpr::input_error("--class explicit needs --explicit-file");
    ctx.add_input("explicit", in.explicit_path);
    ordered_json j = parse_json_file(in.explicit_path, "explicit set");
    if (!j.contains("kind")) j["kind"] = "explicit";
    spec = mpr::function_class_from_json(j, schema);
  }
  mpr::validate(spec, schema.feature_dim());

  return {std::move(schema), std::move(generated), std::move(*reference), std::move(spec),
          in.label.empty() ? in.generated_path : in.label};
}

std::vector<double> read_replicates(const std::string& path) {
  if (path.ends_with(".json")) {
    const auto j = parse_json_file(path, "replicates");
    if (j.contains("results") && j["results"].contains("replicates"))
      return j["results"]["replicates"].get<std::vector<double>>();
    if (j.is_array()) return j.get<std::vector<double>>();
    throw mpr::input_error("replicates: " + path +
                           " has no results.replicates field and is not an array");
  }
  std::vector<double> values;
  const std::string text = mpr::read_text_file(path);
  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    if (!line.empty()) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(line, &used));
        if (used != line.size()) throw std::invalid_argument("trailing junk");
      } catch (const std::exception&) {
        throw mpr::input_error("replicates: " + path + " line " +
                               std::to_string(line_no) + ": not a number: '" + line + "'");
      }
    }
    pos = end + 1;
  }
  if (values.empty()) throw mpr::input_error("replicates: " + path + " is empty");
  return values;
}

// ---- subcommand handlers ----

void run_measure(const MeasureInputs& in, ReportContext& ctx) {
  auto loaded = load_measure(in, ctx);
  const auto est = mpr::compute_mpr(loaded.spec, loaded.generated, loaded.reference);
  ordered_json results;
  results["label"] = loaded.label;
  results["estimate"] = mpr::estimate_to_json(est, &loaded.schema);
  ctx.emit(std::move(results));
}

void run_bootstrap(const MeasureInputs& in, const mpr::stats::BootstrapConfig& cfg,
                   ReportContext& ctx) {
  auto loaded = load_measure(in, ctx);
  const auto boot = mpr::stats::bootstrap_mpr(loaded.generated, loaded.reference,
                                              loaded.spec, cfg, ctx.seed);
  auto est = mpr::compute_mpr(loaded.spec, loaded.generated, loaded.reference);
  est.bootstrap =
      mpr::BootstrapSummary{boot.mean, boot.std_dev, boot.ci_lo, boot.ci_hi, boot.alpha};
  ordered_json results;
  results["label"] = loaded.label;
  results["estimate"] = mpr::estimate_to_json(est, &loaded.schema);
  results["resample_size"] = cfg.resample_size;
  results["repetitions"] = cfg.repetitions;
  results["joint_resample"] = cfg.joint_resample;
  results["point_estimate"] = boot.point_estimate;
  results["mean"] = boot.mean;
  results["std"] = boot.std_dev;
  results["ci"] = {boot.ci_lo, boot.ci_hi};
  results["replicates"] = boot.replicates;
  ctx.emit(std::move(results));
}

struct BoundFlags {
  std::string which;
  mpr::stats::BoundInputs in;
  bool squared_tail = false;
  std::string variance_file;
  // plug-in estimation inputs
  std::string schema_path, generated_path, reference_path;
  std::string class_name = "tree";
  int depth = 1;
  int rad_trials = 200;
  bool have_b = false, have_rad_g = false, have_rad_r = false, have_k = false,
       have_m = false;
};

void run_bound(BoundFlags& f, ReportContext& ctx) {
  std::optional<mpr::AttributeSchema> schema;
  mpr::FunctionClassSpec spec = f.class_name == "linear"
                                    ? mpr::FunctionClassSpec{mpr::BoundedLinear{}}
                                    : mpr::FunctionClassSpec{mpr::DecisionTree{f.depth}};
  if (!f.schema_path.empty()) {
    ctx.add_input("schema", f.schema_path);
    schema = mpr::load_schema_file(f.schema_path);
    mpr::validate(spec, schema->feature_dim());
    if (!f.have_b) f.in.range_b = mpr::range_constant(spec, *schema).b;
  }
  if (!f.generated_path.empty()) {
    if (!schema) throw mpr::input_error("--generated needs --schema");
    ctx.add_input("generated", f.generated_path);
    const auto g = mpr::load_samples_file(*schema, f.generated_path);
    if (!f.have_k) f.in.k = g.size();
    if (!f.have_rad_g)
      f.in.rad_g = mpr::stats::empirical_rademacher(
                       spec, g, f.rad_trials, mpr::derive_seed(ctx.seed, "bound/rad_g"))
                       .value;
  }
  if (!f.reference_path.empty()) {
    if (!schema) throw mpr::input_error("--reference needs --schema");
    ctx.add_input("reference", f.reference_path);
    const auto r = mpr::load_samples_file(*schema, f.reference_path);
    if (!f.have_m) f.in.m = r.size();
    if (!f.have_rad_r)
      f.in.rad_r = mpr::stats::empirical_rademacher(
                       spec, r, f.rad_trials, mpr::derive_seed(ctx.seed, "bound/rad_r"))
                       .value;
  }
  if (!f.variance_file.empty()) {
    ctx.add_input("variance_file", f.variance_file);
    f.in.sigma2 = mpr::stats::variance_across_prompts(read_replicates(f.variance_file));
  }

  ordered_json results;
  results["which"] = f.which;
  if (f.which == "gap") {
    results["value"] = mpr::stats::sample_gap_bound(f.in);
    results["vacuous"] = false;
  } else {
    const auto v = f.which == "prompt"
                       ? mpr::stats::prompt_mean_bound(f.in, f.squared_tail)
                       : mpr::stats::prompt_mean_bound_bernstein(f.in);
    results["value"] = v.value;
    results["vacuous"] = v.vacuous;
  }
  results["inputs"] = {{"B", f.in.range_b},       {"rad_g", f.in.rad_g},
                       {"rad_r", f.in.rad_r},     {"k", f.in.k},
                       {"m", f.in.m},             {"delta", f.in.delta},
                       {"N", f.in.prompt_count},  {"lambda_sup", f.in.lambda_sup},
                       {"epsilon", f.in.epsilon}, {"sigma2", f.in.sigma2},
                       {"squared_tail", f.squared_tail}};
  // complexities are Monte-Carlo plug-ins whenever they came from data
  results["inputs"]["rad_g_estimated"] = !f.generated_path.empty() && !f.have_rad_g;
  results["inputs"]["rad_r_estimated"] = !f.reference_path.empty() && !f.have_rad_r;
  ctx.emit(std::move(results));
}

void run_test(const std::string& replicates_path, const std::vector<std::string>& compare,
              bool have_threshold, double rho, double alpha, ReportContext& ctx) {
  ordered_json results;
  if (have_threshold) {
    if (replicates_path.empty()) throw mpr::input_error("--threshold needs --replicates");
    ctx.add_input("replicates", replicates_path);
    const auto reps = read_replicates(replicates_path);
    results = mpr::test_to_json(mpr::stats::threshold_test(reps, rho, alpha));
    results["rho"] = rho;
    results["n"] = reps.size();
  } else if (compare.size() == 2) {
    ctx.add_input("replicates_a", compare[0]);
    ctx.add_input("replicates_b", compare[1]);
    const auto a = read_replicates(compare[0]);
    const auto b = read_replicates(compare[1]);
    results = mpr::test_to_json(mpr::stats::model_compare_test(a, b, alpha));
    results["n_a"] = a.size();
    results["n_b"] = b.size();
  } else {
    throw mpr::input_error("need --threshold RHO or --compare FILE_A FILE_B");
  }
  ctx.emit(std::move(results));
}

mpr::AttributeSchema schema_from_config(const ordered_json& cfg, const fs::path& base,
                                        ReportContext& ctx) {
  if (cfg.contains("schema_file")) {
    const auto path = (base / cfg["schema_file"].get<std::string>()).string();
    ctx.add_input("schema", path);
    return mpr::load_schema_file(path);
  }
  if (cfg.contains("schema")) {
    ordered_json schema_doc = cfg["schema"];
    return mpr::load_schema(schema_doc.dump());
  }
  throw mpr::input_error("config: need \"schema\" (inline) or \"schema_file\"");
}

mpr::ExactDistribution distribution_from_config(const ordered_json& cfg,
                                                const std::string& key,
                                                const mpr::AttributeSchema& schema) {
  if (!cfg.contains(key))
    throw mpr::input_error("config: missing \"" + key + "\" cell-probability map");
  if (cfg[key].is_string() && cfg[key] == "uniform") {
    const auto cells = schema.joint_cell_count();
    return mpr::ExactDistribution(
        schema, std::vector<double>(cells, 1.0 / static_cast<double>(cells)));
  }
  return mpr::reference_from_proportions(schema, mpr::proportions_from_json(cfg[key]));
}

void run_tune(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed_override, ReportContext& ctx) {
  ctx.add_input("config", config_path);
  const auto cfg_json = parse_json_file(config_path, "config");
  const fs::path base = fs::path(config_path).parent_path();
  const auto schema = schema_from_config(cfg_json, base, ctx);

  mpr::TuneConfig cfg;
  auto opt_num = [&](const char* key, auto& slot) {
    if (cfg_json.contains(key))
      slot = cfg_json[key].template get<std::decay_t<decltype(slot)>>();
  };
  opt_num("iterations", cfg.iterations);
  opt_num("batch_size", cfg.batch_size);
  opt_num("learning_rate", cfg.learning_rate);
  opt_num("reg_lambda", cfg.reg_lambda);
  opt_num("buffer_samples", cfg.buffer_samples);
  opt_num("buffer_functions", cfg.buffer_functions);
  opt_num("grad_clip_norm", cfg.grad_clip_norm);
  opt_num("kink_smoothing", cfg.kink_smoothing);
  opt_num("eval_every", cfg.eval_every);
  opt_num("eval_samples", cfg.eval_samples);
  opt_num("seed", cfg.seed);
  if (cfg_json.contains("dedup_witnesses"))
    cfg.dedup_witnesses = cfg_json["dedup_witnesses"].get<bool>();
  if (seed_override) cfg.seed = *seed_override;
  ctx.seed = cfg.seed;
  ctx.seeded = true;
  if (cfg_json.contains("class"))
    cfg.function_class = mpr::function_class_from_json(cfg_json["class"], schema);

  if (!cfg_json.contains("reference") || !cfg_json["reference"].is_object())
    throw mpr::input_error(
        "config.reference: need {\"proportions\": {...}} or {\"csv\": path}");
  std::optional<mpr::ReferenceSpec> reference;
  if (cfg_json["reference"].contains("proportions")) {
    reference.emplace(mpr::reference_from_proportions(
        schema, mpr::proportions_from_json(cfg_json["reference"]["proportions"])));
  } else if (cfg_json["reference"].contains("csv")) {
    const auto path = (base / cfg_json["reference"]["csv"].get<std::string>()).string();
    ctx.add_input("reference", path);
    reference.emplace(mpr::load_samples_file(schema, path, "reference"));
  } else {
    throw mpr::input_error("config.reference: need \"proportions\" or \"csv\"");
  }

  const auto init = distribution_from_config(cfg_json, "generator_init", schema);
  const auto gen = mpr::GeneratorModel::from_distribution(schema, init.probs());

  const auto traj = mpr::finetune(gen, *reference, cfg);

  fs::create_directories(out_dir);
  const auto csv_path = (fs::path(out_dir) / "trajectory.csv").string();
  const auto gen_path = (fs::path(out_dir) / "generator.json").string();
  mpr::write_text_file(csv_path, mpr::trajectory_to_csv(traj));
  mpr::write_text_file(
      gen_path,
      mpr::distribution_to_json(schema, traj.final_model.probabilities()).dump(2) + "\n");

  ordered_json results;
  results["iterations"] = cfg.iterations;
  results["records"] = traj.records.size();
  results["final_mpr"] = traj.records.back().mpr_value;
  results["final_loss_mpr"] = traj.records.back().loss_mpr;
  results["final_loss_drift"] = traj.records.back().loss_drift;
  results["trajectory_csv"] = csv_path;
  results["generator_json"] = gen_path;
  ctx.emit(std::move(results));
}

void run_experiment(const std::string& kind, const std::string& config_path,
                    const std::string& out_dir, std::optional<std::uint64_t> seed_override,
                    ReportContext& ctx) {
  ctx.add_input("config", config_path);
  const auto cfg = parse_json_file(config_path, "config");
  const fs::path base = fs::path(config_path).parent_path();
  const auto schema = schema_from_config(cfg, base, ctx);
  std::uint64_t seed = cfg.contains("seed") ? cfg["seed"].get<std::uint64_t>() : 0;
  if (seed_override) seed = *seed_override;
  ctx.seed = seed;
  ctx.seeded = true;
  fs::create_directories(out_dir);
  ordered_json results;
  results["kind"] = kind;

  if (kind == "gap") {
    const auto p = distribution_from_config(cfg, "p", schema);
    const auto r = distribution_from_config(cfg, "r", schema);
    std::vector<int> depths{1, 2, 3};
    std::vector<long long> sizes{50, 100, 200, 400};
    if (cfg.contains("depths")) depths = cfg["depths"].get<std::vector<int>>();
    if (cfg.contains("sample_sizes"))
      sizes = cfg["sample_sizes"].get<std::vector<long long>>();
    const int reps = cfg.contains("reps") ? cfg["reps"].get<int>() : 30;
    const auto rows = mpr::stats::gap_experiment(p, r, depths, sizes, reps, seed);
    const auto csv_path = (fs::path(out_dir) / "gap.csv").string();
    mpr::write_text_file(csv_path, mpr::gap_rows_to_csv(rows));
    results["reps"] = reps;
    results["csv"] = csv_path;
    results["table"] = mpr::gap_rows_to_json(rows);
  } else if (kind == "heatmap") {
    const auto g = distribution_from_config(cfg, "g", schema);
    const auto r = distribution_from_config(cfg, "r", schema);
    mpr::FunctionClassSpec spec = mpr::DecisionTree{1};
    if (cfg.contains("class")) spec = mpr::function_class_from_json(cfg["class"], schema);
    if (!cfg.contains("k_list") || !cfg.contains("m_list"))
      throw mpr::input_error("config: heatmap needs k_list and m_list");
    const auto ks = cfg["k_list"].get<std::vector<long long>>();
    const auto ms = cfg["m_list"].get<std::vector<long long>>();
    mpr::stats::BootstrapConfig boot;
    boot.resample_size = cfg.contains("resample_size")
                             ? cfg["resample_size"].get<long long>()
                             : 0;  // 0: resample to k
    if (cfg.contains("repetitions")) boot.repetitions = cfg["repetitions"].get<int>();
    if (cfg.contains("alpha")) boot.alpha = cfg["alpha"].get<double>();
    const auto cells = mpr::stats::std_heatmap(g, r, spec, ks, ms, boot, seed);
    const auto csv_path = (fs::path(out_dir) / "heatmap.csv").string();
    mpr::write_text_file(csv_path, mpr::heatmap_to_csv(cells));
    results["repetitions"] = boot.repetitions;
    results["csv"] = csv_path;
    results["table"] = mpr::heatmap_to_json(cells);
  } else {
    throw mpr::input_error("--kind must be gap or heatmap");
  }
  ctx.emit(std::move(results));
}

void run_report(const std::string& runs_dir, ReportContext& ctx) {
  if (!fs::is_directory(runs_dir))
    throw mpr::input_error("--runs: not a directory: " + runs_dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(runs_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw mpr::input_error("--runs: no .json run reports in " + runs_dir);

  ordered_json runs = ordered_json::array();
  std::vector<double> values;
  for (const auto& file : files) {
    const auto j = parse_json_file(file, "run report");
    if (!j.contains("results")) throw mpr::input_error(file + ": not a run report");
    const auto& res = j["results"];
    double value = 0.0;
    if (res.contains("point_estimate"))
      value = res["point_estimate"].get<double>();
    else if (res.contains("estimate") && res["estimate"].contains("value"))
      value = res["estimate"]["value"].get<double>();
    else
      throw mpr::input_error(file + ": no estimate found");
    values.push_back(value);
    runs.push_back(
        {{"file", file},
         {"label", res.contains("label") ? res["label"].get<std::string>() : file},
         {"mpr", value}});
  }

  ordered_json results;
  results["runs"] = std::move(runs);
  results["count"] = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  // the across-prompt aggregate is the plain mean of per-prompt values
  results["aggregation"] = "mean-of-per-prompt-mpr";
  results["mean_mpr"] = mean;
  if (values.size() >= 2)
    results["variance"] = mpr::stats::variance_across_prompts(values);
  else
    results["variance"] = nullptr;
  ctx.emit(std::move(results));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-group proportional representation auditing"};
  app.require_subcommand(1);
  ReportContext ctx;
  ctx.command = join_args(argc, argv);

  // measure
  MeasureInputs measure_in;
  auto* measure = app.add_subcommand("measure", "compute the representation metric");
  add_measure_flags(measure, measure_in);
  measure->add_option("--out", ctx.out_path, "also write the report here");

  // bootstrap
  MeasureInputs boot_in;
  mpr::stats::BootstrapConfig boot_cfg;
  auto* bootstrap = app.add_subcommand("bootstrap", "bootstrap uncertainty of the metric");
  add_measure_flags(bootstrap, boot_in);
  bootstrap->add_option("--resamples", boot_cfg.resample_size,
                        "resample size drawn per repetition");
  bootstrap->add_option("--reps", boot_cfg.repetitions, "number of repetitions");
  bootstrap->add_option("--alpha", boot_cfg.alpha, "percentile interval level");
  bootstrap->add_flag("--joint-resample", boot_cfg.joint_resample,
                      "also resample the reference");
  bootstrap->add_option("--seed", ctx.seed, "master seed")->required();
  bootstrap->add_option("--out", ctx.out_path, "also write the report here");

  // bound
  BoundFlags bound_f;
  auto* bound = app.add_subcommand("bound", "evaluate generalization bounds");
  bound->add_option("--which", bound_f.which, "gap|prompt|bernstein")
      ->required()
      ->check(CLI::IsMember({"gap", "prompt", "bernstein"}));
  bound->add_option("--B", bound_f.in.range_b, "range constant")
      ->each([&](const std::string&) { bound_f.have_b = true; });
  bound->add_option("--rad-g", bound_f.in.rad_g, "generated-side complexity plug-in")
      ->each([&](const std::string&) { bound_f.have_rad_g = true; });
  bound->add_option("--rad-r", bound_f.in.rad_r, "reference-side complexity plug-in")
      ->each([&](const std::string&) { bound_f.have_rad_r = true; });
  bound->add_option("--k", bound_f.in.k, "generated sample count")
      ->each([&](const std::string&) { bound_f.have_k = true; });
  bound->add_option("--m", bound_f.in.m, "reference sample count")
      ->each([&](const std::string&) { bound_f.have_m = true; });
  bound->add_option("--delta", bound_f.in.delta, "confidence parameter");
  bound->add_option("--eps", bound_f.in.epsilon, "deviation epsilon");
  bound->add_option("--N", bound_f.in.prompt_count, "prompt count");
  bound->add_option("--lambda-sup", bound_f.in.lambda_sup,
                    "sup over prompts of the complexity sum");
  bound->add_option("--sigma2", bound_f.in.sigma2, "across-prompt variance");
  bound->add_option("--variance-file", bound_f.variance_file,
                    "per-prompt metric values; sets sigma2 empirically");
  bound->add_flag("--squared-tail", bound_f.squared_tail,
                  "square the deviation term in the prompt bound");
  bound->add_option("--schema", bound_f.schema_path, "schema for plug-in estimation");
  bound->add_option("--generated", bound_f.generated_path,
                    "generated CSV; estimates rad-g and k");
  bound->add_option("--reference", bound_f.reference_path,
                    "reference CSV; estimates rad-r and m");
  bound->add_option("--class", bound_f.class_name, "linear|tree")
      ->check(CLI::IsMember({"linear", "tree"}));
  bound->add_option("--depth", bound_f.depth, "tree depth");
  bound->add_option("--rad-trials", bound_f.rad_trials, "sign draws per estimate");
  bound->add_option("--seed", ctx.seed, "master seed for plug-in estimation");
  bound->add_option("--out", ctx.out_path, "also write the report here");

  // test
  std::string test_replicates;
  std::vector<std::string> test_compare;
  double test_rho = 0.0, test_alpha = 0.05;
  auto* test = app.add_subcommand("test", "hypothesis tests on replicate values");
  test->add_option("--replicates", test_replicates,
                   "replicate file (text lines or bootstrap report JSON)");
  auto* thr = test->add_option("--threshold", test_rho,
                               "one-sided test of mean below this target");
  test->add_option("--compare", test_compare, "two replicate files to compare")
      ->expected(2);
  test->add_option("--alpha", test_alpha, "significance level");
  test->add_option("--out", ctx.out_path, "also write the report here");

  // tune
  std::string tune_config, tune_out_dir = ".";
  std::uint64_t tune_seed = 0;
  bool tune_seed_set = false;
  auto* tune = app.add_subcommand("tune", "fine-tune a generator toward a reference");
  tune->add_option("--config", tune_config, "tuning config JSON")->required();
  tune->add_option("--out-dir", tune_out_dir, "where to write trajectory and generator");
  tune->add_option("--seed", tune_seed, "overrides the config seed")
      ->each([&](const std::string&) { tune_seed_set = true; });
  tune->add_option("--out", ctx.out_path, "also write the report here");

  // experiment
  std::string exp_kind, exp_config, exp_out_dir = ".";
  std::uint64_t exp_seed = 0;
  bool exp_seed_set = false;
  auto* experiment = app.add_subcommand("experiment", "estimation-quality experiments");
  experiment->add_option("--kind", exp_kind, "gap|heatmap")->required();
  experiment->add_option("--config", exp_config, "experiment config JSON")->required();
  experiment->add_option("--out-dir", exp_out_dir, "where to write CSV tables");
  experiment->add_option("--seed", exp_seed, "overrides the config seed")
      ->each([&](const std::string&) { exp_seed_set = true; });
  experiment->add_option("--out", ctx.out_path, "also write the report here");

  // report
  std::string runs_dir;
  auto* report = app.add_subcommand("report", "aggregate run reports across prompts");
  report->add_option("--runs", runs_dir, "directory of run report JSON files")->required();
  report->add_option("--out", ctx.out_path, "also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (measure->parsed()) {
      run_measure(measure_in, ctx);
    } else if (bootstrap->parsed()) {
      ctx.seeded = true;
      run_bootstrap(boot_in, boot_cfg, ctx);
    } else if (bound->parsed()) {
      ctx.seeded = true;
      run_bound(bound_f, ctx);
    } else if (test->parsed()) {
      run_test(test_replicates, test_compare, thr->count() > 0, test_rho, test_alpha, ctx);
    } else if (tune->parsed()) {
      run_tune(tune_config, tune_out_dir,
               tune_seed_set ? std::optional<std::uint64_t>(tune_seed) : std::nullopt, ctx);
    } else if (experiment->parsed()) {
      run_experiment(exp_kind, exp_config, exp_out_dir,
                     exp_seed_set ? std::optional<std::uint64_t>(exp_seed) : std::nullopt,
                     ctx);
    } else if (report->parsed()) {
      run_report(runs_dir, ctx);
    }
  } catch (const mpr::guard_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const mpr::input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
