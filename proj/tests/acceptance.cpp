// Acceptance suite: end-to-end checks of the closed forms against
// exhaustive oracles, the bound and experiment behaviors on synthetic truth,
// the buffered fine-tuning scenario, and CLI reproducibility. Prints one
// PASS/FAIL line per criterion; exits nonzero if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "mpr/optimizer.hpp"
#include "mpr/rng.hpp"
#include "mpr/serialize.hpp"
#include "mpr/stats.hpp"

using namespace mpr;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(const char* name, bool pass, double seconds, const std::string& detail) {
  std::printf("[%s] %-28s (%6.1fs)  %s\n", pass ? "PASS" : "FAIL", name, seconds,
              detail.c_str());
  if (!pass) ++failures;
}

template <typename Fn>
void criterion(const char* name, Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = false;
  try {
    pass = fn(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(name, pass, secs, detail);
}

SampleSet random_sign_set(long long rows, int dim, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> data(rows, std::vector<double>(dim));
  for (auto& row : data)
    for (auto& v : row) v = rng.sign();
  return SampleSet::from_raw(data, "rand");
}

AttributeSchema three_binary_schema() {
  return AttributeSchema(
      {{"a", {"x", "y"}}, {"b", {"x", "y"}}, {"c", {"x", "y"}}});
}

AttributeSchema two_binary_schema() {
  return AttributeSchema({{"gender", {"male", "female"}}, {"age", {"young", "old"}}});
}

// fixed synthetic truth over 8 joint cells
ExactDistribution truth_p() {
  return ExactDistribution(three_binary_schema(),
                           {0.18, 0.07, 0.12, 0.13, 0.06, 0.14, 0.20, 0.10});
}

ExactDistribution truth_r() {
  return ExactDistribution(three_binary_schema(),
                           {0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125});
}

// --- criteria ---

bool tree_oracle_equivalence(std::string& detail) {
  double worst = 0.0;
  int checked = 0;
  for (std::uint64_t inst = 0; inst < 100; ++inst) {
    Rng rng(derive_seed(9000, "acc/tree_oracle", inst));
    const int n = 2 + static_cast<int>(rng.below(4));  // 2..5
    const long long k = 1 + static_cast<long long>(rng.below(200));
    const long long m = 1 + static_cast<long long>(rng.below(200));
    const auto g = random_sign_set(k, n, derive_seed(9001, "acc/g", inst));
    const auto r = random_sign_set(m, n, derive_seed(9002, "acc/r", inst));
    for (int depth = 1; depth <= std::min(3, n); ++depth) {
      const double closed = mpr_tree(g, r, depth).value;
      const double oracle = brute_force_tree(g, r, depth).first;
      worst = std::max(worst, std::abs(closed - oracle));
      ++checked;
    }
  }
  detail = "max |closed - exhaustive| = " + format_double(worst) + " over " +
           std::to_string(checked) + " checks";
  return worst <= 1e-12;
}

bool linear_closed_form(std::string& detail) {
  const auto g = SampleSet::from_raw({{1, 0}, {1, 0}});
  const auto r = SampleSet::from_raw({{0, 1}, {0, 1}});
  const double hand = std::abs(mpr_linear(g, r).value - std::sqrt(2.0));
  if (hand > 1e-12) {
    detail = "hand-built case deviates by " + format_double(hand);
    return false;
  }
  double worst_ratio = 1.0;
  for (std::uint64_t inst = 0; inst < 20; ++inst) {
    Rng rng(derive_seed(9100, "acc/linear", inst));
    const int d = 2 + static_cast<int>(rng.below(3));  // 2..4
    const long long k = 30 + static_cast<long long>(rng.below(171));
    const long long m = 30 + static_cast<long long>(rng.below(171));
    const auto gs = random_sign_set(k, d, derive_seed(9101, "acc/lg", inst));
    const auto rs = random_sign_set(m, d, derive_seed(9102, "acc/lr", inst));
    const double closed = mpr_linear(gs, rs).value;
    const double searched = brute_force_linear(gs, rs, 100000, inst);
    if (searched > closed + 1e-9) {
      detail = "search exceeded the closed form";
      return false;
    }
    if (closed > 0.0) worst_ratio = std::min(worst_ratio, searched / closed);
  }
  detail = "hand case exact; worst search/closed ratio = " + format_double(worst_ratio);
  return worst_ratio >= 0.99;
}

bool tree_monotonicity(std::string& detail) {
  for (std::uint64_t inst = 0; inst < 50; ++inst) {
    Rng rng(derive_seed(9200, "acc/mono", inst));
    const int n = 3 + static_cast<int>(rng.below(3));  // 3..5
    const long long k = 20 + static_cast<long long>(rng.below(120));
    const long long m = 20 + static_cast<long long>(rng.below(120));
    const auto g = random_sign_set(k, n, derive_seed(9201, "acc/mg", inst));
    const auto r = random_sign_set(m, n, derive_seed(9202, "acc/mr", inst));
    double prev = 0.0;
    for (int depth = 1; depth <= n; ++depth) {
      const double v = mpr_tree(g, r, depth).value;
      if (v < prev - 1e-12) {
        detail = "depth monotonicity violated at instance " + std::to_string(inst);
        return false;
      }
      prev = v;
    }
    // appending one more feature column must not decrease the value
    Rng ext_rng(derive_seed(9203, "acc/ext", inst));
    auto extend = [&ext_rng](const SampleSet& s) {
      std::vector<std::vector<double>> rows;
      for (long long i = 0; i < s.size(); ++i) {
        rows.emplace_back(s.row(i).begin(), s.row(i).end());
        rows.back().push_back(ext_rng.sign());
      }
      return SampleSet::from_raw(rows, "ext");
    };
    const int depth = 2;
    if (mpr_tree(extend(g), extend(r), depth).value <
        mpr_tree(g, r, depth).value - 1e-12) {
      detail = "attribute monotonicity violated at instance " + std::to_string(inst);
      return false;
    }
  }
  detail = "50 instances, depth and attribute monotonicity hold";
  return true;
}

bool bound_validity(std::string& detail) {
  const auto p = truth_p();
  const auto r = truth_r();
  const int depth = 2;
  const double exact = mpr_exact(p, r, DecisionTree{depth}).value;
  const double b = range_constant(DecisionTree{depth}, p.schema()).b;
  const double delta = 0.1;
  std::string parts;
  for (long long size : {50LL, 200LL}) {
    int violations = 0;
    const int trials = 500;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t unit = static_cast<std::uint64_t>(size) * 10000 + t;
      const auto gs = p.sample(size, derive_seed(9300, "acc/bg", unit), "g");
      const auto rs = r.sample(size, derive_seed(9301, "acc/br", unit), "r");
      const double gap = std::abs(mpr_tree(gs, rs, depth).value - exact);
      stats::BoundInputs in;
      in.range_b = b;
      in.k = size;
      in.m = size;
      in.delta = delta;
      in.rad_g = stats::empirical_rademacher(DecisionTree{depth}, gs, 40,
                                             derive_seed(9302, "acc/radg", unit))
                     .value;
      in.rad_r = stats::empirical_rademacher(DecisionTree{depth}, rs, 40,
                                             derive_seed(9303, "acc/radr", unit))
                     .value;
      if (gap > stats::sample_gap_bound(in)) ++violations;
    }
    const double frac = static_cast<double>(violations) / trials;
    parts += "k=m=" + std::to_string(size) + ": " + format_double(frac) + " ";
    if (frac > 0.12) {
      detail = parts + "(exceeds 0.12)";
      return false;
    }
  }
  detail = "violation fractions " + parts + "<= 0.12";
  return true;
}

bool gap_experiment_shape(std::string& detail) {
  const auto p = truth_p();
  const auto r = truth_r();
  const std::vector<int> depths{1, 3};
  const std::vector<long long> sizes{50, 100, 200, 400};
  const int reps = 30;
  const int seeds = 20;
  // averaged tables across seeds
  std::vector<double> avg_max(depths.size() * sizes.size(), 0.0);
  std::vector<double> avg_mean(depths.size() * sizes.size(), 0.0);
  for (int s = 0; s < seeds; ++s) {
    const auto rows = stats::gap_experiment(p, r, depths, sizes, reps,
                                            derive_seed(9400, "acc/gapexp", s));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      avg_max[i] += rows[i].max_deviation / seeds;
      avg_mean[i] += rows[i].mean_deviation / seeds;
    }
  }
  auto at = [&](std::size_t d, std::size_t s) { return d * sizes.size() + s; };
  for (std::size_t d = 0; d < depths.size(); ++d) {
    if (!(avg_max[at(d, 0)] > avg_max[at(d, sizes.size() - 1)])) {
      detail = "max deviation does not decrease with sample size at depth " +
               std::to_string(depths[d]);
      return false;
    }
  }
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    if (!(avg_mean[at(1, s)] >= avg_mean[at(0, s)])) {
      detail = "depth-3 deviation below depth-1 at size " + std::to_string(sizes[s]);
      return false;
    }
  }
  detail = "depth-1 max dev " + format_double(avg_max[at(0, 0)]) + " -> " +
           format_double(avg_max[at(0, sizes.size() - 1)]) + "; depth-3 " +
           format_double(avg_max[at(1, 0)]) + " -> " +
           format_double(avg_max[at(1, sizes.size() - 1)]);
  return true;
}

bool heatmap_shape(std::string& detail) {
  const auto schema = two_binary_schema();
  const ExactDistribution g(schema, {0.55, 0.2, 0.15, 0.1});
  const ExactDistribution r(schema, {0.25, 0.25, 0.25, 0.25});
  const std::vector<long long> ks{50, 400};
  const std::vector<long long> ms{50, 400};
  stats::BootstrapConfig cfg;
  cfg.resample_size = 0;
  cfg.repetitions = 60;
  double small = 0.0, large = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    const auto cells = stats::std_heatmap(g, r, DecisionTree{1}, ks, ms, cfg,
                                          derive_seed(9500, "acc/heat", s));
    small += cells.front().std_dev / seeds;  // (50, 50)
    large += cells.back().std_dev / seeds;   // (400, 400)
  }
  detail = "avg std (50,50) = " + format_double(small) + ", (400,400) = " +
           format_double(large);
  return large < small;
}

bool optimizer_scenario(std::string& detail) {
  const auto schema = two_binary_schema();
  const auto gen = GeneratorModel::from_distribution(schema, {0.85, 0.05, 0.05, 0.05});
  const ReferenceSpec ref{ExactDistribution(schema, {0.25, 0.25, 0.25, 0.25})};
  TuneConfig cfg;
  cfg.iterations = 2000;
  cfg.batch_size = 8;
  cfg.reg_lambda = 0.5;
  cfg.buffer_samples = 32;
  cfg.buffer_functions = 32;
  cfg.function_class = DecisionTree{1};
  cfg.eval_every = 100;
  cfg.eval_samples = 10000;
  cfg.seed = 17;
  const auto a = finetune(gen, ref, cfg);
  const auto b = finetune(gen, ref, cfg);
  const auto& last = a.records.back();
  detail = "final mpr = " + format_double(last.mpr_value) +
           ", drift = " + format_double(last.loss_drift);
  if (a.final_model.logits() != b.final_model.logits() ||
      a.records.size() != b.records.size()) {
    detail += " (nondeterministic)";
    return false;
  }
  for (std::size_t i = 0; i < a.records.size(); ++i)
    if (a.records[i].mpr_value != b.records[i].mpr_value) {
      detail += " (nondeterministic records)";
      return false;
    }
  return last.mpr_value < 0.05 && last.loss_drift <= 0.45;
}

bool gradient_correctness(std::string& detail) {
  const auto schema = two_binary_schema();
  const ReferenceSpec ref{ExactDistribution(schema, {0.25, 0.25, 0.25, 0.25})};
  Rng rng(424242);
  double worst = 0.0;
  int tested = 0;
  while (tested < 50) {
    std::vector<double> base(4), logits(4);
    for (auto& v : base) v = rng.gaussian();
    for (auto& v : logits) v = rng.gaussian();
    GeneratorModel gen(schema, base);
    gen.set_logits(logits);
    std::vector<Witness> witnesses;
    for (int f : {0, 1, 2}) witnesses.push_back(make_tree_witness({f}, {-1, +1}));

    const auto probs = gen.probabilities();
    const auto base_probs = gen.base_probabilities();
    bool kink = false;
    for (const auto& w : witnesses) {
      double mean = 0.0;
      for (long long cell = 0; cell < 4; ++cell)
        mean += probs[cell] * evaluate(w, schema.encode_cell(cell));
      if (std::abs(mean) < 1e-3) kink = true;
    }
    for (int cell = 0; cell < 4; ++cell)
      if (std::abs(probs[cell] - base_probs[cell]) < 1e-3) kink = true;
    if (kink) continue;
    ++tested;

    const double lambda = 0.5;
    const auto grad = grad_loss(gen, witnesses, ref, lambda);
    const double h = 1e-5;
    for (int j = 0; j < 4; ++j) {
      auto plus = logits, minus = logits;
      plus[j] += h;
      minus[j] -= h;
      GeneratorModel gp(schema, base);
      gp.set_logits(plus);
      GeneratorModel gm(schema, base);
      gm.set_logits(minus);
      const double fd = (objective_value(gp, witnesses, ref, lambda) -
                         objective_value(gm, witnesses, ref, lambda)) /
                        (2.0 * h);
      worst = std::max(worst, std::abs(grad[j] - fd) /
                                  std::max({std::abs(grad[j]), std::abs(fd), 1e-6}));
    }
  }
  detail = "max relative error = " + format_double(worst) + " at 50 points";
  return worst < 1e-4;
}

bool test_calibration(std::string& detail) {
  const int pairs = 1000;
  const int n = 100;
  int rejections = 0;
  for (int t = 0; t < pairs; ++t) {
    Rng rng(derive_seed(9600, "acc/calib", t));
    std::vector<double> a(n), b(n);
    for (auto& v : a) v = 0.3 + 0.05 * rng.gaussian();
    for (auto& v : b) v = 0.3 + 0.05 * rng.gaussian();
    if (stats::model_compare_test(a, b, 0.05).reject) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / pairs;
  detail = "false rejection rate = " + format_double(rate);
  return rate >= 0.03 && rate <= 0.07;
}

// --- CLI determinism ---

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string cmd = std::string(MPR_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {};
  std::string out;
  char buf[4096];
  for (;;) {
    const std::size_t got = fread(buf, 1, sizeof buf, pipe);
    if (got == 0) break;
    out.append(buf, got);
  }
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string strip_wall_clock(const std::string& report) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= report.size()) {
    std::size_t end = report.find('\n', pos);
    if (end == std::string::npos) end = report.size();
    const std::string line = report.substr(pos, end - pos);
    if (line.find("wall_clock_sec") == std::string::npos) out += line + "\n";
    pos = end + 1;
  }
  return out;
}

bool cli_determinism(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "mpr_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& text) {
    write_text_file((dir / name).string(), text);
    return (dir / name).string();
  };

  const auto schema = put(
      "schema.json",
      R"({"attributes":[{"name":"gender","categories":["male","female"]},)"
      R"({"name":"age","categories":["young","old"]}]})");
  std::string csv = "gender,age\n";
  for (int i = 0; i < 100; ++i)
    csv += (i % 5 < 3) ? "male,young\n" : ((i % 5 == 3) ? "female,old\n" : "female,young\n");
  const auto gen = put("gen.csv", csv);
  const auto props = put(
      "props.json",
      R"({"male|young":0.25,"male|old":0.25,"female|young":0.25,"female|old":0.25})");
  std::string reps_text;
  for (int i = 0; i < 25; ++i) reps_text += std::to_string(0.2 + 0.001 * (i % 7)) + "\n";
  const auto reps = put("reps.txt", reps_text);
  const auto tune_cfg = put("tune.json", R"({
    "schema_file": "schema.json",
    "generator_init": {"male|young": 0.85, "male|old": 0.05,
                       "female|young": 0.05, "female|old": 0.05},
    "reference": {"proportions": {"male|young": 0.25, "male|old": 0.25,
                                  "female|young": 0.25, "female|old": 0.25}},
    "class": {"kind": "tree", "depth": 1},
    "iterations": 200, "eval_every": 50, "eval_samples": 500, "seed": 3})");
  const auto gap_cfg = put("gap.json", R"({
    "schema": {"attributes":[{"name":"kind","categories":["A","B"]}]},
    "p": {"A": 0.7, "B": 0.3}, "r": {"A": 0.5, "B": 0.5},
    "depths": [1], "sample_sizes": [40, 80], "reps": 10, "seed": 2})");
  const auto heat_cfg = put("heatmap.json", R"({
    "schema": {"attributes":[{"name":"kind","categories":["A","B"]}]},
    "g": {"A": 0.7, "B": 0.3}, "r": {"A": 0.5, "B": 0.5},
    "k_list": [40], "m_list": [40], "repetitions": 15, "seed": 6})");
  const auto runs_dir = (dir / "runs").string();
  fs::create_directories(runs_dir);
  write_text_file(runs_dir + "/a.json",
                  R"({"results":{"label":"x","estimate":{"value":0.2}}})");
  write_text_file(runs_dir + "/b.json",
                  R"({"results":{"label":"y","estimate":{"value":0.4}}})");

  const std::vector<std::string> commands = {
      "measure --schema " + schema + " --generated " + gen + " --proportions " + props +
          " --class tree --depth 2",
      "measure --schema " + schema + " --generated " + gen + " --reference " + gen +
          " --class linear",
      "bootstrap --schema " + schema + " --generated " + gen + " --proportions " +
          props + " --class tree --depth 1 --resamples 100 --reps 30 --seed 5",
      "bound --which gap --schema " + schema + " --generated " + gen + " --reference " +
          gen + " --class tree --depth 1 --delta 0.1 --seed 9",
      "bound --which prompt --B 2 --eps 1 --N 20 --lambda-sup 0.05 --k 500 --m 500 "
          "--seed 0",
      "bound --which bernstein --B 2 --eps 1 --N 20 --lambda-sup 0.05 --sigma2 0.01 "
          "--k 500 --m 500 --seed 0",
      "test --replicates " + reps + " --threshold 0.25",
      "test --compare " + reps + " " + reps,
      "tune --config " + tune_cfg + " --out-dir " + (dir / "tune_out").string(),
      "experiment --kind gap --config " + gap_cfg + " --out-dir " +
          (dir / "gap_out").string(),
      "experiment --kind heatmap --config " + heat_cfg + " --out-dir " +
          (dir / "heat_out").string(),
      "report --runs " + runs_dir,
  };
  for (const auto& cmd : commands) {
    const auto a = run_cli(cmd);
    const auto b = run_cli(cmd);
    if (a.exit_code != 0 || b.exit_code != 0) {
      detail = "command failed: " + cmd + "\n" + a.output;
      return false;
    }
    if (strip_wall_clock(a.output) != strip_wall_clock(b.output)) {
      detail = "numeric payload differs across reruns: " + cmd;
      return false;
    }
  }
  detail = std::to_string(commands.size()) + " commands byte-identical across reruns";
  return true;
}

}  // namespace

int main() {
  criterion("tree-oracle-equivalence", tree_oracle_equivalence);
  criterion("linear-closed-form", linear_closed_form);
  criterion("tree-monotonicity", tree_monotonicity);
  criterion("bound-validity", bound_validity);
  criterion("gap-experiment-shape", gap_experiment_shape);
  criterion("heatmap-shape", heatmap_shape);
  criterion("optimizer-scenario", optimizer_scenario);
  criterion("gradient-correctness", gradient_correctness);
  criterion("test-calibration", test_calibration);
  criterion("cli-determinism", cli_determinism);
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
