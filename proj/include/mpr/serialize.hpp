#pragma once

#include <optional>
#include <string>

#include "json.hpp"
#include "mpr/optimizer.hpp"
#include "mpr/stats.hpp"

namespace mpr {

using ordered_json = nlohmann::ordered_json;

// Witnesses: linear as a plain vector of reals; trees as
// {"features": [names], "leaf_signs": {"bits": +/-1}} where character j of a
// bits key is '1' iff the j-th listed feature equals +1; indicators as
// {"index":..., "where":..., "outputs":...}. Feature indices render as
// schema feature names when a schema is available, else "f<index>".
ordered_json witness_to_json(const Witness& witness, const AttributeSchema* schema);

ordered_json estimate_to_json(const MprEstimate& est, const AttributeSchema* schema);

ordered_json bootstrap_to_json(const stats::BootstrapResult& result);

ordered_json test_to_json(const stats::TestResult& result);

// Function class from CLI/config JSON:
//   {"kind":"linear"} | {"kind":"tree","depth":N} |
//   {"kind":"explicit","indicators":[{"where":{attr:category,...},
//                                     "outputs":[miss,hit]}, ...]}
FunctionClassSpec function_class_from_json(const ordered_json& j,
                                           const AttributeSchema& schema);

// "cell-key" -> probability maps for exact references and generator inits.
std::map<std::string, double> proportions_from_json(const ordered_json& j);

ordered_json distribution_to_json(const AttributeSchema& schema,
                                  std::span<const double> cell_probs);

// CSV renderings (long format, '.' decimals, '\n' line endings).
std::string gap_rows_to_csv(std::span<const stats::GapExperimentRow> rows);
std::string heatmap_to_csv(std::span<const stats::HeatmapCell> cells);
std::string trajectory_to_csv(const TuneTrajectory& traj);

ordered_json gap_rows_to_json(std::span<const stats::GapExperimentRow> rows);
ordered_json heatmap_to_json(std::span<const stats::HeatmapCell> cells);

// Shortest round-trip decimal rendering.
std::string format_double(double v);

// Content digest of a byte string, "fnv1a64:<hex>".
std::string content_digest(std::string_view bytes);
std::string file_digest(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace mpr
