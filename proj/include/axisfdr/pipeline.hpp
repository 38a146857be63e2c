#pragma once

// End-to-end analysis driven by a PipelineConfig: load volumes, analyse,
// write the report and companion files.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "axisfdr/analysis.hpp"
#include "axisfdr/errors.hpp"
#include "axisfdr/report.hpp"
#include "axisfdr/version.hpp"
#include "axisfdr/volume_io.hpp"

namespace axisfdr {

namespace fs = std::filesystem;

struct PipelineConfig {
  std::vector<fs::path> group1;  // .dvol files, or a single directory of them
  std::vector<fs::path> group2;
  fs::path mask;                 // empty: every voxel
  AnalysisOptions analysis;
  std::uint64_t seed = 0;
  fs::path out = "axisfdr_out";
};

[[nodiscard]] inline NullMode parse_null_mode(const std::string& s) {
  if (s == "theoretical") return NullMode::theoretical;
  if (s == "empirical") return NullMode::empirical;
  throw DomainError("null mode must be theoretical or empirical, got '" + s + "'");
}

[[nodiscard]] inline P0Mode parse_p0_mode(const std::string& s) {
  if (s == "fit") return P0Mode::fit;
  if (s == "one") return P0Mode::one;
  throw DomainError("p0 mode must be fit or one, got '" + s + "'");
}

namespace pipeline_detail {

inline std::vector<fs::path> path_list(const report::json& v, const char* key) {
  std::vector<fs::path> out;
  if (v.is_string()) {
    out.emplace_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& p : v) out.emplace_back(p.get<std::string>());
  } else {
    throw DomainError(std::string("config key '") + key + "' must be a path or a list of paths");
  }
  return out;
}

}  // namespace pipeline_detail

/// Reads a JSON config file. Keys mirror the command-line flags; keys that
/// are absent keep their defaults.
[[nodiscard]] inline PipelineConfig load_config(const fs::path& path) {
  report::json j;
  try {
    j = report::json::parse(report::read_text(path));
  } catch (const report::json::parse_error& e) {
    throw DomainError(path.string() + ": not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw DomainError(path.string() + ": config must be a JSON object");
  PipelineConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "group1") c.group1 = pipeline_detail::path_list(value, "group1");
      else if (key == "group2") c.group2 = pipeline_detail::path_list(value, "group2");
      else if (key == "mask") c.mask = value.get<std::string>();
      else if (key == "target_df") c.analysis.target_df = value.get<double>();
      else if (key == "bin_width") c.analysis.bin_width = value.get<double>();
      else if (key == "fit_upper") c.analysis.fit_upper = value.get<double>();
      else if (key == "smooth") c.analysis.b = value.get<std::size_t>();
      else if (key == "alphas") c.analysis.alphas = value.get<std::vector<double>>();
      else if (key == "null") c.analysis.null_mode = parse_null_mode(value.get<std::string>());
      else if (key == "p0") c.analysis.p0_mode = parse_p0_mode(value.get<std::string>());
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "out") c.out = value.get<std::string>();
      else throw DomainError(path.string() + ": unknown config key '" + key + "'");
    }
  } catch (const report::json::exception& e) {
    throw DomainError(path.string() + ": " + e.what());
  }
  return c;
}

/// The fields that determine the analysis (output directory excluded).
[[nodiscard]] inline report::json config_json(const PipelineConfig& c) {
  auto paths = [](const std::vector<fs::path>& v) {
    std::vector<std::string> s;
    for (const auto& p : v) s.push_back(p.generic_string());
    return s;
  };
  return {{"group1", paths(c.group1)},
          {"group2", paths(c.group2)},
          {"mask", c.mask.generic_string()},
          {"target_df", c.analysis.target_df},
          {"bin_width", c.analysis.bin_width},
          {"fit_upper", c.analysis.fit_upper},
          {"smooth", c.analysis.b},
          {"alphas", c.analysis.alphas},
          {"null", to_string(c.analysis.null_mode)},
          {"p0", to_string(c.analysis.p0_mode)},
          {"seed", c.seed}};
}

[[nodiscard]] inline std::string config_hash(const PipelineConfig& c) {
  return report::fnv1a_hex(config_json(c).dump());
}

/// A single directory expands to its .dvol files in name order.
[[nodiscard]] inline std::vector<fs::path> expand_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> out;
  for (const auto& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".dvol") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      if (found.empty()) throw IoError(p.string() + ": no .dvol files");
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

[[nodiscard]] inline DirectionGroup load_group(const std::vector<fs::path>& inputs) {
  DirectionGroup g;
  for (const auto& p : expand_inputs(inputs)) g.push_back(io::read_direction_volume(p));
  return g;
}

/// Runs `fn`, prefixing any error message with the stage name while keeping
/// the error category.
template <class Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DomainError& e) {
    throw DomainError(name + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(name + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(name + ": " + e.what());
  }
}

struct PipelineOutput {
  AnalysisResult result;
  report::json report;
  std::vector<fs::path> files;
};

/// Writes the report and companion files for an analysis into `out`.
[[nodiscard]] inline PipelineOutput write_outputs(AnalysisResult result, report::json head,
                                                  const AnalysisOptions& options,
                                                  std::size_t input_mask_size, const fs::path& out) {
  PipelineOutput po{std::move(result), std::move(head), {}};
  const auto& r = po.result;
  auto body = report::analysis_json(r, options, input_mask_size);
  for (auto& [k, v] : body.items()) po.report[k] = v;

  const double cube = static_cast<double>(options.b * options.b * options.b);
  const auto theo_null = NullModel::theoretical(options.target_df * cube, 1.0 / cube);
  const auto theo_curve = fdr_curve(r.values, theo_null, 1.0, r.curve.thresholds);

  auto emit_text = [&](const char* name, const std::string& text) {
    report::write_text(out / name, text);
    po.files.push_back(out / name);
  };
  auto emit_volume = [&](const std::string& name, const auto& vol) {
    io::write_volume(out / name, vol);
    po.files.push_back(out / name);
  };

  report::json files = report::json::object();
  files["statistic"] = "statistic.svol";
  files["mask"] = "tested_mask.mvol";
  files["histogram"] = "histogram.csv";
  files["fdr_curve"] = "fdr_curve.csv";
  files["table"] = "table.csv";
  files["clusters"] = "clusters.csv";
  files["figure"] = "figure.svg";
  files["slices"] = "slices.svg";
  report::json discoveries = report::json::object();
  for (const auto& a : r.per_alpha)
    discoveries[report::num(a.alpha, "%g")] = "discoveries_" + report::alpha_tag(a.alpha) + ".mvol";
  files["discoveries"] = discoveries;
  po.report["files"] = files;

  emit_volume("statistic.svol", r.analysed);
  emit_volume("tested_mask.mvol", r.mask);
  for (const auto& a : r.per_alpha)
    emit_volume("discoveries_" + report::alpha_tag(a.alpha) + ".mvol",
                Mask::from_indices(r.mask.geometry(), a.voxels));
  emit_text("histogram.csv", report::histogram_csv(r, theo_null));
  emit_text("fdr_curve.csv", report::fdr_curve_csv(r, theo_curve));
  emit_text("table.csv", report::table_csv(po.report["table"]));
  emit_text("clusters.csv", report::cluster_csv(r));
  emit_text("figure.svg", report::figure_svg(r, theo_curve, theo_null));
  // highlight the most permissive alpha
  std::size_t highlight = 0;
  for (std::size_t i = 1; i < r.per_alpha.size(); ++i)
    if (r.per_alpha[i].alpha > r.per_alpha[highlight].alpha) highlight = i;
  emit_text("slices.svg", report::slices_svg(r, highlight));
  emit_text("report.json", po.report.dump(2) + "\n");
  return po;
}

[[nodiscard]] inline report::json report_head(const char* kind, const report::json& config,
                                              std::uint64_t seed) {
  report::json head;
  head["schema"] = report::kSchema;
  head["kind"] = kind;
  head["version"] = kVersion;
  head["provenance"] = {{"config_hash", report::fnv1a_hex(config.dump())}, {"seed", seed}};
  head["config"] = config;
  return head;
}

[[nodiscard]] inline Mask load_mask_or_full(const fs::path& path, const GridGeometry& g) {
  if (path.empty()) return Mask(g, true);
  auto m = io::read_mask(path);
  require_same_geometry(m.geometry(), g, "mask vs direction volumes");
  return m;
}

/// Full pipeline from direction volumes.
[[nodiscard]] inline PipelineOutput run_pipeline(const PipelineConfig& config) {
  stage("config", [&] { config.analysis.validate(); });
  if (config.group1.empty() || config.group2.empty())
    throw DomainError("config: both groups need input volumes");
  auto groups = stage("load", [&] {
    std::vector<DirectionGroup> g{load_group(config.group1), load_group(config.group2)};
    for (const auto& grp : g)
      for (const auto& v : grp)
        require_same_geometry(v.geometry(), g[0][0].geometry(), "subject volumes");
    return g;
  });
  const Mask mask = stage("mask", [&] { return load_mask_or_full(config.mask, groups[0][0].geometry()); });
  auto result = stage("analysis", [&] { return analyze(groups, mask, config.analysis); });
  return stage("report", [&] {
    return write_outputs(std::move(result), report_head("pipeline", config_json(config), config.seed),
                         config.analysis, mask.count(), config.out);
  });
}

/// Pipeline from an existing statistic volume (already on the chi-squared
/// scale), e.g. the output of `axisfdr teststat`.
[[nodiscard]] inline PipelineOutput run_statistic_pipeline(const fs::path& statistic_path,
                                                           const fs::path& mask_path,
                                                           const AnalysisOptions& options,
                                                           const fs::path& out) {
  stage("config", [&] { options.validate(); });
  const auto stat = stage("load", [&] { return io::read_statistic_volume(statistic_path); });
  const Mask mask = stage("mask", [&] { return load_mask_or_full(mask_path, stat.geometry()); });
  auto result = stage("analysis", [&] { return analyze_statistic(stat, mask, options); });
  report::json config = {{"statistic", statistic_path.generic_string()},
                         {"mask", mask_path.generic_string()},
                         {"target_df", options.target_df},
                         {"bin_width", options.bin_width},
                         {"fit_upper", options.fit_upper},
                         {"smooth", options.b},
                         {"alphas", options.alphas},
                         {"null", to_string(options.null_mode)},
                         {"p0", to_string(options.p0_mode)}};
  return stage("report", [&] {
    return write_outputs(std::move(result), report_head("fdr", config, 0), options, mask.count(), out);
  });
}

/// Summary rows for each smoothing size on one statistic volume.
[[nodiscard]] inline report::json sweep_report(const StatisticVolume& statistic, const Mask& mask,
                                               const std::vector<std::size_t>& b_values,
                                               AnalysisOptions options, report::json config) {
  report::json j = report_head("sweep", config, config.value("seed", std::uint64_t{0}));
  report::json table = report::json::array();
  report::json warnings = report::json::array();
  for (auto b : b_values) {
    options.b = b;
    const auto r = stage("sweep b=" + std::to_string(b),
                         [&] { return analyze_statistic(statistic, mask, options); });
    for (const auto& row : sweep_rows(r, b)) table.push_back(report::table_row(row));
    for (const auto& w : r.warnings) warnings.push_back("b=" + std::to_string(b) + ": " + w);
  }
  j["table"] = table;
  j["warnings"] = warnings;
  return j;
}

}  // namespace axisfdr
