// axisfdr: command-line front end.
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical or fit
// failure.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "axisfdr/axisfdr.hpp"

namespace fs = std::filesystem;
using namespace axisfdr;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

struct AnalysisFlags {
  std::vector<double> alphas;
  std::string null_mode;
  std::string p0_mode;
  double bin_width = kDefaultBinWidth;
  double fit_upper = kDefaultFitUpper;
  double target_df = 2.0;
  std::size_t smooth = 1;
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* null_opt = nullptr;
  CLI::Option* p0_opt = nullptr;
  CLI::Option* bin_opt = nullptr;
  CLI::Option* fit_opt = nullptr;
  CLI::Option* df_opt = nullptr;
  CLI::Option* smooth_opt = nullptr;

  void add(CLI::App* app, bool with_smooth = true) {
    alpha_opt = app->add_option("--alpha", alphas, "FDR level (repeatable; default 0.2 0.05 0.01)");
    null_opt = app->add_option("--null", null_mode, "theoretical | empirical (default empirical)");
    p0_opt = app->add_option("--p0", p0_mode, "fit | one (default fit)");
    bin_opt = app->add_option("--bin-width", bin_width, "histogram bin width (default 0.2)");
    fit_opt = app->add_option("--fit-upper", fit_upper, "quantile level of the fit limit (default 0.9)");
    df_opt = app->add_option("--target-df", target_df, "chi-squared df of the transform (default 2)");
    if (with_smooth) smooth_opt = app->add_option("--smooth", smooth, "odd box size b (default 1)");
  }

  // flags given on the command line override `o`
  void apply(AnalysisOptions& o) const {
    if (alpha_opt->count()) o.alphas = alphas;
    if (null_opt->count()) o.null_mode = parse_null_mode(null_mode);
    if (p0_opt->count()) o.p0_mode = parse_p0_mode(p0_mode);
    if (bin_opt->count()) o.bin_width = bin_width;
    if (fit_opt->count()) o.fit_upper = fit_upper;
    if (df_opt->count()) o.target_df = target_df;
    if (smooth_opt && smooth_opt->count()) o.b = smooth;
  }
};

std::vector<fs::path> to_paths(const std::vector<std::string>& v) {
  return {v.begin(), v.end()};
}

void print_warnings(const report::json& j) {
  if (!j.contains("warnings")) return;
  for (const auto& w : j["warnings"]) std::cerr << "warning: " << w.get<std::string>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Watson-statistic FDR analysis of axial direction maps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  // simulate
  auto* sim = app.add_subcommand("simulate", "write simulated group volumes and a truth mask");
  std::string sim_out;
  std::vector<std::uint32_t> sim_dims{16, 16, 16};
  std::vector<double> sim_spacing{1.0, 1.0, 1.0};
  std::vector<double> sim_background{0.0, 0.0, 1.0};
  std::size_t sim_n1 = 6, sim_n2 = 6, sim_region = 0;
  double sim_kappa = 200.0, sim_delta = 0.0;
  std::uint64_t sim_seed = 0;
  sim->add_option("--out", sim_out, "output directory")->required();
  sim->add_option("--dims", sim_dims, "nx ny nz")->expected(3);
  sim->add_option("--spacing", sim_spacing, "sx sy sz in mm")->expected(3);
  sim->add_option("--n1", sim_n1, "subjects in group 1");
  sim->add_option("--n2", sim_n2, "subjects in group 2");
  sim->add_option("--kappa", sim_kappa, "Watson concentration");
  sim->add_option("--delta", sim_delta, "angle between group means in the signal region (degrees)");
  sim->add_option("--region", sim_region, "side of the centered cubic signal region (0: none)");
  sim->add_option("--background", sim_background, "background mean axis")->expected(3);
  sim->add_option("--seed", sim_seed, "random seed");

  // teststat
  auto* ts = app.add_subcommand("teststat", "voxelwise Watson statistic map");
  std::vector<std::string> ts_g1, ts_g2;
  std::string ts_mask, ts_out;
  double ts_df = 2.0;
  bool ts_raw = false;
  ts->add_option("--group1", ts_g1, "group 1 .dvol files or directory")->required();
  ts->add_option("--group2", ts_g2, "group 2 .dvol files or directory")->required();
  ts->add_option("--mask", ts_mask, "mask .mvol (default: every voxel)");
  ts->add_option("--out", ts_out, "output .svol")->required();
  ts->add_option("--target-df", ts_df, "chi-squared df of the transform");
  ts->add_flag("--raw", ts_raw, "write the F-scale statistic without transforming");

  // smooth
  auto* sm = app.add_subcommand("smooth", "box-smooth a statistic volume");
  std::string sm_in, sm_out, sm_mask, sm_mask_out;
  std::size_t sm_b = 1;
  sm->add_option("--in", sm_in, "input .svol")->required();
  sm->add_option("-b,--smooth", sm_b, "odd box size")->required();
  sm->add_option("--out", sm_out, "output .svol")->required();
  sm->add_option("--mask", sm_mask, "mask to shrink");
  sm->add_option("--mask-out", sm_mask_out, "shrunken mask output");

  // fdr
  auto* fd = app.add_subcommand("fdr", "null fit, FDR curve and discoveries for a statistic volume");
  std::string fd_stat, fd_mask, fd_out;
  AnalysisFlags fd_flags;
  fd->add_option("--stat", fd_stat, "statistic .svol on the chi-squared scale")->required();
  fd->add_option("--mask", fd_mask, "mask .mvol (default: every voxel)");
  fd->add_option("--out", fd_out, "output directory")->required();
  fd_flags.add(fd);

  // cluster
  auto* cl = app.add_subcommand("cluster", "26-connected clusters of a voxel selection");
  std::string cl_sel, cl_out;
  cl->add_option("--selection", cl_sel, "selection .mvol")->required();
  cl->add_option("--out", cl_out, "CSV output (default: stdout)");

  // pipeline
  auto* pl = app.add_subcommand("pipeline", "full analysis from direction volumes");
  std::string pl_config, pl_mask, pl_out;
  std::vector<std::string> pl_g1, pl_g2;
  std::uint64_t pl_seed = 0;
  AnalysisFlags pl_flags;
  pl->add_option("--config", pl_config, "JSON config file; flags override it");
  auto* pl_g1_opt = pl->add_option("--group1", pl_g1, "group 1 .dvol files or directory");
  auto* pl_g2_opt = pl->add_option("--group2", pl_g2, "group 2 .dvol files or directory");
  auto* pl_mask_opt = pl->add_option("--mask", pl_mask, "mask .mvol");
  auto* pl_seed_opt = pl->add_option("--seed", pl_seed, "seed recorded in the report");
  auto* pl_out_opt = pl->add_option("--out", pl_out, "output directory");
  pl_flags.add(pl);

  // sweep
  auto* sw = app.add_subcommand("sweep", "summary rows over smoothing sizes");
  std::string sw_stat, sw_mask, sw_out;
  std::vector<std::string> sw_g1, sw_g2;
  std::vector<std::size_t> sw_b{1, 3, 5, 7, 9};
  AnalysisFlags sw_flags;
  sw->add_option("--stat", sw_stat, "statistic .svol (alternative to --group1/--group2)");
  sw->add_option("--group1", sw_g1, "group 1 .dvol files or directory");
  sw->add_option("--group2", sw_g2, "group 2 .dvol files or directory");
  sw->add_option("--mask", sw_mask, "mask .mvol");
  sw->add_option("--b", sw_b, "odd box sizes (default 1 3 5 7 9)");
  sw->add_option("--out", sw_out, "output directory")->required();
  sw_flags.add(sw, false);

  // report
  auto* rp = app.add_subcommand("report", "print a report or sweep file");
  std::string rp_in;
  rp->add_option("report", rp_in, "report.json or sweep.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sim) {
      if (sim_dims.size() != 3 || sim_spacing.size() != 3 || sim_background.size() != 3)
        throw DomainError("--dims, --spacing and --background take three values");
      SimulationSpec spec(GridGeometry({sim_dims[0], sim_dims[1], sim_dims[2]},
                                       {sim_spacing[0], sim_spacing[1], sim_spacing[2]}));
      spec.n1 = sim_n1;
      spec.n2 = sim_n2;
      spec.kappa = sim_kappa;
      spec.delta_deg = sim_delta;
      spec.seed = sim_seed;
      spec.background = UnitAxis::from_components(sim_background[0], sim_background[1], sim_background[2]);
      if (sim_region > 0) spec.signal = cube_region(spec.geometry, sim_region);
      const auto pair = simulate_volume_pair(spec);
      const fs::path out = sim_out;
      char name[32];
      for (std::size_t i = 0; i < pair.group1.size(); ++i) {
        std::snprintf(name, sizeof name, "subject_%02zu.dvol", i + 1);
        io::write_volume(out / "group1" / name, pair.group1[i]);
      }
      for (std::size_t i = 0; i < pair.group2.size(); ++i) {
        std::snprintf(name, sizeof name, "subject_%02zu.dvol", i + 1);
        io::write_volume(out / "group2" / name, pair.group2[i]);
      }
      io::write_volume(out / "truth.mvol", pair.truth);
      io::write_volume(out / "mask.mvol", Mask(spec.geometry, true));
      std::cout << "wrote " << pair.group1.size() + pair.group2.size() << " subject volumes, "
                << pair.truth.count() << " signal voxels, to " << out.string() << "\n";
    } else if (*ts) {
      std::vector<DirectionGroup> groups{load_group(to_paths(ts_g1)), load_group(to_paths(ts_g2))};
      const auto& g = groups[0].front().geometry();
      const Mask mask = load_mask_or_full(ts_mask, g);
      const auto map = statistic_map(groups, mask, ts_raw ? std::nullopt : std::optional<double>(ts_df));
      io::write_volume(ts_out, map.values);
      std::cout << "df " << map.df_num << "," << map.df_den << "; tested " << map.effective_mask.count()
                << " of " << mask.count() << " voxels; " << map.defects.size() << " defects; "
                << map.low_concentration.size() << " with pooled concentration below 1\n";
      for (const auto& d : map.defects)
        std::cerr << "defect voxel " << d.voxel << ": " << to_string(d.reason) << "\n";
    } else if (*sm) {
      const auto vol = io::read_statistic_volume(sm_in);
      const auto out = box_smooth(vol, sm_b);
      io::write_volume(sm_out, out);
      if (!sm_mask.empty()) {
        const auto shrunk = shrink_mask(io::read_mask(sm_mask), out);
        if (!sm_mask_out.empty()) io::write_volume(sm_mask_out, shrunk);
        std::cout << "mask: " << shrunk.count() << " voxels after smoothing\n";
      }
    } else if (*fd) {
      AnalysisOptions options;
      fd_flags.apply(options);
      const auto po = run_statistic_pipeline(fd_stat, fd_mask, options, fd_out);
      std::cout << report::format_report(po.report);
    } else if (*cl) {
      const auto sel = io::read_mask(cl_sel);
      const auto clusters = extract_clusters(sel.indices(), sel.geometry());
      std::string csv = "rank,size,voxels\n";
      for (std::size_t c = 0; c < clusters.clusters.size(); ++c) {
        std::string members;
        for (auto v : clusters.clusters[c]) members += (members.empty() ? "" : ";") + std::to_string(v);
        csv += std::to_string(c + 1) + "," + std::to_string(clusters.clusters[c].size()) + "," + members + "\n";
      }
      if (cl_out.empty()) std::cout << csv;
      else report::write_text(cl_out, csv);
      std::cerr << sel.count() << " voxels in " << clusters.clusters.size() << " clusters\n";
    } else if (*pl) {
      PipelineConfig config = pl_config.empty() ? PipelineConfig{} : load_config(pl_config);
      if (pl_g1_opt->count()) config.group1 = to_paths(pl_g1);
      if (pl_g2_opt->count()) config.group2 = to_paths(pl_g2);
      if (pl_mask_opt->count()) config.mask = pl_mask;
      if (pl_seed_opt->count()) config.seed = pl_seed;
      if (pl_out_opt->count()) config.out = pl_out;
      pl_flags.apply(config.analysis);
      const auto po = run_pipeline(config);
      print_warnings(po.report);
      std::cout << report::format_report(po.report);
    } else if (*sw) {
      AnalysisOptions options;
      sw_flags.apply(options);
      StatisticVolume stat(GridGeometry({1, 1, 1}));
      report::json config;
      if (!sw_stat.empty()) {
        stat = io::read_statistic_volume(sw_stat);
        config["statistic"] = sw_stat;
      } else {
        if (sw_g1.empty() || sw_g2.empty()) throw DomainError("sweep needs --stat or both groups");
        std::vector<DirectionGroup> groups{load_group(to_paths(sw_g1)), load_group(to_paths(sw_g2))};
        const Mask full(groups[0].front().geometry(), true);
        const Mask region = sw_mask.empty() ? full : analysis_detail::statistic_region(groups, io::read_mask(sw_mask));
        stat = statistic_map(groups, region, options.target_df).values;
        config["group1"] = sw_g1;
        config["group2"] = sw_g2;
      }
      const Mask mask = load_mask_or_full(sw_mask, stat.geometry());
      config["mask"] = sw_mask;
      config["b"] = sw_b;
      config["alphas"] = options.alphas;
      config["null"] = to_string(options.null_mode);
      config["p0"] = to_string(options.p0_mode);
      config["bin_width"] = options.bin_width;
      config["fit_upper"] = options.fit_upper;
      config["target_df"] = options.target_df;
      auto finite = mask;
      for (std::size_t v = 0; v < stat.size(); ++v)
        if (!std::isfinite(stat[v])) finite.set(v, false);
      const auto j = sweep_report(stat, finite, sw_b, options, config);
      const fs::path out = sw_out;
      report::write_text(out / "sweep.json", j.dump(2) + "\n");
      report::write_text(out / "sweep.csv", report::table_csv(j["table"]));
      print_warnings(j);
      std::cout << report::format_report(j);
    } else if (*rp) {
      std::cout << report::format_report(report::read_report(rp_in));
    }
  } catch (const NumericalError& e) {
    std::cerr << "axisfdr: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DomainError& e) {
    std::cerr << "axisfdr: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const IoError& e) {
    std::cerr << "axisfdr: I/O error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "axisfdr: I/O error: " << e.what() << "\n";
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "axisfdr: data error: " << e.what() << "\n";
    return kExitData;
  }
  return 0;
}
