#pragma once

// Report emission: summary table rows, JSON report, CSV tables, SVG figures, and
// the reader/formatter used by `axisfdr report`.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "axisfdr/analysis.hpp"
#include "axisfdr/errors.hpp"
#include "axisfdr/version.hpp"
#include "axisfdr/volume_io.hpp"

namespace axisfdr::report {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchema = "axisfdr-report/1";
inline constexpr std::size_t kLargestSizes = 5;

inline const std::vector<std::string> kTableColumns = {
    "b", "N", "p0_hat", "a_hat", "nu_hat", "T90", "alpha", "u_alpha", "R", "n_clusters",
    "largest_sizes"};

/// "%.10g", or empty for a missing value.
[[nodiscard]] inline std::string num(std::optional<double> v, const char* fmt = "%.10g") {
  if (!v || !std::isfinite(*v)) return {};
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, *v);
  return buf;
}

inline json optional_number(std::optional<double> v) {
  return (v && std::isfinite(*v)) ? json(*v) : json(nullptr);
}

[[nodiscard]] inline json table_row(const SweepRow& r) {
  json sizes = json::array();
  for (std::size_t i = 0; i < std::min(kLargestSizes, r.cluster_sizes.size()); ++i)
    sizes.push_back(r.cluster_sizes[i]);
  json row;
  row["b"] = r.b;
  row["N"] = r.n;
  row["p0_hat"] = r.fit ? json(r.fit->p0_raw) : json(nullptr);
  row["a_hat"] = r.fit ? json(r.fit->a) : json(nullptr);
  row["nu_hat"] = r.fit ? json(r.fit->nu) : json(nullptr);
  row["T90"] = r.t90;
  row["alpha"] = r.alpha;
  row["u_alpha"] = optional_number(r.u_alpha);
  row["R"] = r.discoveries;
  row["n_clusters"] = r.cluster_sizes.size();
  row["largest_sizes"] = sizes;
  return row;
}

[[nodiscard]] inline std::string json_cell(const json& v) {
  if (v.is_null()) return {};
  if (v.is_array()) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + json_cell(v[i]);
    return s;
  }
  if (v.is_number_float()) return num(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

/// Summary table rows as CSV.
[[nodiscard]] inline std::string table_csv(const json& rows) {
  std::string out;
  for (std::size_t c = 0; c < kTableColumns.size(); ++c) out += (c ? "," : "") + kTableColumns[c];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < kTableColumns.size(); ++c)
      out += (c ? "," : "") + json_cell(row.at(kTableColumns[c]));
    out += '\n';
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("error writing " + path.string());
}

[[nodiscard]] inline std::string read_text(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  return {bytes.begin(), bytes.end()};
}

/// 64-bit FNV-1a, hex.
[[nodiscard]] inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

[[nodiscard]] inline std::string alpha_tag(double alpha) { return "alpha" + num(alpha, "%g"); }

// ---------------------------------------------------------------------------
// CSV tables

/// Bin edges, counts and expected null counts N w p0 f0 at the midpoints.
[[nodiscard]] inline std::string histogram_csv(const AnalysisResult& r, const NullModel& theoretical) {
  std::string out = "lower,upper,midpoint,count,expected_theoretical,expected_empirical\n";
  const double nw = static_cast<double>(r.histogram.total) * r.histogram.bin_width;
  for (std::size_t k = 0; k < r.histogram.counts.size(); ++k) {
    const double t = r.histogram.midpoint(k);
    const double theo = nw * scaled_chisq_density(t, theoretical.scale, theoretical.df);
    std::optional<double> emp;
    if (r.fit) emp = nw * r.fit->p0 * empirical_null_density(t, *r.fit);
    out += num(r.histogram.edge(k)) + "," + num(r.histogram.edge(k + 1)) + "," + num(t) + "," +
           std::to_string(r.histogram.counts[k]) + "," + num(theo) + "," + num(emp) + "\n";
  }
  return out;
}

/// FDR curve of the null in use, next to the theoretical-null curve with p0 = 1.
[[nodiscard]] inline std::string fdr_curve_csv(const AnalysisResult& r, const FdrCurve& theoretical) {
  std::string out = "u,R,fdr,fdr_raw,fdr_theoretical\n";
  for (std::size_t i = 0; i < r.curve.thresholds.size(); ++i)
    out += num(r.curve.thresholds[i]) + "," + std::to_string(r.curve.rejections[i]) + "," +
           num(r.curve.fdr[i]) + "," + num(r.curve.fdr_raw[i]) + "," + num(theoretical.fdr[i]) + "\n";
  return out;
}

[[nodiscard]] inline std::string cluster_csv(const AnalysisResult& r) {
  std::string out = "alpha,rank,size,peak_voxel,peak_i,peak_j,peak_k,peak_value\n";
  const auto& g = r.mask.geometry();
  for (const auto& a : r.per_alpha) {
    for (std::size_t c = 0; c < a.clusters.clusters.size(); ++c) {
      const auto& members = a.clusters.clusters[c];
      std::size_t peak = members.front();
      for (auto v : members)
        if (r.analysed[v] > r.analysed[peak]) peak = v;
      const auto ijk = g.coord(peak);
      out += num(a.alpha) + "," + std::to_string(c + 1) + "," + std::to_string(members.size()) +
             "," + std::to_string(peak) + "," + std::to_string(ijk[0]) + "," +
             std::to_string(ijk[1]) + "," + std::to_string(ijk[2]) + "," +
             num(r.analysed[peak]) + "\n";
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG

namespace svg_detail {

struct Panel {
  double x0, y0, w, h;        // pixel box
  double xmin, xmax, ymin, ymax;
  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * w; }
  double py(double y) const { return y0 + h - (std::clamp(y, ymin, ymax) - ymin) / (ymax - ymin) * h; }
};

inline std::string f(double v) { return num(v, "%.2f"); }

inline std::string polyline(const Panel& p, const std::vector<double>& x, const std::vector<double>& y,
                            const char* colour, const char* dash = nullptr) {
  std::string pts;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(y[i]) || x[i] < p.xmin || x[i] > p.xmax) continue;
    pts += f(p.px(x[i])) + "," + f(p.py(y[i])) + " ";
  }
  std::string s = "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"";
  s += colour;
  s += "\"";
  if (dash) s += std::string(" stroke-dasharray=\"") + dash + "\"";
  return s + " points=\"" + pts + "\"/>\n";
}

inline std::string axes(const Panel& p, const std::string& xlabel, const std::string& ylabel) {
  std::string s = "<rect x=\"" + f(p.x0) + "\" y=\"" + f(p.y0) + "\" width=\"" + f(p.w) +
                  "\" height=\"" + f(p.h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = p.xmin + (p.xmax - p.xmin) * i / 4.0;
    const double yv = p.ymin + (p.ymax - p.ymin) * i / 4.0;
    s += "<text x=\"" + f(p.px(xv)) + "\" y=\"" + f(p.y0 + p.h + 14) +
         "\" font-size=\"10\" text-anchor=\"middle\">" + num(xv, "%.3g") + "</text>\n";
    s += "<text x=\"" + f(p.x0 - 4) + "\" y=\"" + f(p.py(yv) + 3) +
         "\" font-size=\"10\" text-anchor=\"end\">" + num(yv, "%.3g") + "</text>\n";
  }
  s += "<text x=\"" + f(p.x0 + p.w / 2) + "\" y=\"" + f(p.y0 + p.h + 30) +
       "\" font-size=\"12\" text-anchor=\"middle\">" + xlabel + "</text>\n";
  s += "<text x=\"" + f(p.x0 - 40) + "\" y=\"" + f(p.y0 + p.h / 2) +
       "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 " + f(p.x0 - 40) + " " +
       f(p.y0 + p.h / 2) + ")\">" + ylabel + "</text>\n";
  return s;
}

}  // namespace svg_detail

/// Histogram with null densities (left) and FDR curves with the alpha
/// levels (right).
[[nodiscard]] inline std::string figure_svg(const AnalysisResult& r, const FdrCurve& theoretical,
                                            const NullModel& theoretical_null) {
  using svg_detail::Panel;
  using svg_detail::f;
  const double xmax = std::max(empirical_quantile(r.values, 0.999), r.histogram.bin_width * 5);
  const double nw = static_cast<double>(r.histogram.total) * r.histogram.bin_width;
  double ymax = 1.0;
  for (auto c : r.histogram.counts) ymax = std::max(ymax, static_cast<double>(c));
  ymax *= 1.05;

  std::string s =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"900\" height=\"380\" "
      "font-family=\"sans-serif\">\n<rect width=\"900\" height=\"380\" fill=\"white\"/>\n";
  const Panel left{70, 20, 340, 300, 0.0, xmax, 0.0, ymax};
  for (std::size_t k = 0; k < r.histogram.counts.size(); ++k) {
    const double lo = r.histogram.edge(k), hi = r.histogram.edge(k + 1);
    if (lo >= xmax) break;
    const double top = left.py(static_cast<double>(r.histogram.counts[k]));
    s += "<rect x=\"" + f(left.px(lo)) + "\" y=\"" + f(top) + "\" width=\"" +
         f(left.px(std::min(hi, xmax)) - left.px(lo)) + "\" height=\"" + f(left.y0 + left.h - top) +
         "\" fill=\"#c8c8c8\" stroke=\"none\"/>\n";
  }
  std::vector<double> xs, theo, emp;
  for (int i = 1; i <= 400; ++i) {
    const double t = xmax * i / 400.0;
    xs.push_back(t);
    theo.push_back(nw * scaled_chisq_density(t, theoretical_null.scale, theoretical_null.df));
    emp.push_back(r.fit ? nw * r.fit->p0 * empirical_null_density(t, *r.fit)
                        : std::numeric_limits<double>::quiet_NaN());
  }
  s += svg_detail::polyline(left, xs, theo, "#1f4e9c", "6,3");
  if (r.fit) s += svg_detail::polyline(left, xs, emp, "#b22222");
  s += "<line x1=\"" + f(left.px(std::min(r.t90, xmax))) + "\" y1=\"" + f(left.y0) + "\" x2=\"" +
       f(left.px(std::min(r.t90, xmax))) + "\" y2=\"" + f(left.y0 + left.h) +
       "\" stroke=\"#555\" stroke-dasharray=\"2,3\"/>\n";
  s += svg_detail::axes(left, "statistic", "count");

  double umax = xmax;
  for (const auto& a : r.per_alpha)
    if (a.u_alpha) umax = std::max(umax, *a.u_alpha * 1.1);
  const Panel right{520, 20, 340, 300, 0.0, umax, 0.0, 1.0};
  s += svg_detail::polyline(right, theoretical.thresholds, theoretical.fdr, "#1f4e9c", "6,3");
  s += svg_detail::polyline(right, r.curve.thresholds, r.curve.fdr, "#b22222");
  for (const auto& a : r.per_alpha) {
    s += "<line x1=\"" + f(right.x0) + "\" y1=\"" + f(right.py(a.alpha)) + "\" x2=\"" +
         f(right.x0 + right.w) + "\" y2=\"" + f(right.py(a.alpha)) +
         "\" stroke=\"#777\" stroke-dasharray=\"2,3\"/>\n";
    if (a.u_alpha)
      s += "<circle cx=\"" + f(right.px(*a.u_alpha)) + "\" cy=\"" + f(right.py(a.alpha)) +
           "\" r=\"3\" fill=\"black\"/>\n";
  }
  s += svg_detail::axes(right, "threshold u", "estimated FDR");
  s += "<text x=\"530\" y=\"36\" font-size=\"11\" fill=\"#b22222\">" +
       std::string(to_string(r.null.kind)) + " null</text>\n";
  s += "<text x=\"530\" y=\"50\" font-size=\"11\" fill=\"#1f4e9c\">theoretical null, p0 = 1</text>\n";
  return s + "</svg>\n";
}

/// Every z slice of the analysed statistic as a grey-scale tile; voxels
/// selected at `highlight_alpha` are red, untested voxels white.
[[nodiscard]] inline std::string slices_svg(const AnalysisResult& r, std::size_t highlight) {
  const auto& g = r.mask.geometry();
  const std::size_t cell = 6, gap = 8;
  const std::size_t per_row = std::max<std::size_t>(1, 900 / (g.nx() * cell + gap));
  const std::size_t rows = (g.nz() + per_row - 1) / per_row;
  const std::size_t width = per_row * (g.nx() * cell + gap) + gap;
  const std::size_t height = rows * (g.ny() * cell + gap + 12) + gap;
  double top = 0.0;
  for (double v : r.values) top = std::max(top, v);
  if (top <= 0.0) top = 1.0;
  std::vector<std::uint8_t> hit(g.voxel_count(), 0);
  if (highlight < r.per_alpha.size())
    for (auto v : r.per_alpha[highlight].voxels) hit[v] = 1;

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                  "\" height=\"" + std::to_string(height) +
                  "\" font-family=\"sans-serif\" shape-rendering=\"crispEdges\">\n"
                  "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t k = 0; k < g.nz(); ++k) {
    const std::size_t ox = gap + (k % per_row) * (g.nx() * cell + gap);
    const std::size_t oy = gap + (k / per_row) * (g.ny() * cell + gap + 12) + 12;
    s += "<text x=\"" + std::to_string(ox) + "\" y=\"" + std::to_string(oy - 2) +
         "\" font-size=\"9\">z=" + std::to_string(k) + "</text>\n";
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t i = 0; i < g.nx(); ++i) {
        const auto v = g.index(i, j, k);
        if (!r.mask.contains(v)) continue;
        std::string colour = "#d62728";
        if (!hit[v]) {
          const int grey = 255 - static_cast<int>(std::lround(std::clamp(r.analysed[v] / top, 0.0, 1.0) * 230));
          char buf[8];
          std::snprintf(buf, sizeof buf, "#%02x%02x%02x", grey, grey, grey);
          colour = buf;
        }
        // y grows downwards; flip so j increases upwards
        s += "<rect x=\"" + std::to_string(ox + i * cell) + "\" y=\"" +
             std::to_string(oy + (g.ny() - 1 - j) * cell) + "\" width=\"" + std::to_string(cell) +
             "\" height=\"" + std::to_string(cell) + "\" fill=\"" + colour + "\"/>\n";
      }
  }
  return s + "</svg>\n";
}

// ---------------------------------------------------------------------------
// JSON report

[[nodiscard]] inline json fit_json(const EmpiricalNullFit& fit) {
  return json{{"a", fit.a},
              {"nu", fit.nu},
              {"p0", fit.p0},
              {"p0_raw", fit.p0_raw},
              {"fit_limit", fit.fit_limit},
              {"se_a", fit.se_a},
              {"se_nu", fit.se_nu},
              {"coefficients", {fit.intercept, fit.coef_t, fit.coef_log_t}},
              {"deviance", fit.deviance},
              {"iterations", fit.iterations},
              {"converged", fit.converged},
              {"bins_used", fit.bins_used}};
}

/// Everything except provenance and configuration.
[[nodiscard]] inline json analysis_json(const AnalysisResult& r, const AnalysisOptions& options,
                                        std::size_t input_mask_size) {
  json j;
  const auto& g = r.mask.geometry();
  j["geometry"] = {{"dims", g.dims()}, {"spacing", g.spacing()}};
  j["df"] = {{"numerator", r.df_num}, {"denominator", r.df_den}, {"target", options.target_df}};
  j["mask"] = {{"input", input_mask_size}, {"tested", r.mask.count()}};
  json null_model = {{"requested", to_string(options.null_mode)},
                     {"used", to_string(r.null.kind)},
                     {"scale", r.null.scale},
                     {"df", r.null.df},
                     {"p0", r.p0},
                     {"p0_mode", to_string(options.p0_mode)},
                     {"fit", r.fit ? fit_json(*r.fit) : json(nullptr)}};
  if (!r.fit_error.empty()) null_model["fit_error"] = r.fit_error;
  j["null"] = null_model;
  j["T90"] = r.t90;
  j["histogram"] = {{"bin_width", r.histogram.bin_width},
                    {"lower_edge", r.histogram.lower_edge},
                    {"total", r.histogram.total},
                    {"counts", r.histogram.counts}};
  j["fdr_curve"] = {{"u", r.curve.thresholds}, {"R", r.curve.rejections}, {"fdr", r.curve.fdr}};

  json results = json::array();
  for (const auto& a : r.per_alpha) {
    json clusters = json::array();
    for (const auto& c : a.clusters.clusters) clusters.push_back(c);
    results.push_back({{"alpha", a.alpha},
                       {"u_alpha", optional_number(a.u_alpha)},
                       {"R", a.discoveries()},
                       {"voxels", a.voxels},
                       {"clusters", {{"count", a.clusters.clusters.size()},
                                     {"sizes", a.clusters.sizes()},
                                     {"members", clusters}}}});
  }
  j["results"] = results;
  json table = json::array();
  for (const auto& row : sweep_rows(r, options.b)) table.push_back(table_row(row));
  j["table"] = table;

  json defects = json::array();
  for (const auto& d : r.defects) defects.push_back({{"voxel", d.voxel}, {"reason", to_string(d.reason)}});
  j["defects"] = defects;
  j["low_concentration"] = r.low_concentration;
  j["warnings"] = r.warnings;
  return j;
}

/// Parses a report or sweep file and checks the schema tag.
[[nodiscard]] inline json read_report(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw DomainError(path.string() + ": not valid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("schema"))
    throw DomainError(path.string() + ": missing schema tag");
  if (j["schema"] != kSchema)
    throw DomainError(path.string() + ": schema-version mismatch, expected " + std::string(kSchema) +
                      ", found " + j["schema"].dump());
  if (!j.contains("table") || !j["table"].is_array())
    throw DomainError(path.string() + ": report has no table");
  return j;
}

/// Human-readable summary rows and, for single-run reports, the clusters.
[[nodiscard]] inline std::string format_report(const json& j) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%3s %8s %7s %7s %8s %8s %6s %9s %7s %7s  %s\n", "b", "N",
                "p0_hat", "a_hat", "nu_hat", "T90", "alpha", "u_alpha", "R", "#clust",
                "clust sz");
  out << buf;
  auto cell = [](const json& v, const char* fmt) {
    return v.is_null() ? std::string("-") : num(v.get<double>(), fmt);
  };
  for (const auto& row : j["table"]) {
    std::string sizes;
    for (const auto& s : row["largest_sizes"]) sizes += (sizes.empty() ? "" : ",") + s.dump();
    std::snprintf(buf, sizeof buf, "%3s %8s %7s %7s %8s %8s %6s %9s %7s %7s  %s\n",
                  row["b"].dump().c_str(), row["N"].dump().c_str(),
                  cell(row["p0_hat"], "%.3f").c_str(), cell(row["a_hat"], "%.3f").c_str(),
                  cell(row["nu_hat"], "%.2f").c_str(), cell(row["T90"], "%.2f").c_str(),
                  cell(row["alpha"], "%g").c_str(), cell(row["u_alpha"], "%.3f").c_str(),
                  row["R"].dump().c_str(), row["n_clusters"].dump().c_str(),
                  sizes.empty() ? "-" : sizes.c_str());
    out << buf;
    if (row["R"].get<std::size_t>() == 0)
      out << "    alpha " << cell(row["alpha"], "%g") << ": 0 interesting voxels\n";
  }
  if (j.contains("results")) {
    for (const auto& a : j["results"]) {
      const auto& c = a["clusters"];
      out << "\nalpha " << num(a["alpha"].get<double>(), "%g") << ": " << a["R"].get<std::size_t>()
          << " interesting voxels in " << c["count"].get<std::size_t>() << " clusters\n";
      std::size_t rank = 0;
      for (const auto& s : c["sizes"]) {
        if (++rank > 10) {
          out << "  ...\n";
          break;
        }
        out << "  cluster " << rank << ": " << s.get<std::size_t>() << " voxels\n";
      }
    }
  }
  if (j.contains("warnings"))
    for (const auto& w : j["warnings"]) out << "warning: " << w.get<std::string>() << "\n";
  return out.str();
}

}  // namespace axisfdr::report
