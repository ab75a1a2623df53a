/*
 * Copyright 2026 The FabricFlow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "fabricflow/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace fabricflow {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

namespace {

std::string fmt(const char* format, ...) {
  char buf[128];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return std::string(buf);
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) os << ",";
    os << items[i];
  }
  return os.str();
}

std::vector<std::string> manifest_lines(const RunManifest& m) {
  std::vector<std::string> lines;
  lines.push_back("fabricflow v" + m.tool_version);
  lines.push_back("config: " + m.config_name + " hash " +
                  fmt("%016llx", static_cast<unsigned long long>(m.config_hash)));
  lines.push_back("placements: " + join(m.placements));
  lines.push_back("devices: " + join(m.device_counts));
  lines.push_back("sizes: " + join(m.sizes));
  lines.push_back("repetitions: " + std::to_string(m.repetitions));
  lines.push_back("warmups: " + std::to_string(m.warmups));
  lines.push_back("seed: " + std::to_string(m.seed));
  lines.push_back("ack-mode: " + m.ack_mode);
  lines.push_back("compute-ns: " + std::to_string(m.compute_ns));
  if (!m.outputs.empty()) {
    lines.push_back("outputs: " + join(m.outputs));
  }
  return lines;
}

}  // namespace

RunManifest make_manifest(const FabricConfig& config,
                          std::string_view config_name,
                          const SweepOptions& options) {
  RunManifest m;
  m.config_name = std::string(config_name);
  m.config_hash = fnv1a64(serialize_config(config));
  for (PlacementKind p : all_placements()) {
    m.placements.emplace_back(to_string(p));
  }
  m.device_counts = {options.devices};
  m.sizes = options.sizes.empty() ? default_size_ladder() : options.sizes;
  std::sort(m.sizes.begin(), m.sizes.end());
  m.sizes.erase(std::unique(m.sizes.begin(), m.sizes.end()), m.sizes.end());
  m.repetitions = options.repetitions;
  m.warmups = options.warmups;
  m.seed = options.seed;
  m.ack_mode = std::string(to_string(config.ack_mode));
  m.compute_ns = options.compute_ns;
  return m;
}

std::string manifest_comment(const RunManifest& manifest,
                             std::string_view prefix,
                             std::string_view suffix) {
  std::ostringstream os;
  for (const std::string& line : manifest_lines(manifest)) {
    os << prefix << line << suffix << "\n";
  }
  return os.str();
}

std::string manifest_xml_comment(const RunManifest& manifest) {
  std::ostringstream os;
  os << "<!--\n";
  for (const std::string& line : manifest_lines(manifest)) {
    os << line << "\n";
  }
  os << "-->\n";
  return os.str();
}

// -- CSV writers -----------------------------------------------------------

std::string samples_csv(const RunManifest& manifest,
                        const std::vector<ScenarioResult>& results) {
  std::ostringstream os;
  os << manifest_comment(manifest);
  os << "placement,devices,size_bytes,rep,latency_ns\n";
  for (const ScenarioResult& r : results) {
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
      os << to_string(r.placement) << "," << r.devices << "," << r.size << ","
         << i + 1 << "," << r.samples[i] << "\n";
    }
  }
  return os.str();
}

std::string summary_csv(const RunManifest& manifest,
                        const std::vector<ScenarioResult>& results) {
  std::ostringstream os;
  os << manifest_comment(manifest);
  os << "placement,devices,size_bytes,median_ns,min_ns,mean_ns,p95_ns\n";
  for (const ScenarioResult& r : results) {
    const SummaryStats s = summarize(r.samples);
    os << to_string(r.placement) << "," << r.devices << "," << r.size << ","
       << fmt("%.1f", s.median_ns) << "," << s.min_ns << ","
       << fmt("%.2f", s.mean_ns) << "," << s.p95_ns << "\n";
  }
  return os.str();
}

std::string speedup_csv(const RunManifest& manifest,
                        const std::vector<ScenarioResult>& results) {
  // size -> placement -> result
  std::map<std::uint64_t, std::map<PlacementKind, const ScenarioResult*>>
      by_size;
  for (const ScenarioResult& r : results) {
    by_size[r.size][r.placement] = &r;
  }

  std::ostringstream os;
  os << manifest_comment(manifest);
  os << "devices,size_bytes,dist_vs_app,dist_vs_central\n";
  for (const auto& [size, by_placement] : by_size) {
    const auto app = by_placement.find(PlacementKind::AppSide);
    const auto cen = by_placement.find(PlacementKind::Central);
    const auto dist = by_placement.find(PlacementKind::Distributed);
    if (app == by_placement.end() || cen == by_placement.end() ||
        dist == by_placement.end()) {
      throw ReportError("speedup table needs all three placements at size " +
                        std::to_string(size));
    }
    os << dist->second->devices << "," << size << ","
       << fmt("%.6f", speedup(*dist->second, *app->second)) << ","
       << fmt("%.6f", speedup(*dist->second, *cen->second)) << "\n";
  }
  return os.str();
}

std::string oracle_csv(const RunManifest& manifest,
                       const OracleCheckReport& report) {
  std::ostringstream os;
  os << manifest_comment(manifest);
  os << "placement,size,n_devices,mode,config,sim_ns,oracle_ns,match\n";
  for (const OracleCheckRow& row : report.rows) {
    os << to_string(row.placement) << "," << row.size << "," << row.n_devices
       << "," << to_string(row.ack_mode) << "," << row.config_name << ","
       << row.sim_ns << "," << row.oracle_ns << "," << (row.match ? 1 : 0)
       << "\n";
  }
  return os.str();
}

// -- plotting --------------------------------------------------------------

namespace {

constexpr std::string_view kSummaryHeader =
    "placement,devices,size_bytes,median_ns,min_ns,mean_ns,p95_ns";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::vector<SummaryRow> parse_summary_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<SummaryRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kSummaryHeader) {
        throw ReportError("line " + std::to_string(line_no) +
                          ": expected summary header '" +
                          std::string(kSummaryHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != 7) {
      throw ReportError("line " + std::to_string(line_no) + ": expected 7 " +
                        "fields, got " + std::to_string(f.size()));
    }
    try {
      SummaryRow row;
      row.placement = f[0];
      row.devices = std::stoul(f[1]);
      row.size_bytes = std::stoull(f[2]);
      row.median_ns = std::stod(f[3]);
      row.min_ns = std::stoll(f[4]);
      row.mean_ns = std::stod(f[5]);
      row.p95_ns = std::stoll(f[6]);
      rows.push_back(std::move(row));
    } catch (const std::exception&) {
      throw ReportError("line " + std::to_string(line_no) +
                        ": malformed numeric field");
    }
  }
  if (!header_seen) {
    throw ReportError("summary CSV has no header row");
  }
  return rows;
}

namespace {

/// Tableau-10 palette; series take colors in order.
constexpr const char* kPalette[10] = {
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
    "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string size_label(std::uint64_t bytes) {
  if (bytes >= 1024 && bytes % 1024 == 0) {
    return std::to_string(bytes / 1024) + "K";
  }
  return std::to_string(bytes);
}

double nice_step(double raw) {
  if (raw <= 0.0) return 1.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  double step;
  if (norm <= 1.0) {
    step = 1.0;
  } else if (norm <= 2.0) {
    step = 2.0;
  } else if (norm <= 5.0) {
    step = 5.0;
  } else {
    step = 10.0;
  }
  return step * mag;
}

}  // namespace

std::string render_latency_svg(const RunManifest& manifest,
                               const std::vector<SummaryRow>& rows) {
  return render_latency_svg(manifest_xml_comment(manifest), rows);
}

std::string render_latency_svg(const std::string& header,
                               const std::vector<SummaryRow>& rows) {
  if (rows.empty()) {
    throw ReportError("no data rows to plot");
  }

  // Series in canonical placement order first, then others alphabetically.
  std::vector<std::string> series_names;
  for (PlacementKind p : all_placements()) {
    const std::string name{to_string(p)};
    for (const SummaryRow& r : rows) {
      if (r.placement == name) {
        series_names.push_back(name);
        break;
      }
    }
  }
  std::vector<std::string> extras;
  for (const SummaryRow& r : rows) {
    if (std::find(series_names.begin(), series_names.end(), r.placement) ==
            series_names.end() &&
        std::find(extras.begin(), extras.end(), r.placement) == extras.end()) {
      extras.push_back(r.placement);
    }
  }
  std::sort(extras.begin(), extras.end());
  series_names.insert(series_names.end(), extras.begin(), extras.end());

  struct Point {
    double x;  ///< log2(size)
    double y;  ///< median ns
    std::uint64_t size;
  };
  std::map<std::string, std::vector<Point>> series;
  double xmin = 1e300, xmax = -1e300, ymax = 0.0;
  std::vector<std::uint64_t> ticks;
  for (const SummaryRow& r : rows) {
    if (r.size_bytes == 0) {
      throw ReportError("cannot place size 0 on a log2 axis");
    }
    Point p;
    p.size = r.size_bytes;
    p.x = std::log2(static_cast<double>(r.size_bytes));
    p.y = r.median_ns;
    series[r.placement].push_back(p);
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymax = std::max(ymax, p.y);
    if (std::find(ticks.begin(), ticks.end(), r.size_bytes) == ticks.end()) {
      ticks.push_back(r.size_bytes);
    }
  }
  std::sort(ticks.begin(), ticks.end());
  for (auto& [name, points] : series) {
    std::sort(points.begin(), points.end(),
              [](const Point& a, const Point& b) { return a.x < b.x; });
  }

  const double left = 70.0, top = 40.0, width = 580.0, height = 390.0;
  const double bottom = top + height;  // 430
  const double xspan = xmax > xmin ? xmax - xmin : 1.0;
  const double ystep = nice_step(ymax / 5.0);
  const double ytop = ymax > 0.0 ? std::ceil(ymax / ystep) * ystep : ystep;

  auto fx = [&](double x) {
    return left + (xmax > xmin ? (x - xmin) / xspan * width : width / 2.0);
  };
  auto fy = [&](double y) { return bottom - y / ytop * height; };

  std::ostringstream os;
  os << header;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
        "height=\"500\" viewBox=\"0 0 800 500\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"500\" "
        "fill=\"#ffffff\"/>\n";
  os << "<g font-family=\"monospace\" font-size=\"12\" fill=\"#333333\">\n";
  os << fmt("<text x=\"%.2f\" y=\"22\" text-anchor=\"middle\" "
            "font-size=\"14\">median latency by placement</text>\n",
            left + width / 2.0);

  // Axes.
  os << fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
            "stroke=\"#333333\"/>\n",
            left, bottom, left + width, bottom);
  os << fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
            "stroke=\"#333333\"/>\n",
            left, top, left, bottom);

  // X ticks at every plotted size.
  for (std::uint64_t t : ticks) {
    const double x = fx(std::log2(static_cast<double>(t)));
    os << fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
              "stroke=\"#333333\"/>\n",
              x, bottom, x, bottom + 5.0);
    os << fmt("<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">%s</text>\n",
              x, bottom + 20.0, size_label(t).c_str());
  }
  os << fmt("<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"middle\">transfer "
            "size (bytes)</text>\n",
            left + width / 2.0, bottom + 42.0);

  // Y ticks with light grid lines.
  for (double v = 0.0; v <= ytop + ystep / 2.0; v += ystep) {
    const double y = fy(v);
    os << fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
              "stroke=\"#dddddd\"/>\n",
              left, y, left + width, y);
    os << fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
              "stroke=\"#333333\"/>\n",
              left - 5.0, y, left, y);
    os << fmt("<text x=\"%.2f\" y=\"%.2f\" text-anchor=\"end\">%.0f</text>\n",
              left - 9.0, y + 4.0, v);
  }
  os << fmt("<text x=\"18\" y=\"%.2f\" text-anchor=\"middle\" "
            "transform=\"rotate(-90 18 %.2f)\">median latency (ns)</text>\n",
            top + height / 2.0, top + height / 2.0);
  os << "</g>\n";

  // Series.
  std::size_t color = 0;
  for (const std::string& name : series_names) {
    const char* stroke = kPalette[color % 10];
    ++color;
    const std::vector<Point>& points = series[name];
    os << "<polyline fill=\"none\" stroke=\"" << stroke
       << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i > 0) os << " ";
      os << fmt("%.2f,%.2f", fx(points[i].x), fy(points[i].y));
    }
    os << "\"/>\n";
    for (const Point& p : points) {
      os << fmt("<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n",
                fx(p.x), fy(p.y), stroke);
    }
  }

  // Legend.
  const double legend_x = left + width + 16.0;
  double legend_y = top + 10.0;
  os << "<g font-family=\"monospace\" font-size=\"12\" fill=\"#333333\">\n";
  color = 0;
  for (const std::string& name : series_names) {
    const char* stroke = kPalette[color % 10];
    ++color;
    os << fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
              "stroke=\"%s\" stroke-width=\"2\"/>\n",
              legend_x, legend_y - 4.0, legend_x + 22.0, legend_y - 4.0,
              stroke);
    os << fmt("<text x=\"%.2f\" y=\"%.2f\">%s</text>\n", legend_x + 28.0,
              legend_y, name.c_str());
    legend_y += 20.0;
  }
  os << "</g>\n";
  os << "</svg>\n";
  return os.str();
}

// -- files -----------------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path + "' for reading");
  }
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) {
    throw IoError("read failure on '" + path + "'");
  }
  return os.str();
}

void write_file(const std::string& path, std::string_view content) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path(), ec);
    if (ec) {
      throw IoError("cannot create directory '" + p.parent_path().string() +
                    "': " + ec.message());
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path + "' for writing");
  }
  out.write(content.data(),
            static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) {
    throw IoError("write failure on '" + path + "'");
  }
}

}  // namespace fabricflow
