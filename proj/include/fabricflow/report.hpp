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

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fabricflow/bench.hpp"
#include "fabricflow/oracle.hpp"

namespace fabricflow {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Input-shape problems in files we were asked to consume (malformed CSV,
/// unusable plot data).
class ReportError : public std::runtime_error {
 public:
  explicit ReportError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem failures (missing file, unwritable path).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// FNV-1a, 64-bit; used for config fingerprints and scenario seeds.
std::uint64_t fnv1a64(std::string_view bytes);

/// What produced an output file. Written verbatim into a comment header at
/// the top of every CSV/SVG, so results carry their provenance. Contains
/// no timestamps or host details: identical runs yield identical bytes.
struct RunManifest {
  std::string tool_version = std::string(kToolVersion);
  std::string config_name;       ///< As given on the command line.
  std::uint64_t config_hash = 0; ///< fnv1a64 of the canonical serialization.
  std::vector<std::string> placements;
  std::vector<std::size_t> device_counts;
  std::vector<std::uint64_t> sizes;
  std::size_t repetitions = 50;
  std::size_t warmups = 4;
  std::uint64_t seed = 0;
  std::string ack_mode;
  SimTime compute_ns = 0;
  std::vector<std::string> outputs;  ///< File names this run writes.
};

RunManifest make_manifest(const FabricConfig& config,
                          std::string_view config_name,
                          const SweepOptions& options);

/// The manifest as comment lines, each wrapped in `prefix`/`suffix`
/// (e.g. "# " for CSV). Ends with a newline.
std::string manifest_comment(const RunManifest& manifest,
                             std::string_view prefix = "# ",
                             std::string_view suffix = "");

/// The manifest as an XML comment block for SVG output.
std::string manifest_xml_comment(const RunManifest& manifest);

// -- CSV writers -----------------------------------------------------------

/// One row per repetition: placement,devices,size_bytes,rep,latency_ns.
std::string samples_csv(const RunManifest& manifest,
                        const std::vector<ScenarioResult>& results);

/// One row per (placement, size):
/// placement,devices,size_bytes,median_ns,min_ns,mean_ns,p95_ns.
std::string summary_csv(const RunManifest& manifest,
                        const std::vector<ScenarioResult>& results);

/// One row per size: devices,size_bytes,dist_vs_app,dist_vs_central.
/// Requires all three placements per size.
std::string speedup_csv(const RunManifest& manifest,
                        const std::vector<ScenarioResult>& results);

/// One row per checked scenario:
/// placement,size,n_devices,mode,config,sim_ns,oracle_ns,match.
std::string oracle_csv(const RunManifest& manifest,
                       const OracleCheckReport& report);

// -- plotting --------------------------------------------------------------

struct SummaryRow {
  std::string placement;
  std::size_t devices = 0;
  std::uint64_t size_bytes = 0;
  double median_ns = 0.0;
  SimTime min_ns = 0;
  double mean_ns = 0.0;
  SimTime p95_ns = 0;
};

/// Parse a summary CSV (as written by summary_csv); comment lines are
/// skipped, the header is checked. Throws ReportError on malformed input.
std::vector<SummaryRow> parse_summary_csv(std::string_view text);

/// Hand-emitted 800x500 line chart: x = transfer size on a log2 scale,
/// y = median latency (ns), one polyline + markers per placement, legend.
/// Fully deterministic; throws ReportError when there are no data rows.
/// `header` is emitted verbatim before the <svg> element (the provenance
/// comment block).
std::string render_latency_svg(const std::string& header,
                               const std::vector<SummaryRow>& rows);
std::string render_latency_svg(const RunManifest& manifest,
                               const std::vector<SummaryRow>& rows);

// -- files -----------------------------------------------------------------

/// Read/write whole files; both throw IoError. write_file creates missing
/// parent directories.
std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace fabricflow
