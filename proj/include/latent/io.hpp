#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "latent/alignment.hpp"
#include "latent/embedding.hpp"
#include "latent/permutation.hpp"
#include "latent/simulation.hpp"

namespace latent {

inline constexpr int schema_version = 1;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

nlohmann::json to_json(const RngSeed& seed);
nlohmann::json to_json(const TestResult& result, bool include_null = true);
nlohmann::json to_json(const EmbeddingResult& embedding);
nlohmann::json to_json(const AlignmentResult& alignment);
nlohmann::json to_json(const PowerCurve& curve);
nlohmann::json to_json(const HemisphereTable& table);
nlohmann::json to_json(const GraphTestReport& report);

/// n, rate, ci_lo, ci_hi, method, alignment, rho; one row per (curve, size).
std::string power_csv(const std::vector<PowerCurve>& curves);

/// One row per method combination ("MGC+OTP", ...) and one column per d.
std::string hemisphere_csv(const HemisphereTable& table);

/// One row per vertex, columns x1..xd.
std::string positions_csv(const LatentPositions& positions);

/// The local correlation map, k down the rows and l across.
std::string mgc_grid_csv(const MatX& local);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> lo;  // error bar ends; empty for none
  std::vector<double> hi;
};

struct PlotOptions {
  std::string title;
  std::string x_label = "number of vertices";
  std::string y_label = "rejection rate";
  double y_min = 0.0;
  double y_max = 1.0;
  double reference = 0.05;  // dashed horizontal line; negative for none
};

/// SVG 1.1 line chart with error bars and a dashed reference line.
std::string line_plot_svg(const std::vector<PlotSeries>& series, const PlotOptions& options);

/// One series per curve, labelled "<statistic>+<alignment>".
std::string power_plot_svg(const std::vector<PowerCurve>& curves, const std::string& title);

/// Writes text to path, creating parent directories. Throws Error on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;  // fully resolved
  RngSeed seed;
  std::string tool_version;
  double runtime_seconds = 0.0;
  std::vector<std::string> outputs;
};

nlohmann::json to_json(const RunManifest& manifest);

}  // namespace latent
