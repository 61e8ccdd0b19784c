#include "latent/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace latent {

using nlohmann::json;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buffer, end);
}

namespace {

// JSON cannot hold non-finite numbers; those become strings.
json number(double value) {
  if (std::isfinite(value)) return value;
  return format_double(value);
}

json vector_json(const VecX& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

json matrix_json(const MatX& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(vector_json(m.row(i).transpose()));
  return out;
}

std::string matrix_csv(const MatX& m, const std::vector<std::string>& header) {
  std::ostringstream out;
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
  return out.str();
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string method_label(StatisticKind statistic, AlignmentMethod alignment) {
  const std::string stat = statistic == StatisticKind::mgc ? "MGC" : statistic == StatisticKind::dcorr_biased
                                                                          ? "DCorr-biased"
                                                                          : "DCorr";
  return stat + "+" + (alignment == AlignmentMethod::otp ? "OTP" : "Median");
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

json to_json(const RngSeed& seed) { return json{{"seed", seed.seed}, {"stream", seed.stream}}; }

json to_json(const TestResult& result, bool include_null) {
  json out{{"schema_version", schema_version},
           {"statistic_kind", to_string(result.kind)},
           {"statistic", number(result.statistic)},
           {"p_value", number(result.p_value)},
           {"permutations", result.permutations},
           {"seed", to_json(result.seed)}};
  if (result.optimal_scale) {
    out["optimal_scale"] = json{{"k", result.optimal_scale->k}, {"l", result.optimal_scale->l}};
  } else {
    out["optimal_scale"] = nullptr;
  }
  if (include_null) {
    json nulls = json::array();
    for (const double v : result.null_values) nulls.push_back(number(v));
    out["null_values"] = std::move(nulls);
  }
  return out;
}

json to_json(const EmbeddingResult& embedding) {
  return json{{"schema_version", schema_version},
              {"dimension", embedding.dimension()},
              {"singular_values", vector_json(embedding.singular_values)},
              {"all_singular_values", vector_json(embedding.all_singular_values)},
              {"positions", matrix_json(embedding.positions)}};
}

json to_json(const AlignmentResult& alignment) {
  json history = json::array();
  for (const double v : alignment.objective_history) history.push_back(number(v));
  return json{{"schema_version", schema_version},
              {"rotation", matrix_json(alignment.rotation)},
              {"objective", number(alignment.objective)},
              {"entropic_objective", number(alignment.entropic_objective)},
              {"iterations", alignment.iterations},
              {"refinement_iterations", alignment.refinement_iterations},
              {"initialization", alignment.initialization},
              {"reg", number(alignment.reg)},
              {"objective_history", std::move(history)}};
}

json to_json(const PowerCurve& curve) {
  json points = json::array();
  for (std::size_t s = 0; s < curve.sizes.size(); ++s) {
    points.push_back(json{{"n", curve.sizes[s]},
                          {"rejections", curve.rejections[s]},
                          {"rate", number(curve.rate[s])},
                          {"ci_lo", number(curve.ci_lo[s])},
                          {"ci_hi", number(curve.ci_hi[s])},
                          {"degenerate", curve.degenerate[s]}});
  }
  return json{{"schema_version", schema_version},
              {"experiment", curve.experiment},
              {"method", curve.statistic},
              {"alignment", curve.alignment},
              {"rho", number(curve.rho)},
              {"alpha", number(curve.alpha)},
              {"replicates", curve.replicates},
              {"permutations", curve.permutations},
              {"seed", to_json(curve.seed)},
              {"points", std::move(points)}};
}

json to_json(const HemisphereTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    json ps = json::array();
    json stats = json::array();
    for (const double p : r.p_values) ps.push_back(number(p));
    for (const double s : r.statistics) stats.push_back(number(s));
    rows.push_back(json{{"method", method_label(r.statistic, r.alignment)},
                        {"statistic_kind", to_string(r.statistic)},
                        {"alignment", to_string(r.alignment)},
                        {"p_values", std::move(ps)},
                        {"statistics", std::move(stats)}});
  }
  return json{{"schema_version", schema_version},
              {"dimensions", table.dimensions},
              {"permutations", table.permutations},
              {"seed", to_json(table.seed)},
              {"rows", std::move(rows)}};
}

json to_json(const GraphTestReport& report) {
  json out{{"schema_version", schema_version},
           {"dimension", report.dimension},
           {"variance_corrected", report.variance_corrected},
           {"reject", report.reject},
           {"test", to_json(report.test)},
           {"singular_values_a", vector_json(report.embedding_a.singular_values)},
           {"singular_values_b", vector_json(report.embedding_b.singular_values)}};
  if (report.alignment) {
    out["alignment"] = to_json(*report.alignment);
    out["alignment"].erase("schema_version");
  }
  if (report.flips.size() > 0) out["flips"] = vector_json(report.flips);
  return out;
}

std::string power_csv(const std::vector<PowerCurve>& curves) {
  std::ostringstream out;
  out << "n,rate,ci_lo,ci_hi,method,alignment,rho\n";
  for (const auto& c : curves) {
    for (std::size_t s = 0; s < c.sizes.size(); ++s) {
      out << c.sizes[s] << ',' << format_double(c.rate[s]) << ',' << format_double(c.ci_lo[s]) << ','
          << format_double(c.ci_hi[s]) << ',' << c.statistic << ',' << c.alignment << ',' << format_double(c.rho)
          << '\n';
    }
  }
  return out.str();
}

std::string hemisphere_csv(const HemisphereTable& table) {
  std::ostringstream out;
  out << "method";
  for (const Index d : table.dimensions) out << ",d=" << d;
  out << '\n';
  for (const auto& r : table.rows) {
    out << method_label(r.statistic, r.alignment);
    for (const double p : r.p_values) out << ',' << format_double(p);
    out << '\n';
  }
  return out.str();
}

std::string positions_csv(const LatentPositions& positions) {
  std::vector<std::string> header;
  for (Index c = 0; c < positions.cols(); ++c) header.push_back("x" + std::to_string(c + 1));
  return matrix_csv(positions, header);
}

std::string mgc_grid_csv(const MatX& local) {
  std::vector<std::string> header{"k"};
  for (Index l = 0; l < local.cols(); ++l) header.push_back("l=" + std::to_string(l + 1));
  std::ostringstream out;
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Index k = 0; k < local.rows(); ++k) {
    out << k + 1;
    for (Index l = 0; l < local.cols(); ++l) out << ',' << format_double(local(k, l));
    out << '\n';
  }
  return out.str();
}

std::string line_plot_svg(const std::vector<PlotSeries>& series, const PlotOptions& options) {
  constexpr double width = 640, height = 420;
  constexpr double left = 70, right = 170, top = 40, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  static const char* const colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  double x_min = 0, x_max = 1;
  bool any = false;
  for (const auto& s : series) {
    for (const double x : s.x) {
      x_min = any ? std::min(x_min, x) : x;
      x_max = any ? std::max(x_max, x) : x;
      any = true;
    }
  }
  if (!(x_max > x_min)) {
    x_min -= 1;
    x_max += 1;
  }
  const double y_span = options.y_max > options.y_min ? options.y_max - options.y_min : 1.0;
  auto px = [&](double x) { return left + (x - x_min) / (x_max - x_min) * plot_w; };
  auto py = [&](double y) {
    const double t = (std::clamp(y, options.y_min, options.y_min + y_span) - options.y_min) / y_span;
    return top + (1 - t) * plot_h;
  };
  auto f = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << f(left + plot_w / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape_xml(options.title) << "</text>\n";

  // Axes, ticks and labels.
  out << "<g stroke=\"black\" fill=\"none\">\n"
      << "<rect x=\"" << f(left) << "\" y=\"" << f(top) << "\" width=\"" << f(plot_w) << "\" height=\"" << f(plot_h)
      << "\"/>\n</g>\n";
  for (int t = 0; t <= 5; ++t) {
    const double y = options.y_min + y_span * t / 5.0;
    out << "<line x1=\"" << f(left - 4) << "\" y1=\"" << f(py(y)) << "\" x2=\"" << f(left) << "\" y2=\""
        << f(py(y)) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << f(left - 8) << "\" y=\"" << f(py(y) + 4) << "\" text-anchor=\"end\">" << f(y).substr(0, 4)
        << "</text>\n";
  }
  std::vector<double> ticks;
  for (const auto& s : series) ticks.insert(ticks.end(), s.x.begin(), s.x.end());
  std::sort(ticks.begin(), ticks.end());
  ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
  for (const double x : ticks) {
    out << "<line x1=\"" << f(px(x)) << "\" y1=\"" << f(top + plot_h) << "\" x2=\"" << f(px(x)) << "\" y2=\""
        << f(top + plot_h + 4) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << f(px(x)) << "\" y=\"" << f(top + plot_h + 18) << "\" text-anchor=\"middle\">"
        << format_double(x) << "</text>\n";
  }
  out << "<text x=\"" << f(left + plot_w / 2) << "\" y=\"" << f(height - 18) << "\" text-anchor=\"middle\">"
      << escape_xml(options.x_label) << "</text>\n"
      << "<text transform=\"translate(18," << f(top + plot_h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape_xml(options.y_label) << "</text>\n";

  if (options.reference >= options.y_min && options.reference <= options.y_min + y_span) {
    out << "<line x1=\"" << f(left) << "\" y1=\"" << f(py(options.reference)) << "\" x2=\"" << f(left + plot_w)
        << "\" y2=\"" << f(py(options.reference)) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  }

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string color = colors[k % std::size(colors)];
    out << "<g stroke=\"" << color << "\" fill=\"" << color << "\">\n";
    if (!s.x.empty()) {
      out << "<polyline fill=\"none\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) out << (i ? " " : "") << f(px(s.x[i])) << ',' << f(py(s.y[i]));
      out << "\"/>\n";
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i < s.lo.size() && i < s.hi.size()) {
        const double x = px(s.x[i]);
        out << "<line x1=\"" << f(x) << "\" y1=\"" << f(py(s.lo[i])) << "\" x2=\"" << f(x) << "\" y2=\""
            << f(py(s.hi[i])) << "\"/>\n"
            << "<line x1=\"" << f(x - 4) << "\" y1=\"" << f(py(s.lo[i])) << "\" x2=\"" << f(x + 4) << "\" y2=\""
            << f(py(s.lo[i])) << "\"/>\n"
            << "<line x1=\"" << f(x - 4) << "\" y1=\"" << f(py(s.hi[i])) << "\" x2=\"" << f(x + 4) << "\" y2=\""
            << f(py(s.hi[i])) << "\"/>\n";
      }
      out << "<circle cx=\"" << f(px(s.x[i])) << "\" cy=\"" << f(py(s.y[i])) << "\" r=\"3\"/>\n";
    }
    const double ly = top + 14 + 20.0 * static_cast<double>(k);
    out << "<line x1=\"" << f(left + plot_w + 12) << "\" y1=\"" << f(ly) << "\" x2=\"" << f(left + plot_w + 36)
        << "\" y2=\"" << f(ly) << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << f(left + plot_w + 42) << "\" y=\"" << f(ly + 4) << "\" stroke=\"none\" fill=\"black\">"
        << escape_xml(s.label) << "</text>\n</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string power_plot_svg(const std::vector<PowerCurve>& curves, const std::string& title) {
  std::vector<PlotSeries> series;
  for (const auto& c : curves) {
    PlotSeries s;
    s.label = upper(c.statistic) + "+" + c.alignment;
    for (std::size_t i = 0; i < c.sizes.size(); ++i) {
      s.x.push_back(static_cast<double>(c.sizes[i]));
      s.y.push_back(c.rate[i]);
      s.lo.push_back(c.ci_lo[i]);
      s.hi.push_back(c.ci_hi[i]);
    }
    series.push_back(std::move(s));
  }
  PlotOptions options;
  options.title = title;
  options.reference = curves.empty() ? 0.05 : curves.front().alpha;
  return line_plot_svg(series, options);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

json to_json(const RunManifest& manifest) {
  return json{{"schema_version", schema_version},
              {"command", manifest.command},
              {"config", manifest.config},
              {"seed", to_json(manifest.seed)},
              {"tool_version", manifest.tool_version},
              {"runtime_seconds", number(manifest.runtime_seconds)},
              {"outputs", manifest.outputs}};
}

}  // namespace latent
