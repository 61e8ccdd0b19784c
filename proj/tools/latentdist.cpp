// latentdist: two-sample tests on graph pairs and the accompanying
// simulation studies.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "latent/graph.hpp"
#include "latent/io.hpp"
#include "latent/simulation.hpp"

namespace fs = std::filesystem;
using namespace latent;

namespace {

constexpr const char* tool_version = "0.1.0";

// Every subcommand option not given on the command line takes its value
// from the key=value config file when present there.
void apply_config(CLI::App& sub, const std::vector<CLI::ConfigItem>& items) {
  for (const auto& item : items) {
    if (item.inputs.empty() || !item.parents.empty()) continue;
    CLI::Option* opt = nullptr;
    try {
      opt = sub.get_option("--" + item.name);
    } catch (const CLI::OptionNotFound&) {
      continue;
    }
    opt->default_val(item.inputs.front());
  }
}

std::vector<CLI::ConfigItem> read_config(int argc, char** argv) {
  std::string path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
  }
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": config file not found or unreadable");
  return CLI::ConfigINI().from_config(in);
}

std::map<std::string, std::string> resolved(const CLI::App& sub) {
  std::map<std::string, std::string> out;
  for (const auto* opt : sub.get_options()) {
    const std::string name = opt->get_name(false, true);
    if (name.empty() || opt == sub.get_help_ptr()) continue;
    std::string value;
    if (opt->get_expected_max() == 0) {
      // Flags set from a config file arrive as their default string.
      const std::string d = opt->get_default_str();
      const bool on = opt->count() > 0 || d == "true" || d == "1" || d == "on" || d == "yes";
      value = on ? "true" : "false";
    } else if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : " ") + r;
    } else {
      value = opt->get_default_str();
    }
    std::string key = opt->get_name();
    while (!key.empty() && key.front() == '-') key.erase(0, 1);
    out[key] = value;
  }
  return out;
}

struct Common {
  std::uint64_t seed = 20200101;
  int threads = 0;
  std::string outdir = "out";
  std::string config;
};

void add_common(CLI::App& sub, Common& c) {
  sub.add_option("--seed", c.seed, "Master seed")->capture_default_str();
  sub.add_option("--threads", c.threads, "Worker threads (0: LATENTDIST_THREADS or all cores)")
      ->capture_default_str();
  sub.add_option("--outdir", c.outdir, "Output directory")->capture_default_str();
  sub.add_option("--config", c.config, "key=value file; command-line flags take precedence");
}

class Run {
 public:
  Run(std::string command, const CLI::App& sub, const Common& common)
      : start_(std::chrono::steady_clock::now()), outdir_(common.outdir) {
    manifest_.command = std::move(command);
    manifest_.config = resolved(sub);
    manifest_.seed = RngSeed{common.seed, 0};
    manifest_.tool_version = tool_version;
  }

  void write(const std::string& name, const std::string& text) {
    const fs::path path = outdir_ / name;
    write_text(path, text);
    manifest_.outputs.push_back(path.string());
  }

  void finish() {
    manifest_.outputs.push_back((outdir_ / "manifest.json").string());
    manifest_.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text(outdir_ / "manifest.json", to_json(manifest_).dump(2) + "\n");
  }

 private:
  std::chrono::steady_clock::time_point start_;
  fs::path outdir_;
  RunManifest manifest_;
};

std::vector<Index> parse_sizes(const std::string& text) {
  std::vector<Index> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v < 1) throw InvalidArgument("bad size list \"" + text + "\"");
    out.push_back(static_cast<Index>(v));
  }
  if (out.empty()) throw InvalidArgument("empty size list");
  return out;
}

AdjacencyMatrix load(const std::string& path, const std::string& format, int index_base, bool header) {
  LoadOptions options;
  options.format = parse_graph_format(format);
  options.index_base = index_base;
  options.header = header;
  auto loaded = load_graph(path, options);
  if (loaded.dropped_self_loops > 0) {
    std::cerr << "warning: " << path << ": dropped " << loaded.dropped_self_loops << " self-loop(s)\n";
  }
  return std::move(loaded.graph);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-sample testing for random dot product graphs"};
  app.set_version_flag("--version", tool_version);
  app.require_subcommand(1);

  // test
  Common test_common;
  std::string graph1, graph2, d_text = "auto", align_text = "otp", stat_text = "mgc", format = "dense-csv";
  int permutations = 1000, index_base = 0, max_elbows = 1;
  double alpha = 0.05;
  bool correct_variance = false, header = false;
  auto* test = app.add_subcommand("test", "Test whether two graphs share a latent position distribution");
  test->add_option("graph1", graph1, "First graph file")->required();
  test->add_option("graph2", graph2, "Second graph file")->required();
  test->add_option("--d", d_text, "Embedding dimension or auto")->capture_default_str();
  test->add_option("--max-elbows", max_elbows, "Elbows searched by --d auto")->capture_default_str();
  test->add_option("--align", align_text, "otp or median")->capture_default_str();
  test->add_option("--stat", stat_text, "mgc, dcorr or dcorr-biased")->capture_default_str();
  test->add_option("--B", permutations, "Permutations")->capture_default_str();
  test->add_option("--alpha", alpha, "Significance level")->capture_default_str();
  test->add_flag("--correct-variance", correct_variance, "Match the larger embedding's noise to the smaller graph")
      ->capture_default_str();
  test->add_option("--format", format, "dense-csv or edge-list")->capture_default_str();
  test->add_option("--index-base", index_base, "Edge-list index base (0 or 1)")->capture_default_str();
  test->add_flag("--header", header, "Skip one header line")->capture_default_str();
  add_common(*test, test_common);

  // simulate
  Common sim_common;
  std::string experiment, scale = "desk", left_path = "data/left_mushroom_body.csv",
                          right_path = "data/right_mushroom_body.csv", sizes_text;
  int replicates = 0, sim_permutations = 0;
  double sim_alpha = 0.05;
  auto* simulate = app.add_subcommand("simulate", "Power studies: fig1 (univariate) or fig2 (connectome)");
  simulate->add_option("experiment", experiment, "fig1 or fig2")->required()->check(CLI::IsMember({"fig1", "fig2"}));
  simulate->add_option("--scale", scale, "desk or paper")->capture_default_str()->check(
      CLI::IsMember({"desk", "paper"}));
  simulate->add_option("--replicates", replicates, "Override the replicate count");
  simulate->add_option("--B", sim_permutations, "Override the permutation count");
  simulate->add_option("--sizes", sizes_text, "Override the size grid, e.g. 50,100,200");
  simulate->add_option("--alpha", sim_alpha, "Significance level")->capture_default_str();
  simulate->add_option("--left", left_path, "Left hemisphere graph (fig2)")->capture_default_str();
  simulate->add_option("--right", right_path, "Right hemisphere graph (fig2)")->capture_default_str();
  add_common(*simulate, sim_common);

  // reproduce-table1
  Common table_common;
  std::string table_left, table_right;
  int table_permutations = 999;
  bool table_correct = false;
  auto* table = app.add_subcommand("reproduce-table1", "Left vs right hemisphere p-values for d = 1..5");
  table->add_option("left", table_left, "Left hemisphere graph")->required();
  table->add_option("right", table_right, "Right hemisphere graph")->required();
  table->add_option("--B", table_permutations, "Permutations")->capture_default_str();
  table->add_flag("--correct-variance", table_correct, "Apply the unequal-size variance correction")->capture_default_str();
  add_common(*table, table_common);

  try {
    const auto items = read_config(argc, argv);
    for (auto* sub : {test, simulate, table}) apply_config(*sub, items);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (test->parsed()) {
      Run run("test", *test, test_common);
      const auto a = load(graph1, format, index_base, header);
      const auto b = load(graph2, format, index_base, header);
      GraphTestConfig config;
      if (d_text != "auto") config.dimension = parse_sizes(d_text).front();
      config.max_elbows = max_elbows;
      config.alignment = parse_alignment(align_text);
      config.statistic = parse_statistic(stat_text);
      config.permutations = permutations;
      config.alpha = alpha;
      config.seed = RngSeed{test_common.seed, 0};
      config.correct_variance = correct_variance;
      config.threads = test_common.threads;
      const auto report = two_sample_graph_test(a, b, config);
      std::cout << "d = " << report.dimension << ", " << to_string(report.test.kind)
                << " = " << format_double(report.test.statistic) << ", p = " << format_double(report.test.p_value)
                << " (B = " << report.test.permutations << ")\n"
                << (report.reject ? "reject" : "do not reject") << " H0 at alpha = " << format_double(alpha) << "\n";
      run.write("test_result.json", to_json(report).dump(2) + "\n");
      run.finish();
    } else if (simulate->parsed()) {
      Run run("simulate " + experiment, *simulate, sim_common);
      const bool paper = scale == "paper";
      const RngSeed seed{sim_common.seed, 0};
      if (experiment == "fig1") {
        const UnivariateScenario scenarios[] = {UnivariateScenario::null_same, UnivariateScenario::linear_shift,
                                                UnivariateScenario::nonlinear_beta};
        for (std::size_t k = 0; k < 3; ++k) {
          UnivariateConfig config;
          config.scenario = scenarios[k];
          config.sizes = paper ? std::vector<Index>{50, 100, 150, 200, 250, 300} : std::vector<Index>{50, 100, 200};
          if (!sizes_text.empty()) config.sizes = parse_sizes(sizes_text);
          config.replicates = replicates > 0 ? replicates : paper ? 1000 : 200;
          config.permutations = sim_permutations > 0 ? sim_permutations : 500;
          config.alpha = sim_alpha;
          config.seed = seed.child(k);
          config.threads = sim_common.threads;
          const auto curves = run_univariate_power(config);
          const std::string name = "fig1_" + to_string(config.scenario);
          run.write(name + ".csv", power_csv(curves));
          run.write(name + ".svg", power_plot_svg(curves, "Univariate positions, " + to_string(config.scenario)));
          std::cerr << "wrote " << name << "\n";
        }
      } else {
        const fs::path paths[] = {left_path, right_path};
        const char* sides[] = {"left", "right"};
        const double rhos[] = {0.0, 0.5, 1.0};
        for (std::size_t side = 0; side < 2; ++side) {
          const auto graph = load(paths[side].string(), "dense-csv", 0, false);
          for (std::size_t r = 0; r < 3; ++r) {
            SyntheticConfig config;
            config.source = ase(graph, 3).positions;
            config.source_name = sides[side];
            config.rho = rhos[r];
            config.sizes = paper ? std::vector<Index>{20, 40, 60, 80, 100, 120, 140, 160, 180, 200}
                                 : std::vector<Index>{20, 50, 100, 200};
            if (!sizes_text.empty()) config.sizes = parse_sizes(sizes_text);
            config.replicates = replicates > 0 ? replicates : paper ? 500 : 200;
            config.permutations = sim_permutations > 0 ? sim_permutations : 500;
            config.alpha = sim_alpha;
            config.seed = seed.child(side).child(r);
            config.threads = sim_common.threads;
            const auto curves = run_synthetic_power(config);
            const std::string name = std::string("fig2_") + sides[side] + "_rho" + format_double(rhos[r]);
            run.write(name + ".csv", power_csv(curves));
            const std::string title =
                std::string("Synthetic pairs, ") + sides[side] + " hemisphere, rho = " + format_double(rhos[r]);
            run.write(name + ".svg", power_plot_svg(curves, title));
            std::cerr << "wrote " << name << "\n";
          }
        }
      }
      run.finish();
    } else if (table->parsed()) {
      Run run("reproduce-table1", *table, table_common);
      const auto left = load(table_left, "dense-csv", 0, false);
      const auto right = load(table_right, "dense-csv", 0, false);
      HemisphereConfig config;
      config.permutations = table_permutations;
      config.seed = RngSeed{table_common.seed, 0};
      config.correct_variance = table_correct;
      config.threads = table_common.threads;
      const auto result = hemisphere_test(left, right, config);
      const std::string csv = hemisphere_csv(result);
      std::cout << csv;
      run.write("table1.csv", csv);
      run.write("table1.json", to_json(result).dump(2) + "\n");
      run.finish();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
