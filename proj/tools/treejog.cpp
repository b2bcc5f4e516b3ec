// treejog command-line front end. Exit status: 0 success, 1 input error,
// 2 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "treejog/ctmc.hpp"
#include "treejog/dollo.hpp"
#include "treejog/errors.hpp"
#include "treejog/jog.hpp"
#include "treejog/kde.hpp"
#include "treejog/nexus.hpp"
#include "treejog/pca.hpp"
#include "treejog/pipeline.hpp"
#include "treejog/random.hpp"
#include "treejog/svg.hpp"

using namespace treejog;
using nlohmann::json;

namespace {

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty() || !out.empty()) out.push_back(cur);
  for (auto& item : out) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    item = b == std::string::npos ? "" : item.substr(b, e - b + 1);
  }
  return out;
}

Viewport parse_zoom(const std::string& s) {
  auto parts = split_list(s);
  if (parts.size() != 4) throw InputError("--zoom expects \"x0,x1,y0,y1\"");
  double v[4];
  for (int i = 0; i < 4; ++i) {
    try {
      std::size_t used = 0;
      v[i] = std::stod(parts[static_cast<std::size_t>(i)], &used);
      if (used != parts[static_cast<std::size_t>(i)].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw InputError("--zoom: \"" + parts[static_cast<std::size_t>(i)] + "\" is not a number");
    }
  }
  return {v[0], v[1], v[2], v[3]};
}

TimeTree tree_from_source(const std::string& source, std::size_t leaves, double depth) {
  if (source == "skewed" || source == "balanced") return make_shape(source, leaves, depth);
  auto log = read_nexus_file(source, kStateTag);
  if (log.samples.empty()) throw InputError(source + " contains no trees");
  return log.samples.front().tree.tree();
}

NexusTreeLog read_states_log(const std::string& path) { return read_nexus_file(path, kStateTag); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Projects state-annotated phylogenetic trees onto principal components and "
               "measures jogging"};
  app.set_version_flag("--version", std::string("treejog ") + TREEJOG_VERSION);
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate stochastic Dollo data along a time tree");
  std::string sim_tree = "skewed";
  std::size_t sim_leaves = 16;
  double sim_depth = 10000.0;
  DolloConfig dollo;
  std::string sim_borrow = "none";
  double sim_limit = 1000.0;
  std::optional<double> sim_fraction;
  std::optional<double> sim_rate;
  std::string out_matrix, out_truth, out_events;
  sim->add_option("--tree", sim_tree, "skewed, balanced or a NEXUS file")->capture_default_str();
  sim->add_option("--leaves", sim_leaves, "Leaves for generated trees")->capture_default_str();
  sim->add_option("--depth", sim_depth, "Root age in years for generated trees")->capture_default_str();
  sim->add_option("--loss", dollo.loss_rate, "Loss rate per trait per 1000 years")->capture_default_str();
  sim->add_option("--mean-traits", dollo.mean_traits, "Expected traits per language")->capture_default_str();
  sim->add_option("--birth", dollo.birth_rate, "Births per lineage per 1000 years");
  sim->add_option("--borrow", sim_borrow, "none, global or local")->capture_default_str();
  sim->add_option("--limit", sim_limit, "Local borrowing time limit in years")->capture_default_str();
  sim->add_option("--borrow-fraction", sim_fraction, "Target borrowed fraction per 1000 years");
  sim->add_option("--borrow-rate", sim_rate, "Raw borrow rate (instead of a target fraction)");
  sim->add_option("--seed", dollo.seed, "Random seed")->capture_default_str();
  sim->add_option("--out-matrix", out_matrix, "Leaf matrix CSV");
  sim->add_option("--out-truth", out_truth, "True states as NEXUS");
  sim->add_option("--out-events", out_events, "Event log CSV");

  // ancestral
  auto* anc = app.add_subcommand("ancestral", "Sample ancestral states by FFBS on a fixed tree");
  std::string anc_tree, anc_matrix, anc_out;
  CtmcRates rates;
  bool fit = false;
  std::string rate_model = "symmetric";
  std::size_t anc_samples = 1;
  std::uint64_t anc_seed = 1;
  anc->add_option("--tree", anc_tree, "NEXUS file; its first tree is used")->required();
  anc->add_option("--matrix", anc_matrix, "Leaf matrix CSV")->required();
  anc->add_option("--alpha", rates.alpha, "0 -> 1 rate per 1000 years")->capture_default_str();
  anc->add_option("--beta", rates.beta, "1 -> 0 rate per 1000 years")->capture_default_str();
  anc->add_flag("--fit-rates", fit, "Fit rates by maximum likelihood");
  anc->add_option("--rate-model", rate_model, "symmetric or asymmetric (with --fit-rates)")
      ->capture_default_str();
  anc->add_option("--samples", anc_samples, "Number of draws")->capture_default_str();
  anc->add_option("--seed", anc_seed, "Random seed")->capture_default_str();
  anc->add_option("--out", anc_out, "Output NEXUS (default stdout)");

  // pca
  auto* pca = app.add_subcommand("pca", "Fit principal axes to a leaf matrix");
  std::string pca_matrix, pca_out, pca_missing = "refuse";
  std::size_t pca_k = 2;
  pca->add_option("--matrix", pca_matrix, "Leaf matrix CSV")->required();
  pca->add_option("--components", pca_k, "Number of components")->capture_default_str();
  pca->add_option("--missing", pca_missing, "refuse or mean_impute")->capture_default_str();
  pca->add_option("--out", pca_out, "Model JSON (default stdout)");

  // jog
  auto* jog = app.add_subcommand("jog", "Backtrack fractions of a projected tree");
  std::string jog_tree, jog_model, jog_out, jog_index = "last";
  std::size_t jog_axis = 1;
  jog->add_option("--tree", jog_tree, "State-annotated NEXUS log")->required();
  jog->add_option("--model", jog_model, "PCA model JSON")->required();
  jog->add_option("--sample-index", jog_index, "last, first, all or a zero-based index")
      ->capture_default_str();
  jog->add_option("--axis", jog_axis, "Component measured (1 or 2)")->capture_default_str();
  jog->add_option("--out", jog_out, "Report JSON (default stdout)");

  // patterns
  auto* pat = app.add_subcommand("patterns", "Count grandparent -> parent -> child state patterns");
  std::string pat_tree, pat_out, pat_index = "last";
  pat->add_option("--tree", pat_tree, "State-annotated NEXUS log")->required();
  pat->add_option("--sample-index", pat_index, "last, first, all or a zero-based index")
      ->capture_default_str();
  pat->add_option("--out", pat_out, "Counts JSON (default stdout)");

  // kde
  auto* kde = app.add_subcommand("kde", "Density of a clade ancestor's location across samples");
  std::string kde_tree, kde_clade, kde_model, kde_out, kde_svg;
  std::optional<double> kde_bw;
  std::size_t kde_grid = 100;
  kde->add_option("--tree", kde_tree, "State-annotated NEXUS log")->required();
  kde->add_option("--clade", kde_clade, "Comma-separated leaf labels")->required();
  kde->add_option("--model", kde_model, "PCA model JSON")->required();
  kde->add_option("--bandwidth", kde_bw, "Kernel bandwidth (default: Scott's rule)");
  kde->add_option("--grid", kde_grid, "Cells per axis")->capture_default_str();
  kde->add_option("--out", kde_out, "Density CSV (default stdout)");
  kde->add_option("--svg", kde_svg, "Also render the density as SVG");

  // plot
  auto* plot = app.add_subcommand("plot", "Render a projected tree as SVG");
  std::string plot_tree, plot_model, plot_out, plot_index = "last", plot_zoom, plot_labels = "leaves",
                                                plot_highlight;
  PlotConfig plot_cfg;
  plot->add_option("--tree", plot_tree, "State-annotated NEXUS log")->required();
  plot->add_option("--model", plot_model, "PCA model JSON")->required();
  plot->add_option("--sample-index", plot_index, "last, first or a zero-based index")
      ->capture_default_str();
  plot->add_option("--zoom", plot_zoom, "Viewport \"x0,x1,y0,y1\"");
  plot->add_flag("--invert-y", plot_cfg.invert_y, "Flip the vertical axis");
  plot->add_option("--labels", plot_labels, "all, leaves or none")->capture_default_str();
  plot->add_option("--highlight", plot_highlight, "Comma-separated leaf labels");
  plot->add_option("--width", plot_cfg.width, "Pixels")->capture_default_str();
  plot->add_option("--height", plot_cfg.height, "Pixels")->capture_default_str();
  plot->add_option("--out", plot_out, "SVG file (default stdout)");

  // synthetic
  auto* syn = app.add_subcommand("synthetic", "Run every scenario of the synthetic experiment");
  std::string syn_config, syn_out;
  std::optional<std::uint64_t> syn_seed;
  syn->add_option("--config", syn_config, "Pipeline config JSON");
  syn->add_option("--seed", syn_seed, "Override the config seed");
  syn->add_option("--out", syn_out, "Output directory")->required();

  // analyze
  auto* ana = app.add_subcommand("analyze", "Analyse an external state-annotated tree log");
  std::string ana_config, ana_out, ana_index, ana_clade;
  std::vector<std::string> ana_trees;
  std::string ana_matrix;
  ana->add_option("--trees", ana_trees, "NEXUS logs; several are merged in order");
  ana->add_option("--matrix", ana_matrix, "Leaf matrix CSV when leaves are not annotated");
  ana->add_option("--config", ana_config, "Pipeline config JSON");
  ana->add_option("--sample-index", ana_index, "last, first, all or a zero-based index");
  ana->add_option("--clade", ana_clade, "Comma-separated leaf labels for the KDE");
  ana->add_option("--out", ana_out, "Output directory")->required();

  for (auto* sub : app.get_subcommands({})) {
    sub->set_version_flag("--version", std::string("treejog ") + TREEJOG_VERSION);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      TimeTree tree = tree_from_source(sim_tree, sim_leaves, sim_depth);
      BorrowScenario scenario;
      scenario.kind = parse_borrow_kind(sim_borrow);
      if (scenario.kind == BorrowKind::local) scenario.time_limit = sim_limit;
      if (scenario.kind != BorrowKind::none) {
        if (sim_rate) {
          scenario.borrow_rate = sim_rate;
        } else {
          scenario.target_fraction = sim_fraction.value_or(0.5);
        }
      }
      Simulation result = simulate(tree, dollo, scenario);
      if (!out_matrix.empty()) {
        std::ostringstream s;
        write_matrix_csv(s, result.leaves);
        emit(out_matrix, s.str());
      }
      if (!out_truth.empty()) emit(out_truth, write_nexus(make_log({{"truth", result.truth}}), kStateTag));
      if (!out_events.empty()) {
        std::ostringstream s;
        write_events_csv(s, result.events);
        emit(out_events, s.str());
      }
      json summary{{"features", result.leaves.cols()},
                   {"root_traits", result.root_traits},
                   {"borrow_rate", result.borrow_rate},
                   {"borrowed_fraction", effective_borrowed_fraction(result.events, tree)},
                   {"events", result.events.events.size()}};
      std::cout << summary.dump(2) << "\n";
    } else if (*anc) {
      TimeTree tree = tree_from_source(anc_tree, 0, 0);
      CharacterMatrix matrix = read_matrix_csv_file(anc_matrix);
      if (fit) {
        RateModel model = rate_model == "asymmetric" ? RateModel::asymmetric : RateModel::symmetric;
        if (rate_model != "symmetric" && rate_model != "asymmetric") {
          throw InputError("--rate-model must be symmetric or asymmetric");
        }
        RateFit f = fit_rates(tree, matrix, model);
        rates = f.rates;
        std::cerr << "fitted alpha " << rates.alpha << " beta " << rates.beta << " log-likelihood "
                  << f.log_likelihood << "\n";
      }
      if (anc_samples == 0) throw InputError("--samples must be at least 1");
      AncestralSampler sampler(tree, rates, matrix);
      std::vector<TreeSample> draws;
      for (std::size_t k = 0; k < anc_samples; ++k) {
        draws.push_back({std::to_string(k + 1), sampler.draw(derive_seed(anc_seed, {2, k}))});
      }
      emit(anc_out, write_nexus(make_log(std::move(draws)), kStateTag));
    } else if (*pca) {
      MissingPolicy policy;
      if (pca_missing == "refuse") {
        policy = MissingPolicy::refuse;
      } else if (pca_missing == "mean_impute") {
        policy = MissingPolicy::mean_impute;
      } else {
        throw InputError("--missing must be refuse or mean_impute");
      }
      PcaModel model = fit_pca(read_matrix_csv_file(pca_matrix), pca_k, policy);
      emit(pca_out, to_json(model).dump(1) + "\n");
    } else if (*jog) {
      if (jog_axis < 1 || jog_axis > 2) throw InputError("--axis must be 1 or 2");
      NexusTreeLog log = read_states_log(jog_tree);
      PcaModel model = read_pca_file(jog_model);
      std::vector<std::size_t> picks;
      if (jog_index == "all") {
        for (std::size_t i = 0; i < log.samples.size(); ++i) picks.push_back(i);
      } else {
        picks.push_back(resolve_sample_index(log, jog_index));
      }
      json reports = json::array();
      for (std::size_t i : picks) {
        const auto& sample = log.samples[i];
        JogReport report = jogging_score(project_tree(sample.tree, model), jog_axis - 1);
        if (sample.tree.complete()) report.patterns = count_patterns(sample.tree);
        json j = to_json(report);
        j["sample"] = sample.id;
        reports.push_back(std::move(j));
      }
      emit(jog_out, (picks.size() == 1 ? reports.front() : reports).dump(2) + "\n");
    } else if (*pat) {
      NexusTreeLog log = read_states_log(pat_tree);
      PatternCounts total{};
      if (pat_index == "all") {
        for (const auto& s : log.samples) {
          auto c = count_patterns(s.tree);
          for (std::size_t i = 0; i < c.size(); ++i) total[i] += c[i];
        }
      } else {
        total = count_patterns(log.samples[resolve_sample_index(log, pat_index)].tree);
      }
      emit(pat_out, patterns_to_json(total).dump(2) + "\n");
    } else if (*kde) {
      NexusTreeLog log = read_states_log(kde_tree);
      PcaModel model = read_pca_file(kde_model);
      const auto clade = split_list(kde_clade);
      std::vector<Point2> points;
      for (const auto& loc : clade_locations(log, clade, model)) points.push_back(loc.location);
      if (kde_grid == 0) throw InputError("--grid must be positive");
      const Bandwidth h = kde_bw ? Bandwidth{*kde_bw, *kde_bw} : scott_bandwidth(points);
      DensityGrid grid = kde_2d(points, h, auto_grid(points, h, kde_grid, kde_grid));
      std::ostringstream s;
      write_density_csv(s, grid);
      emit(kde_out, s.str());
      if (!kde_svg.empty()) emit(kde_svg, render_kde(grid, points, plot_spec(PlotConfig{}, model)));
    } else if (*plot) {
      NexusTreeLog log = read_states_log(plot_tree);
      PcaModel model = read_pca_file(plot_model);
      if (plot_labels == "all") {
        plot_cfg.labels = LabelMode::all;
      } else if (plot_labels == "none") {
        plot_cfg.labels = LabelMode::none;
      } else if (plot_labels == "leaves") {
        plot_cfg.labels = LabelMode::leaves;
      } else {
        throw InputError("--labels must be all, leaves or none");
      }
      if (!plot_zoom.empty()) plot_cfg.zoom = parse_zoom(plot_zoom);
      if (!plot_highlight.empty()) plot_cfg.highlight = split_list(plot_highlight);
      const auto& sample = log.samples[resolve_sample_index(log, plot_index)];
      emit(plot_out, render_tree(project_tree(sample.tree, model), plot_spec(plot_cfg, model)));
    } else if (*syn) {
      PipelineConfig config = syn_config.empty() ? PipelineConfig{} : read_config_file(syn_config);
      if (syn_seed) config.seed = *syn_seed;
      auto rows = run_synthetic(config, syn_out);
      for (const auto& row : rows) {
        double m = 0.0;
        for (double v : row.mean_backtrack) m += v;
        std::printf("%s-%s mean backtrack %.4f\n", row.shape.c_str(), row.scenario.c_str(),
                    m / static_cast<double>(row.mean_backtrack.size()));
      }
    } else if (*ana) {
      PipelineConfig config = ana_config.empty() ? PipelineConfig{} : read_config_file(ana_config);
      if (!ana_trees.empty()) config.analysis.trees = ana_trees;
      if (!ana_matrix.empty()) config.analysis.matrix = ana_matrix;
      if (!ana_index.empty()) config.analysis.sample_index = ana_index;
      if (!ana_clade.empty()) config.analysis.clade = split_list(ana_clade);
      run_analysis(config, ana_out);
    }
  } catch (const NumericalError& e) {
    std::cerr << "treejog: numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    std::cerr << "treejog: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "treejog: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
