#include "treejog/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "treejog/errors.hpp"
#include "treejog/kde.hpp"
#include "treejog/random.hpp"

namespace treejog {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---- config parsing ------------------------------------------------------

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw InputError("config: " + path + " must be an object");
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw InputError("config: unknown key \"" + path + it.key() + "\"");
  }
}

template <class T>
void read_value(const json& j, const char* key, const std::string& path, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw InputError("config: \"" + path + key + "\" has the wrong type");
  }
}

template <class T>
void read_optional(const json& j, const char* key, const std::string& path, std::optional<T>& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (it->is_null()) {
    out.reset();
    return;
  }
  T v{};
  read_value(j, key, path, v);
  out = v;
}

void read_count(const json& j, const char* key, const std::string& path, std::size_t& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
    throw InputError("config: \"" + path + key + "\" must be a non-negative integer");
  }
  out = it->get<std::size_t>();
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string label_mode_name(LabelMode m) {
  switch (m) {
    case LabelMode::all: return "all";
    case LabelMode::none: return "none";
    default: return "leaves";
  }
}

LabelMode parse_label_mode(const std::string& s) {
  if (s == "all") return LabelMode::all;
  if (s == "leaves") return LabelMode::leaves;
  if (s == "none") return LabelMode::none;
  throw InputError("config: plot.labels must be all, leaves or none, got \"" + s + "\"");
}

// ---- output helpers --------------------------------------------------------

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Re-throws a module error with the scenario or step name in front, keeping
// the exit-code class.
template <class F>
auto with_context(const std::string& context, F&& f) {
  try {
    return f();
  } catch (const NumericalError& e) {
    throw NumericalError(context + ": " + e.what());
  } catch (const InputError& e) {
    throw InputError(context + ": " + e.what());
  }
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
  require_object(j, "the document");
  reject_unknown(j, "", {"seed", "components", "synthetic", "analysis", "plot"});
  PipelineConfig c;
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned()) throw InputError("config: \"seed\" must be a non-negative integer");
    c.seed = it->get<std::uint64_t>();
  }
  read_count(j, "components", "", c.components);
  if (c.components < 2) throw InputError("config: \"components\" must be at least 2");

  if (auto it = j.find("synthetic"); it != j.end()) {
    const json& s = *it;
    const std::string p = "synthetic.";
    require_object(s, "synthetic");
    reject_unknown(s, p, {"leaves", "depth", "shapes", "scenarios", "loss_rate", "mean_traits",
                          "birth_rate", "borrow_rate", "target_borrow_fraction", "replicates",
                          "samples", "rate_model"});
    auto& y = c.synthetic;
    read_count(s, "leaves", p, y.leaves);
    read_value(s, "depth", p, y.depth);
    read_value(s, "shapes", p, y.shapes);
    read_value(s, "scenarios", p, y.scenarios);
    read_value(s, "loss_rate", p, y.loss_rate);
    read_value(s, "mean_traits", p, y.mean_traits);
    read_optional(s, "birth_rate", p, y.birth_rate);
    read_optional(s, "borrow_rate", p, y.borrow_rate);
    read_value(s, "target_borrow_fraction", p, y.target_borrow_fraction);
    read_count(s, "replicates", p, y.replicates);
    read_count(s, "samples", p, y.samples);
    std::string model = y.rate_model == RateModel::symmetric ? "symmetric" : "asymmetric";
    read_value(s, "rate_model", p, model);
    if (model == "symmetric") {
      y.rate_model = RateModel::symmetric;
    } else if (model == "asymmetric") {
      y.rate_model = RateModel::asymmetric;
    } else {
      throw InputError("config: synthetic.rate_model must be symmetric or asymmetric");
    }
    if (y.replicates == 0) throw InputError("config: synthetic.replicates must be at least 1");
    if (y.samples == 0) throw InputError("config: synthetic.samples must be at least 1");
    if (!(y.depth > 0)) throw InputError("config: synthetic.depth must be positive");
    if (!(y.loss_rate > 0) || !(y.mean_traits > 0)) {
      throw InputError("config: synthetic.loss_rate and mean_traits must be positive");
    }
    if (!(y.target_borrow_fraction > 0)) {
      throw InputError("config: synthetic.target_borrow_fraction must be positive");
    }
    if (y.borrow_rate && !(*y.borrow_rate >= 0)) {
      throw InputError("config: synthetic.borrow_rate must be non-negative");
    }
    for (const auto& sc : y.scenarios) parse_scenario(sc);
    for (const auto& sh : y.shapes) {
      if (sh != "skewed" && sh != "balanced") {
        throw InputError("config: unknown tree shape \"" + sh + "\"");
      }
    }
  }

  if (auto it = j.find("analysis"); it != j.end()) {
    const json& a = *it;
    const std::string p = "analysis.";
    require_object(a, "analysis");
    reject_unknown(a, p, {"trees", "matrix", "state_tag", "sample_index", "missing", "clade", "kde"});
    auto& y = c.analysis;
    read_value(a, "trees", p, y.trees);
    read_optional(a, "matrix", p, y.matrix);
    read_value(a, "state_tag", p, y.state_tag);
    read_value(a, "sample_index", p, y.sample_index);
    std::string missing = y.missing == MissingPolicy::refuse ? "refuse" : "mean_impute";
    read_value(a, "missing", p, missing);
    if (missing == "refuse") {
      y.missing = MissingPolicy::refuse;
    } else if (missing == "mean_impute") {
      y.missing = MissingPolicy::mean_impute;
    } else {
      throw InputError("config: analysis.missing must be refuse or mean_impute");
    }
    read_value(a, "clade", p, y.clade);
    if (auto k = a.find("kde"); k != a.end()) {
      require_object(*k, "analysis.kde");
      reject_unknown(*k, p + "kde.", {"grid", "bandwidth"});
      read_count(*k, "grid", p + "kde.", y.kde.grid);
      read_optional(*k, "bandwidth", p + "kde.", y.kde.bandwidth);
      if (y.kde.grid == 0) throw InputError("config: analysis.kde.grid must be positive");
    }
  }

  if (auto it = j.find("plot"); it != j.end()) {
    const json& g = *it;
    const std::string p = "plot.";
    require_object(g, "plot");
    reject_unknown(g, p, {"width", "height", "labels", "invert_y", "zoom", "highlight"});
    auto& y = c.plot;
    read_value(g, "width", p, y.width);
    read_value(g, "height", p, y.height);
    std::string labels = label_mode_name(y.labels);
    read_value(g, "labels", p, labels);
    y.labels = parse_label_mode(labels);
    read_value(g, "invert_y", p, y.invert_y);
    std::optional<std::vector<double>> zoom;
    read_optional(g, "zoom", p, zoom);
    if (zoom) {
      if (zoom->size() != 4) throw InputError("config: plot.zoom must be [x0, x1, y0, y1]");
      y.zoom = Viewport{(*zoom)[0], (*zoom)[1], (*zoom)[2], (*zoom)[3]};
    }
    read_value(g, "highlight", p, y.highlight);
    PlotSpec probe;
    probe.width = y.width;
    probe.height = y.height;
    probe.viewport = y.zoom;
    probe.validate();
  }
  return c;
}

json to_json(const PipelineConfig& c) {
  const auto& s = c.synthetic;
  const auto& a = c.analysis;
  const auto& g = c.plot;
  json zoom = g.zoom ? json::array({g.zoom->x0, g.zoom->x1, g.zoom->y0, g.zoom->y1}) : json(nullptr);
  return json{
      {"seed", c.seed},
      {"components", c.components},
      {"synthetic",
       {{"leaves", s.leaves},
        {"depth", s.depth},
        {"shapes", s.shapes},
        {"scenarios", s.scenarios},
        {"loss_rate", s.loss_rate},
        {"mean_traits", s.mean_traits},
        {"birth_rate", optional_json(s.birth_rate)},
        {"borrow_rate", optional_json(s.borrow_rate)},
        {"target_borrow_fraction", s.target_borrow_fraction},
        {"replicates", s.replicates},
        {"samples", s.samples},
        {"rate_model", s.rate_model == RateModel::symmetric ? "symmetric" : "asymmetric"}}},
      {"analysis",
       {{"trees", a.trees},
        {"matrix", a.matrix ? json(*a.matrix) : json(nullptr)},
        {"state_tag", a.state_tag},
        {"sample_index", a.sample_index},
        {"missing", a.missing == MissingPolicy::refuse ? "refuse" : "mean_impute"},
        {"clade", a.clade},
        {"kde", {{"grid", a.kde.grid}, {"bandwidth", optional_json(a.kde.bandwidth)}}}}},
      {"plot",
       {{"width", g.width},
        {"height", g.height},
        {"labels", label_mode_name(g.labels)},
        {"invert_y", g.invert_y},
        {"zoom", zoom},
        {"highlight", g.highlight}}}};
}

PipelineConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

TimeTree make_shape(const std::string& shape, std::size_t leaves, double depth) {
  if (shape == "skewed") return make_skewed_tree(leaves, depth);
  if (shape == "balanced") return make_balanced_tree(leaves, depth);
  throw InputError("unknown tree shape \"" + shape + "\" (expected skewed or balanced)");
}

BorrowScenario parse_scenario(const std::string& name) {
  BorrowScenario s;
  if (name == "none") return s;
  if (name == "global") {
    s.kind = BorrowKind::global;
    return s;
  }
  const std::string prefix = "local-";
  if (name.compare(0, prefix.size(), prefix) == 0) {
    const std::string rest = name.substr(prefix.size());
    std::size_t used = 0;
    double limit = 0.0;
    try {
      limit = std::stod(rest, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == rest.size() && !rest.empty() && limit > 0 && std::isfinite(limit)) {
      s.kind = BorrowKind::local;
      s.time_limit = limit;
      return s;
    }
  }
  throw InputError("unknown scenario \"" + name + "\" (expected none, global or local-<years>)");
}

PlotSpec plot_spec(const PlotConfig& plot, const PcaModel& model) {
  PlotSpec spec;
  spec.width = plot.width;
  spec.height = plot.height;
  spec.viewport = plot.zoom;
  spec.labels = plot.labels;
  spec.highlight.insert(plot.highlight.begin(), plot.highlight.end());
  spec.invert_y = plot.invert_y;
  const auto shares = explained_variance(model);
  if (shares.size() >= 2) {
    spec.x_explained = shares[0];
    spec.y_explained = shares[1];
  }
  return spec;
}

std::uint64_t replicate_seed(std::uint64_t base, std::size_t shape, std::size_t replicate) {
  return derive_seed(base, {0x5ce11a, shape, replicate});
}

double shape_borrow_rate(const TimeTree& tree, const PipelineConfig& config, std::size_t shape) {
  const auto& s = config.synthetic;
  if (s.borrow_rate) return *s.borrow_rate;
  DolloConfig dollo;
  dollo.loss_rate = s.loss_rate;
  dollo.mean_traits = s.mean_traits;
  dollo.birth_rate = s.birth_rate;
  return calibrate_borrow_rate(tree, dollo, BorrowKind::global,
                               std::numeric_limits<double>::infinity(), s.target_borrow_fraction,
                               derive_seed(config.seed, {0xca11b, shape}));
}

ScenarioRun run_scenario(const TimeTree& tree, const PipelineConfig& config,
                         const BorrowScenario& scenario, std::uint64_t seed) {
  const auto& s = config.synthetic;
  DolloConfig dollo;
  dollo.loss_rate = s.loss_rate;
  dollo.mean_traits = s.mean_traits;
  dollo.birth_rate = s.birth_rate;
  dollo.seed = derive_seed(seed, {1});

  ScenarioRun run{simulate(tree, dollo, scenario), {}, {}, {}, {}, {}, 0.0};
  run.borrowed_fraction = effective_borrowed_fraction(run.sim.events, tree);
  run.fit = fit_rates(tree, run.sim.leaves, s.rate_model);

  AncestralSampler sampler(tree, run.fit.rates, run.sim.leaves);
  std::vector<TreeSample> draws;
  draws.reserve(s.samples);
  for (std::size_t k = 0; k < s.samples; ++k) {
    draws.push_back({std::to_string(k + 1), sampler.draw(derive_seed(seed, {2, k}))});
  }
  run.samples = make_log(std::move(draws));

  run.model = fit_pca(run.sim.leaves, config.components);
  const auto& final_tree = run.samples.samples.back().tree;
  run.projected = project_tree(final_tree, run.model);
  run.report = jogging_score(run.projected);
  run.report.patterns = count_patterns(final_tree);
  return run;
}

std::vector<SummaryRow> run_synthetic(const PipelineConfig& config, const fs::path& out) {
  const auto& s = config.synthetic;
  fs::create_directories(out);
  write_json(out / "config.resolved.json", to_json(config));

  std::vector<SummaryRow> rows;
  for (std::size_t si = 0; si < s.shapes.size(); ++si) {
    const std::string& shape = s.shapes[si];
    const TimeTree tree = with_context(shape, [&] { return make_shape(shape, s.leaves, s.depth); });
    std::optional<double> rate;
    for (const auto& name : s.scenarios) {
      const std::string context = shape + "-" + name;
      BorrowScenario scenario = parse_scenario(name);
      if (scenario.kind != BorrowKind::none) {
        if (!rate) {
          rate = with_context(context + " (borrow rate calibration)",
                              [&] { return shape_borrow_rate(tree, config, si); });
        }
        scenario.borrow_rate = *rate;
      }
      SummaryRow row{shape, name, scenario.borrow_rate.value_or(0.0), {}, {}, {}, {}};
      const fs::path dir = out / context;
      fs::create_directories(dir);
      for (std::size_t r = 0; r < s.replicates; ++r) {
        ScenarioRun run = with_context(context, [&] {
          return run_scenario(tree, config, scenario, replicate_seed(config.seed, si, r));
        });
        row.mean_backtrack.push_back(run.report.mean_backtrack);
        row.max_backtrack.push_back(run.report.max_backtrack);
        row.borrowed_fraction.push_back(run.borrowed_fraction);
        row.pattern_101.push_back(static_cast<double>((*run.report.patterns)[kPattern101]));
        if (r != 0) continue;

        std::ostringstream matrix;
        write_matrix_csv(matrix, run.sim.leaves);
        write_text(dir / "matrix.csv", matrix.str());
        write_text(dir / "truth.nex",
                   write_nexus(make_log({{"truth", run.sim.truth}}), kStateTag));
        write_text(dir / "samples.nex", write_nexus(run.samples, kStateTag));
        write_json(dir / "model.json", to_json(run.model));
        json jog = to_json(run.report);
        jog["sample"] = run.samples.samples.back().id;
        jog["rates"] = {{"alpha", run.fit.rates.alpha}, {"beta", run.fit.rates.beta}};
        jog["truth_patterns"] = patterns_to_json(count_patterns(run.sim.truth));
        write_json(dir / "jog.json", jog);
        write_text(dir / "tree.svg", render_tree(run.projected, plot_spec(config.plot, run.model)));
      }
      rows.push_back(std::move(row));
    }
  }

  std::string csv =
      "shape,scenario,replicates,borrow_rate,mean_backtrack,sd_backtrack,mean_max_backtrack,"
      "mean_borrowed_fraction,mean_pattern_101\n";
  for (const auto& row : rows) {
    csv += row.shape + "," + row.scenario + "," + std::to_string(row.mean_backtrack.size()) + "," +
           fmt(row.borrow_rate) + "," + fmt(mean_of(row.mean_backtrack)) + "," +
           fmt(sd_of(row.mean_backtrack)) + "," + fmt(mean_of(row.max_backtrack)) + "," +
           fmt(mean_of(row.borrowed_fraction)) + "," + fmt(mean_of(row.pattern_101)) + "\n";
  }
  write_text(out / "summary.csv", csv);
  return rows;
}

void run_analysis(const PipelineConfig& config, const fs::path& out) {
  const auto& a = config.analysis;
  if (a.trees.empty()) throw InputError("analysis: no tree log given");

  std::vector<NexusTreeLog> logs;
  for (const auto& path : a.trees) logs.push_back(read_nexus_file(path, a.state_tag));
  NexusTreeLog log;
  if (logs.size() == 1) {
    log = std::move(logs.front());
  } else {
    std::vector<std::size_t> order(logs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    log = merge_state_logs(logs, order);
  }
  if (log.samples.empty()) throw InputError("analysis: the log has no tree samples");

  std::vector<std::size_t> selected;
  if (a.sample_index == "all") {
    for (std::size_t i = 0; i < log.samples.size(); ++i) selected.push_back(i);
  } else {
    selected.push_back(resolve_sample_index(log, a.sample_index));
  }
  const TreeSample& primary = log.samples[selected.back()];

  // Leaf states for PCA: the sidecar matrix when given, else the leaf
  // annotations of the selected sample.
  CharacterMatrix leaves;
  const std::size_t features = primary.tree.features();
  if (a.matrix) {
    CharacterMatrix side = read_matrix_csv_file(*a.matrix);
    if (side.cols() != features) {
      throw InputError("analysis: matrix has " + std::to_string(side.cols()) +
                       " features but the log annotates " + std::to_string(features));
    }
    const auto& tree = primary.tree.tree();
    std::vector<std::string> labels;
    std::vector<Cell> cells;
    for (NodeId leaf : tree.leaves()) {
      const std::string& label = tree.node(leaf).label;
      const std::size_t r = side.find_row(label);
      if (r == side.rows()) throw InputError("analysis: matrix lacks leaf \"" + label + "\"");
      labels.push_back(label);
      auto row = side.row(r);
      cells.insert(cells.end(), row.begin(), row.end());
    }
    leaves = CharacterMatrix(labels, side.feature_names(), std::move(cells));
  } else {
    leaves = primary.tree.leaf_matrix();
    if (leaves.has_missing() && a.missing == MissingPolicy::refuse) {
      throw InputError("analysis: leaf states are missing in sample " + primary.id +
                       " and no matrix was supplied");
    }
  }

  fs::create_directories(out);
  write_json(out / "config.resolved.json", to_json(config));

  const PcaModel model = fit_pca(leaves, config.components, a.missing);
  write_json(out / "model.json", to_json(model));

  json per_sample = json::array();
  PatternCounts total{};
  std::optional<ProjectedTree> last_projected;
  for (std::size_t idx : selected) {
    const TreeSample& sample = log.samples[idx];
    const PatternCounts counts =
        with_context("sample " + sample.id, [&] { return count_patterns(sample.tree); });
    for (std::size_t i = 0; i < counts.size(); ++i) total[i] += counts[i];
    ProjectedTree projected =
        with_context("sample " + sample.id, [&] { return project_tree(sample.tree, model); });
    JogReport report = jogging_score(projected);
    report.patterns = counts;
    json j = to_json(report);
    j["sample"] = sample.id;
    per_sample.push_back(std::move(j));
    last_projected = std::move(projected);
  }
  json jog;
  if (selected.size() == 1) {
    jog = per_sample.front();
  } else {
    std::vector<double> means;
    for (const auto& j : per_sample) means.push_back(j["mean_backtrack"].get<double>());
    jog = {{"samples", per_sample},
           {"mean_backtrack", mean_of(means)},
           {"max_mean_backtrack", *std::max_element(means.begin(), means.end())}};
  }
  write_json(out / "jog.json", jog);
  write_json(out / "patterns.json", patterns_to_json(total));

  const PlotSpec spec = plot_spec(config.plot, model);
  write_text(out / "tree.svg", render_tree(*last_projected, spec));

  if (!a.clade.empty()) {
    const auto locations = clade_locations(log, a.clade, model);
    std::string csv = "sample,mrca,x,y,monophyletic\n";
    std::vector<Point2> points;
    for (const auto& loc : locations) {
      csv += csv_escape(loc.sample_id) + "," + std::to_string(loc.mrca) + "," + fmt(loc.location[0]) +
             "," + fmt(loc.location[1]) + "," + (loc.monophyletic ? "1" : "0") + "\n";
      points.push_back(loc.location);
    }
    write_text(out / "clade.csv", csv);
    std::optional<Bandwidth> h;
    if (a.kde.bandwidth) h = Bandwidth{*a.kde.bandwidth, *a.kde.bandwidth};
    const Bandwidth used = h ? *h : scott_bandwidth(points);
    const GridSpec grid = auto_grid(points, used, a.kde.grid, a.kde.grid);
    const DensityGrid density = kde_2d(points, used, grid);
    std::ostringstream dcsv;
    write_density_csv(dcsv, density);
    write_text(out / "density.csv", dcsv.str());
    PlotSpec kspec = spec;
    kspec.viewport.reset();
    write_text(out / "kde.svg", render_kde(density, points, kspec));
  }
}

}  // namespace treejog
