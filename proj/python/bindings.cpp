#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

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

namespace py = pybind11;
using namespace treejog;
using nlohmann::json;

namespace {

CharacterMatrix matrix_from_csv(const std::string& text) {
  std::istringstream in(text);
  return read_matrix_csv(in);
}

std::string matrix_to_csv(const CharacterMatrix& m) {
  std::ostringstream out;
  write_matrix_csv(out, m);
  return out.str();
}

PcaModel model_from_text(const std::string& text) { return pca_from_json(json::parse(text)); }

py::dict simulate_py(const std::string& shape, std::size_t leaves, double depth, double loss_rate,
                     double mean_traits, const std::string& borrow, double limit,
                     std::optional<double> borrow_fraction, std::optional<double> borrow_rate,
                     std::uint64_t seed) {
  TimeTree tree = make_shape(shape, leaves, depth);
  DolloConfig config;
  config.loss_rate = loss_rate;
  config.mean_traits = mean_traits;
  config.seed = seed;
  BorrowScenario scenario;
  scenario.kind = parse_borrow_kind(borrow);
  if (scenario.kind == BorrowKind::local) scenario.time_limit = limit;
  if (scenario.kind != BorrowKind::none) {
    if (borrow_rate) {
      scenario.borrow_rate = borrow_rate;
    } else {
      scenario.target_fraction = borrow_fraction.value_or(0.5);
    }
  }
  Simulation sim = simulate(tree, config, scenario);
  py::dict out;
  out["matrix_csv"] = matrix_to_csv(sim.leaves);
  out["truth_nexus"] = write_nexus(make_log({{"truth", sim.truth}}), kStateTag);
  out["root_traits"] = sim.root_traits;
  out["borrow_rate"] = sim.borrow_rate;
  out["borrowed_fraction"] = effective_borrowed_fraction(sim.events, tree);
  return out;
}

std::string ancestral_py(const std::string& tree_nexus, const std::string& matrix_csv, double alpha,
                         double beta, bool fit, std::size_t samples, std::uint64_t seed) {
  NexusTreeLog log = parse_nexus(tree_nexus, kStateTag);
  if (log.samples.empty()) throw InputError("no tree in the NEXUS text");
  const TimeTree& tree = log.samples.front().tree.tree();
  CharacterMatrix matrix = matrix_from_csv(matrix_csv);
  CtmcRates rates{alpha, beta, std::nullopt};
  if (fit) rates = fit_rates(tree, matrix).rates;
  AncestralSampler sampler(tree, rates, matrix);
  std::vector<TreeSample> draws;
  for (std::size_t k = 0; k < samples; ++k) {
    draws.push_back({std::to_string(k + 1), sampler.draw(derive_seed(seed, {2, k}))});
  }
  return write_nexus(make_log(std::move(draws)), kStateTag);
}

std::string jog_py(const std::string& nexus, const std::string& model_json,
                   const std::string& sample_index) {
  NexusTreeLog log = parse_nexus(nexus, kStateTag);
  const auto& sample = log.samples[resolve_sample_index(log, sample_index)];
  JogReport report = jogging_score(project_tree(sample.tree, model_from_text(model_json)));
  if (sample.tree.complete()) report.patterns = count_patterns(sample.tree);
  return to_json(report).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "treejog core bindings";
  m.attr("__version__") = TREEJOG_VERSION;

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("simulate", &simulate_py, py::arg("shape") = "skewed", py::arg("leaves") = 16,
        py::arg("depth") = 10000.0, py::arg("loss_rate") = 0.2, py::arg("mean_traits") = 200.0,
        py::arg("borrow") = "none", py::arg("limit") = 1000.0,
        py::arg("borrow_fraction") = py::none(), py::arg("borrow_rate") = py::none(),
        py::arg("seed") = 1);

  m.def("ancestral", &ancestral_py, py::arg("tree_nexus"), py::arg("matrix_csv"),
        py::arg("alpha") = 1.0, py::arg("beta") = 1.0, py::arg("fit_rates") = true,
        py::arg("samples") = 1, py::arg("seed") = 1);

  m.def(
      "fit_pca",
      [](const std::string& matrix_csv, std::size_t components, bool mean_impute) {
        auto policy = mean_impute ? MissingPolicy::mean_impute : MissingPolicy::refuse;
        return to_json(fit_pca(matrix_from_csv(matrix_csv), components, policy)).dump();
      },
      py::arg("matrix_csv"), py::arg("components") = 2, py::arg("mean_impute") = false);

  m.def(
      "project",
      [](const std::string& model_json, const std::vector<double>& state) {
        return project(model_from_text(model_json), state);
      },
      py::arg("model_json"), py::arg("state"));

  m.def("jog", &jog_py, py::arg("nexus"), py::arg("model_json"), py::arg("sample_index") = "last");

  m.def(
      "patterns",
      [](const std::string& nexus, const std::string& sample_index) {
        NexusTreeLog log = parse_nexus(nexus, kStateTag);
        return patterns_to_json(count_patterns(log.samples[resolve_sample_index(log, sample_index)].tree))
            .get<std::map<std::string, std::uint64_t>>();
      },
      py::arg("nexus"), py::arg("sample_index") = "last");

  m.def(
      "kde",
      [](const std::vector<std::array<double, 2>>& points, std::optional<double> bandwidth,
         std::size_t grid) {
        const Bandwidth h = bandwidth ? Bandwidth{*bandwidth, *bandwidth} : scott_bandwidth(points);
        DensityGrid d = kde_2d(points, h, auto_grid(points, h, grid, grid));
        py::dict out;
        out["x0"] = d.spec.x0;
        out["x1"] = d.spec.x1;
        out["y0"] = d.spec.y0;
        out["y1"] = d.spec.y1;
        out["nx"] = d.spec.nx;
        out["ny"] = d.spec.ny;
        out["cell_area"] = d.cell_area();
        out["density"] = d.density;
        return out;
      },
      py::arg("points"), py::arg("bandwidth") = py::none(), py::arg("grid") = 100);

  m.def(
      "render_tree",
      [](const std::string& nexus, const std::string& model_json, const std::string& sample_index,
         bool invert_y) {
        NexusTreeLog log = parse_nexus(nexus, kStateTag);
        PcaModel model = model_from_text(model_json);
        PlotConfig plot;
        plot.invert_y = invert_y;
        const auto& sample = log.samples[resolve_sample_index(log, sample_index)];
        return render_tree(project_tree(sample.tree, model), plot_spec(plot, model));
      },
      py::arg("nexus"), py::arg("model_json"), py::arg("sample_index") = "last",
      py::arg("invert_y") = false);

  m.def(
      "run_synthetic",
      [](const std::string& config_json, const std::string& out) {
        run_synthetic(config_from_json(json::parse(config_json)), out);
      },
      py::arg("config_json"), py::arg("out"));

  m.def(
      "run_analysis",
      [](const std::string& config_json, const std::string& out) {
        run_analysis(config_from_json(json::parse(config_json)), out);
      },
      py::arg("config_json"), py::arg("out"));
}
