#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "treejog/ctmc.hpp"
#include "treejog/dollo.hpp"
#include "treejog/jog.hpp"
#include "treejog/nexus.hpp"
#include "treejog/pca.hpp"
#include "treejog/svg.hpp"

namespace treejog {

// Name of the per-node state annotation in every log the pipeline writes.
inline constexpr const char* kStateTag = "states";

struct SyntheticConfig {
  std::size_t leaves = 16;
  double depth = 10000.0;  // root age in years
  std::vector<std::string> shapes{"skewed", "balanced"};
  std::vector<std::string> scenarios{"none", "global", "local-1000", "local-3000"};
  double loss_rate = 0.2;
  double mean_traits = 200.0;
  std::optional<double> birth_rate;
  // The raw borrow rate. When unset it is calibrated per tree shape under
  // global borrowing to hit target_borrow_fraction, and the same rate is
  // then used by every borrowing scenario on that shape.
  std::optional<double> borrow_rate;
  double target_borrow_fraction = 0.5;
  std::size_t replicates = 5;
  std::size_t samples = 10;  // FFBS draws per replicate
  RateModel rate_model = RateModel::symmetric;
};

struct KdeConfig {
  std::size_t grid = 100;
  std::optional<double> bandwidth;  // same on both axes; Scott's rule if unset
};

struct AnalysisConfig {
  std::vector<std::string> trees;  // merged in this order when more than one
  std::optional<std::string> matrix;
  std::string state_tag = kStateTag;
  std::string sample_index = "last";  // "last", "first", an index, or "all"
  MissingPolicy missing = MissingPolicy::refuse;
  std::vector<std::string> clade;
  KdeConfig kde;
};

struct PlotConfig {
  int width = 640;
  int height = 520;
  LabelMode labels = LabelMode::leaves;
  bool invert_y = false;
  std::optional<Viewport> zoom;
  std::vector<std::string> highlight;
};

struct PipelineConfig {
  std::uint64_t seed = 1;
  std::size_t components = 2;
  SyntheticConfig synthetic;
  AnalysisConfig analysis;
  PlotConfig plot;
};

// Unknown keys and ill-typed values are InputErrors naming the key path.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig read_config_file(const std::string& path);

TimeTree make_shape(const std::string& shape, std::size_t leaves, double depth);
// "none", "global", or "local-<years>"; the rate is filled in later.
BorrowScenario parse_scenario(const std::string& name);

PlotSpec plot_spec(const PlotConfig& plot, const PcaModel& model);

// One replicate of simulate -> fit rates -> FFBS -> PCA on leaves ->
// project the final sample -> jog.
struct ScenarioRun {
  Simulation sim;
  RateFit fit;
  NexusTreeLog samples;
  PcaModel model;
  ProjectedTree projected;
  JogReport report;  // final sample, with pattern counts
  double borrowed_fraction = 0.0;
};

ScenarioRun run_scenario(const TimeTree& tree, const PipelineConfig& config,
                         const BorrowScenario& scenario, std::uint64_t seed);

// Replicate r of every scenario on shape s shares this seed.
std::uint64_t replicate_seed(std::uint64_t base, std::size_t shape, std::size_t replicate);

// Borrow rate used by the borrowing scenarios of one shape.
double shape_borrow_rate(const TimeTree& tree, const PipelineConfig& config, std::size_t shape);

struct SummaryRow {
  std::string shape;
  std::string scenario;
  double borrow_rate = 0.0;
  std::vector<double> mean_backtrack;  // one per replicate
  std::vector<double> max_backtrack;
  std::vector<double> borrowed_fraction;
  std::vector<double> pattern_101;  // sampled states
};

// Writes <out>/<shape>-<scenario>/{matrix.csv, truth.nex, samples.nex,
// model.json, jog.json, tree.svg} for replicate 0, plus <out>/summary.csv
// and <out>/config.resolved.json.
std::vector<SummaryRow> run_synthetic(const PipelineConfig& config,
                                      const std::filesystem::path& out);

// Writes config.resolved.json, model.json, jog.json, patterns.json and
// tree.svg, plus clade.csv, density.csv and kde.svg when a clade is set.
void run_analysis(const PipelineConfig& config, const std::filesystem::path& out);

}  // namespace treejog
