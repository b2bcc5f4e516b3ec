#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "treejog/character_matrix.hpp"

namespace treejog {

enum class MissingPolicy {
  refuse,       // missing cells are an error; impute with the sampler first
  mean_impute,  // missing cells take the column mean (observed cells only)
};

// Principal axes of mean-centred binary data. Each axis is oriented so
// that its largest-magnitude entry is positive (near-ties go to the lowest
// index).
struct PcaModel {
  std::vector<std::string> feature_names;
  std::vector<double> mean;               // length p
  std::vector<std::vector<double>> axes;  // k unit vectors of length p
  // Full spectrum of the centred matrix, min(n, p) values, descending.
  std::vector<double> singular_values;
  std::size_t n_fit = 0;

  std::size_t features() const { return mean.size(); }
  std::size_t components() const { return axes.size(); }
};

// Throws InputError for missing cells under MissingPolicy::refuse or for k
// outside [1, min(n, p)], and NumericalError when every row is identical.
// When the data has rank < k the remaining axes complete an orthonormal
// basis and carry a zero singular value.
PcaModel fit_pca(const CharacterMatrix& matrix, std::size_t k = 2,
                 MissingPolicy missing = MissingPolicy::refuse);

// lambda_i / sum_j lambda_j for the retained components, lambda = sigma^2 /
// (n - 1), the sum running over every non-zero singular value.
std::vector<double> explained_variance(const PcaModel& model);

// (x - mean) . axis_i for each retained component.
std::vector<double> project(const PcaModel& model, std::span<const double> state);
// Binary states; throws InputError on a missing cell.
std::vector<double> project(const PcaModel& model, std::span<const Cell> state);

nlohmann::json to_json(const PcaModel& model);
PcaModel pca_from_json(const nlohmann::json& j);
void write_pca_file(const std::string& path, const PcaModel& model);
PcaModel read_pca_file(const std::string& path);

}  // namespace treejog
