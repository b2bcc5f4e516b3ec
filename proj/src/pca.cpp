#include "treejog/pca.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "treejog/errors.hpp"
#include "treejog/svd.hpp"

namespace treejog {

namespace {

// Binary data often gives exact ties in magnitude, so near-ties go to the
// lowest index; otherwise rounding noise would decide the sign.
void orient(std::vector<double>& axis) {
  double top = 0.0;
  for (double x : axis) top = std::max(top, std::abs(x));
  std::size_t arg = 0;
  while (arg + 1 < axis.size() && std::abs(axis[arg]) < top - 1e-9) ++arg;
  if (axis[arg] < 0) {
    for (double& x : axis) x = -x;
  }
}

// Unit vector orthogonal to `basis`, from the first standard basis vector
// that survives Gram-Schmidt with a usable norm.
std::vector<double> complete_basis(const std::vector<std::vector<double>>& basis, std::size_t p) {
  for (std::size_t e = 0; e < p; ++e) {
    std::vector<double> v(p, 0.0);
    v[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        double d = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
        for (std::size_t i = 0; i < p; ++i) v[i] -= d * b[i];
      }
    }
    double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm > 1e-6) {
      for (double& x : v) x /= norm;
      return v;
    }
  }
  throw NumericalError("pca: cannot complete the axis basis");
}

}  // namespace

PcaModel fit_pca(const CharacterMatrix& matrix, std::size_t k, MissingPolicy missing) {
  const std::size_t n = matrix.rows();
  const std::size_t p = matrix.cols();
  if (n < 2) throw InputError("pca needs at least two languages");
  if (p < 1) throw InputError("pca needs at least one feature");
  if (k < 1 || k > std::min(n, p)) {
    throw InputError("pca: component count " + std::to_string(k) + " outside [1, " +
                     std::to_string(std::min(n, p)) + "]");
  }
  if (missing == MissingPolicy::refuse && matrix.has_missing()) {
    throw InputError(
        "pca: matrix has missing cells; impute them with the ancestral sampler or use mean "
        "imputation");
  }

  PcaModel model;
  model.feature_names = matrix.feature_names();
  model.n_fit = n;
  model.mean.assign(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t i = 0; i < n; ++i) {
      Cell c = matrix.at(i, j);
      if (c == Cell::missing) continue;
      sum += c == Cell::present ? 1.0 : 0.0;
      ++seen;
    }
    if (seen == 0) throw InputError("pca: feature " + matrix.feature_names()[j] + " is entirely missing");
    model.mean[j] = sum / static_cast<double>(seen);
  }

  std::vector<double> centred(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      Cell c = matrix.at(i, j);
      centred[i * p + j] = c == Cell::missing ? 0.0 : (c == Cell::present ? 1.0 : 0.0) - model.mean[j];
    }
  }

  auto svd = jacobi_svd(centred, n, p);
  if (svd.right.empty()) {
    throw NumericalError("pca: all rows are identical, so there is no variance to decompose");
  }
  model.singular_values = std::move(svd.singular_values);
  for (std::size_t c = 0; c < k; ++c) {
    if (c < svd.right.size()) {
      model.axes.push_back(std::move(svd.right[c]));
    } else {
      model.axes.push_back(complete_basis(model.axes, p));
    }
    orient(model.axes.back());
  }
  return model;
}

std::vector<double> explained_variance(const PcaModel& model) {
  const double denom = model.n_fit > 1 ? static_cast<double>(model.n_fit - 1) : 1.0;
  double total = 0.0;
  for (double s : model.singular_values) total += s * s / denom;
  std::vector<double> shares;
  for (std::size_t c = 0; c < model.components(); ++c) {
    const double s = c < model.singular_values.size() ? model.singular_values[c] : 0.0;
    shares.push_back(total > 0 ? s * s / denom / total : 0.0);
  }
  return shares;
}

std::vector<double> project(const PcaModel& model, std::span<const double> state) {
  if (state.size() != model.features()) {
    throw InputError("projection: state length " + std::to_string(state.size()) +
                     " does not match the model's " + std::to_string(model.features()) +
                     " features");
  }
  std::vector<double> scores;
  scores.reserve(model.components());
  for (const auto& axis : model.axes) {
    double s = 0.0;
    for (std::size_t j = 0; j < state.size(); ++j) s += (state[j] - model.mean[j]) * axis[j];
    scores.push_back(s);
  }
  return scores;
}

std::vector<double> project(const PcaModel& model, std::span<const Cell> state) {
  std::vector<double> x(state.size());
  for (std::size_t j = 0; j < state.size(); ++j) {
    if (state[j] == Cell::missing) throw InputError("projection: state has a missing cell");
    x[j] = state[j] == Cell::present ? 1.0 : 0.0;
  }
  return project(model, std::span<const double>(x));
}

nlohmann::json to_json(const PcaModel& model) {
  return nlohmann::json{{"features", model.feature_names},
                        {"mean", model.mean},
                        {"axes", model.axes},
                        {"singular_values", model.singular_values},
                        {"n_fit", model.n_fit},
                        {"explained", explained_variance(model)}};
}

PcaModel pca_from_json(const nlohmann::json& j) {
  PcaModel m;
  try {
    m.mean = j.at("mean").get<std::vector<double>>();
    m.axes = j.at("axes").get<std::vector<std::vector<double>>>();
    m.singular_values = j.at("singular_values").get<std::vector<double>>();
    m.n_fit = j.at("n_fit").get<std::size_t>();
    if (j.contains("features")) m.feature_names = j.at("features").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("pca model json: ") + e.what());
  }
  if (m.axes.empty()) throw InputError("pca model json: no axes");
  for (const auto& a : m.axes) {
    if (a.size() != m.mean.size()) throw InputError("pca model json: axis length differs from mean");
  }
  if (!m.feature_names.empty() && m.feature_names.size() != m.mean.size()) {
    throw InputError("pca model json: feature name count differs from mean");
  }
  return m;
}

void write_pca_file(const std::string& path, const PcaModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << to_json(model).dump(1) << '\n';
}

PcaModel read_pca_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("model file " + path + ": " + e.what());
  }
  return pca_from_json(j);
}

}  // namespace treejog
