#include "treejog/character_matrix.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "treejog/errors.hpp"

namespace treejog {

CharacterMatrix::CharacterMatrix(std::vector<std::string> labels,
                                 std::vector<std::string> feature_names,
                                 std::vector<Cell> cells)
    : labels_(std::move(labels)),
      feature_names_(std::move(feature_names)),
      cells_(std::move(cells)) {
  if (cells_.size() != labels_.size() * feature_names_.size()) {
    throw InputError("character matrix: expected " +
                     std::to_string(labels_.size() * feature_names_.size()) + " cells, got " +
                     std::to_string(cells_.size()));
  }
}

bool CharacterMatrix::has_missing() const {
  return std::find(cells_.begin(), cells_.end(), Cell::missing) != cells_.end();
}

std::size_t CharacterMatrix::find_row(std::string_view label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<std::string> validate(const CharacterMatrix& matrix) {
  std::vector<std::string> errors;
  if (matrix.rows() < 2) {
    errors.push_back("too few languages: " + std::to_string(matrix.rows()) + " (need at least 2)");
  }
  if (matrix.cols() < 1) errors.push_back("no features");

  std::set<std::string_view> seen;
  for (const auto& label : matrix.labels()) {
    if (!seen.insert(label).second) errors.push_back("duplicate label \"" + label + "\"");
  }
  for (Cell c : matrix.cells()) {
    if (c != Cell::absent && c != Cell::present && c != Cell::missing) {
      errors.push_back("cell value outside {0, 1, missing}");
      break;
    }
  }
  for (std::size_t j = 0; j < matrix.cols() && matrix.rows() > 0; ++j) {
    bool all_missing = true;
    for (std::size_t i = 0; i < matrix.rows(); ++i) {
      if (matrix.at(i, j) != Cell::missing) {
        all_missing = false;
        break;
      }
    }
    if (all_missing) {
      errors.push_back("all-missing column \"" + matrix.feature_names()[j] + "\"");
    }
  }
  return errors;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

CharacterMatrix read_matrix_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split_csv_line(line);
      break;
    }
  }
  if (header.empty()) throw InputError("matrix csv: empty input");
  std::vector<std::string> features;
  for (std::size_t j = 1; j < header.size(); ++j) features.push_back(trim(header[j]));

  std::vector<std::string> labels;
  std::vector<Cell> cells;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw InputError("matrix csv line " + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    labels.push_back(trim(fields[0]));
    for (std::size_t j = 1; j < fields.size(); ++j) {
      auto v = trim(fields[j]);
      if (v == "0") {
        cells.push_back(Cell::absent);
      } else if (v == "1") {
        cells.push_back(Cell::present);
      } else if (v == "?" || v == "-" || v.empty()) {
        cells.push_back(Cell::missing);
      } else {
        throw InputError("matrix csv line " + std::to_string(line_no) + ": invalid cell \"" + v +
                         "\" (expected 0, 1 or ?)");
      }
    }
  }
  return CharacterMatrix(std::move(labels), std::move(features), std::move(cells));
}

CharacterMatrix read_matrix_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open matrix file " + path);
  return read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& out, const CharacterMatrix& matrix) {
  out << "language";
  for (const auto& f : matrix.feature_names()) out << ',' << csv_escape(f);
  out << '\n';
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    out << csv_escape(matrix.labels()[i]);
    for (Cell c : matrix.row(i)) out << ',' << cell_char(c);
    out << '\n';
  }
}

}  // namespace treejog
