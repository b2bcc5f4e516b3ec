#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace treejog {

// One binary character value. Missing is a state of its own, never a
// sentinel number.
enum class Cell : std::uint8_t { absent = 0, present = 1, missing = 2 };

inline char cell_char(Cell c) {
  switch (c) {
    case Cell::absent: return '0';
    case Cell::present: return '1';
    default: return '?';
  }
}

// Languages x binary features, row-major.
class CharacterMatrix {
 public:
  CharacterMatrix() = default;
  // Throws InputError when the cell count does not equal rows * features.
  CharacterMatrix(std::vector<std::string> labels, std::vector<std::string> feature_names,
                  std::vector<Cell> cells);

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return feature_names_.size(); }

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<Cell>& cells() const { return cells_; }

  Cell at(std::size_t row, std::size_t col) const { return cells_[row * cols() + col]; }
  std::span<const Cell> row(std::size_t r) const {
    return {cells_.data() + r * cols(), cols()};
  }
  bool has_missing() const;
  // Row index for a label, or rows() if absent.
  std::size_t find_row(std::string_view label) const;

  friend bool operator==(const CharacterMatrix&, const CharacterMatrix&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> feature_names_;
  std::vector<Cell> cells_;
};

// Every invariant violation of the matrix; empty when valid. Never throws.
std::vector<std::string> validate(const CharacterMatrix& matrix);

// CSV: header row of feature names (the first header cell names the label
// column), then one row per language with cells 0, 1 or ?.
CharacterMatrix read_matrix_csv(std::istream& in);
CharacterMatrix read_matrix_csv_file(const std::string& path);
void write_matrix_csv(std::ostream& out, const CharacterMatrix& matrix);

// Splits one CSV record honouring double quotes.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

}  // namespace treejog
