#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdiag {

// Base for every error thrown by the library.
struct error : std::runtime_error {
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// ess-sup requested over a mask with no cells.
struct null_set_error : error {
  explicit null_set_error(const std::string& what) : error(what) {}
};

// An action fed to matrix_rep produced fibers outside J(omega).
struct not_range_operator_error : error {
  std::size_t cell;
  double residual;
  not_range_operator_error(const std::string& what, std::size_t cell_, double res)
      : error(what), cell(cell_), residual(res) {}
};

// A lower-bound requirement failed (invert, invert_decomposition).
struct not_bounded_below_error : error {
  std::size_t cell;
  double value;
  not_bounded_below_error(const std::string& what, std::size_t cell_, double val)
      : error(what), cell(cell_), value(val) {}
};

// Fibers with defective (non-diagonalizable) matrices; carries the cells.
struct defective_fiber_error : error {
  std::vector<std::size_t> cells;
  defective_fiber_error(const std::string& what, std::vector<std::size_t> cells_)
      : error(what), cells(std::move(cells_)) {}
};

// A coefficient vector whose fibers leave the space it claims to live in.
struct not_in_space_error : error {
  std::size_t cell;
  double residual;
  not_in_space_error(const std::string& what, std::size_t cell_, double res)
      : error(what), cell(cell_), residual(res) {}
};

// Per-cell generator matrix lacks full column rank where reconstruction needs it.
struct rank_deficient_error : error {
  std::size_t cell;
  rank_deficient_error(const std::string& what, std::size_t cell_)
      : error(what), cell(cell_) {}
};

// Problem / decomposition / coefficient file could not be parsed.
struct parse_error : error {
  std::size_t line;
  parse_error(const std::string& what, std::size_t line_) : error(what), line(line_) {}
};

}  // namespace sdiag
