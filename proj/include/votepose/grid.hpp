#pragma once

#include <cassert>
#include <compare>
#include <cstddef>
#include <span>
#include <vector>

namespace votepose {

/// Integer cell coordinate (row, col). Also used for cell displacements.
struct Cell {
  int row = 0;
  int col = 0;

  friend constexpr Cell operator+(Cell a, Cell b) { return {a.row + b.row, a.col + b.col}; }
  friend constexpr Cell operator-(Cell a, Cell b) { return {a.row - b.row, a.col - b.col}; }
  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
};

/// Continuous image position in pixels; x is the column axis, y the row axis.
struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
  friend constexpr bool operator==(const Point&, const Point&) = default;
};

double distance(Point a, Point b);

/// Round half away from zero, the convention used for every grid snap.
int round_to_cell(double v);

/// Dense row-major 2-D array.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    assert(rows >= 0 && cols >= 0);
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  bool contains(int r, int c) const noexcept { return r >= 0 && c >= 0 && r < rows_ && c < cols_; }

  T& operator()(int r, int c) {
    assert(contains(r, c));
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  const T& operator()(int r, int c) const {
    assert(contains(r, c));
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  std::span<T> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const T> row(int r) const {
    return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)};
  }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

}  // namespace votepose
