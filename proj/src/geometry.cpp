#include "votepose/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "votepose/error.hpp"

namespace votepose {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

int round_to_cell(double v) { return static_cast<int>(std::round(v)); }

void LogPolarGrid::validate() const {
  if (num_rings < 1) throw InvalidArgument("log-polar grid needs at least one ring");
  if (angular_bins < 1) throw InvalidArgument("log-polar grid needs at least one angular bin");
  if (static_cast<int>(ring_boundaries.size()) != num_rings + 1) {
    throw InvalidArgument("expected " + std::to_string(num_rings + 1) + " ring boundaries, got " +
                          std::to_string(ring_boundaries.size()));
  }
  if (!(ring_boundaries.front() > 0.0)) throw InvalidArgument("center disc radius must be positive");
  for (std::size_t i = 1; i < ring_boundaries.size(); ++i) {
    if (!(ring_boundaries[i] > ring_boundaries[i - 1])) {
      throw InvalidArgument("ring boundaries must be strictly increasing");
    }
  }
  if (!std::isfinite(angular_offset)) throw InvalidArgument("angular offset must be finite");
}

int bin_of(Cell d, const LogPolarGrid& grid) {
  const double dr = d.row;
  const double dc = d.col;
  const double r2 = dr * dr + dc * dc;
  const auto& b = grid.ring_boundaries;
  if (r2 < b.front() * b.front()) return LogPolarGrid::kCenter;
  if (r2 >= b.back() * b.back()) return LogPolarGrid::kBackground;

  int ring = 0;
  while (r2 >= b[ring + 1] * b[ring + 1]) ++ring;

  constexpr double two_pi = 2.0 * std::numbers::pi;
  double theta = std::atan2(-dr, dc) - grid.angular_offset;
  theta = std::fmod(theta, two_pi);
  if (theta < 0.0) theta += two_pi;
  // The nudge pushes angles that sit on a sector edge (up to rounding) into
  // the counter-clockwise sector.
  int sector = static_cast<int>(std::floor(theta * grid.angular_bins / two_pi + 1e-9));
  sector %= grid.angular_bins;
  return grid.ring_class(ring, sector);
}

LogPolarGrid coarse_grid(const LogPolarGrid& grid, int keep_rings) {
  grid.validate();
  if (keep_rings < 1) throw InvalidArgument("keep_rings must be at least 1");
  if (keep_rings > grid.num_rings) {
    throw InvalidArgument("keep_rings exceeds the number of rings in the grid");
  }
  LogPolarGrid out = grid;
  out.num_rings = keep_rings;
  out.ring_boundaries.resize(static_cast<std::size_t>(keep_rings) + 1);
  return out;
}

LogPolarGrid rescale_grid(const LogPolarGrid& grid, double divisor) {
  if (!(divisor > 0.0)) throw InvalidArgument("grid rescale divisor must be positive");
  LogPolarGrid out = grid;
  for (double& r : out.ring_boundaries) r = std::round(r / divisor);
  try {
    out.validate();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(std::string("rescaled ring radii are degenerate: ") + e.what());
  }
  return out;
}

VoteKernel::VoteKernel(const LogPolarGrid& grid, int rows, int cols)
    : grid_(grid), rows_(rows), cols_(cols), channels_(grid.num_classes()), cell_channel_(rows, cols) {
  const int hr = rows / 2;
  const int hc = cols / 2;
  bin_sizes_.assign(static_cast<std::size_t>(channels_), 0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int ch = bin_of({r - hr, c - hc}, grid);
      cell_channel_(r, c) = ch;
      ++bin_sizes_[ch];
    }
  }
  dense_.assign(static_cast<std::size_t>(rows) * cols * channels_, 0.0);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int ch = cell_channel_(r, c);
      if (ch == LogPolarGrid::kBackground) continue;
      const double w = 1.0 / bin_sizes_[ch];
      dense_[(static_cast<std::size_t>(r) * cols + c) * channels_ + ch] = w;
      taps_.push_back({{r - hr, c - hc}, ch, w});
    }
  }
  // Cells outside the outer ring are not part of any bin.
  bin_sizes_[LogPolarGrid::kBackground] = 0;
}

VoteKernel build_kernel(const LogPolarGrid& grid, int rows, int cols) {
  grid.validate();
  if (rows <= 0 || cols <= 0 || rows % 2 == 0 || cols % 2 == 0) {
    throw InvalidArgument("kernel dimensions must be positive and odd");
  }
  if ((rows - 1) / 2 < grid.outer_radius() || (cols - 1) / 2 < grid.outer_radius()) {
    throw InvalidArgument("kernel too small to contain the outer ring");
  }
  return VoteKernel(grid, rows, cols);
}

int default_kernel_size(const LogPolarGrid& grid) {
  return 2 * static_cast<int>(std::ceil(grid.outer_radius())) + 1;
}

}  // namespace votepose
