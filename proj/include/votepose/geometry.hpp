#pragma once

#include <vector>

#include "votepose/grid.hpp"

namespace votepose {

/// Log-polar partition of cell displacements around a voter.
///
/// Class layout: 0 is background, 1 is the center disc, and ring `r`
/// (0-based, innermost first) sector `s` is `2 + r * angular_bins + s`.
/// Truncating rings therefore keeps a prefix of the class indices.
///
/// Sectors are measured counter-clockwise from east as seen on screen
/// (rows grow downward), starting at `angular_offset`. A displacement on a
/// ring boundary belongs to the outer ring; one on a sector boundary belongs
/// to the counter-clockwise sector.
struct LogPolarGrid {
  static constexpr int kBackground = 0;
  static constexpr int kCenter = 1;

  int num_rings = 4;
  int angular_bins = 12;
  /// Radii in output-grid cells; element 0 is the center disc radius.
  std::vector<double> ring_boundaries{2.0, 5.0, 11.0, 21.0, 32.0};
  double angular_offset = 0.0;

  int num_classes() const noexcept { return 2 + num_rings * angular_bins; }
  double outer_radius() const { return ring_boundaries.back(); }
  int ring_class(int ring, int sector) const noexcept { return 2 + ring * angular_bins + sector; }

  /// Ring index of a ring class, -1 for center and background.
  int ring_of(int cls) const noexcept { return cls < 2 ? -1 : (cls - 2) / angular_bins; }
  int sector_of(int cls) const noexcept { return cls < 2 ? -1 : (cls - 2) % angular_bins; }

  /// Throws InvalidArgument when the invariants do not hold.
  void validate() const;

  friend bool operator==(const LogPolarGrid&, const LogPolarGrid&) = default;
};

/// Class of a displacement (target minus voter). Total.
int bin_of(Cell displacement, const LogPolarGrid& grid);

/// Keeps the innermost `keep_rings` rings; everything further out is background.
LogPolarGrid coarse_grid(const LogPolarGrid& grid, int keep_rings);

/// Divides the ring radii by `divisor` and rounds each to the nearest cell
/// (half away from zero). Throws if the rounded radii collapse.
LogPolarGrid rescale_grid(const LogPolarGrid& grid, double divisor);

/// One populated kernel cell: every cell inside the outer radius belongs to
/// exactly one channel, with weight 1/|bin|.
struct KernelTap {
  Cell offset;  // relative to the kernel center
  int channel = 0;
  double weight = 0.0;
};

/// Fixed vote-spreading kernel mapping each class back to its image cells.
class VoteKernel {
 public:
  VoteKernel() = default;
  VoteKernel(const LogPolarGrid& grid, int rows, int cols);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int channels() const noexcept { return channels_; }
  int half_rows() const noexcept { return rows_ / 2; }
  int half_cols() const noexcept { return cols_ / 2; }

  /// Dense weight; (r, c) index the kernel array, center at (rows/2, cols/2).
  double weight(int r, int c, int channel) const {
    return dense_[(static_cast<std::size_t>(r) * cols_ + c) * channels_ + channel];
  }
  /// Channel owning kernel cell (r, c); background outside the outer ring.
  int channel_at(int r, int c) const { return cell_channel_(r, c); }
  int bin_size(int channel) const { return bin_sizes_[channel]; }

  const std::vector<KernelTap>& taps() const noexcept { return taps_; }
  /// Full rows x cols x channels weight tensor, row-major.
  const std::vector<double>& dense() const noexcept { return dense_; }
  const LogPolarGrid& grid() const noexcept { return grid_; }

 private:
  LogPolarGrid grid_;
  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 0;
  Grid<int> cell_channel_;
  std::vector<int> bin_sizes_;
  std::vector<KernelTap> taps_;
  std::vector<double> dense_;
};

/// Validates the dimensions (odd, large enough for the outer ring) and builds
/// the kernel.
VoteKernel build_kernel(const LogPolarGrid& grid, int rows, int cols);

/// Smallest odd square kernel whose half-width equals the rounded-up outer radius.
int default_kernel_size(const LogPolarGrid& grid);

}  // namespace votepose
