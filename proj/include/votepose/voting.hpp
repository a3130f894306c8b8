#pragma once

#include <span>
#include <vector>

#include "votepose/geometry.hpp"
#include "votepose/grid.hpp"

namespace votepose {

/// Per-cell softmax distributions over log-polar classes for one keypoint.
/// Values are stored as float32, row-major, classes innermost.
struct VoterField {
  int keypoint = 0;
  int rows = 0;
  int cols = 0;
  int stride = 4;  // pixels per cell
  int num_classes = 0;
  std::vector<float> values;

  VoterField() = default;
  VoterField(int keypoint, int rows, int cols, int stride, int num_classes);

  std::span<float> at(int r, int c) {
    return {values.data() + (static_cast<std::size_t>(r) * cols + c) * num_classes,
            static_cast<std::size_t>(num_classes)};
  }
  std::span<const float> at(int r, int c) const {
    return {values.data() + (static_cast<std::size_t>(r) * cols + c) * num_classes,
            static_cast<std::size_t>(num_classes)};
  }

  /// Every cell must be a distribution: non-negative, summing to 1 within `tol`.
  void validate(double tol = 1e-6) const;
};

/// Vote mass per cell. `origin` is the absolute cell coordinate (in units of
/// `stride` pixels, relative to the image origin) of element (0, 0), so votes
/// that land outside the image keep negative or overflowing coordinates.
struct Heatmap {
  int keypoint = 0;
  Cell origin;
  int stride = 4;
  Grid<double> values;

  bool contains(Cell absolute) const {
    return values.contains(absolute.row - origin.row, absolute.col - origin.col);
  }
  /// Zero outside the extent.
  double at(Cell absolute) const {
    return contains(absolute) ? values(absolute.row - origin.row, absolute.col - origin.col) : 0.0;
  }
  double& ref(Cell absolute) { return values(absolute.row - origin.row, absolute.col - origin.col); }

  /// Absolute cell of the largest value; the first in row-major order on ties.
  Cell argmax() const;
  double total() const;
  /// Every absolute cell of the extent, row-major.
  std::vector<Cell> cells() const;
};

/// Heatmap of a single voter `y`: its class distribution spread by the kernel around y.
Heatmap single_vote(const VoterField& field, Cell y, const VoteKernel& kernel);

/// Sum of all single votes as one transposed-convolution pass.
/// Output is (rows + kernel_rows - 1) x (cols + kernel_cols - 1), unnormalized.
Heatmap aggregate(const VoterField& field, const VoteKernel& kernel);

/// Reference implementation: literal loop over voters, classes and every
/// kernel cell of the dense weight tensor.
Heatmap naive_aggregate(const VoterField& field, const VoteKernel& kernel);

/// Multiplies by an isotropic Gaussian centred on `center` (absolute cell)
/// with sigma = sigma_factor * scale (cells).
Heatmap apply_person_mask(const Heatmap& heatmap, Cell center, double scale, double sigma_factor = 1.0);

/// Sum-pools a heatmap by `factor` onto the absolute coarse extent
/// [origin, origin + (rows, cols)). Coarse cell X covers fine cells
/// [factor * X, factor * X + factor).
Heatmap pool_heatmap(const Heatmap& fine, int factor, Cell coarse_origin, int rows, int cols);

}  // namespace votepose
