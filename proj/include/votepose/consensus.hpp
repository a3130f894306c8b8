#pragma once

#include <vector>

#include "votepose/geometry.hpp"
#include "votepose/voting.hpp"

namespace votepose {

/// Voter field pooled to the coarse consensus resolution, restricted to the
/// inner rings. Distributions are kept in double precision.
struct CoarseField {
  int keypoint = 0;
  int rows = 0;
  int cols = 0;
  int stride = 12;  // pixels per coarse cell
  int num_classes = 0;
  std::vector<double> values;

  const double* at(int r, int c) const {
    return values.data() + (static_cast<std::size_t>(r) * cols + c) * num_classes;
  }
  double* at(int r, int c) { return values.data() + (static_cast<std::size_t>(r) * cols + c) * num_classes; }
};

/// Sum-pools `field` by factor / field.stride cells and renormalizes each
/// coarse cell; classes beyond `kept_rings` of `grid` fold into background.
/// `factor` is measured in image pixels.
CoarseField coarse_project(const VoterField& field, int factor, int kept_rings, const LogPolarGrid& grid);

/// Coarse kernel used with coarse fields: the grid truncated to `kept_rings`
/// with radii divided by the pooling factor and rounded.
VoteKernel coarse_kernel(const LogPolarGrid& grid, int kept_rings, int pool);

/// Joint keypoint-location distribution P(K_i = a, K_j = b) over the coarse
/// heatmap extent. Entries are only stored for |b - a| <= band per axis; two
/// locations further apart can share no voter and are exactly zero.
class JointTable {
 public:
  JointTable() = default;
  JointTable(int first, int second, Cell origin, int rows, int cols, int stride, int band);

  /// Dense (rows*cols) x (rows*cols) table, row index = first location.
  static JointTable from_dense(int first, int second, Cell origin, int rows, int cols, int stride,
                               const std::vector<double>& dense);

  int first() const noexcept { return first_; }
  int second() const noexcept { return second_; }
  Cell origin() const noexcept { return origin_; }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  int stride() const noexcept { return stride_; }
  int band() const noexcept { return band_; }
  /// Raw vote total before normalization; zero when no voter supports any pair.
  double normalizer() const noexcept { return normalizer_; }
  bool empty() const noexcept { return normalizer_ == 0.0; }

  bool contains(Cell absolute) const {
    return absolute.row >= origin_.row && absolute.col >= origin_.col &&
           absolute.row < origin_.row + rows_ && absolute.col < origin_.col + cols_;
  }
  /// P(first at a, second at b); zero outside the extent or the band.
  double at(Cell a, Cell b) const;
  double sum() const;
  /// Same distribution with the roles of the two keypoints swapped.
  JointTable transposed() const;
  std::vector<Cell> cells() const;

  // Mutable access used while accumulating.
  double& raw(Cell a, Cell displacement);
  void normalize_by(double total);
  /// Records the normalizer of already normalized values, e.g. after loading.
  void set_normalizer(double total) noexcept { normalizer_ = total; }

 private:
  std::size_t index(Cell a, Cell d) const {
    const int w = 2 * band_ + 1;
    const std::size_t ai = static_cast<std::size_t>(a.row - origin_.row) * cols_ + (a.col - origin_.col);
    return (ai * w + (d.row + band_)) * w + (d.col + band_);
  }

  int first_ = 0;
  int second_ = 0;
  Cell origin_;
  int rows_ = 0;
  int cols_ = 0;
  int stride_ = 1;
  int band_ = 0;
  double normalizer_ = 0.0;
  std::vector<double> values_;
};

/// Consensus voting: entry (a, b) is sum_y P_y(K_i = a) * P_y(K_j = b),
/// normalized to 1. Each voter contributes the outer product of its two
/// local vote patches, so the cost is voters x patch^2 instead of a loop
/// over all location pairs.
JointTable joint_table(const CoarseField& field_i, const CoarseField& field_j, const VoteKernel& kernel);

/// Reference: literal loop over (a, b, y). Only for small grids.
JointTable naive_joint(const CoarseField& field_i, const CoarseField& field_j, const VoteKernel& kernel);

/// P(K_first = . | K_second = given) as a heatmap over the coarse extent.
Heatmap conditional(const JointTable& joint, Cell given);

}  // namespace votepose
