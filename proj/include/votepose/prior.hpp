#pragma once

#include <map>
#include <span>
#include <utility>

#include "votepose/grid.hpp"
#include "votepose/skeleton.hpp"

namespace votepose {

struct PriorOptions {
  int radius = 10;          // table covers displacements in [-radius, radius]^2 coarse cells
  int cell_pixels = 12;     // coarse cell size in image pixels
  double sigma = 1.0;       // Gaussian smoothing, in coarse cells
  double floor = 1e-6;      // minimum probability of any displacement
};

/// Image-independent distribution of the coarse displacement
/// (second - first) between two keypoints.
struct PriorTable {
  int first = 0;
  int second = 0;
  int radius = 0;
  int cell_pixels = 12;
  double sigma = 1.0;
  double floor = 1e-6;
  Grid<double> values;  // (2 * radius + 1)^2, row = displacement row + radius

  /// Probability of a displacement, clamped to the table border.
  double at(Cell displacement) const;
  /// Same table seen from the other keypoint.
  PriorTable reversed() const;
};

/// Histogram of annotated displacements, Gaussian-smoothed and floored so
/// every entry is at least `floor` and the table sums to 1.
PriorTable fit_prior(std::span<const KeypointSet> poses, int first, int second, const PriorOptions& options = {});

/// Table lookup at x_j - x_i.
double prior_score(const PriorTable& table, Cell x_i, Cell x_j);

using PriorSet = std::map<std::pair<int, int>, PriorTable>;

/// Looks up the (a, b) prior, reversing a stored (b, a) table when needed.
const PriorTable* find_prior(const PriorSet& priors, int a, int b, PriorTable& scratch);

}  // namespace votepose
