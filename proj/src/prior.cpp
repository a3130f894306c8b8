#include "votepose/prior.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "votepose/error.hpp"

namespace votepose {

double PriorTable::at(Cell d) const {
  const int r = std::clamp(d.row, -radius, radius) + radius;
  const int c = std::clamp(d.col, -radius, radius) + radius;
  return values(r, c);
}

PriorTable PriorTable::reversed() const {
  PriorTable out = *this;
  std::swap(out.first, out.second);
  const int n = 2 * radius;
  for (int r = 0; r <= n; ++r) {
    for (int c = 0; c <= n; ++c) out.values(r, c) = values(n - r, n - c);
  }
  return out;
}

namespace {

Grid<double> gaussian_blur(const Grid<double>& in, double sigma) {
  if (sigma <= 0.0) return in;
  const int half = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * half + 1));
  for (int i = -half; i <= half; ++i) k[static_cast<std::size_t>(i + half)] = std::exp(-0.5 * i * i / (sigma * sigma));

  auto pass = [&](const Grid<double>& src, bool along_rows) {
    Grid<double> dst(src.rows(), src.cols());
    for (int r = 0; r < src.rows(); ++r) {
      for (int c = 0; c < src.cols(); ++c) {
        double s = 0.0;
        for (int i = -half; i <= half; ++i) {
          const int rr = along_rows ? r + i : r;
          const int cc = along_rows ? c : c + i;
          if (src.contains(rr, cc)) s += k[static_cast<std::size_t>(i + half)] * src(rr, cc);
        }
        dst(r, c) = s;
      }
    }
    return dst;
  };
  return pass(pass(in, true), false);
}

}  // namespace

PriorTable fit_prior(std::span<const KeypointSet> poses, int first, int second, const PriorOptions& options) {
  if (options.radius < 0 || options.cell_pixels < 1) throw InvalidArgument("invalid prior table geometry");
  if (!(options.floor > 0.0)) throw InvalidArgument("prior floor must be positive");
  const int n = 2 * options.radius + 1;
  if (options.floor * n * n >= 1.0) throw InvalidArgument("prior floor too large for the table size");

  PriorTable t;
  t.first = first;
  t.second = second;
  t.radius = options.radius;
  t.cell_pixels = options.cell_pixels;
  t.sigma = options.sigma;
  t.floor = options.floor;

  Grid<double> hist(n, n);
  int used = 0;
  for (const auto& pose : poses) {
    if (static_cast<std::size_t>(std::max(first, second)) >= pose.size()) continue;
    const auto& a = pose[static_cast<std::size_t>(first)];
    const auto& b = pose[static_cast<std::size_t>(second)];
    if (!a || !b) continue;
    const int dr = round_to_cell((b->y - a->y) / options.cell_pixels);
    const int dc = round_to_cell((b->x - a->x) / options.cell_pixels);
    hist(std::clamp(dr, -t.radius, t.radius) + t.radius, std::clamp(dc, -t.radius, t.radius) + t.radius) += 1.0;
    ++used;
  }
  if (used == 0) {
    throw InvalidArgument("no annotation labels both keypoints " + std::to_string(first) + " and " +
                          std::to_string(second));
  }

  t.values = gaussian_blur(hist, options.sigma);
  double total = 0.0;
  for (double v : t.values.data()) total += v;
  // Scale the smoothed mass to 1 - n^2 * floor, then add the floor: the table
  // sums to 1 and no entry drops below the floor.
  const double keep = 1.0 - options.floor * n * n;
  for (double& v : t.values.data()) v = keep * v / total + options.floor;
  return t;
}

double prior_score(const PriorTable& table, Cell x_i, Cell x_j) { return table.at(x_j - x_i); }

const PriorTable* find_prior(const PriorSet& priors, int a, int b, PriorTable& scratch) {
  if (auto it = priors.find({a, b}); it != priors.end()) return &it->second;
  if (auto it = priors.find({b, a}); it != priors.end()) {
    scratch = it->second.reversed();
    return &scratch;
  }
  return nullptr;
}

}  // namespace votepose
