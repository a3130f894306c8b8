#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "votepose/consensus.hpp"
#include "votepose/geometry.hpp"
#include "votepose/mrf.hpp"
#include "votepose/voting.hpp"

namespace support {

using namespace votepose;

inline int rand_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double rand_real(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Independent classification of a displacement: squared-radius thresholds and
// half-plane tests against the sector edge directions. Needs angular_bins >= 3
// so every sector spans less than half a turn.
inline int oracle_bin(Cell d, const LogPolarGrid& g) {
  const long double r2 = static_cast<long double>(d.row) * d.row + static_cast<long double>(d.col) * d.col;
  const auto& b = g.ring_boundaries;
  if (r2 < static_cast<long double>(b[0]) * b[0]) return 1;
  int ring = -1;
  for (int i = 0; i < g.num_rings; ++i) {
    const long double lo = static_cast<long double>(b[static_cast<std::size_t>(i)]);
    const long double hi = static_cast<long double>(b[static_cast<std::size_t>(i) + 1]);
    if (r2 >= lo * lo && r2 < hi * hi) ring = i;
  }
  if (ring < 0) return 0;
  const long double x = d.col;
  const long double y = -d.row;  // screen up is positive
  auto edge = [&](int s) {
    const long double a = static_cast<long double>(g.angular_offset) + s * 2.0L * std::numbers::pi_v<long double> / g.angular_bins;
    long double ex = std::cos(a);
    long double ey = std::sin(a);
    if (std::fabs(ex) < 1e-12L) ex = 0.0L;
    if (std::fabs(ey) < 1e-12L) ey = 0.0L;
    return ex * y - ey * x;  // >= 0 when d is on or counter-clockwise of the edge
  };
  for (int s = 0; s < g.angular_bins; ++s) {
    if (edge(s) >= 0.0L && edge(s + 1) < 0.0L) return 2 + ring * g.angular_bins + s;
  }
  return -1;
}

inline LogPolarGrid random_grid(std::mt19937_64& rng, int max_rings, int min_bins = 3, int max_bins = 12) {
  LogPolarGrid g;
  g.num_rings = rand_int(rng, 1, max_rings);
  g.angular_bins = rand_int(rng, min_bins, max_bins);
  g.angular_offset = rand_real(rng, 0.0, 2.0 * std::numbers::pi);
  g.ring_boundaries = {rand_real(rng, 1.0, 2.0)};
  for (int r = 0; r < g.num_rings; ++r) g.ring_boundaries.push_back(g.ring_boundaries.back() + rand_real(rng, 0.5, 2.5));
  return g;
}

inline std::vector<double> random_distribution(std::mt19937_64& rng, int n, double sparsity = 0.3) {
  std::vector<double> v(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (double& x : v) sum += (x = rand_real(rng) < sparsity ? 0.0 : rand_real(rng));
  if (sum == 0.0) v[0] = sum = 1.0;
  for (double& x : v) x /= sum;
  return v;
}

inline VoterField random_field(std::mt19937_64& rng, int rows, int cols, int classes, int keypoint = 0) {
  VoterField f(keypoint, rows, cols, 4, classes);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto d = random_distribution(rng, classes);
      for (int k = 0; k < classes; ++k) f.at(r, c)[static_cast<std::size_t>(k)] = static_cast<float>(d[static_cast<std::size_t>(k)]);
    }
  }
  return f;
}

inline CoarseField random_coarse(std::mt19937_64& rng, int rows, int cols, int classes, int keypoint) {
  CoarseField f;
  f.keypoint = keypoint;
  f.rows = rows;
  f.cols = cols;
  f.num_classes = classes;
  for (int i = 0; i < rows * cols; ++i) {
    for (double v : random_distribution(rng, classes)) f.values.push_back(v);
  }
  return f;
}

// Displacements of each class within `radius`, enumerated with oracle_bin.
inline std::vector<std::vector<Cell>> oracle_bins(const LogPolarGrid& g, int radius) {
  std::vector<std::vector<Cell>> bins(static_cast<std::size_t>(g.num_classes()));
  for (int r = -radius; r <= radius; ++r) {
    for (int c = -radius; c <= radius; ++c) bins[static_cast<std::size_t>(oracle_bin({r, c}, g))].push_back({r, c});
  }
  return bins;
}

// Class and bin size of every displacement within `half`, from oracle_bin.
struct BinTable {
  int half = 0;
  Grid<int> cls;
  std::vector<double> size;

  BinTable(const LogPolarGrid& g, int h) : half(h), cls(2 * h + 1, 2 * h + 1), size(static_cast<std::size_t>(g.num_classes()), 0.0) {
    for (int r = -h; r <= h; ++r) {
      for (int c = -h; c <= h; ++c) {
        const int k = oracle_bin({r, c}, g);
        cls(r + h, c + h) = k;
        size[static_cast<std::size_t>(k)] += 1.0;
      }
    }
  }

  // P_y(K = y + d): the class probability spread uniformly over its bin.
  template <class Dist>
  double vote(const Dist& dist, Cell d) const {
    if (std::abs(d.row) > half || std::abs(d.col) > half) return 0.0;
    const int k = cls(d.row + half, d.col + half);
    return k == 0 ? 0.0 : static_cast<double>(dist[static_cast<std::size_t>(k)]) / size[static_cast<std::size_t>(k)];
  }
};

// Heatmap over the same extent as aggregate(), accumulated voter by voter.
inline Grid<double> oracle_aggregate(const VoterField& f, const LogPolarGrid& g, int half) {
  const BinTable bins(g, half);
  Grid<double> out(f.rows + 2 * half, f.cols + 2 * half);
  for (int yr = 0; yr < f.rows; ++yr) {
    for (int yc = 0; yc < f.cols; ++yc) {
      const auto dist = f.at(yr, yc);
      for (int r = -half; r <= half; ++r) {
        for (int c = -half; c <= half; ++c) out(yr + r + half, yc + c + half) += bins.vote(dist, {r, c});
      }
    }
  }
  return out;
}

// Literal sum over all location pairs and voters, normalized; dense row-major
// over the padded extent.
inline std::vector<double> oracle_joint(const CoarseField& a, const CoarseField& b, const LogPolarGrid& g, int half) {
  const BinTable bins(g, half);
  const int rows = a.rows + 2 * half;
  const int cols = a.cols + 2 * half;
  const int n = rows * cols;
  std::vector<double> dense(static_cast<std::size_t>(n) * n, 0.0);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const Cell x{i / cols - half, i % cols - half};
    for (int j = 0; j < n; ++j) {
      const Cell z{j / cols - half, j % cols - half};
      double s = 0.0;
      for (int yr = 0; yr < a.rows; ++yr) {
        for (int yc = 0; yc < a.cols; ++yc) {
          const Cell y{yr, yc};
          s += bins.vote(a.at(yr, yc), x - y) * bins.vote(b.at(yr, yc), z - y);
        }
      }
      dense[static_cast<std::size_t>(i) * n + j] = s;
      total += s;
    }
  }
  if (total > 0.0) {
    for (double& v : dense) v /= total;
  }
  return dense;
}

inline double oracle_energy(const EnergyModel& m, const std::vector<int>& labels) {
  double e = 0.0;
  for (std::size_t v = 0; v < m.nodes.size(); ++v) e += m.nodes[v].unary[static_cast<std::size_t>(labels[v])];
  for (const auto& edge : m.edges) {
    e += edge.cost(labels[static_cast<std::size_t>(edge.a)], labels[static_cast<std::size_t>(edge.b)]);
  }
  return e;
}

// Exhaustive minimum by recursive enumeration.
inline double oracle_min_energy(const EnergyModel& m) {
  std::vector<int> labels(m.nodes.size(), 0);
  double best = std::numeric_limits<double>::infinity();
  auto rec = [&](auto&& self, std::size_t v) -> void {
    if (v == m.nodes.size()) {
      best = std::min(best, oracle_energy(m, labels));
      return;
    }
    for (int l = 0; l < m.nodes[v].num_labels(); ++l) {
      labels[v] = l;
      self(self, v + 1);
    }
  };
  rec(rec, 0);
  return best;
}

inline EnergyModel random_tree(std::mt19937_64& rng, int max_nodes, int max_labels, bool integer_costs = false) {
  EnergyModel m;
  auto cost = [&] { return integer_costs ? static_cast<double>(rand_int(rng, 0, 20)) : rand_real(rng, 0.0, 10.0); };
  const int n = rand_int(rng, 1, max_nodes);
  for (int v = 0; v < n; ++v) {
    std::vector<double> u(static_cast<std::size_t>(rand_int(rng, 1, max_labels)));
    for (double& x : u) x = cost();
    m.add_node(std::move(u));
  }
  for (int v = 1; v < n; ++v) {
    const int p = rand_int(rng, 0, v - 1);
    const bool flip = rand_int(rng, 0, 1) == 1;
    const int a = flip ? v : p;
    const int b = flip ? p : v;
    Grid<double> t(m.nodes[static_cast<std::size_t>(a)].num_labels(), m.nodes[static_cast<std::size_t>(b)].num_labels());
    for (double& x : t.data()) x = cost();
    m.add_edge(a, b, std::move(t));
  }
  return m;
}

}  // namespace support
