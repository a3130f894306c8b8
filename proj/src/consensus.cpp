#include "votepose/consensus.hpp"

#include <algorithm>
#include <string>

#include "votepose/error.hpp"

namespace votepose {

CoarseField coarse_project(const VoterField& field, int factor, int kept_rings, const LogPolarGrid& grid) {
  if (factor <= 0 || factor % field.stride != 0) {
    throw InvalidArgument("coarse factor " + std::to_string(factor) +
                          " is not a positive multiple of the field stride " + std::to_string(field.stride));
  }
  if (field.num_classes != grid.num_classes()) {
    throw InvalidArgument("voter field class count does not match the grid");
  }
  const LogPolarGrid kept = coarse_grid(grid, kept_rings);
  const int pool = factor / field.stride;

  CoarseField out;
  out.keypoint = field.keypoint;
  out.rows = (field.rows + pool - 1) / pool;
  out.cols = (field.cols + pool - 1) / pool;
  out.stride = factor;
  out.num_classes = kept.num_classes();
  out.values.assign(static_cast<std::size_t>(out.rows) * out.cols * out.num_classes, 0.0);

  for (int r = 0; r < field.rows; ++r) {
    for (int c = 0; c < field.cols; ++c) {
      double* dst = out.at(r / pool, c / pool);
      const auto src = field.at(r, c);
      for (int k = 0; k < field.num_classes; ++k) {
        const int folded = k < out.num_classes ? k : LogPolarGrid::kBackground;
        dst[folded] += src[k];
      }
    }
  }
  for (int r = 0; r < out.rows; ++r) {
    for (int c = 0; c < out.cols; ++c) {
      double* dst = out.at(r, c);
      double sum = 0.0;
      for (int k = 0; k < out.num_classes; ++k) sum += dst[k];
      if (sum > 0.0) {
        for (int k = 0; k < out.num_classes; ++k) dst[k] /= sum;
      } else {
        dst[LogPolarGrid::kBackground] = 1.0;
      }
    }
  }
  return out;
}

VoteKernel coarse_kernel(const LogPolarGrid& grid, int kept_rings, int pool) {
  const LogPolarGrid g = rescale_grid(coarse_grid(grid, kept_rings), static_cast<double>(pool));
  const int size = default_kernel_size(g);
  return build_kernel(g, size, size);
}

JointTable::JointTable(int first, int second, Cell origin, int rows, int cols, int stride, int band)
    : first_(first), second_(second), origin_(origin), rows_(rows), cols_(cols), stride_(stride), band_(band) {
  const std::size_t w = static_cast<std::size_t>(2 * band + 1);
  values_.assign(static_cast<std::size_t>(rows) * cols * w * w, 0.0);
}

JointTable JointTable::from_dense(int first, int second, Cell origin, int rows, int cols, int stride,
                                  const std::vector<double>& dense) {
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (dense.size() != n * n) throw InvalidArgument("dense joint table has the wrong size");
  JointTable t(first, second, origin, rows, cols, stride, std::max(rows, cols) - 1);
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double v = dense[a * n + b];
      if (v < 0.0) throw InvalidArgument("joint table entries must be non-negative");
      const Cell ca{static_cast<int>(a) / cols + origin.row, static_cast<int>(a) % cols + origin.col};
      const Cell cb{static_cast<int>(b) / cols + origin.row, static_cast<int>(b) % cols + origin.col};
      t.raw(ca, cb - ca) = v;
      total += v;
    }
  }
  t.normalize_by(total);
  return t;
}

double JointTable::at(Cell a, Cell b) const {
  if (!contains(a) || !contains(b)) return 0.0;
  const Cell d = b - a;
  if (d.row < -band_ || d.row > band_ || d.col < -band_ || d.col > band_) return 0.0;
  return values_[index(a, d)];
}

double& JointTable::raw(Cell a, Cell d) { return values_[index(a, d)]; }

void JointTable::normalize_by(double total) {
  normalizer_ = total;
  if (total <= 0.0) {
    normalizer_ = 0.0;
    return;
  }
  for (double& v : values_) v /= total;
}

double JointTable::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

std::vector<Cell> JointTable::cells() const {
  std::vector<Cell> out;
  out.reserve(static_cast<std::size_t>(rows_) * cols_);
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) out.push_back(Cell{r, c} + origin_);
  }
  return out;
}

JointTable JointTable::transposed() const {
  JointTable t(second_, first_, origin_, rows_, cols_, stride_, band_);
  t.normalizer_ = normalizer_;
  for (const Cell a : cells()) {
    for (int dr = -band_; dr <= band_; ++dr) {
      for (int dc = -band_; dc <= band_; ++dc) {
        const Cell b = a + Cell{dr, dc};
        if (!contains(b)) continue;
        t.raw(b, a - b) = values_[index(a, {dr, dc})];
      }
    }
  }
  return t;
}

namespace {

void check_pair(const CoarseField& a, const CoarseField& b, const VoteKernel& kernel) {
  if (a.rows != b.rows || a.cols != b.cols || a.stride != b.stride || a.num_classes != b.num_classes) {
    throw InvalidArgument("coarse fields do not share a grid");
  }
  if (a.num_classes != kernel.channels()) {
    throw InvalidArgument("coarse field class count does not match the kernel");
  }
}

// Vote patch of one voter: P_y(K = y + offset) for every kernel cell.
void vote_patch(const CoarseField& f, int r, int c, const VoteKernel& kernel, std::vector<double>& patch,
                double& mass) {
  const double* dist = f.at(r, c);
  mass = 0.0;
  for (std::size_t t = 0; t < kernel.taps().size(); ++t) {
    const KernelTap& tap = kernel.taps()[t];
    patch[t] = dist[tap.channel] * tap.weight;
    mass += patch[t];
  }
}

}  // namespace

JointTable joint_table(const CoarseField& fi, const CoarseField& fj, const VoteKernel& kernel) {
  check_pair(fi, fj, kernel);
  const int hr = kernel.half_rows();
  const int hc = kernel.half_cols();
  JointTable table(fi.keypoint, fj.keypoint, {-hr, -hc}, fi.rows + kernel.rows() - 1,
                   fi.cols + kernel.cols() - 1, fi.stride, 2 * std::max(hr, hc));

  const auto& taps = kernel.taps();
  std::vector<double> pi(taps.size());
  std::vector<double> pj(taps.size());
  double total = 0.0;
  for (int r = 0; r < fi.rows; ++r) {
    for (int c = 0; c < fi.cols; ++c) {
      double mi = 0.0;
      double mj = 0.0;
      vote_patch(fi, r, c, kernel, pi, mi);
      vote_patch(fj, r, c, kernel, pj, mj);
      if (mi == 0.0 || mj == 0.0) continue;
      // Each (a, b) pair receives exactly one term per voter, so the entry
      // value does not depend on the loop nesting; the table is exactly
      // symmetric under swapping the fields.
      total += mi * mj;
      const Cell y{r, c};
      for (std::size_t u = 0; u < taps.size(); ++u) {
        if (pi[u] == 0.0) continue;
        const Cell a = y + taps[u].offset;
        for (std::size_t v = 0; v < taps.size(); ++v) {
          if (pj[v] == 0.0) continue;
          table.raw(a, taps[v].offset - taps[u].offset) += pi[u] * pj[v];
        }
      }
    }
  }
  table.normalize_by(total);
  return table;
}

JointTable naive_joint(const CoarseField& fi, const CoarseField& fj, const VoteKernel& kernel) {
  check_pair(fi, fj, kernel);
  const int hr = kernel.half_rows();
  const int hc = kernel.half_cols();
  const int rows = fi.rows + kernel.rows() - 1;
  const int cols = fi.cols + kernel.cols() - 1;
  const Cell origin{-hr, -hc};
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  const std::size_t voters = static_cast<std::size_t>(fi.rows) * fi.cols;

  // P_y(K = x) from the dense kernel definition, for every voter and location.
  auto location_probs = [&](const CoarseField& f) {
    std::vector<double> p(voters * n, 0.0);
    for (int yr = 0; yr < f.rows; ++yr) {
      for (int yc = 0; yc < f.cols; ++yc) {
        const double* dist = f.at(yr, yc);
        const std::size_t y = static_cast<std::size_t>(yr) * f.cols + yc;
        for (std::size_t x = 0; x < n; ++x) {
          const int xr = static_cast<int>(x / cols) + origin.row;
          const int xc = static_cast<int>(x % cols) + origin.col;
          const int kr = xr - yr + hr;
          const int kc = xc - yc + hc;
          if (kr < 0 || kc < 0 || kr >= kernel.rows() || kc >= kernel.cols()) continue;
          double s = 0.0;
          for (int k = 0; k < f.num_classes; ++k) s += dist[k] * kernel.weight(kr, kc, k);
          p[y * n + x] = s;
        }
      }
    }
    return p;
  };
  const std::vector<double> pi = location_probs(fi);
  const std::vector<double> pj = location_probs(fj);

  std::vector<double> dense(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      double s = 0.0;
      for (std::size_t y = 0; y < voters; ++y) s += pi[y * n + a] * pj[y * n + b];
      dense[a * n + b] = s;
    }
  }
  return JointTable::from_dense(fi.keypoint, fj.keypoint, origin, rows, cols, fi.stride, dense);
}

Heatmap conditional(const JointTable& joint, Cell given) {
  if (!joint.contains(given)) throw UnsupportedCondition("conditioning location outside the joint extent");
  Heatmap h;
  h.keypoint = joint.first();
  h.origin = joint.origin();
  h.stride = joint.stride();
  h.values = Grid<double>(joint.rows(), joint.cols());
  double total = 0.0;
  for (int r = 0; r < joint.rows(); ++r) {
    for (int c = 0; c < joint.cols(); ++c) {
      const double v = joint.at(Cell{r, c} + joint.origin(), given);
      h.values(r, c) = v;
      total += v;
    }
  }
  if (!(total > 0.0)) {
    throw UnsupportedCondition("no votes support keypoint " + std::to_string(joint.second()) +
                               " at the conditioning location");
  }
  for (double& v : h.values.data()) v /= total;
  return h;
}

}  // namespace votepose
