#include "votepose/voting.hpp"

#include <cmath>
#include <string>

#include "votepose/error.hpp"

namespace votepose {

VoterField::VoterField(int keypoint_, int rows_, int cols_, int stride_, int num_classes_)
    : keypoint(keypoint_), rows(rows_), cols(cols_), stride(stride_), num_classes(num_classes_) {
  if (rows < 0 || cols < 0 || num_classes < 1 || stride < 1) {
    throw InvalidArgument("invalid voter field dimensions");
  }
  values.assign(static_cast<std::size_t>(rows) * cols * num_classes, 0.0f);
}

void VoterField::validate(double tol) const {
  if (values.size() != static_cast<std::size_t>(rows) * cols * num_classes) {
    throw InvalidArgument("voter field payload size does not match its dimensions");
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      double sum = 0.0;
      for (float v : at(r, c)) {
        if (!(v >= 0.0f)) {
          throw InvalidArgument("negative or NaN vote at cell (" + std::to_string(r) + ", " +
                                std::to_string(c) + ")");
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > tol) {
        throw InvalidArgument("votes at cell (" + std::to_string(r) + ", " + std::to_string(c) +
                              ") sum to " + std::to_string(sum));
      }
    }
  }
}

Cell Heatmap::argmax() const {
  Cell best{0, 0};
  double best_v = -1.0;
  for (int r = 0; r < values.rows(); ++r) {
    for (int c = 0; c < values.cols(); ++c) {
      if (values(r, c) > best_v) {
        best_v = values(r, c);
        best = {r, c};
      }
    }
  }
  return best + origin;
}

double Heatmap::total() const {
  double s = 0.0;
  for (double v : values.data()) s += v;
  return s;
}

std::vector<Cell> Heatmap::cells() const {
  std::vector<Cell> out;
  out.reserve(values.size());
  for (int r = 0; r < values.rows(); ++r) {
    for (int c = 0; c < values.cols(); ++c) out.push_back(Cell{r, c} + origin);
  }
  return out;
}

namespace {

void check_classes(const VoterField& field, const VoteKernel& kernel) {
  if (field.num_classes != kernel.channels()) {
    throw InvalidArgument("voter field has " + std::to_string(field.num_classes) +
                          " classes but the kernel has " + std::to_string(kernel.channels()));
  }
  if (field.values.size() != static_cast<std::size_t>(field.rows) * field.cols * field.num_classes) {
    throw InvalidArgument("voter field payload size does not match its dimensions");
  }
}

Heatmap empty_heatmap(const VoterField& field, const VoteKernel& kernel) {
  Heatmap h;
  h.keypoint = field.keypoint;
  h.stride = field.stride;
  h.origin = {-kernel.half_rows(), -kernel.half_cols()};
  h.values = Grid<double>(field.rows + kernel.rows() - 1, field.cols + kernel.cols() - 1);
  return h;
}

}  // namespace

Heatmap single_vote(const VoterField& field, Cell y, const VoteKernel& kernel) {
  check_classes(field, kernel);
  if (y.row < 0 || y.col < 0 || y.row >= field.rows || y.col >= field.cols) {
    throw InvalidArgument("voter location outside the field");
  }
  Heatmap h = empty_heatmap(field, kernel);
  const auto dist = field.at(y.row, y.col);
  for (const KernelTap& tap : kernel.taps()) {
    h.ref(y + tap.offset) += static_cast<double>(dist[tap.channel]) * tap.weight;
  }
  return h;
}

Heatmap aggregate(const VoterField& field, const VoteKernel& kernel) {
  check_classes(field, kernel);
  Heatmap h = empty_heatmap(field, kernel);
  const int rows = field.rows;
  const int cols = field.cols;
  const int classes = field.num_classes;

  // Channel-planar copy in double so each tap becomes a contiguous row axpy.
  std::vector<double> planes(static_cast<std::size_t>(classes) * rows * cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const auto dist = field.at(r, c);
      for (int k = 0; k < classes; ++k) {
        planes[(static_cast<std::size_t>(k) * rows + r) * cols + c] = dist[k];
      }
    }
  }

  const int hr = kernel.half_rows();
  const int hc = kernel.half_cols();
  for (const KernelTap& tap : kernel.taps()) {
    const double w = tap.weight;
    const double* plane = planes.data() + static_cast<std::size_t>(tap.channel) * rows * cols;
    for (int r = 0; r < rows; ++r) {
      double* out = h.values.row(r + tap.offset.row + hr).data() + tap.offset.col + hc;
      const double* in = plane + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) out[c] += w * in[c];
    }
  }
  return h;
}

Heatmap naive_aggregate(const VoterField& field, const VoteKernel& kernel) {
  check_classes(field, kernel);
  Heatmap h = empty_heatmap(field, kernel);
  const int kr = kernel.rows();
  const int kc = kernel.cols();
  for (int yr = 0; yr < field.rows; ++yr) {
    for (int yc = 0; yc < field.cols; ++yc) {
      const auto dist = field.at(yr, yc);
      for (int k = 0; k < field.num_classes; ++k) {
        const double s = dist[k];
        for (int r = 0; r < kr; ++r) {
          for (int c = 0; c < kc; ++c) {
            h.values(yr + r, yc + c) += s * kernel.weight(r, c, k);
          }
        }
      }
    }
  }
  return h;
}

Heatmap apply_person_mask(const Heatmap& heatmap, Cell center, double scale, double sigma_factor) {
  if (!(scale > 0.0)) throw InvalidArgument("person scale must be positive");
  if (!(sigma_factor > 0.0)) throw InvalidArgument("mask sigma factor must be positive");
  if (!heatmap.contains(center)) throw InvalidArgument("person center outside the heatmap extent");
  const double sigma = sigma_factor * scale;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  Heatmap out = heatmap;
  for (int r = 0; r < out.values.rows(); ++r) {
    for (int c = 0; c < out.values.cols(); ++c) {
      const double dr = r + out.origin.row - center.row;
      const double dc = c + out.origin.col - center.col;
      out.values(r, c) *= std::exp(-(dr * dr + dc * dc) * inv);
    }
  }
  return out;
}

Heatmap pool_heatmap(const Heatmap& fine, int factor, Cell coarse_origin, int rows, int cols) {
  if (factor < 1) throw InvalidArgument("pooling factor must be positive");
  Heatmap out;
  out.keypoint = fine.keypoint;
  out.origin = coarse_origin;
  out.stride = fine.stride * factor;
  out.values = Grid<double>(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Cell base{(coarse_origin.row + r) * factor, (coarse_origin.col + c) * factor};
      double s = 0.0;
      for (int i = 0; i < factor; ++i) {
        for (int j = 0; j < factor; ++j) s += fine.at(base + Cell{i, j});
      }
      out.values(r, c) = s;
    }
  }
  return out;
}

}  // namespace votepose
