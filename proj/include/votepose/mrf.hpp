#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "votepose/consensus.hpp"
#include "votepose/grid.hpp"
#include "votepose/prior.hpp"
#include "votepose/voting.hpp"

namespace votepose {

/// Default floor applied before every logarithm.
inline constexpr double kLogFloor = 1e-8;

struct EnergyNode {
  int keypoint = -1;
  std::vector<Cell> cells;     // coarse cell of each label; may be empty for abstract models
  std::vector<double> unary;   // cost of each label
  int num_labels() const noexcept { return static_cast<int>(unary.size()); }
};

struct EnergyEdge {
  int a = 0;
  int b = 0;
  Grid<double> cost;  // rows index labels of node a, cols labels of node b
};

/// Pairwise energy: sum of unary costs plus sum of edge costs.
struct EnergyModel {
  std::vector<EnergyNode> nodes;
  std::vector<EnergyEdge> edges;
  double lambda = 0.5;
  double epsilon = kLogFloor;

  int add_node(std::vector<double> unary, std::vector<Cell> cells = {}, int keypoint = -1);
  void add_edge(int a, int b, Grid<double> cost);

  /// Throws InvalidArgument on mismatched table sizes or non-finite costs.
  void validate() const;
  double energy(std::span<const int> labels) const;
};

struct Labeling {
  std::vector<int> labels;
  double energy = 0.0;
  double lower_bound = 0.0;
  bool converged = true;
  int iterations = 0;
  std::vector<double> bound_history;  // lower bound after each backward pass
};

struct TrwsOptions {
  int max_iters = 100;
  double tol = 1e-6;
};

/// -log of the heatmap restricted to `labels`, normalized over them and
/// floored at `epsilon`. Throws NoEvidence when the restriction is all zero.
std::vector<double> build_unary(const Heatmap& heatmap, std::span<const Cell> labels, double epsilon = kLogFloor);

/// Binary cost between two keypoints: lambda * -log(joint) + (1 - lambda) * -log(prior).
/// `joint` is indexed (a, b) unless `joint_transposed`, in which case it is
/// stored as (b, a). A missing prior contributes nothing.
struct PairCost {
  const JointTable* joint = nullptr;
  bool joint_transposed = false;
  const PriorTable* prior = nullptr;
  double lambda = 0.5;
  double epsilon = kLogFloor;

  double operator()(Cell a, Cell b) const;
};

/// Materializes a PairCost over two label sets.
Grid<double> build_binary(const JointTable& joint, const PriorTable* prior, double lambda,
                          std::span<const Cell> labels_a, std::span<const Cell> labels_b,
                          double epsilon = kLogFloor);

using CellCostFn = std::function<double(Cell)>;
using PairCostFn = std::function<double(Cell, Cell)>;

/// Eliminates a synthetic variable l placed at `place(x_i, x_j)`:
/// folded(x_i, x_j) = unary_l(l) + link_i(x_i, l) + link_j(l, x_j).
/// Either link may be empty.
Grid<double> fold_synthetic(std::span<const Cell> labels_i, std::span<const Cell> labels_j,
                            const std::function<Cell(Cell, Cell)>& place, const CellCostFn& unary_l,
                            const PairCostFn& link_i, const PairCostFn& link_j);

/// Mid-point folding on a dense rows x cols grid. Labels are the grid cells in
/// row-major order; `unary_mid` is rows x cols, the pair tables are
/// (rows*cols) x (rows*cols). The midpoint is rounded half away from zero.
Grid<double> fold_midpoint(const Grid<double>& unary_mid, const Grid<double>& pair_i_mid,
                           const Grid<double>& pair_mid_j);

/// Sequential tree-reweighted message passing with a monotone lower bound.
/// Nodes are processed in index order. Returns the best labeling decoded
/// across iterations; `converged` is false when max_iters was reached.
Labeling trws_solve(const EnergyModel& model, const TrwsOptions& options = {});

/// Exhaustive minimum. Throws InvalidArgument above 10^7 labelings.
Labeling brute_force_map(const EnergyModel& model);

/// Plain-text dump of nodes, labels and tables, and its reader.
void write_model_text(std::ostream& out, const EnergyModel& model);
EnergyModel read_model_text(std::istream& in);

}  // namespace votepose
