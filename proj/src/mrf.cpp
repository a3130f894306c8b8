#include "votepose/mrf.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "votepose/error.hpp"

namespace votepose {

int EnergyModel::add_node(std::vector<double> unary, std::vector<Cell> cells, int keypoint) {
  nodes.push_back({keypoint, std::move(cells), std::move(unary)});
  return static_cast<int>(nodes.size()) - 1;
}

void EnergyModel::add_edge(int a, int b, Grid<double> cost) { edges.push_back({a, b, std::move(cost)}); }

void EnergyModel::validate() const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.unary.empty()) throw InvalidArgument("node " + std::to_string(i) + " has an empty label space");
    if (!n.cells.empty() && n.cells.size() != n.unary.size()) {
      throw InvalidArgument("node " + std::to_string(i) + " has mismatched cells and unary costs");
    }
    for (double v : n.unary) {
      if (!std::isfinite(v)) throw InvalidArgument("node " + std::to_string(i) + " has a non-finite unary cost");
    }
  }
  const int n = static_cast<int>(nodes.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& edge = edges[e];
    if (edge.a < 0 || edge.b < 0 || edge.a >= n || edge.b >= n || edge.a == edge.b) {
      throw InvalidArgument("edge " + std::to_string(e) + " references invalid nodes");
    }
    if (edge.cost.rows() != nodes[static_cast<std::size_t>(edge.a)].num_labels() ||
        edge.cost.cols() != nodes[static_cast<std::size_t>(edge.b)].num_labels()) {
      throw InvalidArgument("edge " + std::to_string(e) + " table does not match its label spaces");
    }
    for (double v : edge.cost.data()) {
      if (!std::isfinite(v)) throw InvalidArgument("edge " + std::to_string(e) + " has a non-finite cost");
    }
  }
}

double EnergyModel::energy(std::span<const int> labels) const {
  if (labels.size() != nodes.size()) throw InvalidArgument("labeling size does not match the model");
  double e = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) e += nodes[i].unary.at(static_cast<std::size_t>(labels[i]));
  for (const auto& edge : edges) {
    e += edge.cost(labels[static_cast<std::size_t>(edge.a)], labels[static_cast<std::size_t>(edge.b)]);
  }
  return e;
}

std::vector<double> build_unary(const Heatmap& heatmap, std::span<const Cell> labels, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("log floor must be positive");
  double total = 0.0;
  for (const Cell c : labels) total += heatmap.at(c);
  if (!(total > 0.0)) {
    throw NoEvidence("heatmap of keypoint " + std::to_string(heatmap.keypoint) + " is zero over the label space");
  }
  std::vector<double> cost;
  cost.reserve(labels.size());
  for (const Cell c : labels) cost.push_back(-std::log(std::max(heatmap.at(c) / total, epsilon)));
  return cost;
}

double PairCost::operator()(Cell a, Cell b) const {
  double cost = 0.0;
  if (lambda > 0.0) {
    const double p = joint == nullptr ? 0.0 : (joint_transposed ? joint->at(b, a) : joint->at(a, b));
    cost += lambda * -std::log(std::max(p, epsilon));
  }
  if (lambda < 1.0 && prior != nullptr) cost += (1.0 - lambda) * -std::log(prior->at(b - a));
  return cost;
}

Grid<double> build_binary(const JointTable& joint, const PriorTable* prior, double lambda,
                          std::span<const Cell> labels_a, std::span<const Cell> labels_b, double epsilon) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (prior != nullptr && prior->cell_pixels != joint.stride()) {
    throw InvalidArgument("prior and joint tables are on different coarse grids");
  }
  const PairCost pair{&joint, false, prior, lambda, epsilon};
  Grid<double> out(static_cast<int>(labels_a.size()), static_cast<int>(labels_b.size()));
  for (int i = 0; i < out.rows(); ++i) {
    for (int j = 0; j < out.cols(); ++j) out(i, j) = pair(labels_a[static_cast<std::size_t>(i)], labels_b[static_cast<std::size_t>(j)]);
  }
  return out;
}

Grid<double> fold_synthetic(std::span<const Cell> labels_i, std::span<const Cell> labels_j,
                            const std::function<Cell(Cell, Cell)>& place, const CellCostFn& unary_l,
                            const PairCostFn& link_i, const PairCostFn& link_j) {
  Grid<double> out(static_cast<int>(labels_i.size()), static_cast<int>(labels_j.size()));
  for (int a = 0; a < out.rows(); ++a) {
    const Cell xi = labels_i[static_cast<std::size_t>(a)];
    for (int b = 0; b < out.cols(); ++b) {
      const Cell xj = labels_j[static_cast<std::size_t>(b)];
      const Cell xl = place(xi, xj);
      double v = unary_l ? unary_l(xl) : 0.0;
      if (link_i) v += link_i(xi, xl);
      if (link_j) v += link_j(xl, xj);
      out(a, b) = v;
    }
  }
  return out;
}

Grid<double> fold_midpoint(const Grid<double>& unary_mid, const Grid<double>& pair_i_mid,
                           const Grid<double>& pair_mid_j) {
  const int rows = unary_mid.rows();
  const int cols = unary_mid.cols();
  const int n = rows * cols;
  if (pair_i_mid.rows() != n || pair_i_mid.cols() != n || pair_mid_j.rows() != n || pair_mid_j.cols() != n) {
    throw InvalidArgument("fold_midpoint tables are not on the same grid");
  }
  std::vector<Cell> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) labels.push_back({r, c});
  }
  const KeypointSpec mid{0, "mid", KeypointKind::Midpoint};
  auto index = [cols](Cell c) { return c.row * cols + c.col; };
  return fold_synthetic(
      labels, labels, [&](Cell a, Cell b) { return synthetic_cell(mid, a, b); },
      [&](Cell l) { return unary_mid(l.row, l.col); },
      [&](Cell a, Cell l) { return pair_i_mid(index(a), index(l)); },
      [&](Cell l, Cell b) { return pair_mid_j(index(l), index(b)); });
}

namespace {

// Each edge is oriented from the lower to the higher node index and carries
// a single message: into its head after a forward pass, into its tail after a
// backward pass.
struct Link {
  int tail = 0;
  int head = 0;
  Grid<double> cost;  // tail labels x head labels
  std::vector<double> message;
};

double subtract_min(std::vector<double>& v) {
  const double m = *std::min_element(v.begin(), v.end());
  for (double& x : v) x -= m;
  return m;
}

class TrwsSolver {
 public:
  explicit TrwsSolver(const EnergyModel& model) : model_(model) {
    const std::size_t n = model.nodes.size();
    forward_.resize(n);
    backward_.resize(n);
    for (const auto& e : model.edges) {
      Link link;
      if (e.a < e.b) {
        link.tail = e.a;
        link.head = e.b;
        link.cost = e.cost;
      } else {
        link.tail = e.b;
        link.head = e.a;
        link.cost = Grid<double>(e.cost.cols(), e.cost.rows());
        for (int r = 0; r < e.cost.rows(); ++r) {
          for (int c = 0; c < e.cost.cols(); ++c) link.cost(c, r) = e.cost(r, c);
        }
      }
      link.message.assign(static_cast<std::size_t>(link.cost.rows()), 0.0);
      forward_[static_cast<std::size_t>(link.tail)].push_back(links_.size());
      backward_[static_cast<std::size_t>(link.head)].push_back(links_.size());
      links_.push_back(std::move(link));
    }
    chains_.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
      chains_[v] = static_cast<double>(std::max<std::size_t>({forward_[v].size(), backward_[v].size(), 1}));
    }
  }

  Labeling run(const TrwsOptions& options) {
    Labeling best;
    best.energy = std::numeric_limits<double>::infinity();
    best.lower_bound = -std::numeric_limits<double>::infinity();
    best.converged = false;
    const int n = static_cast<int>(model_.nodes.size());
    if (n == 0) {
      best.energy = 0.0;
      best.lower_bound = 0.0;
      best.converged = true;
      return best;
    }

    std::vector<double> belief;
    double previous = -std::numeric_limits<double>::infinity();
    for (int iter = 1; iter <= std::max(1, options.max_iters); ++iter) {
      for (int v = 0; v < n; ++v) {
        gather(v, belief);
        subtract_min(belief);
        scale(v, belief);
        for (std::size_t l : forward_[static_cast<std::size_t>(v)]) send_to_head(links_[l], belief);
      }
      double bound = 0.0;
      for (int v = n - 1; v >= 0; --v) {
        gather(v, belief);
        bound += subtract_min(belief);
        scale(v, belief);
        for (std::size_t l : backward_[static_cast<std::size_t>(v)]) bound += send_to_tail(links_[l], belief);
      }

      std::vector<int> labels = decode();
      const double energy = model_.energy(labels);
      if (energy < best.energy) {
        best.energy = energy;
        best.labels = std::move(labels);
      }
      best.lower_bound = std::max(best.lower_bound, bound);
      best.bound_history.push_back(bound);
      best.iterations = iter;

      const double gap_tol = 1e-9 * std::max(1.0, std::abs(best.energy));
      if (best.energy - best.lower_bound <= gap_tol || (iter > 1 && bound - previous <= options.tol)) {
        best.converged = true;
        break;
      }
      previous = bound;
    }
    // A tight bound can exceed the energy by rounding in the message sums.
    best.lower_bound = std::min(best.lower_bound, best.energy);
    return best;
  }

 private:
  void gather(int v, std::vector<double>& belief) const {
    const auto& node = model_.nodes[static_cast<std::size_t>(v)];
    belief = node.unary;
    for (std::size_t l : forward_[static_cast<std::size_t>(v)]) add(belief, links_[l].message);
    for (std::size_t l : backward_[static_cast<std::size_t>(v)]) add(belief, links_[l].message);
  }

  static void add(std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  }

  void scale(int v, std::vector<double>& belief) const {
    const double inv = 1.0 / chains_[static_cast<std::size_t>(v)];
    for (double& x : belief) x *= inv;
  }

  static double send_to_head(Link& link, const std::vector<double>& belief) {
    const int nt = link.cost.rows();
    const int nh = link.cost.cols();
    std::vector<double> source(belief);
    for (int t = 0; t < nt; ++t) source[static_cast<std::size_t>(t)] -= link.message[static_cast<std::size_t>(t)];
    std::vector<double> out(static_cast<std::size_t>(nh), std::numeric_limits<double>::infinity());
    for (int t = 0; t < nt; ++t) {
      const double s = source[static_cast<std::size_t>(t)];
      const auto row = link.cost.row(t);
      for (int h = 0; h < nh; ++h) out[static_cast<std::size_t>(h)] = std::min(out[static_cast<std::size_t>(h)], s + row[static_cast<std::size_t>(h)]);
    }
    link.message = std::move(out);
    return subtract_min(link.message);
  }

  static double send_to_tail(Link& link, const std::vector<double>& belief) {
    const int nt = link.cost.rows();
    const int nh = link.cost.cols();
    std::vector<double> source(belief);
    for (int h = 0; h < nh; ++h) source[static_cast<std::size_t>(h)] -= link.message[static_cast<std::size_t>(h)];
    std::vector<double> out(static_cast<std::size_t>(nt));
    for (int t = 0; t < nt; ++t) {
      const auto row = link.cost.row(t);
      double best = std::numeric_limits<double>::infinity();
      for (int h = 0; h < nh; ++h) best = std::min(best, source[static_cast<std::size_t>(h)] + row[static_cast<std::size_t>(h)]);
      out[static_cast<std::size_t>(t)] = best;
    }
    link.message = std::move(out);
    return subtract_min(link.message);
  }

  // Sequential decoding: each node conditions on already decoded lower
  // neighbours and on the backward messages from higher ones.
  std::vector<int> decode() const {
    const int n = static_cast<int>(model_.nodes.size());
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    std::vector<double> cost;
    for (int v = 0; v < n; ++v) {
      cost = model_.nodes[static_cast<std::size_t>(v)].unary;
      for (std::size_t l : backward_[static_cast<std::size_t>(v)]) {
        const Link& link = links_[l];
        const auto row = link.cost.row(labels[static_cast<std::size_t>(link.tail)]);
        for (std::size_t x = 0; x < cost.size(); ++x) cost[x] += row[x];
      }
      for (std::size_t l : forward_[static_cast<std::size_t>(v)]) add(cost, links_[l].message);
      labels[static_cast<std::size_t>(v)] =
          static_cast<int>(std::min_element(cost.begin(), cost.end()) - cost.begin());
    }
    return labels;
  }

  const EnergyModel& model_;
  std::vector<Link> links_;
  std::vector<std::vector<std::size_t>> forward_;
  std::vector<std::vector<std::size_t>> backward_;
  std::vector<double> chains_;
};

}  // namespace

Labeling trws_solve(const EnergyModel& model, const TrwsOptions& options) {
  model.validate();
  return TrwsSolver(model).run(options);
}

Labeling brute_force_map(const EnergyModel& model) {
  model.validate();
  double count = 1.0;
  for (const auto& n : model.nodes) count *= n.num_labels();
  if (count > 1e7) throw InvalidArgument("model too large for exhaustive search");

  Labeling best;
  best.energy = std::numeric_limits<double>::infinity();
  std::vector<int> labels(model.nodes.size(), 0);
  while (true) {
    const double e = model.energy(labels);
    if (e < best.energy) {
      best.energy = e;
      best.labels = labels;
    }
    std::size_t i = 0;
    for (; i < labels.size(); ++i) {
      if (++labels[i] < model.nodes[i].num_labels()) break;
      labels[i] = 0;
    }
    if (i == labels.size()) break;
  }
  if (model.nodes.empty()) best.energy = 0.0;
  best.lower_bound = best.energy;
  best.converged = true;
  return best;
}

void write_model_text(std::ostream& out, const EnergyModel& model) {
  const auto precision = out.precision(17);
  out << "votepose-energy-model 1\n";
  out << "lambda " << model.lambda << " epsilon " << model.epsilon << "\n";
  out << "nodes " << model.nodes.size() << "\n";
  for (std::size_t i = 0; i < model.nodes.size(); ++i) {
    const auto& n = model.nodes[i];
    out << "node " << i << " keypoint " << n.keypoint << " labels " << n.num_labels() << " cells "
        << (n.cells.empty() ? 0 : 1) << "\n";
    if (!n.cells.empty()) {
      for (const Cell c : n.cells) out << c.row << ' ' << c.col << ' ';
      out << "\n";
    }
    for (double v : n.unary) out << v << ' ';
    out << "\n";
  }
  out << "edges " << model.edges.size() << "\n";
  for (const auto& e : model.edges) {
    out << "edge " << e.a << ' ' << e.b << ' ' << e.cost.rows() << ' ' << e.cost.cols() << "\n";
    for (int r = 0; r < e.cost.rows(); ++r) {
      for (double v : e.cost.row(r)) out << v << ' ';
      out << "\n";
    }
  }
  out.precision(precision);
}

EnergyModel read_model_text(std::istream& in) {
  auto expect = [&](const char* word) {
    std::string token;
    if (!(in >> token) || token != word) {
      throw ParseError(static_cast<std::size_t>(std::max<std::streamoff>(0, in.tellg())),
                       std::string("expected '") + word + "' in energy model dump");
    }
  };
  auto number = [&](auto& value) {
    if (!(in >> value)) {
      throw ParseError(static_cast<std::size_t>(std::max<std::streamoff>(0, in.tellg())),
                       "malformed number in energy model dump");
    }
  };
  EnergyModel model;
  int version = 0;
  expect("votepose-energy-model");
  number(version);
  if (version != 1) throw ParseError(0, "unsupported energy model version " + std::to_string(version));
  expect("lambda");
  number(model.lambda);
  expect("epsilon");
  number(model.epsilon);
  std::size_t n = 0;
  expect("nodes");
  number(n);
  for (std::size_t i = 0; i < n; ++i) {
    EnergyNode node;
    std::size_t index = 0;
    int labels = 0;
    int has_cells = 0;
    expect("node");
    number(index);
    expect("keypoint");
    number(node.keypoint);
    expect("labels");
    number(labels);
    expect("cells");
    number(has_cells);
    if (has_cells) {
      node.cells.resize(static_cast<std::size_t>(labels));
      for (Cell& c : node.cells) {
        number(c.row);
        number(c.col);
      }
    }
    node.unary.resize(static_cast<std::size_t>(labels));
    for (double& v : node.unary) number(v);
    model.nodes.push_back(std::move(node));
  }
  std::size_t m = 0;
  expect("edges");
  number(m);
  for (std::size_t i = 0; i < m; ++i) {
    int a = 0;
    int b = 0;
    int rows = 0;
    int cols = 0;
    expect("edge");
    number(a);
    number(b);
    number(rows);
    number(cols);
    Grid<double> cost(rows, cols);
    for (double& v : cost.data()) number(v);
    model.add_edge(a, b, std::move(cost));
  }
  model.validate();
  return model;
}

}  // namespace votepose
