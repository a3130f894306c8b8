#include "votepose/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "votepose/consensus.hpp"
#include "votepose/mrf.hpp"
#include "votepose/synth.hpp"
#include "votepose/voting.hpp"

namespace votepose {

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

LogPolarGrid small_grid(std::mt19937_64& rng, int max_rings) {
  LogPolarGrid g;
  g.num_rings = uniform_int(rng, 1, max_rings);
  g.angular_bins = uniform_int(rng, 1, 12);
  g.angular_offset = uniform01(rng) * 6.283185307179586;
  g.ring_boundaries = {1.0 + uniform01(rng)};
  for (int r = 0; r < g.num_rings; ++r) g.ring_boundaries.push_back(g.ring_boundaries.back() + 0.5 + 2.0 * uniform01(rng));
  return g;
}

void random_distribution(std::mt19937_64& rng, auto* dst, int n) {
  double sum = 0.0;
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) sum += (x = uniform01(rng) < 0.3 ? 0.0 : uniform01(rng));
  if (sum == 0.0) v[0] = sum = 1.0;
  for (int k = 0; k < n; ++k) dst[k] = static_cast<std::remove_reference_t<decltype(*dst)>>(v[static_cast<std::size_t>(k)] / sum);
}

SuiteResult aggregation_suite(std::mt19937_64& rng, int cases) {
  SuiteResult out{"aggregate_vs_naive"};
  for (int i = 0; i < cases; ++i) {
    const LogPolarGrid g = small_grid(rng, 3);
    const int size = default_kernel_size(g) + 2 * uniform_int(rng, 0, 1);
    const VoteKernel kernel = build_kernel(g, size, size);
    VoterField f(0, uniform_int(rng, 1, 12), uniform_int(rng, 1, 12), 4, g.num_classes());
    for (int r = 0; r < f.rows; ++r) {
      for (int c = 0; c < f.cols; ++c) random_distribution(rng, f.at(r, c).data(), f.num_classes);
    }
    const Heatmap fast = aggregate(f, kernel);
    const Heatmap slow = naive_aggregate(f, kernel);
    double err = fast.origin == slow.origin && fast.values.rows() == slow.values.rows() &&
                         fast.values.cols() == slow.values.cols()
                     ? 0.0
                     : std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; std::isfinite(err) && k < fast.values.size(); ++k) {
      err = std::max(err, std::abs(fast.values.data()[k] - slow.values.data()[k]));
    }
    ++out.cases;
    out.max_error = std::max(out.max_error, err);
    if (!(err <= 1e-9)) ++out.failures;
  }
  return out;
}

SuiteResult joint_suite(std::mt19937_64& rng, int cases) {
  SuiteResult out{"joint_vs_naive"};
  for (int i = 0; i < cases; ++i) {
    const LogPolarGrid g = small_grid(rng, 2);
    const VoteKernel kernel = build_kernel(g, default_kernel_size(g), default_kernel_size(g));
    const int rows = uniform_int(rng, 1, 6);
    const int cols = uniform_int(rng, 1, 6);
    auto make = [&](int keypoint) {
      CoarseField f;
      f.keypoint = keypoint;
      f.rows = rows;
      f.cols = cols;
      f.num_classes = g.num_classes();
      f.values.resize(static_cast<std::size_t>(rows) * cols * f.num_classes);
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) random_distribution(rng, f.at(r, c), f.num_classes);
      }
      return f;
    };
    const CoarseField a = make(0);
    const CoarseField b = make(1);
    const JointTable fast = joint_table(a, b, kernel);
    const JointTable slow = naive_joint(a, b, kernel);
    double err = 0.0;
    for (const Cell x : slow.cells()) {
      for (const Cell y : slow.cells()) err = std::max(err, std::abs(fast.at(x, y) - slow.at(x, y)));
    }
    ++out.cases;
    out.max_error = std::max(out.max_error, err);
    if (!(err <= 1e-9)) ++out.failures;
  }
  return out;
}

SuiteResult fold_suite(std::mt19937_64& rng, int cases) {
  SuiteResult out{"fold_identity"};
  for (int i = 0; i < cases; ++i) {
    const int rows = uniform_int(rng, 1, 5);
    const int cols = uniform_int(rng, 1, 5);
    const int n = rows * cols;
    auto cost = [&] { return static_cast<double>(uniform_int(rng, 0, 40)); };
    std::vector<double> ui(static_cast<std::size_t>(n));
    std::vector<double> uj(static_cast<std::size_t>(n));
    for (double& v : ui) v = cost();
    for (double& v : uj) v = cost();
    Grid<double> ul(rows, cols);
    Grid<double> pil(n, n);
    Grid<double> plj(n, n);
    for (double& v : ul.data()) v = cost();
    for (double& v : pil.data()) v = cost();
    for (double& v : plj.data()) v = cost();
    const Grid<double> folded = fold_midpoint(ul, pil, plj);

    double folded_min = std::numeric_limits<double>::infinity();
    double constrained_min = folded_min;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        folded_min = std::min(folded_min, ui[static_cast<std::size_t>(a)] + uj[static_cast<std::size_t>(b)] + folded(a, b));
        // Non-negative coordinates: half away from zero is (p + q + 1) / 2.
        const int lr = (a / cols + b / cols + 1) / 2;
        const int lc = (a % cols + b % cols + 1) / 2;
        const int l = lr * cols + lc;
        constrained_min = std::min(constrained_min, ui[static_cast<std::size_t>(a)] + uj[static_cast<std::size_t>(b)] +
                                                        ul(lr, lc) + pil(a, l) + plj(l, b));
      }
    }
    ++out.cases;
    const double err = std::abs(folded_min - constrained_min);
    out.max_error = std::max(out.max_error, err);
    if (folded_min != constrained_min) ++out.failures;
  }
  return out;
}

SuiteResult trws_tree_suite(std::mt19937_64& rng, int cases) {
  SuiteResult out{"trws_tree_exact"};
  for (int i = 0; i < cases; ++i) {
    EnergyModel m;
    const int nodes = uniform_int(rng, 1, 6);
    for (int v = 0; v < nodes; ++v) {
      std::vector<double> unary(static_cast<std::size_t>(uniform_int(rng, 1, 8)));
      for (double& u : unary) u = 10.0 * uniform01(rng);
      m.add_node(std::move(unary));
    }
    for (int v = 1; v < nodes; ++v) {
      const int parent = uniform_int(rng, 0, v - 1);
      const bool flip = uniform01(rng) < 0.5;
      const int a = flip ? v : parent;
      const int b = flip ? parent : v;
      Grid<double> cost(m.nodes[static_cast<std::size_t>(a)].num_labels(), m.nodes[static_cast<std::size_t>(b)].num_labels());
      for (double& c : cost.data()) c = 10.0 * uniform01(rng);
      m.add_edge(a, b, std::move(cost));
    }
    const Labeling fast = trws_solve(m);
    const Labeling exact = brute_force_map(m);
    ++out.cases;
    const double err = std::abs(fast.energy - exact.energy);
    out.max_error = std::max(out.max_error, err);
    if (fast.energy != exact.energy) ++out.failures;
  }
  return out;
}

}  // namespace

std::vector<SuiteResult> run_selftest(std::uint64_t seed, int cases) {
  std::mt19937_64 rng(seed);
  std::vector<SuiteResult> out;
  out.push_back(aggregation_suite(rng, cases));
  out.push_back(joint_suite(rng, cases));
  out.push_back(fold_suite(rng, cases));
  out.push_back(trws_tree_suite(rng, cases));
  return out;
}

}  // namespace votepose
