#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "support.hpp"
#include "votepose/error.hpp"
#include "votepose/skeleton.hpp"

using namespace votepose;

namespace {

Heatmap heatmap_from(int rows, int cols, const std::vector<double>& values) {
  Heatmap h;
  h.origin = {0, 0};
  h.values = Grid<double>(rows, cols);
  h.values.data() = values;
  return h;
}

std::vector<Cell> all_cells(int rows, int cols) {
  std::vector<Cell> out;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) out.push_back({r, c});
  }
  return out;
}

EnergyModel random_loopy(std::mt19937_64& rng, int nodes, int labels) {
  EnergyModel m;
  for (int v = 0; v < nodes; ++v) {
    std::vector<double> u(static_cast<std::size_t>(labels));
    for (double& x : u) x = support::rand_real(rng, 0.0, 5.0);
    m.add_node(std::move(u));
  }
  auto edge = [&](int a, int b) {
    Grid<double> t(labels, labels);
    for (double& x : t.data()) x = support::rand_real(rng, 0.0, 5.0);
    m.add_edge(a, b, std::move(t));
  };
  for (int v = 0; v + 1 < nodes; ++v) edge(v, v + 1);
  edge(0, nodes - 1);
  if (nodes > 3) edge(1, nodes - 2);
  return m;
}

}  // namespace

TEST_CASE("unary costs") {
  const std::vector<Cell> labels = all_cells(2, 3);
  SUBCASE("one-hot") {
    const auto u = build_unary(heatmap_from(2, 3, {0, 0, 0, 0, 7.5, 0}), labels);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(u[i] == (i == 4 ? 0.0 : -std::log(kLogFloor)));
  }
  SUBCASE("uniform") {
    const auto u = build_unary(heatmap_from(2, 3, std::vector<double>(6, 0.25)), labels);
    for (double v : u) CHECK(v == doctest::Approx(std::log(6.0)).epsilon(1e-15));
  }
  SUBCASE("argmin follows argmax") {
    std::mt19937_64 rng(51);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> v(6);
      for (double& x : v) x = support::rand_real(rng);
      const auto u = build_unary(heatmap_from(2, 3, v), labels);
      CHECK(std::min_element(u.begin(), u.end()) - u.begin() == std::max_element(v.begin(), v.end()) - v.begin());
    }
  }
  SUBCASE("restricted label space renormalizes") {
    const std::vector<Cell> some{{0, 0}, {1, 2}};
    const auto u = build_unary(heatmap_from(2, 3, {1, 5, 5, 5, 5, 3}), some);
    CHECK(u[0] == doctest::Approx(-std::log(0.25)).epsilon(1e-15));
    CHECK(u[1] == doctest::Approx(-std::log(0.75)).epsilon(1e-15));
  }
  SUBCASE("no evidence") {
    CHECK_THROWS_AS(build_unary(heatmap_from(2, 3, std::vector<double>(6, 0.0)), labels), NoEvidence);
    CHECK_THROWS_AS(build_unary(heatmap_from(2, 3, {0, 0, 0, 0, 0, 1}), std::vector<Cell>{{0, 0}}), NoEvidence);
  }
}

TEST_CASE("binary costs mix consensus and prior") {
  const JointTable joint = JointTable::from_dense(0, 1, {0, 0}, 1, 2, 12, {0.4, 0.1, 0.2, 0.3});
  PriorTable prior;
  prior.first = 0;
  prior.second = 1;
  prior.radius = 1;
  prior.cell_pixels = 12;
  prior.values = Grid<double>(3, 3, 0.05);
  prior.values(1, 1) = 0.5;  // same cell
  prior.values(1, 2) = 0.1;  // one cell right
  prior.values(1, 0) = 0.2;  // one cell left
  const std::vector<Cell> labels{{0, 0}, {0, 1}};

  const Grid<double> consensus = build_binary(joint, &prior, 1.0, labels, labels);
  const Grid<double> location = build_binary(joint, &prior, 0.0, labels, labels);
  const Grid<double> mixed = build_binary(joint, &prior, 0.5, labels, labels);
  const double j[2][2] = {{0.4, 0.1}, {0.2, 0.3}};
  const double p[2][2] = {{0.5, 0.1}, {0.2, 0.5}};
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      CHECK(consensus(a, b) == doctest::Approx(-std::log(j[a][b])).epsilon(1e-15));
      CHECK(location(a, b) == doctest::Approx(-std::log(p[a][b])).epsilon(1e-15));
      CHECK(mixed(a, b) == doctest::Approx(0.5 * (consensus(a, b) + location(a, b))).epsilon(1e-15));
    }
  }
  // Zero joint mass is floored.
  const JointTable sparse = JointTable::from_dense(0, 1, {0, 0}, 1, 2, 12, {1.0, 0.0, 0.0, 0.0});
  CHECK(build_binary(sparse, nullptr, 1.0, labels, labels)(1, 1) == doctest::Approx(-std::log(kLogFloor)));
  CHECK(build_binary(sparse, nullptr, 0.0, labels, labels)(1, 1) == 0.0);

  PriorTable wrong = prior;
  wrong.cell_pixels = 4;
  CHECK_THROWS_AS(build_binary(joint, &wrong, 0.5, labels, labels), InvalidArgument);
  CHECK_THROWS_AS(build_binary(joint, &prior, 1.5, labels, labels), InvalidArgument);

  // The transposed view reads the same table the other way round.
  const PairCost fwd{&joint, false, &prior, 0.3};
  const PairCost rev{&joint, true, nullptr, 1.0};
  CHECK(rev({0, 1}, {0, 0}) == doctest::Approx(-std::log(0.1)));
  CHECK(fwd({0, 0}, {0, 1}) == doctest::Approx(0.3 * -std::log(0.1) + 0.7 * -std::log(0.1)));
}

TEST_CASE("midpoint folding") {
  SUBCASE("zero inputs fold to zero") {
    const Grid<double> folded = fold_midpoint(Grid<double>(3, 4), Grid<double>(12, 12), Grid<double>(12, 12));
    CHECK(folded.rows() == 12);
    for (double v : folded.data()) CHECK(v == 0.0);
  }
  SUBCASE("midpoint of (0,0) and (4,6) is (2,3)") {
    Grid<double> unary(5, 7, 100.0);
    unary(2, 3) = 0.0;
    const Grid<double> folded = fold_midpoint(unary, Grid<double>(35, 35), Grid<double>(35, 35));
    CHECK(folded(0, 4 * 7 + 6) == 0.0);
    CHECK(folded(4 * 7 + 6, 0) == 0.0);
    CHECK(folded(0, 0) == 100.0);
  }
  SUBCASE("equals the constrained three-variable minimum") {
    std::mt19937_64 rng(52);
    for (int t = 0; t < 100; ++t) {
      const int rows = support::rand_int(rng, 1, 6);
      const int cols = support::rand_int(rng, 1, 6);
      const int n = rows * cols;
      auto cost = [&] { return static_cast<double>(support::rand_int(rng, 0, 50)); };
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
      double lhs = std::numeric_limits<double>::infinity();
      double rhs = lhs;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          lhs = std::min(lhs, ui[static_cast<std::size_t>(a)] + uj[static_cast<std::size_t>(b)] + folded(a, b));
          for (int l = 0; l < n; ++l) {
            const double mr = (a / cols + b / cols) / 2.0;
            const double mc = (a % cols + b % cols) / 2.0;
            if (l / cols != static_cast<int>(std::floor(mr + 0.5)) || l % cols != static_cast<int>(std::floor(mc + 0.5))) continue;
            rhs = std::min(rhs, ui[static_cast<std::size_t>(a)] + uj[static_cast<std::size_t>(b)] + ul(l / cols, l % cols) + pil(a, l) + plj(l, b));
          }
        }
      }
      REQUIRE(lhs == rhs);
    }
  }
  SUBCASE("general folding with off-grid labels") {
    const Skeleton s = Skeleton::standard();
    const auto& hand = s[s.find("r_hand")];
    const std::vector<Cell> li{{-3, -3}, {0, 0}, {2, -1}};
    const std::vector<Cell> lj{{-1, -2}, {4, 4}};
    const auto place = [&](Cell a, Cell b) { return synthetic_cell(hand, a, b); };
    const Grid<double> folded = fold_synthetic(
        li, lj, place, [](Cell l) { return 1.0 * l.row + 10.0 * l.col; }, {},
        [](Cell l, Cell b) { return 0.5 * (l.row - b.row); });
    for (std::size_t a = 0; a < li.size(); ++a) {
      for (std::size_t b = 0; b < lj.size(); ++b) {
        const Cell l = place(li[a], lj[b]);
        CHECK(folded(static_cast<int>(a), static_cast<int>(b)) == 1.0 * l.row + 10.0 * l.col + 0.5 * (l.row - lj[b].row));
      }
    }
  }
}

TEST_CASE("solver on trivial models") {
  SUBCASE("single node") {
    EnergyModel m;
    m.add_node({3.0, 1.0, 2.0});
    const Labeling l = trws_solve(m);
    CHECK(l.labels == std::vector<int>{1});
    CHECK(l.energy == 1.0);
    CHECK(l.lower_bound == 1.0);
    CHECK(brute_force_map(m).labels == std::vector<int>{1});
  }
  SUBCASE("zero binary gives independent argmins") {
    EnergyModel m;
    m.add_node({3.0, 1.0, 2.0});
    m.add_node({0.5, 0.25});
    m.add_edge(0, 1, Grid<double>(3, 2));
    CHECK(brute_force_map(m).labels == std::vector<int>{1, 1});
    CHECK(trws_solve(m).labels == std::vector<int>{1, 1});
  }
}

TEST_CASE("solver is exact on random trees") {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 300; ++t) {
    const EnergyModel m = support::random_tree(rng, 6, 8);
    const Labeling fast = trws_solve(m);
    const Labeling exact = brute_force_map(m);
    REQUIRE(exact.energy == support::oracle_min_energy(m));
    REQUIRE(fast.energy == exact.energy);
    REQUIRE(fast.energy == doctest::Approx(support::oracle_energy(m, fast.labels)).epsilon(1e-12));
    CHECK(fast.lower_bound <= fast.energy + 1e-9);
  }
}

TEST_CASE("solver bound on loopy models") {
  std::mt19937_64 rng(54);
  double worst_gap = 0.0;
  int suboptimal = 0;
  for (int t = 0; t < 200; ++t) {
    const EnergyModel m = random_loopy(rng, support::rand_int(rng, 3, 6), support::rand_int(rng, 2, 5));
    const Labeling l = trws_solve(m);
    const double exact = support::oracle_min_energy(m);
    REQUIRE(l.energy >= l.lower_bound - 1e-9);
    REQUIRE(l.lower_bound <= exact + 1e-9);
    REQUIRE(l.energy >= exact - 1e-9);
    REQUIRE(l.energy == doctest::Approx(support::oracle_energy(m, l.labels)).epsilon(1e-12));
    for (std::size_t i = 1; i < l.bound_history.size(); ++i) {
      REQUIRE(l.bound_history[i] >= l.bound_history[i - 1] - 1e-9);
    }
    worst_gap = std::max(worst_gap, l.energy - l.lower_bound);
    if (l.energy > exact + 1e-9) ++suboptimal;
  }
  MESSAGE("loopy models: worst energy - bound gap " << worst_gap << ", suboptimal " << suboptimal << "/200");
}

TEST_CASE("adding a constant to a unary shifts energies and keeps the argmin") {
  std::mt19937_64 rng(55);
  for (int t = 0; t < 100; ++t) {
    EnergyModel m = support::random_tree(rng, 5, 6);
    const Labeling before = brute_force_map(m);
    const Labeling trws_before = trws_solve(m);
    const int v = support::rand_int(rng, 0, static_cast<int>(m.nodes.size()) - 1);
    const double shift = support::rand_real(rng, -3.0, 3.0);
    for (double& u : m.nodes[static_cast<std::size_t>(v)].unary) u += shift;
    const Labeling after = brute_force_map(m);
    CHECK(after.labels == before.labels);
    CHECK(after.energy == doctest::Approx(before.energy + shift).epsilon(1e-12));
    const Labeling trws_after = trws_solve(m);
    CHECK(trws_after.labels == trws_before.labels);
  }
}

TEST_CASE("energy evaluation and validation") {
  std::mt19937_64 rng(56);
  const EnergyModel m = random_loopy(rng, 4, 3);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> labels(4);
    for (int& l : labels) l = support::rand_int(rng, 0, 2);
    CHECK(m.energy(labels) == doctest::Approx(support::oracle_energy(m, labels)).epsilon(1e-12));
  }
  EnergyModel bad;
  bad.add_node({1.0, 2.0});
  bad.add_node({1.0});
  bad.add_edge(0, 1, Grid<double>(2, 2));
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  EnergyModel nan;
  nan.add_node({1.0, std::numeric_limits<double>::quiet_NaN()});
  CHECK_THROWS_AS(nan.validate(), InvalidArgument);
  EnergyModel big;
  for (int v = 0; v < 8; ++v) big.add_node(std::vector<double>(8, 0.0));
  CHECK_THROWS_AS(brute_force_map(big), InvalidArgument);
}

TEST_CASE("model text round trip") {
  std::mt19937_64 rng(57);
  EnergyModel m = random_loopy(rng, 4, 3);
  m.nodes[1].cells = {{0, 1}, {-2, 3}, {5, 5}};
  m.nodes[1].keypoint = 7;
  m.lambda = 0.25;
  std::stringstream ss;
  write_model_text(ss, m);
  const EnergyModel back = read_model_text(ss);
  REQUIRE(back.nodes.size() == m.nodes.size());
  REQUIRE(back.edges.size() == m.edges.size());
  CHECK(back.lambda == m.lambda);
  for (std::size_t v = 0; v < m.nodes.size(); ++v) {
    CHECK(back.nodes[v].unary == m.nodes[v].unary);
    CHECK(back.nodes[v].cells == m.nodes[v].cells);
    CHECK(back.nodes[v].keypoint == m.nodes[v].keypoint);
  }
  for (std::size_t e = 0; e < m.edges.size(); ++e) {
    CHECK(back.edges[e].a == m.edges[e].a);
    CHECK(back.edges[e].b == m.edges[e].b);
    CHECK(back.edges[e].cost == m.edges[e].cost);
  }
  std::stringstream junk("not a model");
  CHECK_THROWS_AS(read_model_text(junk), ParseError);
}
