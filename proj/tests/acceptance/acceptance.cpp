// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "support.hpp"
#include "votepose/config.hpp"
#include "votepose/metrics.hpp"
#include "votepose/pipeline.hpp"
#include "votepose/synth.hpp"

using namespace votepose;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

double max_abs_diff(const Grid<double>& a, const Grid<double>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return std::numeric_limits<double>::infinity();
  double err = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a.data()[i] - b.data()[i]));
  return err;
}

Cell cell_of(Point p, int stride) {
  return {static_cast<int>(std::floor(p.y / stride)), static_cast<int>(std::floor(p.x / stride))};
}

Outcome aggregation_oracle() {
  std::mt19937_64 rng(1001);
  const LogPolarGrid g;
  const VoteKernel k = build_kernel(g, 65, 65);
  double err = 0.0;
  int cases = 0;
  for (; cases < 200; ++cases) {
    const bool default_grid = cases % 4 == 0;
    const LogPolarGrid sg = default_grid ? g : support::random_grid(rng, 4);
    const int half = default_kernel_size(sg) / 2;
    const VoteKernel sk = default_grid ? k : build_kernel(sg, 2 * half + 1, 2 * half + 1);
    const VoterField f =
        support::random_field(rng, support::rand_int(rng, 1, 16), support::rand_int(rng, 1, 16), sg.num_classes());
    const Heatmap fast = aggregate(f, sk);
    err = std::max({err, max_abs_diff(fast.values, naive_aggregate(f, sk).values),
                    max_abs_diff(fast.values, support::oracle_aggregate(f, sg, half))});
  }

  const VoterField big = support::random_field(rng, 64, 64, 50);
  auto t0 = Clock::now();
  const Heatmap fast = aggregate(big, k);
  const double fast_s = seconds_since(t0);
  t0 = Clock::now();
  const Heatmap slow = naive_aggregate(big, k);
  const double slow_s = seconds_since(t0);
  err = std::max(err, max_abs_diff(fast.values, slow.values));
  const double speedup = slow_s / std::max(fast_s, 1e-9);

  char buf[200];
  std::snprintf(buf, sizeof buf, "%d fields, max err %.3g; 64x64 fast %.3fs naive %.3fs speedup %.1fx", cases, err,
                fast_s, slow_s, speedup);
  return {err <= 1e-9 && speedup >= 10.0, buf};
}

Outcome consensus_oracle() {
  std::mt19937_64 rng(1002);
  const LogPolarGrid cg = rescale_grid(coarse_grid(LogPolarGrid{}, 2), 3.0);
  const VoteKernel k = coarse_kernel(LogPolarGrid{}, 2, 3);
  double err = 0.0;
  int cases = 0;
  for (; cases < 200; ++cases) {
    const int rows = support::rand_int(rng, 1, 8);
    const int cols = support::rand_int(rng, 1, 8);
    const CoarseField a = support::random_coarse(rng, rows, cols, 26, 0);
    const CoarseField b = support::random_coarse(rng, rows, cols, 26, 1);
    const JointTable fast = joint_table(a, b, k);
    const JointTable slow = naive_joint(a, b, k);
    const auto dense = support::oracle_joint(a, b, cg, 4);
    const auto cells = fast.cells();
    if (cells.size() * cells.size() != dense.size()) err = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cells.size() && std::isfinite(err); ++i) {
      for (std::size_t j = 0; j < cells.size(); ++j) {
        const double o = dense[i * cells.size() + j];
        err = std::max({err, std::abs(fast.at(cells[i], cells[j]) - o), std::abs(slow.at(cells[i], cells[j]) - o)});
      }
    }
  }

  // Two voters, each voting one-hot into single-cell bins for both keypoints.
  std::vector<std::pair<int, Cell>> bins;
  for (const auto& tap : k.taps()) {
    if (tap.channel >= 2 && k.bin_size(tap.channel) == 1) bins.emplace_back(tap.channel, tap.offset);
  }
  auto background = [](int keypoint) {
    CoarseField f;
    f.keypoint = keypoint;
    f.rows = 3;
    f.cols = 8;
    f.num_classes = 26;
    f.values.assign(3 * 8 * 26, 0.0);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 8; ++c) f.at(r, c)[0] = 1.0;
    }
    return f;
  };
  auto vote = [](CoarseField& f, Cell y, int cls) {
    std::fill(f.at(y.row, y.col), f.at(y.row, y.col) + f.num_classes, 0.0);
    f.at(y.row, y.col)[cls] = 1.0;
  };
  CoarseField fi = background(0);
  CoarseField fj = background(1);
  const Cell y1{1, 1};
  const Cell y2{1, 6};
  vote(fi, y1, bins[0].first);
  vote(fj, y1, bins[1].first);
  vote(fi, y2, bins[1].first);
  vote(fj, y2, bins[0].first);
  const Cell a = y1 + bins[0].second;
  const Cell b = y1 + bins[1].second;
  const Cell c = y2 + bins[1].second;
  const Cell d = y2 + bins[0].second;
  bool exact = bins.size() >= 2;
  for (const JointTable& j : {joint_table(fi, fj, k), naive_joint(fi, fj, k)}) {
    exact = exact && j.at(a, b) == 0.5 && j.at(c, d) == 0.5 && j.at(a, d) == 0.0 && j.at(c, b) == 0.0;
  }

  char buf[200];
  std::snprintf(buf, sizeof buf, "%d coarse fields, max err %.3g; two-voter example %s", cases, err,
                exact ? "1/2, 1/2, 0, 0" : "wrong");
  return {err <= 1e-9 && exact, buf};
}

// Fraction of seeds where the conditional elbow map given the true shoulder
// peaks at the true elbow cell.
int suppression_hits(bool snap, int seeds) {
  const RunConfig config;
  const int coarse = config.coarse_factor;
  const int shoulder = config.skeleton.find("r_shoulder");
  const int elbow = config.skeleton.find("r_elbow");
  const VoteKernel ck = coarse_kernel(config.grid, config.kept_rings, config.pool());
  int hits = 0;
  for (int seed = 0; seed < seeds; ++seed) {
    SyntheticScene scene = random_scene(static_cast<std::uint64_t>(900 + seed), 1);
    if (snap) {
      for (auto& pose : scene.poses) {
        for (auto& p : pose) {
          const Cell c = cell_of(*p, coarse);
          p = Point{c.col * coarse + coarse / 2.0, c.row * coarse + coarse / 2.0};
        }
      }
    }
    const auto fields = gen_synthetic(scene, config.grid, config.stride, {}, static_cast<std::uint64_t>(seed));
    auto project = [&](int kp) {
      return coarse_project(fields[static_cast<std::size_t>(kp)], coarse, config.kept_rings, config.grid);
    };
    const JointTable joint = joint_table(project(elbow), project(shoulder), ck);
    const Cell given = cell_of(*scene.poses[0][static_cast<std::size_t>(shoulder)], coarse);
    if (conditional(joint, given).argmax() == cell_of(*scene.poses[0][static_cast<std::size_t>(elbow)], coarse)) ++hits;
  }
  return hits;
}

Outcome conditional_suppression() {
  const int snapped = suppression_hits(true, 100);
  const int raw = suppression_hits(false, 100);
  char buf[200];
  std::snprintf(buf, sizeof buf, "cell-centred poses %d/100 exact; unsnapped poses %d/100 exact", snapped, raw);
  return {snapped >= 99, buf};
}

Outcome folding_identity() {
  std::mt19937_64 rng(1004);
  int failures = 0;
  int cases = 0;
  for (; cases < 500; ++cases) {
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
        const double pair = ui[static_cast<std::size_t>(a)] + uj[static_cast<std::size_t>(b)];
        lhs = std::min(lhs, pair + folded(a, b));
        const double mr = (a / cols + b / cols) / 2.0;
        const double mc = (a % cols + b % cols) / 2.0;
        for (int l = 0; l < n; ++l) {
          if (l / cols != static_cast<int>(std::floor(mr + 0.5)) || l % cols != static_cast<int>(std::floor(mc + 0.5))) continue;
          rhs = std::min(rhs, pair + ul(l / cols, l % cols) + pil(a, l) + plj(l, b));
        }
      }
    }
    if (lhs != rhs) ++failures;
  }
  return {failures == 0, std::to_string(cases - failures) + "/" + std::to_string(cases) + " instances equal"};
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

Outcome trws_exactness() {
  std::mt19937_64 rng(1005);
  int exact = 0;
  for (int t = 0; t < 200; ++t) {
    const EnergyModel m = support::random_tree(rng, 6, 8);
    const Labeling fast = trws_solve(m);
    if (fast.energy == brute_force_map(m).energy && fast.energy == support::oracle_min_energy(m)) ++exact;
  }
  int bound_ok = 0;
  int suboptimal = 0;
  double worst_gap = 0.0;
  double worst_true_gap = 0.0;
  for (int t = 0; t < 200; ++t) {
    const EnergyModel m = random_loopy(rng, support::rand_int(rng, 3, 6), support::rand_int(rng, 2, 5));
    const Labeling l = trws_solve(m);
    const double best = support::oracle_min_energy(m);
    if (l.energy >= l.lower_bound && l.lower_bound <= best + 1e-9) ++bound_ok;
    if (l.energy > best + 1e-9) ++suboptimal;
    worst_gap = std::max(worst_gap, l.energy - l.lower_bound);
    worst_true_gap = std::max(worst_true_gap, l.energy - best);
  }
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "trees %d/200 exact; loopy bound holds %d/200, worst energy-bound gap %.4g, "
                "worst gap to optimum %.4g, suboptimal %d/200",
                exact, bound_ok, worst_gap, worst_true_gap, suboptimal);
  return {exact == 200 && bound_ok == 200, buf};
}

Outcome synthetic_recovery() {
  const RunConfig config;
  auto run = [&](double noise, int seeds, double* slowest) {
    std::vector<KeypointSet> pred;
    std::vector<Annotation> truth;
    for (int seed = 0; seed < seeds; ++seed) {
      const auto s = static_cast<std::uint64_t>(seed);
      const SyntheticScene scene = random_scene(s);
      const auto t0 = Clock::now();
      const auto fields = gen_synthetic(scene, config.grid, config.stride, {noise, 0.0}, s);
      pred.push_back(predict(fields, std::nullopt, config).locations());
      truth.push_back(annotate(scene.poses[0]));
      const std::vector<KeypointSet> one{pred.back()};
      const std::vector<Annotation> one_truth{truth.back()};
      pckh(one, one_truth);
      *slowest = std::max(*slowest, seconds_since(t0));
    }
    return pckh(pred, truth).mean;
  };
  double slowest = 0.0;
  const double clean = run(0.0, 100, &slowest);
  const double noisy = run(0.25, 100, &slowest);
  char buf[200];
  std::snprintf(buf, sizeof buf, "PCKh@0.5 noiseless %.2f%%, 25%% label noise %.2f%%; slowest sample %.2fs", 100 * clean,
                100 * noisy, slowest);
  return {clean == 1.0 && noisy >= 0.95 && slowest < 60.0, buf};
}

Outcome kernel_conformance() {
  const LogPolarGrid g;
  const VoteKernel k = build_kernel(g, default_kernel_size(g), default_kernel_size(g));
  bool shape = k.rows() == 65 && k.cols() == 65 && k.channels() == 50;
  std::vector<double> sums(50, 0.0);
  int partition_errors = 0;
  for (int r = 0; r < k.rows() && shape; ++r) {
    for (int c = 0; c < k.cols(); ++c) {
      int owners = 0;
      for (int ch = 0; ch < 50; ++ch) {
        const double w = k.weight(r, c, ch);
        sums[static_cast<std::size_t>(ch)] += w;
        if (w != 0.0) ++owners;
      }
      const int dr = r - 32;
      const int dc = c - 32;
      const bool inside = dr * dr + dc * dc < 32 * 32;
      if (owners != (inside ? 1 : 0)) ++partition_errors;
      if (inside && k.channel_at(r, c) != support::oracle_bin({dr, dc}, g)) ++partition_errors;
    }
  }
  double worst = 0.0;
  int populated = 0;
  for (int ch = 1; ch < 50; ++ch) {
    if (sums[static_cast<std::size_t>(ch)] == 0.0) continue;
    ++populated;
    worst = std::max(worst, std::abs(sums[static_cast<std::size_t>(ch)] - 1.0));
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%dx%dx%d, %d populated channels, max |sum-1| %.3g, partition errors %d", k.rows(),
                k.cols(), k.channels(), populated, worst, partition_errors);
  return {shape && populated == 49 && worst <= 1e-12 && sums[0] == 0.0 && partition_errors == 0, buf};
}

Outcome metric_definitions() {
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };

  Annotation box;
  box.keypoints.resize(16);
  for (int i = 0; i < 16; ++i) box.keypoints[static_cast<std::size_t>(i)] = Point{100.0 + 7.0 * i, 50.0 + 11.0 * i};
  box.visible.assign(16, true);
  box.head_rect = std::array<double, 4>{10.0, 10.0, 40.0, 50.0};  // head segment 30 px
  const std::vector<Annotation> gt{box};
  expect(*head_length(box) == 30.0, "head segment");

  KeypointSet shifted = box.keypoints;
  for (auto& p : shifted) *p = *p + Point{9.0, 12.0};  // 15 px
  const std::vector<KeypointSet> at_limit{shifted};
  expect(pckh(at_limit, gt, 0.5).mean == 1.0, "pckh inclusive boundary");
  expect(pckh(at_limit, gt, 0.49).mean == 0.0, "pckh just outside");

  Annotation limb = box;
  limb.keypoints[1] = Point{0.0, 0.0};
  limb.keypoints[0] = Point{30.0, 40.0};  // 50 px lower leg
  std::size_t lower_leg = 0;
  for (std::size_t i = 0; i < pcp_limbs().size(); ++i) {
    const auto& l = pcp_limbs()[i];
    if ((l.a == 1 && l.b == 0) || (l.a == 0 && l.b == 1)) lower_leg = i;
  }
  const std::vector<Annotation> lgt{limb};
  KeypointSet half = limb.keypoints;
  *half[0] = *half[0] + Point{15.0, 20.0};  // exactly 25 px
  const std::vector<KeypointSet> half_pred{half};
  expect(pcp(half_pred, lgt).rate[lower_leg] == 1.0, "pcp inclusive half limb");
  KeypointSet over = limb.keypoints;
  *over[0] = *over[0] + Point{30.0, 0.0};
  const std::vector<KeypointSet> over_pred{over};
  expect(pcp(over_pred, lgt).rate[lower_leg] == 0.0, "pcp beyond half limb");

  std::mt19937_64 rng(1008);
  std::vector<Annotation> truth;
  std::vector<KeypointSet> pred;
  for (int i = 0; i < 40; ++i) {
    truth.push_back(annotate(random_pose(rng, {250.0, 250.0})));
    KeypointSet p = truth.back().keypoints;
    for (auto& k : p) *k = *k + Point{support::rand_real(rng, -30.0, 30.0), support::rand_real(rng, -30.0, 30.0)};
    pred.push_back(p);
  }
  const PckhResult base = pckh(pred, truth);
  const PcpResult base_pcp = pcp(pred, truth);
  for (double f : {0.5, 2.0, 3.7}) {
    std::vector<Annotation> t2 = truth;
    std::vector<KeypointSet> p2 = pred;
    for (std::size_t i = 0; i < t2.size(); ++i) {
      for (auto& k : t2[i].keypoints) *k = f * *k;
      for (double& v : *t2[i].head_rect) v *= f;
      for (auto& k : p2[i]) *k = f * *k;
    }
    expect(pckh(p2, t2).rate == base.rate, "pckh scale invariance");
    expect(pcp(p2, t2).rate == base_pcp.rate, "pcp scale invariance");
  }

  std::vector<double> alphas;
  for (int i = 0; i <= 50; ++i) alphas.push_back(i * 0.02);
  const auto sweep = pckh_sweep(pred, truth, alphas);
  bool monotone = sweep.size() == alphas.size();
  for (std::size_t i = 1; i < sweep.size(); ++i) monotone = monotone && sweep[i].second >= sweep[i - 1].second;
  expect(monotone, "sweep monotone");

  std::string detail = failed.empty() ? "boundaries, scale invariance and a 51-point sweep hold" : "failed:";
  for (const auto& f : failed) detail += " " + f + ";";
  return {failed.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"AC1 aggregation oracle", aggregation_oracle},
      {"AC2 consensus oracle", consensus_oracle},
      {"AC3 conditional suppression", conditional_suppression},
      {"AC4 midpoint folding identity", folding_identity},
      {"AC5 TRW-S exact on trees", trws_exactness},
      {"AC6 synthetic recovery", synthetic_recovery},
      {"AC7 kernel conformance", kernel_conformance},
      {"AC8 metric definitions", metric_definitions},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
