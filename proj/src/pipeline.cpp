#include "votepose/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <numeric>
#include <set>
#include <string>

#include "votepose/error.hpp"
#include "votepose/parallel.hpp"

namespace votepose {

const JointTable* InferenceTerms::find_joint(int a, int b, bool& transposed) const {
  if (auto it = joints.find({a, b}); it != joints.end()) {
    transposed = false;
    return &it->second;
  }
  if (auto it = joints.find({b, a}); it != joints.end()) {
    transposed = true;
    return &it->second;
  }
  return nullptr;
}

KeypointSet PoseEstimate::locations() const {
  KeypointSet out;
  out.reserve(keypoints.size());
  for (const auto& k : keypoints) out.emplace_back(k.position);
  return out;
}

namespace {

// Pairs linked when the synthetic keypoint `v` is folded into `edge`.
std::vector<std::pair<int, int>> fold_links(const Skeleton& sk, const SkeletonEdge& edge, int v) {
  const KeypointSpec& spec = sk[v];
  if (spec.kind == KeypointKind::Hand) {
    // A hand only talks to its wrist.
    return spec.parent_b == edge.to ? std::vector<std::pair<int, int>>{{v, edge.to}}
                                    : std::vector<std::pair<int, int>>{{edge.from, v}};
  }
  return {{edge.from, v}, {v, edge.to}};
}

int edge_stage(const Skeleton& sk, const SkeletonEdge& e) { return std::max(sk[e.from].stage, sk[e.to].stage); }

}  // namespace

std::vector<std::pair<int, int>> required_joints(const Skeleton& skeleton) {
  std::set<std::pair<int, int>> seen;
  std::vector<std::pair<int, int>> out;
  auto add = [&](std::pair<int, int> p) {
    if (seen.count(p) || seen.count({p.second, p.first})) return;
    seen.insert(p);
    out.push_back(p);
  };
  for (const auto& e : skeleton.edges) {
    if (e.via.empty()) add({e.from, e.to});
    for (int v : e.via) {
      for (auto p : fold_links(skeleton, e, v)) add(p);
    }
  }
  return out;
}

InferenceTerms build_terms(std::span<const VoterField> fields, const std::optional<PersonHint>& hint,
                           const RunConfig& config, PriorSet priors) {
  config.validate();
  const Skeleton& sk = config.skeleton;
  const int n = sk.size();
  if (fields.empty()) throw InvalidArgument("no voter fields given");

  std::vector<const VoterField*> by_id(static_cast<std::size_t>(n), nullptr);
  const VoterField& first = fields.front();
  for (const auto& f : fields) {
    if (f.keypoint < 0 || f.keypoint >= n) {
      throw InvalidArgument("voter field for unknown keypoint " + std::to_string(f.keypoint));
    }
    if (by_id[static_cast<std::size_t>(f.keypoint)] != nullptr) {
      throw InvalidArgument("two voter fields for keypoint " + std::to_string(f.keypoint));
    }
    if (f.rows != first.rows || f.cols != first.cols || f.stride != config.stride ||
        f.num_classes != config.grid.num_classes()) {
      throw InvalidArgument("voter field of keypoint " + sk[f.keypoint].name + " does not match the configuration");
    }
    by_id[static_cast<std::size_t>(f.keypoint)] = &f;
  }
  for (int k = 0; k < n; ++k) {
    if (by_id[static_cast<std::size_t>(k)] == nullptr) throw InvalidArgument("missing voter field for " + sk[k].name);
  }

  InferenceTerms terms;
  terms.image_rows = first.rows;
  terms.image_cols = first.cols;
  terms.priors = std::move(priors);

  const VoteKernel kernel = build_kernel(config.grid, config.kernel_size, config.kernel_size);
  terms.fine.resize(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), config.threads,
               [&](std::size_t k) { terms.fine[k] = aggregate(*by_id[k], kernel); });

  if (hint) {
    const Cell center{static_cast<int>(std::floor(hint->center.y / config.stride)),
                      static_cast<int>(std::floor(hint->center.x / config.stride))};
    for (const auto& spec : sk.keypoints) {
      if (spec.name != "mid_body") continue;
      auto& h = terms.fine[static_cast<std::size_t>(spec.id)];
      h = apply_person_mask(h, center, hint->scale / config.stride, config.mask_sigma_factor);
    }
  }

  const int pool = config.pool();
  const VoteKernel ck = coarse_kernel(config.grid, config.kept_rings, pool);
  const int crows = (first.rows + pool - 1) / pool;
  const int ccols = (first.cols + pool - 1) / pool;
  const Cell corigin{-ck.half_rows(), -ck.half_cols()};
  terms.coarse.resize(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), config.threads, [&](std::size_t k) {
    terms.coarse[k] = pool_heatmap(terms.fine[k], pool, corigin, crows + ck.rows() - 1, ccols + ck.cols() - 1);
  });

  const auto pairs = required_joints(sk);
  std::vector<int> needed;
  for (auto [a, b] : pairs) {
    needed.push_back(a);
    needed.push_back(b);
  }
  std::sort(needed.begin(), needed.end());
  needed.erase(std::unique(needed.begin(), needed.end()), needed.end());
  std::vector<CoarseField> coarse_fields(static_cast<std::size_t>(n));
  parallel_for(needed.size(), config.threads, [&](std::size_t i) {
    const int k = needed[i];
    coarse_fields[static_cast<std::size_t>(k)] =
        coarse_project(*by_id[static_cast<std::size_t>(k)], config.coarse_factor, config.kept_rings, config.grid);
  });
  std::vector<JointTable> tables(pairs.size());
  parallel_for(pairs.size(), config.threads, [&](std::size_t i) {
    tables[i] = joint_table(coarse_fields[static_cast<std::size_t>(pairs[i].first)],
                            coarse_fields[static_cast<std::size_t>(pairs[i].second)], ck);
  });
  for (std::size_t i = 0; i < pairs.size(); ++i) terms.joints.emplace(pairs[i], std::move(tables[i]));
  return terms;
}

namespace {

class StageBuilder {
 public:
  StageBuilder(const InferenceTerms& terms, const RunConfig& config) : terms_(terms), config_(config) {}

  // Top-k coarse cells by heatmap mass; ties keep row-major order.
  std::vector<Cell> prune(int keypoint) const {
    const Heatmap& h = coarse(keypoint);
    std::vector<Cell> cells = h.cells();
    std::stable_sort(cells.begin(), cells.end(), [&](Cell a, Cell b) { return h.at(a) > h.at(b); });
    if (static_cast<int>(cells.size()) > config_.prune_k) cells.resize(static_cast<std::size_t>(config_.prune_k));
    return cells;
  }

  PairCostFn pair(int a, int b) {
    PairCost pc;
    pc.joint = terms_.find_joint(a, b, pc.joint_transposed);
    scratch_.emplace_back();
    pc.prior = find_prior(terms_.priors, a, b, scratch_.back());
    pc.lambda = config_.lambda;
    pc.epsilon = config_.epsilon;
    return pc;
  }

  CellCostFn synthetic_unary(int keypoint) const {
    const Heatmap& h = coarse(keypoint);
    const double total = h.total();
    const double floor_cost = -std::log(config_.epsilon);
    auto cost = std::make_shared<Grid<double>>(h.values.rows(), h.values.cols(), floor_cost);
    if (total > 0.0) {
      for (std::size_t i = 0; i < cost->size(); ++i) {
        cost->data()[i] = -std::log(std::max(h.values.data()[i] / total, config_.epsilon));
      }
    }
    const Cell origin = h.origin;
    return [cost, origin, floor_cost](Cell x) {
      const Cell d = x - origin;
      return cost->contains(d.row, d.col) ? (*cost)(d.row, d.col) : floor_cost;
    };
  }

  Grid<double> edge_cost(const SkeletonEdge& e, std::span<const Cell> li, std::span<const Cell> lj) {
    const Skeleton& sk = config_.skeleton;
    if (e.via.empty()) {
      const PairCostFn pc = pair(e.from, e.to);
      Grid<double> out(static_cast<int>(li.size()), static_cast<int>(lj.size()));
      for (int a = 0; a < out.rows(); ++a) {
        for (int b = 0; b < out.cols(); ++b) out(a, b) = pc(li[static_cast<std::size_t>(a)], lj[static_cast<std::size_t>(b)]);
      }
      return out;
    }
    Grid<double> total(static_cast<int>(li.size()), static_cast<int>(lj.size()));
    for (int v : e.via) {
      const KeypointSpec& spec = sk[v];
      const bool forward = spec.parent_a == e.from;
      auto place = [&spec, forward](Cell xi, Cell xj) {
        return forward ? synthetic_cell(spec, xi, xj) : synthetic_cell(spec, xj, xi);
      };
      PairCostFn link_i;
      PairCostFn link_j;
      for (auto [a, b] : fold_links(sk, e, v)) {
        if (a == e.from) link_i = pair(a, b);
        else link_j = pair(a, b);
      }
      const Grid<double> folded = fold_synthetic(li, lj, place, synthetic_unary(v), link_i, link_j);
      for (std::size_t i = 0; i < total.size(); ++i) total.data()[i] += folded.data()[i];
    }
    return total;
  }

  const Heatmap& coarse(int keypoint) const { return terms_.coarse.at(static_cast<std::size_t>(keypoint)); }

 private:
  const InferenceTerms& terms_;
  const RunConfig& config_;
  std::deque<PriorTable> scratch_;
};

}  // namespace

EnergyModel build_stage_model(const InferenceTerms& terms, const RunConfig& config, int stage,
                              const std::map<int, Cell>& solved, std::vector<int>& node_keypoints) {
  const Skeleton& sk = config.skeleton;
  if (static_cast<int>(terms.coarse.size()) != sk.size()) throw InvalidArgument("inference terms do not match the skeleton");
  StageBuilder builder(terms, config);

  std::set<int> ids;
  std::vector<const SkeletonEdge*> edges;
  for (const auto& e : sk.edges) {
    if (edge_stage(sk, e) != stage) continue;
    edges.push_back(&e);
    ids.insert(e.from);
    ids.insert(e.to);
  }
  for (int k : sk.annotated()) {
    if (sk[k].stage == stage) ids.insert(k);
  }

  EnergyModel model;
  model.lambda = config.lambda;
  model.epsilon = config.epsilon;
  node_keypoints.assign(ids.begin(), ids.end());
  std::map<int, int> node_of;
  for (int k : node_keypoints) {
    node_of[k] = static_cast<int>(model.nodes.size());
    if (auto it = solved.find(k); it != solved.end()) {
      model.add_node({0.0}, {it->second}, k);
      continue;
    }
    if (sk[k].stage < stage) {
      throw StageError(stage, "keypoint " + sk[k].name + " belongs to an earlier stage but was not solved");
    }
    std::vector<Cell> labels = builder.prune(k);
    std::vector<double> unary;
    try {
      unary = build_unary(builder.coarse(k), labels, config.epsilon);
    } catch (const NoEvidence& e) {
      throw StageError(stage, e.what());
    }
    model.add_node(std::move(unary), std::move(labels), k);
  }
  for (const SkeletonEdge* e : edges) {
    const int a = node_of.at(e->from);
    const int b = node_of.at(e->to);
    model.add_edge(a, b, builder.edge_cost(*e, model.nodes[static_cast<std::size_t>(a)].cells,
                                           model.nodes[static_cast<std::size_t>(b)].cells));
  }
  return model;
}

namespace {

// Best fine cell inside the 3x3 coarse neighbourhood of the chosen cell.
Point refine(const Heatmap& fine, Cell coarse, int pool, int stride) {
  Cell best{-1, -1};
  double best_v = 0.0;
  for (int r = pool * (coarse.row - 1); r < pool * (coarse.row + 2); ++r) {
    for (int c = pool * (coarse.col - 1); c < pool * (coarse.col + 2); ++c) {
      const double v = fine.at({r, c});
      if (v > best_v) {
        best_v = v;
        best = {r, c};
      }
    }
  }
  if (best_v <= 0.0) {
    return {(coarse.col + 0.5) * pool * stride, (coarse.row + 0.5) * pool * stride};
  }
  return {(best.col + 0.5) * stride, (best.row + 0.5) * stride};
}

}  // namespace

PoseEstimate sequential_predict(const InferenceTerms& terms, const RunConfig& config) {
  config.validate();
  const Skeleton& sk = config.skeleton;
  PoseEstimate est;
  std::map<int, Cell> solved;
  std::map<int, double> confidence;

  for (int s = 1; s <= sk.num_stages; ++s) {
    std::vector<int> node_keypoints;
    EnergyModel model = build_stage_model(terms, config, s, solved, node_keypoints);
    if (model.nodes.empty()) continue;
    const Labeling lab = trws_solve(model, config.solver);

    StageReport report;
    report.stage = s;
    report.energy = lab.energy;
    report.lower_bound = lab.lower_bound;
    report.converged = lab.converged;
    report.iterations = lab.iterations;
    for (std::size_t i = 0; i < node_keypoints.size(); ++i) {
      const int k = node_keypoints[i];
      if (solved.count(k)) continue;
      const auto& node = model.nodes[i];
      const int label = lab.labels[i];
      solved[k] = node.cells[static_cast<std::size_t>(label)];
      confidence[k] = std::exp(-node.unary[static_cast<std::size_t>(label)]);
      report.keypoints.push_back(k);
    }
    report.model = std::move(model);
    est.stages.push_back(std::move(report));
  }

  est.keypoints.resize(static_cast<std::size_t>(sk.size()));
  for (int k : sk.annotated()) {
    auto it = solved.find(k);
    if (it == solved.end()) throw StageError(sk[k].stage, "keypoint " + sk[k].name + " was never solved");
    auto& out = est.keypoints[static_cast<std::size_t>(k)];
    out.keypoint = k;
    out.coarse = it->second;
    out.position = refine(terms.fine[static_cast<std::size_t>(k)], it->second, config.pool(), config.stride);
    out.confidence = confidence[k];
  }
  for (const auto& spec : sk.keypoints) {
    if (spec.kind == KeypointKind::Annotated) continue;
    const auto& a = est.keypoints[static_cast<std::size_t>(spec.parent_a)];
    const auto& b = est.keypoints[static_cast<std::size_t>(spec.parent_b)];
    auto& out = est.keypoints[static_cast<std::size_t>(spec.id)];
    out.keypoint = spec.id;
    out.position = synthetic_point(spec, a.position, b.position);
    out.coarse = synthetic_cell(spec, a.coarse, b.coarse);
    out.confidence = std::min(a.confidence, b.confidence);
  }
  return est;
}

PoseEstimate predict(std::span<const VoterField> fields, const std::optional<PersonHint>& hint,
                     const RunConfig& config, PriorSet priors) {
  return sequential_predict(build_terms(fields, hint, config, std::move(priors)), config);
}

}  // namespace votepose
