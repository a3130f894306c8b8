#include "votepose/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "votepose/error.hpp"

namespace votepose {

const std::vector<std::string>& annotated_names() {
  static const std::vector<std::string> names = {
      "r_ankle", "r_knee",     "r_hip",    "l_hip",      "l_knee",     "l_ankle",   "pelvis",     "thorax",
      "upper_neck", "head_top", "r_wrist", "r_elbow",   "r_shoulder", "l_shoulder", "l_elbow", "l_wrist"};
  return names;
}

Skeleton Skeleton::standard() {
  Skeleton s;
  const auto& names = annotated_names();
  for (int i = 0; i < kNumAnnotated; ++i) s.keypoints.push_back({i, names[static_cast<std::size_t>(i)]});

  auto id = [&](std::string_view n) { return s.find(n); };
  auto stage = [&](std::string_view n, int st) { s.keypoints[static_cast<std::size_t>(id(n))].stage = st; };
  for (auto n : {"head_top", "upper_neck", "thorax", "pelvis"}) stage(n, 1);
  for (auto n : {"r_shoulder", "l_shoulder", "r_hip", "l_hip"}) stage(n, 2);
  for (auto n : {"r_elbow", "l_elbow", "r_wrist", "l_wrist", "r_knee", "l_knee", "r_ankle", "l_ankle"}) stage(n, 3);

  auto midpoint = [&](std::string name, std::string_view a, std::string_view b) {
    const int k = static_cast<int>(s.keypoints.size());
    s.keypoints.push_back({k, std::move(name), KeypointKind::Midpoint, id(a), id(b)});
    return k;
  };
  auto hand = [&](std::string name, std::string_view elbow, std::string_view wrist) {
    const int k = static_cast<int>(s.keypoints.size());
    s.keypoints.push_back({k, std::move(name), KeypointKind::Hand, id(elbow), id(wrist)});
    return k;
  };

  const int head_mid = midpoint("head_mid", "head_top", "upper_neck");
  const int mid_body = midpoint("mid_body", "thorax", "pelvis");
  const int r_clavicle = midpoint("r_clavicle_mid", "thorax", "r_shoulder");
  const int l_clavicle = midpoint("l_clavicle_mid", "thorax", "l_shoulder");
  const int r_upper_arm = midpoint("r_upper_arm_mid", "r_shoulder", "r_elbow");
  const int l_upper_arm = midpoint("l_upper_arm_mid", "l_shoulder", "l_elbow");
  const int r_forearm = midpoint("r_forearm_mid", "r_elbow", "r_wrist");
  const int l_forearm = midpoint("l_forearm_mid", "l_elbow", "l_wrist");
  const int r_thigh = midpoint("r_thigh_mid", "r_hip", "r_knee");
  const int l_thigh = midpoint("l_thigh_mid", "l_hip", "l_knee");
  const int r_shin = midpoint("r_shin_mid", "r_knee", "r_ankle");
  const int l_shin = midpoint("l_shin_mid", "l_knee", "l_ankle");
  const int r_hand = hand("r_hand", "r_elbow", "r_wrist");
  const int l_hand = hand("l_hand", "l_elbow", "l_wrist");

  s.edges = {
      {id("head_top"), id("upper_neck"), {head_mid}},
      {id("upper_neck"), id("thorax"), {}},
      {id("thorax"), id("pelvis"), {mid_body}},
      {id("thorax"), id("r_shoulder"), {r_clavicle}},
      {id("thorax"), id("l_shoulder"), {l_clavicle}},
      {id("r_shoulder"), id("r_elbow"), {r_upper_arm}},
      {id("l_shoulder"), id("l_elbow"), {l_upper_arm}},
      {id("r_elbow"), id("r_wrist"), {r_forearm, r_hand}},
      {id("l_elbow"), id("l_wrist"), {l_forearm, l_hand}},
      {id("pelvis"), id("r_hip"), {}},
      {id("pelvis"), id("l_hip"), {}},
      {id("r_hip"), id("r_knee"), {r_thigh}},
      {id("l_hip"), id("l_knee"), {l_thigh}},
      {id("r_knee"), id("r_ankle"), {r_shin}},
      {id("l_knee"), id("l_ankle"), {l_shin}},
  };
  s.derive_synthetic_stages();
  return s;
}

int Skeleton::find(std::string_view name) const {
  for (const auto& k : keypoints) {
    if (k.name == name) return k.id;
  }
  throw InvalidArgument("unknown keypoint '" + std::string(name) + "'");
}

std::vector<int> Skeleton::annotated() const {
  std::vector<int> out;
  for (const auto& k : keypoints) {
    if (k.kind == KeypointKind::Annotated) out.push_back(k.id);
  }
  return out;
}

void Skeleton::derive_synthetic_stages() {
  for (auto& k : keypoints) {
    if (k.kind == KeypointKind::Annotated) continue;
    k.stage = std::max(keypoints.at(static_cast<std::size_t>(k.parent_a)).stage,
                       keypoints.at(static_cast<std::size_t>(k.parent_b)).stage);
  }
}

void Skeleton::validate() const {
  int counts[3] = {0, 0, 0};
  for (std::size_t i = 0; i < keypoints.size(); ++i) {
    const auto& k = keypoints[i];
    if (k.id != static_cast<int>(i)) throw InvalidArgument("keypoint ids must be dense and ordered");
    ++counts[static_cast<int>(k.kind)];
    if (k.stage < 1 || k.stage > num_stages) throw InvalidArgument("keypoint '" + k.name + "' has no valid stage");
    if (k.kind != KeypointKind::Annotated) {
      if (k.parent_a < 0 || k.parent_b < 0 || k.parent_a >= size() || k.parent_b >= size() ||
          keypoints[static_cast<std::size_t>(k.parent_a)].kind != KeypointKind::Annotated ||
          keypoints[static_cast<std::size_t>(k.parent_b)].kind != KeypointKind::Annotated) {
        throw InvalidArgument("synthetic keypoint '" + k.name + "' needs two annotated parents");
      }
    }
  }
  if (counts[0] != kNumAnnotated || counts[1] != 12 || counts[2] != 2) {
    throw InvalidArgument("skeleton must have 16 annotated, 12 midpoint and 2 hand keypoints");
  }

  std::vector<int> parent(keypoints.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) v = parent[static_cast<std::size_t>(v)];
    return v;
  };
  auto join = [&](int a, int b) { parent[static_cast<std::size_t>(root(a))] = root(b); };
  for (const auto& e : edges) {
    if (e.from < 0 || e.to < 0 || e.from >= size() || e.to >= size() || e.from == e.to) {
      throw InvalidArgument("edge references an invalid keypoint");
    }
    if ((*this)[e.from].kind != KeypointKind::Annotated || (*this)[e.to].kind != KeypointKind::Annotated) {
      throw InvalidArgument("edge endpoints must be annotated keypoints");
    }
    join(e.from, e.to);
    for (int v : e.via) {
      if (v < 0 || v >= size()) throw InvalidArgument("edge folds an invalid keypoint");
      const auto& spec = (*this)[v];
      const bool same = (spec.parent_a == e.from && spec.parent_b == e.to) ||
                        (spec.parent_a == e.to && spec.parent_b == e.from);
      if (spec.kind == KeypointKind::Annotated || !same) {
        throw InvalidArgument("'" + spec.name + "' cannot be folded into edge " + (*this)[e.from].name + "-" +
                              (*this)[e.to].name);
      }
      join(v, e.from);
    }
  }
  const int r0 = root(0);
  for (const auto& k : keypoints) {
    if (root(k.id) != r0) throw InvalidArgument("edge set does not connect keypoint '" + k.name + "'");
  }
}

Point synthetic_point(const KeypointSpec& spec, Point a, Point b) {
  switch (spec.kind) {
    case KeypointKind::Midpoint:
      return 0.5 * (a + b);
    case KeypointKind::Hand:
      return b + kHandExtrapolation * (b - a);
    case KeypointKind::Annotated:
      break;
  }
  throw InvalidArgument("annotated keypoints have no synthetic rule");
}

Cell synthetic_cell(const KeypointSpec& spec, Cell a, Cell b) {
  const Point p = synthetic_point(spec, Point{double(a.col), double(a.row)}, Point{double(b.col), double(b.row)});
  return {round_to_cell(p.y), round_to_cell(p.x)};
}

KeypointSet augment_keypoints(const KeypointSet& annotated, const Skeleton& skeleton) {
  const auto base = skeleton.annotated();
  if (annotated.size() < base.size()) throw InvalidArgument("expected one entry per annotated keypoint");
  KeypointSet out(static_cast<std::size_t>(skeleton.size()));
  for (int id : base) out[static_cast<std::size_t>(id)] = annotated[static_cast<std::size_t>(id)];
  for (const auto& k : skeleton.keypoints) {
    if (k.kind == KeypointKind::Annotated) continue;
    const auto& a = out[static_cast<std::size_t>(k.parent_a)];
    const auto& b = out[static_cast<std::size_t>(k.parent_b)];
    if (a && b) out[static_cast<std::size_t>(k.id)] = synthetic_point(k, *a, *b);
  }
  return out;
}

}  // namespace votepose
