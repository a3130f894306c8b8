#include "votepose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "votepose/error.hpp"

namespace votepose {

std::optional<double> head_length(const Annotation& a) {
  if (!a.head_rect) return std::nullopt;
  const auto& r = *a.head_rect;
  const double len = 0.6 * std::hypot(r[2] - r[0], r[3] - r[1]);
  if (!(len > 0.0)) return std::nullopt;
  return len;
}

std::array<double, 4> head_rect_for(Point center, double length) {
  const double half = length / (0.6 * std::sqrt(2.0)) / 2.0;
  return {center.x - half, center.y - half, center.x + half, center.y + half};
}

namespace {

void check_sizes(std::span<const KeypointSet> predictions, std::span<const Annotation> truth) {
  if (predictions.size() != truth.size()) throw InvalidArgument("predictions and annotations are not paired");
}

const std::optional<Point>& keypoint(const KeypointSet& set, int id) {
  static const std::optional<Point> none;
  return static_cast<std::size_t>(id) < set.size() ? set[static_cast<std::size_t>(id)] : none;
}

double ratio(int hits, int total) {
  return total > 0 ? static_cast<double>(hits) / total : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

PckhResult pckh(std::span<const KeypointSet> predictions, std::span<const Annotation> truth, double alpha) {
  check_sizes(predictions, truth);
  PckhResult out;
  out.alpha = alpha;
  std::vector<int> hits(kNumAnnotated, 0);
  out.total.assign(kNumAnnotated, 0);
  for (std::size_t s = 0; s < truth.size(); ++s) {
    const auto len = head_length(truth[s]);
    if (!len) {
      ++out.excluded;
      continue;
    }
    for (int k = 0; k < kNumAnnotated; ++k) {
      const auto& gt = keypoint(truth[s].keypoints, k);
      if (!gt) continue;
      ++out.total[static_cast<std::size_t>(k)];
      const auto& p = keypoint(predictions[s], k);
      if (p && distance(*p, *gt) <= alpha * *len) ++hits[static_cast<std::size_t>(k)];
    }
  }
  for (int k = 0; k < kNumAnnotated; ++k) {
    out.rate.push_back(ratio(hits[static_cast<std::size_t>(k)], out.total[static_cast<std::size_t>(k)]));
  }

  static const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
      {"head", {"head_top", "upper_neck"}}, {"shoulder", {"r_shoulder", "l_shoulder"}},
      {"elbow", {"r_elbow", "l_elbow"}},    {"wrist", {"r_wrist", "l_wrist"}},
      {"hip", {"r_hip", "l_hip"}},          {"knee", {"r_knee", "l_knee"}},
      {"ankle", {"r_ankle", "l_ankle"}}};
  const auto& names = annotated_names();
  double sum = 0.0;
  int used = 0;
  for (const auto& [group, members] : groups) {
    int h = 0;
    int t = 0;
    for (const auto& m : members) {
      for (int k = 0; k < kNumAnnotated; ++k) {
        if (names[static_cast<std::size_t>(k)] != m) continue;
        h += hits[static_cast<std::size_t>(k)];
        t += out.total[static_cast<std::size_t>(k)];
      }
    }
    out.group_names.push_back(group);
    out.group_rate.push_back(ratio(h, t));
    if (t > 0) {
      sum += out.group_rate.back();
      ++used;
    }
  }
  out.mean = used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN();
  return out;
}

std::vector<std::pair<double, double>> pckh_sweep(std::span<const KeypointSet> predictions,
                                                  std::span<const Annotation> truth, std::span<const double> alphas) {
  std::vector<std::pair<double, double>> out;
  for (double a : alphas) out.emplace_back(a, pckh(predictions, truth, a).mean);
  return out;
}

const std::vector<Limb>& pcp_limbs() {
  static const std::vector<Limb> limbs = [] {
    const Skeleton sk = Skeleton::standard();
    auto limb = [&](std::string name, std::string group, const char* a, const char* b) {
      return Limb{std::move(name), std::move(group), sk.find(a), sk.find(b)};
    };
    return std::vector<Limb>{
        limb("torso", "torso", "thorax", "pelvis"),
        limb("r_upper_leg", "upper_leg", "r_hip", "r_knee"),
        limb("l_upper_leg", "upper_leg", "l_hip", "l_knee"),
        limb("r_lower_leg", "lower_leg", "r_knee", "r_ankle"),
        limb("l_lower_leg", "lower_leg", "l_knee", "l_ankle"),
        limb("r_upper_arm", "upper_arm", "r_shoulder", "r_elbow"),
        limb("l_upper_arm", "upper_arm", "l_shoulder", "l_elbow"),
        limb("r_forearm", "forearm", "r_elbow", "r_wrist"),
        limb("l_forearm", "forearm", "l_elbow", "l_wrist"),
        limb("head", "head", "upper_neck", "head_top"),
    };
  }();
  return limbs;
}

PcpResult pcp(std::span<const KeypointSet> predictions, std::span<const Annotation> truth) {
  check_sizes(predictions, truth);
  const auto& limbs = pcp_limbs();
  PcpResult out;
  std::vector<int> hits(limbs.size(), 0);
  out.total.assign(limbs.size(), 0);
  for (std::size_t s = 0; s < truth.size(); ++s) {
    for (std::size_t l = 0; l < limbs.size(); ++l) {
      const auto& ga = keypoint(truth[s].keypoints, limbs[l].a);
      const auto& gb = keypoint(truth[s].keypoints, limbs[l].b);
      if (!ga || !gb || !(distance(*ga, *gb) > 0.0)) {
        ++out.excluded;
        continue;
      }
      ++out.total[l];
      const double tol = 0.5 * distance(*ga, *gb);
      const auto& pa = keypoint(predictions[s], limbs[l].a);
      const auto& pb = keypoint(predictions[s], limbs[l].b);
      if (pa && pb && distance(*pa, *ga) <= tol && distance(*pb, *gb) <= tol) ++hits[l];
    }
  }
  double sum = 0.0;
  int used = 0;
  for (std::size_t l = 0; l < limbs.size(); ++l) {
    out.rate.push_back(ratio(hits[l], out.total[l]));
    if (out.total[l] > 0) {
      sum += out.rate.back();
      ++used;
    }
  }
  for (const auto& limb : limbs) {
    if (std::find(out.group_names.begin(), out.group_names.end(), limb.group) != out.group_names.end()) continue;
    int h = 0;
    int t = 0;
    for (std::size_t l = 0; l < limbs.size(); ++l) {
      if (limbs[l].group != limb.group) continue;
      h += hits[l];
      t += out.total[l];
    }
    out.group_names.push_back(limb.group);
    out.group_rate.push_back(ratio(h, t));
  }
  out.mean = used > 0 ? sum / used : std::numeric_limits<double>::quiet_NaN();
  return out;
}

namespace {

std::string percent(double v) {
  if (std::isnan(v)) return "    -";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%5.1f", 100.0 * v);
  return buf;
}

}  // namespace

std::string format_report(const PckhResult& pk, const PcpResult& pc) {
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "PCKh@%g", pk.alpha);
  out << buf << "\n";
  for (std::size_t g = 0; g < pk.group_names.size(); ++g) {
    std::snprintf(buf, sizeof buf, "  %-10s %s\n", pk.group_names[g].c_str(), percent(pk.group_rate[g]).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "  %-10s %s\n", "mean", percent(pk.mean).c_str());
  out << buf;
  if (pk.excluded > 0) out << "  excluded samples without head segment: " << pk.excluded << "\n";
  out << "PCP\n";
  for (std::size_t g = 0; g < pc.group_names.size(); ++g) {
    std::snprintf(buf, sizeof buf, "  %-10s %s\n", pc.group_names[g].c_str(), percent(pc.group_rate[g]).c_str());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "  %-10s %s\n", "mean", percent(pc.mean).c_str());
  out << buf;
  if (pc.excluded > 0) out << "  excluded limbs: " << pc.excluded << "\n";
  return out.str();
}

std::string format_kv_report(const PckhResult& pk, const PcpResult& pc,
                             std::span<const std::pair<double, double>> sweep) {
  std::ostringstream out;
  out.precision(17);
  out << "pckh.alpha=" << pk.alpha << "\n";
  for (std::size_t g = 0; g < pk.group_names.size(); ++g) out << "pckh." << pk.group_names[g] << "=" << pk.group_rate[g] << "\n";
  const auto& names = annotated_names();
  for (std::size_t k = 0; k < pk.rate.size(); ++k) out << "pckh.keypoint." << names[k] << "=" << pk.rate[k] << "\n";
  out << "pckh.mean=" << pk.mean << "\n";
  out << "pckh.excluded=" << pk.excluded << "\n";
  for (std::size_t g = 0; g < pc.group_names.size(); ++g) out << "pcp." << pc.group_names[g] << "=" << pc.group_rate[g] << "\n";
  const auto& limbs = pcp_limbs();
  for (std::size_t l = 0; l < pc.rate.size(); ++l) out << "pcp.limb." << limbs[l].name << "=" << pc.rate[l] << "\n";
  out << "pcp.mean=" << pc.mean << "\n";
  out << "pcp.excluded=" << pc.excluded << "\n";
  for (const auto& [a, r] : sweep) out << "sweep." << a << "=" << r << "\n";
  return out.str();
}

}  // namespace votepose
