#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "votepose/skeleton.hpp"

namespace votepose {

/// Ground truth for one person. `keypoints` holds the 16 annotated joints.
struct Annotation {
  int person_id = 0;
  KeypointSet keypoints;
  std::vector<bool> visible;
  std::optional<std::array<double, 4>> head_rect;  // x1, y1, x2, y2
  double scale = 0.0;
  std::optional<Point> position;
};

/// MPII head-segment length: 0.6 times the head box diagonal.
std::optional<double> head_length(const Annotation& a);

/// Head box whose head length equals `length`, centered on `center`.
std::array<double, 4> head_rect_for(Point center, double length);

struct PckhResult {
  double alpha = 0.5;
  std::vector<double> rate;  // per annotated keypoint; NaN when never labeled
  std::vector<int> total;
  std::vector<std::string> group_names;
  std::vector<double> group_rate;
  double mean = 0.0;  // over the groups that have samples
  int excluded = 0;   // samples without a head segment
};

/// Keypoint correct iff its error is at most alpha * head length.
/// Unlabeled ground-truth keypoints are skipped; a missing prediction for a
/// labeled one counts as wrong.
PckhResult pckh(std::span<const KeypointSet> predictions, std::span<const Annotation> truth, double alpha = 0.5);

/// (alpha, mean rate) for each alpha.
std::vector<std::pair<double, double>> pckh_sweep(std::span<const KeypointSet> predictions,
                                                  std::span<const Annotation> truth, std::span<const double> alphas);

struct Limb {
  std::string name;
  std::string group;
  int a = 0;
  int b = 0;
};

/// Torso, head and both arms and legs split into upper and lower segments.
const std::vector<Limb>& pcp_limbs();

struct PcpResult {
  std::vector<double> rate;  // per limb
  std::vector<int> total;
  std::vector<std::string> group_names;
  std::vector<double> group_rate;
  double mean = 0.0;  // over limbs with samples
  int excluded = 0;   // zero-length or unlabeled limbs skipped
};

/// Limb correct iff both endpoint errors are at most half the limb length.
PcpResult pcp(std::span<const KeypointSet> predictions, std::span<const Annotation> truth);

/// Human-readable table.
std::string format_report(const PckhResult& pckh, const PcpResult& pcp);
/// One `key=value` per line.
std::string format_kv_report(const PckhResult& pckh, const PcpResult& pcp,
                             std::span<const std::pair<double, double>> sweep = {});

}  // namespace votepose
