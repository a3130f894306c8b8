#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "votepose/grid.hpp"

namespace votepose {

/// Location per keypoint id; empty when the keypoint is not labeled.
using KeypointSet = std::vector<std::optional<Point>>;

enum class KeypointKind { Annotated, Midpoint, Hand };

/// Hands sit on the elbow-to-wrist ray, this fraction of the forearm past the wrist.
inline constexpr double kHandExtrapolation = 0.3;

struct KeypointSpec {
  int id = 0;
  std::string name;
  KeypointKind kind = KeypointKind::Annotated;
  // Midpoint: the two endpoints. Hand: parent_a = elbow, parent_b = wrist.
  int parent_a = -1;
  int parent_b = -1;
  int stage = 1;
};

/// Pairwise term between two annotated keypoints. Synthetic keypoints listed
/// in `via` are eliminated by substituting their location as a function of
/// the two endpoints.
struct SkeletonEdge {
  int from = 0;
  int to = 0;
  std::vector<int> via;
};

struct Skeleton {
  std::vector<KeypointSpec> keypoints;
  std::vector<SkeletonEdge> edges;
  int num_stages = 3;

  /// 16 MPII joints, 12 limb midpoints and 2 hands with the default tree.
  static Skeleton standard();

  int size() const noexcept { return static_cast<int>(keypoints.size()); }
  const KeypointSpec& operator[](int id) const { return keypoints.at(static_cast<std::size_t>(id)); }
  /// Throws InvalidArgument for an unknown name.
  int find(std::string_view name) const;
  std::vector<int> annotated() const;

  /// Synthetic keypoints take the later stage of their parents.
  void derive_synthetic_stages();
  /// Checks counts, parents, stage membership and connectivity.
  void validate() const;
};

/// Number of annotated joints and their names in MPII order.
inline constexpr int kNumAnnotated = 16;
const std::vector<std::string>& annotated_names();

/// Location of a synthetic keypoint from its two parents.
Point synthetic_point(const KeypointSpec& spec, Point a, Point b);
/// Same on the integer grid, rounded half away from zero per coordinate.
Cell synthetic_cell(const KeypointSpec& spec, Cell a, Cell b);

/// Extends 16 annotated locations to the full skeleton. A synthetic keypoint
/// is missing whenever one of its parents is.
KeypointSet augment_keypoints(const KeypointSet& annotated, const Skeleton& skeleton);

}  // namespace votepose
