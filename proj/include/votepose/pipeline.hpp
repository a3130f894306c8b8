#pragma once

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "votepose/config.hpp"
#include "votepose/consensus.hpp"
#include "votepose/mrf.hpp"
#include "votepose/prior.hpp"
#include "votepose/voting.hpp"

namespace votepose {

/// Approximate person position and size in image pixels.
struct PersonHint {
  Point center;
  double scale = 0.0;
};

/// Everything the energy is built from.
struct InferenceTerms {
  int image_rows = 0;  // field cells
  int image_cols = 0;
  std::vector<Heatmap> fine;    // indexed by keypoint id, full resolution
  std::vector<Heatmap> coarse;  // indexed by keypoint id, on the joint extent
  std::map<std::pair<int, int>, JointTable> joints;
  PriorSet priors;

  /// Joint of (a, b), using a stored (b, a) table when needed. Null if absent.
  const JointTable* find_joint(int a, int b, bool& transposed) const;
};

struct KeypointEstimate {
  int keypoint = 0;
  Point position;      // image pixels
  Cell coarse;         // chosen coarse cell, meaningful for annotated keypoints
  double confidence = 0.0;
};

struct StageReport {
  int stage = 0;
  std::vector<int> keypoints;  // free keypoints solved in this stage
  double energy = 0.0;
  double lower_bound = 0.0;
  bool converged = true;
  int iterations = 0;
  EnergyModel model;
};

struct PoseEstimate {
  std::vector<KeypointEstimate> keypoints;  // one per skeleton keypoint, by id
  std::vector<StageReport> stages;

  KeypointSet locations() const;
};

/// Keypoint pairs whose consensus tables the skeleton's edges need.
std::vector<std::pair<int, int>> required_joints(const Skeleton& skeleton);

/// Aggregation, masking, coarse projection and consensus for all keypoints.
/// `fields` may come in any order but must cover every skeleton keypoint.
InferenceTerms build_terms(std::span<const VoterField> fields, const std::optional<PersonHint>& hint,
                           const RunConfig& config, PriorSet priors = {});

/// Energy of one stage. Keypoints already in `solved` are clamped to their
/// coarse cell; nodes are the free keypoints of the stage plus the clamped
/// endpoints of its edges, ordered by keypoint id. `node_keypoints` receives
/// the keypoint of each node.
EnergyModel build_stage_model(const InferenceTerms& terms, const RunConfig& config, int stage,
                              const std::map<int, Cell>& solved, std::vector<int>& node_keypoints);

/// Stage-by-stage minimization with anchoring, then refinement to pixels.
/// Throws StageError when a stage has no evidence.
PoseEstimate sequential_predict(const InferenceTerms& terms, const RunConfig& config);

/// Full inference from voter fields.
PoseEstimate predict(std::span<const VoterField> fields, const std::optional<PersonHint>& hint,
                     const RunConfig& config, PriorSet priors = {});

}  // namespace votepose
