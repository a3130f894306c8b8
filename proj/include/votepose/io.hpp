#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "votepose/config.hpp"
#include "votepose/consensus.hpp"
#include "votepose/metrics.hpp"
#include "votepose/pipeline.hpp"
#include "votepose/prior.hpp"
#include "votepose/voting.hpp"

namespace votepose {

/// Binary voter-field file, little-endian:
///   "VPVF", u32 version, u32 image_height, u32 image_width, u32 stride,
///   u32 num_classes, u32 num_keypoints, u32 num_rings, u32 angular_bins,
///   f64 angular_offset, f64 ring_boundaries[num_rings + 1], u32 dtype (1 = f32),
///   u32 keypoint_ids[num_keypoints], then per keypoint the row-major
///   cells x classes payload. Field size is ceil(image / stride) cells.
struct VoterFieldFile {
  int image_height = 0;
  int image_width = 0;
  int stride = 4;
  LogPolarGrid grid;
  std::vector<VoterField> fields;
};

inline constexpr std::uint32_t kVoterFieldVersion = 1;
inline constexpr std::uint32_t kFloatGridVersion = 1;

void write_voter_fields(std::ostream& out, const VoterFieldFile& file);
VoterFieldFile read_voter_fields(std::istream& in);
void save_voter_fields(const std::string& path, const VoterFieldFile& file);
VoterFieldFile load_voter_fields(const std::string& path);

/// Generic float32 tensor with JSON metadata:
///   "VPFG", u32 version, u32 meta_length, meta (UTF-8 JSON), u32 ndim,
///   u64 dims[ndim], f32 payload (row-major).
struct FloatGrid {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::uint64_t> dims;
  std::vector<float> values;
};

void write_float_grid(std::ostream& out, const FloatGrid& grid);
FloatGrid read_float_grid(std::istream& in);
void save_float_grid(const std::string& path, const FloatGrid& grid);
FloatGrid load_float_grid(const std::string& path);

FloatGrid heatmap_to_grid(const Heatmap& heatmap);
Heatmap grid_to_heatmap(const FloatGrid& grid);
/// Banded layout: dims (rows, cols, 2 * band + 1, 2 * band + 1).
FloatGrid joint_to_grid(const JointTable& joint);
JointTable grid_to_joint(const FloatGrid& grid);
/// dims (pairs, 2 * radius + 1, 2 * radius + 1); all tables must share their geometry.
FloatGrid priors_to_grid(const PriorSet& priors);
PriorSet grid_to_priors(const FloatGrid& grid);

/// JSON lines; blank lines are skipped. Keypoints are keyed by name with
/// [x, y, visible] or null.
std::vector<Annotation> read_annotations(std::istream& in);
void write_annotations(std::ostream& out, const std::vector<Annotation>& annotations);
std::vector<Annotation> load_annotations(const std::string& path);
void save_annotations(const std::string& path, const std::vector<Annotation>& annotations);

/// One pose per line: {"person_id", "keypoints": {name: [x, y, confidence]}, "stages": [...]}.
nlohmann::json pose_to_json(const PoseEstimate& pose, const Skeleton& skeleton, int person_id = 0);
struct PosePrediction {
  int person_id = 0;
  KeypointSet keypoints;  // 16 annotated joints
};
std::vector<PosePrediction> read_predictions(std::istream& in);
std::vector<PosePrediction> load_predictions(const std::string& path);

nlohmann::json config_to_json(const RunConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected. Validates.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

}  // namespace votepose
