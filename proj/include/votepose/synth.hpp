#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "votepose/geometry.hpp"
#include "votepose/metrics.hpp"
#include "votepose/skeleton.hpp"
#include "votepose/voting.hpp"

namespace votepose {

struct NoiseOptions {
  double label_noise = 0.0;  // probability a vote is replaced by a uniformly random class
  double background = 0.0;   // probability a vote is replaced by background
};

/// People in an image; poses hold every skeleton keypoint in pixels and the
/// first one is the person of interest.
struct SyntheticScene {
  int image_height = 504;
  int image_width = 504;
  std::vector<KeypointSet> poses;
};

/// Planted voter fields: every cell votes one-hot for the class of the
/// displacement to the keypoint of the person nearest to it, then noise is
/// applied. Deterministic in `seed`. Throws when a keypoint lies outside the image.
std::vector<VoterField> gen_synthetic(const SyntheticScene& scene, const LogPolarGrid& grid, int stride,
                                      const NoiseOptions& noise, std::uint64_t seed,
                                      const Skeleton& skeleton = Skeleton::standard());

/// Uniform double in [0, 1) computed the same way on every platform.
double uniform01(std::mt19937_64& rng);

/// Random upright person (16 annotated joints) with body height 260-320 px,
/// centred on `center`.
KeypointSet random_pose(std::mt19937_64& rng, Point center);

/// Image-centred person plus `distractors` people shifted 100-140 px sideways.
/// All skeleton keypoints of every person lie inside the image.
SyntheticScene random_scene(std::uint64_t seed, int distractors = 0, int height = 504, int width = 504,
                            const Skeleton& skeleton = Skeleton::standard());

/// Ground truth of a 16- or 30-point pose: all joints visible, head box from
/// the head segment, scale = torso length, position = torso midpoint.
Annotation annotate(const KeypointSet& pose, int person_id = 0);

}  // namespace votepose
