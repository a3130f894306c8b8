#pragma once

#include <string>

#include "votepose/geometry.hpp"
#include "votepose/mrf.hpp"
#include "votepose/prior.hpp"
#include "votepose/skeleton.hpp"

namespace votepose {

/// Every tunable of an inference run.
struct RunConfig {
  LogPolarGrid grid;
  int kernel_size = 65;    // fine vote kernel, square, in field cells
  int stride = 4;          // image pixels per field cell
  int coarse_factor = 12;  // image pixels per coarse cell
  int kept_rings = 2;      // rings kept for consensus voting
  double lambda = 0.5;
  double epsilon = kLogFloor;
  int prune_k = 128;          // labels kept per free keypoint
  double mask_sigma_factor = 1.0;
  TrwsOptions solver;
  PriorOptions prior;
  Skeleton skeleton = Skeleton::standard();
  int threads = 1;

  int pool() const noexcept { return coarse_factor / stride; }

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

/// Reassigns the stages of the annotated keypoints from a spec such as
/// "head_top,upper_neck;r_shoulder,l_shoulder;...". Every annotated keypoint
/// must appear exactly once.
void assign_stages(Skeleton& skeleton, const std::string& spec);

/// Puts every keypoint in one stage.
void make_single_stage(Skeleton& skeleton);

}  // namespace votepose
