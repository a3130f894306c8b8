#include "votepose/config.hpp"

#include <sstream>
#include <vector>

#include "votepose/error.hpp"

namespace votepose {

void RunConfig::validate() const {
  grid.validate();
  if (stride < 1) throw InvalidArgument("stride must be positive");
  if (kernel_size % 2 == 0 || kernel_size < default_kernel_size(grid)) {
    throw InvalidArgument("kernel_size must be odd and cover the outer ring");
  }
  if (coarse_factor < stride || coarse_factor % stride != 0) {
    throw InvalidArgument("coarse_factor must be a multiple of the stride");
  }
  if (kept_rings < 1 || kept_rings > grid.num_rings) throw InvalidArgument("kept_rings out of range");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  if (prune_k < 1) throw InvalidArgument("prune_k must be positive");
  if (!(mask_sigma_factor > 0.0)) throw InvalidArgument("mask sigma_factor must be positive");
  if (solver.max_iters < 1 || !(solver.tol >= 0.0)) throw InvalidArgument("invalid solver limits");
  if (prior.radius < 0 || !(prior.floor > 0.0) || !(prior.sigma >= 0.0)) {
    throw InvalidArgument("invalid prior options");
  }
  if (threads < 1) throw InvalidArgument("threads must be positive");
  skeleton.validate();
}

void assign_stages(Skeleton& skeleton, const std::string& spec) {
  std::vector<int> stage(static_cast<std::size_t>(skeleton.size()), 0);
  std::stringstream groups(spec);
  std::string group;
  int s = 0;
  while (std::getline(groups, group, ';')) {
    ++s;
    std::stringstream names(group);
    std::string name;
    while (std::getline(names, name, ',')) {
      if (name.empty()) continue;
      const int id = skeleton.find(name);
      if (skeleton[id].kind != KeypointKind::Annotated) {
        throw InvalidArgument("only annotated keypoints can be staged, got '" + name + "'");
      }
      if (stage[static_cast<std::size_t>(id)] != 0) throw InvalidArgument("keypoint '" + name + "' staged twice");
      stage[static_cast<std::size_t>(id)] = s;
    }
  }
  for (int id : skeleton.annotated()) {
    if (stage[static_cast<std::size_t>(id)] == 0) {
      throw InvalidArgument("keypoint '" + skeleton[id].name + "' is not assigned to a stage");
    }
    skeleton.keypoints[static_cast<std::size_t>(id)].stage = stage[static_cast<std::size_t>(id)];
  }
  skeleton.num_stages = s;
  skeleton.derive_synthetic_stages();
}

void make_single_stage(Skeleton& skeleton) {
  for (auto& k : skeleton.keypoints) k.stage = 1;
  skeleton.num_stages = 1;
}

}  // namespace votepose
