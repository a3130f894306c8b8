#include "votepose/synth.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "votepose/error.hpp"

namespace votepose {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

Cell cell_of(Point p, int stride) {
  return {static_cast<int>(std::floor(p.y / stride)), static_cast<int>(std::floor(p.x / stride))};
}

bool inside(const KeypointSet& pose, int height, int width) {
  for (const auto& p : pose) {
    if (p && !(p->x >= 0.0 && p->y >= 0.0 && p->x < width && p->y < height)) return false;
  }
  return true;
}

}  // namespace

std::vector<VoterField> gen_synthetic(const SyntheticScene& scene, const LogPolarGrid& grid, int stride,
                                      const NoiseOptions& noise, std::uint64_t seed, const Skeleton& skeleton) {
  grid.validate();
  if (stride < 1 || scene.image_height < 1 || scene.image_width < 1) throw InvalidArgument("invalid image geometry");
  if (scene.poses.empty()) throw InvalidArgument("scene has no people");
  if (noise.label_noise < 0.0 || noise.background < 0.0 || noise.label_noise + noise.background > 1.0) {
    throw InvalidArgument("noise probabilities must be non-negative and sum to at most 1");
  }
  const int n = skeleton.size();
  for (std::size_t p = 0; p < scene.poses.size(); ++p) {
    if (static_cast<int>(scene.poses[p].size()) != n) {
      throw InvalidArgument("pose " + std::to_string(p) + " does not have one entry per skeleton keypoint");
    }
    if (!inside(scene.poses[p], scene.image_height, scene.image_width)) {
      throw InvalidArgument("pose " + std::to_string(p) + " has a keypoint outside the image");
    }
  }

  const int rows = (scene.image_height + stride - 1) / stride;
  const int cols = (scene.image_width + stride - 1) / stride;
  const int classes = grid.num_classes();

  // Each cell belongs to the person with the closest keypoint; ties go to the earlier person.
  Grid<int> owner(rows, cols, 0);
  if (scene.poses.size() > 1) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const Point center{(c + 0.5) * stride, (r + 0.5) * stride};
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < scene.poses.size(); ++p) {
          for (const auto& k : scene.poses[p]) {
            if (!k) continue;
            const double d = distance(center, *k);
            if (d < best) {
              best = d;
              owner(r, c) = static_cast<int>(p);
            }
          }
        }
      }
    }
  }

  std::mt19937_64 rng(seed);
  std::vector<VoterField> fields;
  fields.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    VoterField f(k, rows, cols, stride, classes);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const auto& target = scene.poses[static_cast<std::size_t>(owner(r, c))][static_cast<std::size_t>(k)];
        int cls = target ? bin_of(cell_of(*target, stride) - Cell{r, c}, grid) : LogPolarGrid::kBackground;
        const double u = uniform01(rng);
        if (u < noise.background) {
          cls = LogPolarGrid::kBackground;
        } else if (u < noise.background + noise.label_noise) {
          cls = static_cast<int>(rng() % static_cast<std::uint64_t>(classes));
        }
        f.at(r, c)[static_cast<std::size_t>(cls)] = 1.0f;
      }
    }
    fields.push_back(std::move(f));
  }
  return fields;
}

KeypointSet random_pose(std::mt19937_64& rng, Point center) {
  const Skeleton sk = Skeleton::standard();
  auto id = [&](const char* name) { return static_cast<std::size_t>(sk.find(name)); };
  auto polar = [](double length, double angle) { return Point{length * std::cos(angle), length * std::sin(angle)}; };
  constexpr double up = -std::numbers::pi / 2;  // rows grow downward
  constexpr double down = std::numbers::pi / 2;

  const double h = uniform(rng, 260.0, 320.0);
  KeypointSet pose(kNumAnnotated);
  const double lean = uniform(rng, -0.3, 0.3);
  const Point pelvis{0.0, 0.0};
  const Point thorax = pelvis + polar(0.30 * h, up + lean);
  const Point neck = thorax + polar(0.05 * h, up + lean + uniform(rng, -0.2, 0.2));
  const Point head = neck + polar(0.12 * h, up + lean + uniform(rng, -0.3, 0.3));
  pose[id("pelvis")] = pelvis;
  pose[id("thorax")] = thorax;
  pose[id("upper_neck")] = neck;
  pose[id("head_top")] = head;

  // The person faces the camera, so their right side is on the image left.
  const Point across = polar(1.0, lean);
  for (int side : {-1, 1}) {
    const std::string s = side < 0 ? "r_" : "l_";
    const Point shoulder = thorax + (side * 0.12 * h) * across;
    const double upper = uniform(rng, -std::numbers::pi, std::numbers::pi);
    const Point elbow = shoulder + polar(0.17 * h, upper);
    const Point wrist = elbow + polar(0.15 * h, upper + uniform(rng, -2.0, 2.0));
    pose[id((s + "shoulder").c_str())] = shoulder;
    pose[id((s + "elbow").c_str())] = elbow;
    pose[id((s + "wrist").c_str())] = wrist;

    const Point hip = pelvis + (side * 0.08 * h) * across;
    const double thigh = down + uniform(rng, -0.6, 0.6);
    const Point knee = hip + polar(0.23 * h, thigh);
    const Point ankle = knee + polar(0.22 * h, thigh + uniform(rng, -0.5, 0.5));
    pose[id((s + "hip").c_str())] = hip;
    pose[id((s + "knee").c_str())] = knee;
    pose[id((s + "ankle").c_str())] = ankle;
  }

  double x0 = std::numeric_limits<double>::infinity();
  double y0 = x0;
  double x1 = -x0;
  double y1 = -x0;
  for (const auto& p : pose) {
    x0 = std::min(x0, p->x);
    x1 = std::max(x1, p->x);
    y0 = std::min(y0, p->y);
    y1 = std::max(y1, p->y);
  }
  const Point shift = center - Point{(x0 + x1) / 2, (y0 + y1) / 2};
  for (auto& p : pose) p = *p + shift;
  return pose;
}

SyntheticScene random_scene(std::uint64_t seed, int distractors, int height, int width, const Skeleton& skeleton) {
  if (distractors < 0) throw InvalidArgument("distractor count must be non-negative");
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    SyntheticScene scene;
    scene.image_height = height;
    scene.image_width = width;
    const double sep = uniform(rng, 100.0, 140.0);
    const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
    Point center{width / 2.0, height / 2.0};
    if (distractors == 1) center.x -= sign * sep / 2;
    scene.poses.push_back(augment_keypoints(random_pose(rng, center), skeleton));
    for (int i = 0; i < distractors; ++i) {
      const double side = i % 2 == 0 ? sign : -sign;
      const Point c = center + Point{side * (i / 2 + 1) * sep, 0.0};
      scene.poses.push_back(augment_keypoints(random_pose(rng, c), skeleton));
    }
    bool ok = true;
    for (const auto& p : scene.poses) ok = ok && inside(p, height, width);
    if (ok) return scene;
  }
  throw InvalidArgument("could not place " + std::to_string(distractors + 1) + " people inside a " +
                        std::to_string(width) + "x" + std::to_string(height) + " image");
}

Annotation annotate(const KeypointSet& pose, int person_id) {
  const Skeleton sk = Skeleton::standard();
  Annotation a;
  a.person_id = person_id;
  a.keypoints.assign(pose.begin(), pose.begin() + std::min<std::ptrdiff_t>(kNumAnnotated, std::ssize(pose)));
  a.keypoints.resize(kNumAnnotated);
  for (const auto& k : a.keypoints) a.visible.push_back(k.has_value());
  const auto& head = a.keypoints[static_cast<std::size_t>(sk.find("head_top"))];
  const auto& neck = a.keypoints[static_cast<std::size_t>(sk.find("upper_neck"))];
  if (head && neck && distance(*head, *neck) > 0.0) {
    a.head_rect = head_rect_for(0.5 * (*head + *neck), distance(*head, *neck));
  }
  const auto& thorax = a.keypoints[static_cast<std::size_t>(sk.find("thorax"))];
  const auto& pelvis = a.keypoints[static_cast<std::size_t>(sk.find("pelvis"))];
  if (thorax && pelvis) {
    a.scale = distance(*thorax, *pelvis);
    a.position = 0.5 * (*thorax + *pelvis);
  }
  return a;
}

}  // namespace votepose
