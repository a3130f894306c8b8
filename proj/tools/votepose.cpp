// votepose: synthetic voter fields, aggregation, consensus, inference and evaluation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "votepose/config.hpp"
#include "votepose/consensus.hpp"
#include "votepose/error.hpp"
#include "votepose/io.hpp"
#include "votepose/metrics.hpp"
#include "votepose/pipeline.hpp"
#include "votepose/prior.hpp"
#include "votepose/selftest.hpp"
#include "votepose/synth.hpp"

namespace fs = std::filesystem;
using namespace votepose;
using nlohmann::json;

namespace {

Point parse_point(const std::string& text) {
  double x = 0.0;
  double y = 0.0;
  char comma = 0;
  std::istringstream in(text);
  if (!(in >> x >> comma >> y) || comma != ',' || !in.eof()) {
    throw InvalidArgument("expected a point as x,y but got '" + text + "'");
  }
  return {x, y};
}

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

const VoterField& field_for(const VoterFieldFile& file, int keypoint) {
  for (const auto& f : file.fields) {
    if (f.keypoint == keypoint) return f;
  }
  throw InvalidArgument("field file has no keypoint " + std::to_string(keypoint));
}

void check_grid(const VoterFieldFile& file, RunConfig& config) {
  if (!(file.grid == config.grid) || file.stride != config.stride) {
    throw InvalidArgument("field file grid or stride does not match the configuration");
  }
}

struct SynthArgs {
  std::uint64_t seed = 0;
  std::string pose_path;
  int distractors = 0;
  int height = 504;
  int width = 504;
  double label_noise = 0.0;
  double background = 0.0;
  std::string config;
  std::string out;
  std::string truth;
};

int run_synth(const SynthArgs& a) {
  const RunConfig config = config_or_default(a.config);
  SyntheticScene scene;
  if (a.pose_path.empty()) {
    scene = random_scene(a.seed, a.distractors, a.height, a.width, config.skeleton);
  } else {
    scene.image_height = a.height;
    scene.image_width = a.width;
    for (const auto& ann : load_annotations(a.pose_path)) scene.poses.push_back(augment_keypoints(ann.keypoints, config.skeleton));
    if (scene.poses.empty()) throw InvalidArgument("pose file '" + a.pose_path + "' is empty");
  }
  VoterFieldFile file;
  file.image_height = scene.image_height;
  file.image_width = scene.image_width;
  file.stride = config.stride;
  file.grid = config.grid;
  file.fields = gen_synthetic(scene, config.grid, config.stride, {a.label_noise, a.background}, a.seed, config.skeleton);
  save_voter_fields(a.out, file);
  if (!a.truth.empty()) {
    std::vector<Annotation> truth;
    for (std::size_t p = 0; p < scene.poses.size(); ++p) truth.push_back(annotate(scene.poses[p], static_cast<int>(p)));
    save_annotations(a.truth, truth);
  }
  return 0;
}

int run_aggregate(const std::string& field_path, const std::string& config_path, const std::string& out_dir,
                  const std::vector<std::string>& names) {
  RunConfig config = config_or_default(config_path);
  const VoterFieldFile file = load_voter_fields(field_path);
  check_grid(file, config);
  const VoteKernel kernel = build_kernel(config.grid, config.kernel_size, config.kernel_size);
  fs::create_directories(out_dir);
  for (const auto& f : file.fields) {
    const std::string name = f.keypoint < config.skeleton.size() ? config.skeleton[f.keypoint].name
                                                                 : "keypoint_" + std::to_string(f.keypoint);
    if (!names.empty() && std::find(names.begin(), names.end(), name) == names.end()) continue;
    save_float_grid((fs::path(out_dir) / (name + ".vpfg")).string(), heatmap_to_grid(aggregate(f, kernel)));
  }
  return 0;
}

int run_consensus(const std::string& field_path, const std::string& config_path, const std::string& from,
                  const std::string& to, const std::string& out, const std::string& given,
                  const std::string& conditional_out) {
  RunConfig config = config_or_default(config_path);
  const VoterFieldFile file = load_voter_fields(field_path);
  check_grid(file, config);
  const int a = config.skeleton.find(from);
  const int b = config.skeleton.find(to);
  const VoteKernel ck = coarse_kernel(config.grid, config.kept_rings, config.pool());
  const JointTable joint =
      joint_table(coarse_project(field_for(file, a), config.coarse_factor, config.kept_rings, config.grid),
                  coarse_project(field_for(file, b), config.coarse_factor, config.kept_rings, config.grid), ck);
  if (!out.empty()) save_float_grid(out, joint_to_grid(joint));
  if (!given.empty()) {
    const Point p = parse_point(given);
    const Cell cell{static_cast<int>(std::floor(p.y / config.coarse_factor)),
                    static_cast<int>(std::floor(p.x / config.coarse_factor))};
    const Heatmap h = conditional(joint, cell);
    if (!conditional_out.empty()) save_float_grid(conditional_out, heatmap_to_grid(h));
    const Cell best = h.argmax();
    const json line = {{"given", {{"keypoint", to}, {"cell", {cell.row, cell.col}}}},
                       {"argmax", {{"keypoint", from},
                                   {"cell", {best.row, best.col}},
                                   {"pixel", {(best.col + 0.5) * config.coarse_factor, (best.row + 0.5) * config.coarse_factor}},
                                   {"probability", h.at(best)}}}};
    std::cout << line.dump() << "\n";
  }
  return 0;
}

struct InferArgs {
  std::string field;
  std::string config;
  std::string out;
  std::string center;
  double scale = 0.0;
  std::optional<double> lambda;
  std::string stages;
  bool single_stage = false;
  std::string priors;
  std::optional<int> threads;
  std::string dump_models;
  int person_id = 0;
};

int run_infer(const InferArgs& a) {
  RunConfig config = config_or_default(a.config);
  if (a.lambda) config.lambda = *a.lambda;
  if (a.threads) config.threads = *a.threads;
  if (!a.stages.empty()) assign_stages(config.skeleton, a.stages);
  if (a.single_stage) make_single_stage(config.skeleton);
  config.validate();

  const VoterFieldFile file = load_voter_fields(a.field);
  check_grid(file, config);
  std::optional<PersonHint> hint;
  if (!a.center.empty()) {
    if (!(a.scale > 0.0)) throw InvalidArgument("--person-center needs a positive --person-scale");
    hint = PersonHint{parse_point(a.center), a.scale};
  }
  PriorSet priors = a.priors.empty() ? PriorSet{} : grid_to_priors(load_float_grid(a.priors));
  const PoseEstimate pose = predict(file.fields, hint, config, std::move(priors));

  if (!a.dump_models.empty()) {
    fs::create_directories(a.dump_models);
    for (const auto& s : pose.stages) {
      std::ofstream out(fs::path(a.dump_models) / ("stage" + std::to_string(s.stage) + ".txt"));
      write_model_text(out, s.model);
    }
  }
  const std::string line = pose_to_json(pose, config.skeleton, a.person_id).dump();
  if (a.out.empty()) {
    std::cout << line << "\n";
  } else {
    std::ofstream out(a.out);
    if (!out) throw InvalidArgument("cannot open '" + a.out + "' for writing");
    out << line << "\n";
  }
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& truth_path, double alpha, bool sweep,
             const std::string& report) {
  const auto preds = load_predictions(pred_path);
  const auto truth = load_annotations(truth_path);
  std::map<int, const PosePrediction*> by_id;
  for (const auto& p : preds) by_id[p.person_id] = &p;
  std::vector<KeypointSet> matched;
  for (const auto& t : truth) {
    auto it = by_id.find(t.person_id);
    matched.push_back(it == by_id.end() ? KeypointSet(kNumAnnotated) : it->second->keypoints);
  }
  const PckhResult pk = pckh(matched, truth, alpha);
  const PcpResult pc = pcp(matched, truth);
  std::vector<std::pair<double, double>> curve;
  if (sweep) {
    std::vector<double> alphas;
    for (int i = 0; i <= 10; ++i) alphas.push_back(0.05 * i);
    curve = pckh_sweep(matched, truth, alphas);
  }
  std::cout << format_report(pk, pc);
  for (const auto& [x, r] : curve) std::printf("sweep %.2f %.4f\n", x, r);
  if (!report.empty()) {
    std::ofstream out(report);
    if (!out) throw InvalidArgument("cannot open '" + report + "' for writing");
    out << format_kv_report(pk, pc, curve);
  }
  return 0;
}

int run_selftest_cmd(std::uint64_t seed, int cases) {
  bool ok = true;
  for (const auto& s : run_selftest(seed, cases)) {
    std::printf("%-20s %s cases=%d failures=%d max_error=%.3g\n", s.name.c_str(), s.passed() ? "PASS" : "FAIL", s.cases,
                s.failures, s.max_error);
    ok = ok && s.passed();
  }
  return ok ? 0 : 1;
}

int run_prior(const std::string& ann_path, const std::string& config_path, const std::string& out) {
  const RunConfig config = config_or_default(config_path);
  std::vector<KeypointSet> poses;
  for (const auto& a : load_annotations(ann_path)) poses.push_back(augment_keypoints(a.keypoints, config.skeleton));
  PriorSet priors;
  for (auto [a, b] : required_joints(config.skeleton)) priors.emplace(std::make_pair(a, b), fit_prior(poses, a, b, config.prior));
  save_float_grid(out, priors_to_grid(priors));
  return 0;
}

void print_error(const std::string& code, const std::string& message, std::optional<std::size_t> offset = {}) {
  json err = {{"code", code}, {"message", message}};
  if (offset) err["offset"] = *offset;
  std::cerr << json{{"error", err}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keypoint voting pose inference"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand("synth", "Generate planted voter fields for a pose or a random scene");
  cmd_synth->add_option("--seed", synth.seed, "Random seed");
  cmd_synth->add_option("--pose", synth.pose_path, "Annotation file whose people are planted instead of a random scene");
  cmd_synth->add_option("--distractors", synth.distractors, "Extra people next to the person of interest");
  cmd_synth->add_option("--height", synth.height, "Image height in pixels");
  cmd_synth->add_option("--width", synth.width, "Image width in pixels");
  cmd_synth->add_option("--label-noise", synth.label_noise, "Probability of a uniformly random vote");
  cmd_synth->add_option("--background-noise", synth.background, "Probability of a background vote");
  cmd_synth->add_option("--config", synth.config, "Run configuration (grid and stride)");
  cmd_synth->add_option("--out", synth.out, "Voter field file to write")->required();
  cmd_synth->add_option("--truth", synth.truth, "Write the planted poses as annotations");

  std::string field, config, out, from, to, given, cond_out, out_dir;
  std::vector<std::string> names;
  auto* cmd_agg = app.add_subcommand("aggregate", "Aggregate votes into one heatmap per keypoint");
  cmd_agg->add_option("--field", field, "Voter field file")->required();
  cmd_agg->add_option("--config", config, "Run configuration");
  cmd_agg->add_option("--out-dir", out_dir, "Directory for the heatmap files")->required();
  cmd_agg->add_option("--keypoints", names, "Only these keypoints");

  auto* cmd_cons = app.add_subcommand("consensus", "Joint and conditional maps of a keypoint pair");
  cmd_cons->add_option("--field", field, "Voter field file")->required();
  cmd_cons->add_option("--config", config, "Run configuration");
  cmd_cons->add_option("--from", from, "First keypoint (the one conditioned on is --to)")->required();
  cmd_cons->add_option("--to", to, "Second keypoint")->required();
  cmd_cons->add_option("--out", out, "Joint table file");
  cmd_cons->add_option("--given", given, "Pixel position x,y of the second keypoint to condition on");
  cmd_cons->add_option("--conditional-out", cond_out, "Conditional heatmap file");

  InferArgs infer;
  std::optional<double> lambda;
  std::optional<int> threads;
  auto* cmd_infer = app.add_subcommand("infer", "Estimate a pose from voter fields");
  cmd_infer->add_option("--field", infer.field, "Voter field file")->required();
  cmd_infer->add_option("--config", infer.config, "Run configuration");
  cmd_infer->add_option("--out", infer.out, "Pose JSON lines output (default stdout)");
  cmd_infer->add_option("--person-center", infer.center, "Person position x,y in pixels");
  cmd_infer->add_option("--person-scale", infer.scale, "Person size in pixels");
  cmd_infer->add_option("--lambda", lambda, "Weight of consensus against the prior");
  cmd_infer->add_option("--stages", infer.stages, "Stage groups, e.g. head_top,upper_neck;r_hip,l_hip;...");
  cmd_infer->add_flag("--single-stage", infer.single_stage, "Solve all keypoints jointly");
  cmd_infer->add_option("--priors", infer.priors, "Prior tables written by 'votepose prior'");
  cmd_infer->add_option("--threads", threads, "Worker threads");
  cmd_infer->add_option("--dump-models", infer.dump_models, "Directory for text dumps of the stage energies");
  cmd_infer->add_option("--person-id", infer.person_id, "Person id written to the output");

  std::string pred_path, truth_path, report;
  double alpha = 0.5;
  bool sweep = false;
  auto* cmd_eval = app.add_subcommand("eval", "PCKh and PCP of predictions against annotations");
  cmd_eval->add_option("--pred", pred_path, "Pose JSON lines")->required();
  cmd_eval->add_option("--truth", truth_path, "Annotation JSON lines")->required();
  cmd_eval->add_option("--alpha", alpha, "PCKh threshold as a fraction of the head segment");
  cmd_eval->add_flag("--pckh-sweep", sweep, "Also report PCKh for alpha in 0..0.5");
  cmd_eval->add_option("--report", report, "Machine-readable key=value report");

  std::uint64_t seed = 0;
  int cases = 50;
  auto* cmd_self = app.add_subcommand("selftest", "Compare fast paths with brute-force references");
  cmd_self->add_option("--seed", seed, "Random seed");
  cmd_self->add_option("--cases", cases, "Random instances per suite");

  std::string ann_path;
  auto* cmd_prior = app.add_subcommand("prior", "Fit displacement priors from annotations");
  cmd_prior->add_option("--annotations", ann_path, "Annotation JSON lines")->required();
  cmd_prior->add_option("--config", config, "Run configuration");
  cmd_prior->add_option("--out", out, "Prior file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (cmd_synth->parsed()) return run_synth(synth);
    if (cmd_agg->parsed()) return run_aggregate(field, config, out_dir, names);
    if (cmd_cons->parsed()) return run_consensus(field, config, from, to, out, given, cond_out);
    if (cmd_infer->parsed()) {
      infer.lambda = lambda;
      infer.threads = threads;
      return run_infer(infer);
    }
    if (cmd_eval->parsed()) return run_eval(pred_path, truth_path, alpha, sweep, report);
    if (cmd_self->parsed()) return run_selftest_cmd(seed, cases);
    if (cmd_prior->parsed()) return run_prior(ann_path, config, out);
  } catch (const ParseError& e) {
    print_error(e.code(), e.what(), e.offset());
    return 1;
  } catch (const Error& e) {
    print_error(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
