#include "votepose/io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "votepose/error.hpp"

namespace votepose {

using nlohmann::json;

namespace {

class ByteWriter {
 public:
  explicit ByteWriter(std::ostream& out) : out_(out) {}

  void bytes(const void* src, std::size_t n) { out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void u64(std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32s(const float* src, std::size_t n) {
    std::vector<unsigned char> buf(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = std::bit_cast<std::uint32_t>(src[i]);
      for (int k = 0; k < 4; ++k) buf[i * 4 + static_cast<std::size_t>(k)] = static_cast<unsigned char>(v >> (8 * k));
    }
    bytes(buf.data(), buf.size());
  }

 private:
  std::ostream& out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  std::size_t offset() const noexcept { return offset_; }

  void bytes(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got != n) throw ParseError(offset_ + got, std::string("unexpected end of file in ") + what);
    offset_ += n;
  }
  std::uint32_t u32(const char* what) {
    unsigned char b[4];
    bytes(b, 4, what);
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
  }
  std::uint64_t u64(const char* what) {
    unsigned char b[8];
    bytes(b, 8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = v << 8 | b[i];
    return v;
  }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }
  void f32s(float* dst, std::size_t n, const char* what) {
    constexpr std::size_t chunk = 1 << 16;
    std::vector<unsigned char> buf;
    for (std::size_t done = 0; done < n;) {
      const std::size_t m = std::min(chunk, n - done);
      buf.resize(m * 4);
      bytes(buf.data(), buf.size(), what);
      for (std::size_t i = 0; i < m; ++i) {
        const unsigned char* b = buf.data() + i * 4;
        const std::uint32_t v = static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
                                static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
        dst[done + i] = std::bit_cast<float>(v);
      }
      done += m;
    }
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw ParseError(offset_, "trailing bytes after payload");
  }

 private:
  std::istream& in_;
  std::size_t offset_ = 0;
};

void magic(ByteReader& r, const char (&expected)[5]) {
  char m[4];
  r.bytes(m, 4, "magic");
  if (std::memcmp(m, expected, 4) != 0) throw ParseError(0, std::string("not a ") + expected + " file (bad magic)");
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw InvalidArgument("failed writing '" + path + "'");
}

constexpr std::uint32_t kFloat32 = 1;
constexpr std::uint32_t kMaxDim = 1u << 20;

}  // namespace

void write_voter_fields(std::ostream& out, const VoterFieldFile& file) {
  file.grid.validate();
  const int rows = (file.image_height + file.stride - 1) / file.stride;
  const int cols = (file.image_width + file.stride - 1) / file.stride;
  for (const auto& f : file.fields) {
    if (f.rows != rows || f.cols != cols || f.stride != file.stride || f.num_classes != file.grid.num_classes() ||
        f.values.size() != static_cast<std::size_t>(rows) * cols * f.num_classes) {
      throw InvalidArgument("voter field of keypoint " + std::to_string(f.keypoint) + " does not match the file header");
    }
  }
  ByteWriter w(out);
  w.bytes("VPVF", 4);
  w.u32(kVoterFieldVersion);
  w.u32(static_cast<std::uint32_t>(file.image_height));
  w.u32(static_cast<std::uint32_t>(file.image_width));
  w.u32(static_cast<std::uint32_t>(file.stride));
  w.u32(static_cast<std::uint32_t>(file.grid.num_classes()));
  w.u32(static_cast<std::uint32_t>(file.fields.size()));
  w.u32(static_cast<std::uint32_t>(file.grid.num_rings));
  w.u32(static_cast<std::uint32_t>(file.grid.angular_bins));
  w.f64(file.grid.angular_offset);
  for (double b : file.grid.ring_boundaries) w.f64(b);
  w.u32(kFloat32);
  for (const auto& f : file.fields) w.u32(static_cast<std::uint32_t>(f.keypoint));
  for (const auto& f : file.fields) w.f32s(f.values.data(), f.values.size());
}

VoterFieldFile read_voter_fields(std::istream& in) {
  ByteReader r(in);
  magic(r, "VPVF");
  const std::size_t version_at = r.offset();
  if (const auto v = r.u32("version"); v != kVoterFieldVersion) {
    throw ParseError(version_at, "unsupported voter field version " + std::to_string(v));
  }
  VoterFieldFile file;
  const std::size_t header_at = r.offset();
  const std::uint32_t height = r.u32("header");
  const std::uint32_t width = r.u32("header");
  const std::uint32_t stride = r.u32("header");
  const std::uint32_t classes = r.u32("header");
  const std::uint32_t keypoints = r.u32("header");
  const std::uint32_t rings = r.u32("header");
  const std::uint32_t bins = r.u32("header");
  if (height == 0 || width == 0 || stride == 0 || height > kMaxDim || width > kMaxDim || stride > kMaxDim ||
      rings == 0 || rings > 64 || bins == 0 || bins > 4096 || keypoints > 4096) {
    throw ParseError(header_at, "implausible voter field header");
  }
  file.image_height = static_cast<int>(height);
  file.image_width = static_cast<int>(width);
  file.stride = static_cast<int>(stride);
  file.grid.num_rings = static_cast<int>(rings);
  file.grid.angular_bins = static_cast<int>(bins);
  file.grid.angular_offset = r.f64("header");
  const std::size_t radii_at = r.offset();
  file.grid.ring_boundaries.clear();
  for (std::uint32_t i = 0; i <= rings; ++i) file.grid.ring_boundaries.push_back(r.f64("ring boundaries"));
  try {
    file.grid.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(radii_at, std::string("invalid grid in header: ") + e.what());
  }
  if (static_cast<int>(classes) != file.grid.num_classes()) {
    throw ParseError(header_at + 12, "class count does not match the grid");
  }
  const std::size_t dtype_at = r.offset();
  if (const auto dtype = r.u32("dtype"); dtype != kFloat32) {
    throw ParseError(dtype_at, "unsupported payload type " + std::to_string(dtype));
  }
  std::vector<int> ids;
  std::set<int> seen;
  for (std::uint32_t i = 0; i < keypoints; ++i) {
    const std::size_t at = r.offset();
    const int id = static_cast<int>(r.u32("keypoint ids"));
    if (!seen.insert(id).second) throw ParseError(at, "duplicate keypoint id " + std::to_string(id));
    ids.push_back(id);
  }
  const int rows = (file.image_height + file.stride - 1) / file.stride;
  const int cols = (file.image_width + file.stride - 1) / file.stride;
  for (int id : ids) {
    VoterField f(id, rows, cols, file.stride, static_cast<int>(classes));
    r.f32s(f.values.data(), f.values.size(), "payload");
    file.fields.push_back(std::move(f));
  }
  r.expect_end();
  return file;
}

void save_voter_fields(const std::string& path, const VoterFieldFile& file) {
  auto out = open_out(path);
  write_voter_fields(out, file);
  finish(out, path);
}

VoterFieldFile load_voter_fields(const std::string& path) {
  auto in = open_in(path);
  return read_voter_fields(in);
}

void write_float_grid(std::ostream& out, const FloatGrid& grid) {
  std::uint64_t n = 1;
  for (auto d : grid.dims) n *= d;
  if (n != grid.values.size()) throw InvalidArgument("float grid payload does not match its dimensions");
  const std::string meta = grid.meta.dump();
  ByteWriter w(out);
  w.bytes("VPFG", 4);
  w.u32(kFloatGridVersion);
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.bytes(meta.data(), meta.size());
  w.u32(static_cast<std::uint32_t>(grid.dims.size()));
  for (auto d : grid.dims) w.u64(d);
  w.f32s(grid.values.data(), grid.values.size());
}

FloatGrid read_float_grid(std::istream& in) {
  ByteReader r(in);
  magic(r, "VPFG");
  const std::size_t version_at = r.offset();
  if (const auto v = r.u32("version"); v != kFloatGridVersion) {
    throw ParseError(version_at, "unsupported float grid version " + std::to_string(v));
  }
  FloatGrid grid;
  const std::size_t len_at = r.offset();
  const std::uint32_t len = r.u32("metadata length");
  if (len > (1u << 26)) throw ParseError(len_at, "implausible metadata length");
  std::string meta(len, '\0');
  const std::size_t meta_at = r.offset();
  r.bytes(meta.data(), len, "metadata");
  try {
    grid.meta = json::parse(meta);
  } catch (const json::parse_error& e) {
    throw ParseError(meta_at + (e.byte > 0 ? e.byte - 1 : 0), std::string("malformed metadata: ") + e.what());
  }
  const std::size_t ndim_at = r.offset();
  const std::uint32_t ndim = r.u32("dimension count");
  if (ndim > 16) throw ParseError(ndim_at, "too many dimensions");
  std::uint64_t n = 1;
  for (std::uint32_t i = 0; i < ndim; ++i) {
    const std::size_t at = r.offset();
    const std::uint64_t d = r.u64("dimensions");
    if (d > (1ull << 32) || (d > 0 && n > (1ull << 34) / d)) throw ParseError(at, "implausible dimension");
    grid.dims.push_back(d);
    n *= d;
  }
  grid.values.resize(static_cast<std::size_t>(n));
  r.f32s(grid.values.data(), grid.values.size(), "payload");
  r.expect_end();
  return grid;
}

void save_float_grid(const std::string& path, const FloatGrid& grid) {
  auto out = open_out(path);
  write_float_grid(out, grid);
  finish(out, path);
}

FloatGrid load_float_grid(const std::string& path) {
  auto in = open_in(path);
  return read_float_grid(in);
}

namespace {

void expect_kind(const FloatGrid& g, const char* kind, std::size_t ndim) {
  if (!g.meta.is_object() || g.meta.value("kind", "") != kind || g.dims.size() != ndim) {
    throw InvalidArgument(std::string("float grid is not a ") + kind);
  }
}

}  // namespace

FloatGrid heatmap_to_grid(const Heatmap& h) {
  FloatGrid g;
  g.meta = {{"kind", "heatmap"}, {"keypoint", h.keypoint}, {"origin", {h.origin.row, h.origin.col}}, {"stride", h.stride}};
  g.dims = {static_cast<std::uint64_t>(h.values.rows()), static_cast<std::uint64_t>(h.values.cols())};
  g.values.assign(h.values.data().begin(), h.values.data().end());
  return g;
}

Heatmap grid_to_heatmap(const FloatGrid& g) {
  expect_kind(g, "heatmap", 2);
  Heatmap h;
  h.keypoint = g.meta.at("keypoint").get<int>();
  h.origin = {g.meta.at("origin").at(0).get<int>(), g.meta.at("origin").at(1).get<int>()};
  h.stride = g.meta.at("stride").get<int>();
  h.values = Grid<double>(static_cast<int>(g.dims[0]), static_cast<int>(g.dims[1]));
  std::copy(g.values.begin(), g.values.end(), h.values.data().begin());
  return h;
}

FloatGrid joint_to_grid(const JointTable& t) {
  FloatGrid g;
  g.meta = {{"kind", "joint"},
            {"first", t.first()},
            {"second", t.second()},
            {"origin", {t.origin().row, t.origin().col}},
            {"stride", t.stride()},
            {"band", t.band()},
            {"normalizer", t.normalizer()}};
  const int w = 2 * t.band() + 1;
  g.dims = {static_cast<std::uint64_t>(t.rows()), static_cast<std::uint64_t>(t.cols()), static_cast<std::uint64_t>(w),
            static_cast<std::uint64_t>(w)};
  g.values.reserve(static_cast<std::size_t>(t.rows()) * t.cols() * w * w);
  for (const Cell a : t.cells()) {
    for (int dr = -t.band(); dr <= t.band(); ++dr) {
      for (int dc = -t.band(); dc <= t.band(); ++dc) g.values.push_back(static_cast<float>(t.at(a, a + Cell{dr, dc})));
    }
  }
  return g;
}

JointTable grid_to_joint(const FloatGrid& g) {
  expect_kind(g, "joint", 4);
  const int band = g.meta.at("band").get<int>();
  if (g.dims[2] != static_cast<std::uint64_t>(2 * band + 1) || g.dims[3] != g.dims[2]) {
    throw InvalidArgument("joint grid band does not match its dimensions");
  }
  JointTable t(g.meta.at("first").get<int>(), g.meta.at("second").get<int>(),
               {g.meta.at("origin").at(0).get<int>(), g.meta.at("origin").at(1).get<int>()},
               static_cast<int>(g.dims[0]), static_cast<int>(g.dims[1]), g.meta.at("stride").get<int>(), band);
  std::size_t i = 0;
  for (const Cell a : t.cells()) {
    for (int dr = -band; dr <= band; ++dr) {
      for (int dc = -band; dc <= band; ++dc) t.raw(a, {dr, dc}) = g.values[i++];
    }
  }
  t.set_normalizer(g.meta.at("normalizer").get<double>());
  return t;
}

FloatGrid priors_to_grid(const PriorSet& priors) {
  FloatGrid g;
  if (priors.empty()) throw InvalidArgument("no priors to store");
  const PriorTable& ref = priors.begin()->second;
  json pairs = json::array();
  for (const auto& [key, t] : priors) {
    if (t.radius != ref.radius || t.cell_pixels != ref.cell_pixels || t.sigma != ref.sigma || t.floor != ref.floor) {
      throw InvalidArgument("prior tables do not share their geometry");
    }
    pairs.push_back({key.first, key.second});
    g.values.insert(g.values.end(), t.values.data().begin(), t.values.data().end());
  }
  g.meta = {{"kind", "priors"},         {"pairs", pairs},        {"radius", ref.radius},
            {"cell_pixels", ref.cell_pixels}, {"sigma", ref.sigma}, {"floor", ref.floor}};
  const auto n = static_cast<std::uint64_t>(2 * ref.radius + 1);
  g.dims = {static_cast<std::uint64_t>(priors.size()), n, n};
  return g;
}

PriorSet grid_to_priors(const FloatGrid& g) {
  expect_kind(g, "priors", 3);
  const int radius = g.meta.at("radius").get<int>();
  const auto& pairs = g.meta.at("pairs");
  if (g.dims[0] != pairs.size() || g.dims[1] != static_cast<std::uint64_t>(2 * radius + 1) || g.dims[2] != g.dims[1]) {
    throw InvalidArgument("prior grid metadata does not match its dimensions");
  }
  PriorSet out;
  const int n = 2 * radius + 1;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    PriorTable t;
    t.first = pairs[p].at(0).get<int>();
    t.second = pairs[p].at(1).get<int>();
    t.radius = radius;
    t.cell_pixels = g.meta.at("cell_pixels").get<int>();
    t.sigma = g.meta.at("sigma").get<double>();
    t.floor = g.meta.at("floor").get<double>();
    t.values = Grid<double>(n, n);
    const auto begin = g.values.begin() + static_cast<std::ptrdiff_t>(p * n * n);
    std::copy(begin, begin + n * n, t.values.data().begin());
    out.emplace(std::make_pair(t.first, t.second), std::move(t));
  }
  return out;
}

namespace {

// Calls fn(line, offset) for every non-blank line.
template <class Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t start = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    fn(line, start);
  }
}

json parse_line(const std::string& line, std::size_t start) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) throw ParseError(start, "expected a JSON object per line");
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError(start + (e.byte > 0 ? e.byte - 1 : 0), std::string("malformed JSON: ") + e.what());
  }
}

Point point_of(const json& v) { return {v.at(0).get<double>(), v.at(1).get<double>()}; }

KeypointSet named_keypoints(const json& kp, std::vector<bool>* visible, bool strict) {
  const auto& names = annotated_names();
  if (!kp.is_object()) throw json::type_error::create(302, "keypoints must be an object", &kp);
  if (strict) {
    for (const auto& [name, value] : kp.items()) {
      if (std::find(names.begin(), names.end(), name) == names.end()) {
        throw json::other_error::create(501, "unknown keypoint '" + name + "'", &kp);
      }
    }
  }
  KeypointSet out(kNumAnnotated);
  if (visible) visible->assign(kNumAnnotated, false);
  for (int k = 0; k < kNumAnnotated; ++k) {
    auto it = kp.find(names[static_cast<std::size_t>(k)]);
    if (it == kp.end() || it->is_null()) continue;
    out[static_cast<std::size_t>(k)] = point_of(*it);
    if (visible) (*visible)[static_cast<std::size_t>(k)] = it->size() < 3 || it->at(2).get<double>() != 0.0;
  }
  return out;
}

}  // namespace

std::vector<Annotation> read_annotations(std::istream& in) {
  std::vector<Annotation> out;
  for_each_line(in, [&](const std::string& line, std::size_t start) {
    const json j = parse_line(line, start);
    try {
      Annotation a;
      a.person_id = j.value("person_id", 0);
      a.keypoints = named_keypoints(j.at("keypoints"), &a.visible, true);
      if (j.contains("head_rect") && !j["head_rect"].is_null()) {
        const auto& r = j["head_rect"];
        a.head_rect = std::array<double, 4>{r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                                            r.at(3).get<double>()};
      }
      a.scale = j.value("scale", 0.0);
      if (j.contains("position") && !j["position"].is_null()) a.position = point_of(j["position"]);
      out.push_back(std::move(a));
    } catch (const json::exception& e) {
      throw ParseError(start, std::string("invalid annotation: ") + e.what());
    }
  });
  return out;
}

void write_annotations(std::ostream& out, const std::vector<Annotation>& annotations) {
  const auto& names = annotated_names();
  for (const auto& a : annotations) {
    json kp = json::object();
    for (int k = 0; k < kNumAnnotated; ++k) {
      const auto& p = static_cast<std::size_t>(k) < a.keypoints.size() ? a.keypoints[static_cast<std::size_t>(k)]
                                                                       : std::optional<Point>{};
      const bool vis = static_cast<std::size_t>(k) < a.visible.size() ? a.visible[static_cast<std::size_t>(k)] : true;
      kp[names[static_cast<std::size_t>(k)]] = p ? json::array({p->x, p->y, vis ? 1 : 0}) : json(nullptr);
    }
    json j = {{"person_id", a.person_id}, {"keypoints", kp}, {"scale", a.scale}};
    j["head_rect"] = a.head_rect ? json(*a.head_rect) : json(nullptr);
    j["position"] = a.position ? json::array({a.position->x, a.position->y}) : json(nullptr);
    out << j.dump() << "\n";
  }
}

std::vector<Annotation> load_annotations(const std::string& path) {
  auto in = open_in(path);
  return read_annotations(in);
}

void save_annotations(const std::string& path, const std::vector<Annotation>& annotations) {
  auto out = open_out(path);
  write_annotations(out, annotations);
  finish(out, path);
}

json pose_to_json(const PoseEstimate& pose, const Skeleton& skeleton, int person_id) {
  json kp = json::object();
  for (const auto& k : pose.keypoints) {
    kp[skeleton[k.keypoint].name] = json::array({k.position.x, k.position.y, k.confidence});
  }
  json stages = json::array();
  for (const auto& s : pose.stages) {
    json names = json::array();
    for (int k : s.keypoints) names.push_back(skeleton[k].name);
    stages.push_back({{"stage", s.stage},
                      {"keypoints", names},
                      {"energy", s.energy},
                      {"lower_bound", s.lower_bound},
                      {"converged", s.converged},
                      {"iterations", s.iterations}});
  }
  return {{"person_id", person_id}, {"keypoints", kp}, {"stages", stages}};
}

std::vector<PosePrediction> read_predictions(std::istream& in) {
  std::vector<PosePrediction> out;
  for_each_line(in, [&](const std::string& line, std::size_t start) {
    const json j = parse_line(line, start);
    try {
      out.push_back({j.value("person_id", 0), named_keypoints(j.at("keypoints"), nullptr, false)});
    } catch (const json::exception& e) {
      throw ParseError(start, std::string("invalid pose: ") + e.what());
    }
  });
  return out;
}

std::vector<PosePrediction> load_predictions(const std::string& path) {
  auto in = open_in(path);
  return read_predictions(in);
}

json config_to_json(const RunConfig& c) {
  const Skeleton& sk = c.skeleton;
  json stages = json::array();
  for (int s = 1; s <= sk.num_stages; ++s) {
    json group = json::array();
    for (int k : sk.annotated()) {
      if (sk[k].stage == s) group.push_back(sk[k].name);
    }
    stages.push_back(group);
  }
  json edges = json::array();
  for (const auto& e : sk.edges) {
    json via = json::array();
    for (int v : e.via) via.push_back(sk[v].name);
    edges.push_back({{"from", sk[e.from].name}, {"to", sk[e.to].name}, {"via", via}});
  }
  return {{"grid",
           {{"num_rings", c.grid.num_rings},
            {"angular_bins", c.grid.angular_bins},
            {"ring_boundaries", c.grid.ring_boundaries},
            {"angular_offset", c.grid.angular_offset}}},
          {"kernel_size", c.kernel_size},
          {"stride", c.stride},
          {"coarse_factor", c.coarse_factor},
          {"kept_rings", c.kept_rings},
          {"lambda", c.lambda},
          {"epsilon", c.epsilon},
          {"prune_k", c.prune_k},
          {"mask", {{"sigma_factor", c.mask_sigma_factor}}},
          {"solver", {{"max_iters", c.solver.max_iters}, {"tol", c.solver.tol}}},
          {"prior",
           {{"radius", c.prior.radius},
            {"cell_pixels", c.prior.cell_pixels},
            {"sigma", c.prior.sigma},
            {"floor", c.prior.floor}}},
          {"stages", stages},
          {"edges", edges},
          {"threads", c.threads}};
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidArgument("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw InvalidArgument("config: unknown key '" + key + "' in " + where);
  }
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    check_keys(j,
               {"grid", "kernel_size", "stride", "coarse_factor", "kept_rings", "lambda", "epsilon", "prune_k", "mask",
                "solver", "prior", "stages", "edges", "threads"},
               "config");
    if (auto it = j.find("grid"); it != j.end()) {
      check_keys(*it, {"num_rings", "angular_bins", "ring_boundaries", "angular_offset"}, "grid");
      get(*it, "num_rings", c.grid.num_rings);
      get(*it, "angular_bins", c.grid.angular_bins);
      get(*it, "ring_boundaries", c.grid.ring_boundaries);
      get(*it, "angular_offset", c.grid.angular_offset);
      if (!j.contains("kernel_size")) c.kernel_size = default_kernel_size(c.grid);
    }
    get(j, "kernel_size", c.kernel_size);
    get(j, "stride", c.stride);
    get(j, "coarse_factor", c.coarse_factor);
    get(j, "kept_rings", c.kept_rings);
    get(j, "lambda", c.lambda);
    get(j, "epsilon", c.epsilon);
    get(j, "prune_k", c.prune_k);
    get(j, "threads", c.threads);
    if (auto it = j.find("mask"); it != j.end()) {
      check_keys(*it, {"sigma_factor"}, "mask");
      get(*it, "sigma_factor", c.mask_sigma_factor);
    }
    if (auto it = j.find("solver"); it != j.end()) {
      check_keys(*it, {"max_iters", "tol"}, "solver");
      get(*it, "max_iters", c.solver.max_iters);
      get(*it, "tol", c.solver.tol);
    }
    if (auto it = j.find("prior"); it != j.end()) {
      check_keys(*it, {"radius", "cell_pixels", "sigma", "floor"}, "prior");
      get(*it, "radius", c.prior.radius);
      get(*it, "cell_pixels", c.prior.cell_pixels);
      get(*it, "sigma", c.prior.sigma);
      get(*it, "floor", c.prior.floor);
    }
    if (auto it = j.find("edges"); it != j.end()) {
      c.skeleton.edges.clear();
      for (const auto& e : *it) {
        check_keys(e, {"from", "to", "via"}, "edge");
        SkeletonEdge edge{c.skeleton.find(e.at("from").get<std::string>()),
                          c.skeleton.find(e.at("to").get<std::string>()),
                          {}};
        for (const auto& v : e.value("via", json::array())) edge.via.push_back(c.skeleton.find(v.get<std::string>()));
        c.skeleton.edges.push_back(std::move(edge));
      }
      c.skeleton.derive_synthetic_stages();
    }
    if (auto it = j.find("stages"); it != j.end()) {
      std::string spec;
      for (const auto& group : *it) {
        if (!spec.empty()) spec += ';';
        std::string names;
        for (const auto& name : group) names += (names.empty() ? "" : ",") + name.get<std::string>();
        spec += names;
      }
      assign_stages(c.skeleton, spec);
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  auto in = open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(e.byte > 0 ? e.byte - 1 : 0, std::string("malformed config: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace votepose
