#include "ispc/raster_io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

#include "ispc/config.hpp"
#include "ispc/errors.hpp"

namespace ispc {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[5] = {'I', 'S', 'P', 'C', '1'};
constexpr std::size_t kHeaderSize = 5 + 4 + 4 + 2 + 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t pixel_count(const RasterFile& f) { return std::size_t(f.width) * f.height; }

RasterFile single_channel(Eigen::Index width, Eigen::Index height) {
  RasterFile f;
  f.width = static_cast<std::uint32_t>(width);
  f.height = static_cast<std::uint32_t>(height);
  f.channels = 1;
  return f;
}

template <typename T>
RasterFile u8_file(const Raster<T>& r) {
  RasterFile f = single_channel(r.cols(), r.rows());
  f.kind = ElementKind::kU8;
  f.u8.resize(pixel_count(f));
  for (Eigen::Index i = 0; i < r.size(); ++i) f.u8[i] = static_cast<std::uint8_t>(r.data()[i]);
  return f;
}

void expect(const RasterFile& f, const fs::path& path, std::uint16_t channels, ElementKind kind) {
  if (f.channels != channels || f.kind != kind) {
    throw FormatError(path.string() + ": expected " + std::to_string(channels) + " channel(s) of kind " +
                      std::to_string(static_cast<int>(kind)) + ", found " + std::to_string(f.channels) +
                      " of kind " + std::to_string(static_cast<int>(f.kind)));
  }
}

void expect_same_size(const RasterFile& a, const fs::path& pa, const RasterFile& b, const fs::path& pb) {
  if (a.width != b.width || a.height != b.height) {
    throw FormatError("dimension mismatch: " + pa.string() + " is " + std::to_string(a.width) + "x" +
                      std::to_string(a.height) + " but " + pb.string() + " is " + std::to_string(b.width) + "x" +
                      std::to_string(b.height));
  }
}

template <typename T>
Raster<T> u8_raster(const RasterFile& f) {
  Raster<T> r(f.height, f.width);
  for (std::size_t i = 0; i < f.u8.size(); ++i) r.data()[i] = static_cast<T>(f.u8[i]);
  return r;
}

Raster<InstanceId> instance_raster(const RasterFile& f, const fs::path& path) {
  if (f.channels != 1) throw FormatError(path.string() + ": instance raster must have one channel");
  if (f.kind == ElementKind::kU8) return u8_raster<InstanceId>(f);
  Raster<InstanceId> r(f.height, f.width);
  for (std::size_t i = 0; i < f.f32.size(); ++i) {
    float v = f.f32[i];
    if (!(v >= 0.0f) || v > 16777216.0f || std::floor(v) != v) {
      throw FormatError(path.string() + ": instance ids must be non-negative integers");
    }
    r.data()[i] = static_cast<InstanceId>(v);
  }
  return r;
}

RasterFile instance_file(const Raster<InstanceId>& ids) {
  if (ids.size() == 0 || ids.maxCoeff() <= 255) {
    if (ids.size() > 0 && ids.minCoeff() < 0) throw InvalidInput("negative instance id");
    return u8_file(ids);
  }
  RasterFile f = single_channel(ids.cols(), ids.rows());
  f.kind = ElementKind::kF32;
  f.f32.resize(pixel_count(f));
  for (Eigen::Index i = 0; i < ids.size(); ++i) f.f32[i] = static_cast<float>(ids.data()[i]);
  return f;
}

}  // namespace

std::vector<std::uint8_t> encode_raster_file(const RasterFile& f) {
  const std::size_t n = pixel_count(f) * f.channels;
  if (f.kind == ElementKind::kU8 ? f.u8.size() != n : f.f32.size() != n) {
    throw InvalidInput("raster payload size disagrees with header");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 5);
  put_u32(out, f.width);
  put_u32(out, f.height);
  out.push_back(static_cast<std::uint8_t>(f.channels & 0xff));
  out.push_back(static_cast<std::uint8_t>(f.channels >> 8));
  out.push_back(static_cast<std::uint8_t>(f.kind));
  if (f.kind == ElementKind::kU8) {
    out.insert(out.end(), f.u8.begin(), f.u8.end());
  } else {
    out.reserve(out.size() + 4 * n);
    for (float v : f.f32) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

RasterFile decode_raster_file(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  if (bytes.size() < kHeaderSize) throw FormatError(name + ": truncated header");
  if (!std::equal(kMagic, kMagic + 5, bytes.begin())) throw FormatError(name + ": bad magic");
  RasterFile f;
  f.width = get_u32(&bytes[5]);
  f.height = get_u32(&bytes[9]);
  f.channels = static_cast<std::uint16_t>(bytes[13] | bytes[14] << 8);
  const std::uint8_t kind = bytes[15];
  if (kind > 1) throw FormatError(name + ": unknown element kind " + std::to_string(kind));
  f.kind = static_cast<ElementKind>(kind);
  if (f.channels == 0) throw FormatError(name + ": zero channels");
  const std::size_t elem = f.kind == ElementKind::kU8 ? 1 : 4;
  const std::size_t n = pixel_count(f) * f.channels;
  const std::size_t payload = bytes.size() - kHeaderSize;
  if (payload != n * elem) {
    throw FormatError(name + ": payload is " + std::to_string(payload) + " bytes, header implies " +
                      std::to_string(n * elem) + (payload < n * elem ? " (truncated)" : " (trailing data)"));
  }
  if (f.kind == ElementKind::kU8) {
    f.u8.assign(bytes.begin() + kHeaderSize, bytes.end());
  } else {
    f.f32.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.f32[i] = std::bit_cast<float>(get_u32(&bytes[kHeaderSize + 4 * i]));
  }
  return f;
}

RasterFile read_raster_file(const fs::path& path) { return decode_raster_file(read_bytes(path), path.string()); }

void write_raster_file(const fs::path& path, const RasterFile& file) { atomic_write(path, encode_raster_file(file)); }

void atomic_write(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::random_device rd;
  const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw FormatError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw FormatError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void atomic_write(const fs::path& path, const std::string& text) {
  atomic_write(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

TriplePaths TriplePaths::from_prefix(const fs::path& prefix) {
  const std::string p = prefix.string();
  return {p + ".sem.ispc", p + ".depth.ispc", p + ".dir.ispc"};
}

AnnotationPaths AnnotationPaths::from_prefix(const fs::path& prefix) {
  const std::string p = prefix.string();
  return {p + ".inst.ispc", p + ".sem.ispc", p + ".depths.json"};
}

LabelingPaths LabelingPaths::from_prefix(const fs::path& prefix) {
  const std::string p = prefix.string();
  return {p + ".inst.ispc", p + ".sem.ispc", p + ".instances.json"};
}

ChannelTriple read_triple(const TriplePaths& paths) {
  const RasterFile sem = read_raster_file(paths.semantic);
  const RasterFile depth = read_raster_file(paths.depth);
  const RasterFile dir = read_raster_file(paths.direction);
  expect(sem, paths.semantic, 1, ElementKind::kU8);
  expect(depth, paths.depth, 1, ElementKind::kU8);
  if (dir.kind != ElementKind::kF32 || dir.channels < 2) {
    throw FormatError(paths.direction.string() + ": direction scores must be f32 with >= 2 channels");
  }
  expect_same_size(sem, paths.semantic, depth, paths.depth);
  expect_same_size(sem, paths.semantic, dir, paths.direction);

  ChannelTriple t;
  t.semantic = u8_raster<LabelId>(sem);
  t.depth = u8_raster<DepthClass>(depth);
  t.direction = ScoreVolume(Eigen::Index(dir.width) * dir.height, dir.channels);
  std::copy(dir.f32.begin(), dir.f32.end(), t.direction.data());
  try {
    check_triple(t);
  } catch (const InvalidInput& e) {
    throw FormatError(paths.direction.string() + ": " + e.what());
  }
  return t;
}

void write_triple(const ChannelTriple& triple, const TriplePaths& paths) {
  check_triple(triple);
  RasterFile dir = single_channel(triple.width(), triple.height());
  dir.channels = static_cast<std::uint16_t>(triple.num_bins());
  dir.kind = ElementKind::kF32;
  dir.f32.assign(triple.direction.data(), triple.direction.data() + triple.direction.size());
  const auto sem = encode_raster_file(u8_file(triple.semantic));
  const auto depth = encode_raster_file(u8_file(triple.depth));
  const auto scores = encode_raster_file(dir);
  atomic_write(paths.semantic, sem);
  atomic_write(paths.depth, depth);
  atomic_write(paths.direction, scores);
}

json depths_to_json(const std::map<InstanceId, double>& depths) {
  json j = json::object();
  for (const auto& [id, d] : depths) j[std::to_string(id)] = d;
  return j;
}

std::map<InstanceId, double> depths_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("instance depths must be a JSON object {id: meters}");
  std::map<InstanceId, double> out;
  for (const auto& [key, value] : j.items()) {
    InstanceId id = 0;
    try {
      std::size_t used = 0;
      id = std::stoi(key, &used);
      if (used != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      throw FormatError("instance depth key '" + key + "' is not an integer id");
    }
    if (!value.is_number()) throw FormatError("depth of instance " + key + " is not a number");
    out[id] = value.get<double>();
  }
  return out;
}

InstanceAnnotation read_annotation(const fs::path& instances, const fs::path& semantic, const fs::path& depths_json) {
  const RasterFile inst = read_raster_file(instances);
  const RasterFile sem = read_raster_file(semantic);
  expect(sem, semantic, 1, ElementKind::kU8);
  expect_same_size(inst, instances, sem, semantic);
  InstanceAnnotation ann;
  ann.instance_ids = instance_raster(inst, instances);
  ann.semantic = u8_raster<LabelId>(sem);
  ann.instance_depths = depths_from_json(read_json_file(depths_json));
  return ann;
}

void write_annotation(const InstanceAnnotation& ann, const AnnotationPaths& paths) {
  const auto inst = encode_raster_file(instance_file(ann.instance_ids));
  const auto sem = encode_raster_file(u8_file(ann.semantic));
  atomic_write(paths.instances, inst);
  atomic_write(paths.semantic, sem);
  atomic_write(paths.depths, depths_to_json(ann.instance_depths).dump(2) + "\n");
}

json labeling_records_to_json(const SceneLabeling& labeling, const LabelSet& labels) {
  json recs = json::array();
  for (const auto& r : labeling.instances) {
    recs.push_back({{"id", r.id},
                    {"label", labels.label(r.semantic).name},
                    {"label_id", r.semantic},
                    {"category", labels.categories().at(r.category).name},
                    {"depth_m", r.depth_m},
                    {"pixel_count", r.pixel_count},
                    {"score", r.score},
                    {"center", {r.center.col, r.center.row}}});
  }
  return {{"schema_version", kSchemaVersion}, {"instances", recs}};
}

SceneLabeling read_labeling(const LabelingPaths& paths, const LabelSet& labels) {
  const RasterFile inst = read_raster_file(paths.instances);
  const RasterFile sem = read_raster_file(paths.semantic);
  expect(sem, paths.semantic, 1, ElementKind::kU8);
  expect_same_size(inst, paths.instances, sem, paths.semantic);
  SceneLabeling l;
  l.instance_ids = instance_raster(inst, paths.instances);
  l.background_semantic = u8_raster<LabelId>(sem);
  const json doc = read_json_file(paths.records);
  try {
    for (const auto& r : doc.at("instances")) {
      InstanceRecord rec;
      rec.id = r.at("id").get<InstanceId>();
      rec.semantic = r.at("label_id").get<LabelId>();
      rec.category = labels.category_index(r.at("category").get<std::string>());
      rec.depth_m = r.at("depth_m").get<double>();
      rec.pixel_count = r.at("pixel_count").get<int>();
      rec.score = r.at("score").get<double>();
      rec.center = {r.at("center").at(0).get<int>(), r.at("center").at(1).get<int>()};
      l.instances.push_back(rec);
    }
  } catch (const json::exception& e) {
    throw FormatError(paths.records.string() + ": " + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(paths.records.string() + ": " + e.what());
  }
  return l;
}

void write_labeling(const SceneLabeling& labeling, const LabelingPaths& paths, const LabelSet& labels) {
  const auto inst = encode_raster_file(instance_file(labeling.instance_ids));
  const auto sem = encode_raster_file(u8_file(labeling.background_semantic));
  const std::string recs = labeling_records_to_json(labeling, labels).dump(2) + "\n";
  atomic_write(paths.instances, inst);
  atomic_write(paths.semantic, sem);
  atomic_write(paths.records, recs);
}

json report_to_json(const MetricReport& r) {
  json ap_curve = json::array();
  for (std::size_t i = 0; i < r.ap.by_threshold.size(); ++i) {
    ap_curve.push_back({{"threshold", ap_thresholds()[i]}, {"AP", r.ap.by_threshold[i]}});
  }
  return {
      {"schema_version", kSchemaVersion},
      {"images", r.images},
      {"zhang",
       {{"IoU", r.zhang.IoU},
        {"MWCov", r.zhang.MWCov},
        {"MUCov", r.zhang.MUCov},
        {"AvgPr", r.zhang.AvgPr},
        {"AvgRe", r.zhang.AvgRe},
        {"AvgFP", r.zhang.AvgFP},
        {"AvgFN", r.zhang.AvgFN},
        {"InsPr", r.zhang.InsPr},
        {"InsRe", r.zhang.InsRe},
        {"InsF1", r.zhang.InsF1}}},
      {"ap", {{"AP", r.ap.AP}, {"AP50", r.ap.AP50}, {"AP100m", r.ap.AP100m}, {"AP50m", r.ap.AP50m}, {"by_threshold", ap_curve}}},
      {"depth",
       {{"MAE_m", r.depth.MAE_m},
        {"RMSE_m", r.depth.RMSE_m},
        {"ARD", r.depth.ARD},
        {"δ1", r.depth.delta1},
        {"δ2", r.depth.delta2},
        {"δ3", r.depth.delta3},
        {"pairs", r.depth.pairs}}},
      {"pixel",
       {{"IoU_class", {{"per_label", r.pixel.IoU_class}, {"mean", r.pixel.mean_IoU}}},
        {"iIoU_class", {{"per_label", r.pixel.iIoU_class}, {"mean", r.pixel.mean_iIoU}}}}},
  };
}

}  // namespace ispc
