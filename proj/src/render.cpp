#include "ispc/render.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include <png.h>

#include "ispc/errors.hpp"
#include "ispc/raster_io.hpp"

namespace ispc {
namespace {

std::uint64_t hash64(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  return x ^ (x >> 33);
}

std::array<std::uint8_t, 3> hsv(double hue_deg, double sat, double val) {
  const double c = val * sat;
  const double hp = std::fmod(hue_deg / 60.0, 6.0);
  const double x = c * (1 - std::abs(std::fmod(hp, 2.0) - 1));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = val - c;
  auto q = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
  return {q(r + m), q(g + m), q(b + m)};
}

Image blank(Eigen::Index width, Eigen::Index height, int channels) {
  Image img;
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.channels = channels;
  img.pixels.assign(static_cast<std::size_t>(width * height * channels), 0);
  return img;
}

}  // namespace

std::vector<std::array<std::uint8_t, 3>> instance_palette(const std::vector<InstanceId>& ids) {
  std::vector<std::array<std::uint8_t, 3>> out;
  std::set<std::array<std::uint8_t, 3>> used;
  for (InstanceId id : ids) {
    for (std::uint64_t salt = 0;; ++salt) {
      const std::uint64_t h = hash64(static_cast<std::uint64_t>(id) * 0x9e3779b97f4a7c15ULL + salt);
      const std::array<std::uint8_t, 3> c = {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8),
                                             static_cast<std::uint8_t>(h >> 16)};
      const int spread = std::max({c[0], c[1], c[2]}) - std::min({c[0], c[1], c[2]});
      if (spread < 64 || used.contains(c)) continue;
      used.insert(c);
      out.push_back(c);
      break;
    }
  }
  return out;
}

Image render_labeling(const SceneLabeling& labeling) {
  const auto& ids = labeling.instance_ids;
  Image img = blank(ids.cols(), ids.rows(), 3);
  std::vector<InstanceId> order;
  for (const auto& r : labeling.instances) order.push_back(r.id);
  const auto palette = instance_palette(order);
  std::map<InstanceId, std::array<std::uint8_t, 3>> color;
  for (std::size_t i = 0; i < order.size(); ++i) color[order[i]] = palette[i];
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      std::uint8_t* px = img.at(r, c);
      const InstanceId id = ids(r, c);
      if (id != 0 && color.contains(id)) {
        std::copy(color[id].begin(), color[id].end(), px);
      } else {
        const auto g = static_cast<std::uint8_t>(48 + (labeling.background_semantic(r, c) * 37) % 160);
        px[0] = px[1] = px[2] = g;
      }
    }
  }
  return img;
}

Image render_score_map(const ScoreMap& map) {
  Image img = blank(map.scores.cols(), map.scores.rows(), 1);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const double s = map.scores(r, c);
      *img.at(r, c) = ScoreMap::valid(s) ? static_cast<std::uint8_t>(std::lround((s + 1.0) * 127.5)) : 0;
    }
  }
  return img;
}

Image render_field(const DirectionField& field) {
  Image img = blank(field.width(), field.height(), 3);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      if (field.magnitude(r, c) == 0.0) continue;
      double deg = std::atan2(field.vy(r, c), field.vx(r, c)) * 180.0 / std::numbers::pi;
      if (deg < 0) deg += 360.0;
      const auto rgb = hsv(deg, 1.0, std::clamp(field.magnitude(r, c), 0.0, 1.0));
      std::copy(rgb.begin(), rgb.end(), img.at(r, c));
    }
  }
  return img;
}

Image render_template(const Template& t) {
  DirectionField f = DirectionField::zero(t.width, t.height);
  f.vx = t.px;
  f.vy = t.py;
  f.magnitude = (t.px.square() + t.py.square()).sqrt();
  return render_field(f);
}

std::vector<std::uint8_t> encode_png(const Image& image) {
  if (image.width <= 0 || image.height <= 0) throw InvalidInput("cannot encode an empty image");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw FormatError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("PNG encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t len) {
        auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        buf->insert(buf->end(), data, data + len);
      },
      nullptr);
  png_set_IHDR(png, info, image.width, image.height, 8, image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < image.height; ++r) {
    png_write_row(png, image.pixels.data() + static_cast<std::size_t>(r) * image.width * image.channels);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const Image& image) { atomic_write(path, encode_png(image)); }

}  // namespace ispc
