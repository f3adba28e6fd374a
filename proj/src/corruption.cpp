#include "ispc/corruption.hpp"

#include <cmath>

#include "ispc/errors.hpp"

namespace ispc {
namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

enum Stage : std::uint32_t { kBoundary = 1, kSemantic, kDepth, kDirection };

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void NoiseSpec::validate() const {
  if (!probability(direction_flip_p) || !probability(depth_jitter_p) || !probability(semantic_flip_p)) {
    throw InvalidInput("noise probabilities must lie in [0, 1]");
  }
  if (!(direction_soften_sigma >= 0.0) || !std::isfinite(direction_soften_sigma)) {
    throw InvalidInput("direction_soften_sigma must be finite and >= 0");
  }
  if (boundary_erode_px < 0) throw InvalidInput("boundary_erode_px must be >= 0");
}

double keyed_uniform(std::uint64_t seed, std::uint64_t pixel, std::uint32_t stage, std::uint32_t draw) {
  std::uint64_t h = mix(seed);
  h = mix(h ^ pixel);
  h = mix(h ^ ((static_cast<std::uint64_t>(stage) << 32) | draw));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

ChannelTriple corrupt(const ChannelTriple& triple, const NoiseSpec& spec, const LabelSet& labels,
                      const DepthLayering& layering) {
  spec.validate();
  check_triple(triple);
  const Eigen::Index width = triple.width();
  const Eigen::Index height = triple.height();
  const int n_bins = triple.num_bins();
  ChannelTriple out = triple;
  auto index = [&](Eigen::Index r, Eigen::Index c) { return static_cast<std::uint64_t>(r * width + c); };
  auto u = [&](Eigen::Index r, Eigen::Index c, Stage s, std::uint32_t draw) {
    return keyed_uniform(spec.seed, index(r, c), s, draw);
  };

  if (const int a = spec.boundary_erode_px; a > 0) {
    for (Eigen::Index r = 0; r < height; ++r) {
      for (Eigen::Index c = 0; c < width; ++c) {
        const Eigen::Index r0 = std::max<Eigen::Index>(r - a, 0), r1 = std::min<Eigen::Index>(r + a, height - 1);
        const Eigen::Index c0 = std::max<Eigen::Index>(c - a, 0), c1 = std::min<Eigen::Index>(c + a, width - 1);
        auto window = triple.semantic.block(r0, c0, r1 - r0 + 1, c1 - c0 + 1);
        if ((window == triple.semantic(r, c)).all()) continue;
        const auto span = static_cast<double>(2 * a + 1);
        const auto dc = static_cast<Eigen::Index>(std::floor(u(r, c, kBoundary, 0) * span)) - a;
        const auto dr = static_cast<Eigen::Index>(std::floor(u(r, c, kBoundary, 1) * span)) - a;
        const Eigen::Index sr = r + dr, sc = c + dc;
        if (sr < 0 || sc < 0 || sr >= height || sc >= width) continue;
        out.semantic(r, c) = triple.semantic(sr, sc);
        out.depth(r, c) = triple.depth(sr, sc);
        out.scores(r, c) = triple.scores(sr, sc);
      }
    }
  }

  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      const LabelId label = out.semantic(r, c);
      const auto cat = labels.category_of(label);
      if (!cat) continue;

      if (spec.semantic_flip_p > 0 && u(r, c, kSemantic, 0) < spec.semantic_flip_p) {
        const auto& members = labels.categories()[*cat].members;
        if (members.size() > 1) {
          const auto pick = static_cast<std::size_t>(u(r, c, kSemantic, 1) * static_cast<double>(members.size() - 1));
          std::vector<LabelId> others;
          for (LabelId m : members) {
            if (m != label) others.push_back(m);
          }
          out.semantic(r, c) = others[std::min(pick, others.size() - 1)];
        }
      }

      DepthClass& d = out.depth(r, c);
      if (spec.depth_jitter_p > 0 && d != DepthLayering::kBackground &&
          u(r, c, kDepth, 0) < spec.depth_jitter_p) {
        int shifted = d + (u(r, c, kDepth, 1) < 0.5 ? -1 : 1);
        d = static_cast<DepthClass>(std::clamp(shifted, 1, layering.num_classes()));
      }

      auto row = out.scores(r, c);
      if ((row == 0.0f).all()) continue;
      if (spec.direction_flip_p > 0 && u(r, c, kDirection, 0) < spec.direction_flip_p) {
        const int bin = std::min(static_cast<int>(u(r, c, kDirection, 1) * n_bins), n_bins - 1);
        row.setZero();
        row(bin) = 1.0f;
      }
      if (spec.direction_soften_sigma > 0) {
        const double s2 = 2.0 * spec.direction_soften_sigma * spec.direction_soften_sigma;
        Eigen::ArrayXd src = row.transpose().cast<double>();
        Eigen::ArrayXd dst = Eigen::ArrayXd::Zero(n_bins);
        for (int k = 0; k < n_bins; ++k) {
          for (int j = 0; j < n_bins; ++j) {
            const int dist = std::min(std::abs(k - j), n_bins - std::abs(k - j));
            dst(k) += src(j) * std::exp(-(dist * dist) / s2);
          }
        }
        dst /= dst.sum();
        row = dst.transpose().cast<float>();
      }
    }
  }
  return out;
}

}  // namespace ispc
