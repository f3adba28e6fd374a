#include "ispc/instance_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

#include "ispc/errors.hpp"
#include "ispc/parallel.hpp"

namespace ispc {

void PipelineConfig::validate() const {
  templates.validate();
  if (!(score_threshold >= -1.0 && score_threshold <= 1.0)) {
    throw InvalidInput("score_threshold must lie in [-1, 1]");
  }
  if (depth_tolerance < 0) throw InvalidInput("depth_tolerance must be >= 0");
  if (!(agreement_deg >= 0.0 && agreement_deg <= 180.0)) {
    throw InvalidInput("agreement_deg must lie in [0, 180]");
  }
  if (!(bias_threshold >= 0.0)) throw InvalidInput("bias_threshold must be >= 0");
  if (!(search_factor >= 0.0)) throw InvalidInput("search_factor must be >= 0");
  if (min_pixels < 0) throw InvalidInput("min_pixels must be >= 0");
  if (!(min_direction_magnitude >= 0.0)) throw InvalidInput("min_direction_magnitude must be >= 0");
  if (threads < 0) throw InvalidInput("threads must be >= 0");
}

double InstanceProposal::normalized_bias() const {
  if (pixels.empty()) return 0.0;
  return bias.norm() / static_cast<double>(pixels.size());
}

std::vector<InstanceCenter> find_centers(const std::vector<CategoryScores>& maps,
                                         const PipelineConfig& cfg) {
  std::vector<InstanceCenter> centers;
  for (const auto& cs : maps) {
    const Raster<double>& eff = cs.effective.scores;
    struct Candidate {
      double score;
      int row, col;
    };
    std::vector<Candidate> cands;
    for (Eigen::Index r = 0; r < eff.rows(); ++r) {
      for (Eigen::Index c = 0; c < eff.cols(); ++c) {
        double s = eff(r, c);
        if (ScoreMap::valid(s) && s > cfg.score_threshold) {
          cands.push_back({s, static_cast<int>(r), static_cast<int>(c)});
        }
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      return std::tie(b.score, a.row, a.col) < std::tie(a.score, b.row, b.col);
    });
    Raster<bool> suppressed = Raster<bool>::Constant(eff.rows(), eff.cols(), false);
    for (const auto& cand : cands) {
      if (suppressed(cand.row, cand.col)) continue;
      const Template& t = cs.maps[cs.map_index(cand.row, cand.col)].tmpl;
      centers.push_back({{cand.col, cand.row}, cs.category, t.depth_class, cand.score, t.width, t.height});
      const Eigen::Index r0 = std::max(cand.row - t.half_height(), 0);
      const Eigen::Index r1 = std::min<Eigen::Index>(cand.row + t.half_height() + 1, eff.rows());
      const Eigen::Index c0 = std::max(cand.col - t.half_width(), 0);
      const Eigen::Index c1 = std::min<Eigen::Index>(cand.col + t.half_width() + 1, eff.cols());
      suppressed.block(r0, c0, r1 - r0, c1 - c0).setConstant(true);
    }
  }
  return centers;
}

std::vector<InstanceProposal> assign_pixels(const std::vector<InstanceCenter>& centers,
                                            const DirectionField& field, const ChannelTriple& triple,
                                            const LabelSet& labels, const PipelineConfig& cfg) {
  if (field.width() != triple.width() || field.height() != triple.height()) {
    throw InvalidInput("direction field and triple differ in size");
  }
  const double cos_limit = std::cos(cfg.agreement_deg * std::numbers::pi / 180.0) - 1e-12;

  std::vector<InstanceProposal> proposals(centers.size());
  std::map<CategoryIndex, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < centers.size(); ++i) {
    proposals[i].center = centers[i];
    by_category[centers[i].category].push_back(i);
  }

  for (Eigen::Index r = 0; r < triple.height(); ++r) {
    for (Eigen::Index c = 0; c < triple.width(); ++c) {
      auto cat = labels.category_of(triple.semantic(r, c));
      if (!cat) continue;
      auto it = by_category.find(*cat);
      if (it == by_category.end()) continue;
      const int depth = triple.depth(r, c);
      const Eigen::Vector2d dir = field.at(r, c);
      const bool has_dir = dir.squaredNorm() > 0.0 && field.magnitude(r, c) >= cfg.min_direction_magnitude;

      std::size_t best = SIZE_MAX;
      long long best_d2 = 0;
      for (std::size_t i : it->second) {
        const InstanceCenter& ctr = centers[i];
        if (std::abs(depth - static_cast<int>(ctr.depth_class)) > cfg.depth_tolerance) continue;
        const long long dx = ctr.position.col - c;
        const long long dy = -(ctr.position.row - r);
        const long long d2 = dx * dx + dy * dy;
        if (d2 != 0) {
          if (!has_dir) continue;
          const double cosang = (dir.x() * dx + dir.y() * dy) / std::sqrt(static_cast<double>(d2));
          if (cosang < cos_limit) continue;
        }
        if (best == SIZE_MAX || d2 < best_d2) {
          best = i;
          best_d2 = d2;
        }
      }
      if (best == SIZE_MAX) continue;
      proposals[best].pixels.push_back({static_cast<int>(c), static_cast<int>(r)});
      proposals[best].bias += dir;
    }
  }
  std::erase_if(proposals, [](const InstanceProposal& p) { return p.pixels.empty(); });
  return proposals;
}

std::vector<InstanceProposal> fuse_proposals(std::vector<InstanceProposal> proposals,
                                             const DirectionField& field, const PipelineConfig& cfg) {
  const Eigen::Index width = field.width();
  const Eigen::Index height = field.height();
  Raster<int> owner = Raster<int>::Constant(height, width, -1);
  auto relabel = [&] {
    owner.setConstant(-1);
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      for (const auto& p : proposals[i].pixels) owner(p.row, p.col) = static_cast<int>(i);
    }
  };
  auto compatible = [&](const InstanceProposal& a, const InstanceProposal& b) {
    return a.center.category == b.center.category &&
           std::abs(int(a.center.depth_class) - int(b.center.depth_class)) <= cfg.depth_tolerance;
  };
  // Neighbor index along the bias direction, or -1.
  auto search = [&](std::size_t i) -> int {
    const InstanceProposal& p = proposals[i];
    const Eigen::Vector2d dir = p.bias.normalized();
    const double extent = std::abs(dir.x()) * p.center.template_width +
                          std::abs(dir.y()) * p.center.template_height;
    const int steps = static_cast<int>(std::ceil(cfg.search_factor * extent));
    for (int t = 1; t <= steps; ++t) {
      const auto col = static_cast<Eigen::Index>(std::lround(p.center.position.col + dir.x() * t));
      const auto row = static_cast<Eigen::Index>(std::lround(p.center.position.row - dir.y() * t));
      if (col < 0 || row < 0 || col >= width || row >= height) break;
      const int j = owner(row, col);
      if (j >= 0 && j != static_cast<int>(i) && compatible(p, proposals[j])) return j;
    }
    return -1;
  };

  relabel();
  bool merged = true;
  while (merged) {
    merged = false;
    for (std::size_t i = 0; i < proposals.size() && !merged; ++i) {
      if (proposals[i].normalized_bias() <= cfg.bias_threshold) continue;
      const int j = search(i);
      if (j < 0) continue;
      auto lo = std::min<std::size_t>(i, j);
      auto hi = std::max<std::size_t>(i, j);
      InstanceProposal& keep = proposals[lo];
      InstanceProposal& gone = proposals[hi];
      if (gone.center.score > keep.center.score) keep.center = gone.center;
      keep.pixels.insert(keep.pixels.end(), gone.pixels.begin(), gone.pixels.end());
      keep.bias += gone.bias;
      proposals.erase(proposals.begin() + static_cast<std::ptrdiff_t>(hi));
      relabel();
      merged = true;
    }
  }
  return proposals;
}

SceneLabeling finalize(const std::vector<InstanceProposal>& proposals, const ChannelTriple& triple,
                       const DepthLayering& layering, const LabelSet& labels,
                       const PipelineConfig& cfg) {
  struct Draft {
    const InstanceProposal* proposal;
    InstanceRecord record;
  };
  std::vector<Draft> drafts;
  for (const auto& p : proposals) {
    if (static_cast<int>(p.pixels.size()) < cfg.min_pixels || p.pixels.empty()) continue;
    std::vector<int> votes(labels.size(), 0);
    double depth_sum = 0.0;
    int depth_n = 0;
    for (const auto& px : p.pixels) {
      LabelId l = triple.semantic(px.row, px.col);
      if (labels.is_object(l)) ++votes[l];
      DepthClass d = triple.depth(px.row, px.col);
      if (d != DepthLayering::kBackground) {
        depth_sum += layering.midpoint(d);
        ++depth_n;
      }
    }
    // max_element returns the first maximum, i.e. the lowest label id on ties.
    auto label = static_cast<LabelId>(std::max_element(votes.begin(), votes.end()) - votes.begin());
    InstanceRecord rec;
    rec.semantic = label;
    rec.depth_m = depth_n > 0 ? depth_sum / depth_n : layering.midpoint(p.center.depth_class);
    rec.pixel_count = static_cast<int>(p.pixels.size());
    rec.score = p.center.score;
    rec.center = p.center.position;
    rec.category = p.center.category;
    drafts.push_back({&p, rec});
  }
  std::stable_sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    return std::tuple(-a.record.pixel_count, a.record.center.row, a.record.center.col) <
           std::tuple(-b.record.pixel_count, b.record.center.row, b.record.center.col);
  });

  SceneLabeling out;
  out.instance_ids = Raster<InstanceId>::Zero(triple.height(), triple.width());
  out.background_semantic = triple.semantic;
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    auto id = static_cast<InstanceId>(i + 1);
    drafts[i].record.id = id;
    for (const auto& px : drafts[i].proposal->pixels) out.instance_ids(px.row, px.col) = id;
    out.instances.push_back(drafts[i].record);
  }
  return out;
}

SegmentationTrace segment_scene_traced(const ChannelTriple& triple, const LabelSet& labels,
                                       const DepthLayering& layering, const DirectionBinning& bins,
                                       const PipelineConfig& cfg) {
  cfg.validate();
  const int threads = resolve_threads(cfg.threads);
  SegmentationTrace tr;
  tr.field = decode_field<double>(triple, bins, threads);
  tr.scores = score_maps(triple, tr.field, labels, layering, cfg.templates, threads);
  tr.centers = find_centers(tr.scores, cfg);
  tr.proposals = assign_pixels(tr.centers, tr.field, triple, labels, cfg);
  tr.fused = cfg.fusion ? fuse_proposals(tr.proposals, tr.field, cfg) : tr.proposals;
  tr.labeling = finalize(tr.fused, triple, layering, labels, cfg);
  return tr;
}

SceneLabeling segment_scene(const ChannelTriple& triple, const LabelSet& labels,
                            const DepthLayering& layering, const DirectionBinning& bins,
                            const PipelineConfig& cfg) {
  return segment_scene_traced(triple, labels, layering, bins, cfg).labeling;
}

}  // namespace ispc
