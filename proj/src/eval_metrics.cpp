#include "ispc/eval_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "ispc/errors.hpp"
#include "ispc/parallel.hpp"

namespace ispc {
namespace {

double pct(double num, double den) { return 100.0 * num / den; }

double iou_of(long long inter, long long a, long long b) {
  return static_cast<double>(inter) / static_cast<double>(a + b - inter);
}

std::vector<InstanceId> ids_of(const InstanceSet& s) {
  std::vector<InstanceId> ids;
  for (const auto& [id, _] : s.instances) ids.push_back(id);
  return ids;
}

void check_same_shape(const InstanceSet& pred, const InstanceSet& gt) {
  if (!same_shape(pred.ids, gt.ids)) {
    throw InvalidInput("prediction and ground truth differ in size (" + std::to_string(pred.ids.cols()) +
                       "x" + std::to_string(pred.ids.rows()) + " vs " + std::to_string(gt.ids.cols()) +
                       "x" + std::to_string(gt.ids.rows()) + ")");
  }
}

LabelId majority_label(const std::map<LabelId, long long>& votes) {
  LabelId best = 0;
  long long best_n = -1;
  for (const auto& [l, n] : votes) {
    if (n > best_n) {
      best = l;
      best_n = n;
    }
  }
  return best;
}

}  // namespace

InstanceSet InstanceSet::from_labeling(const SceneLabeling& labeling) {
  InstanceSet s;
  s.ids = labeling.instance_ids;
  for (const auto& rec : labeling.instances) {
    s.instances[rec.id] = {rec.semantic, rec.depth_m, rec.score, 0};
  }
  for (Eigen::Index i = 0; i < s.ids.size(); ++i) {
    InstanceId id = s.ids.data()[i];
    if (id == 0) continue;
    auto it = s.instances.find(id);
    if (it == s.instances.end()) throw InvalidInput("instance raster id " + std::to_string(id) + " has no record");
    ++it->second.pixels;
  }
  return s;
}

InstanceSet InstanceSet::from_annotation(const InstanceAnnotation& ann) {
  if (!same_shape(ann.instance_ids, ann.semantic)) {
    throw InvalidInput("instance and semantic rasters disagree in size");
  }
  InstanceSet s;
  s.ids = ann.instance_ids;
  std::map<InstanceId, std::map<LabelId, long long>> votes;
  for (Eigen::Index i = 0; i < s.ids.size(); ++i) {
    InstanceId id = s.ids.data()[i];
    if (id == 0) continue;
    ++votes[id][ann.semantic.data()[i]];
  }
  for (const auto& [id, v] : votes) {
    auto d = ann.instance_depths.find(id);
    if (d == ann.instance_depths.end()) throw InvalidInput("missing depth for instance " + std::to_string(id));
    long long n = 0;
    for (const auto& [_, k] : v) n += k;
    s.instances[id] = {majority_label(v), d->second, std::nullopt, n};
  }
  return s;
}

EvalCase EvalCase::from(const SceneLabeling& pred, const InstanceAnnotation& gt) {
  return {InstanceSet::from_labeling(pred), InstanceSet::from_annotation(gt), pred.background_semantic,
          gt.semantic};
}

std::map<std::pair<InstanceId, InstanceId>, long long> intersections(const InstanceSet& pred,
                                                                     const InstanceSet& gt) {
  check_same_shape(pred, gt);
  std::map<std::pair<InstanceId, InstanceId>, long long> out;
  for (Eigen::Index i = 0; i < pred.ids.size(); ++i) {
    InstanceId p = pred.ids.data()[i];
    InstanceId g = gt.ids.data()[i];
    if (p != 0 && g != 0) ++out[{p, g}];
  }
  return out;
}

InstanceMatching match_by_overlap(std::vector<InstanceMatching::Pair> candidates,
                                  std::vector<InstanceId> pred_ids, std::vector<InstanceId> gt_ids,
                                  double threshold) {
  std::erase_if(candidates, [&](const auto& c) { return !(c.overlap > threshold); });
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    return std::tuple(-a.overlap, a.pred, a.gt) < std::tuple(-b.overlap, b.pred, b.gt);
  });
  std::sort(pred_ids.begin(), pred_ids.end());
  std::sort(gt_ids.begin(), gt_ids.end());
  std::map<InstanceId, bool> pred_used, gt_used;
  InstanceMatching m;
  for (const auto& c : candidates) {
    if (pred_used[c.pred] || gt_used[c.gt]) continue;
    pred_used[c.pred] = gt_used[c.gt] = true;
    m.pairs.push_back(c);
  }
  for (InstanceId p : pred_ids) {
    if (!pred_used[p]) m.unmatched_pred.push_back(p);
  }
  for (InstanceId g : gt_ids) {
    if (!gt_used[g]) m.unmatched_gt.push_back(g);
  }
  return m;
}

InstanceMatching match_instances(const InstanceSet& pred, const InstanceSet& gt, double threshold,
                                 bool same_label_only) {
  std::vector<InstanceMatching::Pair> cands;
  for (const auto& [key, inter] : intersections(pred, gt)) {
    const auto& pi = pred.instances.at(key.first);
    const auto& gi = gt.instances.at(key.second);
    if (same_label_only && pi.label != gi.label) continue;
    cands.push_back({key.first, key.second, iou_of(inter, pi.pixels, gi.pixels)});
  }
  return match_by_overlap(std::move(cands), ids_of(pred), ids_of(gt), threshold);
}

InstanceMatching match_instances(const SceneLabeling& pred, const InstanceAnnotation& gt, double threshold) {
  return match_instances(InstanceSet::from_labeling(pred), InstanceSet::from_annotation(gt), threshold);
}

namespace {

struct ZhangPartial {
  long long fg_inter = 0, fg_union = 0;
  double mucov = 100.0, mwcov = 100.0;
  std::optional<double> avg_pr, avg_re;
  bool any_instances = false;
  std::size_t n_pred = 0, n_gt = 0, matched = 0;
};

ZhangPartial zhang_partial(const InstanceSet& pred, const InstanceSet& gt) {
  ZhangPartial z;
  const auto inter = intersections(pred, gt);
  for (Eigen::Index i = 0; i < pred.ids.size(); ++i) {
    bool p = pred.ids.data()[i] != 0;
    bool g = gt.ids.data()[i] != 0;
    z.fg_inter += (p && g);
    z.fg_union += (p || g);
  }
  if (!gt.instances.empty()) {
    std::map<InstanceId, double> best;
    for (const auto& [key, n] : inter) {
      double o = iou_of(n, pred.instances.at(key.first).pixels, gt.instances.at(key.second).pixels);
      best[key.second] = std::max(best[key.second], o);
    }
    double sum_u = 0, sum_w = 0, total = 0;
    for (const auto& [id, info] : gt.instances) {
      double b = best.contains(id) ? best[id] : 0.0;
      sum_u += b;
      sum_w += b * static_cast<double>(info.pixels);
      total += static_cast<double>(info.pixels);
    }
    z.mucov = pct(sum_u, static_cast<double>(gt.instances.size()));
    z.mwcov = pct(sum_w, total);
  }
  const auto m = match_instances(pred, gt);
  if (!m.pairs.empty()) {
    double pr = 0, re = 0;
    for (const auto& p : m.pairs) {
      double n = static_cast<double>(inter.at({p.pred, p.gt}));
      pr += n / static_cast<double>(pred.instances.at(p.pred).pixels);
      re += n / static_cast<double>(gt.instances.at(p.gt).pixels);
    }
    z.avg_pr = pct(pr, static_cast<double>(m.pairs.size()));
    z.avg_re = pct(re, static_cast<double>(m.pairs.size()));
  }
  z.any_instances = !pred.instances.empty() || !gt.instances.empty();
  z.n_pred = pred.instances.size();
  z.n_gt = gt.instances.size();
  z.matched = m.pairs.size();
  return z;
}

ZhangMetrics zhang_aggregate(const std::vector<ZhangPartial>& parts) {
  ZhangMetrics out;
  if (parts.empty()) throw InvalidInput("no images to evaluate");
  long long fi = 0, fu = 0;
  double mu = 0, mw = 0, pr = 0, re = 0, fp = 0, fn = 0;
  std::size_t n_pr = 0, n_pred = 0, n_gt = 0, matched = 0;
  bool any = false;
  for (const auto& z : parts) {
    fi += z.fg_inter;
    fu += z.fg_union;
    mu += z.mucov;
    mw += z.mwcov;
    if (z.avg_pr) {
      pr += *z.avg_pr;
      re += *z.avg_re;
      ++n_pr;
    }
    fp += static_cast<double>(z.n_pred - z.matched);
    fn += static_cast<double>(z.n_gt - z.matched);
    n_pred += z.n_pred;
    n_gt += z.n_gt;
    matched += z.matched;
    any = any || z.any_instances;
  }
  const auto n = static_cast<double>(parts.size());
  out.IoU = fu == 0 ? 100.0 : pct(static_cast<double>(fi), static_cast<double>(fu));
  out.MUCov = mu / n;
  out.MWCov = mw / n;
  if (n_pr > 0) {
    out.AvgPr = pr / static_cast<double>(n_pr);
    out.AvgRe = re / static_cast<double>(n_pr);
  } else {
    out.AvgPr = out.AvgRe = any ? 0.0 : 100.0;
  }
  out.AvgFP = fp / n;
  out.AvgFN = fn / n;
  out.InsPr = n_pred == 0 ? 100.0 : pct(static_cast<double>(matched), static_cast<double>(n_pred));
  out.InsRe = n_gt == 0 ? 100.0 : pct(static_cast<double>(matched), static_cast<double>(n_gt));
  out.InsF1 = (out.InsPr + out.InsRe) == 0.0 ? 0.0 : 2.0 * out.InsPr * out.InsRe / (out.InsPr + out.InsRe);
  return out;
}

}  // namespace

ZhangMetrics zhang_metrics(std::span<const EvalCase> cases) {
  std::vector<ZhangPartial> parts;
  for (const auto& c : cases) parts.push_back(zhang_partial(c.pred, c.gt));
  return zhang_aggregate(parts);
}

ZhangMetrics zhang_metrics(const InstanceSet& pred, const InstanceSet& gt) {
  return zhang_aggregate({zhang_partial(pred, gt)});
}

namespace {

struct Detection {
  double confidence;
  std::size_t image;
  InstanceId id;
  LabelId label;
};

// Area under the precision envelope of a ranked hit list.
double average_precision(const std::vector<bool>& hits, std::size_t n_positive) {
  std::vector<double> precision, recall;
  std::size_t tp = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    tp += hits[i];
    precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_positive));
  }
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0, prev_recall = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

struct ApInputs {
  std::vector<std::map<std::pair<InstanceId, InstanceId>, long long>> inter;
  std::vector<Detection> detections;  // ranked
  std::vector<LabelId> labels;
};

ApInputs ap_inputs(std::span<const EvalCase> cases) {
  ApInputs in;
  std::map<LabelId, bool> seen;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    in.inter.push_back(intersections(c.pred, c.gt));
    for (const auto& [id, info] : c.pred.instances) {
      if (!info.confidence) {
        throw InvalidInput("predicted instance " + std::to_string(id) + " in image " + std::to_string(i) +
                           " has no confidence");
      }
      in.detections.push_back({*info.confidence, i, id, info.label});
      seen[info.label] = true;
    }
    for (const auto& [id, info] : c.gt.instances) seen[info.label] = true;
  }
  std::sort(in.detections.begin(), in.detections.end(), [](const Detection& a, const Detection& b) {
    return std::tuple(-a.confidence, a.image, a.id) < std::tuple(-b.confidence, b.image, b.id);
  });
  for (const auto& [l, _] : seen) in.labels.push_back(l);
  return in;
}

// AP per overlap threshold for ground truth within max_depth.
std::vector<double> ap_curve(std::span<const EvalCase> cases, const ApInputs& in, double max_depth) {
  const auto& thresholds = ap_thresholds();
  std::vector<double> out(thresholds.size(), 0.0);
  std::vector<std::size_t> stray(thresholds.size(), 0);  // scored detections of labels without GT
  std::size_t labels_with_gt = 0;
  for (LabelId label : in.labels) {
    std::size_t n_pos = 0;
    for (const auto& c : cases) {
      for (const auto& [id, info] : c.gt.instances) n_pos += (info.label == label && info.depth_m <= max_depth);
    }
    labels_with_gt += n_pos > 0;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      std::vector<std::map<InstanceId, bool>> gt_taken(cases.size());
      std::vector<bool> hits;
      for (const auto& d : in.detections) {
        if (d.label != label) continue;
        const auto& c = cases[d.image];
        const long long p_size = c.pred.instances.at(d.id).pixels;
        InstanceId best = 0;
        double best_iou = thresholds[t];
        for (auto it = in.inter[d.image].lower_bound({d.id, 0});
             it != in.inter[d.image].end() && it->first.first == d.id; ++it) {
          const InstanceId g = it->first.second;
          const auto& gi = c.gt.instances.at(g);
          if (gi.label != label || gt_taken[d.image][g]) continue;
          double o = iou_of(it->second, p_size, gi.pixels);
          if (o > best_iou) {
            best_iou = o;
            best = g;
          }
        }
        if (best != 0) {
          gt_taken[d.image][best] = true;
          if (c.gt.instances.at(best).depth_m > max_depth) continue;  // ignored
          hits.push_back(true);
        } else {
          hits.push_back(false);
        }
      }
      if (n_pos > 0) {
        out[t] += average_precision(hits, n_pos);
      } else {
        stray[t] += hits.size();
      }
    }
  }
  for (std::size_t t = 0; t < out.size(); ++t) {
    if (labels_with_gt > 0) {
      out[t] = 100.0 * out[t] / static_cast<double>(labels_with_gt);
    } else {
      out[t] = stray[t] == 0 ? 100.0 : 0.0;
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

ApMetrics cityscapes_ap(std::span<const EvalCase> cases, double cap_far_m, double cap_near_m) {
  for (const auto& c : cases) check_same_shape(c.pred, c.gt);
  const ApInputs in = ap_inputs(cases);
  ApMetrics out;
  out.by_threshold = ap_curve(cases, in, std::numeric_limits<double>::infinity());
  out.AP = mean_of(out.by_threshold);
  out.AP50 = out.by_threshold.front();
  out.AP100m = mean_of(ap_curve(cases, in, cap_far_m));
  out.AP50m = mean_of(ap_curve(cases, in, cap_near_m));
  return out;
}

ApMetrics cityscapes_ap(const InstanceSet& pred, const InstanceSet& gt, double cap_far_m, double cap_near_m) {
  EvalCase c{pred, gt, {}, {}};
  return cityscapes_ap(std::span<const EvalCase>(&c, 1), cap_far_m, cap_near_m);
}

DepthMetrics depth_metrics(std::span<const std::pair<double, double>> pairs) {
  DepthMetrics out;
  out.pairs = pairs.size();
  if (pairs.empty()) {
    out.delta1 = out.delta2 = out.delta3 = 100.0;
    return out;
  }
  double abs_sum = 0, sq_sum = 0, rel_sum = 0;
  std::size_t in1 = 0, in2 = 0, in3 = 0;
  for (const auto& [pred, gt] : pairs) {
    if (!(gt > 0.0) || !std::isfinite(gt)) throw InvalidInput("ground-truth depth must be positive and finite");
    if (!(pred > 0.0) || !std::isfinite(pred)) throw InvalidInput("predicted depth must be positive and finite");
    const double err = std::abs(pred - gt);
    abs_sum += err;
    sq_sum += err * err;
    rel_sum += 100.0 * err / gt;
    const double ratio = std::max(pred / gt, gt / pred);
    in1 += ratio < 1.25;
    in2 += ratio < 1.25 * 1.25;
    in3 += ratio < 1.25 * 1.25 * 1.25;
  }
  const auto n = static_cast<double>(pairs.size());
  out.MAE_m = abs_sum / n;
  out.RMSE_m = std::sqrt(sq_sum / n);
  out.ARD = rel_sum / n;
  out.delta1 = pct(static_cast<double>(in1), n);
  out.delta2 = pct(static_cast<double>(in2), n);
  out.delta3 = pct(static_cast<double>(in3), n);
  return out;
}

DepthMetrics depth_metrics(std::span<const EvalCase> cases) {
  std::vector<std::pair<double, double>> pairs;
  for (const auto& c : cases) {
    for (const auto& p : match_instances(c.pred, c.gt).pairs) {
      pairs.emplace_back(c.pred.instances.at(p.pred).depth_m, c.gt.instances.at(p.gt).depth_m);
    }
  }
  return depth_metrics(std::span<const std::pair<double, double>>(pairs));
}

DepthMetrics depth_metrics(const InstanceSet& pred, const InstanceSet& gt) {
  EvalCase c{pred, gt, {}, {}};
  return depth_metrics(std::span<const EvalCase>(&c, 1));
}

PixelMetrics pixel_semantic_metrics(std::span<const EvalCase> cases, const LabelSet& labels) {
  const std::size_t n = labels.size();
  std::vector<long long> tp(n, 0), fp(n, 0), fn(n, 0);
  std::vector<double> itp(n, 0.0), ifn(n, 0.0);

  // Mean ground-truth instance size per label over all images.
  std::vector<double> size_sum(n, 0.0), size_count(n, 0.0);
  for (const auto& c : cases) {
    for (const auto& [id, info] : c.gt.instances) {
      if (!labels.contains(info.label)) throw InvalidInput("unregistered label in ground truth");
      size_sum[info.label] += static_cast<double>(info.pixels);
      size_count[info.label] += 1.0;
    }
  }

  for (const auto& c : cases) {
    if (!same_shape(c.pred_semantic, c.gt_semantic) || !same_shape(c.gt_semantic, c.gt.ids)) {
      throw InvalidInput("semantic rasters differ in size");
    }
    for (Eigen::Index i = 0; i < c.gt_semantic.size(); ++i) {
      const LabelId g = c.gt_semantic.data()[i];
      const LabelId p = c.pred_semantic.data()[i];
      if (!labels.contains(g) || !labels.contains(p)) throw InvalidInput("unregistered label in semantic raster");
      double w = 1.0;
      const InstanceId inst = c.gt.ids.data()[i];
      if (inst != 0 && size_count[g] > 0) {
        w = (size_sum[g] / size_count[g]) / static_cast<double>(c.gt.instances.at(inst).pixels);
      }
      if (g == p) {
        ++tp[g];
        itp[g] += w;
      } else {
        ++fn[g];
        ifn[g] += w;
        ++fp[p];
      }
    }
  }

  PixelMetrics out;
  double iou_sum = 0, iiou_sum = 0;
  std::size_t iou_n = 0, iiou_n = 0;
  for (std::size_t l = 0; l < n; ++l) {
    const long long den = tp[l] + fp[l] + fn[l];
    if (den == 0) continue;
    const auto& name = labels.label(static_cast<LabelId>(l)).name;
    double iou = pct(static_cast<double>(tp[l]), static_cast<double>(den));
    out.IoU_class[name] = iou;
    iou_sum += iou;
    ++iou_n;
    if (labels.is_object(static_cast<LabelId>(l))) {
      const double iden = itp[l] + static_cast<double>(fp[l]) + ifn[l];
      double iiou = iden > 0 ? pct(itp[l], iden) : 0.0;
      out.iIoU_class[name] = iiou;
      iiou_sum += iiou;
      ++iiou_n;
    }
  }
  out.mean_IoU = iou_n ? iou_sum / static_cast<double>(iou_n) : 100.0;
  out.mean_iIoU = iiou_n ? iiou_sum / static_cast<double>(iiou_n) : 100.0;
  return out;
}

PixelMetrics pixel_semantic_metrics(const Raster<LabelId>& pred_semantic, const Raster<LabelId>& gt_semantic,
                                    const InstanceSet& gt_instances, const LabelSet& labels) {
  EvalCase c{InstanceSet{}, gt_instances, pred_semantic, gt_semantic};
  return pixel_semantic_metrics(std::span<const EvalCase>(&c, 1), labels);
}

MetricReport evaluate(std::span<const EvalCase> cases, const LabelSet& labels, int threads) {
  if (cases.empty()) throw InvalidInput("no images to evaluate");
  for (const auto& c : cases) check_same_shape(c.pred, c.gt);
  std::vector<ZhangPartial> parts(cases.size());
  parallel_for(cases.size(), resolve_threads(threads),
               [&](std::size_t i) { parts[i] = zhang_partial(cases[i].pred, cases[i].gt); });
  MetricReport r;
  r.images = cases.size();
  r.zhang = zhang_aggregate(parts);
  r.ap = cityscapes_ap(cases);
  r.depth = depth_metrics(cases);
  r.pixel = pixel_semantic_metrics(cases, labels);
  return r;
}

}  // namespace ispc
