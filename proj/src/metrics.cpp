#include "sprayrover/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

namespace sprayrover {

MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                             double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw MetricsError("iou threshold must be in (0, 1]");
  MatchResult r;
  r.detection_tp.assign(dets.size(), false);
  r.matched_gt.assign(dets.size(), -1);
  r.gt_matched.assign(gts.size(), false);

  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });

  for (std::size_t di : order) {
    int best = -1;
    double best_iou = iou_threshold;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (r.gt_matched[gi] || gts[gi].class_id != dets[di].class_id) continue;
      const double o = iou(dets[di].box, gts[gi].box);
      if (o >= best_iou && (best < 0 || o > best_iou)) {
        best = static_cast<int>(gi);
        best_iou = o;
      }
    }
    if (best >= 0) {
      r.gt_matched[best] = true;
      r.detection_tp[di] = true;
      r.matched_gt[di] = best;
      ++r.tp;
    } else {
      ++r.fp;
    }
  }
  r.fn = gts.size() - r.tp;
  return r;
}

double precision(std::size_t tp, std::size_t fp) {
  if (tp + fp == 0) throw MetricsError("precision undefined without predictions");
  return double(tp) / double(tp + fp);
}

double recall(std::size_t tp, std::size_t fn) {
  if (tp + fn == 0) throw MetricsError("recall undefined without ground truth");
  return double(tp) / double(tp + fn);
}

namespace {

struct ScoredFlag {
  double confidence;
  bool tp;
};

// Matches each frame independently, then returns the class's detections as
// (confidence, tp) in global sweep order along with the class GT count.
std::vector<ScoredFlag> collect_class(std::span<const FrameSample> frames, ObjectClass cls,
                                      double iou_threshold, std::size_t& gt_count) {
  std::vector<ScoredFlag> flags;
  gt_count = 0;
  for (const auto& f : frames) {
    std::vector<Detection> dets;
    std::vector<GroundTruthBox> gts;
    for (const auto& d : f.detections)
      if (d.class_id == cls) dets.push_back(d);
    for (const auto& g : f.ground_truth)
      if (g.class_id == cls) gts.push_back(g);
    gt_count += gts.size();
    const MatchResult m = match_detections(dets, gts, iou_threshold);
    for (std::size_t i = 0; i < dets.size(); ++i) flags.push_back({dets[i].confidence, m.detection_tp[i]});
  }
  std::stable_sort(flags.begin(), flags.end(),
                   [](const ScoredFlag& a, const ScoredFlag& b) { return a.confidence > b.confidence; });
  return flags;
}

}  // namespace

std::vector<PrPoint> precision_recall_curve(std::span<const FrameSample> frames, ObjectClass cls,
                                            double iou_threshold) {
  std::size_t gt_count = 0;
  const auto flags = collect_class(frames, cls, iou_threshold, gt_count);
  if (gt_count == 0) throw MetricsError("average precision undefined without ground truth");

  std::vector<PrPoint> curve;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    (flags[i].tp ? tp : fp) += 1;
    const bool group_end = i + 1 == flags.size() || flags[i + 1].confidence != flags[i].confidence;
    if (group_end)
      curve.push_back({flags[i].confidence, double(tp) / double(tp + fp), double(tp) / double(gt_count)});
  }
  return curve;
}

double average_precision(std::span<const PrPoint> curve) {
  // Envelope: precision at recall r is the best precision at any recall >= r.
  std::vector<double> envelope(curve.size());
  double best = 0.0;
  for (std::size_t i = curve.size(); i-- > 0;) {
    best = std::max(best, curve[i].precision);
    envelope[i] = best;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    ap += (curve[i].recall - prev_recall) * envelope[i];
    prev_recall = curve[i].recall;
  }
  return ap;
}

double average_precision(std::span<const FrameSample> frames, ObjectClass cls, double iou_threshold) {
  const auto curve = precision_recall_curve(frames, cls, iou_threshold);
  return average_precision(curve);
}

double average_precision(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                         double iou_threshold) {
  FrameSample frame;
  for (auto d : dets) {
    d.class_id = ObjectClass::BreedingSite;
    frame.detections.push_back(d);
  }
  for (auto g : gts) {
    g.class_id = ObjectClass::BreedingSite;
    frame.ground_truth.push_back(g);
  }
  return average_precision(std::span<const FrameSample>(&frame, 1), ObjectClass::BreedingSite, iou_threshold);
}

double map50(std::span<const double> per_class_ap) {
  if (per_class_ap.empty()) throw MetricsError("mAP undefined over zero classes");
  return std::accumulate(per_class_ap.begin(), per_class_ap.end(), 0.0) / double(per_class_ap.size());
}

CorpusStats evaluate_corpus(std::span<const FrameSample> frames, double iou_threshold) {
  CorpusStats s;
  for (const auto& f : frames) {
    const MatchResult m = match_detections(f.detections, f.ground_truth, iou_threshold);
    s.tp += m.tp;
    s.fp += m.fp;
    s.fn += m.fn;
  }
  s.precision = precision(s.tp, s.fp);
  s.recall = recall(s.tp, s.fn);
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cls = static_cast<ObjectClass>(c);
    const bool has_gt = std::any_of(frames.begin(), frames.end(), [cls](const FrameSample& f) {
      return std::any_of(f.ground_truth.begin(), f.ground_truth.end(),
                         [cls](const GroundTruthBox& g) { return g.class_id == cls; });
    });
    if (has_gt) s.per_class_ap.push_back(average_precision(frames, cls, iou_threshold));
  }
  s.map50 = map50(s.per_class_ap);
  return s;
}

double tcrr(std::uint64_t p_pre, std::uint64_t p_post) {
  if (p_pre == 0) throw MetricsError("TCRR undefined for an empty pre-treatment population");
  if (p_post > p_pre) throw MetricsError("post-treatment population exceeds pre-treatment population");
  return (1.0 - double(p_post) / double(p_pre)) * 100.0;
}

double area_coverage(std::uint64_t reached, std::uint64_t total) {
  if (total == 0) throw MetricsError("coverage undefined without checkpoints");
  if (reached > total) throw MetricsError("reached checkpoints exceed total");
  return double(reached) / double(total) * 100.0;
}

UnitPrice parse_price(std::string_view text) {
  auto bad = [&] { return ValidationError("invalid price '" + std::string(text) + "'"); };
  if (text.empty()) throw bad();
  if (text.front() == '-') throw ValidationError("negative price '" + std::string(text) + "'");
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() || frac.size() > 4) throw bad();
  auto digits = [](std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  if (!digits(whole) || !digits(frac) || (dot != std::string_view::npos && frac.empty())) throw bad();
  std::int64_t w = 0;
  std::from_chars(whole.data(), whole.data() + whole.size(), w);
  std::int64_t f = 0;
  if (!frac.empty()) std::from_chars(frac.data(), frac.data() + frac.size(), f);
  for (std::size_t i = frac.size(); i < 4; ++i) f *= 10;
  return {w * 10000 + f};
}

std::string format_money(Money m) {
  const bool neg = m.cents < 0;
  const std::int64_t a = neg ? -m.cents : m.cents;
  std::string frac = std::to_string(a % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return (neg ? "-" : "") + std::to_string(a / 100) + "." + frac;
}

std::string format_price(UnitPrice p) {
  std::string out = std::to_string(p.ten_thousandths / 10000) + ".";
  std::string frac = std::to_string(p.ten_thousandths % 10000);
  frac.insert(0, 4 - frac.size(), '0');
  while (frac.size() > 2 && frac.back() == '0') frac.pop_back();
  return out + frac;
}

namespace {

Money round_to_cents(std::int64_t ten_thousandths) { return {(ten_thousandths + 50) / 100}; }

void check(const CostItem& item) {
  if (item.unit_price.ten_thousandths < 0) throw ValidationError("negative price for '" + item.name + "'");
  if (item.quantity < 0) throw ValidationError("negative quantity for '" + item.name + "'");
}

}  // namespace

Money line_total(const CostItem& item) {
  check(item);
  return round_to_cents(item.unit_price.ten_thousandths * item.quantity);
}

Money cost_total(const CostLedger& ledger) {
  std::int64_t sum = 0;
  for (const auto& item : ledger.items) {
    check(item);
    sum += item.unit_price.ten_thousandths * item.quantity;
  }
  return round_to_cents(sum);
}

}  // namespace sprayrover
