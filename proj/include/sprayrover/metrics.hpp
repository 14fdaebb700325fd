// Detection and mission evaluation metrics: greedy IoU matching, precision,
// recall, all-point interpolated AP, mAP@50, target class reduction rate,
// checkpoint coverage and the fixed-point cost ledger.
#pragma once

#include "sprayrover/detection.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sprayrover {

/// Raised for inputs on which a metric is undefined.
class MetricsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kIouThreshold50 = 0.5;

struct MatchResult {
  std::vector<bool> detection_tp;   // parallel to the input detections
  std::vector<int> matched_gt;      // ground-truth index per detection, -1 when FP
  std::vector<bool> gt_matched;     // parallel to the input ground truth
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

/// Detections are visited by descending confidence (stable on input order);
/// each claims the unmatched same-class ground truth with the highest IoU at
/// or above `iou_threshold`.
MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                             double iou_threshold);

/// tp / (tp + fp). Undefined without predictions.
double precision(std::size_t tp, std::size_t fp);
/// tp / (tp + fn). Undefined without ground truth.
double recall(std::size_t tp, std::size_t fn);

struct PrPoint {
  double confidence = 0.0;   // lowest confidence admitted at this point
  double precision = 0.0;
  double recall = 0.0;
};

/// Precision/recall after each confidence level of a descending sweep over a
/// corpus, restricted to one class. Tied confidences produce a single point.
std::vector<PrPoint> precision_recall_curve(std::span<const FrameSample> frames, ObjectClass cls,
                                            double iou_threshold);

/// Area under the monotone precision envelope (all-point interpolation).
double average_precision(std::span<const PrPoint> curve);
double average_precision(std::span<const FrameSample> frames, ObjectClass cls, double iou_threshold);
/// Single-frame convenience; all boxes are assumed to share one class.
double average_precision(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                         double iou_threshold);

double map50(std::span<const double> per_class_ap);

struct CorpusStats {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  std::vector<double> per_class_ap;   // classes that have ground truth, in class order
  double map50 = 0.0;
};

/// Pooled counts over every detection, plus per-class AP and their mean.
CorpusStats evaluate_corpus(std::span<const FrameSample> frames, double iou_threshold = kIouThreshold50);

/// Target class reduction rate, percent.
double tcrr(std::uint64_t p_pre, std::uint64_t p_post);

/// Share of checkpoints reached, percent.
double area_coverage(std::uint64_t reached, std::uint64_t total);

// ---------------------------------------------------------------------------
// Cost ledger. Amounts are fixed-point; unit prices keep four decimal places
// so sub-cent prices still round half-up exactly.

struct Money {
  std::int64_t cents = 0;
  bool operator==(const Money&) const = default;
  auto operator<=>(const Money&) const = default;
};

/// Unit price in 1/10000 USD.
struct UnitPrice {
  std::int64_t ten_thousandths = 0;
  bool operator==(const UnitPrice&) const = default;
};

/// Parses a non-negative decimal amount such as "7.27" with up to four
/// fractional digits. Throws ValidationError otherwise.
UnitPrice parse_price(std::string_view text);
std::string format_money(Money m);
std::string format_price(UnitPrice p);

struct CostItem {
  std::string name;
  UnitPrice unit_price;
  std::int64_t quantity = 1;
  bool operator==(const CostItem&) const = default;
};

struct CostLedger {
  std::vector<CostItem> items;
  bool operator==(const CostLedger&) const = default;
};

Money line_total(const CostItem& item);
/// Sum of unit price times quantity, rounded half-up to cents once at the end.
Money cost_total(const CostLedger& ledger);

}  // namespace sprayrover
