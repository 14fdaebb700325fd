#include "oracles.hpp"

#include "sprayrover/detection.hpp"
#include "sprayrover/metrics.hpp"
#include "sprayrover/scenario.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace sprayrover;

namespace {

VisibleSite site_ahead(double bearing, double distance, double radius = 0.25) {
  VisibleSite s;
  s.id = 1;
  s.bearing = bearing;
  s.distance = distance;
  s.radius = radius;
  s.center = distance * unit_vector(bearing);
  return s;
}

Detection det(double conf, BoundingBox b, ObjectClass c = ObjectClass::BreedingSite) {
  Detection d;
  d.class_id = c;
  d.confidence = conf;
  d.box = b;
  return d;
}

GroundTruthBox gt(BoundingBox b, ObjectClass c = ObjectClass::BreedingSite) {
  GroundTruthBox g;
  g.class_id = c;
  g.box = b;
  return g;
}

DetectorProfile perfect() {
  DetectorProfile p;
  p.tp_rate = {1.0, 1.0};
  p.jitter = 0.0;
  p.fp_per_frame = 0.0;
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Detector

TEST(Detector, ProjectionPinhole) {
  const DetectorProfile p;
  const auto box = project_site(site_ahead(0.0, 1.0), p);
  ASSERT_TRUE(box);
  // u = W/2 - f tan(b), v = H/2 + f h / d, w = 2 f r / d, box height w/2
  const double w = 2 * p.focal_px * 0.25 / 1.0;
  const double v = p.height / 2.0 + p.focal_px * p.camera_height_m / 1.0;
  EXPECT_NEAR(box->x_min, 320 - w / 2, 1e-9);
  EXPECT_NEAR(box->x_max, 320 + w / 2, 1e-9);
  EXPECT_NEAR(box->y_min, v - w / 4, 1e-9);
  EXPECT_NEAR(box->y_max, v + w / 4, 1e-9);
}

TEST(Detector, BearingRoundTrip) {
  const DetectorProfile p;
  for (double b : {-0.4, -0.1, 0.0, 0.2, 0.5}) {
    const auto box = project_site(site_ahead(b, 1.5, 0.1), p);
    ASSERT_TRUE(box);
    const double off = center_offset(det(1.0, *box), p.width);
    EXPECT_NEAR(offset_to_bearing(off, p), b, 1e-9);
  }
}

TEST(Detector, CenterOffset) {
  EXPECT_EQ(center_offset(det(1, {300, 0, 340, 10}), 640), 0.0);
  EXPECT_EQ(center_offset(det(1, {470, 0, 490, 10}), 640), 160.0);
  EXPECT_EQ(center_offset(det(1, {0, 0, 640, 480}), 640), 0.0);
}

TEST(Detector, NothingVisibleNoFalseBoxes) {
  DetectorProfile p;
  p.fp_per_frame = 0.0;
  Rng rng(1);
  const FrameSample f = synthesize_frame({}, p, rng);
  EXPECT_TRUE(f.detections.empty());
  EXPECT_TRUE(f.ground_truth.empty());
}

TEST(Detector, PerfectDetector) {
  Rng rng(1);
  const FrameSample f = synthesize_frame({site_ahead(0.1, 1.2)}, perfect(), rng);
  ASSERT_EQ(f.detections.size(), 1u);
  ASSERT_EQ(f.ground_truth.size(), 1u);
  EXPECT_DOUBLE_EQ(iou(f.detections[0].box, f.ground_truth[0].box), 1.0);
  EXPECT_EQ(f.detections[0].site_id, std::optional<SiteId>(1));
}

TEST(Detector, TruePositiveCountIsBinomial) {
  DetectorProfile p;
  p.tp_rate = {0.516, 0.516};
  p.fp_per_frame = 0.0;
  Rng rng = fork_stream(42, streams::kDetector);
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += static_cast<int>(synthesize_frame({site_ahead(0, 1.0)}, p, rng).detections.size());
  EXPECT_NEAR(hits, 5160, 0.02 * 5160);
}

TEST(Detector, SeededDeterminism) {
  const Scenario s = load_scenario_file(oracle::scenario_path("table1_detector.scn"));
  Rng a = fork_stream(5, streams::kDetector), b = fork_stream(5, streams::kDetector);
  const auto ca = synthesize_corpus(s.detector, 200, a);
  const auto cb = synthesize_corpus(s.detector, 200, b);
  ASSERT_EQ(ca.size(), cb.size());
  for (std::size_t i = 0; i < ca.size(); ++i) {
    ASSERT_EQ(ca[i].detections.size(), cb[i].detections.size());
    for (std::size_t k = 0; k < ca[i].detections.size(); ++k) {
      EXPECT_EQ(ca[i].detections[k].box, cb[i].detections[k].box);
      EXPECT_EQ(ca[i].detections[k].confidence, cb[i].detections[k].confidence);
    }
  }
}

TEST(Detector, ProfileValidation) {
  DetectorProfile p;
  p.tp_rate[1] = 1.5;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.jitter = -1;
  EXPECT_THROW(p.validate(), ValidationError);
}

// ---------------------------------------------------------------------------
// IoU and matching

TEST(Metrics, IouCases) {
  const BoundingBox a{0, 0, 2, 2};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, {5, 5, 6, 6}), 0.0);
  EXPECT_NEAR(iou(a, {1, 0, 3, 2}), 2.0 / 6.0, 1e-15);
}

TEST(Metrics, IouMatchesOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 100);
  for (int i = 0; i < 5000; ++i) {
    const double x0 = u(rng), y0 = u(rng), x1 = u(rng), y1 = u(rng);
    const BoundingBox a{std::min(x0, x1), std::min(y0, y1), std::max(x0, x1) + 1, std::max(y0, y1) + 1};
    const double x2 = u(rng), y2 = u(rng), x3 = u(rng), y3 = u(rng);
    const BoundingBox b{std::min(x2, x3), std::min(y2, y3), std::max(x2, x3) + 1, std::max(y2, y3) + 1};
    EXPECT_NEAR(iou(a, b), oracle::box_iou(a, b), 1e-12);
  }
}

TEST(Metrics, SinglePairMatch) {
  const std::vector<GroundTruthBox> g{gt({0, 0, 10, 10})};
  const std::vector<Detection> d{det(0.9, {0, 0, 10, 6})};   // IoU 0.6
  const MatchResult m = match_detections(d, g, 0.5);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.fp, 0u);
  EXPECT_EQ(m.fn, 0u);
}

TEST(Metrics, TwoDetectionsOneTruth) {
  const std::vector<GroundTruthBox> g{gt({0, 0, 10, 10})};
  const std::vector<Detection> d{det(0.8, {0, 0, 10, 8}), det(0.9, {0, 0, 10, 9})};
  const MatchResult m = match_detections(d, g, 0.5);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fn, 0u);
  EXPECT_FALSE(m.detection_tp[0]);
  EXPECT_TRUE(m.detection_tp[1]);
}

TEST(Metrics, SubThresholdIsMiss) {
  const std::vector<GroundTruthBox> g{gt({0, 0, 100, 10})};
  const std::vector<Detection> d{det(0.9, {0, 0, 49, 10})};   // IoU 0.49
  const MatchResult m = match_detections(d, g, 0.5);
  EXPECT_EQ(m.tp, 0u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fn, 1u);
}

TEST(Metrics, ClassesNeverCrossMatch) {
  const std::vector<GroundTruthBox> g{gt({0, 0, 10, 10}, ObjectClass::Mosquito)};
  const std::vector<Detection> d{det(0.9, {0, 0, 10, 10}, ObjectClass::BreedingSite)};
  const MatchResult m = match_detections(d, g, 0.5);
  EXPECT_EQ(m.tp, 0u);
  EXPECT_EQ(m.fn, 1u);
}

TEST(Metrics, PrecisionRecallWorkedExamples) {
  EXPECT_DOUBLE_EQ(precision(11, 2), 11.0 / 13.0);
  EXPECT_NEAR(precision(11, 2), 0.84615, 1e-5);
  EXPECT_DOUBLE_EQ(precision(4, 0), 1.0);
  EXPECT_DOUBLE_EQ(precision(0, 5), 0.0);
  EXPECT_THROW(precision(0, 0), MetricsError);
  EXPECT_DOUBLE_EQ(recall(16, 15), 16.0 / 31.0);
  EXPECT_NEAR(recall(16, 15), 0.51612, 1e-5);
  EXPECT_DOUBLE_EQ(recall(3, 0), 1.0);
  EXPECT_DOUBLE_EQ(recall(0, 4), 0.0);
  EXPECT_THROW(recall(0, 0), MetricsError);
}

// ---------------------------------------------------------------------------
// Average precision

TEST(Metrics, ApPerfect) {
  const std::vector<GroundTruthBox> g{gt({0, 0, 10, 10}), gt({20, 20, 30, 30})};
  const std::vector<Detection> d{det(0.9, {0, 0, 10, 10}), det(0.8, {20, 20, 30, 30})};
  EXPECT_DOUBLE_EQ(average_precision(d, g, 0.5), 1.0);
}

TEST(Metrics, ApNoMatch) {
  const std::vector<GroundTruthBox> g{gt({0, 0, 10, 10})};
  const std::vector<Detection> d{det(0.9, {50, 50, 60, 60})};
  EXPECT_DOUBLE_EQ(average_precision(d, g, 0.5), 0.0);
}

TEST(Metrics, ApWorkedExample) {
  const std::vector<GroundTruthBox> g{gt({0, 0, 10, 10}), gt({100, 100, 110, 110})};
  const std::vector<Detection> d{det(0.9, {0, 0, 10, 10}), det(0.8, {50, 50, 60, 60}),
                                 det(0.7, {100, 100, 110, 110})};
  EXPECT_NEAR(average_precision(d, g, 0.5), 1.0 * 0.5 + (2.0 / 3.0) * 0.5, 1e-12);
  EXPECT_NEAR(oracle::brute_force_ap(d, g), 5.0 / 6.0, 1e-12);
}

TEST(Metrics, ApMatchesBruteForceOracle) {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pos(0, 200), size(5, 40), conf(0, 1), noise(-4, 4);
  std::uniform_int_distribution<int> ngt(1, 6), ndet(1, 20), coin(0, 3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<GroundTruthBox> g;
    for (int i = ngt(rng); i > 0; --i) {
      const double x = pos(rng), y = pos(rng), w = size(rng), h = size(rng);
      g.push_back(gt({x, y, x + w, y + h}));
    }
    std::vector<Detection> d;
    for (int i = ndet(rng); i > 0; --i) {
      double c = conf(rng);
      if (coin(rng) == 0) c = std::round(c * 4) / 4;   // force ties
      if (coin(rng) != 0) {
        const auto& t = g[std::uniform_int_distribution<std::size_t>(0, g.size() - 1)(rng)].box;
        d.push_back(det(c, {t.x_min + noise(rng), t.y_min + noise(rng), t.x_max + noise(rng), t.y_max + noise(rng)}));
      } else {
        const double x = pos(rng), y = pos(rng);
        d.push_back(det(c, {x, y, x + size(rng), y + size(rng)}));
      }
    }
    ASSERT_NEAR(average_precision(d, g, 0.5), oracle::brute_force_ap(d, g), 1e-9) << "trial " << trial;
  }
}

TEST(Metrics, ApUndefinedWithoutTruth) {
  const std::vector<GroundTruthBox> g;
  const std::vector<Detection> d{det(0.9, {0, 0, 1, 1})};
  EXPECT_THROW(average_precision(d, g, 0.5), MetricsError);
}

TEST(Metrics, Map50) {
  EXPECT_NEAR(map50(std::vector<double>{0.7, 0.534}), 0.617, 1e-12);
  EXPECT_DOUBLE_EQ(map50(std::vector<double>{1.0, 1.0}), 1.0);
  EXPECT_DOUBLE_EQ(map50(std::vector<double>{0.0}), 0.0);
  EXPECT_THROW(map50(std::vector<double>{}), MetricsError);
}

TEST(Metrics, CorpusStatsInvariantUnderFrameOrder) {
  const Scenario s = load_scenario_file(oracle::scenario_path("table1_detector.scn"));
  Rng rng = fork_stream(3, streams::kDetector);
  auto corpus = synthesize_corpus(s.detector, 500, rng);
  const CorpusStats a = evaluate_corpus(corpus);
  std::reverse(corpus.begin(), corpus.end());
  const CorpusStats b = evaluate_corpus(corpus);
  EXPECT_EQ(a.tp, b.tp);
  EXPECT_EQ(a.fp, b.fp);
  EXPECT_EQ(a.fn, b.fn);
  ASSERT_EQ(a.per_class_ap.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(a.per_class_ap[i], b.per_class_ap[i], 1e-12);
  EXPECT_NEAR(a.map50, (a.per_class_ap[0] + a.per_class_ap[1]) / 2, 1e-15);
}

// ---------------------------------------------------------------------------
// Mission metrics and cost ledger

TEST(Metrics, Tcrr) {
  EXPECT_DOUBLE_EQ(tcrr(5, 1), 80.0);
  EXPECT_DOUBLE_EQ(tcrr(7, 7), 0.0);
  EXPECT_DOUBLE_EQ(tcrr(7, 0), 100.0);
  EXPECT_THROW(tcrr(0, 0), MetricsError);
  EXPECT_THROW(tcrr(3, 4), MetricsError);
}

TEST(Metrics, AreaCoverage) {
  EXPECT_DOUBLE_EQ(area_coverage(6, 8), 75.0);
  EXPECT_DOUBLE_EQ(area_coverage(8, 8), 100.0);
  EXPECT_DOUBLE_EQ(area_coverage(0, 8), 0.0);
  EXPECT_THROW(area_coverage(1, 0), MetricsError);
}

TEST(Cost, MotorLine) {
  const CostItem motors{"Motor", parse_price("7.27"), 6};
  EXPECT_EQ(line_total(motors), Money{4362});
  EXPECT_EQ(format_money(line_total(motors)), "43.62");
}

TEST(Cost, EmptyLedger) { EXPECT_EQ(format_money(cost_total({})), "0.00"); }

TEST(Cost, FixtureLinesAndTotal) {
  const Scenario s = load_scenario_file(oracle::scenario_path("timing.scn"));
  // Line totals as printed in the hardware table, in cents.
  const std::vector<std::int64_t> printed{4362, 2310, 564, 1026, 1966, 427, 256, 11112, 855, 684, 8547, 385, 5983, 2564};
  ASSERT_EQ(s.bom.items.size(), printed.size());
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < printed.size(); ++i) {
    EXPECT_EQ(line_total(s.bom.items[i]).cents, printed[i]) << s.bom.items[i].name;
    sum += printed[i];
  }
  EXPECT_EQ(cost_total(s.bom).cents, sum);
  EXPECT_EQ(format_money(cost_total(s.bom)), "410.41");
}

TEST(Cost, OrderIndependent) {
  CostLedger l = load_scenario_file(oracle::scenario_path("timing.scn")).bom;
  const Money a = cost_total(l);
  std::reverse(l.items.begin(), l.items.end());
  EXPECT_EQ(cost_total(l), a);
}

TEST(Cost, RoundsHalfUpOnceAtTheEnd) {
  CostLedger l;
  l.items.push_back({"a", parse_price("0.005"), 1});
  l.items.push_back({"b", parse_price("0.005"), 1});
  EXPECT_EQ(cost_total(l), Money{1});
  EXPECT_EQ(line_total({"c", parse_price("0.0049"), 1}), Money{0});
  EXPECT_EQ(line_total({"d", parse_price("0.005"), 1}), Money{1});
}

TEST(Cost, InvalidPrices) {
  EXPECT_THROW(parse_price("-1.00"), ValidationError);
  EXPECT_THROW(parse_price("1.23456"), ValidationError);
  EXPECT_THROW(parse_price("abc"), ValidationError);
  EXPECT_THROW(parse_price("1."), ValidationError);
  EXPECT_THROW(line_total({"x", UnitPrice{-5}, 1}), ValidationError);
  EXPECT_THROW(line_total({"x", UnitPrice{5}, -1}), ValidationError);
  EXPECT_EQ(format_price(parse_price("7.27")), "7.27");
}
