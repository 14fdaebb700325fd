// Synthetic camera detector. Stands in for the onboard object detector with a
// stochastic confusion profile; boxes come from a pinhole projection of the
// sites visible in the camera cone.
#pragma once

#include "sprayrover/environment.hpp"
#include "sprayrover/rng.hpp"

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

namespace sprayrover {

enum class ObjectClass : std::uint8_t { Mosquito = 0, BreedingSite = 1 };
inline constexpr int kNumClasses = 2;

struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_min < x_max && y_min < y_max; }
  bool operator==(const BoundingBox&) const = default;
};

struct Detection {
  ObjectClass class_id = ObjectClass::BreedingSite;
  double confidence = 0.0;
  BoundingBox box;
  std::optional<SiteId> site_id;   // set when the detection came from a real site
};

struct GroundTruthBox {
  ObjectClass class_id = ObjectClass::BreedingSite;
  BoundingBox box;
  std::optional<SiteId> site_id;
};

struct FrameSample {
  std::vector<GroundTruthBox> ground_truth;
  std::vector<Detection> detections;
};

struct DetectorProfile {
  std::array<double, kNumClasses> tp_rate{0.516, 0.516};   // indexed by ObjectClass
  double fp_per_frame = 0.05;
  double fp_site_share = 0.5;    // fraction of false boxes labelled breeding-site
  double mosquito_rate = 0.0;    // chance a visible site also shows a mosquito box
  double tp_conf_min = 0.6;
  double tp_conf_max = 0.99;
  double fp_conf_min = 0.3;
  double fp_conf_max = 0.7;
  double jitter = 0.05;           // box-edge noise, as a share of the box size
  int width = 640;
  int height = 480;
  double focal_px = 160.0;       // a 0.5 m wide site at 0.5 m spans a quarter of 640 px
  double camera_height_m = 0.3;
  double fov = std::numbers::pi / 3.0;
  double range_m = 2.5;

  double tp(ObjectClass c) const { return tp_rate[static_cast<int>(c)]; }
  void validate() const;
};

/// Ground-truth box for a site seen at (bearing, distance), clipped to the
/// frame. Empty when the projection falls outside the frame.
std::optional<BoundingBox> project_site(const VisibleSite& site, const DetectorProfile& profile);

FrameSample synthesize_frame(const std::vector<VisibleSite>& visible, const DetectorProfile& profile,
                             Rng& rng);

/// Random scenes for offline evaluation: each frame sees 1..max_sites sites
/// at random bearing inside the field of view and distance in
/// [min_distance_m, range], radius in [radius_min_m, radius_max_m].
struct SceneSampler {
  int max_sites = 3;
  double min_distance_m = 0.8;
  double radius_min_m = 0.1;
  double radius_max_m = 0.3;
};

std::vector<FrameSample> synthesize_corpus(const DetectorProfile& profile, std::size_t frames, Rng& rng,
                                           const SceneSampler& scenes = {});

double iou(const BoundingBox& a, const BoundingBox& b);

/// Horizontal pixel offset of the box center from the frame centerline;
/// negative means the target is left of center.
double center_offset(const Detection& det, double frame_width);

/// Bearing (radians, counter-clockwise positive) corresponding to a pixel
/// offset from the centerline.
double offset_to_bearing(double offset_px, const DetectorProfile& profile);

}  // namespace sprayrover
