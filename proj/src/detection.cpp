#include "sprayrover/detection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sprayrover {

void DetectorProfile::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string("detector ") + name + " must be in [0,1]");
  };
  unit(tp_rate[0], "tp_rate_mosquito");
  unit(tp_rate[1], "tp_rate_site");
  unit(fp_site_share, "fp_site_share");
  unit(mosquito_rate, "mosquito_rate");
  unit(tp_conf_min, "tp_conf_min");
  unit(tp_conf_max, "tp_conf_max");
  unit(fp_conf_min, "fp_conf_min");
  unit(fp_conf_max, "fp_conf_max");
  if (tp_conf_min > tp_conf_max) throw ValidationError("detector tp_conf_min exceeds tp_conf_max");
  if (fp_conf_min > fp_conf_max) throw ValidationError("detector fp_conf_min exceeds fp_conf_max");
  if (!(fp_per_frame >= 0.0)) throw ValidationError("detector fp_per_frame must be >= 0");
  if (!(jitter >= 0.0)) throw ValidationError("detector jitter must be >= 0");
  if (width <= 0 || height <= 0) throw ValidationError("detector frame size must be positive");
  if (!(focal_px > 0.0)) throw ValidationError("detector focal must be > 0");
  if (!(fov > 0.0 && fov <= std::numbers::pi)) throw ValidationError("detector fov must be in (0, pi]");
  if (!(range_m > 0.0)) throw ValidationError("detector range must be > 0");
}

namespace {

std::optional<BoundingBox> clip(BoundingBox b, const DetectorProfile& p) {
  if (b.x_min > b.x_max) std::swap(b.x_min, b.x_max);
  if (b.y_min > b.y_max) std::swap(b.y_min, b.y_max);
  b.x_min = std::clamp(b.x_min, 0.0, double(p.width));
  b.x_max = std::clamp(b.x_max, 0.0, double(p.width));
  b.y_min = std::clamp(b.y_min, 0.0, double(p.height));
  b.y_max = std::clamp(b.y_max, 0.0, double(p.height));
  if (!b.valid()) return std::nullopt;
  return b;
}

BoundingBox centered(double cx, double cy, double w, double h) {
  return {cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0};
}

BoundingBox jitter(const BoundingBox& truth, const DetectorProfile& p, Rng& rng) {
  if (p.jitter <= 0.0) return truth;
  std::normal_distribution<double> n(0.0, p.jitter);
  const double w = truth.width();
  const double h = truth.height();
  BoundingBox b{truth.x_min + w * n(rng), truth.y_min + h * n(rng), truth.x_max + w * n(rng), truth.y_max + h * n(rng)};
  if (auto c = clip(b, p)) return *c;
  return truth;
}

double uniform(Rng& rng, double lo, double hi) {
  return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool bernoulli(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

}  // namespace

std::optional<BoundingBox> project_site(const VisibleSite& site, const DetectorProfile& p) {
  if (!(site.distance > 0.0) || std::abs(site.bearing) >= std::numbers::pi / 2.0) return std::nullopt;
  const double u = p.width / 2.0 - p.focal_px * std::tan(site.bearing);
  const double v = p.height / 2.0 + p.focal_px * p.camera_height_m / site.distance;
  const double w = p.focal_px * 2.0 * site.radius / site.distance;
  return clip(centered(u, v, w, 0.5 * w), p);
}

FrameSample synthesize_frame(const std::vector<VisibleSite>& visible, const DetectorProfile& p, Rng& rng) {
  FrameSample frame;
  for (const auto& site : visible) {
    const auto box = project_site(site, p);
    if (!box) continue;
    frame.ground_truth.push_back({ObjectClass::BreedingSite, *box, site.id});
    if (bernoulli(rng, p.tp(ObjectClass::BreedingSite)))
      frame.detections.push_back({ObjectClass::BreedingSite, uniform(rng, p.tp_conf_min, p.tp_conf_max),
                                  jitter(*box, p, rng), site.id});

    if (p.mosquito_rate > 0.0 && bernoulli(rng, p.mosquito_rate)) {
      const double w = std::max(6.0, 0.3 * box->width());
      const auto mbox = clip(centered((box->x_min + box->x_max) / 2.0, box->y_min - w / 2.0, w, w), p);
      if (mbox) {
        frame.ground_truth.push_back({ObjectClass::Mosquito, *mbox, std::nullopt});
        if (bernoulli(rng, p.tp(ObjectClass::Mosquito)))
          frame.detections.push_back({ObjectClass::Mosquito, uniform(rng, p.tp_conf_min, p.tp_conf_max),
                                      jitter(*mbox, p, rng), std::nullopt});
      }
    }
  }

  const int false_boxes = p.fp_per_frame > 0.0 ? std::poisson_distribution<int>(p.fp_per_frame)(rng) : 0;
  for (int i = 0; i < false_boxes; ++i) {
    const ObjectClass cls = bernoulli(rng, p.fp_site_share) ? ObjectClass::BreedingSite : ObjectClass::Mosquito;
    const double w = uniform(rng, 0.05, 0.3) * p.width;
    const double cx = uniform(rng, 0.0, p.width);
    const double cy = uniform(rng, 0.0, p.height);
    const double conf = uniform(rng, p.fp_conf_min, p.fp_conf_max);
    if (auto box = clip(centered(cx, cy, w, 0.6 * w), p))
      frame.detections.push_back({cls, conf, *box, std::nullopt});
  }
  return frame;
}

std::vector<FrameSample> synthesize_corpus(const DetectorProfile& p, std::size_t frames, Rng& rng,
                                           const SceneSampler& scenes) {
  std::vector<FrameSample> out;
  out.reserve(frames);
  std::vector<VisibleSite> visible;
  for (std::size_t f = 0; f < frames; ++f) {
    visible.clear();
    const int n = std::uniform_int_distribution<int>(1, std::max(1, scenes.max_sites))(rng);
    for (int i = 0; i < n; ++i) {
      VisibleSite s;
      s.id = static_cast<SiteId>(i + 1);
      s.bearing = uniform(rng, -p.fov / 2.0, p.fov / 2.0);
      s.distance = uniform(rng, scenes.min_distance_m, p.range_m);
      s.radius = uniform(rng, scenes.radius_min_m, scenes.radius_max_m);
      s.center = s.distance * unit_vector(s.bearing);
      visible.push_back(s);
    }
    out.push_back(synthesize_frame(visible, p, rng));
  }
  return out;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

double center_offset(const Detection& det, double frame_width) {
  return (det.box.x_min + det.box.x_max) / 2.0 - frame_width / 2.0;
}

double offset_to_bearing(double offset_px, const DetectorProfile& p) {
  return std::atan2(-offset_px, p.focal_px);
}

}  // namespace sprayrover
