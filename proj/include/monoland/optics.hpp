#pragma once

// Pinhole front camera and exact projection of the inclined lenticular disc.

#include <monoland/world.hpp>

#include <algorithm>
#include <cmath>
#include <string_view>

namespace monoland {

struct CameraIntrinsics {
  double focal_px = 800.0;
  int image_width = 960;
  int image_height = 720;
  double mount_pitch = 0.0;  // rad, positive tilts the optical axis down

  double half_fov_horizontal() const { return std::atan(0.5 * image_width / focal_px); }
  double half_fov_vertical() const { return std::atan(0.5 * image_height / focal_px); }
  double cx() const { return 0.5 * image_width; }
  double cy() const { return 0.5 * image_height; }

  void validate() const {
    require(focal_px > 0.0, "focal length must be > 0");
    require(image_width > 0 && image_height > 0, "image size must be > 0");
    require(std::isfinite(mount_pitch), "mount pitch must be finite");
  }
};

enum class ColorBand { A, B, C };

inline std::string_view to_string(ColorBand band) {
  switch (band) {
    case ColorBand::A: return "A";
    case ColorBand::B: return "B";
    case ColorBand::C: return "C";
  }
  return "?";
}

/// Why an observation is (in)visible. The center-based causes are checked
/// before `clipped`, so `below_lower_edge` is exactly the blind area.
enum class Visibility {
  visible,
  behind_camera,
  back_face,
  below_lower_edge,
  above_upper_edge,
  outside_side_edge,
  clipped,
  dropout,
};

inline std::string_view to_string(Visibility v) {
  switch (v) {
    case Visibility::visible: return "visible";
    case Visibility::behind_camera: return "behind_camera";
    case Visibility::back_face: return "back_face";
    case Visibility::below_lower_edge: return "below_lower_edge";
    case Visibility::above_upper_edge: return "above_upper_edge";
    case Visibility::outside_side_edge: return "outside_side_edge";
    case Visibility::clipped: return "clipped";
    case Visibility::dropout: return "dropout";
  }
  return "?";
}

/// What the front camera perceives of the landmark. All measurement fields
/// are zero when `visible` is false.
struct LandmarkObservation {
  bool visible = false;
  Visibility cause = Visibility::behind_camera;
  double apparent_diameter_px = 0.0;  // D1, major axis of the projected ellipse
  double viewing_angle = 0.0;         // theta, between view ray and disc normal
  double ellipse_ratio = 0.0;         // cos(theta)
  ColorBand color_band = ColorBand::A;
  Vec2 centroid_px = Vec2::Zero();

  static LandmarkObservation invisible(Visibility why) {
    LandmarkObservation obs;
    obs.cause = why;
    return obs;
  }

  bool operator==(const LandmarkObservation&) const = default;
};

inline ColorBand color_band(double viewing_angle, const LandmarkConfig& lm) {
  require(std::isfinite(viewing_angle) && viewing_angle >= 0.0 && viewing_angle <= kPi / 2.0,
          "viewing angle must be within [0, pi/2]");
  if (viewing_angle < lm.band_edges[0]) return ColorBand::A;
  if (viewing_angle < lm.band_edges[1]) return ColorBand::B;
  return ColorBand::C;
}

/// Orthonormal camera axes in the world frame. The camera has no roll and
/// pitches only by the fixed mount angle.
struct CameraFrame {
  Vec3 forward;
  Vec3 right;
  Vec3 down;

  static CameraFrame from(double yaw, double mount_pitch) {
    const double cp = std::cos(mount_pitch);
    const double sp = std::sin(mount_pitch);
    CameraFrame f;
    f.forward = Vec3(cp * std::cos(yaw), cp * std::sin(yaw), -sp);
    f.right = Vec3(std::sin(yaw), -std::cos(yaw), 0.0);
    f.down = f.forward.cross(f.right);
    return f;
  }
};

inline LandmarkObservation project_landmark(const DroneState& drone, const CameraIntrinsics& cam,
                                            const LandmarkConfig& lm, const PadConfig& pad) {
  const Vec3 pad_center = platform_pose(pad.motion, drone.time);
  const LandmarkPose pose = landmark_pose(lm, pad_center, pad.facing);
  const CameraFrame frame = CameraFrame::from(drone.yaw, cam.mount_pitch);

  const Vec3 ray = pose.center - drone.position;
  const double along = ray.dot(frame.forward);
  if (along <= 0.0) return LandmarkObservation::invisible(Visibility::behind_camera);

  const double range = ray.norm();
  const double cos_view = -ray.dot(pose.normal) / range;
  if (cos_view <= 0.0) return LandmarkObservation::invisible(Visibility::back_face);

  const double u = cam.cx() + cam.focal_px * ray.dot(frame.right) / along;
  const double v = cam.cy() + cam.focal_px * ray.dot(frame.down) / along;
  if (v > cam.image_height) return LandmarkObservation::invisible(Visibility::below_lower_edge);
  if (v < 0.0) return LandmarkObservation::invisible(Visibility::above_upper_edge);
  if (u < 0.0 || u > cam.image_width) return LandmarkObservation::invisible(Visibility::outside_side_edge);

  const double diameter_px = cam.focal_px * lm.diameter / range;
  const double half = 0.5 * diameter_px;
  if (u - half < 0.0 || u + half > cam.image_width || v - half < 0.0 || v + half > cam.image_height)
    return LandmarkObservation::invisible(Visibility::clipped);

  LandmarkObservation obs;
  obs.visible = true;
  obs.cause = Visibility::visible;
  obs.apparent_diameter_px = diameter_px;
  obs.ellipse_ratio = std::min(cos_view, 1.0);
  obs.viewing_angle = std::acos(obs.ellipse_ratio);
  obs.color_band = color_band(obs.viewing_angle, lm);
  obs.centroid_px = Vec2(u, v);
  return obs;
}

/// Forward (along-heading) horizontal distance to the landmark below which its
/// center leaves the lower image edge. Returns 0 when the lower edge looks at
/// or past the vertical.
inline double blind_region_boundary(const CameraIntrinsics& cam, const LandmarkConfig& lm, double altitude) {
  require(altitude >= lm.height, "altitude must be at least the landmark height");
  const double lower_edge = cam.mount_pitch + cam.half_fov_vertical();
  if (lower_edge >= kPi / 2.0) return 0.0;
  return (altitude - lm.height) / std::tan(lower_edge);
}

/// Horizontal distance from the camera to the landmark center measured along
/// the camera heading; the quantity blind_region_boundary() bounds.
inline double forward_distance_to_landmark(const DroneState& drone, const LandmarkConfig& lm, const PadConfig& pad) {
  const Vec3 pad_center = platform_pose(pad.motion, drone.time);
  const LandmarkPose pose = landmark_pose(lm, pad_center, pad.facing);
  const Vec2 h = heading_vector(drone.yaw);
  return (pose.center.x() - drone.position.x()) * h.x() + (pose.center.y() - drone.position.y()) * h.y();
}

}  // namespace monoland
