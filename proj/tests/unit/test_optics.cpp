#include "support/oracles.hpp"

#include <monoland/optics.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace monoland;

namespace {

// Camera whose vertical field of view is exactly 2 * half_deg.
CameraIntrinsics camera_with_vfov(double half_deg) {
  CameraIntrinsics c;
  c.focal_px = 0.5 * c.image_height / std::tan(deg_to_rad(half_deg));
  return c;
}

DroneState facing_pad(double x, double y, double z) {
  DroneState s;
  s.position = Vec3(x, y, z);
  s.yaw = kPi;
  return s;
}

}  // namespace

TEST(Project, HeadOnAtTenMetres) {
  LandmarkConfig lm;
  lm.inclination = 0.0;
  const CameraIntrinsics cam;  // 800 px
  // Landmark at (-1, 0, 0.5) with normal +x; ten metres down the normal.
  const LandmarkObservation o = project_landmark(facing_pad(9.0, 0.0, 0.5), cam, lm, {});
  ASSERT_TRUE(o.visible);
  EXPECT_NEAR(o.apparent_diameter_px, 40.0, 1e-9);
  EXPECT_NEAR(o.ellipse_ratio, 1.0, 1e-15);
  EXPECT_NEAR(o.viewing_angle, 0.0, 1e-7);
  EXPECT_EQ(o.color_band, ColorBand::A);
  EXPECT_NEAR(o.centroid_px.x(), 480.0, 1e-9);
  EXPECT_NEAR(o.centroid_px.y(), 360.0, 1e-9);
}

TEST(Project, BehindTheCamera) {
  DroneState s = facing_pad(9.0, 0.0, 0.5);
  s.yaw = 0.0;
  const LandmarkObservation o = project_landmark(s, {}, {}, {});
  EXPECT_FALSE(o.visible);
  EXPECT_EQ(o.cause, Visibility::behind_camera);
  EXPECT_EQ(o.apparent_diameter_px, 0.0);
}

TEST(Project, BackFaceIsInvisible) {
  LandmarkConfig lm;
  lm.inclination = 0.0;
  // Behind the landmark, looking toward +x at its back side.
  DroneState s;
  s.position = Vec3(-6.0, 0.0, 0.5);
  s.yaw = 0.0;
  EXPECT_EQ(project_landmark(s, {}, lm, {}).cause, Visibility::back_face);
}

TEST(Project, BlindAreaNearlyAboveThePad) {
  const CameraIntrinsics cam = camera_with_vfov(30.0);
  const LandmarkConfig lm;
  // Landmark center at (-1, 0, 0.5); drone 1 m in front of it at 2 m.
  const DroneState s = facing_pad(0.0, 0.0, 2.0);
  const double below_axis = oracle::depression(2.0 - lm.height, 1.0);
  EXPECT_GT(rad_to_deg(below_axis), 30.0);
  EXPECT_NEAR(rad_to_deg(oracle::depression(2.0, 1.0)), 63.43, 0.01);  // the same pose measured to the pad plane
  const LandmarkObservation o = project_landmark(s, cam, lm, {});
  EXPECT_FALSE(o.visible);
  EXPECT_EQ(o.cause, Visibility::below_lower_edge);
}

TEST(Project, CentroidMatchesRotationMatrixOracle) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LandmarkConfig lm;
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    CameraIntrinsics cam;
    cam.mount_pitch = deg_to_rad(-10.0 + 30.0 * u(rng));
    DroneState s = facing_pad(1.0 + 19.0 * u(rng), -6.0 + 12.0 * u(rng), 0.5 + 9.5 * u(rng));
    s.yaw = kPi + deg_to_rad(-20.0 + 40.0 * u(rng));
    const LandmarkObservation o = project_landmark(s, cam, lm, {});
    if (!o.visible) continue;
    const LandmarkPose pose = landmark_pose(lm, Vec3::Zero(), 0.0);
    const oracle::Pixel px = oracle::project(s.position, s.yaw, cam.mount_pitch, cam.focal_px, cam.cx(), cam.cy(),
                                             pose.center);
    EXPECT_NEAR(o.centroid_px.x(), px.u, 1e-8);
    EXPECT_NEAR(o.centroid_px.y(), px.v, 1e-8);
    ++checked;
  }
  EXPECT_GT(checked, 500);
}

TEST(ColorBand, DefaultEdges) {
  const LandmarkConfig lm;
  EXPECT_EQ(color_band(0.0, lm), ColorBand::A);
  EXPECT_EQ(color_band(deg_to_rad(20.0), lm), ColorBand::B);
  EXPECT_EQ(color_band(deg_to_rad(40.0), lm), ColorBand::C);
  EXPECT_EQ(color_band(lm.band_edges[0], lm), ColorBand::B);
  EXPECT_EQ(color_band(lm.band_edges[1], lm), ColorBand::C);
  EXPECT_EQ(color_band(kPi / 2, lm), ColorBand::C);
  EXPECT_THROW(color_band(-1e-9, lm), InvalidInput);
  EXPECT_THROW(color_band(kPi / 2 + 1e-9, lm), InvalidInput);
}

TEST(ColorBand, TotalAndMonotone) {
  const LandmarkConfig lm;
  int prev = 0;
  for (int i = 0; i <= 9000; ++i) {
    const int b = static_cast<int>(color_band(kPi / 2 * i / 9000.0, lm));
    EXPECT_GE(b, prev);
    prev = b;
  }
  EXPECT_EQ(prev, 2);
}

TEST(BlindBoundary, SixtyDegreeFieldOfView) {
  const CameraIntrinsics cam = camera_with_vfov(30.0);
  const LandmarkConfig lm;
  const double expected = 2.0 / std::tan(deg_to_rad(30.0));
  EXPECT_NEAR(blind_region_boundary(cam, lm, 2.5), expected, 1e-9);
  EXPECT_NEAR(blind_region_boundary(cam, lm, 2.5), 3.464, 1e-3);
}

TEST(BlindBoundary, EdgeCases) {
  const LandmarkConfig lm;
  EXPECT_EQ(blind_region_boundary(camera_with_vfov(30.0), lm, lm.height), 0.0);
  EXPECT_LT(blind_region_boundary(camera_with_vfov(89.0), lm, 2.5), 0.05);
  CameraIntrinsics steep = camera_with_vfov(30.0);
  steep.mount_pitch = deg_to_rad(60.0);
  EXPECT_EQ(blind_region_boundary(steep, lm, 2.5), 0.0);
  EXPECT_THROW(blind_region_boundary(camera_with_vfov(30.0), lm, 0.1), InvalidInput);
}

TEST(Properties, DiameterStrictlyDecreasingInRange) {
  const LandmarkConfig lm;
  const CameraIntrinsics cam;
  double prev = 1e300;
  for (int i = 0; i <= 300; ++i) {
    const double d = 3.0 + 0.05 * i;
    const LandmarkObservation o = project_landmark(facing_pad(d, 0.3 * d, 0.5 + 0.1 * d), cam, lm, {});
    ASSERT_TRUE(o.visible) << d;
    EXPECT_LT(o.apparent_diameter_px, prev);
    prev = o.apparent_diameter_px;
  }
}

TEST(Properties, ReciprocityAndEllipseBounds) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const LandmarkConfig lm;
  const CameraIntrinsics cam;
  int visible = 0;
  for (int i = 0; i < 5000; ++i) {
    const DroneState s = facing_pad(1.0 + 19.0 * u(rng), -8.0 + 16.0 * u(rng), 0.5 + 9.5 * u(rng));
    const LandmarkObservation o = project_landmark(s, cam, lm, {});
    if (!o.visible) continue;
    ++visible;
    const double range = (landmark_pose(lm, Vec3::Zero(), 0.0).center - s.position).norm();
    EXPECT_NEAR(o.apparent_diameter_px * range / cam.focal_px / lm.diameter, 1.0, 1e-9);
    EXPECT_GT(o.ellipse_ratio, 0.0);
    EXPECT_LE(o.ellipse_ratio, 1.0);
    EXPECT_NEAR(std::cos(o.viewing_angle), o.ellipse_ratio, 1e-12);
  }
  EXPECT_GT(visible, 1000);
}

TEST(Properties, BlindPredicateAgreesWithBoundary) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const LandmarkConfig lm;
  for (double pitch_deg : {0.0, 10.0}) {
    CameraIntrinsics cam;
    cam.mount_pitch = deg_to_rad(pitch_deg);
    int blind = 0;
    for (int i = 0; i < 5000; ++i) {
      DroneState s = facing_pad(-0.5 + 8.0 * u(rng), -2.0 + 4.0 * u(rng), 0.5 + 9.5 * u(rng));
      s.yaw = kPi + deg_to_rad(-15.0 + 30.0 * u(rng));
      const LandmarkObservation o = project_landmark(s, cam, lm, {});
      if (o.cause == Visibility::behind_camera || o.cause == Visibility::back_face) continue;
      const double r = blind_region_boundary(cam, lm, s.position.z());
      const double fwd = forward_distance_to_landmark(s, lm, {});
      if (std::abs(fwd - r) < 1e-3) continue;
      EXPECT_EQ(o.cause == Visibility::below_lower_edge, fwd < r) << fwd << " vs " << r;
      if (o.cause == Visibility::below_lower_edge) {
        EXPECT_LT(fwd, r + 1e-3);
        ++blind;
      }
    }
    EXPECT_GT(blind, 100);
  }
}
