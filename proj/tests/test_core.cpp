/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <random>

#include "blindspot/core.hpp"
#include "support.hpp"

using namespace blindspot;
using blindspot::testing::homogeneous_apply;
using blindspot::testing::random_transform;
using blindspot::testing::random_vec;

TEST(RigidTransform, IdentityLeavesCloudUnchanged) {
  std::mt19937_64 rng(1);
  PointCloud c;
  for (int i = 0; i < 50; ++i) c.points.push_back(random_vec(rng, -100, 100));
  const PointCloud out = transform_cloud(c, {RigidTransform::identity(), Frame::vehicle(), Frame::vehicle()});
  ASSERT_EQ(out.points.size(), c.points.size());
  for (std::size_t i = 0; i < c.points.size(); ++i) EXPECT_EQ(out.points[i], c.points[i]);
}

TEST(RigidTransform, PureTranslation) {
  PointCloud c;
  c.points = {Vec3::Zero()};
  const PointCloud out =
      transform_cloud(c, {RigidTransform::translation({1, 2, 3}), Frame::vehicle(), Frame::world()});
  EXPECT_EQ(out.points[0], Vec3(1, 2, 3));
  EXPECT_EQ(out.frame, Frame::world());
}

TEST(RigidTransform, MatchesHomogeneousMatrixAndInverts) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 100; ++k) {
    const RigidTransform T = random_transform(rng);
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = T.rotation();
    m.topRightCorner<3, 1>() = T.translation();
    const Eigen::Matrix4d minv = m.inverse();
    for (int i = 0; i < 20; ++i) {
      const Vec3 p = random_vec(rng, -100, 100);
      EXPECT_LT((T.apply(p) - homogeneous_apply(m, p)).norm(), 1e-9);
      EXPECT_LT((T.inverse().apply(T.apply(p)) - p).norm(), 1e-9);
      EXPECT_LT((T.inverse().apply(p) - homogeneous_apply(minv, p)).norm(), 1e-9);
    }
  }
}

TEST(RigidTransform, ComposeIdentityAndPointwise) {
  std::mt19937_64 rng(3);
  const RigidTransform a = random_transform(rng), b = random_transform(rng);
  const RigidTransform id;
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = random_vec(rng, -20, 20);
    EXPECT_LT((compose(a, id).apply(p) - a.apply(p)).norm(), 1e-12);
    EXPECT_LT((compose(id, a).apply(p) - a.apply(p)).norm(), 1e-12);
    EXPECT_LT((compose(a, b).apply(p) - a.apply(b.apply(p))).norm(), 1e-12);
  }
}

TEST(RigidTransform, YawPitchRollConvention) {
  // yaw 90: +x turns into +y.
  EXPECT_LT((RigidTransform::from_ypr_deg(Vec3::Zero(), 90, 0, 0).apply({1, 0, 0}) - Vec3(0, 1, 0)).norm(), 1e-12);
  // positive pitch tilts +x downward.
  const Vec3 d = RigidTransform::from_ypr_deg(Vec3::Zero(), 0, 30, 0).apply({1, 0, 0});
  EXPECT_LT(d.z(), 0.0);
  EXPECT_NEAR(d.z(), -0.5, 1e-12);
  // roll 90: +y turns into +z.
  EXPECT_LT((RigidTransform::from_ypr_deg(Vec3::Zero(), 0, 0, 90).apply({0, 1, 0}) - Vec3(0, 0, 1)).norm(), 1e-12);
  // Yaw applied last (intrinsic Z-Y'-X'').
  const Mat3 R = RigidTransform::from_ypr_deg(Vec3::Zero(), 40, 20, 10).rotation();
  const Mat3 expected = (Eigen::AngleAxisd(deg2rad(40), Vec3::UnitZ()) *
                         Eigen::AngleAxisd(deg2rad(20), Vec3::UnitY()) *
                         Eigen::AngleAxisd(deg2rad(10), Vec3::UnitX()))
                            .toRotationMatrix();
  EXPECT_LT((R - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RigidTransform, VehicleFrameConvention) {
  // A point 10 m ahead of a vehicle at world (5, 3, 0) heading +y.
  const RigidTransform vehicle_to_world = RigidTransform::from_ypr_deg({5, 3, 0}, 90, 0, 0);
  const Vec3 ahead_world(5, 13, 0);
  const Vec3 v = vehicle_to_world.inverse().apply(ahead_world);
  EXPECT_NEAR(v.x(), 10.0, 1e-12);
  EXPECT_NEAR(v.y(), 0.0, 1e-12);
}

TEST(RigidTransform, RejectsNonRotation) {
  Mat3 scale = Mat3::Identity() * 2.0;
  EXPECT_THROW(RigidTransform(scale, Vec3::Zero()), ContractError);
  Mat3 reflect = Mat3::Identity();
  reflect(0, 0) = -1.0;
  EXPECT_THROW(RigidTransform(reflect, Vec3::Zero()), ContractError);
  EXPECT_THROW(RigidTransform(Mat3::Identity(), Vec3(std::nan(""), 0, 0)), ContractError);
}

TEST(TransformCloud, PreservesDistancesAndCount) {
  std::mt19937_64 rng(4);
  PointCloud c;
  c.frame = Frame::sensor(3);
  c.timestep = 17;
  for (int i = 0; i < 200; ++i) c.points.push_back(random_vec(rng, -80, 80));
  const RigidTransform T = random_transform(rng);
  const PointCloud out = transform_cloud(c, {T, Frame::sensor(3), Frame::vehicle()});
  ASSERT_EQ(out.size(), c.size());
  EXPECT_EQ(out.timestep, 17);
  EXPECT_EQ(out.frame, Frame::vehicle());
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    const double before = (c.points[i] - c.points[i + 1]).norm();
    const double after = (out.points[i] - out.points[i + 1]).norm();
    EXPECT_NEAR(before, after, 1e-9);
    EXPECT_LT((out.points[i] - T.apply(c.points[i])).norm(), 1e-12);
  }
}

TEST(TransformCloud, FrameMismatchIsContractError) {
  PointCloud c;
  c.frame = Frame::world();
  EXPECT_THROW(transform_cloud(c, {RigidTransform{}, Frame::vehicle(), Frame::world()}), ContractError);
  c.frame = Frame::sensor(1);
  EXPECT_THROW(transform_cloud(c, {RigidTransform{}, Frame::sensor(2), Frame::vehicle()}), ContractError);
}

TEST(PointCloud, ValidateRejectsNonFinite) {
  PointCloud c;
  c.points = {{0, 0, 0}};
  EXPECT_NO_THROW(c.validate());
  c.points.push_back({0, std::numeric_limits<double>::infinity(), 0});
  EXPECT_THROW(c.validate(), ContractError);
  PointCloud empty;
  EXPECT_NO_THROW(empty.validate());
}

TEST(Aabb, CornersAndQueries) {
  EXPECT_THROW(Aabb::from_corners({1, 0, 0}, {0, 1, 1}), ContractError);
  const Aabb b = Aabb::from_corners({-1, -2, 0}, {1, 2, 3});
  EXPECT_DOUBLE_EQ(b.volume(), 24.0);
  EXPECT_TRUE(b.contains(Vec3(1, 2, 3)));
  EXPECT_FALSE(b.strictly_contains(Vec3(1, 0, 1)));
  EXPECT_TRUE(b.strictly_contains(Vec3(0, 0, 1)));
  EXPECT_EQ(b.center(), Vec3(0, 0, 1.5));
  Aabb e;
  EXPECT_FALSE(e.valid());
  e.extend(Vec3(1, 1, 1));
  EXPECT_TRUE(e.valid());
  EXPECT_EQ(e.volume(), 0.0);
}

TEST(Frame, EqualityAndNames) {
  EXPECT_EQ(Frame::sensor(2), Frame::sensor(2));
  EXPECT_FALSE(Frame::sensor(2) == Frame::sensor(3));
  EXPECT_FALSE(Frame::vehicle() == Frame::world());
  EXPECT_EQ(Frame::vehicle().to_string(), "vehicle");
}
