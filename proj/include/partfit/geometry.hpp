/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: geometry.hpp
 *
 * Copyright 2026 The partfit Authors
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

#pragma once

#include <Eigen/Core>

#include <span>
#include <vector>

namespace partfit {

/// A 2x3 motion matrix: a coefficient times the top two rows of a rotation,
/// in image pixels per model unit.
using MotionMatrix = Eigen::Matrix<double, 2, 3>;

/**
 * Linear shape space over p landmarks: k basis shapes (3 x p, model units)
 * and a mean shape whose centroid is the origin.
 *
 * Learned bases carry the mean shape as their first element, so that a
 * single-basis fit with coefficient (1) reproduces the mean.
 */
class ShapeBasis {
public:
    ShapeBasis(Eigen::Matrix3Xd mean_shape, std::vector<Eigen::Matrix3Xd> bases);

    int landmarks() const { return static_cast<int>(mean_shape_.cols()); }
    int size() const { return static_cast<int>(bases_.size()); }

    const Eigen::Matrix3Xd& mean_shape() const { return mean_shape_; }
    const std::vector<Eigen::Matrix3Xd>& bases() const { return bases_; }
    const Eigen::Matrix3Xd& basis(int i) const { return bases_.at(static_cast<std::size_t>(i)); }

    /// Single-basis shape space spanned by the mean shape.
    ShapeBasis mean_only() const;

    /// Sum of c_i B_i in the canonical frame.
    Eigen::Matrix3Xd combine(const Eigen::VectorXd& coefficients) const;

private:
    Eigen::Matrix3Xd mean_shape_;
    std::vector<Eigen::Matrix3Xd> bases_;
};

/// Pose and shape recovered for one object instance.
struct PoseShapeResult {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();
    Eigen::VectorXd coefficients;
    Eigen::Matrix3Xd shape; ///< camera frame, model units
    std::vector<bool> visibility;
};

/// Coefficient and rotation recovered from a motion matrix.
struct MotionFactor {
    double coefficient = 0.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
};

/// P = R_top (sum_i c_i B_i) + t 1^T.
Eigen::Matrix2Xd project_weak_perspective(const ShapeBasis& basis, const Eigen::Matrix3d& rotation,
                                          const Eigen::Vector2d& translation,
                                          const Eigen::VectorXd& coefficients);

/// P = sum_i T_i B_i + t 1^T.
Eigen::Matrix2Xd compose_projection(std::span<const MotionMatrix> motions,
                                    const Eigen::Vector2d& translation, const ShapeBasis& basis);

/**
 * Splits T into c * (top two rows of R).
 *
 * c is the mean of the two singular values, so c >= 0 always. The top rows
 * of R are the polar factor of T (nearest orthonormal frame in Frobenius
 * norm) and the third row is their cross product, so det(R) = +1. A motion
 * that encodes a negative coefficient, T = -|c| R_top, needs no special
 * branch: -R_top with the unchanged cross product is itself the top of a
 * proper rotation (R rotated by pi about the viewing axis), so the sign is
 * absorbed into the rotation.
 *
 * Throws DegenerateMotionError when c < 1e-12.
 */
MotionFactor factor_motion(const MotionMatrix& motion);

/// Returns c * (top two rows of rotation).
MotionMatrix motion_from(double coefficient, const Eigen::Matrix3d& rotation);

/**
 * Rotation R minimizing ||R * canonical - camera||_F after centering both
 * point sets (Kabsch, with the determinant forced to +1).
 *
 * Throws AlignmentError when the cross-covariance has rank < 2.
 */
Eigen::Matrix3d align_to_canonical(const Eigen::Matrix3Xd& shape_camera,
                                   const Eigen::Matrix3Xd& shape_canonical);

/**
 * Outward unit normals of a point cloud from local plane fits: the direction
 * of least variance of each point and its nearest neighbours, oriented away
 * from the centroid. Columns are zero where the fit is degenerate (collinear
 * or coincident neighbourhood, or a normal orthogonal to the centroid
 * direction).
 */
Eigen::Matrix3Xd estimate_normals(const Eigen::Matrix3Xd& points, int neighbours);

/// Subtracts the centroid from every column.
Eigen::Matrix3Xd centered(const Eigen::Matrix3Xd& points);

bool is_rotation(const Eigen::Matrix3d& rotation, double tolerance = 1e-6);

/// Nearest proper rotation to an arbitrary 3x3 matrix.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& matrix);

// Viewpoint convention. Objects are modelled with +y up. The third row of a
// rotation is the viewing direction (object frame) pointing towards the
// camera. R = Rx(elevation) * Ry(azimuth), so the viewer sits above the
// ground plane for positive elevation.

/// Rotation seen from the given azimuth and elevation (degrees).
Eigen::Matrix3d rotation_from_view(double azimuth_deg, double elevation_deg);

/// Azimuth in [0, 360) degrees, atan2(-R(2,0), R(2,2)); independent of roll.
double azimuth_deg(const Eigen::Matrix3d& rotation);

/// Elevation in degrees, asin(R(2,1)).
double elevation_deg(const Eigen::Matrix3d& rotation);

/// Geodesic angle between two rotations in degrees.
double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

} // namespace partfit
