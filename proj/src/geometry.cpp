/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: geometry.cpp
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

#include "partfit/geometry.hpp"

#include "partfit/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>
#include <string>

namespace partfit {

namespace {

constexpr double kMinCoefficient = 1e-12;
constexpr double kCentroidTolerance = 1e-9;

double to_radians(double degrees) { return degrees * std::numbers::pi / 180.0; }
double to_degrees(double radians) { return radians * 180.0 / std::numbers::pi; }

} // namespace

ShapeBasis::ShapeBasis(Eigen::Matrix3Xd mean_shape, std::vector<Eigen::Matrix3Xd> bases)
    : mean_shape_(std::move(mean_shape)), bases_(std::move(bases))
{
    const auto p = mean_shape_.cols();
    detail::require(p >= 4, "ShapeBasis: need at least 4 landmarks, got " + std::to_string(p));
    detail::require(!bases_.empty(), "ShapeBasis: need at least one basis shape");
    for (std::size_t i = 0; i < bases_.size(); ++i) {
        detail::require(bases_[i].cols() == p, "ShapeBasis: basis " + std::to_string(i) +
                                                   " has " + std::to_string(bases_[i].cols()) +
                                                   " columns, expected " + std::to_string(p));
        detail::require(bases_[i].allFinite(), "ShapeBasis: basis " + std::to_string(i) +
                                                   " has non-finite entries");
    }
    detail::require(mean_shape_.allFinite(), "ShapeBasis: mean shape has non-finite entries");
    const Eigen::Vector3d centroid = mean_shape_.rowwise().mean();
    const double scale = std::max(1.0, mean_shape_.cwiseAbs().maxCoeff());
    detail::require(centroid.norm() <= kCentroidTolerance * scale,
                    "ShapeBasis: mean shape is not centered");
}

ShapeBasis ShapeBasis::mean_only() const { return ShapeBasis(mean_shape_, {mean_shape_}); }

Eigen::Matrix3Xd ShapeBasis::combine(const Eigen::VectorXd& coefficients) const
{
    detail::require(coefficients.size() == size(), "ShapeBasis::combine: expected " +
                                                       std::to_string(size()) + " coefficients");
    Eigen::Matrix3Xd shape = Eigen::Matrix3Xd::Zero(3, landmarks());
    for (int i = 0; i < size(); ++i) {
        shape += coefficients(i) * bases_[static_cast<std::size_t>(i)];
    }
    return shape;
}

Eigen::Matrix2Xd project_weak_perspective(const ShapeBasis& basis, const Eigen::Matrix3d& rotation,
                                          const Eigen::Vector2d& translation,
                                          const Eigen::VectorXd& coefficients)
{
    const Eigen::Matrix3Xd shape = basis.combine(coefficients);
    Eigen::Matrix2Xd projected = rotation.topRows<2>() * shape;
    projected.colwise() += translation;
    return projected;
}

Eigen::Matrix2Xd compose_projection(std::span<const MotionMatrix> motions,
                                    const Eigen::Vector2d& translation, const ShapeBasis& basis)
{
    detail::require(static_cast<int>(motions.size()) == basis.size(),
                    "compose_projection: " + std::to_string(motions.size()) +
                        " motions for a basis of size " + std::to_string(basis.size()));
    Eigen::Matrix2Xd projected = Eigen::Matrix2Xd::Zero(2, basis.landmarks());
    for (std::size_t i = 0; i < motions.size(); ++i) {
        projected.noalias() += motions[i] * basis.bases()[i];
    }
    projected.colwise() += translation;
    return projected;
}

MotionFactor factor_motion(const MotionMatrix& motion)
{
    detail::require(motion.allFinite(), "factor_motion: non-finite motion matrix");
    const Eigen::JacobiSVD<MotionMatrix> svd(motion, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector2d sigma = svd.singularValues();
    MotionFactor factor;
    factor.coefficient = 0.5 * (sigma(0) + sigma(1));
    if (factor.coefficient < kMinCoefficient) {
        throw DegenerateMotionError("factor_motion: coefficient " +
                                    std::to_string(factor.coefficient) + " below 1e-12");
    }
    const Eigen::Matrix<double, 2, 3> frame =
        svd.matrixU() * svd.matrixV().leftCols<2>().transpose();
    Eigen::Matrix3d rotation;
    rotation.topRows<2>() = frame;
    rotation.row(2) = frame.row(0).cross(frame.row(1));
    factor.rotation = nearest_rotation(rotation);
    return factor;
}

MotionMatrix motion_from(double coefficient, const Eigen::Matrix3d& rotation)
{
    return coefficient * rotation.topRows<2>();
}

Eigen::Matrix3Xd centered(const Eigen::Matrix3Xd& points)
{
    const Eigen::Vector3d centroid = points.rowwise().mean();
    return points.colwise() - centroid;
}

Eigen::Matrix3d align_to_canonical(const Eigen::Matrix3Xd& shape_camera,
                                   const Eigen::Matrix3Xd& shape_canonical)
{
    detail::require(shape_camera.cols() == shape_canonical.cols(),
                    "align_to_canonical: landmark counts differ");
    const Eigen::Matrix3d cross =
        centered(shape_camera) * centered(shape_canonical).transpose();
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector3d sigma = svd.singularValues();
    if (!(sigma(0) > 0.0) || sigma(1) <= 1e-12 * sigma(0)) {
        throw AlignmentError("align_to_canonical: landmarks are collinear");
    }
    Eigen::Matrix3d correction = Eigen::Matrix3d::Identity();
    correction(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return svd.matrixU() * correction * svd.matrixV().transpose();
}

bool is_rotation(const Eigen::Matrix3d& rotation, double tolerance)
{
    return (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <=
               tolerance &&
           std::abs(rotation.determinant() - 1.0) <= tolerance;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& matrix)
{
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(matrix, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d correction = Eigen::Matrix3d::Identity();
    correction(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return svd.matrixU() * correction * svd.matrixV().transpose();
}

Eigen::Matrix3d rotation_from_view(double azimuth, double elevation)
{
    const Eigen::Matrix3d rx =
        Eigen::AngleAxisd(to_radians(elevation), Eigen::Vector3d::UnitX()).toRotationMatrix();
    const Eigen::Matrix3d ry =
        Eigen::AngleAxisd(to_radians(azimuth), Eigen::Vector3d::UnitY()).toRotationMatrix();
    return rx * ry;
}

double azimuth_deg(const Eigen::Matrix3d& rotation)
{
    double azimuth = to_degrees(std::atan2(-rotation(2, 0), rotation(2, 2)));
    if (azimuth < 0.0) {
        azimuth += 360.0;
    }
    return azimuth >= 360.0 ? azimuth - 360.0 : azimuth;
}

double elevation_deg(const Eigen::Matrix3d& rotation)
{
    return to_degrees(std::asin(std::clamp(rotation(2, 1), -1.0, 1.0)));
}

double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b)
{
    const double cosine = std::clamp(0.5 * ((a.transpose() * b).trace() - 1.0), -1.0, 1.0);
    return to_degrees(std::acos(cosine));
}

Eigen::Matrix3Xd estimate_normals(const Eigen::Matrix3Xd& points, int neighbours)
{
    detail::require(neighbours >= 2, "estimate_normals: need at least two neighbours");
    const auto n = points.cols();
    const Eigen::Vector3d centroid = points.rowwise().mean();
    const int count = static_cast<int>(std::min<Eigen::Index>(neighbours + 1, n));
    Eigen::Matrix3Xd normals = Eigen::Matrix3Xd::Zero(3, n);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::RowVectorXd distance = (points.colwise() - points.col(j)).colwise().squaredNorm();
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return distance(a) < distance(b); });
        Eigen::Matrix3Xd local(3, count);
        for (int m = 0; m < count; ++m) {
            local.col(m) = points.col(order[static_cast<std::size_t>(m)]);
        }
        const Eigen::Matrix3Xd spread = local.colwise() - local.rowwise().mean();
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(spread * spread.transpose());
        const Eigen::Vector3d values = eig.eigenvalues(); // ascending
        if (!(values(2) > 0.0) || values(1) <= 1e-9 * values(2)) {
            continue;
        }
        Eigen::Vector3d normal = eig.eigenvectors().col(0);
        const Eigen::Vector3d outward = points.col(j) - centroid;
        const double along = normal.dot(outward);
        if (std::abs(along) <= 1e-9 * outward.norm()) {
            continue;
        }
        normals.col(j) = along > 0.0 ? normal : Eigen::Vector3d(-normal);
    }
    return normals;
}

} // namespace partfit
