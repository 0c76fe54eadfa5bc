/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: selection.hpp
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
#include <string>
#include <vector>

namespace partfit {

/// Uncapacitated facility location over landmarks.
struct FacilityInstance {
    Eigen::VectorXd unary;    ///< z_u = 1 - AP_u
    Eigen::MatrixXd pairwise; ///< d_uv, model units
    double lambda = 1.0;

    int size() const { return static_cast<int>(unary.size()); }
    void validate() const;
};

/// Raw relaxation values.
struct FractionalSolution {
    Eigen::VectorXd y;   ///< facility openings in [0, 1]
    Eigen::MatrixXd x;   ///< x(u, v): share of demand u served by v
    double objective = 0.0;
    double dual_objective = 0.0;
    int iterations = 0;
};

struct SelectionResult {
    std::vector<bool> selected;
    std::vector<int> assignment; ///< serving facility of each landmark
    double objective = 0.0;
    FractionalSolution fractional;
};

/// Unary costs 1 - AP and 3D Euclidean distances between landmarks.
FacilityInstance build_instance(const Eigen::VectorXd& aps, const Eigen::Matrix3Xd& shape,
                                double lambda = 1.0);

/// Same, with distances averaged over several shapes in correspondence.
FacilityInstance build_instance(const Eigen::VectorXd& aps, std::span<const Eigen::Matrix3Xd> shapes,
                                double lambda = 1.0);

/// sum_u z_u y_u + lambda sum_uv d_uv x_uv.
double facility_objective(const FacilityInstance& inst, const Eigen::VectorXd& y,
                          const Eigen::MatrixXd& x);

/// Integral objective of a selection with every landmark served by its nearest selected landmark.
double selection_objective(const FacilityInstance& inst, const std::vector<bool>& selected);

/**
 * LP relaxation: min z'y + lambda <d, x> s.t. sum_v x_uv = 1, 0 <= x_uv <= y_v <= 1.
 *
 * Primal-dual interior point (Mehrotra predictor-corrector). Eliminating the
 * n^2 assignment variables leaves an n x n positive definite system per
 * step, so a step costs O(n^3). Stops when the relative duality gap and dual
 * infeasibility drop below 1e-10.
 */
FractionalSolution solve_lp_relaxation(const FacilityInstance& inst);

/**
 * Opens facilities with y_v >= tau, opens the best single facility if none
 * survive, serves every landmark from its nearest open facility (ties to the
 * lowest index) and recomputes the objective.
 */
SelectionResult threshold_and_repair(const FractionalSolution& fractional, const FacilityInstance& inst,
                                     double tau = 0.5);

/// LP, then thresholding.
SelectionResult select_landmarks(const FacilityInstance& inst, double tau = 0.5);

struct ScoredPoint {
    Eigen::Vector2d location = Eigen::Vector2d::Zero();
    double score = 0.0;
};

/// Detections and ground truth of one landmark in one image.
struct ImageDetections {
    std::vector<ScoredPoint> detections;
    std::vector<Eigen::Vector2d> truths;
};

/**
 * Average precision with all-points interpolation. Detections from all
 * images are ranked by score; each one is a true positive if an unmatched
 * truth of its image lies within `radius` (the closest one is consumed).
 */
double compute_ap(std::span<const ImageDetections> images, double radius = 20.0);

} // namespace partfit
