/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: pipeline.hpp
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

#include "partfit/bench.hpp"
#include "partfit/geometry.hpp"
#include "partfit/solver.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace partfit {

/// Pixel radii of the successive trust regions, one refinement solve each.
struct TrustRegionSchedule {
    std::vector<double> radii{64.0, 32.0, 16.0};

    /// Positive and strictly decreasing.
    void validate() const;
};

struct VisibilityOptions {
    int neighbours = 8;    ///< points per local plane fit, excluding the landmark itself
    VisibilityTable table; ///< takes precedence over normals when not empty
};

/**
 * A landmark is visible when its mean-shape normal faces the camera, i.e. has
 * a positive dot product with the third row of the rotation. Landmarks with a
 * degenerate normal count as visible. With a table, the mask of the nearest
 * azimuth is returned instead.
 */
std::vector<bool> estimate_visibility(const PoseShapeResult& pose, const ShapeBasis& basis,
                                      const VisibilityOptions& options = {});

/**
 * Keeps the hypotheses within `radius` pixels of the projected landmark
 * (column `landmark` of `projected`). A landmark left without hypotheses
 * keeps its single nearest one (lowest index on ties).
 */
HypothesisSet prune_hypotheses(const HypothesisSet& hyps, const Eigen::Matrix2Xd& projected, double radius);

/**
 * Pose and shape from solved motions. Each T_i is split into (c_i, R_i); a
 * rotation whose top rows oppose those of the first basis is flipped, with
 * the sign moved into c_i. The camera-frame shape is sum c_i R_i B_i and the
 * reported rotation aligns sum c_i B_i to it. Motions too small to factor
 * contribute c_i = 0.
 */
PoseShapeResult pose_from_motions(const MotionState& state, const ShapeBasis& basis);

struct InferenceConfig {
    SolverConfig solver;
    TrustRegionSchedule schedule;
    VisibilityOptions visibility;
};

struct StageDiagnostics {
    std::string name;
    int landmarks = 0;  ///< landmarks with hypotheses
    int hypotheses = 0; ///< total hypotheses
    double objective = 0.0;
    SolveDiagnostics solve;
};

struct InferenceResult {
    PoseShapeResult pose;          ///< visibility holds the stage-2 estimate
    MotionState state;             ///< final solver state
    Eigen::Matrix2Xd landmarks;    ///< fitted 2D landmarks, sum_i T_i B_i + t
    std::vector<StageDiagnostics> stages;
    std::vector<std::string> warnings;

    /// Every stage converged.
    bool converged() const;
};

/**
 * 1. Mean-shape solve on all hypotheses. 2. Visibility from that pose, then a
 * mean-shape solve on the visible landmarks. 3. For each trust-region radius,
 * prune around the current fit and solve with the full basis.
 */
InferenceResult infer(const HypothesisSet& hyps, const ShapeBasis& basis, const InferenceConfig& config = {});

} // namespace partfit
