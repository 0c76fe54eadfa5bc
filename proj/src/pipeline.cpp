/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: pipeline.cpp
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

#include "partfit/pipeline.hpp"

#include "partfit/errors.hpp"
#include "partfit/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace partfit {

void TrustRegionSchedule::validate() const
{
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] < radii[i - 1]))) {
            throw ConfigError("TrustRegionSchedule: radii must be positive and strictly decreasing");
        }
    }
}

std::vector<bool> estimate_visibility(const PoseShapeResult& pose, const ShapeBasis& basis,
                                      const VisibilityOptions& options)
{
    detail::require(is_rotation(pose.rotation), "estimate_visibility: pose rotation is not a rotation");
    if (!options.table.empty()) {
        const std::vector<bool>& mask = options.table.lookup(azimuth_deg(pose.rotation));
        detail::require(static_cast<int>(mask.size()) == basis.landmarks(),
                        "estimate_visibility: table masks do not match the landmark count");
        return mask;
    }
    const Eigen::Matrix3Xd normals = estimate_normals(basis.mean_shape(), options.neighbours);
    const Eigen::RowVectorXd facing = pose.rotation.row(2) * normals;
    std::vector<bool> visible(static_cast<std::size_t>(basis.landmarks()));
    for (int j = 0; j < basis.landmarks(); ++j) {
        visible[static_cast<std::size_t>(j)] = normals.col(j).isZero(0.0) || facing(j) > 0.0;
    }
    return visible;
}

HypothesisSet prune_hypotheses(const HypothesisSet& hyps, const Eigen::Matrix2Xd& projected, double radius)
{
    detail::require(radius > 0.0, "prune_hypotheses: radius must be positive");
    std::vector<LandmarkHypotheses> kept;
    kept.reserve(hyps.size());
    for (const auto& entry : hyps.entries()) {
        detail::require(entry.landmark >= 0 && entry.landmark < projected.cols(),
                        "prune_hypotheses: landmark " + std::to_string(entry.landmark) + " has no projection");
        const Eigen::RowVector2d centre = projected.col(entry.landmark).transpose();
        const Eigen::VectorXd distance = (entry.locations.rowwise() - centre).rowwise().norm();
        std::vector<Eigen::Index> inside;
        for (Eigen::Index h = 0; h < distance.size(); ++h) {
            if (distance(h) <= radius) {
                inside.push_back(h);
            }
        }
        if (inside.empty() && distance.size() > 0) {
            Eigen::Index nearest = 0;
            distance.minCoeff(&nearest);
            inside.push_back(nearest);
        }
        LandmarkHypotheses pruned;
        pruned.landmark = entry.landmark;
        pruned.covariance = entry.covariance;
        pruned.locations.resize(static_cast<Eigen::Index>(inside.size()), 2);
        pruned.scores.resize(static_cast<Eigen::Index>(inside.size()));
        for (std::size_t m = 0; m < inside.size(); ++m) {
            pruned.locations.row(static_cast<Eigen::Index>(m)) = entry.locations.row(inside[m]);
            pruned.scores(static_cast<Eigen::Index>(m)) = entry.scores(inside[m]);
        }
        kept.push_back(std::move(pruned));
    }
    return HypothesisSet(std::move(kept));
}

PoseShapeResult pose_from_motions(const MotionState& state, const ShapeBasis& basis)
{
    detail::require(static_cast<int>(state.motions.size()) == basis.size(),
                    "pose_from_motions: motion count does not match the basis");
    const int k = basis.size();
    PoseShapeResult pose;
    pose.translation = state.translation;
    pose.coefficients = Eigen::VectorXd::Zero(k);
    std::vector<Eigen::Matrix3d> rotations(static_cast<std::size_t>(k), Eigen::Matrix3d::Identity());
    std::vector<bool> factored(static_cast<std::size_t>(k), false);
    for (int i = 0; i < k; ++i) {
        try {
            const MotionFactor factor = factor_motion(state.motions[static_cast<std::size_t>(i)]);
            pose.coefficients(i) = factor.coefficient;
            rotations[static_cast<std::size_t>(i)] = factor.rotation;
            factored[static_cast<std::size_t>(i)] = true;
        } catch (const DegenerateMotionError&) {
        }
    }
    const auto reference = std::find(factored.begin(), factored.end(), true);
    if (reference == factored.end()) {
        throw DegenerateMotionError("pose_from_motions: every motion is degenerate");
    }
    const Eigen::Matrix3d& first = rotations[static_cast<std::size_t>(reference - factored.begin())];
    const Eigen::Matrix3d flip = Eigen::Vector3d(-1.0, -1.0, 1.0).asDiagonal();
    Eigen::Matrix3Xd camera = Eigen::Matrix3Xd::Zero(3, basis.landmarks());
    for (int i = 0; i < k; ++i) {
        auto& rotation = rotations[static_cast<std::size_t>(i)];
        if (!factored[static_cast<std::size_t>(i)]) {
            rotation = first;
            continue;
        }
        if ((rotation.topRows<2>().cwiseProduct(first.topRows<2>())).sum() < 0.0) {
            rotation = flip * rotation;
            pose.coefficients(i) = -pose.coefficients(i);
        }
        camera += pose.coefficients(i) * rotation * basis.basis(i);
    }
    pose.shape = camera;
    try {
        pose.rotation = align_to_canonical(camera, basis.combine(pose.coefficients));
    } catch (const AlignmentError&) {
        pose.rotation = first;
    }
    return pose;
}

bool InferenceResult::converged() const
{
    return std::all_of(stages.begin(), stages.end(), [](const StageDiagnostics& s) { return s.solve.converged; });
}

namespace {

int total_hypotheses(const HypothesisSet& hyps)
{
    int total = 0;
    for (const auto& entry : hyps.entries()) {
        total += entry.count();
    }
    return total;
}

SolveResult run_stage(InferenceResult& result, const std::string& name, const HypothesisSet& hyps,
                      const ShapeBasis& basis, const SolverConfig& config)
{
    SolveResult solved = solve(hyps, basis, config);
    StageDiagnostics stage;
    stage.name = name;
    stage.landmarks = static_cast<int>(hyps.size());
    stage.hypotheses = total_hypotheses(hyps);
    stage.objective = eval_objective(solved.state, hyps, basis, config);
    stage.solve = solved.diagnostics;
    stage.solve.trace.clear();
    if (!stage.solve.converged) {
        log().warn("{}: solver stopped after {} iterations without converging", name, stage.solve.iterations);
    }
    result.stages.push_back(std::move(stage));
    return solved;
}

} // namespace

InferenceResult infer(const HypothesisSet& hyps, const ShapeBasis& basis, const InferenceConfig& config)
{
    config.solver.validate();
    config.schedule.validate();
    detail::require(!hyps.empty(), "infer: no hypotheses");
    for (const auto& entry : hyps.entries()) {
        detail::require(entry.landmark >= 0 && entry.landmark < basis.landmarks(),
                        "infer: hypothesis landmark " + std::to_string(entry.landmark) + " outside the basis");
    }
    const ShapeBasis mean = basis.mean_only();
    InferenceResult result;

    // stage 1: every landmark assumed visible
    const SolveResult all = run_stage(result, "mean-all", hyps, mean, config.solver);
    const PoseShapeResult rough = pose_from_motions(all.state, mean);

    // stage 2: visible landmarks only
    std::vector<bool> visible = estimate_visibility(rough, basis, config.visibility);
    HypothesisSet visible_hyps = hyps.restricted_to(visible);
    if (visible_hyps.size() < 4) {
        result.warnings.push_back("fewer than 4 visible landmarks with hypotheses; using all landmarks");
        log().warn("infer: {}", result.warnings.back());
        visible_hyps = hyps;
    }
    SolveResult current = run_stage(result, "mean-visible", visible_hyps, mean, config.solver);
    Eigen::Matrix2Xd projected = compose_projection(current.state.motions, current.state.translation, mean);

    // stage 3: trust-region refinement in the shape space
    for (std::size_t r = 0; r < config.schedule.radii.size(); ++r) {
        const HypothesisSet pruned = prune_hypotheses(visible_hyps, projected, config.schedule.radii[r]);
        current = run_stage(result, "shape-r" + std::to_string(r), pruned, basis, config.solver);
        projected = compose_projection(current.state.motions, current.state.translation, basis);
    }
    if (config.schedule.radii.empty()) {
        current = run_stage(result, "shape", visible_hyps, basis, config.solver);
    }

    result.landmarks = compose_projection(current.state.motions, current.state.translation, basis);
    result.pose = pose_from_motions(current.state, basis);
    result.pose.visibility = std::move(visible);
    result.state = std::move(current.state);
    return result;
}

} // namespace partfit
