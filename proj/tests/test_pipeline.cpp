/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: test_pipeline.cpp
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

#include "oracles.hpp"
#include "support.hpp"

#include "partfit/bench.hpp"
#include "partfit/errors.hpp"
#include "partfit/pipeline.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace partfit;
using namespace partfit::testing;
using partfit::testing::random_hypotheses;
using partfit::testing::random_matrix;
using partfit::testing::random_rotation;

namespace {

struct Dataset {
    ShapeBasis basis;
    SyntheticSpec spec;
};

Dataset dataset(double noise = 0.0, OcclusionMode occlusion = OcclusionMode::none)
{
    SyntheticSpec spec;
    spec.noise_sigma = noise;
    spec.occlusion = occlusion;
    const auto shapes = generate_training_shapes(spec.p, spec.training_shapes, 7);
    return {learn_basis(shapes, spec.k - 1).basis, spec};
}

InferenceConfig all_visible(int p)
{
    InferenceConfig config;
    config.visibility.table = VisibilityTable({{0.0, std::vector<bool>(static_cast<std::size_t>(p), true)}});
    return config;
}

} // namespace

TEST_CASE("TrustRegionSchedule validation")
{
    TrustRegionSchedule s;
    CHECK(s.radii == std::vector<double>{64.0, 32.0, 16.0});
    CHECK_NOTHROW(s.validate());
    s.radii = {10.0, 10.0};
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s.radii = {10.0, -1.0};
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("estimate_visibility on a sphere matches the analytic hemisphere")
{
    const Eigen::Matrix3Xd cloud = sphere_cloud(12, 24);
    const ShapeBasis basis(cloud, {cloud});
    const auto frontal = estimate_visibility(pose_with(Eigen::Matrix3d::Identity()), basis);
    for (Eigen::Index j = 0; j < cloud.cols(); ++j) {
        CHECK(frontal[static_cast<std::size_t>(j)] == (cloud(2, j) > 0.0));
    }
    std::mt19937_64 rng(61);
    for (int t = 0; t < 20; ++t) {
        const Eigen::Matrix3d r = random_rotation(rng);
        const auto vis = estimate_visibility(pose_with(r), basis);
        for (Eigen::Index j = 0; j < cloud.cols(); ++j) {
            const double facing = r.row(2).dot(cloud.col(j));
            if (std::abs(facing) > 0.15) {
                CHECK(vis[static_cast<std::size_t>(j)] == (facing > 0.0));
            }
        }
    }
}

TEST_CASE("estimate_visibility on a box agrees with ray casting")
{
    const Eigen::Vector3d half(2.0, 0.8, 1.0);
    const Eigen::Matrix3Xd cloud = box_cloud(half, 0.2);
    const ShapeBasis basis(cloud, {cloud});
    std::mt19937_64 rng(62);
    int agree = 0;
    int total = 0;
    for (int t = 0; t < 50; ++t) {
        const Eigen::Matrix3d r = random_rotation(rng);
        const auto vis = estimate_visibility(pose_with(r), basis);
        for (Eigen::Index j = 0; j < cloud.cols(); ++j) {
            agree += vis[static_cast<std::size_t>(j)] == ray_visible(cloud.col(j), r.row(2).transpose(), half);
            ++total;
        }
    }
    MESSAGE("box agreement " << agree << "/" << total);
    CHECK(agree >= 0.95 * total);
}

TEST_CASE("estimate_visibility table mode")
{
    const Eigen::Matrix3Xd cloud = sphere_cloud(6, 8);
    const ShapeBasis basis(cloud, {cloud});
    VisibilityOptions options;
    options.table = VisibilityTable({{0.0, std::vector<bool>(48, true)}});
    const auto vis = estimate_visibility(pose_with(rotation_from_view(200.0, 10.0)), basis, options);
    CHECK(std::all_of(vis.begin(), vis.end(), [](bool v) { return v; }));

    std::vector<bool> front(48, false);
    front[3] = true;
    options.table = VisibilityTable({{0.0, std::vector<bool>(48, true)}, {180.0, front}});
    CHECK(estimate_visibility(pose_with(rotation_from_view(170.0, 0.0)), basis, options) == front);
    CHECK(estimate_visibility(pose_with(rotation_from_view(350.0, 0.0)), basis, options) == std::vector<bool>(48, true));
}

TEST_CASE("prune_hypotheses")
{
    std::mt19937_64 rng(63);
    const Eigen::Matrix2Xd centres = random_matrix(2, 10, rng, 20.0);
    const HypothesisSet hyps = random_hypotheses(centres, 6, rng);
    const HypothesisSet same = prune_hypotheses(hyps, centres, 1e9);
    REQUIRE(same.size() == hyps.size());
    for (std::size_t j = 0; j < hyps.size(); ++j) {
        CHECK(same[j].locations == hyps[j].locations);
        CHECK(same[j].scores == hyps[j].scores);
        CHECK(same[j].covariance == hyps[j].covariance);
    }

    const Eigen::Matrix2Xd far = (centres.array() + 1000.0).matrix();
    const HypothesisSet nearest = prune_hypotheses(hyps, far, 1.0);
    for (std::size_t j = 0; j < hyps.size(); ++j) {
        REQUIRE(nearest[j].count() == 1);
        double best = 1e300;
        int arg = -1;
        for (int h = 0; h < hyps[j].count(); ++h) {
            const double d = (hyps[j].locations.row(h).transpose() - far.col(static_cast<Eigen::Index>(j))).norm();
            if (d < best) {
                best = d;
                arg = h;
            }
        }
        CHECK(nearest[j].locations.row(0) == hyps[j].locations.row(arg));
    }

    for (double radius : {2.0, 5.0, 8.0}) {
        const Eigen::Matrix2Xd moved = centres + random_matrix(2, 10, rng, 3.0);
        const HypothesisSet pruned = prune_hypotheses(hyps, moved, radius);
        REQUIRE(pruned.size() == hyps.size());
        for (std::size_t j = 0; j < hyps.size(); ++j) {
            std::vector<int> kept;
            for (int h = 0; h < hyps[j].count(); ++h) {
                const Eigen::Vector2d d = hyps[j].locations.row(h).transpose() - moved.col(static_cast<Eigen::Index>(j));
                if (std::sqrt(d.x() * d.x() + d.y() * d.y()) <= radius) {
                    kept.push_back(h);
                }
            }
            CHECK(pruned[j].count() >= 1);
            CHECK(pruned[j].count() <= hyps[j].count());
            if (!kept.empty()) {
                REQUIRE(pruned[j].count() == static_cast<int>(kept.size()));
                for (std::size_t k = 0; k < kept.size(); ++k) {
                    CHECK(pruned[j].locations.row(static_cast<Eigen::Index>(k)) == hyps[j].locations.row(kept[k]));
                    CHECK(pruned[j].scores(static_cast<Eigen::Index>(k)) == hyps[j].scores(kept[k]));
                }
            }
        }
    }
    CHECK_THROWS(prune_hypotheses(hyps, centres, 0.0));
}

TEST_CASE("pose_from_motions recovers a generated pose")
{
    const Dataset d = dataset();
    const SyntheticInstance inst = generate_instance(d.spec, d.basis, 3);
    MotionState state;
    for (int i = 0; i < d.basis.size(); ++i) {
        state.motions.push_back(motion_from(inst.truth.coefficients(i), inst.truth.rotation));
    }
    state.translation = inst.truth.translation;
    const PoseShapeResult pose = pose_from_motions(state, d.basis);
    CHECK(rotation_angle_deg(pose.rotation, inst.truth.rotation) < 1e-6);
    CHECK((pose.coefficients - inst.truth.coefficients).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((pose.shape - inst.truth.shape).cwiseAbs().maxCoeff() < 1e-6);
    CHECK(is_rotation(pose.rotation));
}

TEST_CASE("infer recovers noiseless instances")
{
    const Dataset d = dataset();
    for (int id = 0; id < 5; ++id) {
        const SyntheticInstance inst = generate_instance(d.spec, d.basis, id);
        const InferenceResult r = infer(inst.hypotheses, d.basis, all_visible(d.spec.p));
        CHECK(r.converged());
        CHECK(r.stages.size() == 5);
        CHECK(circular_difference_deg(azimuth_deg(r.pose.rotation), azimuth_deg(inst.truth.rotation)) < 1.0);
        CHECK(mean_apd(r.landmarks, inst.projection) < 0.5);
    }
}

TEST_CASE("one huge trust region equals the plain shape solve")
{
    const Dataset d = dataset();
    const SyntheticInstance inst = generate_instance(d.spec, d.basis, 1);
    InferenceConfig huge = all_visible(d.spec.p);
    huge.schedule.radii = {1e9};
    InferenceConfig none = all_visible(d.spec.p);
    none.schedule.radii = {};
    const InferenceResult a = infer(inst.hypotheses, d.basis, huge);
    const InferenceResult b = infer(inst.hypotheses, d.basis, none);
    CHECK(a.landmarks == b.landmarks);
    CHECK(a.stages.back().hypotheses == b.stages[1].hypotheses);
}

TEST_CASE("shape-space fit is no worse than the embedded mean-shape fit")
{
    const Dataset d = dataset();
    for (int id = 0; id < 3; ++id) {
        const SyntheticInstance inst = generate_instance(d.spec, d.basis, id);
        InferenceConfig config = all_visible(d.spec.p);
        config.schedule.radii = {1e9};
        const InferenceResult r = infer(inst.hypotheses, d.basis, config);
        const HypothesisSet visible = inst.hypotheses.restricted_to(r.pose.visibility);
        const SolveResult stage2 = solve(visible, d.basis.mean_only(), config.solver);
        MotionState embedded = stage2.state;
        embedded.motions.resize(static_cast<std::size_t>(d.basis.size()), MotionMatrix::Zero());
        const double final_obj = eval_objective(r.state, visible, d.basis, config.solver);
        const double mean_obj = eval_objective(embedded, visible, d.basis, config.solver);
        CHECK(final_obj <= mean_obj + 1e-6);
    }
}

TEST_CASE("self-occluded landmarks are excluded by stage-2 visibility")
{
    const Dataset d = dataset(0.0, OcclusionMode::hemisphere);
    int occluded = 0;
    int excluded = 0;
    for (int id = 0; id < 10; ++id) {
        const SyntheticInstance inst = generate_instance(d.spec, d.basis, id);
        const InferenceResult r = infer(inst.hypotheses, d.basis);
        for (int j = 0; j < d.spec.p; ++j) {
            if (!inst.truth.visibility[static_cast<std::size_t>(j)]) {
                ++occluded;
                excluded += !r.pose.visibility[static_cast<std::size_t>(j)];
            }
        }
    }
    MESSAGE("excluded " << excluded << "/" << occluded);
    CHECK(excluded >= 0.9 * occluded);
}

TEST_CASE("infer is deterministic and validates input")
{
    const Dataset d = dataset(1.0);
    const SyntheticInstance inst = generate_instance(d.spec, d.basis, 2);
    const InferenceResult a = infer(inst.hypotheses, d.basis);
    const InferenceResult b = infer(inst.hypotheses, d.basis);
    CHECK(a.landmarks == b.landmarks);
    CHECK(a.pose.rotation == b.pose.rotation);
    CHECK_THROWS(infer(HypothesisSet{}, d.basis));
    InferenceConfig bad;
    bad.schedule.radii = {1.0, 2.0};
    CHECK_THROWS_AS(infer(inst.hypotheses, d.basis, bad), ConfigError);
}
