/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: test_selection.cpp
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

#include "partfit/errors.hpp"
#include "partfit/selection.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace partfit;
using namespace partfit::testing;
using partfit::testing::random_matrix;

namespace {

/// Reference all-points AP: sort by score, walk the ranking, integrate the interpolated precision envelope.
double reference_ap(std::vector<std::pair<double, bool>> ranked, int truths)
{
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<double> precision;
    std::vector<double> recall;
    int tp = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        tp += ranked[i].second;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
        recall.push_back(static_cast<double>(tp) / truths);
    }
    double ap = 0.0;
    double previous_recall = 0.0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        double envelope = 0.0;
        for (std::size_t j = i; j < ranked.size(); ++j) {
            envelope = std::max(envelope, precision[j]);
        }
        ap += (recall[i] - previous_recall) * envelope;
        previous_recall = recall[i];
    }
    return ap;
}

} // namespace

TEST_CASE("build_instance examples")
{
    Eigen::Matrix3Xd shape(3, 5);
    shape << 0, 1, 0, 0, 2, 0, 0, 1, 0, 2, 0, 0, 0, 1, 2;
    const FacilityInstance inst = build_instance(Eigen::VectorXd::Ones(5), shape);
    CHECK(inst.unary.norm() == 0.0);
    for (int u = 0; u < 5; ++u) {
        for (int v = 0; v < 5; ++v) {
            const Eigen::Vector3d d = shape.col(u) - shape.col(v);
            CHECK(inst.pairwise(u, v) == std::sqrt(d.x() * d.x() + d.y() * d.y() + d.z() * d.z()));
        }
    }
    CHECK(inst.pairwise(0, 1) == 1.0);
    CHECK(inst.pairwise(0, 4) == doctest::Approx(std::sqrt(12.0)));

    Eigen::Matrix3Xd twin = shape;
    twin.col(1) = twin.col(0);
    CHECK(build_instance(Eigen::VectorXd::Ones(5), twin).pairwise(0, 1) == 0.0);

    std::vector<Eigen::Matrix3Xd> shapes{shape, 3.0 * shape};
    CHECK(build_instance(Eigen::VectorXd::Ones(5), shapes).pairwise(0, 1) == doctest::Approx(2.0));

    CHECK_THROWS(build_instance(Eigen::VectorXd::Ones(4), shape));
    CHECK_THROWS(build_instance(Eigen::VectorXd::Constant(5, 1.5), shape));
    CHECK_THROWS(build_instance(Eigen::VectorXd::Ones(5), shape, -1.0));
}

TEST_CASE("LP relaxation examples")
{
    FacilityInstance one;
    one.unary = Eigen::VectorXd::Constant(1, 0.3);
    one.pairwise = Eigen::MatrixXd::Zero(1, 1);
    const FractionalSolution f = solve_lp_relaxation(one);
    CHECK(f.y(0) == doctest::Approx(1.0));
    CHECK(f.objective == doctest::Approx(0.3));

    std::mt19937_64 rng(31);
    FacilityInstance tiny = random_instance(7, rng, 1e-9);
    Eigen::Index cheapest;
    tiny.unary.minCoeff(&cheapest);
    const FractionalSolution g = solve_lp_relaxation(tiny);
    for (int v = 0; v < 7; ++v) {
        CHECK(g.y(v) == doctest::Approx(v == cheapest ? 1.0 : 0.0).epsilon(1e-6));
    }
}

TEST_CASE("LP bound, rounding quality and feasibility against the exhaustive optimum")
{
    std::mt19937_64 rng(32);
    std::uniform_int_distribution<int> size(1, 10);
    std::uniform_real_distribution<double> lambdas(0.05, 1.0);
    int within = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        const FacilityInstance inst = random_instance(size(rng), rng, lambdas(rng));
        const double mip = mip_optimum(inst);
        const SelectionResult r = select_landmarks(inst);
        CHECK(r.fractional.objective <= mip + 1e-7);
        CHECK(r.fractional.dual_objective <= r.fractional.objective + 1e-7);
        CHECK(r.objective >= mip - 1e-9);
        CHECK(r.objective == doctest::Approx(selection_objective(inst, r.selected)));
        within += r.objective <= 1.1 * mip + 1e-12;
        for (int u = 0; u < inst.size(); ++u) {
            const int s = r.assignment[static_cast<std::size_t>(u)];
            CHECK(r.selected[static_cast<std::size_t>(s)]);
        }
        // any random feasible selection is bounded below by the LP
        std::bernoulli_distribution coin(0.5);
        for (int k = 0; k < 10; ++k) {
            std::vector<bool> sel(static_cast<std::size_t>(inst.size()));
            for (auto&& b : sel) {
                b = coin(rng);
            }
            if (std::none_of(sel.begin(), sel.end(), [](bool b) { return b; })) {
                sel[0] = true;
            }
            CHECK(r.fractional.objective <= selection_objective(inst, sel) + 1e-7);
        }
    }
    MESSAGE("rounded within 10% of MIP: " << within << "/" << trials);
    CHECK(within >= 90);
}

TEST_CASE("threshold_and_repair examples")
{
    std::mt19937_64 rng(33);
    const FacilityInstance inst = random_instance(4, rng);
    FractionalSolution integral;
    integral.y = Eigen::Vector4d(1, 0, 1, 0);
    integral.x = Eigen::MatrixXd::Zero(4, 4);
    const SelectionResult a = threshold_and_repair(integral, inst);
    CHECK(a.selected == std::vector<bool>{true, false, true, false});

    FractionalSolution half = integral;
    half.y = Eigen::Vector4d::Constant(0.5);
    const SelectionResult b = threshold_and_repair(half, inst, 0.5);
    CHECK(b.selected == std::vector<bool>(4, true));

    FractionalSolution none = integral;
    none.y = Eigen::Vector4d::Constant(0.1);
    const SelectionResult c = threshold_and_repair(none, inst, 0.5);
    CHECK(std::count(c.selected.begin(), c.selected.end(), true) == 1);
}

TEST_CASE("scale equivariance of the trade-off")
{
    std::mt19937_64 rng(34);
    for (int t = 0; t < 20; ++t) {
        FacilityInstance a = random_instance(8, rng, 0.2);
        FacilityInstance b = a;
        b.pairwise *= 7.0;
        b.lambda /= 7.0;
        const SelectionResult ra = select_landmarks(a);
        const SelectionResult rb = select_landmarks(b);
        CHECK(ra.selected == rb.selected);
        CHECK((ra.fractional.y - rb.fractional.y).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("raising every unary cost never opens more facilities")
{
    std::mt19937_64 rng(35);
    int checked = 0;
    for (int t = 0; t < 40; ++t) {
        FacilityInstance a = random_instance(8, rng, 0.2);
        a.unary *= 0.8;
        FacilityInstance b = a;
        b.unary.array() += 0.2;
        const FractionalSolution fa = solve_lp_relaxation(a);
        const FractionalSolution fb = solve_lp_relaxation(b);
        // only instances with integral (hence unique up to ties) relaxations
        const auto integral = [](const Eigen::VectorXd& y) {
            return (y.array() - y.array().round()).abs().maxCoeff() < 1e-6;
        };
        if (!integral(fa.y) || !integral(fb.y)) {
            continue;
        }
        ++checked;
        CHECK(fb.y.sum() <= fa.y.sum() + 1e-6);
    }
    CHECK(checked > 10);
}

TEST_CASE("compute_ap")
{
    ImageDetections exact{{{Eigen::Vector2d(5, 5), 1.0}}, {Eigen::Vector2d(5, 5)}};
    CHECK(compute_ap(std::vector<ImageDetections>{exact}, 20.0) == doctest::Approx(1.0));
    ImageDetections far{{{Eigen::Vector2d(50, 5), 1.0}}, {Eigen::Vector2d(5, 5)}};
    CHECK(compute_ap(std::vector<ImageDetections>{far}, 20.0) == 0.0);

    ImageDetections three{{{Eigen::Vector2d(0, 0), 0.9}, {Eigen::Vector2d(100, 100), 0.8}, {Eigen::Vector2d(50, 0), 0.7}},
                          {Eigen::Vector2d(0, 1), Eigen::Vector2d(50, 2)}};
    CHECK(compute_ap(std::vector<ImageDetections>{three}, 20.0) ==
          doctest::Approx(reference_ap({{0.9, true}, {0.8, false}, {0.7, true}}, 2)).epsilon(1e-9));

    // random multi-image cases against the reference integrator, with matching done independently
    std::mt19937_64 rng(36);
    std::uniform_real_distribution<double> pos(0.0, 100.0);
    std::uniform_real_distribution<double> unit;
    for (int t = 0; t < 30; ++t) {
        std::vector<ImageDetections> images(4);
        std::vector<std::pair<double, bool>> ranked;
        int truths = 0;
        for (auto& im : images) {
            for (int i = 0; i < 3; ++i) {
                im.truths.emplace_back(pos(rng), pos(rng));
            }
            truths += 3;
            // detections well separated from each other, each either on a truth or far away
            for (int i = 0; i < 3; ++i) {
                const bool hit = unit(rng) < 0.6;
                const Eigen::Vector2d loc = hit ? Eigen::Vector2d(im.truths[static_cast<std::size_t>(i)] + Eigen::Vector2d(0.5, 0))
                                                : Eigen::Vector2d(1000.0 + 100.0 * i, 1000.0);
                im.detections.push_back({loc, unit(rng)});
                ranked.emplace_back(im.detections.back().score, hit);
            }
        }
        CHECK(compute_ap(images, 1.0) == doctest::Approx(reference_ap(ranked, truths)).epsilon(1e-9));
    }
}
