/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: test_solver.cpp
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
#include "partfit/simplex_qp.hpp"
#include "partfit/solver.hpp"

#include <doctest.h>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <cmath>

using namespace partfit;
using namespace partfit::testing;
using partfit::testing::random_basis;
using partfit::testing::random_hypotheses;
using partfit::testing::random_matrix;
using partfit::testing::random_motion;
using partfit::testing::random_rotation;
using partfit::testing::random_state;

namespace {

HypothesisSet one_landmark(std::vector<Eigen::Vector2d> locations, std::vector<double> scores,
                           Eigen::Matrix2d cov = Eigen::Matrix2d::Identity())
{
    LandmarkHypotheses e;
    e.locations.resize(static_cast<Eigen::Index>(locations.size()), 2);
    e.scores.resize(static_cast<Eigen::Index>(scores.size()));
    for (std::size_t h = 0; h < locations.size(); ++h) {
        e.locations.row(static_cast<Eigen::Index>(h)) = locations[h].transpose();
        e.scores(static_cast<Eigen::Index>(h)) = scores[h];
    }
    e.covariance = cov;
    return HypothesisSet({e});
}

/// Per-landmark Cholesky-whitened residual oracle of f_geom.
double geom_oracle(const MotionState& s, const HypothesisSet& hyps, const ShapeBasis& basis)
{
    double total = 0.0;
    for (std::size_t n = 0; n < hyps.size(); ++n) {
        const auto& e = hyps[n];
        Eigen::Vector2d model = s.translation;
        for (int i = 0; i < basis.size(); ++i) {
            for (int r = 0; r < 2; ++r) {
                for (int m = 0; m < 3; ++m) {
                    model(r) += s.motions[static_cast<std::size_t>(i)](r, m) * basis.basis(i)(m, e.landmark);
                }
            }
        }
        Eigen::Vector2d observed = Eigen::Vector2d::Zero();
        for (int h = 0; h < e.count(); ++h) {
            observed += s.assignments[n](h) * e.locations.row(h).transpose();
        }
        const Eigen::Matrix2d l = e.covariance.llt().matrixL();
        const Eigen::Vector2d w = l.triangularView<Eigen::Lower>().solve(observed - model);
        total += 0.5 * w.squaredNorm();
    }
    return total;
}

double lagrangian(const MotionState& s, const HypothesisSet& hyps, const ShapeBasis& basis, double rho)
{
    double value = eval_geom(s, hyps, basis);
    for (std::size_t i = 0; i < s.motions.size(); ++i) {
        const MotionMatrix d = s.motions[i] - s.auxiliary[i];
        value += (s.dual[i].array() * d.array()).sum() + 0.5 * rho * d.squaredNorm();
    }
    return value;
}

struct Problem {
    ShapeBasis basis;
    HypothesisSet hyps;
    MotionState state;
};

Problem random_problem(std::mt19937_64& rng, int p = 8, int k = 3, int extra = 2)
{
    ShapeBasis basis = random_basis(p, k, rng);
    const Eigen::Matrix2Xd centres = random_matrix(2, p, rng, 10.0);
    HypothesisSet hyps = random_hypotheses(centres, extra, rng);
    MotionState state = random_state(hyps, k, rng);
    return {basis, hyps, state};
}

} // namespace

TEST_CASE("HypothesisSet validation")
{
    CHECK_THROWS(one_landmark({}, {}));
    CHECK_THROWS_AS(one_landmark({{0, 0}}, {1.0}, Eigen::Matrix2d::Zero()), CovarianceError);
    Eigen::Matrix2d asym;
    asym << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(one_landmark({{0, 0}}, {1.0}, asym), CovarianceError);
    CHECK_THROWS(one_landmark({{0, 0}}, {std::nan("")}));
}

TEST_CASE("eval_score examples")
{
    const HypothesisSet a = one_landmark({{0, 0}}, {2.0});
    CHECK(eval_score(std::vector<Eigen::VectorXd>{Eigen::VectorXd::Ones(1)}, a) == doctest::Approx(-2.0));
    const HypothesisSet b = one_landmark({{0, 0}, {1, 0}, {2, 0}, {3, 0}}, {1, 2, 3, 4});
    CHECK(eval_score(std::vector<Eigen::VectorXd>{Eigen::VectorXd::Constant(4, 0.25)}, b) == doctest::Approx(-2.5));

    std::mt19937_64 rng(11);
    const Problem pr = random_problem(rng);
    double naive = 0.0;
    for (std::size_t j = 0; j < pr.hyps.size(); ++j) {
        for (int h = 0; h < pr.hyps[j].count(); ++h) {
            naive -= pr.hyps[j].scores(h) * pr.state.assignments[j](h);
        }
    }
    CHECK(std::abs(eval_score(pr.state.assignments, pr.hyps) - naive) < 1e-12);
}

TEST_CASE("eval_geom examples and Cholesky oracle")
{
    std::mt19937_64 rng(12);
    const ShapeBasis basis = random_basis(6, 2, rng);
    const Eigen::Matrix3d r = random_rotation(rng);
    MotionState s;
    s.motions = {motion_from(1.0, r), motion_from(0.5, r)};
    s.translation = Eigen::Vector2d(3, 4);
    const Eigen::Matrix2Xd proj = compose_projection(s.motions, s.translation, basis);
    HypothesisSet exact = random_hypotheses(proj, 0, rng, false);
    s.assignments.assign(6, Eigen::VectorXd::Ones(1));
    CHECK(eval_geom(s, exact, basis) == doctest::Approx(0.0));

    Eigen::Matrix2Xd shifted = proj;
    shifted.col(2) += Eigen::Vector2d(3, 4);
    const HypothesisSet offset = random_hypotheses(shifted, 0, rng, false);
    CHECK(eval_geom(s, offset, basis) == doctest::Approx(12.5));

    for (int trial = 0; trial < 20; ++trial) {
        const Problem pr = random_problem(rng);
        const double got = eval_geom(pr.state, pr.hyps, pr.basis);
        CHECK(std::abs(got - geom_oracle(pr.state, pr.hyps, pr.basis)) < 1e-10 * std::max(1.0, got));
    }
}

TEST_CASE("eval_reg and spectral_norm")
{
    CHECK(eval_reg(std::vector<MotionMatrix>{MotionMatrix::Zero()}) == 0.0);
    MotionMatrix d;
    d << 3, 0, 0, 0, 1, 0;
    CHECK(eval_reg(std::vector<MotionMatrix>{d}) == doctest::Approx(3.0));

    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const MotionMatrix a = random_motion(rng);
        // power iteration on A A^T
        Eigen::Vector2d v(1.0, 0.3);
        for (int it = 0; it < 2000; ++it) {
            v = (a * a.transpose() * v).normalized();
        }
        const double power = std::sqrt(v.dot(a * a.transpose() * v));
        CHECK(std::abs(spectral_norm(a) - power) < 1e-9);
    }
}

TEST_CASE("prox_spectral examples")
{
    MotionMatrix a;
    a << 3, 0, 0, 0, 1, 0;
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(prox_spectral(a, 1.0));
    CHECK(svd.singularValues()(0) == doctest::Approx(2.0));
    CHECK(svd.singularValues()(1) == doctest::Approx(1.0));

    MotionMatrix small;
    small << 0.3, 0, 0, 0, 0.2, 0;
    CHECK(prox_spectral(small, 1.0).norm() < 1e-15);
    CHECK(prox_spectral(MotionMatrix::Zero(), 1.0).norm() == 0.0);
    CHECK_THROWS(prox_spectral(a, 0.0));
}

TEST_CASE("prox_spectral beats a descent oracle and satisfies optimality")
{
    std::mt19937_64 rng(14);
    for (double mu : {0.1, 1.0, 10.0}) {
        for (int trial = 0; trial < 30; ++trial) {
            const MotionMatrix a = random_motion(rng);
            const MotionMatrix z = prox_spectral(a, mu);
            const double fz = prox_objective(z, a, mu);
            // random perturbations never improve the objective
            for (int k = 0; k < 200; ++k) {
                const MotionMatrix dz = random_motion(rng) * 1e-3;
                CHECK(prox_objective(z + dz, a, mu) >= fz - 1e-12);
            }
            CHECK(fz <= prox_objective(prox_descent_oracle(a, mu), a, mu) + 1e-6);
        }
    }
}

TEST_CASE("update_translation")
{
    std::mt19937_64 rng(15);
    const ShapeBasis basis = random_basis(5, 1, rng);
    MotionState s;
    s.motions = {MotionMatrix::Zero()};
    s.assignments.assign(5, Eigen::VectorXd::Ones(1));
    Eigen::Matrix2Xd centres = Eigen::Matrix2Xd::Zero(2, 5);
    centres.colwise() += Eigen::Vector2d(1, -1);
    const Eigen::Vector2d t = update_translation(s, random_hypotheses(centres, 0, rng, false), basis);
    CHECK((t - Eigen::Vector2d(1, -1)).norm() < 1e-12);

    Eigen::Matrix2Xd varied = random_matrix(2, 5, rng);
    const Eigen::Vector2d mean = update_translation(s, random_hypotheses(varied, 0, rng, false), basis);
    CHECK((mean - varied.rowwise().mean()).norm() < 1e-12);

    for (int trial = 0; trial < 20; ++trial) {
        Problem pr = random_problem(rng);
        pr.state.translation = update_translation(pr.state, pr.hyps, pr.basis);
        const double h = 1e-5;
        for (int d = 0; d < 2; ++d) {
            MotionState plus = pr.state;
            MotionState minus = pr.state;
            plus.translation(d) += h;
            minus.translation(d) -= h;
            const double g = (eval_geom(plus, pr.hyps, pr.basis) - eval_geom(minus, pr.hyps, pr.basis)) / (2 * h);
            CHECK(std::abs(g) < 1e-6);
        }
        CHECK(geom_gradient(pr.state, pr.hyps, pr.basis).translation.norm() < 1e-8);
    }
}

TEST_CASE("update_assignments")
{
    std::mt19937_64 rng(16);
    const ShapeBasis basis = random_basis(4, 1, rng);
    MotionState s;
    s.motions = {MotionMatrix::Zero()};

    const HypothesisSet single = random_hypotheses(random_matrix(2, 4, rng), 0, rng);
    s.assignments.assign(4, Eigen::VectorXd::Ones(1));
    for (const auto& x : update_assignments(s, single, basis, 1.0)) {
        CHECK(x.size() == 1);
        CHECK(x(0) == doctest::Approx(1.0));
    }

    const HypothesisSet tied = one_landmark({{2, 1}, {2, 1}}, {0.5, 0.5});
    const ShapeBasis b1 = random_basis(4, 1, rng);
    MotionState t1;
    t1.motions = {MotionMatrix::Zero()};
    t1.assignments = {Eigen::Vector2d(0.9, 0.1)};
    const auto x = update_assignments(t1, tied, b1, 1.0);
    CHECK(x[0](0) == doctest::Approx(0.5));
    CHECK(x[0](1) == doctest::Approx(0.5));

    // l = 3 against a dense simplex grid
    for (int trial = 0; trial < 20; ++trial) {
        const HypothesisSet hyps = random_hypotheses(random_matrix(2, 1, rng, 3.0), 2, rng);
        const ShapeBasis bb = random_basis(4, 1, rng);
        MotionState st;
        st.motions = {random_motion(rng)};
        st.translation = random_matrix(2, 1, rng);
        st.assignments = {Eigen::Vector3d::Constant(1.0 / 3.0)};
        const double lambda1 = std::uniform_real_distribution<double>(0.1, 5.0)(rng);
        const auto objective = [&](const Eigen::VectorXd& v) {
            MotionState probe = st;
            probe.assignments = {v};
            return eval_geom(probe, hyps, bb) + lambda1 * eval_score(probe.assignments, hyps);
        };
        const auto got = update_assignments(st, hyps, bb, lambda1);
        CHECK(std::abs(got[0].sum() - 1.0) < 1e-9);
        CHECK(got[0].minCoeff() >= -1e-12);
        double best = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= 100; ++i) {
            for (int j = 0; i + j <= 100; ++j) {
                best = std::min(best, objective(Eigen::Vector3d(i / 100.0, j / 100.0, (100 - i - j) / 100.0)));
            }
        }
        CHECK(objective(got[0]) <= best + 1e-4);
    }
}

TEST_CASE("simplex preservation on random instances")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const Problem pr = random_problem(rng, 10, 2, 6);
        for (const auto& x : update_assignments(pr.state, pr.hyps, pr.basis, 0.3)) {
            CHECK(std::abs(x.sum() - 1.0) < 1e-9);
            CHECK(x.minCoeff() >= -1e-12);
        }
    }
}

TEST_CASE("project_to_simplex and simplex QP")
{
    std::mt19937_64 rng(18);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::VectorXd v = random_matrix(6, 1, rng);
        const Eigen::VectorXd x = project_to_simplex(v);
        CHECK(std::abs(x.sum() - 1.0) < 1e-12);
        CHECK(x.minCoeff() >= 0.0);
        // optimality: (v - x) . (y - x) <= 0 for simplex vertices y
        for (int i = 0; i < 6; ++i) {
            Eigen::VectorXd y = Eigen::VectorXd::Zero(6);
            y(i) = 1.0;
            CHECK((v - x).dot(y - x) <= 1e-12);
        }
        const Eigen::MatrixXd m = random_matrix(2, 6, rng);
        const Eigen::MatrixXd q = m.transpose() * m;
        const Eigen::VectorXd h = random_matrix(6, 1, rng);
        const SimplexQpResult r = solve_simplex_qp(q, h);
        CHECK(simplex_kkt_residual(q, h, r.x) < 1e-9);
    }
}

TEST_CASE("update_motions")
{
    std::mt19937_64 rng(19);
    SUBCASE("zero residual path gives zero motions")
    {
        const ShapeBasis basis = random_basis(6, 2, rng);
        MotionState s;
        s.motions.assign(2, random_motion(rng));
        s.dual.assign(2, MotionMatrix::Zero());
        s.auxiliary.assign(2, MotionMatrix::Zero());
        s.translation = Eigen::Vector2d(4, 2);
        Eigen::Matrix2Xd at_t = Eigen::Matrix2Xd::Zero(2, 6);
        at_t.colwise() += s.translation;
        const HypothesisSet hyps = random_hypotheses(at_t, 0, rng);
        s.assignments.assign(6, Eigen::VectorXd::Ones(1));
        for (const auto& t : update_motions(s, hyps, basis, 1.0).motions) {
            CHECK(t.norm() < 1e-12);
        }
    }
    SUBCASE("normal-equation oracle for k = 1")
    {
        const ShapeBasis basis = random_basis(9, 1, rng);
        const MotionMatrix truth = random_motion(rng);
        const Eigen::Matrix2Xd target = truth * basis.basis(0);
        MotionState s;
        s.motions = {MotionMatrix::Zero()};
        s.dual = {MotionMatrix::Zero()};
        s.auxiliary = {MotionMatrix::Zero()};
        s.assignments.assign(9, Eigen::VectorXd::Ones(1));
        const HypothesisSet hyps = random_hypotheses(target, 0, rng, false);
        const MotionMatrix got = update_motions(s, hyps, basis, 1.0).motions[0];
        // min 1/2 ||T B - L||^2 + 1/2 ||T||^2  =>  T (B B^T + I) = L B^T
        const Eigen::Matrix3d normal = basis.basis(0) * basis.basis(0).transpose() + Eigen::Matrix3d::Identity();
        const MotionMatrix oracle = (target * basis.basis(0).transpose()) * normal.inverse();
        CHECK((got - oracle).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("stationarity of the augmented Lagrangian")
    {
        for (int trial = 0; trial < 10; ++trial) {
            Problem pr = random_problem(rng, 10, 3, 2);
            const double rho = std::uniform_real_distribution<double>(0.1, 5.0)(rng);
            pr.state.motions = update_motions(pr.state, pr.hyps, pr.basis, rho).motions;
            const double h = 1e-5;
            double grad = 0.0;
            for (std::size_t i = 0; i < pr.state.motions.size(); ++i) {
                for (int e = 0; e < 6; ++e) {
                    MotionState plus = pr.state;
                    MotionState minus = pr.state;
                    plus.motions[i].data()[e] += h;
                    minus.motions[i].data()[e] -= h;
                    const double g =
                        (lagrangian(plus, pr.hyps, pr.basis, rho) - lagrangian(minus, pr.hyps, pr.basis, rho)) / (2 * h);
                    grad += g * g;
                }
            }
            CHECK(std::sqrt(grad) < 1e-6 * std::max(1.0, lagrangian(pr.state, pr.hyps, pr.basis, rho)));
        }
    }
}

TEST_CASE("analytic gradients of f_geom match central differences")
{
    std::mt19937_64 rng(20);
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); };
    for (int trial = 0; trial < 50; ++trial) {
        const Problem pr = random_problem(rng, 7, 3, 3);
        const GeomGradient g = geom_gradient(pr.state, pr.hyps, pr.basis);
        const double h = 1e-6;
        for (int d = 0; d < 2; ++d) {
            MotionState a = pr.state;
            MotionState b = pr.state;
            a.translation(d) += h;
            b.translation(d) -= h;
            CHECK(rel(g.translation(d), (eval_geom(a, pr.hyps, pr.basis) - eval_geom(b, pr.hyps, pr.basis)) / (2 * h)) <
                  1e-5);
        }
        for (std::size_t i = 0; i < pr.state.motions.size(); ++i) {
            for (int e = 0; e < 6; ++e) {
                MotionState a = pr.state;
                MotionState b = pr.state;
                a.motions[i].data()[e] += h;
                b.motions[i].data()[e] -= h;
                const double fd = (eval_geom(a, pr.hyps, pr.basis) - eval_geom(b, pr.hyps, pr.basis)) / (2 * h);
                CHECK(rel(g.motions[i].data()[e], fd) < 1e-5);
            }
        }
        for (std::size_t j = 0; j < pr.state.assignments.size(); ++j) {
            for (Eigen::Index hh = 0; hh < pr.state.assignments[j].size(); ++hh) {
                MotionState a = pr.state;
                MotionState b = pr.state;
                a.assignments[j](hh) += h;
                b.assignments[j](hh) -= h;
                const double fd = (eval_geom(a, pr.hyps, pr.basis) - eval_geom(b, pr.hyps, pr.basis)) / (2 * h);
                CHECK(rel(g.assignments[j](hh), fd) < 1e-5);
            }
        }
    }
}

TEST_CASE("objective is convex along random segments")
{
    std::mt19937_64 rng(21);
    const SolverConfig config;
    for (int trial = 0; trial < 30; ++trial) {
        const Problem pr = random_problem(rng);
        const MotionState b = random_state(pr.hyps, pr.basis.size(), rng);
        const double theta = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
        MotionState mix = pr.state;
        for (std::size_t i = 0; i < mix.motions.size(); ++i) {
            mix.motions[i] = theta * pr.state.motions[i] + (1 - theta) * b.motions[i];
        }
        mix.translation = theta * pr.state.translation + (1 - theta) * b.translation;
        for (std::size_t j = 0; j < mix.assignments.size(); ++j) {
            mix.assignments[j] = theta * pr.state.assignments[j] + (1 - theta) * b.assignments[j];
        }
        const double lhs = eval_objective(mix, pr.hyps, pr.basis, config);
        const double rhs = theta * eval_objective(pr.state, pr.hyps, pr.basis, config) +
                           (1 - theta) * eval_objective(b, pr.hyps, pr.basis, config);
        CHECK(lhs <= rhs + 1e-9 * std::max(1.0, std::abs(rhs)));
    }
}

TEST_CASE("solve recovers noiseless projections")
{
    std::mt19937_64 rng(22);
    const Eigen::Matrix3Xd mean = centered(generate_training_shapes(16, 1, 3).front());
    const ShapeBasis basis(mean, {mean});
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Matrix3d r = random_rotation(rng);
        const std::vector<MotionMatrix> truth{motion_from(0.06, r)};
        const Eigen::Matrix2Xd proj = compose_projection(truth, Eigen::Vector2d(320, 240), basis);
        const HypothesisSet hyps = random_hypotheses(proj, 0, rng, false);
        SolverConfig config;
        config.lambda2 = 1e-3;
        const SolveResult res = solve(hyps, basis, config);
        CHECK(res.diagnostics.converged);
        CHECK(res.diagnostics.iterations <= 500);
        const Eigen::Matrix2Xd fit = compose_projection(res.state.motions, res.state.translation, basis);
        CHECK((fit - proj).colwise().norm().maxCoeff() < 1e-3);
    }
}

TEST_CASE("solve puts assignment mass on the true hypotheses")
{
    std::mt19937_64 rng(23);
    const ShapeBasis basis = random_basis(20, 1, rng);
    const Eigen::Matrix3d r = random_rotation(rng);
    const std::vector<MotionMatrix> truth{motion_from(30.0, r)};
    const Eigen::Matrix2Xd proj = compose_projection(truth, Eigen::Vector2d(300, 200), basis);
    std::uniform_real_distribution<double> xs(200, 400);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<LandmarkHypotheses> entries;
    for (int j = 0; j < 20; ++j) {
        LandmarkHypotheses e;
        e.landmark = j;
        e.locations.resize(10, 2);
        e.scores.resize(10);
        e.locations.row(0) = proj.col(j).transpose();
        e.scores(0) = 2.0;
        for (int h = 1; h < 10; ++h) {
            e.locations.row(h) << xs(rng), xs(rng) - 100.0;
            e.scores(h) = unit(rng);
        }
        entries.push_back(e);
    }
    const HypothesisSet hyps(entries);
    const SolveResult res = solve(hyps, basis, SolverConfig{});
    int good = 0;
    for (const auto& x : res.state.assignments) {
        good += x(0) >= 0.99;
    }
    CHECK(good >= 19);
}

TEST_CASE("pure feasibility solve decreases the objective")
{
    std::mt19937_64 rng(24);
    const Eigen::Matrix3Xd mean = centered(generate_training_shapes(16, 1, 3).front());
    const ShapeBasis basis(mean, {mean});
    for (int trial = 0; trial < 5; ++trial) {
        const std::vector<MotionMatrix> truth{motion_from(0.06, random_rotation(rng))};
        const HypothesisSet hyps =
            random_hypotheses(compose_projection(truth, Eigen::Vector2d(10, 20), basis), 0, rng, false);
        SolverConfig config;
        config.lambda1 = 0.0;
        config.lambda2 = 1e-3;
        const SolveResult res = solve(hyps, basis, config);
        CHECK(res.diagnostics.converged);
        const auto& trace = res.diagnostics.trace;
        REQUIRE(trace.size() >= 2);
        const double tol = config.primal_tolerance(basis.size());
        for (std::size_t i = 1; i < trace.size(); ++i) {
            CHECK(trace[i].objective <= trace[i - 1].objective + tol);
        }
        CHECK(trace_to_csv(trace).rfind("iter,objective,primal_res,dual_res\n", 0) == 0);
    }
}

TEST_CASE("SolverConfig validation and tolerances")
{
    SolverConfig c;
    CHECK(c.primal_tolerance(10) == doctest::Approx(1e-6 * std::sqrt(60.0)));
    c.rho = 0.0;
    CHECK_THROWS(c.validate());
    c = SolverConfig{};
    c.max_iters = 0;
    CHECK_THROWS(c.validate());
    c = SolverConfig{};
    c.eps_dual = 1e-3;
    CHECK(c.dual_tolerance(4) == 1e-3);
}
