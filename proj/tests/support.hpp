/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: support.hpp
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

#include "partfit/geometry.hpp"
#include "partfit/solver.hpp"

#include <Eigen/Geometry>

#include <random>
#include <vector>

namespace partfit::testing {

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng)
{
    std::normal_distribution<double> normal;
    Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
    q.normalize();
    return q.toRotationMatrix();
}

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sigma = 1.0)
{
    std::normal_distribution<double> normal(0.0, sigma);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        m.data()[i] = normal(rng);
    }
    return m;
}

inline MotionMatrix random_motion(std::mt19937_64& rng) { return random_matrix(2, 3, rng); }

/// Random basis: a centred mean shape first, then k - 1 random directions.
inline ShapeBasis random_basis(int p, int k, std::mt19937_64& rng)
{
    Eigen::Matrix3Xd mean = random_matrix(3, p, rng);
    mean = centered(mean);
    std::vector<Eigen::Matrix3Xd> bases{mean};
    for (int i = 1; i < k; ++i) {
        bases.emplace_back(random_matrix(3, p, rng, 0.3));
    }
    return ShapeBasis(mean, bases);
}

inline Eigen::Matrix2d random_spd(std::mt19937_64& rng)
{
    const Eigen::Matrix2d a = random_matrix(2, 2, rng);
    return a * a.transpose() + 0.5 * Eigen::Matrix2d::Identity();
}

/// Per landmark: the given location plus `extra` random hypotheses with random scores.
inline HypothesisSet random_hypotheses(const Eigen::Matrix2Xd& centres, int extra, std::mt19937_64& rng,
                                       bool random_cov = true)
{
    std::uniform_real_distribution<double> unit;
    std::vector<LandmarkHypotheses> entries;
    for (Eigen::Index j = 0; j < centres.cols(); ++j) {
        LandmarkHypotheses e;
        e.landmark = static_cast<int>(j);
        e.locations.resize(extra + 1, 2);
        e.scores.resize(extra + 1);
        e.locations.row(0) = centres.col(j).transpose();
        e.scores(0) = 1.0 + unit(rng);
        for (int h = 1; h <= extra; ++h) {
            e.locations.row(h) = centres.col(j).transpose() + 5.0 * random_matrix(1, 2, rng);
            e.scores(h) = unit(rng);
        }
        e.covariance = random_cov ? random_spd(rng) : Eigen::Matrix2d::Identity();
        entries.push_back(e);
    }
    return HypothesisSet(std::move(entries));
}

/// A full state with random motions, translation, simplex assignments, dual and auxiliary variables.
inline MotionState random_state(const HypothesisSet& hyps, int k, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    MotionState s;
    for (int i = 0; i < k; ++i) {
        s.motions.push_back(random_motion(rng));
        s.dual.push_back(random_motion(rng));
        s.auxiliary.push_back(random_motion(rng));
    }
    s.translation = random_matrix(2, 1, rng);
    for (const auto& e : hyps.entries()) {
        Eigen::VectorXd x(e.count());
        for (int h = 0; h < e.count(); ++h) {
            x(h) = unit(rng);
        }
        s.assignments.push_back(x / x.sum());
    }
    return s;
}

} // namespace partfit::testing
