/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: simplex_qp.hpp
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

/// Euclidean projection onto the probability simplex.
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

struct SimplexQpResult {
    Eigen::VectorXd x;
    std::vector<int> support; ///< indices with positive mass
    bool exact = true;        ///< false when the iterative fallback was used
};

/**
 * Minimizes 1/2 x^T Q x - h^T x over the probability simplex for a small,
 * positive semidefinite Q of rank at most 2.
 *
 * Because the objective only sees x through a 2-vector and a linear score,
 * some minimizer has at most three nonzeros. Candidate supports are tried
 * warm support first, then by increasing size; the first one whose
 * equality-constrained solution is nonnegative and satisfies the KKT
 * conditions on all coordinates is returned. If rounding defeats every
 * candidate, accelerated projected gradient is run instead.
 */
SimplexQpResult solve_simplex_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& h,
                                 std::span<const int> warm_support = {});

/// Largest violation of the simplex KKT conditions, measured as the norm of
/// x - P(x - grad) where P is the simplex projection.
double simplex_kkt_residual(const Eigen::MatrixXd& q, const Eigen::VectorXd& h,
                            const Eigen::VectorXd& x);

} // namespace partfit
