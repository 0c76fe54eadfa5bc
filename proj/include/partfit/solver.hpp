/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: solver.hpp
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

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace partfit {

/// Detection hypotheses for one landmark.
struct LandmarkHypotheses {
    int landmark = 0;                                  ///< column in the shape basis
    Eigen::Matrix<double, Eigen::Dynamic, 2> locations; ///< l x 2, pixels
    Eigen::VectorXd scores;                            ///< l detector responses
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Identity(); ///< D_j, pixels^2

    int count() const { return static_cast<int>(scores.size()); }
};

/**
 * Per-landmark hypotheses for the landmarks taking part in a fit. Landmarks
 * absent from the set (occluded, deselected) simply do not contribute.
 */
class HypothesisSet {
public:
    HypothesisSet() = default;
    explicit HypothesisSet(std::vector<LandmarkHypotheses> entries);

    std::span<const LandmarkHypotheses> entries() const { return entries_; }
    const LandmarkHypotheses& operator[](std::size_t j) const { return entries_[j]; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// Entries whose landmark is flagged in `keep` (indexed by landmark id).
    HypothesisSet restricted_to(const std::vector<bool>& keep) const;

private:
    std::vector<LandmarkHypotheses> entries_;
};

struct SolverConfig {
    double lambda1 = 1000.0; ///< weight of the detection-score term
    double lambda2 = 50.0;   ///< weight of the spectral-norm regularizer
    double rho = 1.0;        ///< initial ADMM penalty
    bool adapt_rho = true;   ///< residual balancing (x2 or /2 when ratio > 10)
    int max_iters = 2000;
    /// Unset tolerances default to 1e-6 * sqrt(6k).
    std::optional<double> eps_primal;
    std::optional<double> eps_dual;

    void validate() const;
    double primal_tolerance(int basis_size) const;
    double dual_tolerance(int basis_size) const;
};

/// Unknowns of the relaxed program together with the ADMM splitting state.
struct MotionState {
    std::vector<MotionMatrix> motions;     ///< T_i
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();
    std::vector<Eigen::VectorXd> assignments; ///< x_j on the simplex, one per entry
    std::vector<MotionMatrix> dual;        ///< Y_i
    std::vector<MotionMatrix> auxiliary;   ///< Z_i
};

struct TraceRow {
    int iter = 0;
    double objective = 0.0;
    double primal_res = 0.0;
    double dual_res = 0.0;
};

struct SolveDiagnostics {
    bool converged = false;
    int iterations = 0;
    bool ridge_added = false; ///< motion normal matrix needed a ridge
    double final_rho = 0.0;
    std::vector<TraceRow> trace;
};

struct SolveResult {
    MotionState state;
    SolveDiagnostics diagnostics;
};

/// -sum_j r_j^T x_j.
double eval_score(std::span<const Eigen::VectorXd> assignments, const HypothesisSet& hyps);

/// 1/2 sum_j || D_j^{-1/2} (L_j^T x_j - [sum_i T_i B_i]_j - t) ||^2.
double eval_geom(const MotionState& state, const HypothesisSet& hyps, const ShapeBasis& basis);

/// sum_i sigma_max(T_i).
double eval_reg(std::span<const MotionMatrix> motions);

/// f_geom + lambda1 f_score + lambda2 f_reg evaluated at (X, T, t).
double eval_objective(const MotionState& state, const HypothesisSet& hyps, const ShapeBasis& basis,
                      const SolverConfig& config);

/// Largest singular value of a 2x3 matrix.
double spectral_norm(const MotionMatrix& matrix);

/**
 * argmin_Z 1/2 ||Z - A||_F^2 + mu sigma_max(Z).
 *
 * By the Moreau identity this is A minus its projection onto the nuclear
 * norm ball of radius mu; in singular values, the pair is projected onto the
 * l1 ball and the singular vectors are kept.
 */
MotionMatrix prox_spectral(const MotionMatrix& a, double mu);

/// Closed-form minimizer of f_geom over t with everything else fixed.
Eigen::Vector2d update_translation(const MotionState& state, const HypothesisSet& hyps,
                                   const ShapeBasis& basis);

/**
 * Exact per-landmark minimizers over the probability simplex of
 * 1/2 || D_j^{-1/2} (L_j^T x - p_j) ||^2 - lambda1 r_j^T x, where p_j is the
 * current model projection. Hypotheses sharing both location and score are
 * interchangeable; their total mass is split uniformly.
 */
std::vector<Eigen::VectorXd> update_assignments(const MotionState& state, const HypothesisSet& hyps,
                                                const ShapeBasis& basis, double lambda1);

struct MotionUpdate {
    std::vector<MotionMatrix> motions;
    bool ridge_added = false;
};

/// Joint minimizer over all T_i of f_geom + <Y, T - Z> + rho/2 ||T - Z||^2.
MotionUpdate update_motions(const MotionState& state, const HypothesisSet& hyps,
                            const ShapeBasis& basis, double rho);

/// Analytic gradient of f_geom.
struct GeomGradient {
    Eigen::Vector2d translation = Eigen::Vector2d::Zero();
    std::vector<MotionMatrix> motions;
    std::vector<Eigen::VectorXd> assignments;
};

GeomGradient geom_gradient(const MotionState& state, const HypothesisSet& hyps,
                           const ShapeBasis& basis);

/// Starting point: score-softmax assignments, zero motions, translation at
/// the precision-weighted mean of the top-scoring hypotheses.
MotionState initial_state(const HypothesisSet& hyps, const ShapeBasis& basis);

/**
 * ADMM on the relaxed program. Each sweep updates t, X, T, Z then the dual
 * Y += rho (T - Z). Stops when ||T - Z||_F <= eps_primal and
 * rho ||Z - Z_prev||_F <= eps_dual. Without convergence the lowest-objective
 * iterate is returned and diagnostics.converged is false.
 */
SolveResult solve(const HypothesisSet& hyps, const ShapeBasis& basis, const SolverConfig& config);

/// Writes `iter,objective,primal_res,dual_res` rows.
std::string trace_to_csv(std::span<const TraceRow> trace);

} // namespace partfit
