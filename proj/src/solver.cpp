/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: solver.cpp
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

#include "partfit/solver.hpp"

#include "partfit/errors.hpp"
#include "partfit/log.hpp"
#include "partfit/simplex_qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>

namespace partfit {

HypothesisSet::HypothesisSet(std::vector<LandmarkHypotheses> entries) : entries_(std::move(entries))
{
    std::vector<int> seen;
    for (const auto& entry : entries_) {
        const std::string where = "landmark " + std::to_string(entry.landmark);
        detail::require(entry.landmark >= 0, "HypothesisSet: negative landmark id");
        detail::require(entry.count() >= 1, "HypothesisSet: " + where + " has no hypotheses");
        detail::require(entry.locations.rows() == entry.scores.size(),
                        "HypothesisSet: " + where + " has mismatched locations and scores");
        detail::require(entry.scores.allFinite() && entry.locations.allFinite(),
                        "HypothesisSet: " + where + " has non-finite values");
        const Eigen::Matrix2d& cov = entry.covariance;
        if (!cov.allFinite() || std::abs(cov(0, 1) - cov(1, 0)) > 1e-12 * cov.cwiseAbs().maxCoeff() ||
            cov.llt().info() != Eigen::Success || cov(0, 0) <= 0.0 || cov.determinant() <= 0.0) {
            throw CovarianceError("HypothesisSet: covariance of " + where +
                                  " is not symmetric positive definite");
        }
        seen.push_back(entry.landmark);
    }
    std::sort(seen.begin(), seen.end());
    detail::require(std::adjacent_find(seen.begin(), seen.end()) == seen.end(),
                    "HypothesisSet: duplicate landmark id");
}

HypothesisSet HypothesisSet::restricted_to(const std::vector<bool>& keep) const
{
    std::vector<LandmarkHypotheses> kept;
    for (const auto& entry : entries_) {
        const auto id = static_cast<std::size_t>(entry.landmark);
        if (id < keep.size() && keep[id]) {
            kept.push_back(entry);
        }
    }
    return HypothesisSet(std::move(kept));
}

void SolverConfig::validate() const
{
    if (!(lambda1 >= 0.0) || !(lambda2 > 0.0) || !(rho > 0.0)) {
        throw ConfigError("SolverConfig: lambda1 must be >= 0 and lambda2, rho > 0");
    }
    if (max_iters < 1) {
        throw ConfigError("SolverConfig: max_iters must be positive");
    }
    if ((eps_primal && !(*eps_primal > 0.0)) || (eps_dual && !(*eps_dual > 0.0))) {
        throw ConfigError("SolverConfig: tolerances must be positive");
    }
}

double SolverConfig::primal_tolerance(int basis_size) const
{
    return eps_primal.value_or(1e-6 * std::sqrt(6.0 * basis_size));
}

double SolverConfig::dual_tolerance(int basis_size) const
{
    return eps_dual.value_or(1e-6 * std::sqrt(6.0 * basis_size));
}

namespace {

/// Per-fit constants: precisions, stacked basis columns and the Hessian of
/// f_geom in the stacked motion [T_1 ... T_k].
class GeomModel {
public:
    GeomModel(const HypothesisSet& hyps, const ShapeBasis& basis)
        : k_(basis.size()), precisions_(hyps.size()), columns_(hyps.size())
    {
        const int stacked = 3 * k_;
        for (std::size_t j = 0; j < hyps.size(); ++j) {
            const auto& entry = hyps[j];
            detail::require(entry.landmark < basis.landmarks(),
                            "solver: landmark " + std::to_string(entry.landmark) +
                                " outside the shape basis");
            const Eigen::LLT<Eigen::Matrix2d> llt(entry.covariance);
            if (llt.info() != Eigen::Success) {
                throw CovarianceError("solver: covariance of landmark " +
                                      std::to_string(entry.landmark) + " is not SPD");
            }
            precisions_[j] = llt.solve(Eigen::Matrix2d::Identity());
            precisions_[j] = 0.5 * (precisions_[j] + precisions_[j].transpose()).eval();
            columns_[j].resize(stacked);
            for (int i = 0; i < k_; ++i) {
                columns_[j].segment<3>(3 * i) = basis.basis(i).col(entry.landmark);
            }
        }
    }

    int basis_size() const { return k_; }
    const Eigen::Matrix2d& precision(std::size_t j) const { return precisions_[j]; }
    const Eigen::VectorXd& column(std::size_t j) const { return columns_[j]; }

    static Eigen::Matrix<double, 2, Eigen::Dynamic> stack(std::span<const MotionMatrix> motions)
    {
        Eigen::Matrix<double, 2, Eigen::Dynamic> stacked(2, 3 * motions.size());
        for (std::size_t i = 0; i < motions.size(); ++i) {
            stacked.middleCols<3>(static_cast<Eigen::Index>(3 * i)) = motions[i];
        }
        return stacked;
    }

    static std::vector<MotionMatrix> unstack(const Eigen::Matrix<double, 2, Eigen::Dynamic>& stacked)
    {
        std::vector<MotionMatrix> motions(static_cast<std::size_t>(stacked.cols() / 3));
        for (std::size_t i = 0; i < motions.size(); ++i) {
            motions[i] = stacked.middleCols<3>(static_cast<Eigen::Index>(3 * i));
        }
        return motions;
    }

    /// H = sum_j (beta_j beta_j^T) kron W_j, acting on column-major vec(M).
    Eigen::MatrixXd hessian() const
    {
        const int n = 6 * k_;
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            const Eigen::VectorXd& beta = columns_[j];
            const Eigen::Matrix2d& w = precisions_[j];
            for (int a = 0; a < 3 * k_; ++a) {
                for (int b = 0; b < 3 * k_; ++b) {
                    h.block<2, 2>(2 * a, 2 * b) += (beta(a) * beta(b)) * w;
                }
            }
        }
        return h;
    }

private:
    int k_;
    std::vector<Eigen::Matrix2d> precisions_;
    std::vector<Eigen::VectorXd> columns_;
};

void check_state(const MotionState& state, const HypothesisSet& hyps, const ShapeBasis& basis)
{
    detail::require(static_cast<int>(state.motions.size()) == basis.size(),
                    "solver: state has " + std::to_string(state.motions.size()) +
                        " motions for a basis of size " + std::to_string(basis.size()));
    detail::require(state.assignments.size() == hyps.size(),
                    "solver: assignment count does not match the hypothesis set");
    for (std::size_t j = 0; j < hyps.size(); ++j) {
        detail::require(state.assignments[j].size() == hyps[j].count(),
                        "solver: assignment length mismatch for landmark " +
                            std::to_string(hyps[j].landmark));
    }
}

Eigen::Vector2d residual(const MotionState& state, const HypothesisSet& hyps,
                         const GeomModel& model, const Eigen::Matrix<double, 2, Eigen::Dynamic>& m,
                         std::size_t j)
{
    return hyps[j].locations.transpose() * state.assignments[j] - m * model.column(j) -
           state.translation;
}

Eigen::Vector2d solve_translation(const MotionState& state, const HypothesisSet& hyps,
                                  const GeomModel& model,
                                  const Eigen::Matrix<double, 2, Eigen::Dynamic>& m)
{
    detail::require(!hyps.empty(), "update_translation: no landmarks");
    Eigen::Matrix2d precision_sum = Eigen::Matrix2d::Zero();
    Eigen::Vector2d weighted = Eigen::Vector2d::Zero();
    for (std::size_t j = 0; j < hyps.size(); ++j) {
        const Eigen::Vector2d target =
            hyps[j].locations.transpose() * state.assignments[j] - m * model.column(j);
        precision_sum += model.precision(j);
        weighted += model.precision(j) * target;
    }
    return precision_sum.ldlt().solve(weighted);
}

/// Redistributes mass uniformly inside groups of hypotheses that share both
/// location and score.
void spread_over_ties(const LandmarkHypotheses& entry, Eigen::VectorXd& x)
{
    const int l = entry.count();
    std::vector<bool> visited(static_cast<std::size_t>(l), false);
    for (int a = 0; a < l; ++a) {
        if (visited[static_cast<std::size_t>(a)]) {
            continue;
        }
        std::vector<int> group{a};
        for (int b = a + 1; b < l; ++b) {
            if (entry.scores(b) == entry.scores(a) &&
                entry.locations.row(b) == entry.locations.row(a)) {
                group.push_back(b);
                visited[static_cast<std::size_t>(b)] = true;
            }
        }
        if (group.size() > 1) {
            double mass = 0.0;
            for (int i : group) {
                mass += x(i);
            }
            for (int i : group) {
                x(i) = mass / static_cast<double>(group.size());
            }
        }
    }
}

Eigen::VectorXd solve_assignment(const LandmarkHypotheses& entry, const Eigen::Matrix2d& precision,
                                 const Eigen::Vector2d& prediction, double lambda1,
                                 std::vector<int>& support)
{
    if (entry.count() == 1) {
        support = {0};
        return Eigen::VectorXd::Ones(1);
    }
    // Working relative to the prediction keeps Q well scaled; sum(x) = 1
    // makes the shift exact.
    const Eigen::Matrix<double, Eigen::Dynamic, 2> offsets =
        entry.locations.rowwise() - prediction.transpose();
    const Eigen::MatrixXd q = offsets * precision * offsets.transpose();
    const Eigen::VectorXd h = lambda1 * entry.scores;
    SimplexQpResult result = solve_simplex_qp(q, h, support);
    support = result.support;
    spread_over_ties(entry, result.x);
    return result.x;
}

class MotionSystem {
public:
    MotionSystem(const GeomModel& model) : hessian_(model.hessian()) {}

    bool factor(double rho)
    {
        const auto n = hessian_.rows();
        Eigen::MatrixXd system = hessian_;
        system.diagonal().array() += rho;
        llt_.compute(system);
        ridge_added_ = false;
        if (llt_.info() != Eigen::Success) {
            system.diagonal().array() += 1e-9 * std::max(1.0, system.diagonal().maxCoeff());
            llt_.compute(system);
            ridge_added_ = true;
            log().warn("update_motions: singular normal matrix, added 1e-9 ridge");
        }
        (void)n;
        return ridge_added_;
    }

    std::vector<MotionMatrix> solve(const MotionState& state, const HypothesisSet& hyps,
                                    const GeomModel& model, double rho) const
    {
        const int k = model.basis_size();
        Eigen::Matrix<double, 2, Eigen::Dynamic> rhs = Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, 3 * k);
        for (std::size_t j = 0; j < hyps.size(); ++j) {
            const Eigen::Vector2d target =
                hyps[j].locations.transpose() * state.assignments[j] - state.translation;
            rhs.noalias() += (model.precision(j) * target) * model.column(j).transpose();
        }
        rhs -= GeomModel::stack(state.dual);
        rhs += rho * GeomModel::stack(state.auxiliary);
        const Eigen::VectorXd vec = llt_.solve(Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size()));
        return GeomModel::unstack(Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic>>(vec.data(), 2, 3 * k));
    }

    bool ridge_added() const { return ridge_added_; }

private:
    Eigen::MatrixXd hessian_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    bool ridge_added_ = false;
};

double frobenius_distance(std::span<const MotionMatrix> a, std::span<const MotionMatrix> b)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += (a[i] - b[i]).squaredNorm();
    }
    return std::sqrt(sum);
}

double norm(std::span<const MotionMatrix> a)
{
    double sum = 0.0;
    for (const auto& m : a) {
        sum += m.squaredNorm();
    }
    return std::sqrt(sum);
}

} // namespace

double eval_score(std::span<const Eigen::VectorXd> assignments, const HypothesisSet& hyps)
{
    detail::require(assignments.size() == hyps.size(), "eval_score: dimension mismatch");
    double total = 0.0;
    for (std::size_t j = 0; j < hyps.size(); ++j) {
        detail::require(assignments[j].size() == hyps[j].count(), "eval_score: dimension mismatch");
        total -= hyps[j].scores.dot(assignments[j]);
    }
    return total;
}

double eval_geom(const MotionState& state, const HypothesisSet& hyps, const ShapeBasis& basis)
{
    check_state(state, hyps, basis);
    const GeomModel model(hyps, basis);
    const auto m = GeomModel::stack(state.motions);
    double total = 0.0;
    for (std::size_t j = 0; j < hyps.size(); ++j) {
        const Eigen::Vector2d e = residual(state, hyps, model, m, j);
        total += 0.5 * e.dot(model.precision(j) * e);
    }
    return total;
}

double spectral_norm(const MotionMatrix& matrix)
{
    // Largest eigenvalue of the 2x2 Gram matrix, in closed form.
    const Eigen::Matrix2d gram = matrix * matrix.transpose();
    const double half_trace = 0.5 * gram.trace();
    const double gap = std::sqrt(std::max(0.0, 0.25 * (gram(0, 0) - gram(1, 1)) * (gram(0, 0) - gram(1, 1)) +
                                                    gram(0, 1) * gram(1, 0)));
    return std::sqrt(std::max(0.0, half_trace + gap));
}

double eval_reg(std::span<const MotionMatrix> motions)
{
    double total = 0.0;
    for (const auto& motion : motions) {
        total += spectral_norm(motion);
    }
    return total;
}

double eval_objective(const MotionState& state, const HypothesisSet& hyps, const ShapeBasis& basis,
                      const SolverConfig& config)
{
    return eval_geom(state, hyps, basis) + config.lambda1 * eval_score(state.assignments, hyps) +
           config.lambda2 * eval_reg(state.motions);
}

MotionMatrix prox_spectral(const MotionMatrix& a, double mu)
{
    detail::require(mu > 0.0, "prox_spectral: mu must be positive");
    const Eigen::JacobiSVD<MotionMatrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector2d sigma = svd.singularValues();
    if (sigma.sum() <= mu) {
        return MotionMatrix::Zero();
    }
    // Projection of sigma onto {s >= 0, s1 + s2 <= mu} is max(sigma - theta, 0);
    // A minus it clips the singular values at theta.
    double theta = 0.5 * (sigma.sum() - mu);
    if (sigma(1) - theta <= 0.0) {
        theta = sigma(0) - mu;
    }
    const Eigen::Vector2d clipped = sigma.cwiseMin(theta);
    return svd.matrixU() * clipped.asDiagonal() * svd.matrixV().leftCols<2>().transpose();
}

Eigen::Vector2d update_translation(const MotionState& state, const HypothesisSet& hyps,
                                   const ShapeBasis& basis)
{
    check_state(state, hyps, basis);
    const GeomModel model(hyps, basis);
    return solve_translation(state, hyps, model, GeomModel::stack(state.motions));
}

std::vector<Eigen::VectorXd> update_assignments(const MotionState& state, const HypothesisSet& hyps,
                                                const ShapeBasis& basis, double lambda1)
{
    check_state(state, hyps, basis);
    const GeomModel model(hyps, basis);
    const auto m = GeomModel::stack(state.motions);
    std::vector<Eigen::VectorXd> assignments(hyps.size());
    for (std::size_t j = 0; j < hyps.size(); ++j) {
        std::vector<int> support;
        const Eigen::Vector2d prediction = m * model.column(j) + state.translation;
        assignments[j] = solve_assignment(hyps[j], model.precision(j), prediction, lambda1, support);
    }
    return assignments;
}

MotionUpdate update_motions(const MotionState& state, const HypothesisSet& hyps,
                            const ShapeBasis& basis, double rho)
{
    check_state(state, hyps, basis);
    detail::require(rho >= 0.0, "update_motions: rho must be nonnegative");
    detail::require(state.dual.size() == state.motions.size() &&
                        state.auxiliary.size() == state.motions.size(),
                    "update_motions: dual/auxiliary size mismatch");
    const GeomModel model(hyps, basis);
    MotionSystem system(model);
    MotionUpdate update;
    update.ridge_added = system.factor(rho);
    update.motions = system.solve(state, hyps, model, rho);
    return update;
}

GeomGradient geom_gradient(const MotionState& state, const HypothesisSet& hyps,
                           const ShapeBasis& basis)
{
    check_state(state, hyps, basis);
    const GeomModel model(hyps, basis);
    const auto m = GeomModel::stack(state.motions);
    GeomGradient gradient;
    Eigen::Matrix<double, 2, Eigen::Dynamic> stacked =
        Eigen::Matrix<double, 2, Eigen::Dynamic>::Zero(2, m.cols());
    gradient.assignments.resize(hyps.size());
    for (std::size_t j = 0; j < hyps.size(); ++j) {
        const Eigen::Vector2d weighted = model.precision(j) * residual(state, hyps, model, m, j);
        gradient.translation -= weighted;
        stacked.noalias() -= weighted * model.column(j).transpose();
        gradient.assignments[j] = hyps[j].locations * weighted;
    }
    gradient.motions = GeomModel::unstack(stacked);
    return gradient;
}

MotionState initial_state(const HypothesisSet& hyps, const ShapeBasis& basis)
{
    detail::require(!hyps.empty(), "solver: empty hypothesis set");
    const GeomModel model(hyps, basis);
    MotionState state;
    const auto k = static_cast<std::size_t>(basis.size());
    state.motions.assign(k, MotionMatrix::Zero());
    state.dual.assign(k, MotionMatrix::Zero());
    state.auxiliary.assign(k, MotionMatrix::Zero());
    state.assignments.resize(hyps.size());
    Eigen::Matrix2d precision_sum = Eigen::Matrix2d::Zero();
    Eigen::Vector2d weighted = Eigen::Vector2d::Zero();
    for (std::size_t j = 0; j < hyps.size(); ++j) {
        const Eigen::VectorXd& scores = hyps[j].scores;
        const Eigen::ArrayXd shifted = (scores.array() - scores.maxCoeff()).exp();
        state.assignments[j] = (shifted / shifted.sum()).matrix();
        Eigen::Index best = 0;
        scores.maxCoeff(&best);
        precision_sum += model.precision(j);
        weighted += model.precision(j) * hyps[j].locations.row(best).transpose();
    }
    state.translation = precision_sum.ldlt().solve(weighted);
    return state;
}

SolveResult solve(const HypothesisSet& hyps, const ShapeBasis& basis, const SolverConfig& config)
{
    config.validate();
    const GeomModel model(hyps, basis);
    const int k = basis.size();
    const double eps_primal = config.primal_tolerance(k);
    const double eps_dual = config.dual_tolerance(k);

    SolveResult result;
    MotionState& state = result.state;
    state = initial_state(hyps, basis);
    SolveDiagnostics& diagnostics = result.diagnostics;

    double rho = config.rho;
    MotionSystem system(model);
    diagnostics.ridge_added = system.factor(rho);
    std::vector<std::vector<int>> supports(hyps.size());

    MotionState best = state;
    double best_objective = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= config.max_iters; ++iter) {
        auto m = GeomModel::stack(state.motions);
        state.translation = solve_translation(state, hyps, model, m);
        for (std::size_t j = 0; j < hyps.size(); ++j) {
            const Eigen::Vector2d prediction = m * model.column(j) + state.translation;
            state.assignments[j] = solve_assignment(hyps[j], model.precision(j), prediction,
                                                    config.lambda1, supports[j]);
        }
        state.motions = system.solve(state, hyps, model, rho);

        const std::vector<MotionMatrix> previous = state.auxiliary;
        for (std::size_t i = 0; i < state.motions.size(); ++i) {
            state.auxiliary[i] = prox_spectral(state.motions[i] + state.dual[i] / rho,
                                               config.lambda2 / rho);
            state.dual[i] += rho * (state.motions[i] - state.auxiliary[i]);
        }
        const double primal = frobenius_distance(state.motions, state.auxiliary);
        const double dual = rho * frobenius_distance(state.auxiliary, previous);

        m = GeomModel::stack(state.motions);
        double objective = 0.0;
        for (std::size_t j = 0; j < hyps.size(); ++j) {
            const Eigen::Vector2d e = residual(state, hyps, model, m, j);
            objective += 0.5 * e.dot(model.precision(j) * e) -
                         config.lambda1 * hyps[j].scores.dot(state.assignments[j]);
        }
        objective += config.lambda2 * eval_reg(state.motions);
        diagnostics.trace.push_back({iter, objective, primal, dual});
        diagnostics.iterations = iter;
        if (objective < best_objective) {
            best_objective = objective;
            best = state;
        }

        if (primal <= eps_primal && dual <= eps_dual) {
            diagnostics.converged = true;
            break;
        }
        if (config.adapt_rho) {
            // residuals relative to the size of the iterates they bound
            const double primal_scale = std::max({norm(state.motions), norm(state.auxiliary), eps_primal});
            const double dual_scale = std::max(norm(state.dual), eps_dual);
            double ratio = (primal / primal_scale) / std::max(dual / dual_scale, 1e-300);
            // only the dual test is still open: trade primal slack for dual progress
            if (primal < 0.1 * eps_primal && dual > eps_dual && iter % 20 == 0) {
                ratio = 0.0;
            }
            if (ratio > 10.0) {
                rho *= 2.0;
                diagnostics.ridge_added |= system.factor(rho);
            } else if (ratio < 0.1) {
                rho *= 0.5;
                diagnostics.ridge_added |= system.factor(rho);
            }
        }
    }
    diagnostics.final_rho = rho;
    if (!diagnostics.converged) {
        log().info("solve: no convergence after {} iterations", diagnostics.iterations);
        state = std::move(best);
    }
    return result;
}

std::string trace_to_csv(std::span<const TraceRow> trace)
{
    std::ostringstream out;
    out.precision(17);
    out << "iter,objective,primal_res,dual_res\n";
    for (const auto& row : trace) {
        out << row.iter << ',' << row.objective << ',' << row.primal_res << ',' << row.dual_res
            << '\n';
    }
    return out.str();
}

} // namespace partfit
