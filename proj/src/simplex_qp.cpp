/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: simplex_qp.cpp
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

#include "partfit/simplex_qp.hpp"

#include "partfit/errors.hpp"
#include "partfit/log.hpp"

#include <Eigen/LU>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>

namespace partfit {

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v)
{
    const auto n = v.size();
    Eigen::VectorXd sorted = v;
    std::sort(sorted.data(), sorted.data() + n, std::greater<>());
    double cumulative = 0.0;
    double threshold = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        cumulative += sorted(i);
        const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (sorted(i) - candidate > 0.0) {
            threshold = candidate;
        }
    }
    return (v.array() - threshold).max(0.0).matrix();
}

double simplex_kkt_residual(const Eigen::MatrixXd& q, const Eigen::VectorXd& h,
                            const Eigen::VectorXd& x)
{
    const Eigen::VectorXd gradient = q * x - h;
    return (x - project_to_simplex(x - gradient)).norm();
}

namespace {

class SupportSolver {
public:
    SupportSolver(const Eigen::MatrixXd& q, const Eigen::VectorXd& h) : q_(q), h_(h)
    {
        const double scale =
            std::max({1.0, q.cwiseAbs().maxCoeff(), h.cwiseAbs().maxCoeff()});
        gradient_tolerance_ = 1e-9 * scale;
    }

    bool attempt(std::span<const int> support, Eigen::VectorXd& x) const
    {
        const auto size = static_cast<Eigen::Index>(support.size());
        const Eigen::Index n = h_.size();
        Eigen::VectorXd candidate = Eigen::VectorXd::Zero(n);
        double level = 0.0;
        if (size == 1) {
            candidate(support[0]) = 1.0;
            level = q_(support[0], support[0]) - h_(support[0]);
        } else {
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(size + 1, size + 1);
            Eigen::VectorXd rhs(size + 1);
            for (Eigen::Index a = 0; a < size; ++a) {
                for (Eigen::Index b = 0; b < size; ++b) {
                    kkt(a, b) = q_(support[a], support[b]);
                }
                kkt(a, size) = -1.0;
                kkt(size, a) = 1.0;
                rhs(a) = h_(support[a]);
            }
            rhs(size) = 1.0;
            const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
            if (!lu.isInvertible()) {
                return false;
            }
            const Eigen::VectorXd solution = lu.solve(rhs);
            double total = 0.0;
            for (Eigen::Index a = 0; a < size; ++a) {
                if (!(solution(a) > 1e-12)) {
                    return false;
                }
                candidate(support[a]) = solution(a);
                total += solution(a);
            }
            candidate /= total;
            level = solution(size);
        }
        const Eigen::VectorXd gradient = q_ * candidate - h_;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (gradient(i) < level - gradient_tolerance_) {
                return false;
            }
        }
        x = std::move(candidate);
        return true;
    }

private:
    const Eigen::MatrixXd& q_;
    const Eigen::VectorXd& h_;
    double gradient_tolerance_ = 0.0;
};

Eigen::VectorXd accelerated_projected_gradient(const Eigen::MatrixXd& q, const Eigen::VectorXd& h,
                                               Eigen::VectorXd x)
{
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q, Eigen::EigenvaluesOnly);
    const double lipschitz = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-12);
    const double scale = std::max({1.0, q.cwiseAbs().maxCoeff(), h.cwiseAbs().maxCoeff()});
    Eigen::VectorXd y = x;
    double momentum = 1.0;
    for (int iter = 0; iter < 100000; ++iter) {
        const Eigen::VectorXd next = project_to_simplex(y - (q * y - h) / lipschitz);
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        // restart when the step opposes the momentum direction
        if ((y - next).dot(next - x) > 0.0) {
            y = next;
            momentum = 1.0;
        } else {
            y = next + ((momentum - 1.0) / next_momentum) * (next - x);
            momentum = next_momentum;
        }
        x = next;
        if (simplex_kkt_residual(q, h, x) * lipschitz < 1e-8 * scale) {
            break;
        }
    }
    return x;
}

} // namespace

SimplexQpResult solve_simplex_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& h,
                                 std::span<const int> warm_support)
{
    const auto n = static_cast<int>(h.size());
    detail::require(n >= 1 && q.rows() == n && q.cols() == n,
                    "solve_simplex_qp: dimension mismatch");
    SimplexQpResult result;
    if (n == 1) {
        result.x = Eigen::VectorXd::Ones(1);
        result.support = {0};
        return result;
    }

    const SupportSolver solver(q, h);
    auto finish = [&](Eigen::VectorXd x) {
        result.x = std::move(x);
        result.support.clear();
        for (int i = 0; i < n; ++i) {
            if (result.x(i) > 0.0) {
                result.support.push_back(i);
            }
        }
        return result;
    };

    Eigen::VectorXd x;
    if (!warm_support.empty() && warm_support.size() <= 3 && solver.attempt(warm_support, x)) {
        return finish(std::move(x));
    }
    // Singles, ordered by the value of the objective at the vertex.
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return 0.5 * q(a, a) - h(a) < 0.5 * q(b, b) - h(b);
    });
    for (int i : order) {
        const int support[] = {i};
        if (solver.attempt(support, x)) {
            return finish(std::move(x));
        }
    }
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const int support[] = {a, b};
            if (solver.attempt(support, x)) {
                return finish(std::move(x));
            }
        }
    }
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            for (int c = b + 1; c < n; ++c) {
                const int support[] = {a, b, c};
                if (solver.attempt(support, x)) {
                    return finish(std::move(x));
                }
            }
        }
    }
    log().debug("solve_simplex_qp: no exact support found for l = {}, using projected gradient", n);
    result.exact = false;
    return finish(accelerated_projected_gradient(q, h, Eigen::VectorXd::Constant(n, 1.0 / n)));
}

} // namespace partfit
