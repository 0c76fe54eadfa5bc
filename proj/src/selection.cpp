/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: selection.cpp
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

#include "partfit/selection.hpp"

#include "partfit/errors.hpp"
#include "partfit/log.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace partfit {

void FacilityInstance::validate() const
{
    const auto n = unary.size();
    detail::require(n >= 1, "FacilityInstance: no landmarks");
    detail::require(pairwise.rows() == n && pairwise.cols() == n,
                    "FacilityInstance: pairwise must be n x n");
    detail::require(lambda > 0.0 && std::isfinite(lambda), "FacilityInstance: lambda must be positive");
    detail::require(unary.allFinite() && pairwise.allFinite(), "FacilityInstance: non-finite costs");
    detail::require((unary.array() >= 0.0).all() && (unary.array() <= 1.0).all(),
                    "FacilityInstance: unary costs must lie in [0, 1]");
    detail::require((pairwise.array() >= 0.0).all(), "FacilityInstance: negative distance");
    const double scale = std::max(1.0, pairwise.cwiseAbs().maxCoeff());
    detail::require((pairwise - pairwise.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                    "FacilityInstance: pairwise must be symmetric");
    detail::require(pairwise.diagonal().cwiseAbs().maxCoeff() <= 1e-12 * scale,
                    "FacilityInstance: pairwise diagonal must be zero");
}

namespace {

Eigen::VectorXd unary_from_aps(const Eigen::VectorXd& aps)
{
    for (Eigen::Index u = 0; u < aps.size(); ++u) {
        if (!(aps(u) >= 0.0 && aps(u) <= 1.0)) {
            throw ContractError("build_instance: AP of landmark " + std::to_string(u) +
                                " is outside [0, 1]");
        }
    }
    return Eigen::VectorXd::Ones(aps.size()) - aps;
}

} // namespace

FacilityInstance build_instance(const Eigen::VectorXd& aps, const Eigen::Matrix3Xd& shape, double lambda)
{
    return build_instance(aps, std::span<const Eigen::Matrix3Xd>(&shape, 1), lambda);
}

FacilityInstance build_instance(const Eigen::VectorXd& aps, std::span<const Eigen::Matrix3Xd> shapes,
                                double lambda)
{
    detail::require(!shapes.empty(), "build_instance: no shapes");
    detail::require(lambda > 0.0, "build_instance: lambda must be positive");
    const auto n = aps.size();
    FacilityInstance inst;
    inst.unary = unary_from_aps(aps);
    inst.lambda = lambda;
    inst.pairwise = Eigen::MatrixXd::Zero(n, n);
    for (const auto& shape : shapes) {
        detail::require(shape.cols() == n, "build_instance: shape and AP counts differ");
        for (Eigen::Index u = 0; u < n; ++u) {
            for (Eigen::Index v = u + 1; v < n; ++v) {
                const double d = (shape.col(u) - shape.col(v)).norm();
                inst.pairwise(u, v) += d;
                inst.pairwise(v, u) += d;
            }
        }
    }
    inst.pairwise /= static_cast<double>(shapes.size());
    return inst;
}

double facility_objective(const FacilityInstance& inst, const Eigen::VectorXd& y, const Eigen::MatrixXd& x)
{
    return inst.unary.dot(y) + inst.lambda * inst.pairwise.cwiseProduct(x).sum();
}

double selection_objective(const FacilityInstance& inst, const std::vector<bool>& selected)
{
    const int n = inst.size();
    detail::require(static_cast<int>(selected.size()) == n, "selection_objective: size mismatch");
    double total = 0.0;
    bool any = false;
    for (int v = 0; v < n; ++v) {
        if (selected[static_cast<std::size_t>(v)]) {
            total += inst.unary(v);
            any = true;
        }
    }
    if (!any) {
        return std::numeric_limits<double>::infinity();
    }
    for (int u = 0; u < n; ++u) {
        double nearest = std::numeric_limits<double>::infinity();
        for (int v = 0; v < n; ++v) {
            if (selected[static_cast<std::size_t>(v)]) {
                nearest = std::min(nearest, inst.pairwise(u, v));
            }
        }
        total += inst.lambda * nearest;
    }
    return total;
}

namespace {

// Primal x (n x n), y; slacks s = y_v - x_uv, q = 1 - y. Duals: alpha for
// the assignment rows, gamma (x >= 0), beta (s >= 0), eta (y >= 0), zeta (q >= 0).
struct IpmPoint {
    Eigen::MatrixXd x, gamma, beta;
    Eigen::VectorXd y, eta, zeta, alpha;

    Eigen::MatrixXd slack() const { return (-x).rowwise() + y.transpose(); }
    Eigen::VectorXd q() const { return Eigen::VectorXd::Ones(y.size()) - y; }
};

struct IpmDirection {
    Eigen::MatrixXd x, gamma, beta;
    Eigen::VectorXd y, eta, zeta, alpha;
};

struct Targets {
    Eigen::MatrixXd gamma, beta;
    Eigen::VectorXd eta, zeta;
};

class FacilityIpm {
public:
    explicit FacilityIpm(const FacilityInstance& inst) : inst_(inst), n_(inst.size())
    {
        cost_ = inst.lambda * inst.pairwise;
    }

    FractionalSolution run()
    {
        const auto n = n_;
        IpmPoint pt;
        const double kappa = std::max({1.0, cost_.cwiseAbs().maxCoeff(), inst_.unary.cwiseAbs().maxCoeff()});
        pt.x = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
        pt.y = Eigen::VectorXd::Constant(n, 0.5 * (1.0 + 1.0 / n));
        pt.gamma = Eigen::MatrixXd::Constant(n, n, kappa);
        pt.beta = Eigen::MatrixXd::Constant(n, n, kappa);
        pt.eta = Eigen::VectorXd::Constant(n, kappa);
        pt.zeta = Eigen::VectorXd::Constant(n, kappa);
        pt.alpha = Eigen::VectorXd::Zero(n);

        const double pairs = 2.0 * n * n + 2.0 * n;
        std::ostringstream trace;
        for (int iter = 1; iter <= 300; ++iter) {
            const Eigen::MatrixXd s = pt.slack();
            const Eigen::VectorXd q = pt.q();
            const double complementarity = pt.x.cwiseProduct(pt.gamma).sum() + s.cwiseProduct(pt.beta).sum() +
                                           pt.y.dot(pt.eta) + q.dot(pt.zeta);
            const double mu = complementarity / pairs;
            const Residuals r = residuals(pt);
            const double primal = inst_.unary.dot(pt.y) + cost_.cwiseProduct(pt.x).sum();
            const double dual = pt.alpha.sum() - pt.zeta.sum();
            trace << iter << ": primal " << primal << " dual " << dual << " mu " << mu << '\n';
            if (complementarity <= 1e-10 * (1.0 + std::abs(primal)) && r.dual_norm() <= 1e-10 * kappa &&
                r.primal.cwiseAbs().maxCoeff() <= 1e-10) {
                FractionalSolution out;
                out.x = pt.x.cwiseMax(0.0).cwiseMin(1.0);
                out.y = pt.y.cwiseMax(0.0).cwiseMin(1.0);
                out.objective = primal;
                out.dual_objective = dual;
                out.iterations = iter;
                return out;
            }

            Targets zero{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n),
                         Eigen::VectorXd::Zero(n)};
            const IpmDirection affine = direction(pt, r, zero);
            const double primal_step = primal_step_length(pt, affine, 1.0);
            const double dual_step = dual_step_length(pt, affine, 1.0);
            const Eigen::MatrixXd ds_affine = (-affine.x).rowwise() + affine.y.transpose();
            const double affine_complementarity =
                (pt.x + primal_step * affine.x).cwiseProduct(pt.gamma + dual_step * affine.gamma).sum() +
                (s + primal_step * ds_affine).cwiseProduct(pt.beta + dual_step * affine.beta).sum() +
                (pt.y + primal_step * affine.y).dot(pt.eta + dual_step * affine.eta) +
                (q - primal_step * affine.y).dot(pt.zeta + dual_step * affine.zeta);
            const double sigma = std::pow(std::max(affine_complementarity, 0.0) / complementarity, 3.0);
            const double target = sigma * mu;

            Targets corrected;
            corrected.gamma = (Eigen::MatrixXd::Constant(n, n, target) - affine.x.cwiseProduct(affine.gamma));
            corrected.beta = (Eigen::MatrixXd::Constant(n, n, target) - ds_affine.cwiseProduct(affine.beta));
            corrected.eta = Eigen::VectorXd::Constant(n, target) - affine.y.cwiseProduct(affine.eta);
            corrected.zeta = Eigen::VectorXd::Constant(n, target) + affine.y.cwiseProduct(affine.zeta);
            const IpmDirection step = direction(pt, r, corrected);
            const double ap = primal_step_length(pt, step, 0.995);
            const double ad = dual_step_length(pt, step, 0.995);
            pt.x += ap * step.x;
            pt.y += ap * step.y;
            pt.gamma += ad * step.gamma;
            pt.beta += ad * step.beta;
            pt.eta += ad * step.eta;
            pt.zeta += ad * step.zeta;
            pt.alpha += ad * step.alpha;
        }
        throw NumericalError("solve_lp_relaxation: interior point did not converge\n" + trace.str());
    }

private:
    struct Residuals {
        Eigen::MatrixXd dual_x;
        Eigen::VectorXd dual_y;
        Eigen::VectorXd primal;

        double dual_norm() const
        {
            return std::max(dual_x.cwiseAbs().maxCoeff(), dual_y.cwiseAbs().maxCoeff());
        }
    };

    Residuals residuals(const IpmPoint& pt) const
    {
        Residuals r;
        r.dual_x = (cost_ - pt.gamma + pt.beta).colwise() - pt.alpha;
        r.dual_y = inst_.unary - pt.eta - pt.beta.colwise().sum().transpose() + pt.zeta;
        r.primal = Eigen::VectorXd::Ones(n_) - pt.x.rowwise().sum();
        return r;
    }

    IpmDirection direction(const IpmPoint& pt, const Residuals& r, const Targets& t) const
    {
        const Eigen::MatrixXd s = pt.slack();
        const Eigen::VectorXd q = pt.q();
        const Eigen::ArrayXXd b = pt.beta.array() / s.array();
        const Eigen::ArrayXXd a = pt.gamma.array() / pt.x.array() + b;
        const Eigen::ArrayXXd f = -r.dual_x.array() + (t.gamma.array() / pt.x.array() - pt.gamma.array()) -
                                  (t.beta.array() / s.array() - pt.beta.array());
        Eigen::VectorXd g = -r.dual_y + (t.eta.array() / pt.y.array() - pt.eta.array()).matrix() +
                            (t.beta.array() / s.array() - pt.beta.array()).colwise().sum().transpose().matrix() -
                            (t.zeta.array() / q.array() - pt.zeta.array()).matrix();
        const Eigen::MatrixXd m = (b / a).matrix();
        const Eigen::VectorXd d = (pt.eta.array() / pt.y.array() + pt.zeta.array() / q.array()).matrix() +
                                  (b - b * b / a).colwise().sum().transpose().matrix();
        g += (m.array() * f).colwise().sum().transpose().matrix();
        const Eigen::VectorXd e = a.inverse().rowwise().sum().matrix();
        const Eigen::MatrixXd scaled = m * d.cwiseInverse().asDiagonal();
        Eigen::MatrixXd k = scaled * m.transpose();
        k.diagonal() += e;
        const Eigen::VectorXd rhs = r.primal - (f / a).rowwise().sum().matrix() - scaled * g;

        IpmDirection dir;
        dir.alpha = k.llt().solve(rhs);
        dir.y = (g + m.transpose() * dir.alpha).cwiseQuotient(d);
        dir.x = ((f + b.rowwise() * dir.y.transpose().array()).colwise() + dir.alpha.array()) / a;
        const Eigen::ArrayXXd ds = (-dir.x).rowwise() + dir.y.transpose();
        dir.gamma = ((t.gamma.array() - pt.x.array() * pt.gamma.array() - pt.gamma.array() * dir.x.array()) /
                     pt.x.array()).matrix();
        dir.beta = ((t.beta.array() - s.array() * pt.beta.array() - pt.beta.array() * ds) / s.array()).matrix();
        dir.eta = ((t.eta.array() - pt.y.array() * pt.eta.array() - pt.eta.array() * dir.y.array()) /
                   pt.y.array()).matrix();
        dir.zeta = ((t.zeta.array() - q.array() * pt.zeta.array() + pt.zeta.array() * dir.y.array()) /
                    q.array()).matrix();
        return dir;
    }

    static double max_step(const Eigen::ArrayXXd& value, const Eigen::ArrayXXd& delta)
    {
        double step = 1.0;
        for (Eigen::Index i = 0; i < value.size(); ++i) {
            if (delta(i) < 0.0) {
                step = std::min(step, -value(i) / delta(i));
            }
        }
        return step;
    }

    static double primal_step_length(const IpmPoint& pt, const IpmDirection& dir, double fraction)
    {
        const Eigen::ArrayXXd ds = (-dir.x).rowwise() + dir.y.transpose();
        double step = std::min({max_step(pt.x.array(), dir.x.array()), max_step(pt.slack().array(), ds),
                                max_step(pt.y.array(), dir.y.array()), max_step(pt.q().array(), -dir.y.array())});
        return std::min(1.0, fraction * step);
    }

    static double dual_step_length(const IpmPoint& pt, const IpmDirection& dir, double fraction)
    {
        double step = std::min({max_step(pt.gamma.array(), dir.gamma.array()),
                                max_step(pt.beta.array(), dir.beta.array()),
                                max_step(pt.eta.array(), dir.eta.array()),
                                max_step(pt.zeta.array(), dir.zeta.array())});
        return std::min(1.0, fraction * step);
    }

    const FacilityInstance& inst_;
    Eigen::Index n_;
    Eigen::MatrixXd cost_;
};

} // namespace

FractionalSolution solve_lp_relaxation(const FacilityInstance& inst)
{
    inst.validate();
    if (inst.size() == 1) {
        FractionalSolution out;
        out.x = Eigen::MatrixXd::Ones(1, 1);
        out.y = Eigen::VectorXd::Ones(1);
        out.objective = inst.unary(0);
        out.dual_objective = out.objective;
        return out;
    }
    return FacilityIpm(inst).run();
}

SelectionResult threshold_and_repair(const FractionalSolution& fractional, const FacilityInstance& inst,
                                     double tau)
{
    inst.validate();
    detail::require(tau > 0.0 && tau < 1.0, "threshold_and_repair: tau must lie in (0, 1)");
    const int n = inst.size();
    detail::require(fractional.y.size() == n, "threshold_and_repair: size mismatch");
    SelectionResult result;
    result.fractional = fractional;
    result.selected.assign(static_cast<std::size_t>(n), false);
    bool any = false;
    for (int v = 0; v < n; ++v) {
        // values from the interior point method are accurate to ~1e-9
        if (fractional.y(v) >= tau - 1e-9) {
            result.selected[static_cast<std::size_t>(v)] = true;
            any = true;
        }
    }
    if (!any) {
        int best = 0;
        double best_objective = std::numeric_limits<double>::infinity();
        for (int v = 0; v < n; ++v) {
            std::vector<bool> candidate(static_cast<std::size_t>(n), false);
            candidate[static_cast<std::size_t>(v)] = true;
            const double objective = selection_objective(inst, candidate);
            if (objective < best_objective) {
                best_objective = objective;
                best = v;
            }
        }
        result.selected[static_cast<std::size_t>(best)] = true;
        log().info("threshold_and_repair: no facility above tau = {}, opened landmark {}", tau, best);
    }
    result.assignment.assign(static_cast<std::size_t>(n), -1);
    for (int u = 0; u < n; ++u) {
        double nearest = std::numeric_limits<double>::infinity();
        for (int v = 0; v < n; ++v) {
            if (result.selected[static_cast<std::size_t>(v)] && inst.lambda * inst.pairwise(u, v) < nearest) {
                nearest = inst.lambda * inst.pairwise(u, v);
                result.assignment[static_cast<std::size_t>(u)] = v;
            }
        }
    }
    result.objective = selection_objective(inst, result.selected);
    return result;
}

SelectionResult select_landmarks(const FacilityInstance& inst, double tau)
{
    return threshold_and_repair(solve_lp_relaxation(inst), inst, tau);
}

double compute_ap(std::span<const ImageDetections> images, double radius)
{
    detail::require(radius > 0.0, "compute_ap: radius must be positive");
    struct Ranked {
        double score;
        std::size_t image;
        std::size_t index;
    };
    std::vector<Ranked> ranked;
    std::size_t truths = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        truths += images[i].truths.size();
        for (std::size_t d = 0; d < images[i].detections.size(); ++d) {
            ranked.push_back({images[i].detections[d].score, i, d});
        }
    }
    if (truths == 0) {
        throw ContractError("compute_ap: AP is undefined without ground truth");
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

    std::vector<std::vector<bool>> matched(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        matched[i].assign(images[i].truths.size(), false);
    }
    std::vector<double> precision;
    std::vector<double> recall;
    int true_positives = 0;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
        const auto& image = images[ranked[r].image];
        const Eigen::Vector2d& location = image.detections[ranked[r].index].location;
        double closest = std::numeric_limits<double>::infinity();
        std::size_t hit = image.truths.size();
        for (std::size_t t = 0; t < image.truths.size(); ++t) {
            const double distance = (image.truths[t] - location).norm();
            if (!matched[ranked[r].image][t] && distance <= radius && distance < closest) {
                closest = distance;
                hit = t;
            }
        }
        if (hit < image.truths.size()) {
            matched[ranked[r].image][hit] = true;
            ++true_positives;
        }
        precision.push_back(static_cast<double>(true_positives) / static_cast<double>(r + 1));
        recall.push_back(static_cast<double>(true_positives) / static_cast<double>(truths));
    }
    // all-points interpolation: precision envelope from the right
    for (std::size_t r = precision.size(); r-- > 1;) {
        precision[r - 1] = std::max(precision[r - 1], precision[r]);
    }
    double ap = 0.0;
    double previous_recall = 0.0;
    for (std::size_t r = 0; r < precision.size(); ++r) {
        ap += (recall[r] - previous_recall) * precision[r];
        previous_recall = recall[r];
    }
    return ap;
}

} // namespace partfit
