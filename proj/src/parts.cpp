/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: parts.cpp
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

#include "partfit/parts.hpp"

#include "partfit/errors.hpp"
#include "partfit/log.hpp"
#include "partfit/parallel.hpp"
#include "partfit/random.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

namespace partfit {

void HogConfig::validate() const
{
    if (patch_size <= 0 || cells <= 0 || bins <= 0) {
        throw ConfigError("HogConfig: patch size, cells and bins must be positive");
    }
    if (patch_size % cells != 0) {
        throw ConfigError("HogConfig: patch size " + std::to_string(patch_size) + " is not divisible by " +
                          std::to_string(cells) + " cells");
    }
}

namespace {

OrientationVote orientation_vote(double gx, double gy, int bins)
{
    OrientationVote vote;
    const double magnitude = std::hypot(gx, gy);
    if (magnitude == 0.0) {
        return vote;
    }
    double angle = std::atan2(gy, gx);
    if (angle < 0.0) {
        angle += std::numbers::pi;
    }
    if (angle >= std::numbers::pi) {
        angle -= std::numbers::pi;
    }
    const double position = angle / (std::numbers::pi / bins);
    const double floor = std::floor(position);
    const double fraction = position - floor;
    vote.lower = static_cast<int>(floor) % bins;
    vote.upper = (vote.lower + 1) % bins;
    vote.lower_weight = magnitude * (1.0 - fraction);
    vote.upper_weight = magnitude * fraction;
    return vote;
}

OrientationVote pixel_vote(const GrayImage& image, int x, int y, int bins)
{
    const double gx = image.at_clamped(x + 1, y) - image.at_clamped(x - 1, y);
    const double gy = image.at_clamped(x, y + 1) - image.at_clamped(x, y - 1);
    return orientation_vote(gx, gy, bins);
}

Eigen::Vector2i patch_origin(const Eigen::Vector2d& center, const HogConfig& config)
{
    return {static_cast<int>(std::lround(center.x())) - config.patch_size / 2,
            static_cast<int>(std::lround(center.y())) - config.patch_size / 2};
}

// Spatial vote of one patch row or column: two neighbouring cells, bilinear weights.
struct CellVote {
    int first = 0;
    double first_weight = 0.0;
    double second_weight = 0.0;
};

std::vector<CellVote> cell_votes(const HogConfig& config)
{
    std::vector<CellVote> votes(static_cast<std::size_t>(config.patch_size));
    for (int i = 0; i < config.patch_size; ++i) {
        const double u = (i + 0.5) / config.cell_size() - 0.5;
        const double floor = std::floor(u);
        votes[static_cast<std::size_t>(i)] = {static_cast<int>(floor), 1.0 - (u - floor), u - floor};
    }
    return votes;
}

template <typename VoteAt>
Eigen::VectorXd accumulate_patch(const Eigen::Vector2i& origin, const HogConfig& config, VoteAt&& vote_at)
{
    const std::vector<CellVote> spatial = cell_votes(config);
    Eigen::VectorXd h = Eigen::VectorXd::Zero(config.dimension());
    auto add = [&](int cy, int cx, double weight, const OrientationVote& vote) {
        if (cy < 0 || cx < 0 || cy >= config.cells || cx >= config.cells || weight == 0.0) {
            return;
        }
        const int base = (cy * config.cells + cx) * config.bins;
        h(base + vote.lower) += weight * vote.lower_weight;
        h(base + vote.upper) += weight * vote.upper_weight;
    };
    for (int py = 0; py < config.patch_size; ++py) {
        const CellVote& vy = spatial[static_cast<std::size_t>(py)];
        for (int px = 0; px < config.patch_size; ++px) {
            const CellVote& vx = spatial[static_cast<std::size_t>(px)];
            const OrientationVote vote = vote_at(origin.x() + px, origin.y() + py);
            add(vy.first, vx.first, vy.first_weight * vx.first_weight, vote);
            add(vy.first, vx.first + 1, vy.first_weight * vx.second_weight, vote);
            add(vy.first + 1, vx.first, vy.second_weight * vx.first_weight, vote);
            add(vy.first + 1, vx.first + 1, vy.second_weight * vx.second_weight, vote);
        }
    }
    h /= h.norm() + 1e-6;
    return h;
}

} // namespace

PatchFeature extract_feature(const GrayImage& image, const Eigen::Vector2d& center, const HogConfig& config)
{
    config.validate();
    detail::require(image.width() > 0 && image.height() > 0, "extract_feature: empty image");
    PatchFeature out;
    out.source.center = center;
    out.vector = accumulate_patch(patch_origin(center, config), config,
                                  [&](int x, int y) { return pixel_vote(image, x, y, config.bins); });
    return out;
}

Eigen::VectorXd mirror_feature(const Eigen::VectorXd& feature, const HogConfig& config)
{
    detail::require(feature.size() == config.dimension(), "mirror_feature: dimension mismatch");
    Eigen::VectorXd mirrored(feature.size());
    for (int cy = 0; cy < config.cells; ++cy) {
        for (int cx = 0; cx < config.cells; ++cx) {
            const int from = (cy * config.cells + cx) * config.bins;
            const int to = (cy * config.cells + (config.cells - 1 - cx)) * config.bins;
            for (int b = 0; b < config.bins; ++b) {
                mirrored(to + (config.bins - b) % config.bins) = feature(from + b);
            }
        }
    }
    return mirrored;
}

HogGrid::HogGrid(GrayImage image, const HogConfig& config) : image_(std::move(image)), config_(config)
{
    config_.validate();
    votes_.resize(static_cast<std::size_t>(image_.width()) * static_cast<std::size_t>(image_.height()));
    for (int y = 0; y < image_.height(); ++y) {
        for (int x = 0; x < image_.width(); ++x) {
            votes_[static_cast<std::size_t>(y) * static_cast<std::size_t>(image_.width()) + static_cast<std::size_t>(x)] =
                pixel_vote(image_, x, y, config_.bins);
        }
    }
}

bool HogGrid::inside(const Eigen::Vector2d& center) const
{
    const Eigen::Vector2i origin = patch_origin(center, config_);
    return origin.x() >= 0 && origin.y() >= 0 && origin.x() + config_.patch_size <= image_.width() &&
           origin.y() + config_.patch_size <= image_.height();
}

Eigen::VectorXd HogGrid::feature(const Eigen::Vector2d& center) const
{
    const int w = image_.width();
    const int h = image_.height();
    return accumulate_patch(patch_origin(center, config_), config_, [&](int x, int y) {
        if (x < 0 || y < 0 || x >= w || y >= h) {
            return pixel_vote(image_, x, y, config_.bins);
        }
        return votes_[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)];
    });
}

Eigen::MatrixXd HogGrid::dense_features(int stride, std::vector<Eigen::Vector2d>& centers) const
{
    detail::require(stride >= 1, "dense_features: stride must be positive");
    const int w = image_.width();
    const int h = image_.height();
    const int n = config_.patch_size;
    const int c = config_.cells;
    const int bins = config_.bins;
    centers.clear();
    if (w < n || h < n) {
        return Eigen::MatrixXd(config_.dimension(), 0);
    }
    const int nx = (w - n) / stride + 1;
    const int ny = (h - n) / stride + 1;

    // per-cell 1D weights over patch pixels and their support
    const std::vector<CellVote> spatial = cell_votes(config_);
    Eigen::MatrixXd kernel = Eigen::MatrixXd::Zero(c, n);
    for (int p = 0; p < n; ++p) {
        const CellVote& v = spatial[static_cast<std::size_t>(p)];
        if (v.first >= 0) {
            kernel(v.first, p) += v.first_weight;
        }
        if (v.first + 1 < c) {
            kernel(v.first + 1, p) += v.second_weight;
        }
    }
    std::vector<std::pair<int, int>> support(static_cast<std::size_t>(c), {n, 0});
    for (int i = 0; i < c; ++i) {
        for (int p = 0; p < n; ++p) {
            if (kernel(i, p) != 0.0) {
                support[static_cast<std::size_t>(i)].first = std::min(support[static_cast<std::size_t>(i)].first, p);
                support[static_cast<std::size_t>(i)].second = p + 1;
            }
        }
    }

    Eigen::MatrixXd features = Eigen::MatrixXd::Zero(config_.dimension(), static_cast<Eigen::Index>(nx) * ny);
    Eigen::MatrixXd magnitude(h, w);
    Eigen::MatrixXd rows(h, static_cast<Eigen::Index>(nx) * c);
    for (int b = 0; b < bins; ++b) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const OrientationVote& v = votes_[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) +
                                                  static_cast<std::size_t>(x)];
                magnitude(y, x) = (v.lower == b ? v.lower_weight : 0.0) + (v.upper == b ? v.upper_weight : 0.0);
            }
        }
        // horizontal pass: rows(y, ix * c + i) = sum_p kernel(i, p) magnitude(y, ix * stride + p)
        for (int y = 0; y < h; ++y) {
            for (int ix = 0; ix < nx; ++ix) {
                for (int i = 0; i < c; ++i) {
                    double sum = 0.0;
                    for (int p = support[static_cast<std::size_t>(i)].first; p < support[static_cast<std::size_t>(i)].second;
                         ++p) {
                        sum += kernel(i, p) * magnitude(y, ix * stride + p);
                    }
                    rows(y, ix * c + i) = sum;
                }
            }
        }
        // vertical pass into the (cy, cx, b) entries
        for (int iy = 0; iy < ny; ++iy) {
            for (int j = 0; j < c; ++j) {
                for (int ix = 0; ix < nx; ++ix) {
                    const Eigen::Index column = static_cast<Eigen::Index>(iy) * nx + ix;
                    for (int i = 0; i < c; ++i) {
                        double sum = 0.0;
                        for (int q = support[static_cast<std::size_t>(j)].first;
                             q < support[static_cast<std::size_t>(j)].second; ++q) {
                            sum += kernel(j, q) * rows(iy * stride + q, ix * c + i);
                        }
                        features((j * c + i) * bins + b, column) = sum;
                    }
                }
            }
        }
    }
    for (Eigen::Index k = 0; k < features.cols(); ++k) {
        features.col(k) /= features.col(k).norm() + 1e-6;
    }
    centers.reserve(static_cast<std::size_t>(features.cols()));
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            centers.emplace_back(ix * stride + n / 2, iy * stride + n / 2);
        }
    }
    return features;
}

Eigen::VectorXd WhiteningModel::whiten(const Eigen::VectorXd& feature) const
{
    return inv_sqrt * (feature - bg_mean);
}

Eigen::VectorXd WhiteningModel::solve(const Eigen::VectorXd& v) const
{
    return inv_sqrt * (inv_sqrt * v);
}

WhiteningModel fit_whitening(std::span<const Eigen::VectorXd> positives, std::span<const Eigen::VectorXd> negatives,
                             std::optional<double> epsilon)
{
    detail::require(!positives.empty() && !negatives.empty(), "fit_whitening: empty inputs");
    detail::require(positives.size() + negatives.size() >= 2, "fit_whitening: need at least two features");
    const auto d = negatives.front().size();
    const auto count = static_cast<Eigen::Index>(positives.size() + negatives.size());
    Eigen::MatrixXd pooled(d, count);
    Eigen::Index column = 0;
    for (auto group : {positives, negatives}) {
        for (const auto& f : group) {
            detail::require(f.size() == d, "fit_whitening: feature dimensions differ");
            pooled.col(column++) = f;
        }
    }
    WhiteningModel model;
    model.bg_mean = pooled.rightCols(static_cast<Eigen::Index>(negatives.size())).rowwise().mean();
    const Eigen::VectorXd mean = pooled.rowwise().mean();
    const Eigen::MatrixXd centered = pooled.colwise() - mean;
    model.covariance = centered * centered.transpose() / static_cast<double>(count - 1);
    model.epsilon = epsilon.value_or(std::max(1e-2 * model.covariance.trace() / static_cast<double>(d), 1e-6));
    detail::require(model.epsilon > 0.0, "fit_whitening: epsilon must be positive");
    model.covariance.diagonal().array() += model.epsilon;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.covariance);
    model.inv_sqrt =
        eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    return model;
}

namespace {

struct LloydRun {
    std::vector<int> assignments;
    Eigen::MatrixXd centers;
    double inertia = 0.0;
    std::vector<double> trace;
};

LloydRun lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centers, int max_iters)
{
    const auto n = points.cols();
    const auto m = centers.cols();
    LloydRun run;
    run.assignments.assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index nearest = 0;
            const double distance = (centers.colwise() - points.col(i)).colwise().squaredNorm().minCoeff(&nearest);
            inertia += distance;
            if (run.assignments[static_cast<std::size_t>(i)] != static_cast<int>(nearest)) {
                run.assignments[static_cast<std::size_t>(i)] = static_cast<int>(nearest);
                changed = true;
            }
        }
        run.trace.push_back(inertia);
        run.inertia = inertia;
        if (!changed) {
            break;
        }
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), m);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(m);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.col(run.assignments[static_cast<std::size_t>(i)]) += points.col(i);
            counts(run.assignments[static_cast<std::size_t>(i)]) += 1.0;
        }
        for (Eigen::Index c = 0; c < m; ++c) {
            if (counts(c) > 0.0) {
                centers.col(c) = sums.col(c) / counts(c);
            }
        }
    }
    run.centers = std::move(centers);
    return run;
}

Eigen::MatrixXd kmeans_plus_plus(const Eigen::MatrixXd& points, int clusters, std::mt19937_64& rng)
{
    const auto n = points.cols();
    Eigen::MatrixXd centers(points.rows(), clusters);
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.col(0) = points.col(first(rng));
    Eigen::VectorXd nearest = (points.colwise() - centers.col(0)).colwise().squaredNorm().transpose();
    for (int c = 1; c < clusters; ++c) {
        const double total = nearest.sum();
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double target = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (pick = 0; pick < n - 1; ++pick) {
                target -= nearest(pick);
                if (target < 0.0) {
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        centers.col(c) = points.col(pick);
        nearest = nearest.cwiseMin((points.colwise() - centers.col(c)).colwise().squaredNorm().transpose());
    }
    return centers;
}

} // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int clusters, std::uint64_t seed, int max_iters, int restarts)
{
    detail::require(points.cols() >= 1, "kmeans: no points");
    detail::require(clusters >= 1 && clusters <= points.cols(), "kmeans: cluster count must lie in [1, n]");
    detail::require(max_iters >= 1 && restarts >= 1, "kmeans: iterations and restarts must be positive");
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(r));
        LloydRun run = lloyd(points, kmeans_plus_plus(points, clusters, rng), max_iters);
        if (run.inertia < best.inertia) {
            best.assignments = std::move(run.assignments);
            best.centers = std::move(run.centers);
            best.inertia = run.inertia;
            best.trace = std::move(run.trace);
        }
    }
    return best;
}

KMeansResult cluster_who(const WhiteningModel& model, std::span<const Eigen::VectorXd> positives, int m,
                         std::uint64_t seed)
{
    detail::require(!positives.empty(), "cluster_who: no positives");
    detail::require(m >= 1, "cluster_who: m must be positive");
    int clusters = m;
    if (static_cast<int>(positives.size()) < m) {
        clusters = static_cast<int>(positives.size());
        log().warn("cluster_who: {} patches for {} components, using {}", positives.size(), m, clusters);
    }
    Eigen::MatrixXd whitened(model.bg_mean.size(), static_cast<Eigen::Index>(positives.size()));
    for (std::size_t i = 0; i < positives.size(); ++i) {
        whitened.col(static_cast<Eigen::Index>(i)) = model.whiten(positives[i]);
    }
    return kmeans(whitened, clusters, seed);
}

Eigen::VectorXd lda_filter(const WhiteningModel& model, std::span<const Eigen::VectorXd> positives)
{
    detail::require(!positives.empty(), "lda_filter: empty cluster");
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.bg_mean.size());
    for (const auto& f : positives) {
        mean += f;
    }
    mean /= static_cast<double>(positives.size());
    return model.solve(mean - model.bg_mean);
}

namespace {

double component_score(const PartModel& part, std::size_t c, const Eigen::VectorXd& feature)
{
    const double bias = c < part.biases.size() ? part.biases[c] : 0.0;
    return part.filters[c].dot(feature) + bias;
}

} // namespace

int best_component(const PartModel& part, const Eigen::VectorXd& feature)
{
    detail::require(!part.filters.empty(), "score_response: part has no filters");
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < part.filters.size(); ++c) {
        detail::require(part.filters[c].size() == feature.size(), "score_response: dimension mismatch");
        const double score = component_score(part, c, feature);
        if (score > best_score) {
            best_score = score;
            best = static_cast<int>(c);
        }
    }
    return best;
}

double score_response(const PartModel& part, const Eigen::VectorXd& feature)
{
    return component_score(part, static_cast<std::size_t>(best_component(part, feature)), feature);
}

Eigen::VectorXd sample_feature(const PartSample& sample, const Eigen::Vector2i& offset, std::span<const HogGrid> grids)
{
    detail::require(sample.image >= 0 && static_cast<std::size_t>(sample.image) < grids.size(),
                    "sample_feature: image index out of range");
    const HogGrid& grid = grids[static_cast<std::size_t>(sample.image)];
    if (!sample.mirrored) {
        return grid.feature(sample.location + offset.cast<double>());
    }
    const Eigen::Vector2d shifted = sample.location + Eigen::Vector2d(-offset.x(), offset.y());
    return mirror_feature(grid.feature(shifted), grid.config());
}

LatentResult latent_update(const PartModel& part, const WhiteningModel& model, std::span<const PartSample> samples,
                           std::span<const HogGrid> grids, const LatentConfig& config)
{
    detail::require(config.radius >= 0.0, "latent_update: radius must be non-negative");
    LatentResult result{part, {}};
    if (config.radius < 1.0) {
        return result;
    }
    detail::require(part.components.size() == samples.size(), "latent_update: one component per sample expected");
    std::vector<Eigen::Vector2i> candidates;
    const int reach = static_cast<int>(std::floor(config.radius));
    for (int dy = -reach; dy <= reach; ++dy) {
        for (int dx = -reach; dx <= reach; ++dx) {
            if (dx * dx + dy * dy <= config.radius * config.radius) {
                candidates.emplace_back(dx, dy);
            }
        }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Eigen::Vector2i& a, const Eigen::Vector2i& b) {
        return a.squaredNorm() < b.squaredNorm();
    });

    PartModel& current = result.part;
    current.offsets.assign(samples.size(), Eigen::Vector2i::Zero());
    std::vector<Eigen::VectorXd> features(samples.size());
    for (int round = 0; round < config.rounds; ++round) {
        double total = 0.0;
        for (std::size_t i = 0; i < samples.size(); ++i) {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& offset : candidates) {
                Eigen::VectorXd f = sample_feature(samples[i], offset, grids);
                const double score = score_response(current, f);
                if (score > best) {
                    best = score;
                    current.offsets[i] = offset;
                    features[i] = std::move(f);
                }
            }
            current.components[i] = best_component(current, features[i]);
            total += best;
        }
        result.trace.push_back(samples.empty() ? 0.0 : total / static_cast<double>(samples.size()));
        for (int c = 0; c < current.mixtures(); ++c) {
            std::vector<Eigen::VectorXd> members;
            for (std::size_t i = 0; i < samples.size(); ++i) {
                if (current.components[i] == c) {
                    members.push_back(features[i]);
                }
            }
            if (!members.empty()) {
                current.filters[static_cast<std::size_t>(c)] = lda_filter(model, members);
            }
        }
    }
    return result;
}

double svm_objective(const LinearSvm& svm, const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                     double lambda)
{
    const Eigen::ArrayXd margins = labels.array() * ((svm.weights.transpose() * features).transpose().array() + svm.bias);
    const double hinge = (1.0 - margins).max(0.0).mean();
    return 0.5 * lambda * (svm.weights.squaredNorm() + svm.bias * svm.bias) + hinge;
}

LinearSvm train_linear_svm(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels, double lambda, int epochs,
                           std::uint64_t seed)
{
    const auto n = features.cols();
    const auto d = features.rows();
    detail::require(n >= 1 && labels.size() == n, "train_linear_svm: label count mismatch");
    detail::require(lambda > 0.0 && epochs >= 1, "train_linear_svm: lambda and epochs must be positive");
    auto rng = make_rng(seed, 0x5356ull);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
    Eigen::VectorXd average = Eigen::VectorXd::Zero(d + 1);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const long long total_steps = static_cast<long long>(epochs) * n;
    const long long average_from = total_steps / 2;
    long long averaged = 0;
    const double radius = 1.0 / std::sqrt(lambda);
    long long t = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (const Eigen::Index i : order) {
            ++t;
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            const double margin = labels(i) * (w.head(d).dot(features.col(i)) + w(d));
            w *= 1.0 - eta * lambda;
            if (margin < 1.0) {
                w.head(d) += eta * labels(i) * features.col(i);
                w(d) += eta * labels(i);
            }
            const double norm = w.norm();
            if (norm > radius) {
                w *= radius / norm;
            }
            if (t > average_from) {
                ++averaged;
                average += (w - average) / static_cast<double>(averaged);
            }
        }
    }
    return {average.head(d), average(d)};
}

PartModel retrain_svm(const PartModel& part, std::span<const std::vector<Eigen::VectorXd>> positives,
                      std::span<const Eigen::VectorXd> negative_pool, const SvmConfig& config)
{
    detail::require(!negative_pool.empty(), "retrain_svm: empty negative pool");
    detail::require(positives.size() == part.filters.size(), "retrain_svm: one positive set per component expected");
    detail::require(config.hard_negative_rounds >= 0, "retrain_svm: negative round count");
    PartModel out = part;
    out.biases.resize(out.filters.size(), 0.0);
    const auto d = negative_pool.front().size();
    Eigen::MatrixXd pool(d, static_cast<Eigen::Index>(negative_pool.size()));
    for (std::size_t i = 0; i < negative_pool.size(); ++i) {
        pool.col(static_cast<Eigen::Index>(i)) = negative_pool[i];
    }
    for (std::size_t c = 0; c < positives.size(); ++c) {
        if (positives[c].empty()) {
            continue;
        }
        auto rng = make_rng(config.seed, 0x4e45ull + c);
        std::vector<Eigen::Index> order(negative_pool.size());
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::shuffle(order.begin(), order.end(), rng);
        std::set<Eigen::Index> cache(order.begin(),
                                     order.begin() + std::min<std::ptrdiff_t>(config.initial_negatives,
                                                                              static_cast<std::ptrdiff_t>(order.size())));
        LinearSvm svm;
        for (int round = 0; round <= config.hard_negative_rounds; ++round) {
            const auto pos = static_cast<Eigen::Index>(positives[c].size());
            Eigen::MatrixXd features(d, pos + static_cast<Eigen::Index>(cache.size()));
            Eigen::VectorXd labels(features.cols());
            for (Eigen::Index i = 0; i < pos; ++i) {
                features.col(i) = positives[c][static_cast<std::size_t>(i)];
                labels(i) = 1.0;
            }
            Eigen::Index column = pos;
            for (const Eigen::Index j : cache) {
                features.col(column) = pool.col(j);
                labels(column++) = -1.0;
            }
            svm = train_linear_svm(features, labels, config.lambda, config.epochs, config.seed + c);
            if (round == config.hard_negative_rounds) {
                break;
            }
            const Eigen::VectorXd scores = (svm.weights.transpose() * pool).transpose().array() + svm.bias;
            std::vector<Eigen::Index> hard;
            for (Eigen::Index j = 0; j < pool.cols(); ++j) {
                if (scores(j) > -1.0 && !cache.contains(j)) {
                    hard.push_back(j);
                }
            }
            std::stable_sort(hard.begin(), hard.end(), [&](Eigen::Index a, Eigen::Index b) { return scores(a) > scores(b); });
            if (hard.size() > static_cast<std::size_t>(config.hard_negatives_per_round)) {
                hard.resize(static_cast<std::size_t>(config.hard_negatives_per_round));
            }
            cache.insert(hard.begin(), hard.end());
        }
        out.filters[c] = svm.weights;
        out.biases[c] = svm.bias;
    }
    return out;
}

Eigen::Matrix2d estimate_covariance(std::span<const Eigen::Vector2d> offsets)
{
    if (offsets.size() < 2) {
        log().warn("estimate_covariance: {} offsets, using the 4 px^2 default", offsets.size());
        return 4.0 * Eigen::Matrix2d::Identity();
    }
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& r : offsets) {
        mean += r;
    }
    mean /= static_cast<double>(offsets.size());
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
    for (const auto& r : offsets) {
        covariance += (r - mean) * (r - mean).transpose();
    }
    covariance /= static_cast<double>(offsets.size() - 1);
    covariance(1, 0) = covariance(0, 1);
    return covariance + 0.25 * Eigen::Matrix2d::Identity();
}

std::vector<ScoredPoint> detect_part(const PartModel& part, const HogGrid& grid, const DetectionConfig& config)
{
    detail::require(config.stride >= 1 && config.max_detections >= 1, "detect_part: bad detection config");
    detail::require(part.mixtures() >= 1, "detect_part: model has no filters");
    std::vector<Eigen::Vector2d> centers;
    const Eigen::MatrixXd features = grid.dense_features(config.stride, centers);
    Eigen::MatrixXd filters(features.rows(), part.mixtures());
    Eigen::VectorXd biases(part.mixtures());
    for (int m = 0; m < part.mixtures(); ++m) {
        filters.col(m) = part.filters[static_cast<std::size_t>(m)];
        biases(m) = static_cast<std::size_t>(m) < part.biases.size() ? part.biases[static_cast<std::size_t>(m)] : 0.0;
    }
    const Eigen::MatrixXd responses = (filters.transpose() * features).colwise() + biases;
    std::vector<ScoredPoint> candidates;
    candidates.reserve(centers.size());
    for (std::size_t k = 0; k < centers.size(); ++k) {
        candidates.push_back({centers[k], responses.col(static_cast<Eigen::Index>(k)).maxCoeff()});
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const ScoredPoint& a, const ScoredPoint& b) { return a.score > b.score; });
    std::vector<ScoredPoint> kept;
    for (const auto& candidate : candidates) {
        if (static_cast<int>(kept.size()) >= config.max_detections) {
            break;
        }
        const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const ScoredPoint& k) {
            return (k.location - candidate.location).norm() < config.nms_radius;
        });
        if (!suppressed) {
            kept.push_back(candidate);
        }
    }
    return kept;
}

std::vector<Eigen::Vector2d> sample_negative_centers(int width, int height, const Eigen::Vector4d& bbox,
                                                     const HogConfig& config, int count, std::uint64_t seed)
{
    const int n = config.patch_size;
    std::vector<Eigen::Vector2d> centers;
    if (width < n || height < n || count <= 0) {
        return centers;
    }
    auto rng = make_rng(seed, 0x4e4547ull);
    std::uniform_int_distribution<int> xs(n / 2, width - n + n / 2);
    std::uniform_int_distribution<int> ys(n / 2, height - n + n / 2);
    for (int attempt = 0; attempt < 50 * count && static_cast<int>(centers.size()) < count; ++attempt) {
        const int cx = xs(rng);
        const int cy = ys(rng);
        const double x0 = cx - n / 2;
        const double y0 = cy - n / 2;
        const bool overlaps = x0 < bbox(0) + bbox(2) && x0 + n > bbox(0) && y0 < bbox(1) + bbox(3) && y0 + n > bbox(1);
        if (!overlaps) {
            centers.emplace_back(cx, cy);
        }
    }
    return centers;
}

int TrainingCorpus::landmarks() const
{
    return annotations.empty() ? 0 : static_cast<int>(annotations.front().landmarks.cols());
}

TrainingCorpus load_corpus(const std::filesystem::path& directory)
{
    const auto index = directory / "annotations.json";
    std::ifstream in(index);
    if (!in) {
        throw Error("load_corpus: missing annotations file " + index.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error("load_corpus: " + index.string() + ": " + e.what());
    }
    TrainingCorpus corpus;
    try {
        for (const auto& entry : doc.at("images")) {
            Annotation a;
            a.file = entry.at("file").get<std::string>();
            const auto& points = entry.at("landmarks");
            a.landmarks.resize(2, static_cast<Eigen::Index>(points.size()));
            for (std::size_t j = 0; j < points.size(); ++j) {
                a.landmarks(0, static_cast<Eigen::Index>(j)) = points[j].at(0).get<double>();
                a.landmarks(1, static_cast<Eigen::Index>(j)) = points[j].at(1).get<double>();
            }
            for (const auto& v : entry.at("visibility")) {
                a.visibility.push_back(v.get<int>() != 0);
            }
            const auto& box = entry.at("bbox");
            a.bbox << box.at(0).get<double>(), box.at(1).get<double>(), box.at(2).get<double>(), box.at(3).get<double>();
            if (a.visibility.size() != points.size()) {
                throw Error("load_corpus: visibility and landmark counts differ for " + a.file.string());
            }
            if (!corpus.annotations.empty() && a.landmarks.cols() != corpus.annotations.front().landmarks.cols()) {
                throw Error("load_corpus: landmark counts differ between images");
            }
            corpus.images.push_back(load_pnm(directory / a.file));
            corpus.annotations.push_back(std::move(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("load_corpus: missing annotations in " + index.string() + ": " + e.what());
    }
    return corpus;
}

void save_corpus(const TrainingCorpus& corpus, const std::filesystem::path& directory)
{
    detail::require(corpus.images.size() == corpus.annotations.size(), "save_corpus: image and annotation counts differ");
    std::filesystem::create_directories(directory);
    nlohmann::json images = nlohmann::json::array();
    for (std::size_t i = 0; i < corpus.images.size(); ++i) {
        const Annotation& a = corpus.annotations[i];
        save_pgm(corpus.images[i], directory / a.file);
        nlohmann::json points = nlohmann::json::array();
        nlohmann::json visibility = nlohmann::json::array();
        for (Eigen::Index j = 0; j < a.landmarks.cols(); ++j) {
            points.push_back({a.landmarks(0, j), a.landmarks(1, j)});
            visibility.push_back(a.visibility[static_cast<std::size_t>(j)] ? 1 : 0);
        }
        images.push_back({{"file", a.file.string()},
                          {"landmarks", points},
                          {"visibility", visibility},
                          {"bbox", {a.bbox(0), a.bbox(1), a.bbox(2), a.bbox(3)}}});
    }
    std::ofstream out(directory / "annotations.json");
    out << nlohmann::json{{"images", images}}.dump(2) << '\n';
}

double training_ap(const PartModel& part, std::span<const HogGrid> grids, const TrainingCorpus& corpus,
                   const DetectionConfig& detection, double radius)
{
    std::vector<ImageDetections> images(grids.size());
    for (std::size_t i = 0; i < grids.size(); ++i) {
        images[i].detections = detect_part(part, grids[i], detection);
        const Annotation& a = corpus.annotations[i];
        if (a.visibility[static_cast<std::size_t>(part.landmark)]) {
            images[i].truths.push_back(a.landmarks.col(part.landmark));
        }
    }
    return compute_ap(images, radius);
}

PartTrainingResult train_parts(const TrainingCorpus& corpus, const PartTrainingConfig& config)
{
    config.hog.validate();
    detail::require(!corpus.images.empty() && corpus.images.size() == corpus.annotations.size(),
                    "train_parts: corpus needs images with annotations");
    detail::require(config.mixtures >= 1, "train_parts: mixtures must be positive");
    const int p = corpus.landmarks();

    std::vector<HogGrid> grids;
    grids.reserve(corpus.images.size());
    for (const auto& image : corpus.images) {
        grids.emplace_back(image, config.hog);
    }

    std::vector<Eigen::VectorXd> negatives;
    for (std::size_t i = 0; i < grids.size(); ++i) {
        const auto centers = sample_negative_centers(grids[i].image().width(), grids[i].image().height(),
                                                     corpus.annotations[i].bbox, config.hog, config.negatives_per_image,
                                                     config.seed ^ (0x9e3779b97f4a7c15ull * (i + 1)));
        for (const auto& c : centers) {
            negatives.push_back(grids[i].feature(c));
        }
    }
    detail::require(!negatives.empty(), "train_parts: no room for negative patches outside the bounding boxes");

    std::vector<std::vector<PartSample>> samples(static_cast<std::size_t>(p));
    std::vector<Eigen::VectorXd> pooled;
    for (std::size_t i = 0; i < corpus.annotations.size(); ++i) {
        const Annotation& a = corpus.annotations[i];
        for (int j = 0; j < p; ++j) {
            if (!a.visibility[static_cast<std::size_t>(j)]) {
                continue;
            }
            for (const bool mirrored : {false, true}) {
                if (mirrored && !config.flip) {
                    continue;
                }
                const PartSample sample{static_cast<int>(i), a.landmarks.col(j), mirrored};
                samples[static_cast<std::size_t>(j)].push_back(sample);
                pooled.push_back(sample_feature(sample, Eigen::Vector2i::Zero(), grids));
            }
        }
    }
    detail::require(!pooled.empty(), "train_parts: no visible annotations");
    const WhiteningModel whitening = fit_whitening(pooled, negatives, config.epsilon);

    std::vector<std::optional<PartModel>> parts(static_cast<std::size_t>(p));
    std::vector<PartReport> reports(static_cast<std::size_t>(p));
    parallel_for(static_cast<std::size_t>(p), config.jobs, [&](std::size_t j) {
        const auto& own = samples[j];
        if (own.empty()) {
            return;
        }
        std::vector<Eigen::VectorXd> features;
        for (const auto& s : own) {
            features.push_back(sample_feature(s, Eigen::Vector2i::Zero(), grids));
        }
        const KMeansResult clusters = cluster_who(whitening, features, config.mixtures, config.seed + 1000 * (j + 1));
        PartModel part;
        part.landmark = static_cast<int>(j);
        part.components = clusters.assignments;
        part.offsets.assign(own.size(), Eigen::Vector2i::Zero());
        for (int c = 0; c < static_cast<int>(clusters.centers.cols()); ++c) {
            std::vector<Eigen::VectorXd> members;
            for (std::size_t i = 0; i < own.size(); ++i) {
                if (part.components[i] == c) {
                    members.push_back(features[i]);
                }
            }
            part.filters.push_back(lda_filter(whitening, members));
            part.biases.push_back(0.0);
        }
        const LatentResult latent = latent_update(part, whitening, own, grids, config.latent);
        PartReport report;
        report.landmark = static_cast<int>(j);
        report.positives = static_cast<int>(own.size());
        report.ap_lda = training_ap(latent.part, grids, corpus, config.detection, config.ap_radius);

        std::vector<std::vector<Eigen::VectorXd>> positives(static_cast<std::size_t>(latent.part.mixtures()));
        std::vector<Eigen::Vector2d> offsets;
        for (std::size_t i = 0; i < own.size(); ++i) {
            const Eigen::Vector2i& r = latent.part.offsets[i];
            positives[static_cast<std::size_t>(latent.part.components[i])].push_back(sample_feature(own[i], r, grids));
            offsets.emplace_back(own[i].mirrored ? -r.x() : r.x(), r.y());
        }
        SvmConfig svm = config.svm;
        svm.seed = config.svm.seed + 7919 * (j + 1);
        PartModel trained = retrain_svm(latent.part, positives, negatives, svm);
        trained.covariance = estimate_covariance(offsets);
        report.ap_svm = training_ap(trained, grids, corpus, config.detection, config.ap_radius);
        trained.training_ap = report.ap_svm;
        parts[j] = std::move(trained);
        reports[j] = report;
    });

    PartTrainingResult result;
    result.models.hog = config.hog;
    for (int j = 0; j < p; ++j) {
        if (parts[static_cast<std::size_t>(j)]) {
            result.models.parts.push_back(std::move(*parts[static_cast<std::size_t>(j)]));
            result.reports.push_back(reports[static_cast<std::size_t>(j)]);
        } else {
            log().warn("train_parts: landmark {} has no visible annotation, skipped", j);
            result.skipped.push_back(j);
        }
    }
    return result;
}

} // namespace partfit
