/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: parts.hpp
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

#include "partfit/image.hpp"
#include "partfit/selection.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace partfit {

/// Gradient-orientation histogram layout.
struct HogConfig {
    int patch_size = 32; ///< N, pixels
    int cells = 4;       ///< c x c cells
    int bins = 9;        ///< unsigned orientation bins over [0, pi)

    void validate() const;
    int cell_size() const { return patch_size / cells; }
    int dimension() const { return cells * cells * bins; }
};

struct PatchSource {
    int image = -1;
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    int landmark = -1;
};

struct PatchFeature {
    Eigen::VectorXd vector;
    PatchSource source;
};

/**
 * HOG descriptor of the N x N patch whose top-left pixel is
 * round(center) - N/2. Gradients are central differences with edge
 * replication. Each pixel votes its magnitude bilinearly into the four
 * nearest cell centres and linearly into the two nearest orientation bins
 * (bin centres at i pi / b); votes falling outside the cell grid are
 * dropped. The concatenation (cells row-major, bins innermost) is divided by
 * its L2 norm + 1e-6.
 */
PatchFeature extract_feature(const GrayImage& image, const Eigen::Vector2d& center, const HogConfig& config);

/// Feature of the horizontally mirrored patch: cell columns reversed, bin i -> (b - i) mod b.
Eigen::VectorXd mirror_feature(const Eigen::VectorXd& feature, const HogConfig& config);

/// Magnitude split between the two nearest orientation bins.
struct OrientationVote {
    int lower = 0;
    int upper = 0;
    double lower_weight = 0.0;
    double upper_weight = 0.0;
};

/// Per-image cache of pixel orientation votes for repeated feature extraction.
class HogGrid {
public:
    HogGrid(GrayImage image, const HogConfig& config);

    const GrayImage& image() const { return image_; }
    const HogConfig& config() const { return config_; }
    /// True when the patch at `center` lies inside the image.
    bool inside(const Eigen::Vector2d& center) const;
    /// Identical to extract_feature(image(), center, config()).vector.
    Eigen::VectorXd feature(const Eigen::Vector2d& center) const;
    /// Features of every inside patch whose top-left corner lies on a `stride` lattice from (0, 0), one per
    /// column; `centers` receives the matching patch centres (row-major scan).
    Eigen::MatrixXd dense_features(int stride, std::vector<Eigen::Vector2d>& centers) const;

private:
    GrayImage image_;
    HogConfig config_;
    std::vector<OrientationVote> votes_; ///< row-major, one per pixel
};

/// Shared feature statistics.
struct WhiteningModel {
    Eigen::MatrixXd covariance; ///< Sigma, regularized
    Eigen::VectorXd bg_mean;    ///< mean of the negative features
    Eigen::MatrixXd inv_sqrt;   ///< symmetric Sigma^{-1/2}
    double epsilon = 0.0;

    Eigen::VectorXd whiten(const Eigen::VectorXd& feature) const;
    /// Sigma^{-1} v.
    Eigen::VectorXd solve(const Eigen::VectorXd& v) const;
};

/// Sigma = covariance of the pooled features + epsilon I, with epsilon
/// defaulting to 1e-2 trace / d.
WhiteningModel fit_whitening(std::span<const Eigen::VectorXd> positives, std::span<const Eigen::VectorXd> negatives,
                             std::optional<double> epsilon = std::nullopt);

struct KMeansResult {
    std::vector<int> assignments;
    Eigen::MatrixXd centers; ///< d x m
    double inertia = 0.0;
    std::vector<double> trace; ///< inertia after each assignment step of the kept restart
};

/// k-means++ seeding and Lloyd iterations; the restart with lowest inertia is kept.
KMeansResult kmeans(const Eigen::MatrixXd& points, int clusters, std::uint64_t seed, int max_iters = 100,
                    int restarts = 10);

/// K-means on whitened features. Uses min(m, count) clusters.
KMeansResult cluster_who(const WhiteningModel& model, std::span<const Eigen::VectorXd> positives, int m,
                         std::uint64_t seed);

/// W = Sigma^{-1} (mean(positives) - bg_mean).
Eigen::VectorXd lda_filter(const WhiteningModel& model, std::span<const Eigen::VectorXd> positives);

/// Mixture of linear filters for one landmark.
struct PartModel {
    int landmark = 0;
    std::vector<Eigen::VectorXd> filters;
    std::vector<double> biases;
    std::vector<int> components;              ///< z of each training sample
    std::vector<Eigen::Vector2i> offsets;     ///< r of each training sample
    Eigen::Matrix2d covariance = 4.0 * Eigen::Matrix2d::Identity(); ///< D, pixels^2
    double training_ap = 0.0;

    int mixtures() const { return static_cast<int>(filters.size()); }
};

/// max_c W_c . phi + b_c.
double score_response(const PartModel& part, const Eigen::VectorXd& feature);
int best_component(const PartModel& part, const Eigen::VectorXd& feature);

/// A training patch: annotated centre in an image, optionally mirrored.
struct PartSample {
    int image = 0;
    Eigen::Vector2d location = Eigen::Vector2d::Zero();
    bool mirrored = false;
};

/// Feature of a sample displaced by `offset` (expressed in the sample's own, possibly mirrored, frame).
Eigen::VectorXd sample_feature(const PartSample& sample, const Eigen::Vector2i& offset,
                               std::span<const HogGrid> grids);

struct LatentConfig {
    double radius = 8.0; ///< pixels
    int rounds = 3;
};

struct LatentResult {
    PartModel part;
    std::vector<double> trace; ///< mean best response over samples, one entry per round
};

/**
 * Repositions every sample at the integer offset within `radius` that
 * maximizes its response (ties to the smallest offset), takes the best
 * component there and re-estimates each filter by LDA on the displaced
 * features. A radius below one pixel leaves the model untouched.
 */
LatentResult latent_update(const PartModel& part, const WhiteningModel& model, std::span<const PartSample> samples,
                           std::span<const HogGrid> grids, const LatentConfig& config);

struct LinearSvm {
    Eigen::VectorXd weights;
    double bias = 0.0;
};

/// lambda/2 (||w||^2 + b^2) + mean hinge loss; the bias is the weight of a constant unit feature.
double svm_objective(const LinearSvm& svm, const Eigen::MatrixXd& features, const Eigen::VectorXd& labels,
                     double lambda);

/// Averaged Pegasos: stochastic subgradient steps 1 / (lambda t) over seeded epoch permutations.
LinearSvm train_linear_svm(const Eigen::MatrixXd& features, const Eigen::VectorXd& labels, double lambda,
                           int epochs, std::uint64_t seed);

struct SvmConfig {
    double lambda = 1e-3;
    int epochs = 60;
    int hard_negative_rounds = 2;
    int initial_negatives = 400;
    int hard_negatives_per_round = 200;
    std::uint64_t seed = 1;
};

/**
 * Per component: SVM on the component positives against a negative cache.
 * Each hard-negative round scores the pool and adds the highest-scoring
 * negatives inside the margin that are not cached yet.
 */
PartModel retrain_svm(const PartModel& part, std::span<const std::vector<Eigen::VectorXd>> positives,
                      std::span<const Eigen::VectorXd> negative_pool, const SvmConfig& config);

/// Sample covariance + 0.25 I; 4 I when fewer than two offsets.
Eigen::Matrix2d estimate_covariance(std::span<const Eigen::Vector2d> offsets);

struct DetectionConfig {
    int stride = 2;
    double nms_radius = 8.0;
    int max_detections = 20;
};

/// Dense scan over patch centres inside the image, then greedy non-maximum suppression.
std::vector<ScoredPoint> detect_part(const PartModel& part, const HogGrid& grid, const DetectionConfig& config);

/// Uniform patch centres whose N x N box lies inside the image and misses the bounding box.
std::vector<Eigen::Vector2d> sample_negative_centers(int width, int height, const Eigen::Vector4d& bbox,
                                                     const HogConfig& config, int count, std::uint64_t seed);

struct Annotation {
    std::filesystem::path file;
    Eigen::Matrix2Xd landmarks;   ///< 2 x p
    std::vector<bool> visibility; ///< p
    Eigen::Vector4d bbox = Eigen::Vector4d::Zero(); ///< x, y, w, h
};

struct TrainingCorpus {
    std::vector<GrayImage> images;
    std::vector<Annotation> annotations;

    int landmarks() const;
};

/// Reads `annotations.json` ({"images": [{file, landmarks, visibility, bbox}]}) and the referenced images.
TrainingCorpus load_corpus(const std::filesystem::path& directory);
void save_corpus(const TrainingCorpus& corpus, const std::filesystem::path& directory);

struct PartTrainingConfig {
    HogConfig hog;
    int mixtures = 3;
    std::optional<double> epsilon;
    LatentConfig latent;
    SvmConfig svm;
    DetectionConfig detection;
    int negatives_per_image = 200;
    bool flip = true;
    double ap_radius = 20.0;
    std::uint64_t seed = 1;
    int jobs = 1;
};

struct PartReport {
    int landmark = 0;
    int positives = 0;
    double ap_lda = 0.0; ///< after latent updates, before SVM retraining
    double ap_svm = 0.0;
};

struct PartModelSet {
    HogConfig hog;
    std::vector<PartModel> parts;
};

struct PartTrainingResult {
    PartModelSet models;
    std::vector<PartReport> reports;
    std::vector<int> skipped; ///< landmarks without visible annotations
};

/// Training AP of a part over a corpus; truths are the visible annotations.
double training_ap(const PartModel& part, std::span<const HogGrid> grids, const TrainingCorpus& corpus,
                   const DetectionConfig& detection, double radius);

/// Whitening, clustering, LDA, latent updates, SVM retraining and covariance for every landmark.
PartTrainingResult train_parts(const TrainingCorpus& corpus, const PartTrainingConfig& config);

} // namespace partfit
