/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: bench.hpp
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
#include "partfit/parts.hpp"
#include "partfit/random.hpp"
#include "partfit/solver.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace partfit {

enum class OcclusionMode { none, hemisphere, table };

std::string to_string(OcclusionMode mode);
OcclusionMode occlusion_from_string(const std::string& name);

/// Landmark visibility for one azimuth, used by table-driven visibility.
struct AzimuthVisibility {
    double azimuth_deg = 0.0;
    std::vector<bool> visible;
};

/// Visibility masks indexed by azimuth; lookups use the circularly nearest entry.
class VisibilityTable {
public:
    VisibilityTable() = default;
    explicit VisibilityTable(std::vector<AzimuthVisibility> entries);

    bool empty() const { return entries_.empty(); }
    const std::vector<AzimuthVisibility>& entries() const { return entries_; }
    const std::vector<bool>& lookup(double azimuth_deg) const;

private:
    std::vector<AzimuthVisibility> entries_;
};

/// Parameters of a synthetic benchmark.
struct SyntheticSpec {
    int p = 52;              ///< landmarks
    int k = 10;              ///< basis shapes, mean included
    int instances = 100;
    int training_shapes = 80;
    double azimuth_min = 0.0;
    double azimuth_max = 360.0;
    double elevation_min = 0.0;
    double elevation_max = 30.0;
    double noise_sigma = 0.0;     ///< pixels
    int distractors = 9;          ///< per landmark
    double score_gap = 1.0;
    double score_noise = 0.1;
    double covariance_floor = 1.0; ///< D_j = max(sigma, floor)^2 I
    double shape_variation = 0.08; ///< relative spread of shape coefficients
    double scale_min = 0.05;       ///< pixels per model unit (millimetre)
    double scale_max = 0.08;
    double image_width = 640.0;
    double image_height = 480.0;
    OcclusionMode occlusion = OcclusionMode::none;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Ground truth and hypotheses of one synthetic instance.
struct SyntheticInstance {
    int id = 0;
    HypothesisSet hypotheses;
    PoseShapeResult truth;
    Eigen::Matrix2Xd projection; ///< true 2D landmark positions
};

/**
 * Car-like training shapes: landmarks on a deformed ellipsoid (millimetres, +x along the length, +y up), centred at the origin.
 */
std::vector<Eigen::Matrix3Xd> generate_training_shapes(int p, int count, std::uint64_t seed);

struct BasisLearning {
    ShapeBasis basis;
    int requested = 0; ///< principal directions asked for
    int learned = 0;   ///< principal directions kept (rank-limited)
};

/**
 * Generalized Procrustes alignment: centres every shape, then alternates
 * similarity alignment (rotation and scale) to the reference with
 * re-estimation of the reference, whose size is held at the mean centroid
 * size of the input.
 */
std::vector<Eigen::Matrix3Xd> procrustes_align(const std::vector<Eigen::Matrix3Xd>& shapes, int max_rounds = 100);

/**
 * PCA shape space over Procrustes-aligned training shapes. The mean shape
 * is their average and becomes basis 1; the top `directions` principal directions
 * follow, each rescaled to the Frobenius norm of the mean shape so that all
 * basis shapes share one scale. Directions beyond the numerical rank are
 * dropped with a warning.
 */
BasisLearning learn_basis(const std::vector<Eigen::Matrix3Xd>& shapes, int directions);

/// Least-squares reconstruction error (Frobenius) of a centred shape in the span of a basis.
double reconstruction_error(const ShapeBasis& basis, const Eigen::Matrix3Xd& shape);

/// Masks for every `step_deg` of azimuth at the given elevation, using the
/// self-occlusion rule of generate_instance.
VisibilityTable hemisphere_table(const ShapeBasis& basis, double step_deg, double elevation_deg);

/// Landmarks whose outward surface normal (8-neighbour plane fit) faces the viewer.
std::vector<bool> hemisphere_visibility(const Eigen::Matrix3Xd& canonical_shape,
                                        const Eigen::Matrix3d& rotation);

/**
 * Draws pose, translation and coefficients, projects with the weak-perspective
 * model, perturbs true hypotheses by Gaussian noise and adds distractors whose
 * scores trail the true one by at least the score gap. Occluded landmarks get
 * distractors only.
 */
SyntheticInstance generate_instance(const SyntheticSpec& spec, const ShapeBasis& basis, int id,
                                    const VisibilityTable& table = {});

/// 2D landmark positions implied by a pose/shape result.
Eigen::Matrix2Xd projection_of(const PoseShapeResult& result);

/// Mean Euclidean distance over masked landmarks (all when mask is empty).
double mean_apd(const Eigen::Matrix2Xd& estimated, const Eigen::Matrix2Xd& truth,
                const std::vector<bool>& mask = {});

struct ViewpointMetrics {
    double accuracy = 0.0;          ///< fraction with matching azimuth bin
    double mean_azimuth_error = 0.0; ///< degrees
};

/// Smallest absolute difference between two angles in degrees, in [0, 180].
double circular_difference_deg(double a, double b);

/// Index of the azimuth bin; bins are centred on multiples of bin_deg.
int azimuth_bin(double azimuth_deg, double bin_deg);

ViewpointMetrics viewpoint_metrics(const std::vector<Eigen::Matrix3d>& estimated,
                                   const std::vector<Eigen::Matrix3d>& truth, double bin_deg);

/// Parameters of a synthetic part-appearance corpus.
struct PartCorpusSpec {
    int landmarks = 4;
    int images = 30;
    int width = 224;
    int height = 176;
    int variants = 3;          ///< appearance modes per landmark
    double noise = 0.03;       ///< pixel noise std
    double occlusion_rate = 0.0;
    /// Annotations are placed at truth - offset.
    Eigen::Vector2d annotation_offset = Eigen::Vector2d::Zero();
    std::uint64_t seed = 1;
};

struct PartCorpus {
    TrainingCorpus corpus;
    std::vector<Eigen::Matrix2Xd> truth; ///< integer landmark centres per image
};

/**
 * Textured background with an object box; each landmark is a stamp of
 * oriented bars (one of `variants` appearance modes) drawn at a jittered
 * position on an ellipse inside the box.
 */
PartCorpus generate_part_corpus(const PartCorpusSpec& spec);

} // namespace partfit
