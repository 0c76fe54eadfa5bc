/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: bench.cpp
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

#include "partfit/bench.hpp"

#include "partfit/errors.hpp"
#include "partfit/log.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace partfit {

std::string to_string(OcclusionMode mode)
{
    switch (mode) {
    case OcclusionMode::none: return "none";
    case OcclusionMode::hemisphere: return "hemisphere";
    case OcclusionMode::table: return "table";
    }
    return "none";
}

OcclusionMode occlusion_from_string(const std::string& name)
{
    if (name == "none") return OcclusionMode::none;
    if (name == "hemisphere") return OcclusionMode::hemisphere;
    if (name == "table") return OcclusionMode::table;
    throw ConfigError("unknown occlusion mode '" + name + "'");
}

VisibilityTable::VisibilityTable(std::vector<AzimuthVisibility> entries) : entries_(std::move(entries))
{
    for (const auto& entry : entries_) {
        detail::require(entry.visible.size() == entries_.front().visible.size(),
                        "VisibilityTable: masks of different lengths");
    }
}

const std::vector<bool>& VisibilityTable::lookup(double azimuth) const
{
    detail::require(!entries_.empty(), "VisibilityTable: empty table");
    const auto nearest = std::min_element(entries_.begin(), entries_.end(), [&](const auto& a, const auto& b) {
        return circular_difference_deg(a.azimuth_deg, azimuth) <
               circular_difference_deg(b.azimuth_deg, azimuth);
    });
    return nearest->visible;
}

void SyntheticSpec::validate() const
{
    if (p < 4 || k < 1 || instances < 0 || training_shapes < 2) {
        throw ConfigError("SyntheticSpec: need p >= 4, k >= 1, training_shapes >= 2");
    }
    if (!(noise_sigma >= 0.0) || distractors < 0 || !(score_gap >= 0.0) || !(score_noise >= 0.0)) {
        throw ConfigError("SyntheticSpec: sigma, distractors, score gap and noise must be >= 0");
    }
    if (!(covariance_floor > 0.0) || !(scale_min > 0.0) || scale_max < scale_min) {
        throw ConfigError("SyntheticSpec: bad covariance floor or scale range");
    }
    if (azimuth_max < azimuth_min || elevation_max < elevation_min) {
        throw ConfigError("SyntheticSpec: empty rotation range");
    }
}

std::vector<Eigen::Matrix3Xd> generate_training_shapes(int p, int count, std::uint64_t seed)
{
    detail::require(p >= 4 && count >= 1, "generate_training_shapes: need p >= 4 and count >= 1");
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    Eigen::Matrix3Xd directions(3, p);
    for (int j = 0; j < p; ++j) {
        const double y = 1.0 - 2.0 * (j + 0.5) / p;
        const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
        const double phi = golden * j;
        directions.col(j) << r * std::cos(phi), y, r * std::sin(phi);
    }
    const Eigen::Vector3d half_extent(2200.0, 750.0, 900.0); // millimetres

    // Local dents shared by the family (arches, mirrors, bumpers); each is a
    // sum of Gaussian bumps on the unit sphere with its own displacement.
    std::vector<Eigen::Matrix3Xd> dents;
    {
        auto rng = make_rng(seed, 0xdeadull << 32);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int m = 0; m < 12; ++m) {
            Eigen::Matrix3Xd field = Eigen::Matrix3Xd::Zero(3, p);
            for (int bump = 0; bump < 4; ++bump) {
                Eigen::Vector3d centre(normal(rng), normal(rng), normal(rng));
                centre.normalize();
                const Eigen::Vector3d displacement(normal(rng), normal(rng), normal(rng));
                for (int j = 0; j < p; ++j) {
                    const double distance2 = (directions.col(j) - centre).squaredNorm();
                    field.col(j) += std::exp(-distance2 / 0.3) * displacement;
                }
            }
            dents.push_back(field);
        }
    }


    std::vector<Eigen::Matrix3Xd> shapes;
    shapes.reserve(static_cast<std::size_t>(count));
    for (int n = 0; n < count; ++n) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(n));
        std::normal_distribution<double> normal(0.0, 1.0);
        const double length = 1.0 + 0.08 * normal(rng);
        const double height = 1.0 + 0.08 * normal(rng);
        const double width = 1.0 + 0.06 * normal(rng);
        const double roof = 150.0 * normal(rng);
        const double taper = 0.10 * normal(rng);
        const double hood = 100.0 * normal(rng);
        Eigen::Matrix3Xd shape(3, p);
        for (int j = 0; j < p; ++j) {
            const Eigen::Vector3d u = directions.col(j);
            double x = half_extent.x() * length * u.x();
            double y = half_extent.y() * height * u.y();
            double z = half_extent.z() * width * u.z();
            const double along = u.x();
            if (u.y() > 0.0) {
                y += roof * u.y() * (1.0 - along * along) + hood * along * u.y();
            }
            z *= 1.0 + taper * along;
            shape.col(j) << x, y, z;
        }
        for (std::size_t m = 0; m < dents.size(); ++m) {
            shape += (120.0 * normal(rng) / (1.0 + 0.25 * static_cast<double>(m))) * dents[m];
        }
        shapes.push_back(centered(shape));
    }
    return shapes;
}

std::vector<Eigen::Matrix3Xd> procrustes_align(const std::vector<Eigen::Matrix3Xd>& shapes, int max_rounds)
{
    detail::require(!shapes.empty(), "procrustes_align: no shapes");
    std::vector<Eigen::Matrix3Xd> aligned;
    aligned.reserve(shapes.size());
    double size = 0.0;
    for (const auto& shape : shapes) {
        aligned.push_back(centered(shape));
        size += aligned.back().norm();
    }
    size /= static_cast<double>(shapes.size());
    if (shapes.size() == 1 || !(size > 0.0)) {
        return aligned;
    }
    Eigen::Matrix3Xd reference = aligned.front() * (size / aligned.front().norm());
    for (int round = 0; round < max_rounds; ++round) {
        for (std::size_t s = 0; s < shapes.size(); ++s) {
            const Eigen::Matrix3Xd source = centered(shapes[s]);
            Eigen::Matrix3Xd rotated = source;
            try {
                rotated = align_to_canonical(reference, source) * source;
            } catch (const AlignmentError&) {
            }
            const double norm2 = rotated.squaredNorm();
            aligned[s] = norm2 > 0.0 ? Eigen::Matrix3Xd(rotated.cwiseProduct(reference).sum() / norm2 * rotated) : rotated;
        }
        Eigen::Matrix3Xd mean = Eigen::Matrix3Xd::Zero(3, reference.cols());
        for (const auto& shape : aligned) {
            mean += shape;
        }
        mean *= size / mean.norm();
        const double change = (mean - reference).norm();
        reference = mean;
        if (change <= 1e-12 * size) {
            break;
        }
    }
    return aligned;
}

BasisLearning learn_basis(const std::vector<Eigen::Matrix3Xd>& shapes, int directions)
{
    detail::require(!shapes.empty(), "learn_basis: no training shapes");
    detail::require(directions >= 0, "learn_basis: negative direction count");
    const auto p = shapes.front().cols();
    const auto n = static_cast<Eigen::Index>(shapes.size());
    for (const auto& shape : shapes) {
        detail::require(shape.cols() == p, "learn_basis: shapes are not in correspondence");
    }
    const std::vector<Eigen::Matrix3Xd> aligned = procrustes_align(shapes);
    Eigen::MatrixXd data(n, 3 * p);
    for (Eigen::Index s = 0; s < n; ++s) {
        data.row(s) = Eigen::Map<const Eigen::RowVectorXd>(aligned[static_cast<std::size_t>(s)].data(), 3 * p);
    }
    const Eigen::RowVectorXd mean = data.colwise().mean();
    Eigen::Matrix3Xd mean_shape = Eigen::Map<const Eigen::Matrix3Xd>(mean.data(), 3, p);
    mean_shape = centered(mean_shape);
    const double mean_norm = mean_shape.norm();
    detail::require(mean_norm > 0.0, "learn_basis: degenerate mean shape");

    std::vector<Eigen::Matrix3Xd> bases{mean_shape};
    int learned = 0;
    if (directions > 0 && n > 1) {
        const Eigen::MatrixXd deviations = data.rowwise() - mean;
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(deviations, Eigen::ComputeThinV);
        const Eigen::VectorXd sigma = svd.singularValues();
        const double tolerance = 1e-9 * std::max(mean_norm, sigma.size() > 0 ? sigma(0) : 0.0);
        for (Eigen::Index i = 0; i < sigma.size() && learned < directions; ++i) {
            if (sigma(i) <= tolerance) {
                break;
            }
            Eigen::VectorXd direction = svd.matrixV().col(i);
            Eigen::Index largest = 0;
            direction.cwiseAbs().maxCoeff(&largest);
            if (direction(largest) < 0.0) {
                direction = -direction;
            }
            Eigen::Matrix3Xd basis = Eigen::Map<const Eigen::Matrix3Xd>(direction.data(), 3, p);
            bases.push_back(mean_norm * basis / basis.norm());
            ++learned;
        }
    }
    if (learned < directions) {
        log().warn("learn_basis: only {} of {} principal directions have nonzero variance", learned,
                   directions);
    }
    return {ShapeBasis(mean_shape, std::move(bases)), directions, learned};
}

double reconstruction_error(const ShapeBasis& basis, const Eigen::Matrix3Xd& shape)
{
    detail::require(shape.cols() == basis.landmarks(), "reconstruction_error: landmark mismatch");
    const auto p = basis.landmarks();
    Eigen::MatrixXd design(3 * p, basis.size());
    for (int i = 0; i < basis.size(); ++i) {
        design.col(i) = Eigen::Map<const Eigen::VectorXd>(basis.basis(i).data(), 3 * p);
    }
    const Eigen::Matrix3Xd target = centered(shape);
    const Eigen::Map<const Eigen::VectorXd> vec(target.data(), 3 * p);
    const Eigen::VectorXd coefficients = design.colPivHouseholderQr().solve(vec);
    return (design * coefficients - vec).norm();
}

std::vector<bool> hemisphere_visibility(const Eigen::Matrix3Xd& canonical_shape,
                                        const Eigen::Matrix3d& rotation)
{
    const Eigen::Matrix3Xd normals = estimate_normals(canonical_shape, 8);
    const Eigen::RowVectorXd facing = rotation.row(2) * normals;
    std::vector<bool> visible(static_cast<std::size_t>(canonical_shape.cols()));
    for (Eigen::Index j = 0; j < canonical_shape.cols(); ++j) {
        visible[static_cast<std::size_t>(j)] = normals.col(j).isZero(0.0) || facing(j) > 0.0;
    }
    return visible;
}

VisibilityTable hemisphere_table(const ShapeBasis& basis, double step_deg, double elevation)
{
    detail::require(step_deg > 0.0, "hemisphere_table: step must be positive");
    std::vector<AzimuthVisibility> entries;
    for (double azimuth = 0.0; azimuth < 360.0 - 1e-9; azimuth += step_deg) {
        entries.push_back(
            {azimuth, hemisphere_visibility(basis.mean_shape(), rotation_from_view(azimuth, elevation))});
    }
    return VisibilityTable(std::move(entries));
}

SyntheticInstance generate_instance(const SyntheticSpec& spec, const ShapeBasis& basis, int id,
                                    const VisibilityTable& table)
{
    spec.validate();
    detail::require(basis.landmarks() == spec.p, "generate_instance: basis has " +
                                                     std::to_string(basis.landmarks()) +
                                                     " landmarks, spec wants " + std::to_string(spec.p));
    auto rng = make_rng(spec.seed, 0x1000000ull + static_cast<std::uint64_t>(id));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    };

    const double azimuth = uniform(spec.azimuth_min, spec.azimuth_max);
    const double elevation = uniform(spec.elevation_min, spec.elevation_max);
    const Eigen::Matrix3d rotation = rotation_from_view(azimuth, elevation);
    const double scale = uniform(spec.scale_min, spec.scale_max);
    Eigen::VectorXd coefficients(basis.size());
    coefficients(0) = scale;
    for (int i = 1; i < basis.size(); ++i) {
        coefficients(i) = scale * spec.shape_variation * normal(rng) / i;
    }
    const Eigen::Matrix3Xd canonical = basis.combine(coefficients);
    Eigen::Vector2d translation(uniform(0.35, 0.65) * spec.image_width,
                                uniform(0.35, 0.65) * spec.image_height);

    SyntheticInstance instance;
    instance.id = id;
    instance.truth.rotation = rotation;
    instance.truth.translation = translation;
    instance.truth.coefficients = coefficients;
    instance.truth.shape = rotation * canonical;
    instance.projection = project_weak_perspective(basis, rotation, translation, coefficients);

    switch (spec.occlusion) {
    case OcclusionMode::none:
        instance.truth.visibility.assign(static_cast<std::size_t>(spec.p), true);
        break;
    case OcclusionMode::hemisphere:
        instance.truth.visibility = hemisphere_visibility(canonical, rotation);
        break;
    case OcclusionMode::table:
        detail::require(!table.empty(), "generate_instance: table occlusion needs a visibility table");
        instance.truth.visibility = table.lookup(azimuth);
        detail::require(static_cast<int>(instance.truth.visibility.size()) == spec.p,
                        "generate_instance: visibility table has the wrong landmark count");
        break;
    }

    const Eigen::Vector2d lower = instance.projection.rowwise().minCoeff();
    const Eigen::Vector2d upper = instance.projection.rowwise().maxCoeff();
    const Eigen::Vector2d margin = 0.2 * (upper - lower);
    const double deviation = std::max(spec.noise_sigma, spec.covariance_floor);

    std::vector<LandmarkHypotheses> entries;
    entries.reserve(static_cast<std::size_t>(spec.p));
    for (int j = 0; j < spec.p; ++j) {
        const bool visible = instance.truth.visibility[static_cast<std::size_t>(j)];
        const int distractors = visible ? spec.distractors : std::max(spec.distractors, 1);
        const int count = distractors + (visible ? 1 : 0);
        std::vector<Eigen::Vector3d> rows; // x, y, score
        const double true_score = 1.0 + spec.score_noise * normal(rng);
        if (visible) {
            const Eigen::Vector2d noise(normal(rng), normal(rng));
            const Eigen::Vector2d location = instance.projection.col(j) + spec.noise_sigma * noise;
            rows.emplace_back(location.x(), location.y(), true_score);
        }
        for (int d = 0; d < distractors; ++d) {
            const double x = uniform(lower.x() - margin.x(), upper.x() + margin.x());
            const double y = uniform(lower.y() - margin.y(), upper.y() + margin.y());
            const double score = true_score - spec.score_gap - std::abs(spec.score_noise * normal(rng));
            rows.emplace_back(x, y, score);
        }
        std::shuffle(rows.begin(), rows.end(), rng);
        LandmarkHypotheses entry;
        entry.landmark = j;
        entry.locations.resize(count, 2);
        entry.scores.resize(count);
        for (int h = 0; h < count; ++h) {
            entry.locations.row(h) = rows[static_cast<std::size_t>(h)].head<2>().transpose();
            entry.scores(h) = rows[static_cast<std::size_t>(h)].z();
        }
        entry.covariance = deviation * deviation * Eigen::Matrix2d::Identity();
        entries.push_back(std::move(entry));
    }
    instance.hypotheses = HypothesisSet(std::move(entries));
    return instance;
}

Eigen::Matrix2Xd projection_of(const PoseShapeResult& result)
{
    Eigen::Matrix2Xd projected = result.shape.topRows<2>();
    projected.colwise() += result.translation;
    return projected;
}

double mean_apd(const Eigen::Matrix2Xd& estimated, const Eigen::Matrix2Xd& truth,
                const std::vector<bool>& mask)
{
    detail::require(estimated.cols() == truth.cols(), "mean_apd: landmark counts differ");
    detail::require(mask.empty() || static_cast<Eigen::Index>(mask.size()) == truth.cols(),
                    "mean_apd: mask length mismatch");
    double total = 0.0;
    int counted = 0;
    for (Eigen::Index j = 0; j < truth.cols(); ++j) {
        if (!mask.empty() && !mask[static_cast<std::size_t>(j)]) {
            continue;
        }
        total += (estimated.col(j) - truth.col(j)).norm();
        ++counted;
    }
    detail::require(counted > 0, "mean_apd: empty mask");
    return total / counted;
}

double circular_difference_deg(double a, double b)
{
    const double difference = std::fmod(std::abs(a - b), 360.0);
    return difference > 180.0 ? 360.0 - difference : difference;
}

int azimuth_bin(double azimuth, double bin_deg)
{
    detail::require(bin_deg > 0.0, "azimuth_bin: bin width must be positive");
    const int bins = static_cast<int>(std::lround(360.0 / bin_deg));
    detail::require(std::abs(bins * bin_deg - 360.0) < 1e-9, "azimuth_bin: bin width must divide 360");
    double wrapped = std::fmod(azimuth, 360.0);
    if (wrapped < 0.0) {
        wrapped += 360.0;
    }
    const int index = static_cast<int>(std::floor((wrapped + 0.5 * bin_deg) / bin_deg));
    return index % bins;
}

ViewpointMetrics viewpoint_metrics(const std::vector<Eigen::Matrix3d>& estimated,
                                   const std::vector<Eigen::Matrix3d>& truth, double bin_deg)
{
    detail::require(estimated.size() == truth.size(), "viewpoint_metrics: size mismatch");
    ViewpointMetrics metrics;
    if (truth.empty()) {
        return metrics;
    }
    int hits = 0;
    double error = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double est = azimuth_deg(estimated[i]);
        const double ref = azimuth_deg(truth[i]);
        hits += azimuth_bin(est, bin_deg) == azimuth_bin(ref, bin_deg) ? 1 : 0;
        error += circular_difference_deg(est, ref);
    }
    metrics.accuracy = static_cast<double>(hits) / static_cast<double>(truth.size());
    metrics.mean_azimuth_error = error / static_cast<double>(truth.size());
    return metrics;
}

namespace {

struct Bar {
    Eigen::Vector2d from;
    Eigen::Vector2d to;
    double contrast = 0.0;
};

double distance_to_segment(const Eigen::Vector2d& point, const Bar& bar)
{
    const Eigen::Vector2d direction = bar.to - bar.from;
    const double t = std::clamp((point - bar.from).dot(direction) / direction.squaredNorm(), 0.0, 1.0);
    return (point - (bar.from + t * direction)).norm();
}

} // namespace

namespace {

void draw_bar(GrayImage& image, const Bar& bar)
{
    const Eigen::Vector2d mid = 0.5 * (bar.from + bar.to);
    const int x0 = std::max(0, static_cast<int>(mid.x()) - 8);
    const int x1 = std::min(image.width() - 1, static_cast<int>(mid.x()) + 8);
    const int y0 = std::max(0, static_cast<int>(mid.y()) - 8);
    const int y1 = std::min(image.height() - 1, static_cast<int>(mid.y()) + 8);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double d = distance_to_segment(Eigen::Vector2d(x, y), bar);
            image.pixels(y, x) += bar.contrast * std::exp(-d * d / (2.0 * 1.2 * 1.2));
        }
    }
}

} // namespace

PartCorpus generate_part_corpus(const PartCorpusSpec& spec)
{
    detail::require(spec.landmarks >= 1 && spec.images >= 1 && spec.variants >= 1,
                    "generate_part_corpus: counts must be positive");
    detail::require(spec.width >= 160 && spec.height >= 128, "generate_part_corpus: image too small");
    auto design = make_rng(spec.seed, 0x5354ull);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    // stamps[j][v]: bars relative to the landmark centre
    std::vector<std::vector<std::vector<Bar>>> stamps(static_cast<std::size_t>(spec.landmarks));
    for (auto& landmark : stamps) {
        for (int v = 0; v < spec.variants; ++v) {
            std::vector<Bar> bars;
            for (int b = 0; b < 8; ++b) {
                const double angle = std::numbers::pi * unit(design);
                const Eigen::Vector2d centre(16.0 * (unit(design) - 0.5), 16.0 * (unit(design) - 0.5));
                const Eigen::Vector2d half = (2.0 + 2.0 * unit(design)) * Eigen::Vector2d(std::cos(angle), std::sin(angle));
                const double contrast = (unit(design) < 0.5 ? -1.0 : 1.0) * (0.2 + 0.15 * unit(design));
                bars.push_back({centre - half, centre + half, contrast});
            }
            landmark.push_back(std::move(bars));
        }
    }

    const Eigen::Vector4d bbox(48.0, 48.0, spec.width - 96.0, spec.height - 96.0);
    const Eigen::Vector2d middle(bbox(0) + 0.5 * bbox(2), bbox(1) + 0.5 * bbox(3));
    const Eigen::Vector2d axes(0.5 * bbox(2) - 12.0, 0.5 * bbox(3) - 10.0);

    PartCorpus out;
    for (int i = 0; i < spec.images; ++i) {
        auto rng = make_rng(spec.seed, 0x100ull + static_cast<std::uint64_t>(i));
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::normal_distribution<double> n(0.0, 1.0);
        GrayImage image;
        image.pixels.resize(spec.height, spec.width);
        const double fx = 0.02 + 0.03 * u(rng);
        const double fy = 0.02 + 0.03 * u(rng);
        const double phase = 2.0 * std::numbers::pi * u(rng);
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                image.pixels(y, x) = 0.5 + 0.05 * std::sin(fx * x + phase) * std::cos(fy * y);
            }
        }
        // background clutter of random bars outside the object box
        const int clutter = spec.width * spec.height / 400;
        for (int b = 0; b < clutter; ++b) {
            const Eigen::Vector2d centre(spec.width * u(rng), spec.height * u(rng));
            if (centre.x() > bbox(0) - 8.0 && centre.x() < bbox(0) + bbox(2) + 8.0 && centre.y() > bbox(1) - 8.0 &&
                centre.y() < bbox(1) + bbox(3) + 8.0) {
                continue;
            }
            const double angle = std::numbers::pi * u(rng);
            const Eigen::Vector2d half = (2.0 + 2.0 * u(rng)) * Eigen::Vector2d(std::cos(angle), std::sin(angle));
            const double contrast = (u(rng) < 0.5 ? -1.0 : 1.0) * (0.2 + 0.15 * u(rng));
            draw_bar(image, {centre - half, centre + half, contrast});
        }
        Eigen::Matrix2Xd truth(2, spec.landmarks);
        Annotation annotation;
        annotation.file = "img" + std::to_string(1000 + i).substr(1) + ".pgm";
        annotation.bbox = bbox;
        annotation.visibility.assign(static_cast<std::size_t>(spec.landmarks), true);
        const double spin = 0.15 * (u(rng) - 0.5);
        for (int j = 0; j < spec.landmarks; ++j) {
            const double angle = 2.0 * std::numbers::pi * j / spec.landmarks + spin;
            const Eigen::Vector2d jitter(std::round(4.0 * (u(rng) - 0.5) * 2.0), std::round(4.0 * (u(rng) - 0.5) * 2.0));
            const Eigen::Vector2d centre =
                (middle + Eigen::Vector2d(axes.x() * std::cos(angle), axes.y() * std::sin(angle))).array().round().matrix() +
                jitter;
            truth.col(j) = centre;
            const int variant = std::min(static_cast<int>(u(rng) * spec.variants), spec.variants - 1);
            const bool hidden = u(rng) < spec.occlusion_rate;
            annotation.visibility[static_cast<std::size_t>(j)] = !hidden;
            if (hidden) {
                continue;
            }
            for (const Bar& bar : stamps[static_cast<std::size_t>(j)][static_cast<std::size_t>(variant)]) {
                draw_bar(image, {bar.from + centre, bar.to + centre, bar.contrast});
            }
        }
        for (int y = 0; y < spec.height; ++y) {
            for (int x = 0; x < spec.width; ++x) {
                image.pixels(y, x) = std::clamp(image.pixels(y, x) + spec.noise * n(rng), 0.0, 1.0);
            }
        }
        annotation.landmarks = truth.colwise() - spec.annotation_offset;
        out.corpus.images.push_back(std::move(image));
        out.corpus.annotations.push_back(std::move(annotation));
        out.truth.push_back(truth);
    }
    return out;
}

} // namespace partfit
