/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: io.cpp
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

#include "partfit/io.hpp"

#include "partfit/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace partfit::io {

namespace fs = std::filesystem;

std::string read_text(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw ConfigError("failed writing " + path.string());
    }
}

Json read_json(const fs::path& path)
{
    try {
        return Json::parse(read_text(path));
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const Json& value) { write_text(path, value.dump(2) + "\n"); }

namespace {

std::string trim(const std::string& text)
{
    const auto first = text.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = text.find_last_not_of(" \t\r");
    return text.substr(first, last - first + 1);
}

void set_dotted(Json& root, const std::string& key, Json value)
{
    Json* node = &root;
    std::size_t start = 0;
    for (auto dot = key.find('.'); dot != std::string::npos; dot = key.find('.', start)) {
        node = &(*node)[key.substr(start, dot - start)];
        start = dot + 1;
    }
    (*node)[key.substr(start)] = std::move(value);
}

} // namespace

Json read_config(const fs::path& path)
{
    const std::string text = read_text(path);
    const std::string stripped = trim(text);
    if (!stripped.empty() && stripped.front() == '{') {
        return read_json(path);
    }
    Json root = Json::object();
    std::istringstream lines(text);
    std::string line;
    int number = 0;
    while (std::getline(lines, line)) {
        ++number;
        const auto hash = line.find('#');
        line = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError(path.string() + ":" + std::to_string(number) + ": empty key");
        }
        Json value = Json::parse(raw, nullptr, false);
        if (value.is_discarded()) {
            value = raw;
        }
        set_dotted(root, key, std::move(value));
    }
    return root;
}

void merge_into(Json& base, const Json& overlay)
{
    if (!overlay.is_object()) {
        return;
    }
    for (const auto& [key, value] : overlay.items()) {
        if (value.is_object() && base.contains(key) && base[key].is_object()) {
            merge_into(base[key], value);
        } else {
            base[key] = value;
        }
    }
}

namespace {

void check_keys(const Json& json, const std::string& what, std::initializer_list<const char*> allowed)
{
    if (!json.is_object()) {
        throw ConfigError(what + ": expected an object");
    }
    for (const auto& [key, value] : json.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw ConfigError(what + ": unknown key '" + key + "'");
        }
    }
}

template <typename T>
void set(const Json& json, const char* key, T& field)
{
    if (!json.contains(key)) {
        return;
    }
    try {
        field = json.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

Json matrix_rows(const Eigen::MatrixXd& m)
{
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_rows(const Json& rows, const std::string& what)
{
    if (!rows.is_array() || rows.empty() || !rows.front().is_array()) {
        throw ConfigError(what + ": expected a non-empty array of rows");
    }
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        const Json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) {
            throw ConfigError(what + ": ragged rows");
        }
        for (Eigen::Index j = 0; j < c; ++j) {
            m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
    }
    return m;
}

/// 3 x p matrices are stored as p points [x, y, z].
Json points(const Eigen::Matrix3Xd& m) { return matrix_rows(m.transpose()); }

Eigen::Matrix3Xd points_from(const Json& json, const std::string& what)
{
    const Eigen::MatrixXd rows = matrix_from_rows(json, what);
    if (rows.cols() != 3) {
        throw ConfigError(what + ": points must have 3 coordinates");
    }
    return rows.transpose();
}

Json vector_json(const Eigen::VectorXd& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

Eigen::VectorXd vector_from(const Json& json)
{
    const auto values = json.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

} // namespace

void apply(const Json& json, SolverConfig& config)
{
    check_keys(json, "solver", {"lambda1", "lambda2", "rho", "adapt_rho", "max_iters", "eps_primal", "eps_dual"});
    set(json, "lambda1", config.lambda1);
    set(json, "lambda2", config.lambda2);
    set(json, "rho", config.rho);
    set(json, "adapt_rho", config.adapt_rho);
    set(json, "max_iters", config.max_iters);
    if (json.contains("eps_primal")) {
        config.eps_primal = json.at("eps_primal").get<double>();
    }
    if (json.contains("eps_dual")) {
        config.eps_dual = json.at("eps_dual").get<double>();
    }
    config.validate();
}

Json to_json(const SolverConfig& config)
{
    Json json = {{"lambda1", config.lambda1}, {"lambda2", config.lambda2}, {"rho", config.rho},
                 {"adapt_rho", config.adapt_rho}, {"max_iters", config.max_iters}};
    if (config.eps_primal) {
        json["eps_primal"] = *config.eps_primal;
    }
    if (config.eps_dual) {
        json["eps_dual"] = *config.eps_dual;
    }
    return json;
}

void apply(const Json& json, TrustRegionSchedule& schedule)
{
    if (json.is_array()) {
        schedule.radii = json.get<std::vector<double>>();
    } else {
        check_keys(json, "schedule", {"radii"});
        set(json, "radii", schedule.radii);
    }
    schedule.validate();
}

void apply(const Json& json, SyntheticSpec& spec)
{
    check_keys(json, "synthetic spec",
               {"p", "k", "instances", "training_shapes", "azimuth_min", "azimuth_max", "elevation_min",
                "elevation_max", "noise_sigma", "distractors", "score_gap", "score_noise", "covariance_floor",
                "shape_variation", "scale_min", "scale_max", "image_width", "image_height", "occlusion", "seed"});
    set(json, "p", spec.p);
    set(json, "k", spec.k);
    set(json, "instances", spec.instances);
    set(json, "training_shapes", spec.training_shapes);
    set(json, "azimuth_min", spec.azimuth_min);
    set(json, "azimuth_max", spec.azimuth_max);
    set(json, "elevation_min", spec.elevation_min);
    set(json, "elevation_max", spec.elevation_max);
    set(json, "noise_sigma", spec.noise_sigma);
    set(json, "distractors", spec.distractors);
    set(json, "score_gap", spec.score_gap);
    set(json, "score_noise", spec.score_noise);
    set(json, "covariance_floor", spec.covariance_floor);
    set(json, "shape_variation", spec.shape_variation);
    set(json, "scale_min", spec.scale_min);
    set(json, "scale_max", spec.scale_max);
    set(json, "image_width", spec.image_width);
    set(json, "image_height", spec.image_height);
    set(json, "seed", spec.seed);
    if (json.contains("occlusion")) {
        spec.occlusion = occlusion_from_string(json.at("occlusion").get<std::string>());
    }
    spec.validate();
}

Json to_json(const SyntheticSpec& spec)
{
    return {{"p", spec.p},
            {"k", spec.k},
            {"instances", spec.instances},
            {"training_shapes", spec.training_shapes},
            {"azimuth_min", spec.azimuth_min},
            {"azimuth_max", spec.azimuth_max},
            {"elevation_min", spec.elevation_min},
            {"elevation_max", spec.elevation_max},
            {"noise_sigma", spec.noise_sigma},
            {"distractors", spec.distractors},
            {"score_gap", spec.score_gap},
            {"score_noise", spec.score_noise},
            {"covariance_floor", spec.covariance_floor},
            {"shape_variation", spec.shape_variation},
            {"scale_min", spec.scale_min},
            {"scale_max", spec.scale_max},
            {"image_width", spec.image_width},
            {"image_height", spec.image_height},
            {"occlusion", to_string(spec.occlusion)},
            {"seed", spec.seed}};
}

void apply(const Json& json, PartCorpusSpec& spec)
{
    check_keys(json, "part corpus",
               {"landmarks", "images", "width", "height", "variants", "noise", "occlusion_rate",
                "annotation_offset", "seed"});
    set(json, "landmarks", spec.landmarks);
    set(json, "images", spec.images);
    set(json, "width", spec.width);
    set(json, "height", spec.height);
    set(json, "variants", spec.variants);
    set(json, "noise", spec.noise);
    set(json, "occlusion_rate", spec.occlusion_rate);
    set(json, "seed", spec.seed);
    if (json.contains("annotation_offset")) {
        const auto offset = json.at("annotation_offset").get<std::vector<double>>();
        if (offset.size() != 2) {
            throw ConfigError("part corpus: annotation_offset must have two entries");
        }
        spec.annotation_offset = {offset[0], offset[1]};
    }
}

Json to_json(const PartCorpusSpec& spec)
{
    return {{"landmarks", spec.landmarks},
            {"images", spec.images},
            {"width", spec.width},
            {"height", spec.height},
            {"variants", spec.variants},
            {"noise", spec.noise},
            {"occlusion_rate", spec.occlusion_rate},
            {"annotation_offset", {spec.annotation_offset.x(), spec.annotation_offset.y()}},
            {"seed", spec.seed}};
}

void apply(const Json& json, PartTrainingConfig& config)
{
    check_keys(json, "part training",
               {"patch_size", "cells", "bins", "mixtures", "epsilon", "latent_radius", "latent_rounds",
                "svm_lambda", "svm_epochs", "hard_negative_rounds", "initial_negatives",
                "hard_negatives_per_round", "stride", "nms_radius", "max_detections", "negatives_per_image",
                "flip", "ap_radius", "seed"});
    set(json, "patch_size", config.hog.patch_size);
    set(json, "cells", config.hog.cells);
    set(json, "bins", config.hog.bins);
    set(json, "mixtures", config.mixtures);
    if (json.contains("epsilon")) {
        config.epsilon = json.at("epsilon").get<double>();
    }
    set(json, "latent_radius", config.latent.radius);
    set(json, "latent_rounds", config.latent.rounds);
    set(json, "svm_lambda", config.svm.lambda);
    set(json, "svm_epochs", config.svm.epochs);
    set(json, "hard_negative_rounds", config.svm.hard_negative_rounds);
    set(json, "initial_negatives", config.svm.initial_negatives);
    set(json, "hard_negatives_per_round", config.svm.hard_negatives_per_round);
    set(json, "stride", config.detection.stride);
    set(json, "nms_radius", config.detection.nms_radius);
    set(json, "max_detections", config.detection.max_detections);
    set(json, "negatives_per_image", config.negatives_per_image);
    set(json, "flip", config.flip);
    set(json, "ap_radius", config.ap_radius);
    set(json, "seed", config.seed);
    config.hog.validate();
}

Json to_json(const ShapeBasis& basis)
{
    Json bases = Json::array();
    for (const auto& b : basis.bases()) {
        bases.push_back(points(b));
    }
    return {{"landmarks", basis.landmarks()}, {"mean", points(basis.mean_shape())}, {"bases", std::move(bases)}};
}

ShapeBasis basis_from_json(const Json& json)
{
    if (!json.contains("mean") || !json.contains("bases")) {
        throw ConfigError("basis: expected 'mean' and 'bases'");
    }
    std::vector<Eigen::Matrix3Xd> bases;
    for (const auto& b : json.at("bases")) {
        bases.push_back(points_from(b, "basis"));
    }
    try {
        return ShapeBasis(points_from(json.at("mean"), "basis mean"), std::move(bases));
    } catch (const ContractError& e) {
        throw ConfigError(e.what());
    }
}

Json shapes_to_json(const std::vector<Eigen::Matrix3Xd>& shapes)
{
    Json list = Json::array();
    for (const auto& s : shapes) {
        list.push_back(points(s));
    }
    return {{"shapes", std::move(list)}};
}

std::vector<Eigen::Matrix3Xd> shapes_from_json(const Json& json)
{
    std::vector<Eigen::Matrix3Xd> shapes;
    for (const auto& s : json.at("shapes")) {
        shapes.push_back(points_from(s, "shape"));
    }
    return shapes;
}

Json to_json(const HypothesisSet& hyps)
{
    Json landmarks = Json::array();
    for (const auto& entry : hyps.entries()) {
        Json list = Json::array();
        for (int h = 0; h < entry.count(); ++h) {
            list.push_back({{"x", entry.locations(h, 0)}, {"y", entry.locations(h, 1)}, {"score", entry.scores(h)}});
        }
        landmarks.push_back({{"id", entry.landmark}, {"hyps", std::move(list)}, {"cov", matrix_rows(entry.covariance)}});
    }
    return {{"landmarks", std::move(landmarks)}};
}

HypothesisSet hypotheses_from_json(const Json& json)
{
    if (!json.contains("landmarks") || !json.at("landmarks").is_array()) {
        throw ConfigError("hypotheses: expected a 'landmarks' array");
    }
    std::vector<LandmarkHypotheses> entries;
    std::set<int> seen;
    for (const auto& item : json.at("landmarks")) {
        LandmarkHypotheses entry;
        entry.landmark = item.at("id").get<int>();
        if (entry.landmark < 0 || !seen.insert(entry.landmark).second) {
            throw ConfigError("hypotheses: bad or repeated landmark id " + std::to_string(entry.landmark));
        }
        const Json& list = item.at("hyps");
        if (list.empty()) {
            throw ConfigError("hypotheses: landmark " + std::to_string(entry.landmark) + " has no hypotheses");
        }
        entry.locations.resize(static_cast<Eigen::Index>(list.size()), 2);
        entry.scores.resize(static_cast<Eigen::Index>(list.size()));
        for (std::size_t h = 0; h < list.size(); ++h) {
            entry.locations(static_cast<Eigen::Index>(h), 0) = list[h].at("x").get<double>();
            entry.locations(static_cast<Eigen::Index>(h), 1) = list[h].at("y").get<double>();
            entry.scores(static_cast<Eigen::Index>(h)) = list[h].at("score").get<double>();
        }
        if (item.contains("cov")) {
            const Eigen::MatrixXd cov = matrix_from_rows(item.at("cov"), "hypotheses cov");
            if (cov.rows() != 2 || cov.cols() != 2) {
                throw ConfigError("hypotheses: cov must be 2 x 2");
            }
            entry.covariance = cov;
        }
        entries.push_back(std::move(entry));
    }
    try {
        return HypothesisSet(std::move(entries));
    } catch (const Error& e) {
        throw ConfigError(std::string("hypotheses: ") + e.what());
    }
}

Json to_json(const PoseShapeResult& pose)
{
    return {{"rotation", matrix_rows(pose.rotation)},
            {"translation", {pose.translation.x(), pose.translation.y()}},
            {"coefficients", vector_json(pose.coefficients)},
            {"shape", points(pose.shape)},
            {"visibility", pose.visibility},
            {"azimuth_deg", azimuth_deg(pose.rotation)},
            {"elevation_deg", elevation_deg(pose.rotation)}};
}

PoseShapeResult pose_from_json(const Json& json)
{
    PoseShapeResult pose;
    const Eigen::MatrixXd rotation = matrix_from_rows(json.at("rotation"), "rotation");
    if (rotation.rows() != 3 || rotation.cols() != 3) {
        throw ConfigError("pose: rotation must be 3 x 3");
    }
    pose.rotation = rotation;
    const auto t = json.at("translation").get<std::vector<double>>();
    if (t.size() != 2) {
        throw ConfigError("pose: translation must have two entries");
    }
    pose.translation = {t[0], t[1]};
    pose.coefficients = vector_from(json.at("coefficients"));
    pose.shape = points_from(json.at("shape"), "shape");
    pose.visibility = json.at("visibility").get<std::vector<bool>>();
    return pose;
}

Json to_json(const InferenceResult& result)
{
    Json stages = Json::array();
    for (const auto& s : result.stages) {
        stages.push_back({{"name", s.name},
                          {"landmarks", s.landmarks},
                          {"hypotheses", s.hypotheses},
                          {"objective", s.objective},
                          {"converged", s.solve.converged},
                          {"iterations", s.solve.iterations},
                          {"final_rho", s.solve.final_rho},
                          {"ridge_added", s.solve.ridge_added}});
    }
    return {{"pose", to_json(result.pose)},
            {"landmarks", matrix_rows(result.landmarks.transpose())},
            {"converged", result.converged()},
            {"stages", std::move(stages)},
            {"warnings", result.warnings}};
}

Json to_json(const VisibilityTable& table)
{
    Json entries = Json::array();
    for (const auto& e : table.entries()) {
        entries.push_back({{"azimuth_deg", e.azimuth_deg}, {"visible", e.visible}});
    }
    return {{"entries", std::move(entries)}};
}

VisibilityTable visibility_table_from_json(const Json& json)
{
    std::vector<AzimuthVisibility> entries;
    for (const auto& e : json.at("entries")) {
        entries.push_back({e.at("azimuth_deg").get<double>(), e.at("visible").get<std::vector<bool>>()});
    }
    return VisibilityTable(std::move(entries));
}

Json to_json(const PartModelSet& models)
{
    Json parts = Json::array();
    for (const auto& part : models.parts) {
        Json filters = Json::array();
        for (const auto& f : part.filters) {
            filters.push_back(vector_json(f));
        }
        Json offsets = Json::array();
        for (const auto& r : part.offsets) {
            offsets.push_back({r.x(), r.y()});
        }
        parts.push_back({{"landmark", part.landmark},
                         {"filters", std::move(filters)},
                         {"biases", part.biases},
                         {"components", part.components},
                         {"offsets", std::move(offsets)},
                         {"covariance", matrix_rows(part.covariance)},
                         {"training_ap", part.training_ap}});
    }
    return {{"hog", {{"patch_size", models.hog.patch_size}, {"cells", models.hog.cells}, {"bins", models.hog.bins}}},
            {"parts", std::move(parts)}};
}

PartModelSet part_models_from_json(const Json& json)
{
    PartModelSet models;
    const Json& hog = json.at("hog");
    models.hog.patch_size = hog.at("patch_size").get<int>();
    models.hog.cells = hog.at("cells").get<int>();
    models.hog.bins = hog.at("bins").get<int>();
    models.hog.validate();
    for (const auto& item : json.at("parts")) {
        PartModel part;
        part.landmark = item.at("landmark").get<int>();
        for (const auto& f : item.at("filters")) {
            part.filters.push_back(vector_from(f));
            if (part.filters.back().size() != models.hog.dimension()) {
                throw ConfigError("part models: filter dimension does not match the HOG layout");
            }
        }
        part.biases = item.at("biases").get<std::vector<double>>();
        part.components = item.at("components").get<std::vector<int>>();
        for (const auto& r : item.at("offsets")) {
            part.offsets.emplace_back(r.at(0).get<int>(), r.at(1).get<int>());
        }
        part.covariance = matrix_from_rows(item.at("covariance"), "part covariance");
        part.training_ap = item.at("training_ap").get<double>();
        models.parts.push_back(std::move(part));
    }
    return models;
}

Json to_json(const FacilityInstance& instance)
{
    return {{"unary", vector_json(instance.unary)},
            {"pairwise", matrix_rows(instance.pairwise)},
            {"lambda", instance.lambda}};
}

Json to_json(const SelectionResult& result)
{
    std::vector<int> selected;
    for (std::size_t v = 0; v < result.selected.size(); ++v) {
        if (result.selected[v]) {
            selected.push_back(static_cast<int>(v));
        }
    }
    return {{"selected", selected},
            {"assignment", result.assignment},
            {"objective", result.objective},
            {"lp_objective", result.fractional.objective},
            {"lp_dual_objective", result.fractional.dual_objective},
            {"lp_iterations", result.fractional.iterations},
            {"y", vector_json(result.fractional.y)}};
}

std::string format_number(double value)
{
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc()) {
        throw NumericalError("format_number: conversion failed");
    }
    return std::string(buffer, end);
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells)
{
    detail::require(cells.size() == header_.size(), "CsvTable: row width does not match the header");
    rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const
{
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            out += (i ? "," : "") + cells[i];
        }
        out += '\n';
    };
    line(header_);
    for (const auto& row : rows_) {
        line(row);
    }
    return out;
}

std::vector<std::pair<int, int>> wireframe_edges(const Eigen::Matrix3Xd& shape, int neighbours)
{
    detail::require(neighbours >= 1, "wireframe_edges: need at least one neighbour");
    std::set<std::pair<int, int>> edges;
    const auto p = shape.cols();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        const Eigen::RowVectorXd distance = (shape.colwise() - shape.col(j)).colwise().squaredNorm();
        for (Eigen::Index m = 0; m < p; ++m) {
            order[static_cast<std::size_t>(m)] = m;
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return distance(a) < distance(b); });
        int added = 0;
        for (Eigen::Index m : order) {
            if (m == j) {
                continue;
            }
            if (added++ >= neighbours) {
                break;
            }
            edges.insert({static_cast<int>(std::min(j, m)), static_cast<int>(std::max(j, m))});
        }
    }
    return {edges.begin(), edges.end()};
}

namespace {

std::string fixed(double value)
{
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.2f", value);
    return buffer;
}

} // namespace

std::string render_svg(const Eigen::Matrix2Xd& landmarks, const std::vector<bool>& visibility,
                       const std::vector<std::pair<int, int>>& edges, const HypothesisSet& hyps, double width,
                       double height)
{
    detail::require(visibility.empty() || static_cast<Eigen::Index>(visibility.size()) == landmarks.cols(),
                    "render_svg: visibility length does not match the landmarks");
    auto visible = [&](int j) { return visibility.empty() || visibility[static_cast<std::size_t>(j)]; };
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width) + "\" height=\"" +
                      fixed(height) + "\" viewBox=\"0 0 " + fixed(width) + " " + fixed(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& entry : hyps.entries()) {
        for (int h = 0; h < entry.count(); ++h) {
            svg += "<circle cx=\"" + fixed(entry.locations(h, 0)) + "\" cy=\"" + fixed(entry.locations(h, 1)) +
                   "\" r=\"1.5\" fill=\"#999999\"/>\n";
        }
    }
    for (const auto& [a, b] : edges) {
        detail::require(a >= 0 && b >= 0 && a < landmarks.cols() && b < landmarks.cols(),
                        "render_svg: edge outside the landmark range");
        const bool solid = visible(a) && visible(b);
        svg += "<polyline points=\"" + fixed(landmarks(0, a)) + "," + fixed(landmarks(1, a)) + " " +
               fixed(landmarks(0, b)) + "," + fixed(landmarks(1, b)) + "\" fill=\"none\" stroke=\"" +
               (solid ? "#d62728\" stroke-width=\"1.5\"/>\n" : "#1f77b4\" stroke-width=\"1\" stroke-dasharray=\"4,3\"/>\n");
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace partfit::io
