/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: io.hpp
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

#include "partfit/bench.hpp"
#include "partfit/geometry.hpp"
#include "partfit/parts.hpp"
#include "partfit/pipeline.hpp"
#include "partfit/selection.hpp"
#include "partfit/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace partfit::io {

using Json = nlohmann::json;

/// Whole-file text I/O; the output's parent directories are created.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

Json read_json(const std::filesystem::path& path);
/// Two-space indented, keys in insertion order, trailing newline.
void write_json(const std::filesystem::path& path, const Json& value);

/**
 * Configuration file: a JSON object, or `key = value` lines with `#`
 * comments. Values of key/value files are parsed as JSON when possible
 * (numbers, booleans, arrays) and kept as strings otherwise. Dotted keys
 * (`solver.lambda1`) become nested objects.
 */
Json read_config(const std::filesystem::path& path);

/// Overwrites every member of `base` present in `overlay`, recursing into objects.
void merge_into(Json& base, const Json& overlay);

// Each `apply` sets the fields present in `json` and leaves the others alone;
// unknown keys raise ConfigError.
void apply(const Json& json, SolverConfig& config);
void apply(const Json& json, TrustRegionSchedule& schedule);
void apply(const Json& json, SyntheticSpec& spec);
void apply(const Json& json, PartCorpusSpec& spec);
void apply(const Json& json, PartTrainingConfig& config);
Json to_json(const SolverConfig& config);
Json to_json(const SyntheticSpec& spec);
Json to_json(const PartCorpusSpec& spec);

Json to_json(const ShapeBasis& basis);
ShapeBasis basis_from_json(const Json& json);

Json shapes_to_json(const std::vector<Eigen::Matrix3Xd>& shapes);
std::vector<Eigen::Matrix3Xd> shapes_from_json(const Json& json);

/// {"landmarks": [{"id", "hyps": [{"x", "y", "score"}], "cov": [[a, b], [b, c]]}]}
Json to_json(const HypothesisSet& hyps);
HypothesisSet hypotheses_from_json(const Json& json);

Json to_json(const PoseShapeResult& pose);
PoseShapeResult pose_from_json(const Json& json);

/// Pose plus fitted landmarks and per-stage solver diagnostics.
Json to_json(const InferenceResult& result);

Json to_json(const VisibilityTable& table);
VisibilityTable visibility_table_from_json(const Json& json);

Json to_json(const PartModelSet& models);
PartModelSet part_models_from_json(const Json& json);

Json to_json(const FacilityInstance& instance);
Json to_json(const SelectionResult& result);

/// Comma-separated table with a header row; doubles use the shortest round-trip form.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header);
    void add_row(std::vector<std::string> cells);
    std::string str() const;
    std::size_t rows() const { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Shortest decimal form that parses back to the same double.
std::string format_number(double value);

/// Undirected wireframe over landmarks: each landmark joined to its `neighbours` nearest in the mean shape.
std::vector<std::pair<int, int>> wireframe_edges(const Eigen::Matrix3Xd& shape, int neighbours = 3);

/**
 * SVG of a fitted wireframe: one polyline per edge, solid when both ends are
 * visible and dashed otherwise, plus the hypotheses as small circles.
 */
std::string render_svg(const Eigen::Matrix2Xd& landmarks, const std::vector<bool>& visibility,
                       const std::vector<std::pair<int, int>>& edges, const HypothesisSet& hyps, double width,
                       double height);

} // namespace partfit::io
