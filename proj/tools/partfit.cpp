/*
 * partfit - joint part localization, pose and shape estimation.
 *
 * File: partfit.cpp
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
#include "partfit/io.hpp"
#include "partfit/log.hpp"
#include "partfit/parallel.hpp"
#include "partfit/parts.hpp"
#include "partfit/pipeline.hpp"
#include "partfit/selection.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#ifndef PARTFIT_VERSION
#define PARTFIT_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using partfit::io::Json;
using namespace partfit;

namespace {

/// Flags given on the command line, by long name without dashes.
class Args {
public:
    explicit Args(Json values) : values_(std::move(values)) {}

    const Json& json() const { return values_; }
    bool has(const std::string& name) const { return values_.contains(name); }
    bool flag(const std::string& name) const { return has(name) && values_.at(name).get<bool>(); }
    std::string text(const std::string& name) const { return values_.at(name).get<std::string>(); }
    fs::path path(const std::string& name) const { return text(name); }
    double number(const std::string& name) const { return std::stod(text(name)); }
    int integer(const std::string& name) const { return std::stoi(text(name)); }
    std::uint64_t seed() const { return std::stoull(text("seed")); }
    int jobs() const { return has("jobs") ? integer("jobs") : 0; }
    std::vector<std::string> list(const std::string& name) const
    {
        return values_.at(name).get<std::vector<std::string>>();
    }

private:
    Json values_;
};

const std::vector<std::string> kSections = {"synthetic", "parts",     "training", "solver",
                                            "schedule",  "selection", "eval",     "visibility"};

/// Config file sections; unknown sections are rejected.
Json load_config(const Args& args)
{
    if (!args.has("config")) {
        return Json::object();
    }
    Json config = io::read_config(args.path("config"));
    for (const auto& [key, value] : config.items()) {
        if (std::find(kSections.begin(), kSections.end(), key) == kSections.end()) {
            throw ConfigError("config: unknown section '" + key + "'");
        }
    }
    return config;
}

Json section(const Json& config, const std::string& name, Json fallback = Json::object())
{
    return config.contains(name) ? config.at(name) : fallback;
}

std::string instance_name(int id)
{
    char buffer[16];
    std::snprintf(buffer, sizeof(buffer), "%06d", id);
    return buffer;
}

/// JSON files of a directory, sorted by name.
std::vector<fs::path> json_files(const fs::path& directory)
{
    if (!fs::is_directory(directory)) {
        throw ConfigError("not a directory: " + directory.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    return files;
}

void write_manifest(const fs::path& out, const std::string& command, const Args& args, const Json& resolved)
{
    Json manifest = {{"command", command},
                     {"args", args.json()},
                     {"resolved", resolved},
                     {"output", out.string()},
                     {"tool_version", PARTFIT_VERSION}};
    io::write_json(out / "manifest.json", manifest);
}

InferenceConfig inference_config(const Json& config)
{
    InferenceConfig inference;
    io::apply(section(config, "solver"), inference.solver);
    if (config.contains("schedule")) {
        io::apply(config.at("schedule"), inference.schedule);
    }
    if (config.contains("visibility")) {
        const Json& v = config.at("visibility");
        for (const auto& [key, value] : v.items()) {
            if (key != "neighbours") {
                throw ConfigError("visibility: unknown key '" + key + "'");
            }
        }
        inference.visibility.neighbours = v.at("neighbours").get<int>();
    }
    return inference;
}

int cmd_synth(const Args& args)
{
    const Json config = load_config(args);
    SyntheticSpec spec;
    Json layer = section(config, "synthetic");
    if (args.has("spec")) {
        io::merge_into(layer, io::read_json(args.path("spec")));
    }
    io::apply(layer, spec);
    if (args.has("instances")) spec.instances = args.integer("instances");
    if (args.has("noise")) spec.noise_sigma = args.number("noise");
    if (args.has("occlusion")) spec.occlusion = occlusion_from_string(args.text("occlusion"));
    if (args.has("seed")) spec.seed = args.seed();
    spec.validate();

    const fs::path out = args.path("out");
    const auto shapes = generate_training_shapes(spec.p, spec.training_shapes, spec.seed + 1);
    const BasisLearning learned = learn_basis(shapes, spec.k - 1);
    const ShapeBasis& basis = learned.basis;

    VisibilityTable table;
    if (spec.occlusion == OcclusionMode::table) {
        table = hemisphere_table(basis, 10.0, 0.5 * (spec.elevation_min + spec.elevation_max));
    } else if (spec.occlusion == OcclusionMode::none) {
        table = VisibilityTable({{0.0, std::vector<bool>(static_cast<std::size_t>(spec.p), true)}});
    }

    std::vector<SyntheticInstance> instances(static_cast<std::size_t>(spec.instances));
    parallel_for(instances.size(), args.jobs(), [&](std::size_t i) {
        instances[i] = generate_instance(spec, basis, static_cast<int>(i),
                                         spec.occlusion == OcclusionMode::table ? table : VisibilityTable{});
    });

    io::write_json(out / "spec.json", io::to_json(spec));
    io::write_json(out / "basis.json", io::to_json(basis));
    io::write_json(out / "shapes.json", io::shapes_to_json(shapes));
    if (!table.empty()) {
        io::write_json(out / "visibility.json", io::to_json(table));
    }
    for (const auto& instance : instances) {
        const std::string name = instance_name(instance.id) + ".json";
        io::write_json(out / "instances" / name, io::to_json(instance.hypotheses));
        Json truth = {{"id", instance.id},
                      {"landmarks", Json::array()},
                      {"pose", io::to_json(instance.truth)},
                      {"converged", true}};
        for (Eigen::Index j = 0; j < instance.projection.cols(); ++j) {
            truth["landmarks"].push_back({instance.projection(0, j), instance.projection(1, j)});
        }
        io::write_json(out / "truth" / name, truth);
    }

    Json resolved = {{"synthetic", io::to_json(spec)}, {"learned_directions", learned.learned}};
    if (args.flag("parts")) {
        PartCorpusSpec parts;
        io::apply(section(config, "parts"), parts);
        if (args.has("seed")) parts.seed = args.seed();
        const PartCorpus corpus = generate_part_corpus(parts);
        save_corpus(corpus.corpus, out / "parts");
        resolved["parts"] = io::to_json(parts);
        std::cout << "synth: " << parts.images << " part images -> " << (out / "parts").string() << "\n";
    }
    write_manifest(out, "synth", args, resolved);
    std::cout << "synth: " << spec.instances << " instances, p = " << spec.p << ", k = " << basis.size()
              << " -> " << out.string() << "\n";
    return 0;
}

int cmd_train_parts(const Args& args)
{
    const Json config = load_config(args);
    PartTrainingConfig training;
    io::apply(section(config, "training"), training);
    if (args.has("mixtures")) training.mixtures = args.integer("mixtures");
    if (args.has("seed")) training.seed = training.svm.seed = args.seed();
    training.jobs = args.jobs();

    const TrainingCorpus corpus = load_corpus(args.path("corpus"));
    const PartTrainingResult result = train_parts(corpus, training);

    const fs::path out = args.path("out");
    io::write_json(out / "models.json", io::to_json(result.models));
    io::CsvTable report({"landmark", "positives", "ap_lda", "ap_svm"});
    std::vector<double> aps(static_cast<std::size_t>(corpus.landmarks()), 0.0);
    for (const auto& r : result.reports) {
        report.add_row({std::to_string(r.landmark), std::to_string(r.positives), io::format_number(r.ap_lda),
                        io::format_number(r.ap_svm)});
        aps[static_cast<std::size_t>(r.landmark)] = r.ap_svm;
    }
    for (int skipped : result.skipped) {
        log().warn("landmark {} has no visible annotations; skipped", skipped);
        report.add_row({std::to_string(skipped), "0", "0", "0"});
    }
    io::write_text(out / "ap_report.csv", report.str());
    io::write_json(out / "aps.json", {{"aps", aps}});
    write_manifest(out, "train-parts", args,
                   {{"mixtures", training.mixtures}, {"seed", training.seed}, {"skipped", result.skipped}});

    double mean = 0.0;
    for (double ap : aps) {
        mean += ap;
    }
    std::cout << "train-parts: " << result.models.parts.size() << " parts, " << result.skipped.size()
              << " skipped, mean AP " << io::format_number(aps.empty() ? 0.0 : mean / static_cast<double>(aps.size()))
              << "\n";
    return 0;
}

int cmd_select(const Args& args)
{
    const Json config = load_config(args);
    const Json selection = section(config, "selection");
    for (const auto& [key, value] : selection.items()) {
        if (key != "lambda" && key != "tau") {
            throw ConfigError("selection: unknown key '" + key + "'");
        }
    }
    double lambda = selection.value("lambda", 1.0);
    double tau = selection.value("tau", 0.5);
    if (args.has("lambda")) lambda = args.number("lambda");
    if (args.has("tau")) tau = args.number("tau");

    const Json aps_json = io::read_json(args.path("aps"));
    const auto ap_values = aps_json.at("aps").get<std::vector<double>>();
    const Eigen::VectorXd aps = Eigen::Map<const Eigen::VectorXd>(ap_values.data(),
                                                                  static_cast<Eigen::Index>(ap_values.size()));
    const ShapeBasis basis = io::basis_from_json(io::read_json(args.path("basis")));
    FacilityInstance instance;
    if (args.has("shapes")) {
        const auto shapes = io::shapes_from_json(io::read_json(args.path("shapes")));
        instance = build_instance(aps, shapes, lambda);
    } else {
        instance = build_instance(aps, basis.mean_shape(), lambda);
    }
    const SelectionResult result = select_landmarks(instance, tau);

    const fs::path out = args.path("out");
    io::write_json(out / "selection.json", {{"instance", io::to_json(instance)}, {"result", io::to_json(result)}});
    write_manifest(out, "select-landmarks", args, {{"lambda", lambda}, {"tau", tau}});

    const auto count = std::count(result.selected.begin(), result.selected.end(), true);
    std::cout << "select-landmarks: " << count << "/" << instance.size() << " selected, objective "
              << io::format_number(result.objective) << ", LP bound " << io::format_number(result.fractional.objective)
              << "\n";
    return 0;
}

int cmd_fit(const Args& args)
{
    const Json config = load_config(args);
    InferenceConfig inference = inference_config(config);
    const ShapeBasis basis = io::basis_from_json(io::read_json(args.path("basis")));
    if (args.has("visibility")) {
        inference.visibility.table = io::visibility_table_from_json(io::read_json(args.path("visibility")));
    }

    const fs::path input = args.path("hypotheses");
    std::vector<fs::path> files = fs::is_directory(input) ? json_files(input) : std::vector<fs::path>{input};
    if (files.empty()) {
        throw ConfigError("fit: no hypothesis files in " + input.string());
    }

    std::vector<InferenceResult> results(files.size());
    std::vector<HypothesisSet> hypotheses(files.size());
    parallel_for(files.size(), args.jobs(), [&](std::size_t i) {
        hypotheses[i] = io::hypotheses_from_json(io::read_json(files[i]));
        results[i] = infer(hypotheses[i], basis, inference);
    });

    const fs::path out = args.path("out");
    const auto edges = io::wireframe_edges(basis.mean_shape());
    const double width = args.has("width") ? args.number("width") : 640.0;
    const double height = args.has("height") ? args.number("height") : 480.0;
    std::vector<std::string> failed;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const std::string stem = files[i].stem().string();
        Json result = io::to_json(results[i]);
        result["id"] = stem;
        io::write_json(out / "results" / (stem + ".json"), result);
        if (args.flag("svg")) {
            io::write_text(out / "svg" / (stem + ".svg"),
                           io::render_svg(results[i].landmarks, results[i].pose.visibility, edges, hypotheses[i], width,
                                          height));
        }
        if (!results[i].converged()) {
            failed.push_back(stem);
        }
    }
    io::write_json(out / "status.json",
                   {{"instances", files.size()}, {"converged", failed.empty()}, {"not_converged", failed}});
    write_manifest(out, "fit", args, {{"solver", io::to_json(inference.solver)}, {"schedule", inference.schedule.radii}});

    std::cout << "fit: " << files.size() << " instances, " << failed.size() << " not converged\n";
    return failed.empty() || !args.flag("strict") ? 0 : 2;
}

struct EvalRecord {
    Eigen::Matrix2Xd landmarks;
    Eigen::Matrix3d rotation;
    std::vector<bool> visibility;
    bool converged = true;
};

EvalRecord read_record(const fs::path& file)
{
    const Json json = io::read_json(file);
    EvalRecord record;
    const Json& points = json.at("landmarks");
    record.landmarks.resize(2, static_cast<Eigen::Index>(points.size()));
    for (std::size_t j = 0; j < points.size(); ++j) {
        record.landmarks(0, static_cast<Eigen::Index>(j)) = points[j].at(0).get<double>();
        record.landmarks(1, static_cast<Eigen::Index>(j)) = points[j].at(1).get<double>();
    }
    const PoseShapeResult pose = io::pose_from_json(json.at("pose"));
    record.rotation = pose.rotation;
    record.visibility = pose.visibility;
    record.converged = json.value("converged", true);
    return record;
}

int cmd_eval(const Args& args)
{
    const Json config = load_config(args);
    std::vector<double> bins = section(config, "eval", Json{{"bins", {20.0, 40.0}}}).value("bins", std::vector<double>{20.0, 40.0});
    if (args.has("bins")) {
        bins.clear();
        for (const auto& b : args.list("bins")) {
            bins.push_back(std::stod(b));
        }
    }
    for (double b : bins) {
        if (!(b > 0.0)) {
            throw ConfigError("eval: bins must be positive");
        }
    }

    const fs::path results_dir = args.path("results");
    const fs::path truth_dir = args.path("truth");
    const auto truth_files = json_files(truth_dir);
    if (truth_files.empty()) {
        throw ConfigError("eval: no truth files in " + truth_dir.string());
    }

    io::CsvTable table({"instance", "meanAPD", "azimuth_err", "converged"});
    std::vector<Eigen::Matrix3d> estimated;
    std::vector<Eigen::Matrix3d> truth;
    double apd_all = 0.0;
    double apd_visible = 0.0;
    double azimuth_error = 0.0;
    int converged = 0;
    for (const auto& file : truth_files) {
        const fs::path result_file = results_dir / file.filename();
        if (!fs::exists(result_file)) {
            throw ConfigError("eval: missing result " + result_file.string());
        }
        const EvalRecord t = read_record(file);
        const EvalRecord e = read_record(result_file);
        if (e.landmarks.cols() != t.landmarks.cols()) {
            throw ConfigError("eval: landmark count mismatch for " + file.filename().string());
        }
        const double apd = mean_apd(e.landmarks, t.landmarks);
        const bool any_visible = std::any_of(t.visibility.begin(), t.visibility.end(), [](bool v) { return v; });
        apd_visible += any_visible ? mean_apd(e.landmarks, t.landmarks, t.visibility) : apd;
        const double az = circular_difference_deg(azimuth_deg(e.rotation), azimuth_deg(t.rotation));
        apd_all += apd;
        azimuth_error += az;
        converged += e.converged;
        estimated.push_back(e.rotation);
        truth.push_back(t.rotation);
        table.add_row({file.stem().string(), io::format_number(apd), io::format_number(az), e.converged ? "1" : "0"});
    }
    const double n = static_cast<double>(truth_files.size());
    Json summary = {{"instances", truth_files.size()},
                    {"meanAPD_all", apd_all / n},
                    {"meanAPD_visible", apd_visible / n},
                    {"mean_azimuth_error", azimuth_error / n},
                    {"converged", converged},
                    {"viewpoint", Json::array()}};
    for (double b : bins) {
        const ViewpointMetrics metrics = viewpoint_metrics(estimated, truth, b);
        summary["viewpoint"].push_back({{"bin_deg", b}, {"accuracy", metrics.accuracy}});
    }

    const fs::path out = args.path("out");
    io::write_text(out / "metrics.csv", table.str());
    io::write_json(out / "summary.json", summary);
    write_manifest(out, "eval", args, {{"bins", bins}});

    std::cout << "eval: " << truth_files.size() << " instances, meanAPD " << io::format_number(apd_all / n)
              << " px (visible " << io::format_number(apd_visible / n) << "), azimuth error "
              << io::format_number(azimuth_error / n) << " deg";
    for (const auto& v : summary["viewpoint"]) {
        std::cout << ", acc@" << io::format_number(v["bin_deg"].get<double>()) << " "
                  << io::format_number(v["accuracy"].get<double>());
    }
    std::cout << "\n";
    return 0;
}

using Command = int (*)(const Args&);

const std::map<std::string, Command> kCommands = {{"synth", cmd_synth},
                                                  {"train-parts", cmd_train_parts},
                                                  {"select-landmarks", cmd_select},
                                                  {"fit", cmd_fit},
                                                  {"eval", cmd_eval}};

/// Long names whose values are paths, stored absolute so that a manifest replays from any directory.
const std::vector<std::string> kPathOptions = {"config", "spec",       "corpus", "aps",   "basis",
                                               "shapes", "hypotheses", "visibility", "results", "truth", "out"};

Json collect(const CLI::App& sub)
{
    Json values = Json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_lnames().front();
        if (opt->count() == 0 || name == "help") {
            continue;
        }
        if (opt->get_expected_max() == 0) {
            values[name] = true;
        } else if (opt->get_expected_max() > 1) {
            values[name] = opt->results();
        } else if (std::find(kPathOptions.begin(), kPathOptions.end(), name) != kPathOptions.end()) {
            values[name] = fs::absolute(opt->results().front()).lexically_normal().string();
        } else {
            values[name] = opt->results().front();
        }
    }
    return values;
}

void common_options(CLI::App& sub, bool seeded)
{
    sub.add_option("--config", "config file (JSON or key = value)")->check(CLI::ExistingFile);
    if (seeded) {
        sub.add_option("--seed", "random seed")->check(CLI::NonNegativeNumber);
    }
    sub.add_option("--jobs", "worker threads (default: logical cores)")->check(CLI::PositiveNumber);
    sub.add_option("--out", "output directory")->required();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Joint part localization, pose and shape estimation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", PARTFIT_VERSION);

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    common_options(*synth, true);
    synth->add_option("--spec", "synthetic spec JSON")->check(CLI::ExistingFile);
    synth->add_option("--instances", "instance count")->check(CLI::PositiveNumber);
    synth->add_option("--noise", "hypothesis noise sigma, pixels")->check(CLI::NonNegativeNumber);
    synth->add_option("--occlusion", "none | hemisphere | table")->check(CLI::IsMember({"none", "hemisphere", "table"}));
    synth->add_flag("--parts", "also write a part-appearance corpus");

    CLI::App* train = app.add_subcommand("train-parts", "train part models on an annotated corpus");
    common_options(*train, true);
    train->add_option("--corpus", "corpus directory with annotations.json")->required()->check(CLI::ExistingDirectory);
    train->add_option("--mixtures", "components per part")->check(CLI::PositiveNumber);

    CLI::App* select = app.add_subcommand("select-landmarks", "facility-location landmark selection");
    common_options(*select, false);
    select->add_option("--aps", "aps.json from train-parts")->required()->check(CLI::ExistingFile);
    select->add_option("--basis", "basis.json")->required()->check(CLI::ExistingFile);
    select->add_option("--shapes", "shapes.json; distances are averaged over them")->check(CLI::ExistingFile);
    select->add_option("--lambda", "distance weight (default 1)")->check(CLI::NonNegativeNumber);
    select->add_option("--tau", "rounding threshold (default 0.5)")->check(CLI::Range(0.0, 1.0));

    CLI::App* fit = app.add_subcommand("fit", "fit pose and shape to hypotheses");
    common_options(*fit, false);
    fit->add_option("--hypotheses", "hypotheses file or directory")->required()->check(CLI::ExistingPath);
    fit->add_option("--basis", "basis.json")->required()->check(CLI::ExistingFile);
    fit->add_option("--visibility", "azimuth visibility table")->check(CLI::ExistingFile);
    fit->add_flag("--svg", "write wireframe SVGs");
    fit->add_option("--width", "SVG width")->check(CLI::PositiveNumber);
    fit->add_option("--height", "SVG height")->check(CLI::PositiveNumber);
    fit->add_flag("--strict", "exit with status 2 when any solve does not converge");

    CLI::App* eval = app.add_subcommand("eval", "score results against ground truth");
    common_options(*eval, false);
    eval->add_option("--results", "results directory")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--truth", "truth directory")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--bins", "azimuth bin widths, degrees (default 20 40)")->expected(1, 16);

    std::string manifest_path;
    std::string replay_out;
    CLI::App* replay = app.add_subcommand("replay", "rerun the command recorded in a manifest");
    replay->add_option("manifest", manifest_path, "manifest.json")->required()->check(CLI::ExistingFile);
    replay->add_option("--out", replay_out, "output directory (default: the recorded one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (replay->parsed()) {
            const Json manifest = io::read_json(manifest_path);
            const std::string command = manifest.at("command").get<std::string>();
            const auto it = kCommands.find(command);
            if (it == kCommands.end()) {
                throw ConfigError("replay: unknown command '" + command + "'");
            }
            Json recorded = manifest.at("args");
            if (!replay_out.empty()) {
                recorded["out"] = fs::absolute(replay_out).lexically_normal().string();
            }
            return it->second(Args(recorded));
        }
        for (const auto& [name, command] : kCommands) {
            if (CLI::App* sub = app.get_subcommand(name); sub->parsed()) {
                return command(Args(collect(*sub)));
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
