#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ugg/ablation.hpp"
#include "ugg/autodiff.hpp"
#include "ugg/io.hpp"
#include "ugg/synth.hpp"

namespace ugg {

// ============================================================
// Job configuration (JSON)
// ============================================================
//
// A job is a JSON document; unknown keys anywhere are an error so typos
// fail fast. Exactly one of "inputs" (paths to matrix files) and
// "scenario" (generator parameters) must be present.

struct MatrixInputs {
    std::string gallery_sim;
    std::string tracklet_sim;
    std::optional<std::string> cannot_link;    // absent: no cannot-links
    std::optional<std::string> true_identity;  // absent: no ranking report
};

struct AblationJob {
    std::vector<AblationFlags> flag_sets = standard_ablation_flags();
    int num_seeds = 20;
    std::uint64_t base_seed = 1;
};

struct JobConfig {
    std::optional<MatrixInputs> inputs;
    std::optional<ScenarioParams> scenario;
    UggConfig ugg;
    LossConfig loss;
    std::optional<AblationJob> ablation;
    std::string output_dir = "out";
    bool emit_trace = false;
    bool emit_plots = false;
    std::vector<int> ranking_ks = {1, 3, 5};
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown_keys(const json& object, std::initializer_list<const char*> allowed,
                                const std::string& context) {
    for (const auto& [key, _] : object.items()) {
        bool known = false;
        for (const char* name : allowed) known = known || key == name;
        require(known, ErrorCode::kUnknownKey, "unknown key '" + key + "' in " + context);
    }
}

template <typename T>
inline void read_field(const json& object, const char* key, T& out) {
    if (object.contains(key)) out = object.at(key).get<T>();
}

inline NeighborhoodPolicy parse_policy_json(const json& value) {
    if (value.is_string()) {
        require(value.get<std::string>() == "full", ErrorCode::kInvalidConfig,
                "neighborhood_policy string must be \"full\"");
        return NeighborhoodPolicy::full();
    }
    require(value.is_object(), ErrorCode::kInvalidConfig,
            "neighborhood_policy must be \"full\", {\"top_k\": k} or {\"threshold\": tau}");
    reject_unknown_keys(value, {"top_k", "threshold"}, "neighborhood_policy");
    if (value.contains("top_k")) return NeighborhoodPolicy::top_k(value.at("top_k").get<int>());
    if (value.contains("threshold"))
        return NeighborhoodPolicy::threshold(value.at("threshold").get<double>());
    throw Error(ErrorCode::kInvalidConfig, "empty neighborhood_policy object");
}

}  // namespace detail

// "full" | "top_k:<k>" | "threshold:<tau>" — the CLI spelling.
inline NeighborhoodPolicy parse_policy_string(const std::string& text) {
    if (text == "full") return NeighborhoodPolicy::full();
    if (text.rfind("top_k:", 0) == 0)
        return NeighborhoodPolicy::top_k(std::stoi(text.substr(6)));
    if (text.rfind("threshold:", 0) == 0)
        return NeighborhoodPolicy::threshold(std::stod(text.substr(10)));
    throw Error(ErrorCode::kInvalidConfig,
                "neighborhood policy must be full, top_k:<k> or threshold:<tau>");
}

inline GateMode parse_gate_mode(const std::string& text) {
    if (text == "fixed_gates") return GateMode::kFixedGates;
    if (text == "adaptive_gates") return GateMode::kAdaptiveGates;
    throw Error(ErrorCode::kInvalidConfig, "gate_mode must be fixed_gates or adaptive_gates");
}

inline UpdateSemantics parse_update_semantics(const std::string& text) {
    if (text == "outgoing_only") return UpdateSemantics::kOutgoingOnly;
    if (text == "bidirectional") return UpdateSemantics::kBidirectional;
    throw Error(ErrorCode::kInvalidConfig,
                "update_semantics must be outgoing_only or bidirectional");
}

inline PairLink parse_pair_link(const std::string& text) {
    if (text == "logistic") return PairLink::kLogistic;
    if (text == "affine_clamp") return PairLink::kAffineClamp;
    throw Error(ErrorCode::kInvalidConfig, "pair_link must be logistic or affine_clamp");
}

inline UggConfig parse_ugg_config_json(const nlohmann::json& object) {
    detail::reject_unknown_keys(object,
                                {"temp_gallery", "temp_tracklet", "alpha_positive",
                                 "alpha_negative", "iterations", "neighborhood_policy",
                                 "gate_mode", "cannot_link_masks_positive", "update_semantics"},
                                "ugg config");
    UggConfig config;
    detail::read_field(object, "temp_gallery", config.temp_gallery);
    detail::read_field(object, "temp_tracklet", config.temp_tracklet);
    detail::read_field(object, "alpha_positive", config.alpha_positive);
    detail::read_field(object, "alpha_negative", config.alpha_negative);
    detail::read_field(object, "iterations", config.iterations);
    if (object.contains("neighborhood_policy"))
        config.neighborhood_policy = detail::parse_policy_json(object.at("neighborhood_policy"));
    if (object.contains("gate_mode"))
        config.gate_mode = parse_gate_mode(object.at("gate_mode").get<std::string>());
    detail::read_field(object, "cannot_link_masks_positive", config.cannot_link_masks_positive);
    if (object.contains("update_semantics"))
        config.update_semantics =
            parse_update_semantics(object.at("update_semantics").get<std::string>());
    validate_config(config);
    return config;
}

inline ScenarioParams parse_scenario_params_json(const nlohmann::json& object) {
    detail::reject_unknown_keys(
        object,
        {"num_galleries", "num_tracklets", "seed", "low_quality_fraction", "face_signal",
         "face_noise_sigma", "body_same_identity_mean", "body_diff_identity_mean",
         "confound_rate", "cooccurrence_rate"},
        "scenario");
    ScenarioParams params;
    detail::read_field(object, "num_galleries", params.num_galleries);
    detail::read_field(object, "num_tracklets", params.num_tracklets);
    detail::read_field(object, "seed", params.seed);
    detail::read_field(object, "low_quality_fraction", params.low_quality_fraction);
    detail::read_field(object, "face_signal", params.face_signal);
    detail::read_field(object, "face_noise_sigma", params.face_noise_sigma);
    detail::read_field(object, "body_same_identity_mean", params.body_same_identity_mean);
    detail::read_field(object, "body_diff_identity_mean", params.body_diff_identity_mean);
    detail::read_field(object, "confound_rate", params.confound_rate);
    detail::read_field(object, "cooccurrence_rate", params.cooccurrence_rate);
    validate_scenario_params(params);
    return params;
}

inline JobConfig parse_job_config(const std::string& text, const std::string& origin) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kParseError, origin + ": " + e.what());
    }
    detail::require(root.is_object(), ErrorCode::kParseError, origin + ": job must be an object");
    detail::reject_unknown_keys(root,
                                {"inputs", "scenario", "ugg", "loss", "ablation", "output_dir",
                                 "emit_trace", "emit_plots", "ranking_ks"},
                                "job config");
    JobConfig config;
    if (root.contains("inputs")) {
        const auto& in = root.at("inputs");
        detail::reject_unknown_keys(
            in, {"gallery_sim", "tracklet_sim", "cannot_link", "true_identity"}, "inputs");
        MatrixInputs inputs;
        inputs.gallery_sim = in.at("gallery_sim").get<std::string>();
        inputs.tracklet_sim = in.at("tracklet_sim").get<std::string>();
        if (in.contains("cannot_link"))
            inputs.cannot_link = in.at("cannot_link").get<std::string>();
        if (in.contains("true_identity"))
            inputs.true_identity = in.at("true_identity").get<std::string>();
        config.inputs = std::move(inputs);
    }
    if (root.contains("scenario"))
        config.scenario = parse_scenario_params_json(root.at("scenario"));
    if (root.contains("ugg")) config.ugg = parse_ugg_config_json(root.at("ugg"));
    if (root.contains("loss")) {
        const auto& lo = root.at("loss");
        detail::reject_unknown_keys(lo, {"pair_weight", "pair_link", "lambda_f"}, "loss");
        detail::read_field(lo, "pair_weight", config.loss.pair_weight);
        if (lo.contains("pair_link"))
            config.loss.pair_link = parse_pair_link(lo.at("pair_link").get<std::string>());
        detail::read_field(lo, "lambda_f", config.loss.lambda_f);
        validate_loss_config(config.loss);
    }
    if (root.contains("ablation")) {
        const auto& ab = root.at("ablation");
        detail::reject_unknown_keys(ab, {"flag_sets", "num_seeds", "base_seed"}, "ablation");
        AblationJob job;
        if (ab.contains("flag_sets")) {
            job.flag_sets.clear();
            for (const auto& entry : ab.at("flag_sets"))
                job.flag_sets.push_back(
                    AblationFlags::parse(entry.get<std::vector<std::string>>()));
        }
        detail::read_field(ab, "num_seeds", job.num_seeds);
        detail::read_field(ab, "base_seed", job.base_seed);
        detail::require(job.num_seeds > 0, ErrorCode::kInvalidConfig, "num_seeds must be > 0");
        config.ablation = std::move(job);
    }
    detail::read_field(root, "output_dir", config.output_dir);
    detail::read_field(root, "emit_trace", config.emit_trace);
    detail::read_field(root, "emit_plots", config.emit_plots);
    detail::read_field(root, "ranking_ks", config.ranking_ks);
    detail::require(!config.ranking_ks.empty(), ErrorCode::kInvalidConfig,
                    "ranking_ks must not be empty");
    return config;
}

inline JobConfig load_job_config(const std::string& path) {
    std::ifstream in(path);
    detail::require(in.good(), ErrorCode::kIoError, "cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_job_config(buffer.str(), path);
}

// ============================================================
// Report / trace parsing (round-trip side)
// ============================================================

inline RankingReport parse_ranking_report(const nlohmann::json& object) {
    detail::reject_unknown_keys(object,
                                {"mean_average_precision", "per_query_average_precision",
                                 "recall_at_k", "topk_accuracy"},
                                "ranking report");
    RankingReport report;
    report.mean_average_precision = object.at("mean_average_precision").get<double>();
    for (const auto& entry : object.at("per_query_average_precision"))
        report.per_query_average_precision.push_back(
            entry.is_null() ? std::nullopt : std::optional<double>(entry.get<double>()));
    for (const auto& [key, value] : object.at("recall_at_k").items())
        report.recall_at_k[std::stoi(key)] = value.get<double>();
    for (const auto& [key, value] : object.at("topk_accuracy").items())
        report.topk_accuracy[std::stoi(key)] = value.get<double>();
    return report;
}

inline RankingReport parse_ranking_report(const std::string& text) {
    return parse_ranking_report(nlohmann::json::parse(text));
}

inline std::vector<BeliefState> parse_trace(const std::string& text) {
    const nlohmann::json root = nlohmann::json::parse(text);
    std::vector<BeliefState> trace;
    for (const auto& entry : root) {
        BeliefState state;
        state.iteration = entry.at("iteration").get<int>();
        state.positive_gate_probs = entry.at("positive_gate_probs").get<std::vector<double>>();
        state.negative_gate_probs = entry.at("negative_gate_probs").get<std::vector<double>>();
        const auto& beliefs = entry.at("node_beliefs");
        const std::size_t rows = beliefs.size();
        const std::size_t cols = rows == 0 ? 0 : beliefs.at(0).size();
        state.node_beliefs = Matrix(rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c)
                state.node_beliefs(r, c) = beliefs.at(r).at(c).get<double>();
        trace.push_back(std::move(state));
    }
    return trace;
}

// ============================================================
// Job execution
// ============================================================

struct RunJobResult {
    std::vector<std::string> written_files;
    Matrix refined_sim;
};

namespace detail {

inline std::vector<int> identities_from_matrix(const Matrix& m, int num_galleries,
                                               const std::string& origin) {
    require(m.rows() == 1, ErrorCode::kShapeMismatch,
            origin + ": true_identity must be a 1 x N matrix");
    std::vector<int> out(m.cols());
    for (std::size_t i = 0; i < m.cols(); ++i) {
        const double v = m(0, i);
        require(v == std::floor(v) && v >= 0.0 && v < static_cast<double>(num_galleries),
                ErrorCode::kLabelOutOfRange,
                origin + ": identity at column " + std::to_string(i) + " out of range");
        out[i] = static_cast<int>(v);
    }
    return out;
}

inline Matrix identities_to_matrix(const std::vector<int>& identities) {
    Matrix m(1, identities.size());
    for (std::size_t i = 0; i < identities.size(); ++i)
        m(0, i) = static_cast<double>(identities[i]);
    return m;
}

inline std::string scenario_params_to_json(const ScenarioParams& p) {
    std::string out = "{";
    out += "\"body_diff_identity_mean\":" + format_double(p.body_diff_identity_mean, 17);
    out += ",\"body_same_identity_mean\":" + format_double(p.body_same_identity_mean, 17);
    out += ",\"confound_rate\":" + format_double(p.confound_rate, 17);
    out += ",\"cooccurrence_rate\":" + format_double(p.cooccurrence_rate, 17);
    out += ",\"face_noise_sigma\":" + format_double(p.face_noise_sigma, 17);
    out += ",\"face_signal\":" + format_double(p.face_signal, 17);
    out += ",\"low_quality_fraction\":" + format_double(p.low_quality_fraction, 17);
    out += ",\"num_galleries\":" + std::to_string(p.num_galleries);
    out += ",\"num_tracklets\":" + std::to_string(p.num_tracklets);
    out += ",\"seed\":" + std::to_string(p.seed);
    out += "}";
    return out;
}

inline std::string scenario_to_json(const Scenario& scenario) {
    std::string out = "{\"params\":" + scenario_params_to_json(scenario.params);
    out += ",\"quality\":[";
    for (std::size_t i = 0; i < scenario.quality.size(); ++i) {
        if (i > 0) out += ",";
        out += scenario.quality[i] == TrackletQuality::kHigh ? "\"high\"" : "\"low\"";
    }
    out += "],\"true_identity\":[";
    for (std::size_t i = 0; i < scenario.true_identity.size(); ++i) {
        if (i > 0) out += ",";
        out += std::to_string(scenario.true_identity[i]);
    }
    out += "]}";
    return out;
}

}  // namespace detail

// Writes the generated instance, ground truth and scenario description
// into `dir`; returns the file list.
inline std::vector<std::string> write_scenario_files(const Scenario& scenario,
                                                     const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> written;
    const auto emit = [&](const std::string& name, const std::string& content) {
        const std::string path = dir + "/" + name;
        write_text_file(path, content);
        written.push_back(path);
    };
    emit("gallery_sim.mat", matrix_to_string(scenario.instance.gallery_tracklet_sim));
    emit("tracklet_sim.mat", matrix_to_string(scenario.instance.tracklet_tracklet_sim));
    emit("cannot_link.mat", matrix_to_string(scenario.instance.cannot_link));
    emit("true_identity.mat",
         matrix_to_string(detail::identities_to_matrix(scenario.true_identity)));
    emit("scenario.json", detail::scenario_to_json(scenario));
    return written;
}

// The end-to-end refinement job: load or generate an instance, run
// inference, and write the refined similarity matrix plus the optional
// trace, ranking report and plots. Deterministic: identical configs write
// byte-identical files.
inline RunJobResult run_job(const JobConfig& job) {
    detail::require(job.inputs.has_value() != job.scenario.has_value(), ErrorCode::kInvalidConfig,
                    "exactly one of inputs and scenario must be present");

    ProblemInstance instance;
    std::optional<std::vector<int>> truth;
    RunJobResult result;
    std::filesystem::create_directories(job.output_dir);

    if (job.inputs.has_value()) {
        const MatrixInputs& in = *job.inputs;
        instance.gallery_tracklet_sim = read_matrix(in.gallery_sim);
        instance.num_galleries = static_cast<int>(instance.gallery_tracklet_sim.rows());
        instance.num_tracklets = static_cast<int>(instance.gallery_tracklet_sim.cols());
        const auto n = static_cast<std::size_t>(instance.num_tracklets);
        instance.tracklet_tracklet_sim = read_matrix(in.tracklet_sim, MatrixShape{n, n});
        instance.cannot_link =
            in.cannot_link.has_value() ? read_matrix(*in.cannot_link, MatrixShape{n, n})
                                       : Matrix(n, n, 0.0);
        if (in.true_identity.has_value())
            truth = detail::identities_from_matrix(read_matrix(*in.true_identity),
                                                   instance.num_galleries, *in.true_identity);
    } else {
        const Scenario scenario = generate(*job.scenario);
        instance = scenario.instance;
        truth = scenario.true_identity;
        for (std::string& path : write_scenario_files(scenario, job.output_dir))
            result.written_files.push_back(std::move(path));
    }

    instance = validate_instance(std::move(instance));
    const bool need_trace = job.emit_trace || job.emit_plots;
    const InferenceResult inference = run_inference(instance, job.ugg, need_trace);
    result.refined_sim = inference.refined_sim;

    const auto emit = [&](const std::string& name, const std::string& content) {
        const std::string path = job.output_dir + "/" + name;
        write_text_file(path, content);
        result.written_files.push_back(path);
    };

    emit("refined_sim.mat", matrix_to_string(inference.refined_sim));
    if (job.emit_trace) emit("trace.json", trace_to_json(inference.trace));

    if (truth.has_value()) {
        const RankingReport report =
            make_ranking_report(inference.refined_sim, *truth, job.ranking_ks);
        emit("report.json", ranking_report_to_json(report));
        emit("report.tsv", ranking_reports_to_tsv({report}));

        if (job.emit_plots) {
            PlotSeries top1{"top1_accuracy", {}};
            PlotSeries map_series{"mean_average_precision", {}};
            for (const BeliefState& state : inference.trace) {
                top1.values.push_back(topk_accuracy(state.node_beliefs, *truth, 1));
                map_series.values.push_back(mean_average_precision(
                    state.node_beliefs,
                    relevance_from_true_identity(*truth, instance.num_galleries)));
            }
            emit("metric_vs_iteration.svg",
                 svg_line_plot("ranking quality per round", "round", "metric",
                               {top1, map_series}));
        }
    }
    if (job.emit_plots && !inference.trace.empty()) {
        emit("gate_histogram_initial.svg",
             svg_histogram("positive gate probabilities, round 0",
                           inference.trace.front().positive_gate_probs, 20, 0.0, 1.0));
        emit("gate_histogram_final.svg",
             svg_histogram("positive gate probabilities, final round",
                           inference.trace.back().positive_gate_probs, 20, 0.0, 1.0));
    }
    return result;
}

}  // namespace ugg
