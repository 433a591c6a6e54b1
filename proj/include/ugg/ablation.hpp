#pragma once

#include <span>
#include <string>
#include <vector>

#include "ugg/errors.hpp"
#include "ugg/inference.hpp"
#include "ugg/metrics.hpp"
#include "ugg/synth.hpp"

namespace ugg {

// ============================================================
// Ablation harness
// ============================================================

// Feature toggles, each mapped onto the corresponding UggConfig fields:
//   PG   — propagate positive information through gates (alpha_p active),
//          gates frozen at their round-0 value;
//   PGcl — PG with positive gates forced closed on cannot-link edges;
//   NG   — propagate negative information (alpha_n active);
//   aG   — re-estimate positive gates adaptively each round.
// The empty set is the unrefined baseline: no propagation at all.
struct AblationFlags {
    bool pg = false;
    bool pgcl = false;  // implies pg
    bool ng = false;
    bool ag = false;

    std::string name() const {
        if (!pg && !pgcl && !ng && !ag) return "FACE";
        std::string out;
        const auto add = [&out](const char* flag) {
            if (!out.empty()) out += "+";
            out += flag;
        };
        if (pgcl)
            add("PGcl");
        else if (pg)
            add("PG");
        if (ng) add("NG");
        if (ag) add("aG");
        return out;
    }

    static AblationFlags parse(const std::vector<std::string>& names) {
        AblationFlags flags;
        for (const std::string& name : names) {
            if (name == "PG")
                flags.pg = true;
            else if (name == "PGcl")
                flags.pgcl = true;
            else if (name == "NG")
                flags.ng = true;
            else if (name == "aG")
                flags.ag = true;
            else
                throw Error(ErrorCode::kInvalidParams, "unknown ablation flag '" + name + "'");
        }
        if (flags.pgcl) flags.pg = true;
        return flags;
    }
};

// Message-passing weights calibrated for the synthetic generator's
// similarity scales. The generator's clamped two-level similarities are
// sharper than real cosine features, so the gallery temperature runs much
// lower than the UggConfig defaults; with it, adaptive gates improve every
// fixed-gate configuration on the default desk profile.
inline UggConfig synthetic_benchmark_config() {
    UggConfig config;
    config.temp_gallery = 2.0;
    config.temp_tracklet = 5.0;
    config.alpha_positive = 5.0;
    config.alpha_negative = 1.0;
    config.iterations = 4;
    return config;
}

// The standard sweep, from bare baseline to the full model.
inline std::vector<AblationFlags> standard_ablation_flags() {
    const auto parse = [](std::initializer_list<const char*> names) {
        return AblationFlags::parse(std::vector<std::string>(names.begin(), names.end()));
    };
    return {
        parse({}),
        parse({"PG"}),
        parse({"PGcl"}),
        parse({"PGcl", "NG"}),
        parse({"PG", "aG"}),
        parse({"PGcl", "aG"}),
        parse({"PGcl", "NG", "aG"}),
    };
}

// Projects a flag set onto a runnable configuration. Message weights are
// zeroed for disabled channels; everything else comes from the base config.
inline UggConfig apply_ablation_flags(const UggConfig& base, const AblationFlags& flags) {
    UggConfig config = base;
    config.alpha_positive = flags.pg ? base.alpha_positive : 0.0;
    config.alpha_negative = flags.ng ? base.alpha_negative : 0.0;
    config.cannot_link_masks_positive = flags.pgcl;
    config.gate_mode = flags.ag ? GateMode::kAdaptiveGates : GateMode::kFixedGates;
    return config;
}

struct AblationRow {
    AblationFlags flags;
    RankingReport mean_report;                 // metrics averaged over scenarios
    std::vector<RankingReport> per_scenario;   // per-seed detail, scenario order
};

namespace detail {

inline RankingReport mean_reports(const std::vector<RankingReport>& reports) {
    RankingReport mean;
    if (reports.empty()) return mean;
    const double count = static_cast<double>(reports.size());
    for (const RankingReport& r : reports) {
        mean.mean_average_precision += r.mean_average_precision / count;
        for (const auto& [k, v] : r.recall_at_k) mean.recall_at_k[k] += v / count;
        for (const auto& [k, v] : r.topk_accuracy) mean.topk_accuracy[k] += v / count;
    }
    return mean;
}

}  // namespace detail

// Runs inference on every scenario under every flag set and aggregates the
// ranking metrics. Scenarios must share the gallery count. Requesting NG
// when no scenario carries a single cannot-link is an error (the flag
// could silently change nothing).
inline std::vector<AblationRow> run_ablation(std::span<const Scenario> scenarios,
                                             const UggConfig& base_config,
                                             std::span<const AblationFlags> flag_sets,
                                             const std::vector<int>& ks = {1, 3, 5}) {
    detail::require(!scenarios.empty(), ErrorCode::kInvalidParams, "no scenarios given");
    const int c = scenarios.front().instance.num_galleries;
    for (const Scenario& s : scenarios)
        detail::require(s.instance.num_galleries == c, ErrorCode::kDimensionMismatch,
                        "scenarios must share the gallery count");

    bool any_ng = false;
    for (const AblationFlags& flags : flag_sets) any_ng = any_ng || flags.ng;
    if (any_ng) {
        bool any_link = false;
        for (const Scenario& s : scenarios) {
            for (double v : s.instance.cannot_link.data())
                if (v != 0.0) {
                    any_link = true;
                    break;
                }
            if (any_link) break;
        }
        detail::require(any_link, ErrorCode::kNgRequestedWithoutCannotLinks,
                        "NG requested but no scenario has any cannot-link");
    }

    std::vector<AblationRow> rows;
    rows.reserve(flag_sets.size());
    for (const AblationFlags& flags : flag_sets) {
        AblationRow row;
        row.flags = flags;
        const UggConfig config = apply_ablation_flags(base_config, flags);
        for (const Scenario& scenario : scenarios) {
            const InferenceResult result = run_inference(scenario.instance, config);
            row.per_scenario.push_back(
                make_ranking_report(result.refined_sim, scenario.true_identity, ks));
        }
        row.mean_report = detail::mean_reports(row.per_scenario);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace ugg
