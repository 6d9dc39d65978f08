#pragma once

#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "tablegraph/agent.hpp"
#include "tablegraph/scenario.hpp"
#include "tablegraph/types.hpp"

namespace tablegraph {

// ---------------------------------------------------------------------------
// Episode scoring
// ---------------------------------------------------------------------------

struct EpisodeScore {
    std::string scenario_id;
    int sr = 0;
    std::optional<int> cqr; // only for ambiguous single-agent scenarios
    bool errored = false;
};

namespace detail {
inline bool is_ambiguous_single(const Scenario& s) {
    return s.mode == WorldMode::single_agent &&
           (s.label == AmbiguityTag::multiplicity || s.label == AmbiguityTag::absence ||
            s.label == AmbiguityTag::underspecified);
}

inline bool replay_reaches_goal(const Scenario& scenario, const std::vector<Action>& actions) {
    WorldState world = scenario.world;
    for (auto& action : actions) {
        auto [next, outcome] = apply(world, scenario.acting_agent(), action);
        if (!outcome.ok) return false;
        world = std::move(next);
    }
    return goal_satisfied(world, scenario.goal);
}
} // namespace detail

/// Pure scoring of one transcript against its scenario. Clear single-agent
/// trials need the goal reached by the final sequence; ambiguous ones need
/// exactly one ask, with CQR additionally requiring the right tag; dual
/// trials follow the transfer goal's expected behavior. Errored transcripts
/// score 0 and are flagged.
inline EpisodeScore score(const Transcript& transcript, const Scenario& scenario) {
    if (transcript.scenario_id != scenario.id)
        throw std::invalid_argument("transcript " + transcript.scenario_id +
                                    " does not match scenario " + scenario.id);
    EpisodeScore s;
    s.scenario_id = scenario.id;
    if (detail::is_ambiguous_single(scenario)) s.cqr = 0;
    if (transcript.status == TranscriptStatus::errored) {
        s.errored = true;
        return s;
    }
    const auto& final = transcript.final_actions;
    if (scenario.mode == WorldMode::dual_agent) {
        const auto* goal = std::get_if<TransferGoal>(&scenario.goal);
        if (!goal) return s;
        if (goal->expected_ask) {
            s.sr = final.size() == 1 && std::holds_alternative<AskRobot>(final.front()) ? 1 : 0;
            return s;
        }
        if (final.size() == 1)
            if (const auto* pp = std::get_if<PickAndPlace>(&final.front()))
                if (pp->pick == goal->pick && pp->place == goal->place)
                    s.sr = detail::replay_reaches_goal(scenario, final) ? 1 : 0;
        return s;
    }
    if (scenario.label == AmbiguityTag::clear) {
        if (transcript.status != TranscriptStatus::completed) return s;
        bool physical = !final.empty();
        for (auto& a : final)
            if (!std::holds_alternative<PickAndPlace>(a)) physical = false;
        if (physical && detail::replay_reaches_goal(scenario, final)) s.sr = 1;
        return s;
    }
    // ambiguous single-agent: exactly one user-directed clarification
    if (final.size() == 1)
        if (const auto* ask = std::get_if<Ask>(&final.front())) {
            s.sr = 1;
            s.cqr = ask->tag == scenario.label ? 1 : 0;
        }
    return s;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct CategoryStats {
    int n = 0; // scored (non-errored) episodes
    double sr = 0.0;
    std::optional<double> cqr;

    bool operator==(const CategoryStats&) const = default;
};

struct Report {
    std::vector<std::pair<std::string, CategoryStats>> per_category; // canonical order
    int episodes = 0;
    int errored = 0;
    double overall_sr = 0.0;           // all episodes, errored counted as 0
    double overall_sr_ambiguous = 0.0; // ambiguous episodes only (second reading)
    std::optional<double> overall_cqr; // ambiguous episodes only
    double calls_per_episode = 0.0;
    double avg_tokens_in_per_call = 0.0;
    double avg_tokens_out_per_call = 0.0;
    bool tokens_approx = false;
    Json config_echo = Json::object();

    bool operator==(const Report& other) const {
        return per_category == other.per_category && episodes == other.episodes &&
               errored == other.errored && overall_sr == other.overall_sr &&
               overall_sr_ambiguous == other.overall_sr_ambiguous &&
               overall_cqr == other.overall_cqr && calls_per_episode == other.calls_per_episode &&
               avg_tokens_in_per_call == other.avg_tokens_in_per_call &&
               avg_tokens_out_per_call == other.avg_tokens_out_per_call &&
               tokens_approx == other.tokens_approx && config_echo == other.config_echo;
    }
};

inline const std::vector<AmbiguityTag>& category_order() {
    static const std::vector<AmbiguityTag> order{AmbiguityTag::multiplicity, AmbiguityTag::absence,
                                                 AmbiguityTag::underspecified,
                                                 AmbiguityTag::occluded, AmbiguityTag::clear};
    return order;
}

/// Folds episode scores into per-category and overall means plus the cost
/// summary. Cost counters come from the transcripts, keyed by scenario id.
inline Report aggregate(const std::vector<EpisodeScore>& scores,
                        const std::vector<Scenario>& suite,
                        const std::vector<CostCounters>& costs = {},
                        const Json& config_echo = Json::object()) {
    if (scores.empty()) throw std::invalid_argument("no episode scores to aggregate");
    std::map<std::string, const Scenario*> by_id;
    for (auto& s : suite) by_id[s.id] = &s;

    struct Tally {
        int n = 0;
        int sr = 0;
        int cqr_n = 0;
        int cqr = 0;
    };
    std::map<AmbiguityTag, Tally> tallies;
    Report report;
    report.config_echo = config_echo;
    int sr_total = 0, ambiguous_n = 0, ambiguous_sr = 0, cqr_total = 0, cqr_n = 0;
    for (auto& score : scores) {
        auto it = by_id.find(score.scenario_id);
        if (it == by_id.end())
            throw std::invalid_argument("score references unknown scenario " + score.scenario_id);
        const Scenario& scenario = *it->second;
        report.episodes += 1;
        sr_total += score.sr;
        if (score.errored) {
            report.errored += 1;
            continue; // sr counted as 0 above; excluded from category means and CQR
        }
        Tally& t = tallies[scenario.label];
        t.n += 1;
        t.sr += score.sr;
        if (score.cqr) {
            t.cqr_n += 1;
            t.cqr += *score.cqr;
            cqr_n += 1;
            cqr_total += *score.cqr;
        }
        if (scenario.label != AmbiguityTag::clear) {
            ambiguous_n += 1;
            ambiguous_sr += score.sr;
        }
    }
    for (auto tag : category_order()) {
        auto it = tallies.find(tag);
        if (it == tallies.end()) continue;
        CategoryStats stats;
        stats.n = it->second.n;
        stats.sr = static_cast<double>(it->second.sr) / it->second.n;
        if (it->second.cqr_n > 0)
            stats.cqr = static_cast<double>(it->second.cqr) / it->second.cqr_n;
        report.per_category.push_back({to_string(tag), stats});
    }
    report.overall_sr = static_cast<double>(sr_total) / report.episodes;
    report.overall_sr_ambiguous =
        ambiguous_n ? static_cast<double>(ambiguous_sr) / ambiguous_n : 0.0;
    if (cqr_n > 0) report.overall_cqr = static_cast<double>(cqr_total) / cqr_n;

    long calls = 0, tokens_in = 0, tokens_out = 0;
    for (auto& cost : costs) {
        calls += cost.calls;
        tokens_in += std::accumulate(cost.tokens_in.begin(), cost.tokens_in.end(), 0L);
        tokens_out += std::accumulate(cost.tokens_out.begin(), cost.tokens_out.end(), 0L);
        if (cost.approx) report.tokens_approx = true;
    }
    if (!costs.empty()) {
        report.calls_per_episode = static_cast<double>(calls) / static_cast<double>(costs.size());
        if (calls > 0) {
            report.avg_tokens_in_per_call = static_cast<double>(tokens_in) / static_cast<double>(calls);
            report.avg_tokens_out_per_call = static_cast<double>(tokens_out) / static_cast<double>(calls);
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace detail {
inline std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}
} // namespace detail

/// Aligned table: one column per category plus Overall, rows SR / CQR / n,
/// then the cost block. Column order is fixed, so output diffs cleanly.
inline std::string render_report(const Report& report) {
    std::string out;
    out += "ambiguity benchmark report\n";
    out += "==========================\n";
    out += "episodes: " + std::to_string(report.episodes) +
           " (errored: " + std::to_string(report.errored) + ")\n";
    out += "note: CQR averages over ambiguous episodes only; errored episodes count as SR=0 "
           "and are excluded from category means\n";
    if (!report.config_echo.empty()) out += "config: " + report.config_echo.dump() + "\n";
    out += "\n";

    const std::size_t width = 16;
    std::string header = detail::pad_left("metric", 8);
    for (auto& [name, stats] : report.per_category) {
        (void)stats;
        header += detail::pad_left(name, width);
    }
    header += detail::pad_left("overall", width);
    out += header + "\n";

    std::string sr_row = detail::pad_left("SR", 8);
    for (auto& [name, stats] : report.per_category) {
        (void)name;
        sr_row += detail::pad_left(detail::fixed3(stats.sr), width);
    }
    sr_row += detail::pad_left(detail::fixed3(report.overall_sr), width);
    out += sr_row + "\n";

    std::string cqr_row = detail::pad_left("CQR", 8);
    for (auto& [name, stats] : report.per_category) {
        (void)name;
        cqr_row += detail::pad_left(stats.cqr ? detail::fixed3(*stats.cqr) : "-", width);
    }
    cqr_row += detail::pad_left(report.overall_cqr ? detail::fixed3(*report.overall_cqr) : "-", width);
    out += cqr_row + "\n";

    std::string n_row = detail::pad_left("n", 8);
    int n_total = 0;
    for (auto& [name, stats] : report.per_category) {
        (void)name;
        n_row += detail::pad_left(std::to_string(stats.n), width);
        n_total += stats.n;
    }
    n_row += detail::pad_left(std::to_string(n_total), width);
    out += n_row + "\n\n";

    out += "overall SR (all episodes): " + detail::fixed3(report.overall_sr) + "\n";
    out += "overall SR (ambiguous only): " + detail::fixed3(report.overall_sr_ambiguous) + "\n\n";

    out += "cost\n";
    out += "----\n";
    std::string approx = report.tokens_approx ? " (approx)" : "";
    out += "calls/episode: " + detail::fixed3(report.calls_per_episode) + "\n";
    out += "avg input tokens/call: " + detail::fixed3(report.avg_tokens_in_per_call) + approx + "\n";
    out += "avg output tokens/call: " + detail::fixed3(report.avg_tokens_out_per_call) + approx + "\n";
    return out;
}

inline Json report_to_json(const Report& report) {
    Json j;
    Json categories = Json::array();
    for (auto& [name, stats] : report.per_category) {
        Json c{{"label", name}, {"n", stats.n}, {"sr", stats.sr}};
        if (stats.cqr) c["cqr"] = *stats.cqr;
        categories.push_back(c);
    }
    j["categories"] = categories;
    j["episodes"] = report.episodes;
    j["errored"] = report.errored;
    j["overall_sr"] = report.overall_sr;
    j["overall_sr_ambiguous"] = report.overall_sr_ambiguous;
    if (report.overall_cqr) j["overall_cqr"] = *report.overall_cqr;
    j["cost"] = Json{{"calls_per_episode", report.calls_per_episode},
                     {"avg_tokens_in_per_call", report.avg_tokens_in_per_call},
                     {"avg_tokens_out_per_call", report.avg_tokens_out_per_call},
                     {"approx", report.tokens_approx}};
    j["config"] = report.config_echo;
    return j;
}

inline Report report_from_json(const Json& j) {
    Report report;
    for (auto& c : j.value("categories", Json::array())) {
        CategoryStats stats;
        stats.n = c.value("n", 0);
        stats.sr = c.value("sr", 0.0);
        if (c.contains("cqr")) stats.cqr = c.at("cqr").get<double>();
        report.per_category.push_back({c.value("label", ""), stats});
    }
    report.episodes = j.value("episodes", 0);
    report.errored = j.value("errored", 0);
    report.overall_sr = j.value("overall_sr", 0.0);
    report.overall_sr_ambiguous = j.value("overall_sr_ambiguous", 0.0);
    if (j.contains("overall_cqr")) report.overall_cqr = j.at("overall_cqr").get<double>();
    if (j.contains("cost")) {
        const Json& c = j.at("cost");
        report.calls_per_episode = c.value("calls_per_episode", 0.0);
        report.avg_tokens_in_per_call = c.value("avg_tokens_in_per_call", 0.0);
        report.avg_tokens_out_per_call = c.value("avg_tokens_out_per_call", 0.0);
        report.tokens_approx = c.value("approx", false);
    }
    report.config_echo = j.value("config", Json::object());
    return report;
}

} // namespace tablegraph
