#pragma once

#include <sstream>
#include <string>

#include "tablegraph/agent.hpp"
#include "tablegraph/types.hpp"

namespace tablegraph {

inline Json action_to_json(const Action& action) {
    if (const auto* a = std::get_if<PickAndPlace>(&action))
        return Json{{"action", "pick_and_place"}, {"pick", a->pick}, {"place", a->place}};
    if (const auto* a = std::get_if<Ask>(&action))
        return Json{{"action", "ask"}, {"question", a->question}, {"tag", to_string(a->tag)}};
    const auto& a = std::get<AskRobot>(action);
    return Json{{"action", "ask_robot"}, {"question", a.question}};
}

inline Action action_from_json(const Json& j) {
    std::string kind = j.value("action", "");
    if (kind == "pick_and_place")
        return PickAndPlace{j.at("pick").get<std::string>(), j.at("place").get<std::string>()};
    if (kind == "ask") {
        auto tag = ambiguity_from_string(j.value("tag", ""));
        if (!tag) throw ParseError("unknown tag at action.tag");
        return Ask{j.at("question").get<std::string>(), *tag};
    }
    if (kind == "ask_robot") return AskRobot{j.at("question").get<std::string>()};
    throw ParseError("unknown action at action.action");
}

inline Json outcome_to_json(const ActionOutcome& o) {
    return Json{{"ok", o.ok}, {"violation", to_string(o.violation)}, {"detail", o.detail}};
}

inline ActionOutcome outcome_from_json(const Json& j) {
    ActionOutcome o;
    o.ok = j.value("ok", false);
    std::string v = j.value("violation", "none");
    for (auto candidate : {Violation::none, Violation::occluded_target, Violation::holding,
                           Violation::no_such_object, Violation::same_object, Violation::occupied,
                           Violation::not_a_receptacle})
        if (v == to_string(candidate)) o.violation = candidate;
    o.detail = j.value("detail", "");
    return o;
}

/// Transcript file format: JSON lines. One episode header, one record per
/// turn, one trailing summary with the final actions, outcomes and cost.
inline std::string transcript_to_jsonl(const Transcript& tr) {
    std::string out;
    Json header{{"type", "episode"},
                {"scenario_id", tr.scenario_id},
                {"instruction", tr.instruction_text},
                {"graph_mode", to_string(tr.config.graph_mode)},
                {"max_turns", tr.config.max_turns},
                {"prompt", tr.history.initial_prompt}};
    out += header.dump() + "\n";
    for (std::size_t i = 0; i < tr.history.turns.size(); ++i) {
        const Turn& turn = tr.history.turns[i];
        Json j{{"type", "turn"}, {"t", i}, {"raw", turn.raw}, {"thought", turn.thought}};
        switch (turn.kind) {
            case ParsedOutput::Kind::tool_calls: {
                j["kind"] = "tool_calls";
                Json calls = Json::array();
                for (auto& call : turn.calls) {
                    Json args = Json::array();
                    for (auto& [k, v] : call.args) args.push_back(Json::array({k, v}));
                    calls.push_back({{"name", call.name}, {"args", args}});
                }
                j["calls"] = calls;
                j["results"] = turn.call_results;
                j["result"] = turn.tool_result;
                break;
            }
            case ParsedOutput::Kind::actions: {
                j["kind"] = "actions";
                Json actions = Json::array();
                for (auto& a : turn.actions) actions.push_back(action_to_json(a));
                j["actions"] = actions;
                break;
            }
            case ParsedOutput::Kind::malformed:
                j["kind"] = "malformed";
                j["result"] = turn.tool_result;
                break;
        }
        out += j.dump() + "\n";
    }
    Json summary{{"type", "summary"},
                 {"scenario_id", tr.scenario_id},
                 {"status", to_string(tr.status)},
                 {"error", tr.error},
                 {"conclusion_at", tr.history.conclusion_at
                                       ? Json(*tr.history.conclusion_at)
                                       : Json(nullptr)}};
    Json final = Json::array();
    for (auto& a : tr.final_actions) final.push_back(action_to_json(a));
    summary["final"] = final;
    Json outcomes = Json::array();
    for (auto& o : tr.outcomes) outcomes.push_back(outcome_to_json(o));
    summary["outcomes"] = outcomes;
    summary["cost"] = Json{{"calls", tr.cost.calls},
                           {"tokens_in", tr.cost.tokens_in},
                           {"tokens_out", tr.cost.tokens_out},
                           {"approx", tr.cost.approx}};
    out += summary.dump() + "\n";
    return out;
}

inline Transcript transcript_from_jsonl(const std::string& text) {
    Transcript tr;
    std::istringstream stream(text);
    std::string line;
    bool saw_header = false, saw_summary = false;
    std::size_t line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const std::exception& e) {
            throw ParseError("malformed JSONL at line " + std::to_string(line_no) + ": " + e.what());
        }
        std::string type = j.value("type", "");
        if (type == "episode") {
            tr.scenario_id = j.value("scenario_id", "");
            tr.instruction_text = j.value("instruction", "");
            if (auto mode = graph_mode_from_string(j.value("graph_mode", "query")))
                tr.config.graph_mode = *mode;
            tr.config.max_turns = j.value("max_turns", 8);
            tr.history.initial_prompt = j.value("prompt", "");
            saw_header = true;
        } else if (type == "turn") {
            Turn turn;
            turn.raw = j.value("raw", "");
            // thought/kind/calls/actions re-derive from the raw text; results
            // come from the file (they cannot be re-executed here)
            ParsedOutput parsed = parse_policy_output(turn.raw);
            turn.thought = parsed.thought;
            turn.kind = parsed.kind;
            turn.calls = parsed.calls;
            turn.actions = parsed.actions;
            if (j.contains("results"))
                for (auto& r : j.at("results")) turn.call_results.push_back(r.get<std::string>());
            turn.tool_result = j.value("result", "");
            tr.history.turns.push_back(std::move(turn));
        } else if (type == "summary") {
            auto status = j.value("status", "completed");
            tr.status = status == "failed"    ? TranscriptStatus::failed
                        : status == "errored" ? TranscriptStatus::errored
                                              : TranscriptStatus::completed;
            tr.error = j.value("error", "");
            if (j.contains("conclusion_at") && !j.at("conclusion_at").is_null())
                tr.history.conclusion_at = j.at("conclusion_at").get<std::size_t>();
            for (auto& a : j.value("final", Json::array())) tr.final_actions.push_back(action_from_json(a));
            for (auto& o : j.value("outcomes", Json::array())) tr.outcomes.push_back(outcome_from_json(o));
            if (j.contains("cost")) {
                const Json& c = j.at("cost");
                tr.cost.calls = c.value("calls", 0);
                for (auto& t : c.value("tokens_in", Json::array())) tr.cost.tokens_in.push_back(t.get<long>());
                for (auto& t : c.value("tokens_out", Json::array())) tr.cost.tokens_out.push_back(t.get<long>());
                tr.cost.approx = c.value("approx", false);
            }
            saw_summary = true;
        } else {
            throw ParseError("unknown record type at line " + std::to_string(line_no));
        }
    }
    if (!saw_header) throw ParseError("transcript has no episode record");
    if (!saw_summary) throw ParseError("transcript has no summary record");
    return tr;
}

/// Dialogue view of a transcript, one prefixed line per utterance.
inline std::string render_dialogue(const Transcript& tr) {
    std::string out = "User: " + tr.instruction_text + "\n";
    for (auto& turn : tr.history.turns) {
        std::istringstream lines(turn.raw);
        std::string line;
        while (std::getline(lines, line))
            if (!detail::trim(line).empty()) out += "LLM: " + detail::trim(line) + "\n";
        if (turn.kind != ParsedOutput::Kind::actions) out += "SG: " + turn.tool_result + "\n";
    }
    return out;
}

} // namespace tablegraph
