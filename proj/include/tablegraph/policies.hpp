#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tablegraph/agent.hpp"
#include "tablegraph/scenario.hpp"

namespace tablegraph {

namespace detail {

/// Inverse of render_id_list: "['a', 'b']" -> {a, b}.
inline std::vector<std::string> parse_id_list(const std::string& rendered) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (true) {
        std::size_t open = rendered.find('\'', i);
        if (open == std::string::npos) break;
        std::size_t close = rendered.find('\'', open + 1);
        if (close == std::string::npos) break;
        out.push_back(rendered.substr(open + 1, close - open - 1));
        i = close + 1;
    }
    return out;
}

/// Extracts the sources from a rendered retrieve_edge result, e.g.
/// "the a is left_of the x, the b is left_of the x" -> {a, b}.
inline std::vector<std::string> parse_edge_sources(const std::string& rendered,
                                                   const std::string& relation) {
    std::vector<std::string> out;
    if (rendered == "[]") return out;
    std::string sep = " is " + relation + " the ";
    std::size_t pos = 0;
    while (pos < rendered.size()) {
        std::size_t start = rendered.find("the ", pos);
        if (start == std::string::npos) break;
        std::size_t mid = rendered.find(sep, start);
        if (mid == std::string::npos) break;
        out.push_back(rendered.substr(start + 4, mid - start - 4));
        std::size_t next = rendered.find(", the ", mid);
        if (next == std::string::npos) break;
        pos = next + 2;
    }
    return out;
}

inline std::string quote(const std::string& s) { return "'" + s + "'"; }

/// Canonical filter order for emitted retrieve_node calls: type first, the
/// rest in key order.
inline std::string node_filter_args(const AttributeMap& attrs) {
    std::string out;
    auto type = attrs.find("type");
    if (type != attrs.end()) out += "type=" + quote(type->second);
    for (auto& [k, v] : attrs) {
        if (k == "type") continue;
        out += (out.empty() ? "" : ", ") + k + "=" + quote(v);
    }
    return out;
}

inline std::string join_or(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += i + 1 == ids.size() ? " or the " : ", the ";
        out += ids[i];
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Oracle policy
// ---------------------------------------------------------------------------

/// Deterministic reference agent. It reads only the structured instruction
/// and its own tool results, so degraded graphs degrade it honestly; it never
/// peeks at world ground truth.
class OraclePolicy : public Policy {
public:
    explicit OraclePolicy(Scenario scenario) : scenario_(std::move(scenario)) {}

    PolicyReply step(const History& history) override { return {decide(history), std::nullopt}; }

private:
    Scenario scenario_;

    struct Seen {
        std::optional<std::vector<std::string>> pick_ids;
        std::optional<std::vector<std::string>> place_ids;
        std::optional<std::vector<std::string>> ref_ids;
        std::optional<std::vector<std::string>> spatial_ids;
        std::optional<std::vector<std::string>> block_ids;
        std::optional<std::vector<std::string>> bowl_ids;
        bool investigated = false;
    };

    static std::string thought_and(const std::string& thought, const std::string& calls) {
        return thought + "\n" + calls;
    }

    std::string ask_multiplicity(const std::vector<std::string>& ids) const {
        return thought_and(
            "More than one object satisfies the instruction, so the request is ambiguous. I "
            "should ask for clarification.",
            "ask_multiplicity(\"Did you mean the " + detail::join_or(ids) + "?\")");
    }

    std::string ask_absence(const std::string& what) const {
        return thought_and(
            "No object in view satisfies the instruction. I should ask for clarification.",
            "ask_absence(\"I cannot find the " + what + ". Could you point it out or rephrase?\")");
    }

    std::string investigate(const std::vector<std::string>& ids) const {
        std::string calls;
        for (auto& id : ids)
            calls += (calls.empty() ? "" : "\n") + ("retrieve_edge(source=" + detail::quote(id) + ")");
        return thought_and(
            "There are multiple matching objects. I will inspect their relations before asking.",
            calls);
    }

    std::string decide(const History& history) const {
        const auto& pick = scenario_.instruction.pick;
        const auto& place = scenario_.instruction.place;
        bool dual = scenario_.mode == WorldMode::dual_agent;

        if (pick && pick->vague)
            return thought_and(
                "The instruction does not specify which object to pick up. I need clarification.",
                "ask_underspecified(\"Which object should I pick up?\")");
        if (place && place->vague)
            return thought_and(
                "The instruction does not specify the target location. I need clarification.",
                "ask_underspecified(\"Where should I place the " + referent_phrase(*pick) + "?\")");

        Seen seen = replay(history);
        if (scenario_.instruction.task == TaskKind::long_horizon) return long_horizon(seen);

        if (pick->direction) {
            // ground the reference, then the direction ray
            if (!seen.ref_ids)
                return thought_and("I will locate the reference object first.",
                                   "retrieve_node(" + detail::node_filter_args(pick->reference->attributes) + ")");
            if (seen.ref_ids->empty()) return ask_absence(referent_phrase(*pick->reference));
            if (seen.ref_ids->size() > 1) return ask_multiplicity(*seen.ref_ids);
            if (!seen.spatial_ids) {
                std::string rel = direction_relation(*pick->direction);
                return thought_and(
                    "The reference grounds uniquely. I will query objects positioned " + rel +
                        " it.",
                    "retrieve_edge(relation=" + detail::quote(rel) + ", target=" +
                        detail::quote(seen.ref_ids->front()) + ")");
            }
            return resolve_pick(*seen.spatial_ids, seen, dual, /*spatial=*/true);
        }
        if (!seen.pick_ids)
            return thought_and("I will identify the object requested by the instruction.",
                               "retrieve_node(" + detail::node_filter_args(pick->attributes) + ")");
        return resolve_pick(*seen.pick_ids, seen, dual, /*spatial=*/false);
    }

    std::string resolve_pick(const std::vector<std::string>& pick_ids, const Seen& seen, bool dual,
                             bool spatial) const {
        const auto& pick = *scenario_.instruction.pick;
        const auto& place = scenario_.instruction.place;
        if (pick_ids.empty()) {
            if (dual)
                return thought_and(
                    "The requested object is not in my view. I will ask the other robot about "
                    "its workspace.",
                    "ask_robot(\"Do you see the " + referent_phrase(pick) + " in your workspace?\")");
            return ask_absence(referent_phrase(pick));
        }
        if (pick_ids.size() > 1) {
            // one evidence turn before asking, except when the spatial query
            // already provided it
            if (!spatial && !seen.investigated) return investigate(pick_ids);
            return ask_multiplicity(pick_ids);
        }
        const std::string& pick_id = pick_ids.front();
        if (!place) // an instruction without a place slot cannot be executed
            return thought_and(
                "The instruction names no target location. I need clarification.",
                "ask_underspecified(\"Where should I place the " + pick_id + "?\")");
        if (!dual)
            // place referents are unique by construction in single-agent
            // scenes and ids follow the "<color> <type>" convention
            return place_action(pick_id, referent_phrase(*place));
        if (!seen.place_ids)
            return thought_and(
                "The pick target grounds uniquely. I will now check whether the receptacle is "
                "in my view.",
                "retrieve_node(" + detail::node_filter_args(place->attributes) + ")");
        if (seen.place_ids->empty())
            return thought_and(
                "The receptacle is not in my view. I will hand the object over via the shared "
                "workspace.",
                "pick_and_place(" + detail::quote(pick_id) + ", 'shared')");
        if (seen.place_ids->size() > 1) return ask_multiplicity(*seen.place_ids);
        return place_action(pick_id, seen.place_ids->front());
    }

    std::string place_action(const std::string& pick_id, const std::string& place_id) const {
        return thought_and("The request grounds uniquely. I will execute the placement.",
                           "pick_and_place(" + detail::quote(pick_id) + ", " +
                               detail::quote(place_id) + ")");
    }

    std::string long_horizon(const Seen& seen) const {
        if (!seen.block_ids)
            return thought_and("I will list the blocks and bowls to pair them by color.",
                               "retrieve_node(type='block')\nretrieve_node(type='bowl')");
        std::string calls;
        for (auto& block : *seen.block_ids) {
            // ids follow the "<color> block" convention
            std::string color = block.size() > 6 ? block.substr(0, block.size() - 6) : block;
            std::string bowl = color + " bowl";
            bool found = false;
            for (auto& b : *seen.bowl_ids)
                if (b == bowl) found = true;
            if (!found) return ask_absence(color + " bowl");
            calls += (calls.empty() ? "" : "\n") +
                     ("pick_and_place(" + detail::quote(block) + ", " + detail::quote(bowl) + ")");
        }
        if (calls.empty()) return ask_absence("blocks to place");
        return thought_and(
            "Each block pairs with the bowl of its color. I will place them in order.", calls);
    }

    /// Reconstructs what earlier turns established from their call shapes.
    Seen replay(const History& history) const {
        Seen seen;
        const auto& pick = scenario_.instruction.pick;
        const auto& place = scenario_.instruction.place;
        for (auto& turn : history.turns) {
            if (turn.kind != ParsedOutput::Kind::tool_calls || turn.calls.empty()) continue;
            const ToolCall& first = turn.calls.front();
            if (first.name == "retrieve_edge") {
                if (!first.args.empty() && first.args.front().first == "relation" && pick &&
                    pick->direction) {
                    seen.spatial_ids = detail::parse_edge_sources(
                        turn.call_results.front(), direction_relation(*pick->direction));
                } else {
                    seen.investigated = true;
                }
                continue;
            }
            if (first.name != "retrieve_node") continue;
            if (scenario_.instruction.task == TaskKind::long_horizon && turn.calls.size() == 2) {
                seen.block_ids = detail::parse_id_list(turn.call_results[0]);
                seen.bowl_ids = detail::parse_id_list(turn.call_results[1]);
                continue;
            }
            std::string args;
            for (auto& [k, v] : first.args) args += k + "=" + v + ";";
            auto matches = [&](const AttributeMap& attrs) {
                std::string want;
                auto type = attrs.find("type");
                if (type != attrs.end()) want += "type=" + type->second + ";";
                for (auto& [k, v] : attrs) {
                    if (k == "type") continue;
                    want += k + "=" + v + ";";
                }
                return want == args;
            };
            if (pick && pick->direction && matches(pick->reference->attributes))
                seen.ref_ids = detail::parse_id_list(turn.call_results.front());
            else if (pick && !pick->direction && matches(pick->attributes))
                seen.pick_ids = detail::parse_id_list(turn.call_results.front());
            else if (place && matches(place->attributes))
                seen.place_ids = detail::parse_id_list(turn.call_results.front());
        }
        return seen;
    }
};

// ---------------------------------------------------------------------------
// Scripted policy
// ---------------------------------------------------------------------------

/// Replays a fixed list of outputs; used for golden transcripts and replays.
class ScriptedPolicy : public Policy {
public:
    explicit ScriptedPolicy(std::vector<std::string> outputs, std::vector<TokenUsage> usages = {})
        : outputs_(std::move(outputs)), usages_(std::move(usages)) {}

    PolicyReply step(const History&) override {
        if (index_ >= outputs_.size())
            throw PolicyTransportError("script exhausted after " + std::to_string(index_) +
                                       " outputs");
        PolicyReply reply{outputs_[index_], std::nullopt};
        if (index_ < usages_.size()) reply.usage = usages_[index_];
        ++index_;
        return reply;
    }

private:
    std::vector<std::string> outputs_;
    std::vector<TokenUsage> usages_;
    std::size_t index_ = 0;
};

// ---------------------------------------------------------------------------
// Greedy prompt-only policy
// ---------------------------------------------------------------------------

/// Answers from the initial prompt alone, without any retrieval: pattern
/// matches the instruction against the detected-object list. The weak
/// baseline for the 0-iteration ablation.
class GreedyPolicy : public Policy {
public:
    PolicyReply step(const History& history) override {
        const std::string& prompt = history.initial_prompt;
        std::string instruction = extract_line(prompt, "Instruction: ");
        std::vector<std::string> objects =
            detail::parse_id_list(extract_line(prompt, "Detected objects: "));
        std::string folded = fold_case(instruction);

        for (auto& word : vocab::vague_words())
            if (folded.find(word) != std::string::npos)
                return reply("The instruction leaves the object underdetermined.",
                             "ask_underspecified(\"Could you clarify which object you mean?\")");

        std::string pick_phrase = between(folded, "pick up the ", " and place on");
        std::string place_phrase = after(folded, " and place on the ");
        if (pick_phrase.empty())
            return reply("I cannot match the instruction against the object list.",
                         "ask_absence(\"I cannot find the requested object.\")");
        auto matches = phrase_matches(objects, pick_phrase);
        if (matches.empty())
            return reply("No listed object matches the request.",
                         "ask_absence(\"I cannot find the " + pick_phrase + ".\")");
        if (matches.size() > 1)
            return reply("Several listed objects match the request.",
                         "ask_multiplicity(\"Did you mean the " + detail::join_or(matches) + "?\")");
        auto places = phrase_matches(objects, place_phrase);
        std::string place = places.size() == 1 ? places.front() : place_phrase;
        return reply("Exactly one listed object matches; I will place it.",
                     "pick_and_place(" + detail::quote(matches.front()) + ", " +
                         detail::quote(place) + ")");
    }

private:
    static PolicyReply reply(const std::string& thought, const std::string& call) {
        return {thought + "\n" + call, std::nullopt};
    }

    static std::string extract_line(const std::string& text, const std::string& prefix) {
        std::size_t at = text.find(prefix);
        if (at == std::string::npos) return {};
        std::size_t end = text.find('\n', at);
        return text.substr(at + prefix.size(),
                           end == std::string::npos ? std::string::npos : end - at - prefix.size());
    }

    static std::string between(const std::string& text, const std::string& a, const std::string& b) {
        std::size_t start = text.find(a);
        if (start == std::string::npos) return {};
        start += a.size();
        std::size_t end = text.find(b, start);
        if (end == std::string::npos) return {};
        return text.substr(start, end - start);
    }

    static std::string after(const std::string& text, const std::string& a) {
        std::size_t start = text.find(a);
        return start == std::string::npos ? std::string{} : text.substr(start + a.size());
    }

    static std::vector<std::string> phrase_matches(const std::vector<std::string>& objects,
                                                   const std::string& phrase) {
        std::vector<std::string> out;
        if (phrase.empty()) return out;
        for (auto& id : objects) {
            std::string f = fold_case(id);
            if (f == phrase || f.rfind(phrase + " ", 0) == 0) out.push_back(id);
        }
        return out;
    }
};

} // namespace tablegraph
