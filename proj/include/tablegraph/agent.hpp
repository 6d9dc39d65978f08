#pragma once

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "tablegraph/scenario.hpp"
#include "tablegraph/scene_graph.hpp"
#include "tablegraph/types.hpp"
#include "tablegraph/world.hpp"

namespace tablegraph {

// ---------------------------------------------------------------------------
// Policy output grammar
// ---------------------------------------------------------------------------

/// One parsed call line: name(arg, key='value', ...). Positional arguments
/// keep an empty key. Argument order is preserved.
struct ToolCall {
    std::string name;
    std::vector<std::pair<std::string, std::string>> args;
};

struct ParsedOutput {
    enum class Kind { tool_calls, actions, malformed };
    Kind kind = Kind::malformed;
    std::string thought; // leading non-call lines, joined with \n
    std::vector<ToolCall> calls;
    std::vector<Action> actions;
    std::string diagnostic; // kind == malformed
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

/// Attempts to read the line as a call. Returns the call on success; on a
/// line that does not even look like a call (no ident immediately followed by
/// '(') returns nullopt with *error empty; on a broken call sets *error.
inline std::optional<ToolCall> parse_call_line(const std::string& line, std::string* error) {
    error->clear();
    std::size_t i = 0;
    while (i < line.size() && is_ident_char(line[i])) ++i;
    if (i == 0 || i >= line.size() || line[i] != '(') return std::nullopt;
    ToolCall call;
    call.name = line.substr(0, i);
    ++i; // past '('
    auto skip_ws = [&] {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    };
    auto read_quoted = [&](std::string* out) -> bool {
        char quote = line[i];
        std::size_t end = line.find(quote, i + 1);
        if (end == std::string::npos) {
            *error = "unterminated quote in call: " + line;
            return false;
        }
        *out = line.substr(i + 1, end - i - 1);
        i = end + 1;
        return true;
    };
    skip_ws();
    bool done = i < line.size() && line[i] == ')';
    while (!done) {
        skip_ws();
        if (i >= line.size()) {
            *error = "missing ')' in call: " + line;
            return std::nullopt;
        }
        std::string key, value;
        if (line[i] == '\'' || line[i] == '"') {
            if (!read_quoted(&value)) return std::nullopt;
        } else {
            std::size_t start = i;
            while (i < line.size() && line[i] != ',' && line[i] != ')' && line[i] != '=') ++i;
            std::string token = trim(line.substr(start, i - start));
            if (i < line.size() && line[i] == '=') {
                key = token;
                if (key.empty() || !std::all_of(key.begin(), key.end(), is_ident_char)) {
                    *error = "bad argument name '" + key + "' in call: " + line;
                    return std::nullopt;
                }
                ++i; // past '='
                skip_ws();
                if (i >= line.size()) {
                    *error = "missing value after '=' in call: " + line;
                    return std::nullopt;
                }
                if (line[i] == '\'' || line[i] == '"') {
                    if (!read_quoted(&value)) return std::nullopt;
                } else {
                    std::size_t vstart = i;
                    while (i < line.size() && line[i] != ',' && line[i] != ')') ++i;
                    value = trim(line.substr(vstart, i - vstart));
                }
            } else {
                value = token;
            }
        }
        skip_ws();
        if (i >= line.size()) {
            *error = "missing ')' in call: " + line;
            return std::nullopt;
        }
        call.args.push_back({key, value});
        if (line[i] == ',') {
            ++i;
            continue;
        }
        if (line[i] == ')') break;
        *error = "expected ',' or ')' in call: " + line;
        return std::nullopt;
    }
    ++i; // past ')'
    if (!trim(line.substr(i)).empty()) {
        *error = "trailing text after call: " + line;
        return std::nullopt;
    }
    return call;
}

inline bool is_retrieval_name(const std::string& name) {
    return name == "retrieve_node" || name == "retrieve_edge";
}

inline bool is_action_name(const std::string& name) {
    return name == "pick_and_place" || name == "ask" || name == "ask_multiplicity" ||
           name == "ask_absence" || name == "ask_underspecified" || name == "ask_robot";
}

inline std::optional<Action> call_to_action(const ToolCall& call, std::string* error) {
    auto positional = [&](std::size_t want) -> std::optional<std::vector<std::string>> {
        if (call.args.size() != want) {
            *error = call.name + " expects " + std::to_string(want) + " argument(s)";
            return std::nullopt;
        }
        std::vector<std::string> values;
        for (auto& [k, v] : call.args) {
            (void)k;
            values.push_back(v);
        }
        return values;
    };
    if (call.name == "pick_and_place") {
        std::string pick, place;
        for (auto& [k, v] : call.args) {
            if (k == "pick") pick = v;
            else if (k == "place") place = v;
        }
        if (pick.empty() && place.empty()) {
            auto values = positional(2);
            if (!values) return std::nullopt;
            pick = (*values)[0];
            place = (*values)[1];
        }
        if (pick.empty() || place.empty()) {
            *error = "pick_and_place needs a pick and a place argument";
            return std::nullopt;
        }
        return Action{PickAndPlace{pick, place}};
    }
    if (call.name == "ask") {
        auto values = positional(2);
        if (!values) return std::nullopt;
        auto tag = ambiguity_from_string(fold_case((*values)[1]));
        if (!tag || (*tag != AmbiguityTag::multiplicity && *tag != AmbiguityTag::absence &&
                     *tag != AmbiguityTag::underspecified)) {
            *error = "unknown ambiguity tag '" + (*values)[1] +
                     "'; expected multiplicity, absence or underspecified";
            return std::nullopt;
        }
        if ((*values)[0].empty()) {
            *error = "ask needs a non-empty question";
            return std::nullopt;
        }
        return Action{Ask{(*values)[0], *tag}};
    }
    if (call.name == "ask_robot") {
        auto values = positional(1);
        if (!values) return std::nullopt;
        if ((*values)[0].empty()) {
            *error = "ask_robot needs a non-empty question";
            return std::nullopt;
        }
        return Action{AskRobot{(*values)[0]}};
    }
    // ask_multiplicity / ask_absence / ask_underspecified
    auto tag = ambiguity_from_string(call.name.substr(4));
    auto values = positional(1);
    if (!values) return std::nullopt;
    if ((*values)[0].empty()) {
        *error = call.name + " needs a non-empty question";
        return std::nullopt;
    }
    return Action{Ask{(*values)[0], *tag}};
}

} // namespace detail

/// Line-oriented grammar: zero or more thought lines, then one or more call
/// lines. Retrieval calls yield tool calls (several may share a turn); action
/// calls yield an action sequence. Anything else is a MalformedOutput value
/// with a diagnostic, never an exception.
inline ParsedOutput parse_policy_output(const std::string& text) {
    ParsedOutput out;
    std::vector<ToolCall> calls;
    std::istringstream stream(text);
    std::string raw_line;
    auto malformed = [&](std::string why) {
        out.kind = ParsedOutput::Kind::malformed;
        out.diagnostic = std::move(why);
        return out;
    };
    while (std::getline(stream, raw_line)) {
        std::string line = detail::trim(raw_line);
        if (line.empty()) continue;
        std::string error;
        auto call = detail::parse_call_line(line, &error);
        if (!call && !error.empty()) return malformed(error);
        if (!call) {
            if (!calls.empty()) return malformed("unexpected text after calls: " + line);
            out.thought += (out.thought.empty() ? "" : "\n") + line;
            continue;
        }
        calls.push_back(std::move(*call));
    }
    if (calls.empty()) return malformed("no tool call or action sequence in output");

    bool retrieval = detail::is_retrieval_name(calls.front().name);
    for (auto& call : calls) {
        if (!detail::is_retrieval_name(call.name) && !detail::is_action_name(call.name))
            return malformed("unknown function '" + call.name + "'");
        if (detail::is_retrieval_name(call.name) != retrieval)
            return malformed("cannot mix retrieval calls and actions in one turn");
    }
    if (retrieval) {
        out.kind = ParsedOutput::Kind::tool_calls;
        out.calls = std::move(calls);
        return out;
    }
    for (auto& call : calls) {
        std::string error;
        auto action = detail::call_to_action(call, &error);
        if (!action) return malformed(error);
        out.actions.push_back(std::move(*action));
    }
    out.kind = ParsedOutput::Kind::actions;
    return out;
}

// ---------------------------------------------------------------------------
// Tool execution
// ---------------------------------------------------------------------------

inline std::string render_id_list(const std::vector<std::string>& ids) {
    if (ids.empty()) return "[]";
    std::string out = "[";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ", ";
        out += "'" + ids[i] + "'";
    }
    return out + "]";
}

/// Runs one retrieval call against the graph and renders the tool result the
/// way the policy sees it. Query errors come back as plain text.
inline std::string execute_tool_call(const SceneGraph& graph, const ToolCall& call) {
    if (call.name == "retrieve_node") {
        std::vector<std::pair<std::string, std::string>> filters;
        std::optional<std::string> attr_key, attr_val;
        for (auto& [k, v] : call.args) {
            if (k.empty())
                return "retrieve_node takes key=value filters, e.g. retrieve_node(color='red')";
            std::string key = fold_case(k);
            if (key == "attr_key") {
                if (attr_key) return "duplicate filter key 'attr_key'";
                attr_key = v;
            } else if (key == "attr_val") {
                if (attr_val) return "duplicate filter key 'attr_val'";
                attr_val = v;
            } else {
                filters.push_back({key, v});
            }
        }
        if (attr_key.has_value() != attr_val.has_value())
            return "attr_key and attr_val must be given together";
        if (attr_key) filters.push_back({fold_case(*attr_key), *attr_val});
        QueryResult r = retrieve_node(graph, filters);
        return r.ok() ? render_id_list(r.items) : r.error;
    }
    if (call.name == "retrieve_edge") {
        std::optional<std::string> source, target, relation;
        for (auto& [k, v] : call.args) {
            if (k.empty())
                return "retrieve_edge takes key=value arguments: source, target, relation";
            std::string key = fold_case(k);
            auto assign = [&](std::optional<std::string>& slot) -> std::optional<std::string> {
                if (slot) return "duplicate argument '" + key + "'";
                slot = v;
                return std::nullopt;
            };
            std::optional<std::string> dup;
            if (key == "source") dup = assign(source);
            else if (key == "target") dup = assign(target);
            else if (key == "relation" || key == "type") dup = assign(relation);
            else return "unknown argument '" + key + "'; expected source, target or relation";
            if (dup) return *dup;
        }
        QueryResult r = retrieve_edge(graph, source, target, relation);
        if (!r.ok()) return r.error;
        if (r.items.empty()) return "[]";
        std::string out;
        for (std::size_t i = 0; i < r.items.size(); ++i) out += (i ? ", " : "") + r.items[i];
        return out;
    }
    return "unknown tool '" + call.name + "'";
}

// ---------------------------------------------------------------------------
// History
// ---------------------------------------------------------------------------

struct Turn {
    std::string raw; // exact policy output for this turn
    std::string thought;
    ParsedOutput::Kind kind = ParsedOutput::Kind::tool_calls;
    std::vector<ToolCall> calls;
    std::vector<std::string> call_results; // one rendered result per call
    std::vector<Action> actions;
    std::string tool_result; // call results joined ", ", or the diagnostic
};

inline const char* kConcludeNotice =
    "Maximum turns reached. Conclude your reasoning now: output the final action "
    "sequence or one clarification question, with no further retrieval calls.";

/// Append-only conversation state: the serialized form of turn t is always a
/// prefix of turn t+1. `conclusion_at` records before which turn index the
/// forced-conclusion notice was injected.
struct History {
    std::string initial_prompt;
    std::vector<Turn> turns;
    std::optional<std::size_t> conclusion_at;

    bool concluded() const { return conclusion_at.has_value(); }

    std::string render() const {
        std::string out = initial_prompt;
        for (std::size_t i = 0; i < turns.size(); ++i) {
            if (conclusion_at && *conclusion_at == i) out += std::string("\n\n") + kConcludeNotice;
            out += "\n\n" + turns[i].raw;
            if (turns[i].kind != ParsedOutput::Kind::actions) out += "\nSG: " + turns[i].tool_result;
        }
        if (conclusion_at && *conclusion_at == turns.size())
            out += std::string("\n\n") + kConcludeNotice;
        return out;
    }
};

// ---------------------------------------------------------------------------
// Policies
// ---------------------------------------------------------------------------

struct TokenUsage {
    long input = 0;
    long output = 0;
};

struct PolicyReply {
    std::string text;
    std::optional<TokenUsage> usage; // absent: runner approximates
};

/// Transport-level failure (HTTP error, exhausted script, cache miss). The
/// episode is marked errored, which eval keeps distinct from SR = 0.
struct PolicyTransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Policy {
public:
    virtual ~Policy() = default;
    virtual PolicyReply step(const History& history) = 0;
};

// ---------------------------------------------------------------------------
// Initial prompt
// ---------------------------------------------------------------------------

enum class GraphMode { query, full_in_prompt, no_edges };

inline const char* to_string(GraphMode m) {
    switch (m) {
        case GraphMode::query: return "query";
        case GraphMode::full_in_prompt: return "full_in_prompt";
        case GraphMode::no_edges: return "no_edges";
    }
    return "query";
}

inline std::optional<GraphMode> graph_mode_from_string(std::string_view s) {
    if (s == "query") return GraphMode::query;
    if (s == "full_in_prompt") return GraphMode::full_in_prompt;
    if (s == "no_edges") return GraphMode::no_edges;
    return std::nullopt;
}

struct PolicyConfig {
    int max_turns = 8;
    GraphMode graph_mode = GraphMode::query;
};

struct PromptOptions {
    bool dual = false;
    std::optional<std::string> embedded_graph; // full_in_prompt: serialized graph
};

/// The marker the chat mapping splits on: text before it becomes the system
/// message, the rest the first user message.
inline constexpr const char* kPromptUserMarker = "\n\nInstruction: ";

/// The initial prompt: role and tool/action signatures, then instruction,
/// detected objects and the graph schema (or the whole serialized graph).
inline std::string initial_prompt(const InstructionSpec& instr, const std::vector<NodeId>& objects,
                                  const GraphSchema& schema, const PromptOptions& opts = {}) {
    std::string p;
    p += "You are a robotic planner for a tabletop workspace. Ground the instruction in the "
         "scene before acting: query the scene graph as often as needed, then either execute "
         "actions or ask one clarification question.\n";
    p += "Tools (one call per line; end your turn after the calls):\n";
    p += "  retrieve_node(<attribute>='<value>', ...) -> ids of objects matching every filter; "
         "name='<id>' and (attr_key='<key>', attr_val='<value>') are also accepted\n";
    p += "  retrieve_edge(source='<id>', target='<id>', relation='<relation>') -> relation "
         "sentences; give any non-empty subset of the arguments\n";
    p += "Actions (finish your turn with one or more action lines):\n";
    p += "  pick_and_place('<object id>', '<receptacle id>')\n";
    p += "  ask('<question>', <multiplicity|absence|underspecified>) -- the forms "
         "ask_multiplicity('<question>') etc. are also accepted\n";
    if (opts.dual) {
        p += "  ask_robot('<question>') -- ask the other robot about its view\n";
        p += "  pick_and_place('<object id>', 'shared') -- hand over via the shared workspace\n";
    }
    if (!p.empty() && p.back() == '\n') p.pop_back();
    p += kPromptUserMarker + instr.text + "\n";
    p += "Detected objects: " + render_id_list(objects) + "\n";
    if (opts.embedded_graph) {
        p += "Scene graph:\n" + *opts.embedded_graph;
    } else {
        std::string keys, rels;
        for (auto& k : schema.attribute_keys) keys += (keys.empty() ? "" : ", ") + k;
        for (auto& r : schema.relations) rels += (rels.empty() ? "" : ", ") + r;
        p += "Scene graph schema:\n";
        p += "  attribute keys: [" + keys + "]\n";
        p += "  relations: [" + rels + "]\n";
    }
    return p;
}

// ---------------------------------------------------------------------------
// Episode runner
// ---------------------------------------------------------------------------

enum class TranscriptStatus { completed, failed, errored };

inline const char* to_string(TranscriptStatus s) {
    switch (s) {
        case TranscriptStatus::completed: return "completed";
        case TranscriptStatus::failed: return "failed";
        case TranscriptStatus::errored: return "errored";
    }
    return "completed";
}

struct CostCounters {
    int calls = 0;
    std::vector<long> tokens_in;  // one entry per policy invocation
    std::vector<long> tokens_out;
    bool approx = false; // whitespace-token approximation in use
};

inline long count_ws_tokens(const std::string& text) {
    std::istringstream stream(text);
    std::string tok;
    long n = 0;
    while (stream >> tok) ++n;
    return n;
}

struct Transcript {
    std::string scenario_id;
    std::string instruction_text;
    PolicyConfig config; // the config the episode ran under, for exact replay
    History history;
    std::vector<Action> final_actions;
    std::vector<ActionOutcome> outcomes;
    TranscriptStatus status = TranscriptStatus::completed;
    std::string error;
    CostCounters cost;
};

/// Runs one episode: build the graph for the acting agent's observation,
/// assemble P0, loop policy -> intercept tool calls -> execute -> append
/// (thought, calls, result) to the history; when the turn budget runs out,
/// issue one forced-conclusion invocation that must yield an action
/// sequence. The final sequence is applied to the world; the first
/// precondition violation fails the episode.
inline Transcript run_episode(const Scenario& scenario, Policy& policy,
                              const PolicyConfig& config) {
    Transcript tr;
    tr.scenario_id = scenario.id;
    tr.instruction_text = scenario.instruction.text;
    tr.config = config;

    Observation obs = observe(scenario.world, scenario.acting_agent());
    SceneGraph graph = build_from_observation(obs.visible, scenario.world.grid);
    if (config.graph_mode == GraphMode::no_edges) graph = degrade(graph, DegradeMode::drop_edges);
    PromptOptions opts;
    opts.dual = scenario.mode == WorldMode::dual_agent;
    if (config.graph_mode == GraphMode::full_in_prompt) opts.embedded_graph = serialize(graph);
    tr.history.initial_prompt = initial_prompt(scenario.instruction, obs.ids(), graph.schema, opts);

    struct Step {
        std::string raw;
        ParsedOutput parsed;
    };
    auto invoke = [&]() -> std::optional<Step> {
        PolicyReply reply;
        try {
            reply = policy.step(tr.history);
        } catch (const PolicyTransportError& e) {
            tr.status = TranscriptStatus::errored;
            tr.error = e.what();
            return std::nullopt;
        }
        tr.cost.calls += 1;
        if (reply.usage) {
            tr.cost.tokens_in.push_back(reply.usage->input);
            tr.cost.tokens_out.push_back(reply.usage->output);
        } else {
            tr.cost.approx = true;
            tr.cost.tokens_in.push_back(count_ws_tokens(tr.history.render()));
            tr.cost.tokens_out.push_back(count_ws_tokens(reply.text));
        }
        return Step{reply.text, parse_policy_output(reply.text)};
    };
    auto make_turn = [](const Step& step) {
        Turn turn;
        turn.raw = step.raw;
        turn.thought = step.parsed.thought;
        turn.kind = step.parsed.kind;
        return turn;
    };

    bool malformed_used = false;
    std::optional<std::vector<Action>> final;
    int t = 0;
    while (t < config.max_turns && !final) {
        auto step = invoke();
        if (!step) return tr;
        Turn turn = make_turn(*step);
        if (step->parsed.kind == ParsedOutput::Kind::actions) {
            turn.actions = step->parsed.actions;
            tr.history.turns.push_back(std::move(turn));
            final = step->parsed.actions;
            break;
        }
        if (step->parsed.kind == ParsedOutput::Kind::malformed) {
            turn.tool_result = step->parsed.diagnostic;
            tr.history.turns.push_back(std::move(turn));
            if (malformed_used) {
                tr.status = TranscriptStatus::failed;
                tr.error = "second malformed output: " + step->parsed.diagnostic;
                return tr;
            }
            malformed_used = true;
            ++t;
            continue;
        }
        turn.calls = step->parsed.calls;
        for (auto& call : turn.calls) turn.call_results.push_back(execute_tool_call(graph, call));
        for (std::size_t i = 0; i < turn.call_results.size(); ++i)
            turn.tool_result += (i ? ", " : "") + turn.call_results[i];
        tr.history.turns.push_back(std::move(turn));
        ++t;
    }
    if (!final) {
        tr.history.conclusion_at = tr.history.turns.size();
        auto step = invoke();
        if (!step) return tr;
        Turn turn = make_turn(*step);
        if (step->parsed.kind == ParsedOutput::Kind::actions) {
            turn.actions = step->parsed.actions;
            final = step->parsed.actions;
            tr.history.turns.push_back(std::move(turn));
        } else {
            turn.tool_result = step->parsed.kind == ParsedOutput::Kind::malformed
                                   ? step->parsed.diagnostic
                                   : "an action sequence was required";
            tr.history.turns.push_back(std::move(turn));
            tr.status = TranscriptStatus::failed;
            tr.error = "no action sequence after the forced conclusion";
            return tr;
        }
    }

    tr.final_actions = *final;
    WorldState world = scenario.world;
    for (auto& action : tr.final_actions) {
        auto [next, outcome] = apply(world, scenario.acting_agent(), action);
        world = std::move(next);
        tr.outcomes.push_back(outcome);
        if (!outcome.ok) {
            tr.status = TranscriptStatus::failed;
            tr.error = std::string("precondition violation: ") + to_string(outcome.violation) +
                       " (" + outcome.detail + ")";
            return tr;
        }
    }
    tr.status = TranscriptStatus::completed;
    return tr;
}

} // namespace tablegraph
