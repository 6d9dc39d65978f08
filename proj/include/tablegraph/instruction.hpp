#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tablegraph/scene_graph.hpp"
#include "tablegraph/types.hpp"
#include "tablegraph/world.hpp"

namespace tablegraph {

enum class TaskKind { basic, spatial, long_horizon };

inline const char* to_string(TaskKind t) {
    switch (t) {
        case TaskKind::basic: return "basic";
        case TaskKind::spatial: return "spatial";
        case TaskKind::long_horizon: return "long_horizon";
    }
    return "basic";
}

inline std::optional<TaskKind> task_from_string(std::string_view s) {
    if (s == "basic") return TaskKind::basic;
    if (s == "spatial") return TaskKind::spatial;
    if (s == "long_horizon") return TaskKind::long_horizon;
    return std::nullopt;
}

enum class SpatialDirection { left, right, above, below };

inline const char* to_string(SpatialDirection d) {
    switch (d) {
        case SpatialDirection::left: return "left";
        case SpatialDirection::right: return "right";
        case SpatialDirection::above: return "above";
        case SpatialDirection::below: return "below";
    }
    return "left";
}

inline std::optional<SpatialDirection> direction_from_string(std::string_view s) {
    if (s == "left") return SpatialDirection::left;
    if (s == "right") return SpatialDirection::right;
    if (s == "above") return SpatialDirection::above;
    if (s == "below") return SpatialDirection::below;
    return std::nullopt;
}

/// Graph relation an object bears toward the reference when it lies in the
/// given direction: "the object to the left of X" carries (object, left_of, X).
inline std::string direction_relation(SpatialDirection d) {
    switch (d) {
        case SpatialDirection::left: return "left_of";
        case SpatialDirection::right: return "right_of";
        case SpatialDirection::above: return "above";
        case SpatialDirection::below: return "below";
    }
    return "left_of";
}

// ---------------------------------------------------------------------------
// Referents and instructions
// ---------------------------------------------------------------------------

/// Constraint set extracted from one referring expression. A vague referent
/// has no constraints at all, only the surface word it was rendered with.
struct ReferentSpec {
    AttributeMap attributes;
    bool vague = false;
    std::string vague_word; // bound dictionary word, set iff vague
    std::optional<SpatialDirection> direction;
    std::shared_ptr<const ReferentSpec> reference; // set iff direction

    static ReferentSpec of(AttributeMap attrs) { return ReferentSpec{std::move(attrs), false, {}, {}, {}}; }
    static ReferentSpec vague_term(std::string word) {
        ReferentSpec r;
        r.vague = true;
        r.vague_word = std::move(word);
        return r;
    }
    static ReferentSpec relative(SpatialDirection d, ReferentSpec ref, AttributeMap attrs = {}) {
        ReferentSpec r;
        r.attributes = std::move(attrs);
        r.direction = d;
        r.reference = std::make_shared<const ReferentSpec>(std::move(ref));
        return r;
    }
};

struct InstructionSpec {
    TaskKind task = TaskKind::basic;
    std::optional<ReferentSpec> pick;  // absent for long_horizon
    std::optional<ReferentSpec> place; // absent for long_horizon
    std::string text;
};

/// Raised by match_set when the spatial reference does not itself ground to
/// exactly one object; carries how many objects it matched.
struct GroundingError : std::runtime_error {
    int reference_matches;
    explicit GroundingError(int matches)
        : std::runtime_error("spatial reference matched " + std::to_string(matches) +
                             " objects, expected exactly 1"),
          reference_matches(matches) {}
};

// ---------------------------------------------------------------------------
// Matching and classification
// ---------------------------------------------------------------------------

namespace detail {
inline bool attributes_satisfy(const AttributeMap& have, const AttributeMap& want) {
    for (auto& [k, v] : want) {
        auto it = have.find(fold_case(k));
        if (it == have.end() || fold_case(it->second) != fold_case(v)) return false;
    }
    return true;
}
} // namespace detail

/// X_match: objects whose attribute map is a superset of the referent's
/// constraints, further filtered by the spatial constraint when present (the
/// object must bear the direction edge toward the reference's unique match).
/// Result keeps the object list order.
inline std::vector<NodeId> match_set(const ReferentSpec& spec,
                                     const std::vector<ObjectInstance>& objects,
                                     const SceneGraph& graph) {
    if (spec.vague) throw std::logic_error("match_set called on a vague referent");
    std::vector<NodeId> out;
    for (auto& o : objects)
        if (detail::attributes_satisfy(o.attributes, spec.attributes)) out.push_back(o.id);
    if (!spec.direction) return out;

    auto ref_matches = match_set(*spec.reference, objects, graph);
    if (ref_matches.size() != 1) throw GroundingError(static_cast<int>(ref_matches.size()));
    const NodeId& ref = ref_matches.front();
    std::string rel = direction_relation(*spec.direction);
    std::vector<NodeId> filtered;
    for (auto& id : out)
        if (graph.has_edge(id, rel, ref)) filtered.push_back(id);
    return filtered;
}

namespace detail {
// Match count with GroundingError folded in: an unresolvable reference
// behaves like its own ambiguity (0 -> nothing matches, >1 -> multiple).
inline std::size_t safe_match_count(const ReferentSpec& spec,
                                    const std::vector<ObjectInstance>& objects,
                                    const SceneGraph& graph) {
    try {
        return match_set(spec, objects, graph).size();
    } catch (const GroundingError& e) {
        return e.reference_matches > 1 ? static_cast<std::size_t>(e.reference_matches) : 0;
    }
}

// Global existence check ignores the spatial constraint: dual-agent
// instructions never carry one, and no graph exists for unseen objects.
inline std::size_t global_attribute_count(const ReferentSpec& spec,
                                          const std::vector<ObjectInstance>& objects) {
    std::size_t n = 0;
    for (auto& o : objects)
        if (attributes_satisfy(o.attributes, spec.attributes)) ++n;
    return n;
}
} // namespace detail

/// Total, deterministic ambiguity classification of an instruction against
/// one agent's observation. `global_objects` (the full object set) turns a
/// zero local count into `occluded` when a match exists somewhere else.
inline AmbiguityTag classify(const InstructionSpec& instr, const Observation& observation,
                             const std::optional<std::vector<ObjectInstance>>& global_objects,
                             const SceneGraph& graph) {
    if ((instr.pick && instr.pick->vague) || (instr.place && instr.place->vague))
        return AmbiguityTag::underspecified;

    auto judge = [&](const ReferentSpec& r) -> std::optional<AmbiguityTag> {
        std::size_t m = detail::safe_match_count(r, observation.visible, graph);
        if (m > 1) return AmbiguityTag::multiplicity;
        if (m == 0) {
            if (global_objects && detail::global_attribute_count(r, *global_objects) >= 1)
                return AmbiguityTag::occluded;
            return AmbiguityTag::absence;
        }
        return std::nullopt; // grounds uniquely
    };
    if (instr.pick)
        if (auto tag = judge(*instr.pick)) return *tag;
    if (instr.place)
        if (auto tag = judge(*instr.place)) return *tag;
    return AmbiguityTag::clear;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Noun phrase for a referent, without article: "red block", "apple",
/// "object to the left of the apple". Vague referents render as their word.
inline std::string referent_phrase(const ReferentSpec& r) {
    if (r.vague) return r.vague_word;
    std::string noun;
    auto color = r.attributes.find("color");
    auto type = r.attributes.find("type");
    if (color != r.attributes.end()) noun = color->second;
    if (type != r.attributes.end()) noun += (noun.empty() ? "" : " ") + type->second;
    if (noun.empty()) noun = "object";
    if (r.direction)
        noun += std::string(" to the ") + to_string(*r.direction) + " of the " +
                referent_phrase(*r.reference);
    return noun;
}

namespace detail {
inline std::string place_slot(const ReferentSpec& place) {
    return place.vague ? place.vague_word : "the " + referent_phrase(place);
}
} // namespace detail

/// Fills the instruction template for the task variant. Requires every slot
/// bound (vague referents carry their dictionary word).
inline std::string render(const InstructionSpec& instr) {
    if (instr.task == TaskKind::long_horizon)
        return "Place all the blocks over the bowls that match their color";
    const ReferentSpec& pick = *instr.pick;
    const ReferentSpec& place = *instr.place;
    if (pick.vague)
        return "Place " + pick.vague_word + " over " + detail::place_slot(place);
    if (pick.direction)
        return "Pick up the object to the " + std::string(to_string(*pick.direction)) +
               " of the " + referent_phrase(*pick.reference) + " and place on " +
               detail::place_slot(place);
    return "Pick up the " + referent_phrase(pick) + " and place on " + detail::place_slot(place);
}

// ---------------------------------------------------------------------------
// Serialization (embedded in scenario files)
// ---------------------------------------------------------------------------

inline Json referent_to_json(const ReferentSpec& r) {
    Json j;
    j["attributes"] = r.attributes;
    j["vague"] = r.vague;
    if (r.vague) j["vague_word"] = r.vague_word;
    if (r.direction) {
        j["spatial"] = {{"direction", to_string(*r.direction)},
                        {"reference", referent_to_json(*r.reference)}};
    }
    return j;
}

inline ReferentSpec referent_from_json(const Json& j, const std::string& path) {
    ReferentSpec r;
    if (!j.is_object() || !j.contains("attributes"))
        throw ParseError("missing key at " + path + ".attributes");
    for (auto& [k, v] : j.at("attributes").items()) {
        if (!v.is_string())
            throw ParseError("attribute value must be a string at " + path + ".attributes." + k);
        r.attributes[fold_case(k)] = v.get<std::string>();
    }
    r.vague = j.value("vague", false);
    if (r.vague) r.vague_word = j.value("vague_word", "");
    if (j.contains("spatial")) {
        const Json& s = j.at("spatial");
        auto d = direction_from_string(s.value("direction", ""));
        if (!d) throw ParseError("unknown direction at " + path + ".spatial.direction");
        r.direction = *d;
        if (!s.contains("reference")) throw ParseError("missing key at " + path + ".spatial.reference");
        r.reference = std::make_shared<const ReferentSpec>(
            referent_from_json(s.at("reference"), path + ".spatial.reference"));
    }
    return r;
}

inline Json instruction_to_json(const InstructionSpec& instr) {
    Json j;
    j["task"] = to_string(instr.task);
    j["text"] = instr.text;
    if (instr.pick) j["pick"] = referent_to_json(*instr.pick);
    if (instr.place) j["place"] = referent_to_json(*instr.place);
    return j;
}

inline InstructionSpec instruction_from_json(const Json& j) {
    InstructionSpec instr;
    auto task = task_from_string(j.value("task", ""));
    if (!task) throw ParseError("unknown task at instruction.task");
    instr.task = *task;
    if (!j.contains("text")) throw ParseError("missing key at instruction.text");
    instr.text = j.at("text").get<std::string>();
    if (j.contains("pick")) instr.pick = referent_from_json(j.at("pick"), "instruction.pick");
    if (j.contains("place")) instr.place = referent_from_json(j.at("place"), "instruction.place");
    return instr;
}

} // namespace tablegraph
