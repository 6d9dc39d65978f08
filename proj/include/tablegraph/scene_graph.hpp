#pragma once

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "tablegraph/types.hpp"
#include "tablegraph/world.hpp"

namespace tablegraph {

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct GraphNode {
    NodeId id;
    AttributeMap attributes;

    bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
    NodeId source;
    NodeId target;
    std::string relation;

    auto operator<=>(const GraphEdge&) const = default;
};

/// Vocabulary embedded in the initial prompt: every attribute key and
/// relation present in the graph. Always derived, never hand-edited.
struct GraphSchema {
    std::set<std::string> attribute_keys;
    std::set<std::string> relations;

    bool operator==(const GraphSchema&) const = default;
};

struct SceneGraph {
    std::vector<GraphNode> nodes; // insertion order = retrieval order
    std::vector<GraphEdge> edges;
    GraphSchema schema;

    const GraphNode* find_node(const std::string& id) const {
        std::string want = fold_case(id);
        for (auto& n : nodes)
            if (fold_case(n.id) == want) return &n;
        return nullptr;
    }

    bool has_edge(const NodeId& source, const std::string& relation, const NodeId& target) const {
        for (auto& e : edges)
            if (e.source == source && e.relation == relation && e.target == target) return true;
        return false;
    }
};

/// Structural equality: node list order-sensitive, edge list compared as a
/// set (serialization reorders edges deterministically).
inline bool operator==(const SceneGraph& a, const SceneGraph& b) {
    if (a.nodes != b.nodes || !(a.schema == b.schema)) return false;
    auto ea = a.edges, eb = b.edges;
    std::sort(ea.begin(), ea.end());
    std::sort(eb.begin(), eb.end());
    return ea == eb;
}

inline GraphSchema derive_schema(const std::vector<GraphNode>& nodes,
                                 const std::vector<GraphEdge>& edges) {
    GraphSchema s;
    for (auto& n : nodes)
        for (auto& [k, v] : n.attributes) {
            (void)v;
            s.attribute_keys.insert(k);
        }
    for (auto& e : edges) s.relations.insert(e.relation);
    return s;
}

// ---------------------------------------------------------------------------
// Construction from ground truth
// ---------------------------------------------------------------------------

/// Builds the graph for a set of observed objects. Containment produces
/// inside_of (bowls) / on_top_of (blocks) edges; objects that sit directly on
/// the grid get pairwise cardinal relations: left_of/right_of on a shared
/// row, above/below on a shared column (smaller row = above). Both directions
/// are emitted.
inline SceneGraph build_from_observation(const std::vector<ObjectInstance>& objects,
                                         const GridLayout& grid) {
    SceneGraph g;
    std::set<NodeId> seen;
    for (auto& o : objects) {
        if (!seen.insert(o.id).second)
            throw ConstructionError("duplicate object id: " + o.id);
        if (o.cell && !grid.in_bounds(*o.cell))
            throw ConstructionError("object cell out of bounds: " + o.id);
        g.nodes.push_back({o.id, o.attributes});
    }
    std::set<GraphEdge> edges;
    auto find = [&](const NodeId& id) -> const ObjectInstance* {
        for (auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    };
    for (auto& o : objects) {
        if (!o.container) continue;
        const ObjectInstance* c = find(*o.container);
        if (!c) continue; // container outside the observation: no edge to emit
        edges.insert({o.id, c->id, c->type() == "block" ? "on_top_of" : "inside_of"});
    }
    for (auto& a : objects) {
        if (!a.cell) continue;
        for (auto& b : objects) {
            if (&a == &b || !b.cell) continue;
            if (a.cell->row == b.cell->row && a.cell->col < b.cell->col)
                edges.insert({a.id, b.id, "left_of"});
            if (a.cell->row == b.cell->row && a.cell->col > b.cell->col)
                edges.insert({a.id, b.id, "right_of"});
            if (a.cell->col == b.cell->col && a.cell->row < b.cell->row)
                edges.insert({a.id, b.id, "above"});
            if (a.cell->col == b.cell->col && a.cell->row > b.cell->row)
                edges.insert({a.id, b.id, "below"});
        }
    }
    g.edges.assign(edges.begin(), edges.end());
    std::sort(g.edges.begin(), g.edges.end(), [](const GraphEdge& x, const GraphEdge& y) {
        return std::tie(x.source, x.relation, x.target) < std::tie(y.source, y.relation, y.target);
    });
    g.schema = derive_schema(g.nodes, g.edges);
    return g;
}

// ---------------------------------------------------------------------------
// Retrieval functions
// ---------------------------------------------------------------------------

/// Result of a retrieval query. Errors are ordinary values: the runner hands
/// them back to the policy as tool results so it can recover.
struct QueryResult {
    std::vector<std::string> items;
    std::string error;

    bool ok() const { return error.empty(); }
};

namespace detail {
inline std::string join_keys(const std::set<std::string>& keys) {
    std::string out = "[";
    bool first = true;
    for (auto& k : keys) {
        if (!first) out += ", ";
        out += k;
        first = false;
    }
    return out + "]";
}
} // namespace detail

/// Conjunctive attribute filter; the reserved key `name` matches the node id.
/// Values compare equal after case-folding. Result order = node insertion
/// order. Filters arrive as ordered pairs so duplicates can be diagnosed.
inline QueryResult retrieve_node(const SceneGraph& graph,
                                 const std::vector<std::pair<std::string, std::string>>& filters) {
    AttributeMap wanted;
    std::string name_filter;
    for (auto& [key, value] : filters) {
        std::string k = fold_case(key);
        if (wanted.count(k) || (k == "name" && !name_filter.empty()))
            return {{}, "duplicate filter key '" + k + "'"};
        if (k == "name") {
            name_filter = fold_case(value);
            continue;
        }
        if (!graph.schema.attribute_keys.count(k))
            return {{}, "unknown attribute key '" + k + "'; valid keys: name, " +
                            detail::join_keys(graph.schema.attribute_keys).substr(1)};
        wanted[k] = fold_case(value);
    }
    QueryResult result;
    for (auto& node : graph.nodes) {
        if (!name_filter.empty() && fold_case(node.id) != name_filter) continue;
        bool all = true;
        for (auto& [k, v] : wanted) {
            auto it = node.attributes.find(k);
            if (it == node.attributes.end() || fold_case(it->second) != v) {
                all = false;
                break;
            }
        }
        if (all) result.items.push_back(node.id);
    }
    return result;
}

inline std::string edge_sentence(const GraphEdge& e) {
    return "the " + e.source + " is " + e.relation + " the " + e.target;
}

/// Filters the edge list by any non-empty subset of {source, target,
/// relation}; each match renders as "the {source} is {relation} the
/// {target}". Unknown node ids are query errors.
inline QueryResult retrieve_edge(const SceneGraph& graph,
                                 const std::optional<std::string>& source,
                                 const std::optional<std::string>& target,
                                 const std::optional<std::string>& relation) {
    if (!source && !target && !relation)
        return {{}, "retrieve_edge needs at least one of source, target, relation"};
    std::string src, tgt;
    if (source) {
        const GraphNode* n = graph.find_node(*source);
        if (!n)
            return {{}, "unknown node id '" + *source + "'; use retrieve_node to list objects"};
        src = n->id;
    }
    if (target) {
        const GraphNode* n = graph.find_node(*target);
        if (!n)
            return {{}, "unknown node id '" + *target + "'; use retrieve_node to list objects"};
        tgt = n->id;
    }
    std::string rel = relation ? fold_case(*relation) : std::string{};
    QueryResult result;
    for (auto& e : graph.edges) {
        if (source && e.source != src) continue;
        if (target && e.target != tgt) continue;
        if (relation && fold_case(e.relation) != rel) continue;
        result.items.push_back(edge_sentence(e));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Graph file format: {"nodes": [{"id", "attributes"}], "edges": [{"source",
/// "target", "relation"}]}. Nodes keep insertion order; edges are ordered
/// lexicographically by (source, relation, target) so output is byte-stable.
inline std::string serialize(const SceneGraph& graph) {
    Json j;
    Json nodes = Json::array();
    for (auto& n : graph.nodes) {
        Json jn;
        jn["id"] = n.id;
        jn["attributes"] = n.attributes;
        nodes.push_back(jn);
    }
    j["nodes"] = nodes;
    auto sorted = graph.edges;
    std::sort(sorted.begin(), sorted.end(), [](const GraphEdge& x, const GraphEdge& y) {
        return std::tie(x.source, x.relation, x.target) < std::tie(y.source, y.relation, y.target);
    });
    Json edges = Json::array();
    for (auto& e : sorted)
        edges.push_back({{"source", e.source}, {"target", e.target}, {"relation", e.relation}});
    j["edges"] = edges;
    return j.dump(2) + "\n";
}

inline SceneGraph parse_scene_graph(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("top level must be an object at $");
    if (!j.contains("nodes")) throw ParseError("missing key at $.nodes");
    if (!j.contains("edges")) throw ParseError("missing key at $.edges");
    if (!j["nodes"].is_array()) throw ParseError("$.nodes must be an array");
    if (!j["edges"].is_array()) throw ParseError("$.edges must be an array");

    SceneGraph g;
    std::set<NodeId> ids;
    for (std::size_t i = 0; i < j["nodes"].size(); ++i) {
        const Json& jn = j["nodes"][i];
        std::string path = "$.nodes[" + std::to_string(i) + "]";
        if (!jn.is_object() || !jn.contains("id")) throw ParseError("missing key at " + path + ".id");
        if (!jn["id"].is_string()) throw ParseError("id must be a string at " + path + ".id");
        GraphNode node;
        node.id = jn["id"].get<std::string>();
        if (node.id.empty()) throw ParseError("empty node id at " + path + ".id");
        if (!ids.insert(node.id).second) throw ParseError("duplicate node id at " + path + ".id");
        if (!jn.contains("attributes")) throw ParseError("missing key at " + path + ".attributes");
        if (!jn["attributes"].is_object())
            throw ParseError("attributes must be an object at " + path + ".attributes");
        for (auto& [k, v] : jn["attributes"].items()) {
            if (!v.is_string())
                throw ParseError("attribute value must be a string at " + path + ".attributes." + k);
            if (v.get<std::string>().empty())
                throw ParseError("empty attribute value at " + path + ".attributes." + k);
            node.attributes[fold_case(k)] = v.get<std::string>();
        }
        g.nodes.push_back(std::move(node));
    }
    std::set<GraphEdge> seen_edges;
    for (std::size_t i = 0; i < j["edges"].size(); ++i) {
        const Json& je = j["edges"][i];
        std::string path = "$.edges[" + std::to_string(i) + "]";
        for (const char* key : {"source", "target", "relation"})
            if (!je.is_object() || !je.contains(key) || !je[key].is_string())
                throw ParseError("missing key at " + path + "." + key);
        GraphEdge e{je["source"].get<std::string>(), je["target"].get<std::string>(),
                    je["relation"].get<std::string>()};
        if (e.relation.empty()) throw ParseError("empty relation at " + path + ".relation");
        if (e.source == e.target) throw ParseError("self-loop edge at " + path);
        if (!ids.count(e.source)) throw ParseError("dangling edge endpoint at " + path + ".source");
        if (!ids.count(e.target)) throw ParseError("dangling edge endpoint at " + path + ".target");
        if (!seen_edges.insert(e).second) throw ParseError("duplicate edge at " + path);
        g.edges.push_back(std::move(e));
    }
    g.schema = derive_schema(g.nodes, g.edges);
    return g;
}

// ---------------------------------------------------------------------------
// Prompt emitter and degradation
// ---------------------------------------------------------------------------

/// The scene-graph-generation prompt, for users who wire a real VLM in front
/// of `parse_scene_graph`. Byte-stable.
inline std::string emit_vlm_prompt() {
    return "You are a scene graph generator. Your task is to generate a scene graph "
           "representation of a given tabletop scene, identifying relationships between all "
           "the objects presented to you (if any).\n"
           "\n"
           "The graph must have the following structure:\n"
           "\n"
           "Nodes: The nodes must be represented by objects. You will already be provided "
           "with the object list.\n"
           "\n"
           "Edges: These should represent the relationships between each pair of objects. "
           "These relationships can include spatial directions (left_of, above, below, "
           "on_top_of, etc.) or semantic relations (joined_with, inside_of, etc.) to properly "
           "model how each object is related to the others.\n"
           "\n"
           "Attributes: Each node must have an atrribute of the object like color, type etc.\n"
           "\n"
           "Input: You will be given the image of a tabletop scene as input, as well as the "
           "object list over the table to label the nodes.\n"
           "\n"
           "Output: Must strictly be a JSON object with the following schema:\n"
           "\n"
           "{\"nodes\": [{\"id\": i, \"attributes\": {a_1, a_2, ..., a_k}}], "
           "\"edges\": [{\"source\": i, \"target\": j, \"relation\": r}]}\n";
}

enum class DegradeMode { drop_edges };

/// Ablation: identical nodes and attribute vocabulary, no edges at all.
inline SceneGraph degrade(const SceneGraph& graph, DegradeMode mode) {
    (void)mode; // drop_edges is the only mode
    SceneGraph g;
    g.nodes = graph.nodes;
    g.schema.attribute_keys = graph.schema.attribute_keys;
    return g;
}

} // namespace tablegraph
