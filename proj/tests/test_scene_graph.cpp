#include "doctest.h"

#include <set>

#include "tablegraph/rng.hpp"
#include "tablegraph/scene_graph.hpp"

#include "test_support.hpp"

using namespace tablegraph;

namespace {

// ---------------------------------------------------------------------------
// Independent oracles. These scan the *serialized JSON* with a fresh parse so
// they share no code path with the retrieval engine they check.
// ---------------------------------------------------------------------------

std::vector<std::string> oracle_retrieve_node(const std::string& graph_json,
                                              const std::vector<std::pair<std::string, std::string>>& filters) {
    Json j = Json::parse(graph_json);
    std::vector<std::string> out;
    for (auto& node : j.at("nodes")) {
        bool all = true;
        for (auto& [key, value] : filters) {
            if (key == "name") {
                if (fold_case(node.at("id").get<std::string>()) != fold_case(value)) all = false;
                continue;
            }
            auto& attrs = node.at("attributes");
            if (!attrs.contains(key) || fold_case(attrs.at(key).get<std::string>()) != fold_case(value))
                all = false;
        }
        if (all) out.push_back(node.at("id").get<std::string>());
    }
    return out;
}

std::vector<std::string> oracle_retrieve_edge(const std::string& graph_json,
                                              const std::optional<std::string>& source,
                                              const std::optional<std::string>& target,
                                              const std::optional<std::string>& relation) {
    Json j = Json::parse(graph_json);
    std::vector<std::string> out;
    for (auto& e : j.at("edges")) {
        std::string s = e.at("source").get<std::string>();
        std::string t = e.at("target").get<std::string>();
        std::string r = e.at("relation").get<std::string>();
        if (source && fold_case(s) != fold_case(*source)) continue;
        if (target && fold_case(t) != fold_case(*target)) continue;
        if (relation && fold_case(r) != fold_case(*relation)) continue;
        out.push_back("the " + s + " is " + r + " the " + t);
    }
    return out;
}

// Enumerates the axis-alignment rule over all object pairs directly.
std::set<std::tuple<std::string, std::string, std::string>>
oracle_spatial_edges(const std::vector<ObjectInstance>& objects) {
    std::set<std::tuple<std::string, std::string, std::string>> out;
    for (auto& a : objects)
        for (auto& b : objects) {
            if (a.id == b.id || !a.cell || !b.cell) continue;
            if (a.cell->row == b.cell->row && a.cell->col < b.cell->col) out.insert({a.id, "left_of", b.id});
            if (a.cell->row == b.cell->row && a.cell->col > b.cell->col) out.insert({a.id, "right_of", b.id});
            if (a.cell->col == b.cell->col && a.cell->row < b.cell->row) out.insert({a.id, "above", b.id});
            if (a.cell->col == b.cell->col && a.cell->row > b.cell->row) out.insert({a.id, "below", b.id});
        }
    return out;
}

// Random graph expressed directly as JSON text; up to 12 nodes / 40 edges.
std::string random_graph_json(Rng& rng) {
    static const std::vector<std::string> colors{"red", "green", "blue", "yellow"};
    static const std::vector<std::string> types{"block", "bowl", "cup"};
    static const std::vector<std::string> sizes{"small", "large"};
    static const std::vector<std::string> relations{"left_of", "right_of", "above", "inside_of"};
    Json j;
    Json nodes = Json::array();
    std::size_t n = 1 + rng.below(12);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) {
        std::string id = "obj " + std::to_string(i);
        ids.push_back(id);
        Json attrs;
        attrs["color"] = rng.pick(colors);
        attrs["type"] = rng.pick(types);
        if (rng.chance(40)) attrs["size"] = rng.pick(sizes);
        nodes.push_back({{"id", id}, {"attributes", attrs}});
    }
    j["nodes"] = nodes;
    Json edges = Json::array();
    std::set<std::tuple<std::string, std::string, std::string>> seen;
    if (n > 1) {
        std::size_t m = rng.below(41);
        for (std::size_t i = 0; i < m; ++i) {
            std::string s = rng.pick(ids), t = rng.pick(ids), r = rng.pick(relations);
            if (s == t || !seen.insert({s, r, t}).second) continue;
            edges.push_back({{"source", s}, {"target", t}, {"relation", r}});
        }
    }
    j["edges"] = edges;
    return j.dump();
}

// keys come from the graph's own schema (unknown keys are query errors by
// contract); values are sampled freely so misses are common
std::vector<std::pair<std::string, std::string>> random_node_filters(Rng& rng, const SceneGraph& g) {
    static const std::vector<std::string> values{"red",  "green", "blue",  "block",
                                                 "bowl", "cup",   "small", "large"};
    std::vector<std::string> keys(g.schema.attribute_keys.begin(), g.schema.attribute_keys.end());
    std::vector<std::pair<std::string, std::string>> filters;
    std::set<std::string> used;
    std::size_t n = rng.below(3);
    for (std::size_t i = 0; i < n && !keys.empty(); ++i) {
        std::string key = rng.pick(keys);
        if (used.insert(key).second) filters.push_back({key, rng.pick(values)});
    }
    if (rng.chance(15) && !g.nodes.empty())
        filters.push_back({"name", g.nodes[rng.below(static_cast<std::uint32_t>(g.nodes.size()))].id});
    return filters;
}

} // namespace

TEST_CASE("build_from_observation: containment edges from the worked scene") {
    Scenario s = testsupport::example1_scenario();
    SceneGraph g = build_from_observation(s.world.objects, s.world.grid);
    CHECK(g.nodes.size() == 5);
    CHECK(g.has_edge("yellow block", "inside_of", "red bowl 1"));
    CHECK(g.has_edge("blue block", "inside_of", "red bowl 2"));
    // contained objects carry no spatial edges of their own
    for (auto& e : g.edges)
        CHECK((e.source != "yellow block" || e.relation == "inside_of"));
}

TEST_CASE("build_from_observation: empty object list") {
    SceneGraph g = build_from_observation({}, GridLayout::single_agent());
    CHECK(g.nodes.empty());
    CHECK(g.edges.empty());
    CHECK(g.schema.attribute_keys.empty());
    CHECK(g.schema.relations.empty());
}

TEST_CASE("build_from_observation: axis rule matches pairwise enumeration") {
    // pinned case: target at (1,2) is left_of reference at (2,2)
    std::vector<ObjectInstance> objects{
        testsupport::obj_at("reference", "red", "cup", 2, 2),
        testsupport::obj_at("target", "blue", "block", 1, 2),
    };
    SceneGraph g = build_from_observation(objects, GridLayout::single_agent());
    CHECK(g.has_edge("target", "left_of", "reference"));
    CHECK(g.has_edge("reference", "right_of", "target"));

    // randomized scenes against the enumeration oracle
    Rng rng(2024);
    for (int round = 0; round < 50; ++round) {
        std::vector<ObjectInstance> objs;
        std::set<GridCell> used;
        std::size_t n = 2 + rng.below(6);
        for (std::size_t i = 0; i < n; ++i) {
            GridCell c{static_cast<int>(rng.below(7)), static_cast<int>(rng.below(7))};
            if (!used.insert(c).second) continue;
            objs.push_back(testsupport::obj_at("o" + std::to_string(i), "red", "block", c.col, c.row));
        }
        SceneGraph graph = build_from_observation(objs, GridLayout::single_agent());
        auto expected = oracle_spatial_edges(objs);
        std::set<std::tuple<std::string, std::string, std::string>> got;
        for (auto& e : graph.edges) got.insert({e.source, e.relation, e.target});
        CHECK(got == expected);
    }
}

TEST_CASE("build_from_observation: duplicate id is a construction error") {
    std::vector<ObjectInstance> objects{
        testsupport::obj_at("cup", "red", "cup", 0, 0),
        testsupport::obj_at("cup", "blue", "cup", 1, 1),
    };
    CHECK_THROWS_WITH_AS(build_from_observation(objects, GridLayout::single_agent()),
                         "duplicate object id: cup", ConstructionError);
}

TEST_CASE("retrieve_node: worked-example filters") {
    Scenario s = testsupport::example1_scenario();
    SceneGraph g = build_from_observation(s.world.objects, s.world.grid);
    QueryResult r = retrieve_node(g, {{"type", "bowl"}, {"color", "red"}});
    REQUIRE(r.ok());
    CHECK(r.items == std::vector<std::string>{"red bowl 1", "red bowl 2"});

    // vacuous conjunction returns every node in insertion order
    QueryResult all = retrieve_node(g, {});
    REQUIRE(all.ok());
    CHECK(all.items == std::vector<std::string>{"red bowl 1", "red bowl 2", "yellow block",
                                                "blue block", "green bowl"});

    // unknown key is a query error listing valid keys, not an exception
    QueryResult bad = retrieve_node(g, {{"shape", "round"}});
    CHECK_FALSE(bad.ok());
    CHECK(bad.error.find("unknown attribute key 'shape'") != std::string::npos);
    CHECK(bad.error.find("color") != std::string::npos);
}

TEST_CASE("retrieve_node: matches a naive scan over the serialized JSON") {
    Rng rng(7);
    for (int round = 0; round < 200; ++round) {
        std::string json = random_graph_json(rng);
        SceneGraph g = parse_scene_graph(json);
        auto filters = random_node_filters(rng, g);
        QueryResult r = retrieve_node(g, filters);
        REQUIRE(r.ok());
        CHECK(r.items == oracle_retrieve_node(json, filters));
    }
}

TEST_CASE("retrieve_node: conjunction equals filter intersection") {
    Rng rng(11);
    for (int round = 0; round < 100; ++round) {
        SceneGraph g = parse_scene_graph(random_graph_json(rng));
        auto both = retrieve_node(g, {{"color", "red"}, {"type", "block"}});
        auto a = retrieve_node(g, {{"color", "red"}});
        auto b = retrieve_node(g, {{"type", "block"}});
        REQUIRE(both.ok());
        std::vector<std::string> expected;
        for (auto& id : a.items)
            if (std::find(b.items.begin(), b.items.end(), id) != b.items.end())
                expected.push_back(id);
        CHECK(both.items == expected);
    }
}

TEST_CASE("retrieve_edge: sentence template and filters") {
    SceneGraph g = parse_scene_graph(R"({
        "nodes": [
            {"id": "blue bowl", "attributes": {"color": "blue", "type": "bowl"}},
            {"id": "red block", "attributes": {"color": "red", "type": "block"}}
        ],
        "edges": [
            {"source": "blue bowl", "target": "red block", "relation": "above"}
        ]
    })");
    QueryResult r = retrieve_edge(g, "blue bowl", std::nullopt, "above");
    REQUIRE(r.ok());
    CHECK(r.items == std::vector<std::string>{"the blue bowl is above the red block"});

    Scenario s = testsupport::example1_scenario();
    SceneGraph example = build_from_observation(s.world.objects, s.world.grid);
    QueryResult inside = retrieve_edge(example, std::nullopt, "red bowl 1", "inside_of");
    REQUIRE(inside.ok());
    CHECK(inside.items == std::vector<std::string>{"the yellow block is inside_of the red bowl 1"});

    SceneGraph empty = degrade(example, DegradeMode::drop_edges);
    QueryResult none = retrieve_edge(empty, std::nullopt, "red bowl 1", std::nullopt);
    REQUIRE(none.ok());
    CHECK(none.items.empty());
}

TEST_CASE("retrieve_edge: argument validation") {
    Scenario s = testsupport::example1_scenario();
    SceneGraph g = build_from_observation(s.world.objects, s.world.grid);
    QueryResult none = retrieve_edge(g, std::nullopt, std::nullopt, std::nullopt);
    CHECK_FALSE(none.ok());

    QueryResult unknown = retrieve_edge(g, "purple pyramid", std::nullopt, std::nullopt);
    CHECK_FALSE(unknown.ok());
    CHECK(unknown.error.find("purple pyramid") != std::string::npos);
    CHECK(unknown.error.find("retrieve_node") != std::string::npos);
}

TEST_CASE("retrieve_edge: single-argument result count matches positional occurrence") {
    Rng rng(13);
    for (int round = 0; round < 100; ++round) {
        std::string json = random_graph_json(rng);
        SceneGraph g = parse_scene_graph(json);
        if (g.nodes.empty()) continue;
        std::string id = g.nodes[rng.below(static_cast<std::uint32_t>(g.nodes.size()))].id;
        std::size_t as_source = 0, as_target = 0;
        for (auto& e : g.edges) {
            if (e.source == id) ++as_source;
            if (e.target == id) ++as_target;
        }
        auto src = retrieve_edge(g, id, std::nullopt, std::nullopt);
        auto tgt = retrieve_edge(g, std::nullopt, id, std::nullopt);
        REQUIRE(src.ok());
        REQUIRE(tgt.ok());
        CHECK(src.items.size() == as_source);
        CHECK(tgt.items.size() == as_target);
        CHECK(src.items == oracle_retrieve_edge(json, id, std::nullopt, std::nullopt));
        CHECK(tgt.items == oracle_retrieve_edge(json, std::nullopt, id, std::nullopt));
    }
}

TEST_CASE("serialize/parse: identity round-trips") {
    SceneGraph one = parse_scene_graph(
        R"({"nodes": [{"id": "cup", "attributes": {"color": "blue"}}], "edges": []})");
    CHECK(parse_scene_graph(serialize(one)) == one);

    // the documented output schema sample is accepted as-is
    SceneGraph sample = parse_scene_graph(R"({
        "nodes": [
            {"id": "red bowl", "attributes": {"color": "red", "type": "bowl"}},
            {"id": "blue block", "attributes": {"color": "blue", "type": "block"}}
        ],
        "edges": [
            {"source": "blue block", "target": "red bowl", "relation": "inside_of"}
        ]
    })");
    CHECK(sample.nodes.size() == 2);
    CHECK(sample.schema.relations == std::set<std::string>{"inside_of"});

    Rng rng(99);
    for (int round = 0; round < 100; ++round) {
        SceneGraph g = parse_scene_graph(random_graph_json(rng));
        SceneGraph back = parse_scene_graph(serialize(g));
        CHECK(back == g);
        // a second serialization is byte-identical
        CHECK(serialize(back) == serialize(g));
    }
}

TEST_CASE("parse: error paths carry the offending element") {
    CHECK_THROWS_AS(parse_scene_graph("not json"), ParseError);
    CHECK_THROWS_WITH_AS(parse_scene_graph(R"({"nodes": []})"), "missing key at $.edges", ParseError);
    CHECK_THROWS_AS(parse_scene_graph(R"({"edges": []})"), ParseError);

    std::string dangling = R"({"nodes": [{"id": "a", "attributes": {}}],
        "edges": [{"source": "a", "target": "ghost", "relation": "above"}]})";
    CHECK_THROWS_WITH_AS(parse_scene_graph(dangling), "dangling edge endpoint at $.edges[0].target",
                         ParseError);

    std::string self_loop = R"({"nodes": [{"id": "a", "attributes": {}}],
        "edges": [{"source": "a", "target": "a", "relation": "above"}]})";
    CHECK_THROWS_WITH_AS(parse_scene_graph(self_loop), "self-loop edge at $.edges[0]", ParseError);

    std::string dup = R"({"nodes": [{"id": "a", "attributes": {}}, {"id": "a", "attributes": {}}], "edges": []})";
    CHECK_THROWS_AS(parse_scene_graph(dup), ParseError);
}

TEST_CASE("emit_vlm_prompt: opening line, schema line, pure") {
    std::string prompt = emit_vlm_prompt();
    CHECK(prompt.rfind("You are a scene graph generator", 0) == 0);
    CHECK(prompt.find("\"nodes\"") != std::string::npos);
    CHECK(prompt.find("\"edges\"") != std::string::npos);
    CHECK(emit_vlm_prompt() == prompt);
}

TEST_CASE("degrade: drop_edges keeps nodes, empties relations") {
    Scenario s = testsupport::example1_scenario();
    SceneGraph g = build_from_observation(s.world.objects, s.world.grid);
    SceneGraph d = degrade(g, DegradeMode::drop_edges);
    CHECK(d.nodes.size() == g.nodes.size());
    CHECK(d.edges.empty());
    CHECK(d.schema.attribute_keys == g.schema.attribute_keys);
    CHECK(d.schema.relations.empty());
    QueryResult r = retrieve_edge(d, std::nullopt, "red bowl 1", std::nullopt);
    REQUIRE(r.ok());
    CHECK(r.items.empty());
}

TEST_CASE("build_from_observation: deterministic byte-identical serialization") {
    Scenario s = testsupport::example1_scenario();
    std::string a = serialize(build_from_observation(s.world.objects, s.world.grid));
    std::string b = serialize(build_from_observation(s.world.objects, s.world.grid));
    CHECK(a == b);
}
