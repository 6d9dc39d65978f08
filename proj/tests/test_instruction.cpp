#include "doctest.h"

#include "tablegraph/instruction.hpp"
#include "tablegraph/rng.hpp"
#include "tablegraph/scenario.hpp"

#include "test_support.hpp"

using namespace tablegraph;
using testsupport::obj_at;

namespace {

// Brute-force superset check per object; no graph involvement.
std::vector<NodeId> oracle_attribute_matches(const AttributeMap& wanted,
                                             const std::vector<ObjectInstance>& objects) {
    std::vector<NodeId> out;
    for (auto& o : objects) {
        bool all = true;
        for (auto& [k, v] : wanted) {
            auto it = o.attributes.find(k);
            if (it == o.attributes.end() || fold_case(it->second) != fold_case(v)) all = false;
        }
        if (all) out.push_back(o.id);
    }
    return out;
}

std::vector<ObjectInstance> random_objects(Rng& rng) {
    static const std::vector<std::string> colors{"red", "green", "blue"};
    static const std::vector<std::string> types{"block", "bowl", "cup"};
    std::vector<ObjectInstance> out;
    std::set<GridCell> used;
    std::size_t n = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) {
        GridCell c{static_cast<int>(rng.below(7)), static_cast<int>(rng.below(7))};
        if (!used.insert(c).second) continue;
        out.push_back(obj_at("o" + std::to_string(i), rng.pick(colors), rng.pick(types), c.col, c.row));
    }
    return out;
}

Observation as_observation(const std::vector<ObjectInstance>& objects) {
    Observation obs;
    obs.visible = objects;
    return obs;
}

} // namespace

TEST_CASE("match_set: two red bowls in the worked scene") {
    Scenario s = testsupport::example1_scenario();
    SceneGraph g = build_from_observation(s.world.objects, s.world.grid);
    auto bowls = match_set(ReferentSpec::of({{"type", "bowl"}, {"color", "red"}}), s.world.objects, g);
    CHECK(bowls == std::vector<NodeId>{"red bowl 1", "red bowl 2"});

    // empty constraint set matches everything
    auto everything = match_set(ReferentSpec::of({}), s.world.objects, g);
    CHECK(everything.size() == s.world.objects.size());
}

TEST_CASE("match_set: agrees with the brute-force double loop") {
    static const std::vector<std::string> colors{"red", "green", "blue"};
    static const std::vector<std::string> types{"block", "bowl", "cup"};
    Rng rng(17);
    for (int round = 0; round < 200; ++round) {
        auto objects = random_objects(rng);
        SceneGraph g = build_from_observation(objects, GridLayout::single_agent());
        AttributeMap wanted;
        if (rng.chance(70)) wanted["color"] = rng.pick(colors);
        if (rng.chance(70)) wanted["type"] = rng.pick(types);
        auto got = match_set(ReferentSpec::of(wanted), objects, g);
        CHECK(got == oracle_attribute_matches(wanted, objects));
    }
}

TEST_CASE("match_set: spatial constraint keeps only direction-edge bearers") {
    std::vector<ObjectInstance> objects{
        obj_at("red apple", "red", "apple", 3, 3),
        obj_at("blue block", "blue", "block", 2, 3), // left of the apple
        obj_at("green block", "green", "block", 4, 3),
        obj_at("blue bowl", "blue", "bowl", 3, 1),
    };
    SceneGraph g = build_from_observation(objects, GridLayout::single_agent());
    ReferentSpec spec = ReferentSpec::relative(SpatialDirection::left,
                                               ReferentSpec::of({{"type", "apple"}}));
    CHECK(match_set(spec, objects, g) == std::vector<NodeId>{"blue block"});

    // ambiguous reference raises a grounding error carrying the match count
    objects.push_back(obj_at("green apple", "green", "apple", 0, 0));
    SceneGraph g2 = build_from_observation(objects, GridLayout::single_agent());
    try {
        match_set(spec, objects, g2);
        FAIL("expected GroundingError");
    } catch (const GroundingError& e) {
        CHECK(e.reference_matches == 2);
    }
}

TEST_CASE("match_set: adding constraints never grows the result") {
    Rng rng(23);
    for (int round = 0; round < 100; ++round) {
        auto objects = random_objects(rng);
        SceneGraph g = build_from_observation(objects, GridLayout::single_agent());
        auto loose = match_set(ReferentSpec::of({{"type", "block"}}), objects, g);
        auto tight = match_set(ReferentSpec::of({{"type", "block"}, {"color", "red"}}), objects, g);
        CHECK(tight.size() <= loose.size());
        for (auto& id : tight)
            CHECK(std::find(loose.begin(), loose.end(), id) != loose.end());
    }
}

TEST_CASE("classify: vague referent wins over counting") {
    Scenario s = gen_basic(5);
    Scenario vague = perturb(s, PerturbKind::underspecified, 6);
    CHECK(classify_scenario(vague) == AmbiguityTag::underspecified);
    CHECK((vague.instruction.pick->vague || vague.instruction.place->vague));
}

TEST_CASE("classify: duplicated target flips clear to multiplicity") {
    Scenario s = gen_basic(9);
    CHECK(classify_scenario(s) == AmbiguityTag::clear);
    Scenario dup = perturb(s, PerturbKind::multiplicity, 10);
    CHECK(classify_scenario(dup) == AmbiguityTag::multiplicity);
}

TEST_CASE("classify: occluded requires a global match the local view lacks") {
    WorldState w;
    w.grid = GridLayout::dual_agent();
    w.agents = {AgentId::robot1, AgentId::robot2};
    w.holding = {{AgentId::robot1, std::nullopt}, {AgentId::robot2, std::nullopt}};
    w.objects = {
        obj_at("red block", "red", "block", 7, 3), // robot2 band: hidden from robot1
        obj_at("green bowl", "green", "bowl", 1, 1),
    };
    validate_world(w);
    InstructionSpec instr;
    instr.task = TaskKind::basic;
    instr.pick = ReferentSpec::of({{"color", "red"}, {"type", "block"}});
    instr.place = ReferentSpec::of({{"color", "green"}, {"type", "bowl"}});
    instr.text = render(instr);

    Observation obs = observe(w, AgentId::robot1);
    SceneGraph g = build_from_observation(obs.visible, w.grid);
    CHECK(classify(instr, obs, w.objects, g) == AmbiguityTag::occluded);
    // without global knowledge the same view reads as absence
    CHECK(classify(instr, obs, std::nullopt, g) == AmbiguityTag::absence);
    // global set equal to the observation can never yield occluded
    CHECK(classify(instr, obs, obs.visible, g) == AmbiguityTag::absence);
}

TEST_CASE("classify: total and deterministic over random inputs") {
    Rng rng(41);
    for (int round = 0; round < 200; ++round) {
        auto objects = random_objects(rng);
        SceneGraph g = build_from_observation(objects, GridLayout::single_agent());
        InstructionSpec instr;
        instr.task = TaskKind::basic;
        if (rng.chance(15)) instr.pick = ReferentSpec::vague_term("something");
        else if (rng.chance(20))
            instr.pick = ReferentSpec::relative(static_cast<SpatialDirection>(rng.below(4)),
                                                ReferentSpec::of({{"type", "cup"}}));
        else
            instr.pick = ReferentSpec::of({{"type", "block"}});
        instr.place = ReferentSpec::of({{"type", "bowl"}});
        instr.text = "test";
        Observation obs = as_observation(objects);
        AmbiguityTag a = classify(instr, obs, std::nullopt, g);
        AmbiguityTag b = classify(instr, obs, std::nullopt, g);
        CHECK(a == b);
    }
}

TEST_CASE("render: template instances") {
    InstructionSpec basic;
    basic.task = TaskKind::basic;
    basic.pick = ReferentSpec::of({{"color", "red"}, {"type", "block"}});
    basic.place = ReferentSpec::of({{"color", "green"}, {"type", "bowl"}});
    CHECK(render(basic) == "Pick up the red block and place on the green bowl");

    InstructionSpec lh;
    lh.task = TaskKind::long_horizon;
    CHECK(render(lh) == "Place all the blocks over the bowls that match their color");

    InstructionSpec spatial;
    spatial.task = TaskKind::spatial;
    spatial.pick = ReferentSpec::relative(SpatialDirection::left, ReferentSpec::of({{"type", "apple"}}));
    spatial.place = ReferentSpec::of({{"color", "blue"}, {"type", "bowl"}});
    CHECK(render(spatial) == "Pick up the object to the left of the apple and place on the blue bowl");

    InstructionSpec vague = basic;
    vague.pick = ReferentSpec::vague_term("something");
    CHECK(render(vague) == "Place something over the green bowl");

    InstructionSpec vague_place = basic;
    vague_place.place = ReferentSpec::vague_term("an object");
    CHECK(render(vague_place) == "Pick up the red block and place on an object");
}

TEST_CASE("instruction specs round-trip through JSON") {
    InstructionSpec spatial;
    spatial.task = TaskKind::spatial;
    spatial.pick = ReferentSpec::relative(SpatialDirection::below, ReferentSpec::of({{"type", "cup"}}));
    spatial.place = ReferentSpec::of({{"color", "blue"}, {"type", "bowl"}});
    spatial.text = render(spatial);
    Json j = instruction_to_json(spatial);
    InstructionSpec back = instruction_from_json(j);
    CHECK(instruction_to_json(back) == j);
    CHECK(back.pick->direction == SpatialDirection::below);
    CHECK(back.pick->reference->attributes.at("type") == "cup");
}
