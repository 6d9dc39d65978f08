#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "tablegraph/instruction.hpp"
#include "tablegraph/rng.hpp"
#include "tablegraph/scene_graph.hpp"
#include "tablegraph/types.hpp"
#include "tablegraph/world.hpp"

namespace tablegraph {

enum class WorldMode { single_agent, dual_agent };

inline const char* to_string(WorldMode m) {
    return m == WorldMode::single_agent ? "single" : "dual";
}

// ---------------------------------------------------------------------------
// Object vocabulary
// ---------------------------------------------------------------------------

namespace vocab {
inline const std::vector<std::string>& colors() {
    static const std::vector<std::string> v{"red", "green", "blue", "yellow", "cyan", "purple"};
    return v;
}
inline const std::vector<std::string>& distractor_types() {
    static const std::vector<std::string> v{"apple", "cup", "banana"};
    return v;
}
inline const std::vector<std::string>& vague_words() {
    static const std::vector<std::string> v{"something", "an object", "that thing",
                                            "one of them", "an item"};
    return v;
}
} // namespace vocab

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

struct Scenario {
    std::string id;
    WorldState world;
    InstructionSpec instruction;
    AmbiguityTag label = AmbiguityTag::clear;
    GoalSpec goal;
    WorldMode mode = WorldMode::single_agent;
    std::uint64_t seed = 0;

    AgentId acting_agent() const { return AgentId::robot1; }
};

/// Recomputes the ground-truth label from scratch; generator output must
/// agree with this (self-consistency invariant).
inline AmbiguityTag classify_scenario(const Scenario& s) {
    Observation obs = observe(s.world, s.acting_agent());
    SceneGraph graph = build_from_observation(obs.visible, s.world.grid);
    std::optional<std::vector<ObjectInstance>> global;
    if (s.mode == WorldMode::dual_agent) global = s.world.objects;
    return classify(s.instruction, obs, global, graph);
}

// ---------------------------------------------------------------------------
// Generation helpers
// ---------------------------------------------------------------------------

namespace detail {

struct ObjectDraft {
    std::string color;
    std::string type;
    GridCell cell;
};

inline std::string zero_pad(int n, int width) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%0*d", width, n);
    return buf;
}

/// "<color> <type>", numbered 1..k in insertion order when the phrase repeats.
inline std::vector<ObjectInstance> assign_ids(const std::vector<ObjectDraft>& drafts) {
    std::map<std::string, int> totals;
    for (auto& d : drafts) totals[d.color + " " + d.type]++;
    std::map<std::string, int> counters;
    std::vector<ObjectInstance> out;
    for (auto& d : drafts) {
        std::string phrase = d.color + " " + d.type;
        std::string id = phrase;
        if (totals[phrase] > 1) id += " " + std::to_string(++counters[phrase]);
        ObjectInstance o;
        o.id = id;
        o.attributes = {{"color", d.color}, {"type", d.type}};
        o.cell = d.cell;
        out.push_back(std::move(o));
    }
    return out;
}

inline std::vector<GridCell> all_cells(const GridLayout& grid) {
    std::vector<GridCell> cells;
    for (int c = 0; c < grid.cols; ++c)
        for (int r = 0; r < grid.rows; ++r) cells.push_back({c, r});
    return cells;
}

/// Distinct (color,type) pairs not already claimed; shuffled draw.
inline std::vector<std::pair<std::string, std::string>>
draw_combos(Rng& rng, std::size_t n, const std::set<std::pair<std::string, std::string>>& taken,
            const std::set<std::string>& banned_types) {
    std::vector<std::pair<std::string, std::string>> pool;
    for (auto& t : vocab::distractor_types())
        for (auto& c : vocab::colors())
            if (!banned_types.count(t) && !taken.count({c, t})) pool.push_back({c, t});
    for (const char* t : {"block", "bowl"})
        for (auto& c : vocab::colors())
            if (!banned_types.count(t) && !taken.count({c, t})) pool.push_back({c, t});
    rng.shuffle(pool);
    if (pool.size() > n) pool.resize(n);
    return pool;
}

inline GridCell step(GridCell from, SpatialDirection d, int dist = 1) {
    switch (d) {
        case SpatialDirection::left: return {from.col - dist, from.row};
        case SpatialDirection::right: return {from.col + dist, from.row};
        case SpatialDirection::above: return {from.col, from.row - dist};
        case SpatialDirection::below: return {from.col, from.row + dist};
    }
    return from;
}

/// Cells that would bear the direction edge toward the reference: the whole
/// row/column ray, not just the adjacent cell.
inline std::vector<GridCell> direction_ray(const GridLayout& grid, GridCell ref,
                                           SpatialDirection d) {
    std::vector<GridCell> out;
    for (int dist = 1;; ++dist) {
        GridCell c = step(ref, d, dist);
        if (!grid.in_bounds(c)) break;
        out.push_back(c);
    }
    return out;
}

inline void finish(Scenario& s) {
    validate_world(s.world);
    AmbiguityTag recomputed = classify_scenario(s);
    if (recomputed != s.label)
        throw ConstructionError(std::string("generated scenario classifies as ") +
                                to_string(recomputed) + ", expected " + to_string(s.label));
    WorldState replay = s.world;
    if (goal_satisfied(replay, s.goal))
        throw ConstructionError("generated scenario is pre-satisfied");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Single-agent generators
// ---------------------------------------------------------------------------

/// Pick block + place bowl + 2..4 distractors at distinct cells.
inline Scenario gen_basic(std::uint64_t seed) {
    Rng rng(seed);
    Scenario s;
    s.seed = seed;
    s.mode = WorldMode::single_agent;
    s.world.grid = GridLayout::single_agent();

    std::string pick_color = rng.pick(vocab::colors());
    std::string place_color = rng.pick(vocab::colors());
    std::vector<detail::ObjectDraft> drafts;
    drafts.push_back({pick_color, "block", {}});
    drafts.push_back({place_color, "bowl", {}});
    std::set<std::pair<std::string, std::string>> taken{{pick_color, "block"},
                                                        {place_color, "bowl"}};
    for (auto& [c, t] : detail::draw_combos(rng, 2 + rng.below(3), taken, {}))
        drafts.push_back({c, t, {}});

    auto cells = detail::all_cells(s.world.grid);
    rng.shuffle(cells);
    for (std::size_t i = 0; i < drafts.size(); ++i) drafts[i].cell = cells[i];
    s.world.objects = detail::assign_ids(drafts);

    s.instruction.task = TaskKind::basic;
    s.instruction.pick = ReferentSpec::of({{"color", pick_color}, {"type", "block"}});
    s.instruction.place = ReferentSpec::of({{"color", place_color}, {"type", "bowl"}});
    s.instruction.text = render(s.instruction);
    s.goal = PlacementGoal{s.world.objects[0].id, s.world.objects[1].id};
    s.label = AmbiguityTag::clear;
    detail::finish(s);
    return s;
}

/// Reference at the board center, target one cell away in a sampled
/// direction, distractors on the remaining cardinal cells, place bowl kept
/// clear of the direction ray.
inline Scenario gen_spatial(std::uint64_t seed) {
    Rng rng(seed);
    Scenario s;
    s.seed = seed;
    s.mode = WorldMode::single_agent;
    s.world.grid = GridLayout::single_agent();
    GridCell center = s.world.grid.center();

    std::string ref_type = rng.pick(vocab::distractor_types());
    std::string ref_color = rng.pick(vocab::colors());
    auto direction = static_cast<SpatialDirection>(rng.below(4));
    std::string target_color = rng.pick(vocab::colors());
    std::string place_color = rng.pick(vocab::colors());

    std::vector<detail::ObjectDraft> drafts;
    drafts.push_back({target_color, "block", detail::step(center, direction)});
    std::set<std::pair<std::string, std::string>> taken{{target_color, "block"},
                                                        {place_color, "bowl"}};
    std::vector<SpatialDirection> rest;
    for (int d = 0; d < 4; ++d)
        if (static_cast<SpatialDirection>(d) != direction)
            rest.push_back(static_cast<SpatialDirection>(d));
    auto combos = detail::draw_combos(rng, rest.size(), taken, {ref_type});
    for (std::size_t i = 0; i < rest.size(); ++i)
        drafts.push_back({combos[i].first, combos[i].second, detail::step(center, rest[i])});
    drafts.push_back({ref_color, ref_type, center});

    // place bowl anywhere off the cardinal cross and out of the direction ray
    std::set<GridCell> forbidden{center};
    for (int d = 0; d < 4; ++d) forbidden.insert(detail::step(center, static_cast<SpatialDirection>(d)));
    for (auto c : detail::direction_ray(s.world.grid, center, direction)) forbidden.insert(c);
    std::vector<GridCell> open;
    for (auto c : detail::all_cells(s.world.grid))
        if (!forbidden.count(c)) open.push_back(c);
    drafts.push_back({place_color, "bowl", open[rng.below(static_cast<std::uint32_t>(open.size()))]});

    s.world.objects = detail::assign_ids(drafts);
    s.instruction.task = TaskKind::spatial;
    s.instruction.pick = ReferentSpec::relative(direction, ReferentSpec::of({{"type", ref_type}}));
    s.instruction.place = ReferentSpec::of({{"color", place_color}, {"type", "bowl"}});
    s.instruction.text = render(s.instruction);
    s.goal = PlacementGoal{s.world.objects[0].id, s.world.objects.back().id};
    s.label = AmbiguityTag::clear;
    detail::finish(s);
    return s;
}

/// k in {2,3} colors; one block and one bowl per color.
inline Scenario gen_long_horizon(std::uint64_t seed) {
    Rng rng(seed);
    Scenario s;
    s.seed = seed;
    s.mode = WorldMode::single_agent;
    s.world.grid = GridLayout::single_agent();

    auto palette = vocab::colors();
    rng.shuffle(palette);
    std::size_t k = 2 + rng.below(2);
    std::vector<detail::ObjectDraft> drafts;
    for (std::size_t i = 0; i < k; ++i) drafts.push_back({palette[i], "block", {}});
    for (std::size_t i = 0; i < k; ++i) drafts.push_back({palette[i], "bowl", {}});
    auto cells = detail::all_cells(s.world.grid);
    rng.shuffle(cells);
    for (std::size_t i = 0; i < drafts.size(); ++i) drafts[i].cell = cells[i];
    s.world.objects = detail::assign_ids(drafts);

    s.instruction.task = TaskKind::long_horizon;
    s.instruction.text = render(s.instruction);
    s.goal = ColorMatchGoal{};
    s.label = AmbiguityTag::clear;
    detail::finish(s);
    return s;
}

// ---------------------------------------------------------------------------
// Perturbations
// ---------------------------------------------------------------------------

enum class PerturbKind { multiplicity, absence, underspecified };

inline const char* to_string(PerturbKind k) {
    switch (k) {
        case PerturbKind::multiplicity: return "multiplicity";
        case PerturbKind::absence: return "absence";
        case PerturbKind::underspecified: return "underspecified";
    }
    return "multiplicity";
}

/// Injects one ambiguity into a clear single-agent scenario. Only the target
/// object set (or one referent) changes; distractors stay untouched.
inline Scenario perturb(const Scenario& base, PerturbKind kind, std::uint64_t seed) {
    if (base.label != AmbiguityTag::clear || base.mode != WorldMode::single_agent)
        throw std::logic_error("perturb requires a clear single-agent scenario");
    if (!base.instruction.pick)
        throw std::logic_error("perturb requires an instruction with a pick referent");
    Rng rng(seed);
    Scenario s = base;
    s.seed = seed;

    const auto* placement = std::get_if<PlacementGoal>(&base.goal);
    if (kind != PerturbKind::underspecified && !placement)
        throw std::logic_error("perturb requires a placement goal");

    switch (kind) {
        case PerturbKind::multiplicity: {
            ObjectInstance* target = s.world.find(placement->pick);
            std::vector<GridCell> candidates;
            if (base.instruction.pick->direction) {
                // the clone must also bear the direction edge toward the reference
                auto ref_ids = match_set(*base.instruction.pick->reference, s.world.objects,
                                         build_from_observation(s.world.objects, s.world.grid));
                auto ref_cell = s.world.resolved_cell(ref_ids.front());
                for (auto c : detail::direction_ray(s.world.grid, *ref_cell,
                                                    *base.instruction.pick->direction))
                    if (s.world.cell_free(c)) candidates.push_back(c);
            } else {
                for (auto c : detail::all_cells(s.world.grid))
                    if (s.world.cell_free(c)) candidates.push_back(c);
            }
            if (candidates.empty()) throw ConstructionError("no free cell for duplication");
            GridCell cell = candidates[rng.below(static_cast<std::uint32_t>(candidates.size()))];
            ObjectInstance clone = *target;
            clone.cell = cell;
            clone.container.reset();
            clone.id = target->id + " 2";
            target->id += " 1";
            s.world.objects.push_back(std::move(clone));
            s.goal = ClarifyGoal{AmbiguityTag::multiplicity};
            s.label = AmbiguityTag::multiplicity;
            break;
        }
        case PerturbKind::absence: {
            NodeId gone = placement->pick;
            std::erase_if(s.world.objects, [&](const ObjectInstance& o) { return o.id == gone; });
            s.goal = ClarifyGoal{AmbiguityTag::absence};
            s.label = AmbiguityTag::absence;
            break;
        }
        case PerturbKind::underspecified: {
            std::string word = rng.pick(vocab::vague_words());
            bool place_side = rng.chance(50);
            if (place_side && s.instruction.place)
                s.instruction.place = ReferentSpec::vague_term(word);
            else
                s.instruction.pick = ReferentSpec::vague_term(word);
            s.instruction.text = render(s.instruction);
            s.goal = ClarifyGoal{AmbiguityTag::underspecified};
            s.label = AmbiguityTag::underspecified;
            break;
        }
    }
    validate_world(s.world);
    AmbiguityTag recomputed = classify_scenario(s);
    if (recomputed != s.label)
        throw ConstructionError(std::string("perturbed scenario classifies as ") +
                                to_string(recomputed) + ", expected " + to_string(s.label));
    return s;
}

// ---------------------------------------------------------------------------
// Dual-agent generator
// ---------------------------------------------------------------------------

enum class DualTask { stack, pass };

inline const char* to_string(DualTask t) { return t == DualTask::stack ? "stack" : "pass"; }

/// Two agents, three vertical bands. The pick and/or place target lands in
/// the non-acting agent's band with probability 40/40 (20% fully visible);
/// the correct behavior is encoded in the Transfer goal.
inline Scenario gen_dual(std::uint64_t seed, DualTask task) {
    Rng rng(seed);
    Scenario s;
    s.seed = seed;
    s.mode = WorldMode::dual_agent;
    s.world.grid = GridLayout::dual_agent();
    s.world.agents = {AgentId::robot1, AgentId::robot2};
    s.world.holding = {{AgentId::robot1, std::nullopt}, {AgentId::robot2, std::nullopt}};

    std::uint32_t roll = rng.below(100);
    bool pick_occluded = roll < 40;
    bool place_occluded = !pick_occluded && roll < 80;

    std::string pick_color = rng.pick(vocab::colors());
    std::string place_type = task == DualTask::stack ? "block" : "bowl";
    std::string place_color = rng.pick(vocab::colors());
    while (place_type == "block" && place_color == pick_color) place_color = rng.pick(vocab::colors());

    std::set<std::pair<std::string, std::string>> taken{{pick_color, "block"},
                                                        {place_color, place_type}};
    auto combos = detail::draw_combos(rng, 1 + rng.below(3), taken, {});

    Region band1 = s.world.grid.region(RegionName::robot1);
    Region band2 = s.world.grid.region(RegionName::robot2);
    Region shared = s.world.grid.region(RegionName::shared);
    std::vector<GridCell> visible_cells = band1.cells;
    visible_cells.insert(visible_cells.end(), shared.cells.begin(), shared.cells.end());

    auto draw_cell = [&](std::vector<GridCell> pool, const std::vector<detail::ObjectDraft>& used) {
        std::erase_if(pool, [&](GridCell c) {
            for (auto& d : used)
                if (d.cell == c) return true;
            return false;
        });
        return pool[rng.below(static_cast<std::uint32_t>(pool.size()))];
    };

    std::vector<detail::ObjectDraft> drafts;
    // a place-to-shared goal must not start pre-satisfied, so the pick target
    // stays out of the shared band in that case
    std::vector<GridCell> pick_pool = pick_occluded ? band2.cells
                                    : place_occluded ? band1.cells
                                                     : visible_cells;
    drafts.push_back({pick_color, "block", draw_cell(pick_pool, drafts)});
    drafts.push_back({place_color, place_type,
                      draw_cell(place_occluded ? band2.cells : visible_cells, drafts)});
    for (auto& [c, t] : combos) {
        auto pool = detail::all_cells(s.world.grid);
        drafts.push_back({c, t, draw_cell(pool, drafts)});
    }
    s.world.objects = detail::assign_ids(drafts);

    s.instruction.task = TaskKind::basic;
    s.instruction.pick = ReferentSpec::of({{"color", pick_color}, {"type", "block"}});
    s.instruction.place = ReferentSpec::of({{"color", place_color}, {"type", place_type}});
    s.instruction.text = render(s.instruction);
    s.goal = TransferGoal{s.world.objects[0].id,
                          place_occluded ? std::string(kSharedPlace) : s.world.objects[1].id,
                          pick_occluded};
    s.label = (pick_occluded || place_occluded) ? AmbiguityTag::occluded : AmbiguityTag::clear;
    detail::finish(s);
    return s;
}

// ---------------------------------------------------------------------------
// Suite assembly
// ---------------------------------------------------------------------------

struct SuiteConfig {
    WorldMode mode = WorldMode::single_agent;
    int clear = 100;
    int multiplicity = 100;
    int absence = 100;
    int underspecified = 100;
    int dual_count = 60;
    std::uint64_t master_seed = 7;

    Json echo() const {
        return Json{{"mode", to_string(mode)},
                    {"clear", clear},
                    {"multiplicity", multiplicity},
                    {"absence", absence},
                    {"underspecified", underspecified},
                    {"dual_count", dual_count},
                    {"master_seed", master_seed}};
    }
};

namespace detail {

template <typename Gen>
inline Scenario with_retries(std::uint64_t base_seed, Gen&& gen) {
    for (int attempt = 0;; ++attempt) {
        try {
            return gen(attempt == 0 ? base_seed : mix64(base_seed + attempt));
        } catch (const ConstructionError&) {
            if (attempt >= 50) throw;
        }
    }
}

} // namespace detail

/// Deterministic suite: clear scenarios rotate basic/spatial/long_horizon;
/// each perturbed category rotates basic/spatial bases. Byte-identical
/// across runs and platforms for a fixed config.
inline std::vector<Scenario> build_suite(const SuiteConfig& config) {
    std::vector<Scenario> suite;
    if (config.mode == WorldMode::dual_agent) {
        for (int i = 0; i < config.dual_count; ++i) {
            DualTask task = i % 2 == 0 ? DualTask::stack : DualTask::pass;
            Scenario s = detail::with_retries(
                derive_seed(config.master_seed, 4, static_cast<std::uint64_t>(i)),
                [&](std::uint64_t seed) { return gen_dual(seed, task); });
            s.id = std::string("dual-") + to_string(task) + "-" + detail::zero_pad(i, 4);
            suite.push_back(std::move(s));
        }
        return suite;
    }

    for (int i = 0; i < config.clear; ++i) {
        Scenario s = detail::with_retries(
            derive_seed(config.master_seed, 0, static_cast<std::uint64_t>(i)),
            [&](std::uint64_t seed) {
                switch (i % 3) {
                    case 0: return gen_basic(seed);
                    case 1: return gen_spatial(seed);
                    default: return gen_long_horizon(seed);
                }
            });
        s.id = "single-clear-" + detail::zero_pad(i, 4);
        suite.push_back(std::move(s));
    }
    struct CategoryPlan {
        PerturbKind kind;
        int count;
        std::uint64_t base_stream;
        std::uint64_t perturb_stream;
    };
    for (auto& plan : {CategoryPlan{PerturbKind::multiplicity, config.multiplicity, 1, 11},
                       CategoryPlan{PerturbKind::absence, config.absence, 2, 12},
                       CategoryPlan{PerturbKind::underspecified, config.underspecified, 3, 13}}) {
        for (int i = 0; i < plan.count; ++i) {
            Scenario s = detail::with_retries(
                derive_seed(config.master_seed, plan.base_stream, static_cast<std::uint64_t>(i)),
                [&](std::uint64_t seed) {
                    Scenario base = i % 2 == 0 ? gen_basic(seed) : gen_spatial(seed);
                    return perturb(base, plan.kind,
                                   derive_seed(config.master_seed, plan.perturb_stream,
                                               static_cast<std::uint64_t>(i)));
                });
            s.id = std::string("single-") + to_string(plan.kind) + "-" + detail::zero_pad(i, 4);
            suite.push_back(std::move(s));
        }
    }
    return suite;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

inline Json goal_to_json(const GoalSpec& goal) {
    if (const auto* g = std::get_if<PlacementGoal>(&goal))
        return Json{{"type", "placement"}, {"pick", g->pick}, {"place", g->place}};
    if (std::get_if<ColorMatchGoal>(&goal)) return Json{{"type", "color_match"}};
    if (const auto* g = std::get_if<TransferGoal>(&goal))
        return Json{{"type", "transfer"},
                    {"pick", g->pick},
                    {"place", g->place},
                    {"expected_ask", g->expected_ask}};
    const auto& g = std::get<ClarifyGoal>(goal);
    return Json{{"type", "clarify"}, {"tag", to_string(g.tag)}};
}

inline GoalSpec goal_from_json(const Json& j) {
    std::string type = j.value("type", "");
    if (type == "placement")
        return PlacementGoal{j.at("pick").get<std::string>(), j.at("place").get<std::string>()};
    if (type == "color_match") return ColorMatchGoal{};
    if (type == "transfer")
        return TransferGoal{j.at("pick").get<std::string>(), j.at("place").get<std::string>(),
                            j.value("expected_ask", false)};
    if (type == "clarify") {
        auto tag = ambiguity_from_string(j.value("tag", ""));
        if (!tag) throw ParseError("unknown tag at goal.tag");
        return ClarifyGoal{*tag};
    }
    throw ParseError("unknown goal type at goal.type");
}

inline Json scenario_to_json(const Scenario& s) {
    Json j;
    j["id"] = s.id;
    j["mode"] = to_string(s.mode);
    j["seed"] = s.seed;
    j["label"] = to_string(s.label);
    j["instruction"] = instruction_to_json(s.instruction);
    j["goal"] = goal_to_json(s.goal);
    j["world"] = world_to_json(s.world);
    return j;
}

inline Scenario scenario_from_json(const Json& j) {
    Scenario s;
    s.id = j.value("id", "");
    s.mode = j.value("mode", "single") == "dual" ? WorldMode::dual_agent : WorldMode::single_agent;
    s.seed = j.value("seed", std::uint64_t{0});
    auto label = ambiguity_from_string(j.value("label", ""));
    if (!label) throw ParseError("unknown label at scenario.label");
    s.label = *label;
    if (!j.contains("instruction")) throw ParseError("missing key at scenario.instruction");
    s.instruction = instruction_from_json(j.at("instruction"));
    if (!j.contains("goal")) throw ParseError("missing key at scenario.goal");
    s.goal = goal_from_json(j.at("goal"));
    if (!j.contains("world")) throw ParseError("missing key at scenario.world");
    s.world = world_from_json(j.at("world"));
    return s;
}

inline std::string scenario_file_name(const Scenario& s) { return s.id + ".json"; }

/// Writes one JSON file per scenario plus manifest.json listing them.
inline std::filesystem::path write_suite(const std::filesystem::path& dir,
                                         const std::vector<Scenario>& suite,
                                         const SuiteConfig& config) {
    std::filesystem::create_directories(dir);
    Json manifest;
    manifest["master_seed"] = config.master_seed;
    manifest["config"] = config.echo();
    Json files = Json::array();
    for (auto& s : suite) {
        std::string name = scenario_file_name(s);
        std::ofstream out(dir / name, std::ios::binary);
        out << scenario_to_json(s).dump(2) << "\n";
        files.push_back(name);
    }
    manifest["scenarios"] = files;
    auto manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path, std::ios::binary);
    out << manifest.dump(2) << "\n";
    return manifest_path;
}

inline std::vector<Scenario> load_suite(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw ParseError("cannot open manifest: " + manifest_path.string());
    Json manifest;
    try {
        manifest = Json::parse(in);
    } catch (const std::exception& e) {
        throw ParseError(std::string("malformed manifest JSON: ") + e.what());
    }
    std::vector<Scenario> suite;
    auto dir = manifest_path.parent_path();
    for (auto& name : manifest.value("scenarios", Json::array())) {
        std::ifstream f(dir / name.get<std::string>(), std::ios::binary);
        if (!f) throw ParseError("cannot open scenario file: " + name.get<std::string>());
        Json j;
        try {
            j = Json::parse(f);
        } catch (const std::exception& e) {
            throw ParseError("malformed scenario JSON in " + name.get<std::string>() + ": " + e.what());
        }
        suite.push_back(scenario_from_json(j));
    }
    return suite;
}

} // namespace tablegraph
