#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tablegraph/types.hpp"

namespace tablegraph {

// ---------------------------------------------------------------------------
// Agents, regions, grid
// ---------------------------------------------------------------------------

enum class AgentId { robot1, robot2 };

inline const char* to_string(AgentId a) { return a == AgentId::robot1 ? "robot1" : "robot2"; }

inline std::optional<AgentId> agent_from_string(std::string_view s) {
    if (s == "robot1") return AgentId::robot1;
    if (s == "robot2") return AgentId::robot2;
    return std::nullopt;
}

enum class RegionName { robot1, robot2, shared, full };

inline const char* to_string(RegionName r) {
    switch (r) {
        case RegionName::robot1: return "robot1";
        case RegionName::robot2: return "robot2";
        case RegionName::shared: return "shared";
        case RegionName::full: return "full";
    }
    return "full";
}

struct Region {
    RegionName name = RegionName::full;
    std::vector<GridCell> cells; // sorted (col,row)

    bool contains(GridCell c) const {
        return std::binary_search(cells.begin(), cells.end(), c);
    }
};

/// Discrete board. Single-agent: one `full` region. Dual-agent: three equal
/// vertical bands robot1 | shared | robot2, plus `full` as their union.
struct GridLayout {
    int cols = 7;
    int rows = 7;
    bool dual = false;

    static GridLayout single_agent() { return GridLayout{7, 7, false}; }
    static GridLayout dual_agent() { return GridLayout{9, 7, true}; }

    bool in_bounds(GridCell c) const {
        return c.col >= 0 && c.col < cols && c.row >= 0 && c.row < rows;
    }

    GridCell center() const { return GridCell{cols / 2, rows / 2}; }

    std::vector<Region> regions() const {
        std::vector<Region> out;
        auto band = [&](int c0, int c1, RegionName name) {
            Region r{name, {}};
            for (int c = c0; c < c1; ++c)
                for (int row = 0; row < rows; ++row) r.cells.push_back({c, row});
            std::sort(r.cells.begin(), r.cells.end());
            return r;
        };
        if (!dual) {
            out.push_back(band(0, cols, RegionName::full));
            return out;
        }
        int b = cols / 3;
        out.push_back(band(0, b, RegionName::robot1));
        out.push_back(band(b, 2 * b, RegionName::shared));
        out.push_back(band(2 * b, cols, RegionName::robot2));
        out.push_back(band(0, cols, RegionName::full));
        return out;
    }

    Region region(RegionName name) const {
        for (auto& r : regions())
            if (r.name == name) return r;
        return Region{name, {}};
    }
};

// ---------------------------------------------------------------------------
// Objects and world state
// ---------------------------------------------------------------------------

/// One object on the table. Exactly one of cell/container is set; container
/// points at a bowl (the object is inside it) or a block (it sits on top).
struct ObjectInstance {
    NodeId id;
    AttributeMap attributes; // must include type and color
    std::optional<GridCell> cell;
    std::optional<NodeId> container;

    std::string type() const {
        auto it = attributes.find("type");
        return it == attributes.end() ? std::string{} : it->second;
    }
    std::string color() const {
        auto it = attributes.find("color");
        return it == attributes.end() ? std::string{} : it->second;
    }
};

struct WorldState {
    GridLayout grid;
    std::vector<ObjectInstance> objects;
    std::vector<AgentId> agents{AgentId::robot1};
    std::map<AgentId, std::optional<NodeId>> holding{{AgentId::robot1, std::nullopt}};

    const ObjectInstance* find(const NodeId& id) const {
        for (auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
    ObjectInstance* find(const NodeId& id) {
        for (auto& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }

    /// Cell the object effectively occupies, following container chains.
    std::optional<GridCell> resolved_cell(const NodeId& id) const {
        const ObjectInstance* o = find(id);
        for (int depth = 0; o && depth < 8; ++depth) {
            if (o->cell) return o->cell;
            if (!o->container) return std::nullopt;
            o = find(*o->container);
        }
        return std::nullopt;
    }

    bool cell_free(GridCell c) const {
        for (auto& o : objects)
            if (o.cell && *o.cell == c) return false;
        return true;
    }

    std::vector<GridCell> free_cells_in(const Region& region) const {
        std::vector<GridCell> out;
        for (auto c : region.cells)
            if (cell_free(c)) out.push_back(c);
        return out;
    }
};

/// Validates the WorldState invariants; throws ConstructionError naming the
/// offending object.
inline void validate_world(const WorldState& w) {
    std::set<NodeId> seen;
    for (auto& o : w.objects) {
        if (o.id.empty()) throw ConstructionError("object with empty id");
        if (!seen.insert(o.id).second) throw ConstructionError("duplicate object id: " + o.id);
        if (o.attributes.find("type") == o.attributes.end() ||
            o.attributes.find("color") == o.attributes.end())
            throw ConstructionError("object missing type/color attribute: " + o.id);
        for (auto& [key, value] : o.attributes)
            if (key.empty() || value.empty())
                throw ConstructionError("empty attribute key or value on object: " + o.id);
        if (o.cell.has_value() == o.container.has_value())
            throw ConstructionError("object must have exactly one of cell/container: " + o.id);
        if (o.cell && !w.grid.in_bounds(*o.cell))
            throw ConstructionError("object cell out of bounds: " + o.id);
        if (o.container) {
            const ObjectInstance* c = w.find(*o.container);
            if (!c) throw ConstructionError("container does not exist: " + *o.container);
            if (c->type() != "bowl" && c->type() != "block")
                throw ConstructionError("container is not a bowl or block: " + *o.container);
        }
    }
    for (auto& [agent, held] : w.holding) {
        (void)agent;
        if (!held) continue;
        const ObjectInstance* o = w.find(*held);
        if (!o) throw ConstructionError("held object does not exist: " + *held);
        if (o->cell || o->container)
            throw ConstructionError("held object must have neither cell nor container: " + *held);
    }
}

// ---------------------------------------------------------------------------
// Observation
// ---------------------------------------------------------------------------

struct Observation {
    std::vector<ObjectInstance> visible;
    AgentId agent = AgentId::robot1;

    std::vector<NodeId> ids() const {
        std::vector<NodeId> out;
        out.reserve(visible.size());
        for (auto& o : visible) out.push_back(o.id);
        return out;
    }
};

/// Objects whose resolved cell lies in the agent's own band or the shared
/// band. Single-agent worlds are fully observable. Objects held by the agent
/// itself stay visible.
inline Observation observe(const WorldState& world, AgentId agent) {
    if (std::find(world.agents.begin(), world.agents.end(), agent) == world.agents.end())
        throw std::invalid_argument(std::string("unknown agent: ") + to_string(agent));
    Observation obs;
    obs.agent = agent;
    if (!world.grid.dual) {
        obs.visible = world.objects;
        return obs;
    }
    Region own = world.grid.region(agent == AgentId::robot1 ? RegionName::robot1
                                                            : RegionName::robot2);
    Region shared = world.grid.region(RegionName::shared);
    for (auto& o : world.objects) {
        auto held = world.holding.find(agent);
        if (held != world.holding.end() && held->second && *held->second == o.id) {
            obs.visible.push_back(o);
            continue;
        }
        auto cell = world.resolved_cell(o.id);
        if (!cell) continue; // held by the other agent
        if (own.contains(*cell) || shared.contains(*cell)) obs.visible.push_back(o);
    }
    return obs;
}

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

/// The literal place argument that routes an object into the shared band.
inline constexpr const char* kSharedPlace = "shared";

struct PickAndPlace {
    NodeId pick;
    std::string place; // receptacle id or kSharedPlace
};

struct Ask {
    std::string question;
    AmbiguityTag tag = AmbiguityTag::multiplicity; // multiplicity|absence|underspecified
};

struct AskRobot {
    std::string question;
};

using Action = std::variant<PickAndPlace, Ask, AskRobot>;

enum class Violation {
    none,
    occluded_target,
    holding,
    no_such_object,
    same_object,
    occupied,
    not_a_receptacle,
};

inline const char* to_string(Violation v) {
    switch (v) {
        case Violation::none: return "none";
        case Violation::occluded_target: return "occluded_target";
        case Violation::holding: return "holding";
        case Violation::no_such_object: return "no_such_object";
        case Violation::same_object: return "same_object";
        case Violation::occupied: return "occupied";
        case Violation::not_a_receptacle: return "not_a_receptacle";
    }
    return "none";
}

struct ActionOutcome {
    bool ok = true;
    Violation violation = Violation::none;
    std::string detail; // violated id, or the recorded utterance for asks
};

namespace detail {
inline bool visible_to(const WorldState& world, AgentId agent, const NodeId& id) {
    for (auto& o : observe(world, agent).visible)
        if (o.id == id) return true;
    return false;
}
} // namespace detail

/// Executes one action. Returns the successor state and the outcome; a
/// violation leaves the state unchanged. Asks never change state.
inline std::pair<WorldState, ActionOutcome> apply(const WorldState& world, AgentId agent,
                                                  const Action& action) {
    if (const auto* ask = std::get_if<Ask>(&action))
        return {world, ActionOutcome{true, Violation::none, ask->question}};
    if (const auto* ask = std::get_if<AskRobot>(&action))
        return {world, ActionOutcome{true, Violation::none, ask->question}};

    const auto& pp = std::get<PickAndPlace>(action);
    auto fail = [&](Violation v, std::string detail) {
        return std::make_pair(world, ActionOutcome{false, v, std::move(detail)});
    };

    auto held = world.holding.find(agent);
    if (held != world.holding.end() && held->second) return fail(Violation::holding, *held->second);
    if (!world.find(pp.pick)) return fail(Violation::no_such_object, pp.pick);
    if (!detail::visible_to(world, agent, pp.pick)) return fail(Violation::occluded_target, pp.pick);
    if (pp.pick == pp.place) return fail(Violation::same_object, pp.pick);
    for (auto& o : world.objects)
        if (o.container && *o.container == pp.pick) return fail(Violation::occupied, pp.pick);

    WorldState next = world;
    ObjectInstance* obj = next.find(pp.pick);
    if (pp.place == kSharedPlace) {
        Region shared = world.grid.region(world.grid.dual ? RegionName::shared : RegionName::full);
        auto free = next.free_cells_in(shared);
        if (free.empty()) return fail(Violation::occupied, kSharedPlace);
        obj->cell = free.front(); // lowest (col,row): deterministic
        obj->container.reset();
        return {next, ActionOutcome{}};
    }

    const ObjectInstance* receptacle = world.find(pp.place);
    if (!receptacle) return fail(Violation::no_such_object, pp.place);
    if (!detail::visible_to(world, agent, pp.place))
        return fail(Violation::occluded_target, pp.place);
    if (receptacle->type() == "block") {
        // at most one object per stacking support
        for (auto& o : world.objects)
            if (o.container && *o.container == pp.place) return fail(Violation::occupied, pp.place);
    } else if (receptacle->type() != "bowl") {
        return fail(Violation::not_a_receptacle, pp.place);
    }
    obj->container = pp.place;
    obj->cell.reset();
    return {next, ActionOutcome{}};
}

// ---------------------------------------------------------------------------
// Goals
// ---------------------------------------------------------------------------

struct PlacementGoal {
    NodeId pick;
    NodeId place;
};

/// Every block ends up inside the bowl of its own color.
struct ColorMatchGoal {};

/// Dual-agent expected behavior: ask the other robot when expected_ask, place
/// to the shared band when place == kSharedPlace, otherwise place directly.
struct TransferGoal {
    NodeId pick;
    std::string place; // receptacle id or kSharedPlace
    bool expected_ask = false;
};

/// Goal of an ambiguous trial: the correct clarification, not a placement.
struct ClarifyGoal {
    AmbiguityTag tag = AmbiguityTag::multiplicity;
};

using GoalSpec = std::variant<PlacementGoal, ColorMatchGoal, TransferGoal, ClarifyGoal>;

inline bool goal_satisfied(const WorldState& world, const GoalSpec& goal) {
    if (const auto* g = std::get_if<PlacementGoal>(&goal)) {
        const ObjectInstance* o = world.find(g->pick);
        return o && o->container && *o->container == g->place;
    }
    if (std::get_if<ColorMatchGoal>(&goal)) {
        for (auto& o : world.objects) {
            if (o.type() != "block") continue;
            if (!o.container) return false;
            const ObjectInstance* bowl = world.find(*o.container);
            if (!bowl || bowl->type() != "bowl" || bowl->color() != o.color()) return false;
        }
        return true;
    }
    if (const auto* g = std::get_if<TransferGoal>(&goal)) {
        if (g->expected_ask) return false; // satisfied by asking, not by state
        if (g->place == kSharedPlace) {
            auto cell = world.resolved_cell(g->pick);
            return cell && world.grid.region(RegionName::shared).contains(*cell);
        }
        const ObjectInstance* o = world.find(g->pick);
        return o && o->container && *o->container == g->place;
    }
    return false; // ClarifyGoal: satisfied by the ask action, not by state
}

// ---------------------------------------------------------------------------
// Snapshot format
// ---------------------------------------------------------------------------

inline Json world_to_json(const WorldState& w) {
    Json j;
    j["grid"] = {{"cols", w.grid.cols}, {"rows", w.grid.rows}, {"mode", w.grid.dual ? "dual" : "single"}};
    Json agents = Json::array();
    for (auto a : w.agents) agents.push_back(to_string(a));
    j["agents"] = agents;
    Json regions = Json::array();
    for (auto& r : w.grid.regions()) {
        Json cells = Json::array();
        for (auto c : r.cells) cells.push_back(Json::array({c.col, c.row}));
        regions.push_back({{"name", to_string(r.name)}, {"cells", cells}});
    }
    j["regions"] = regions;
    Json objects = Json::array();
    for (auto& o : w.objects) {
        Json jo;
        jo["id"] = o.id;
        jo["attributes"] = o.attributes;
        if (o.cell) jo["cell"] = Json::array({o.cell->col, o.cell->row});
        if (o.container) jo["container"] = *o.container;
        objects.push_back(jo);
    }
    j["objects"] = objects;
    Json holding = Json::object();
    for (auto& [agent, held] : w.holding) holding[to_string(agent)] = held ? Json(*held) : Json(nullptr);
    j["holding"] = holding;
    return j;
}

inline WorldState world_from_json(const Json& j) {
    auto need = [&](const Json& node, const char* key, const std::string& path) -> const Json& {
        if (!node.is_object() || !node.contains(key))
            throw ParseError("missing key at " + path + "." + key);
        return node.at(key);
    };
    WorldState w;
    const Json& grid = need(j, "grid", "world");
    w.grid.cols = need(grid, "cols", "world.grid").get<int>();
    w.grid.rows = need(grid, "rows", "world.grid").get<int>();
    w.grid.dual = need(grid, "mode", "world.grid").get<std::string>() == "dual";
    w.agents.clear();
    for (auto& a : need(j, "agents", "world")) {
        auto agent = agent_from_string(a.get<std::string>());
        if (!agent) throw ParseError("unknown agent at world.agents");
        w.agents.push_back(*agent);
    }
    w.holding.clear();
    w.objects.clear();
    const Json& objects = need(j, "objects", "world");
    for (std::size_t i = 0; i < objects.size(); ++i) {
        const Json& jo = objects[i];
        std::string path = "world.objects[" + std::to_string(i) + "]";
        ObjectInstance o;
        o.id = need(jo, "id", path).get<std::string>();
        for (auto& [k, v] : need(jo, "attributes", path).items()) {
            if (!v.is_string()) throw ParseError("attribute value must be a string at " + path + ".attributes." + k);
            o.attributes[fold_case(k)] = v.get<std::string>();
        }
        if (jo.contains("cell")) {
            auto& c = jo.at("cell");
            if (!c.is_array() || c.size() != 2) throw ParseError("cell must be [col,row] at " + path);
            o.cell = GridCell{c[0].get<int>(), c[1].get<int>()};
        }
        if (jo.contains("container")) o.container = jo.at("container").get<std::string>();
        w.objects.push_back(std::move(o));
    }
    if (j.contains("holding"))
        for (auto& [agent, held] : j.at("holding").items()) {
            auto a = agent_from_string(agent);
            if (!a) throw ParseError("unknown agent at world.holding");
            w.holding[*a] = held.is_null() ? std::optional<NodeId>{} : std::optional<NodeId>{held.get<std::string>()};
        }
    for (auto a : w.agents)
        if (!w.holding.count(a)) w.holding[a] = std::nullopt;
    try {
        validate_world(w);
    } catch (const ConstructionError& e) {
        throw ParseError(std::string("world invariant violated: ") + e.what());
    }
    return w;
}

} // namespace tablegraph
