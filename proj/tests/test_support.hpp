#pragma once

// Fixtures shared by the unit and acceptance suites: the two golden worked
// examples (a two-red-bowls multiplicity dialogue and an immediate
// underspecified clarification) plus small helpers.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "tablegraph/eval.hpp"
#include "tablegraph/policies.hpp"
#include "tablegraph/scenario.hpp"
#include "tablegraph/transcript_io.hpp"

namespace testsupport {

using namespace tablegraph;

inline ObjectInstance obj_at(std::string id, std::string color, std::string type, int col, int row) {
    ObjectInstance o;
    o.id = std::move(id);
    o.attributes = {{"color", std::move(color)}, {"type", std::move(type)}};
    o.cell = GridCell{col, row};
    return o;
}

inline ObjectInstance obj_in(std::string id, std::string color, std::string type, std::string container) {
    ObjectInstance o;
    o.id = std::move(id);
    o.attributes = {{"color", std::move(color)}, {"type", std::move(type)}};
    o.container = std::move(container);
    return o;
}

/// Two red bowls, one block inside each, a green bowl: the pick referent
/// ("the block inside the red bowl") is ambiguous with |X_match| = 2.
inline Scenario example1_scenario() {
    Scenario s;
    s.id = "golden-example-1";
    s.mode = WorldMode::single_agent;
    s.seed = 0;
    s.world.grid = GridLayout::single_agent();
    s.world.objects = {
        obj_at("red bowl 1", "red", "bowl", 1, 1),
        obj_at("red bowl 2", "red", "bowl", 5, 1),
        obj_in("yellow block", "yellow", "block", "red bowl 1"),
        obj_in("blue block", "blue", "block", "red bowl 2"),
        obj_at("green bowl", "green", "bowl", 3, 5),
    };
    s.instruction.task = TaskKind::basic;
    s.instruction.pick = ReferentSpec::of({{"type", "block"}});
    s.instruction.place = ReferentSpec::of({{"color", "green"}, {"type", "bowl"}});
    s.instruction.text = "Pick the block inside the red bowl and place it inside the green bowl.";
    s.goal = ClarifyGoal{AmbiguityTag::multiplicity};
    s.label = AmbiguityTag::multiplicity;
    return s;
}

inline std::vector<std::string> example1_script() {
    return {
        "The user wants me to place the block inside the red bowl into the green bowl. First, "
        "I will identify all red bowls in the scene.\n"
        "retrieve_node(type = 'bowl', color='red')",
        "There are two red bowls. I should next determine which objects are inside each of "
        "them so I can identify the relevant block.\n"
        "retrieve_edge(type='inside_of', target='red bowl 1')\n"
        "retrieve_edge(type='inside_of', target='red bowl 2')",
        "There are two red bowls, each with a different block, making the user's command "
        "ambiguous. I should ask for clarification.\n"
        "ask_multiplicity(\"Did you mean the yellow block or the blue block?\")",
    };
}

/// A grounded pick but no target location: immediately underspecified.
inline Scenario example2_scenario() {
    Scenario s;
    s.id = "golden-example-2";
    s.mode = WorldMode::single_agent;
    s.seed = 0;
    s.world.grid = GridLayout::single_agent();
    s.world.objects = {
        obj_at("red block", "red", "block", 2, 2),
        obj_at("blue bowl", "blue", "bowl", 4, 4),
        obj_at("green cup", "green", "cup", 0, 5),
    };
    s.instruction.task = TaskKind::basic;
    s.instruction.pick = ReferentSpec::of({{"color", "red"}, {"type", "block"}});
    s.instruction.place = ReferentSpec::vague_term("somewhere");
    s.instruction.text = "Can you move the red block away from the table?";
    s.goal = ClarifyGoal{AmbiguityTag::underspecified};
    s.label = AmbiguityTag::underspecified;
    return s;
}

inline std::vector<std::string> example2_script() {
    return {
        "The instruction specifies the object (red block) but does not specify the target "
        "location. I need clarification about where the block should be placed.\n"
        "ask_underspecified(\"Where exactly would you like me to place the red block?\")",
    };
}

/// Fixed report used for the rendering golden: every field pinned by hand.
inline Report report_fixture() {
    Report r;
    r.per_category = {
        {"multiplicity", CategoryStats{40, 0.625, 0.45}},
        {"absence", CategoryStats{40, 0.85, 0.7}},
        {"underspecified", CategoryStats{40, 0.75, 0.625}},
        {"clear", CategoryStats{38, 0.925, std::nullopt}},
    };
    r.episodes = 160;
    r.errored = 2;
    r.overall_sr = 0.7875;
    r.overall_sr_ambiguous = 0.7416666666666667;
    r.overall_cqr = 0.5916666666666667;
    r.calls_per_episode = 3.5;
    r.avg_tokens_in_per_call = 412.25;
    r.avg_tokens_out_per_call = 57.125;
    r.tokens_approx = false;
    r.config_echo = Json{{"policy", "llm"}, {"model", "fixture"}};
    return r;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::filesystem::path golden_dir() {
    return std::filesystem::path(TESTS_DIR) / "golden";
}

inline std::filesystem::path fresh_tmp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("tablegraph-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testsupport
