#include "doctest.h"

#include <map>
#include <sstream>

#include "tablegraph/commands.hpp"

#include "test_support.hpp"

using namespace tablegraph;

namespace {

std::map<std::string, std::string> dir_contents(const std::filesystem::path& dir) {
    std::map<std::string, std::string> out;
    for (auto& entry : std::filesystem::recursive_directory_iterator(dir))
        if (entry.is_regular_file())
            out[entry.path().filename().string()] = testsupport::read_file(entry.path());
    return out;
}

struct Capture {
    std::ostringstream out, err;
};

} // namespace

TEST_CASE("cmd_gen: identical directories for the same seed, manifest only for zero counts") {
    auto root = testsupport::fresh_tmp_dir("cli-gen");
    Capture c;
    cli::GenOptions a;
    a.out_dir = (root / "a").string();
    a.clear = a.multiplicity = a.absence = a.underspecified = 3;
    a.seed = 11;
    cli::GenOptions b = a;
    b.out_dir = (root / "b").string();
    REQUIRE(cli::cmd_gen(a, c.out, c.err) == cli::kExitOk);
    REQUIRE(cli::cmd_gen(b, c.out, c.err) == cli::kExitOk);
    CHECK(dir_contents(root / "a") == dir_contents(root / "b"));

    cli::GenOptions zero;
    zero.out_dir = (root / "zero").string();
    zero.clear = zero.multiplicity = zero.absence = zero.underspecified = 0;
    REQUIRE(cli::cmd_gen(zero, c.out, c.err) == cli::kExitOk);
    auto files = dir_contents(root / "zero");
    CHECK(files.size() == 1);
    CHECK(files.count("manifest.json") == 1);

    cli::GenOptions bad;
    bad.out_dir = (root / "bad").string();
    bad.mode = "triple";
    CHECK(cli::cmd_gen(bad, c.out, c.err) == cli::kExitConfig);

    cli::GenOptions negative;
    negative.out_dir = (root / "bad2").string();
    negative.absence = -1;
    CHECK(cli::cmd_gen(negative, c.out, c.err) == cli::kExitConfig);
    std::filesystem::remove_all(root);
}

TEST_CASE("cmd_gen: default layout writes 400 scenario files plus the manifest") {
    auto root = testsupport::fresh_tmp_dir("cli-gen-default");
    Capture c;
    cli::GenOptions gen;
    gen.out_dir = (root / "suite").string();
    REQUIRE(cli::cmd_gen(gen, c.out, c.err) == cli::kExitOk);
    std::size_t scenario_files = 0;
    for (auto& entry : std::filesystem::directory_iterator(root / "suite"))
        if (entry.path().filename() != "manifest.json") ++scenario_files;
    CHECK(scenario_files == 400);
    Json manifest = Json::parse(testsupport::read_file(root / "suite" / "manifest.json"));
    CHECK(manifest.at("scenarios").size() == 400);
    std::filesystem::remove_all(root);
}

TEST_CASE("cmd_run + cmd_eval: oracle pipeline, parallelism invariance") {
    auto root = testsupport::fresh_tmp_dir("cli-run");
    Capture c;
    cli::GenOptions gen;
    gen.out_dir = (root / "suite").string();
    gen.clear = 4;
    gen.multiplicity = 4;
    gen.absence = 4;
    gen.underspecified = 4;
    gen.seed = 21;
    REQUIRE(cli::cmd_gen(gen, c.out, c.err) == cli::kExitOk);

    cli::RunOptions serial;
    serial.suite = (root / "suite" / "manifest.json").string();
    serial.out_dir = (root / "serial").string();
    REQUIRE(cli::cmd_run(serial, c.out, c.err) == cli::kExitOk);

    cli::RunOptions parallel = serial;
    parallel.out_dir = (root / "parallel").string();
    parallel.parallelism = 8;
    REQUIRE(cli::cmd_run(parallel, c.out, c.err) == cli::kExitOk);

    auto a = dir_contents(root / "serial");
    auto b = dir_contents(root / "parallel");
    a.erase("run_summary.json"); // config echo differs (out_dir, parallelism)
    b.erase("run_summary.json");
    CHECK(a == b);

    std::ostringstream table;
    cli::EvalOptions eval;
    eval.suite = serial.suite;
    eval.transcripts = serial.out_dir;
    eval.out = (root / "report.json").string();
    REQUIRE(cli::cmd_eval(eval, table, c.err) == cli::kExitOk);
    CHECK(table.str().find("SR") != std::string::npos);
    Report report = report_from_json(Json::parse(testsupport::read_file(root / "report.json")));
    CHECK(report.overall_sr == 1.0);
    CHECK(report.overall_cqr == 1.0);
    CHECK(report.episodes == 16);

    // a missing transcript directory is an IO error
    cli::EvalOptions missing = eval;
    missing.transcripts = (root / "nope").string();
    CHECK(cli::cmd_eval(missing, c.out, c.err) == cli::kExitIo);
    std::filesystem::remove_all(root);
}

TEST_CASE("cmd_run: scripted policy and failure exit code") {
    auto root = testsupport::fresh_tmp_dir("cli-scripted");
    Capture c;
    cli::GenOptions gen;
    gen.out_dir = (root / "suite").string();
    gen.clear = 1;
    gen.multiplicity = 1;
    gen.absence = 0;
    gen.underspecified = 0;
    gen.seed = 31;
    REQUIRE(cli::cmd_gen(gen, c.out, c.err) == cli::kExitOk);
    auto suite = load_suite(root / "suite" / "manifest.json");

    Json script = Json::object();
    for (auto& s : suite) {
        if (s.label == AmbiguityTag::clear)
            // two malformed outputs fail this episode
            script[s.id] = Json::array({"no call at all", "still no call"});
        else
            script[s.id] = Json::array({"ask('Could you clarify?', multiplicity)"});
    }
    testsupport::write_file(root / "script.json", script.dump());

    cli::RunOptions run;
    run.suite = (root / "suite" / "manifest.json").string();
    run.out_dir = (root / "tr").string();
    run.policy = "scripted";
    run.script = (root / "script.json").string();
    CHECK(cli::cmd_run(run, c.out, c.err) == cli::kExitEpisodeFailed);
    CHECK(std::filesystem::exists(root / "tr" / "run_summary.json"));
    Json summary = Json::parse(testsupport::read_file(root / "tr" / "run_summary.json"));
    CHECK(summary.at("counts").at("failed").get<int>() == 1);
    CHECK(summary.at("counts").at("completed").get<int>() == 1);

    // an episode with no scripted outputs stays errored even with retries
    cli::RunOptions retried = run;
    retried.out_dir = (root / "tr2").string();
    retried.script = (root / "empty-script.json").string();
    retried.retries = 2;
    testsupport::write_file(root / "empty-script.json", "{}");
    CHECK(cli::cmd_run(retried, c.out, c.err) == cli::kExitEpisodeFailed);
    Json retried_summary = Json::parse(testsupport::read_file(root / "tr2" / "run_summary.json"));
    CHECK(retried_summary.at("counts").at("errored").get<int>() == 2);
    std::filesystem::remove_all(root);
}

TEST_CASE("cmd_inspect: graph, scenario, and dialogue renderings") {
    auto root = testsupport::fresh_tmp_dir("cli-inspect");
    Capture c;

    testsupport::write_file(root / "empty.json", R"({"nodes": [], "edges": []})");
    std::ostringstream empty_out;
    REQUIRE(cli::cmd_inspect({(root / "empty.json").string()}, empty_out, c.err) == cli::kExitOk);
    CHECK(empty_out.str().rfind("0 nodes, 0 edges", 0) == 0);

    Scenario s = testsupport::example1_scenario();
    SceneGraph g = build_from_observation(s.world.objects, s.world.grid);
    testsupport::write_file(root / "graph.json", serialize(g));
    std::ostringstream graph_out;
    REQUIRE(cli::cmd_inspect({(root / "graph.json").string()}, graph_out, c.err) == cli::kExitOk);
    // every edge renders as its sentence
    for (auto& e : g.edges) CHECK(graph_out.str().find(edge_sentence(e)) != std::string::npos);

    testsupport::write_file(root / "scenario.json", scenario_to_json(s).dump(2) + "\n");
    std::ostringstream scen_out;
    REQUIRE(cli::cmd_inspect({(root / "scenario.json").string()}, scen_out, c.err) == cli::kExitOk);
    CHECK(scen_out.str().find(s.instruction.text) != std::string::npos);
    CHECK(scen_out.str().find("label: multiplicity") != std::string::npos);

    ScriptedPolicy policy(testsupport::example1_script());
    Transcript tr = run_episode(s, policy, PolicyConfig{});
    testsupport::write_file(root / "episode.jsonl", transcript_to_jsonl(tr));
    std::ostringstream dlg_out;
    REQUIRE(cli::cmd_inspect({(root / "episode.jsonl").string()}, dlg_out, c.err) == cli::kExitOk);
    CHECK(dlg_out.str().find("User: ") != std::string::npos);
    CHECK(dlg_out.str().find("SG: ['red bowl 1', 'red bowl 2']") != std::string::npos);

    CHECK(cli::cmd_inspect({(root / "missing.json").string()}, c.out, c.err) == cli::kExitIo);
    testsupport::write_file(root / "junk.json", "{]");
    CHECK(cli::cmd_inspect({(root / "junk.json").string()}, c.out, c.err) == cli::kExitIo);
    std::filesystem::remove_all(root);
}

TEST_CASE("cmd_replay: identical for recorded runs, differing transcripts flagged") {
    auto root = testsupport::fresh_tmp_dir("cli-replay");
    Capture c;
    cli::GenOptions gen;
    gen.out_dir = (root / "suite").string();
    gen.clear = 2;
    gen.multiplicity = 1;
    gen.absence = 0;
    gen.underspecified = 0;
    gen.seed = 41;
    REQUIRE(cli::cmd_gen(gen, c.out, c.err) == cli::kExitOk);
    cli::RunOptions run;
    run.suite = (root / "suite" / "manifest.json").string();
    run.out_dir = (root / "tr").string();
    REQUIRE(cli::cmd_run(run, c.out, c.err) == cli::kExitOk);

    cli::ReplayOptions replay;
    replay.suite = run.suite;
    replay.transcript = (root / "tr" / "single-clear-0000.jsonl").string();
    CHECK(cli::cmd_replay(replay, c.out, c.err) == cli::kExitOk);

    // tamper with a recorded tool result: replay recomputes it and differs
    std::string broken = testsupport::read_file(replay.transcript);
    auto at = broken.find("\"results\":[\"");
    REQUIRE(at != std::string::npos);
    broken.insert(at + 12, "bogus ");
    testsupport::write_file(root / "tampered.jsonl", broken);
    cli::ReplayOptions bad = replay;
    bad.transcript = (root / "tampered.jsonl").string();
    CHECK(cli::cmd_replay(bad, c.out, c.err) == cli::kExitEpisodeFailed);
    std::filesystem::remove_all(root);
}
