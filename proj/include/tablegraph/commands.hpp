#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tablegraph/chat.hpp"
#include "tablegraph/eval.hpp"
#include "tablegraph/policies.hpp"
#include "tablegraph/scenario.hpp"
#include "tablegraph/transcript_io.hpp"

namespace tablegraph::cli {

// Exit codes, stable across commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;       // bad option/config values
inline constexpr int kExitIo = 3;           // missing/unreadable/unparseable files
inline constexpr int kExitEpisodeFailed = 4; // at least one episode failed or differed

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenOptions {
    std::string out_dir;
    std::string mode = "single";
    int clear = 100;
    int multiplicity = 100;
    int absence = 100;
    int underspecified = 100;
    int count = 60; // dual-suite size
    std::uint64_t seed = 7;
};

inline SuiteConfig to_suite_config(const GenOptions& opt) {
    SuiteConfig config;
    config.mode = opt.mode == "dual" ? WorldMode::dual_agent : WorldMode::single_agent;
    config.clear = opt.clear;
    config.multiplicity = opt.multiplicity;
    config.absence = opt.absence;
    config.underspecified = opt.underspecified;
    config.dual_count = opt.count;
    config.master_seed = opt.seed;
    return config;
}

inline int cmd_gen(const GenOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.out_dir.empty()) {
        err << "gen: --out is required\n";
        return kExitConfig;
    }
    if (opt.mode != "single" && opt.mode != "dual") {
        err << "gen: --mode must be single or dual\n";
        return kExitConfig;
    }
    if (opt.clear < 0 || opt.multiplicity < 0 || opt.absence < 0 || opt.underspecified < 0 ||
        opt.count < 0) {
        err << "gen: scenario counts must be non-negative\n";
        return kExitConfig;
    }
    try {
        SuiteConfig config = to_suite_config(opt);
        auto suite = build_suite(config);
        auto manifest = write_suite(opt.out_dir, suite, config);
        out << "wrote " << suite.size() << " scenarios and " << manifest.string() << "\n";
        return kExitOk;
    } catch (const std::exception& e) {
        err << "gen: " << e.what() << "\n";
        return kExitIo;
    }
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunOptions {
    std::string suite; // manifest path
    std::string out_dir;
    std::string policy = "oracle"; // oracle | llm | scripted
    std::string graph_mode = "query";
    int max_turns = 8;
    int parallelism = 1;
    int retries = 0;           // extra attempts after a transport failure
    std::uint64_t seed = 7;    // reserved for seeded policies; echoed for provenance
    std::string script;        // scripted: JSON map scenario id -> [outputs]
    // chat client settings (llm policy)
    std::string base_url = "http://localhost:8000/v1";
    std::string model = "gpt-4o-mini";
    double temperature = 0.0;
    int max_tokens = 1024;
    std::string api_key_env = "OPENAI_API_KEY";
    std::string cache_dir;
    bool live = false;

    Json echo() const {
        return Json{{"suite", suite},         {"out_dir", out_dir},
                    {"policy", policy},       {"graph_mode", graph_mode},
                    {"max_turns", max_turns}, {"parallelism", parallelism},
                    {"retries", retries},     {"seed", seed},
                    {"model", model},         {"base_url", base_url},
                    {"temperature", temperature}, {"max_tokens", max_tokens},
                    {"cache_dir", cache_dir}, {"live", live}};
    }
};

namespace detail {

inline std::map<std::string, std::vector<std::string>> load_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open script file: " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const std::exception& e) {
        throw ParseError(std::string("malformed script JSON: ") + e.what());
    }
    std::map<std::string, std::vector<std::string>> script;
    for (auto& [id, outputs] : j.items()) {
        std::vector<std::string> list;
        for (auto& o : outputs) list.push_back(o.get<std::string>());
        script[id] = std::move(list);
    }
    return script;
}

} // namespace detail

/// Runs every suite episode under the selected policy; one transcript JSONL
/// per episode plus run_summary.json. Episode errors are recorded and the
/// run continues.
inline int cmd_run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.suite.empty() || opt.out_dir.empty()) {
        err << "run: --suite and --out are required\n";
        return kExitConfig;
    }
    if (opt.policy != "oracle" && opt.policy != "llm" && opt.policy != "scripted") {
        err << "run: --policy must be oracle, llm or scripted\n";
        return kExitConfig;
    }
    auto graph_mode = graph_mode_from_string(opt.graph_mode);
    if (!graph_mode) {
        err << "run: --graph-mode must be query, full_in_prompt or no_edges\n";
        return kExitConfig;
    }
    if (opt.parallelism < 1 || opt.max_turns < 0) {
        err << "run: --parallel must be >= 1 and --max-turns >= 0\n";
        return kExitConfig;
    }
    if (opt.policy == "llm" && !opt.live && opt.cache_dir.empty()) {
        err << "run: llm policy needs --cache <dir> (replay) or an explicit --live flag\n";
        return kExitConfig;
    }

    std::vector<Scenario> suite;
    std::map<std::string, std::vector<std::string>> script;
    try {
        suite = load_suite(opt.suite);
        if (opt.policy == "scripted") {
            if (opt.script.empty()) {
                err << "run: --script is required with the scripted policy\n";
                return kExitConfig;
            }
            script = detail::load_script(opt.script);
        }
        fs::create_directories(opt.out_dir);
    } catch (const std::exception& e) {
        err << "run: " << e.what() << "\n";
        return kExitIo;
    }

    std::shared_ptr<ChatClient> client;
    if (opt.policy == "llm") {
        ChatConfig chat;
        chat.base_url = opt.base_url;
        chat.model = opt.model;
        chat.temperature = opt.temperature;
        chat.max_tokens = opt.max_tokens;
        chat.api_key_env = opt.api_key_env;
        chat.cache_dir = opt.cache_dir;
        chat.live = opt.live;
        client = std::make_shared<ChatClient>(chat, std::make_shared<HttpChatTransport>(chat));
    }

    PolicyConfig config{opt.max_turns, *graph_mode};
    struct EpisodeRecord {
        std::string id;
        TranscriptStatus status;
        std::string error;
    };
    std::vector<EpisodeRecord> records(suite.size());
    std::atomic<std::size_t> cursor{0};
    std::atomic<bool> io_error{false};

    auto worker = [&]() {
        while (true) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= suite.size()) return;
            const Scenario& scenario = suite[i];
            std::unique_ptr<Policy> policy;
            if (opt.policy == "oracle") policy = std::make_unique<OraclePolicy>(scenario);
            else if (opt.policy == "llm") policy = std::make_unique<LlmPolicy>(client);
            else {
                auto it = script.find(scenario.id);
                policy = std::make_unique<ScriptedPolicy>(
                    it == script.end() ? std::vector<std::string>{} : it->second);
            }
            Transcript tr = run_episode(scenario, *policy, config);
            for (int attempt = 0; tr.status == TranscriptStatus::errored && attempt < opt.retries;
                 ++attempt)
                tr = run_episode(scenario, *policy, config);
            records[i] = {scenario.id, tr.status, tr.error};
            std::ofstream f(fs::path(opt.out_dir) / (scenario.id + ".jsonl"), std::ios::binary);
            if (!f) io_error = true;
            else f << transcript_to_jsonl(tr);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < opt.parallelism; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int completed = 0, failed = 0, errored = 0;
    Json episodes = Json::array();
    for (auto& r : records) {
        if (r.status == TranscriptStatus::completed) ++completed;
        else if (r.status == TranscriptStatus::failed) ++failed;
        else ++errored;
        episodes.push_back({{"id", r.id}, {"status", to_string(r.status)}, {"error", r.error}});
    }
    Json summary{{"config", opt.echo()},
                 {"episodes", episodes},
                 {"counts", Json{{"completed", completed}, {"failed", failed}, {"errored", errored}}}};
    {
        std::ofstream f(fs::path(opt.out_dir) / "run_summary.json", std::ios::binary);
        f << summary.dump(2) << "\n";
    }
    out << "ran " << suite.size() << " episodes: " << completed << " completed, " << failed
        << " failed, " << errored << " errored\n";
    if (io_error) {
        err << "run: failed to write one or more transcript files\n";
        return kExitIo;
    }
    return failed + errored > 0 ? kExitEpisodeFailed : kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalOptions {
    std::string suite;       // manifest path
    std::string transcripts; // directory of *.jsonl
    std::string out;         // report JSON path (optional)
};

inline int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.suite.empty() || opt.transcripts.empty()) {
        err << "eval: --suite and --transcripts are required\n";
        return kExitConfig;
    }
    try {
        std::vector<Scenario> suite = load_suite(opt.suite);
        std::map<std::string, const Scenario*> by_id;
        for (auto& s : suite) by_id[s.id] = &s;

        std::vector<fs::path> files;
        for (auto& entry : fs::directory_iterator(opt.transcripts))
            if (entry.path().extension() == ".jsonl") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            err << "eval: no transcripts in " << opt.transcripts << "\n";
            return kExitIo;
        }

        std::vector<EpisodeScore> scores;
        std::vector<CostCounters> costs;
        for (auto& file : files) {
            std::ifstream in(file, std::ios::binary);
            std::stringstream buf;
            buf << in.rdbuf();
            Transcript tr = transcript_from_jsonl(buf.str());
            auto it = by_id.find(tr.scenario_id);
            if (it == by_id.end())
                throw ParseError("transcript " + tr.scenario_id + " has no scenario in the suite");
            scores.push_back(score(tr, *it->second));
            costs.push_back(tr.cost);
        }
        Json config_echo = Json::object();
        auto summary_path = fs::path(opt.transcripts) / "run_summary.json";
        if (fs::exists(summary_path)) {
            std::ifstream in(summary_path, std::ios::binary);
            try {
                config_echo = Json::parse(in).value("config", Json::object());
            } catch (const std::exception&) {
            }
        }
        Report report = aggregate(scores, suite, costs, config_echo);
        out << render_report(report);
        if (!opt.out.empty()) {
            std::ofstream f(opt.out, std::ios::binary);
            f << report_to_json(report).dump(2) << "\n";
        }
        return kExitOk;
    } catch (const std::exception& e) {
        err << "eval: " << e.what() << "\n";
        return kExitIo;
    }
}

// ---------------------------------------------------------------------------
// inspect
// ---------------------------------------------------------------------------

namespace detail {

inline std::string render_graph_text(const SceneGraph& g) {
    std::string out = std::to_string(g.nodes.size()) + " nodes, " +
                      std::to_string(g.edges.size()) + " edges\n";
    if (!g.nodes.empty()) {
        out += "nodes:\n";
        for (auto& n : g.nodes) {
            out += "  " + n.id + " {";
            bool first = true;
            for (auto& [k, v] : n.attributes) {
                out += (first ? "" : ", ") + k + ": " + v;
                first = false;
            }
            out += "}\n";
        }
    }
    if (!g.edges.empty()) {
        out += "edges:\n";
        for (auto& e : g.edges) out += "  " + edge_sentence(e) + "\n";
    }
    return out;
}

inline std::string render_world_text(const WorldState& w) {
    std::string out = "grid: " + std::to_string(w.grid.cols) + "x" + std::to_string(w.grid.rows) +
                      (w.grid.dual ? " (dual" : " (single") + std::string(")\n");
    out += "regions:";
    for (auto& r : w.grid.regions())
        out += std::string(" ") + to_string(r.name) + "(" + std::to_string(r.cells.size()) + ")";
    out += "\nobjects:\n";
    for (auto& o : w.objects) {
        out += "  " + o.id;
        if (o.cell)
            out += " @ (" + std::to_string(o.cell->col) + "," + std::to_string(o.cell->row) + ")";
        if (o.container) out += " in " + *o.container;
        out += "\n";
    }
    for (auto& [agent, held] : w.holding)
        if (held) out += std::string("holding: ") + to_string(agent) + " -> " + *held + "\n";
    return out;
}

inline std::string render_scenario_text(const Scenario& s) {
    std::string out;
    out += "scenario: " + s.id + "\n";
    out += std::string("mode: ") + to_string(s.mode) + ", label: " + to_string(s.label) +
           ", seed: " + std::to_string(s.seed) + "\n";
    out += "instruction: " + s.instruction.text + "\n";
    out += "goal: " + goal_to_json(s.goal).dump() + "\n";
    out += render_world_text(s.world);
    return out;
}

} // namespace detail

struct InspectOptions {
    std::string path;
};

/// Pretty-prints a scenario, world snapshot, graph file, or transcript
/// (transcripts render as the User/LLM/SG dialogue).
inline int cmd_inspect(const InspectOptions& opt, std::ostream& out, std::ostream& err) {
    try {
        std::ifstream in(opt.path, std::ios::binary);
        if (!in) {
            err << "inspect: cannot open " << opt.path << "\n";
            return kExitIo;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        std::string text = buf.str();

        std::string first_line = text.substr(0, text.find('\n'));
        if (first_line.find("\"type\"") != std::string::npos &&
            first_line.find("\"episode\"") != std::string::npos) {
            Transcript tr = transcript_from_jsonl(text);
            out << render_dialogue(tr);
            out << "-- status: " << to_string(tr.status) << ", calls: " << tr.cost.calls << "\n";
            return kExitOk;
        }
        Json j = Json::parse(text);
        if (j.contains("nodes") && j.contains("edges")) {
            out << detail::render_graph_text(parse_scene_graph(text));
            return kExitOk;
        }
        if (j.contains("instruction") && j.contains("world")) {
            out << detail::render_scenario_text(scenario_from_json(j));
            return kExitOk;
        }
        if (j.contains("objects") && j.contains("grid")) {
            out << detail::render_world_text(world_from_json(j));
            return kExitOk;
        }
        err << "inspect: unrecognized file shape (expected scenario, world, graph or transcript)\n";
        return kExitIo;
    } catch (const std::exception& e) {
        err << "inspect: " << e.what() << "\n";
        return kExitIo;
    }
}

// ---------------------------------------------------------------------------
// replay
// ---------------------------------------------------------------------------

struct ReplayOptions {
    std::string suite;      // manifest path
    std::string transcript; // recorded episode
    std::string out;        // optional: write the replayed transcript here
};

/// Re-runs an episode by feeding the recorded policy outputs back through the
/// runner and checks the result is byte-identical.
inline int cmd_replay(const ReplayOptions& opt, std::ostream& out, std::ostream& err) {
    if (opt.suite.empty() || opt.transcript.empty()) {
        err << "replay: --suite and --transcript are required\n";
        return kExitConfig;
    }
    try {
        std::ifstream in(opt.transcript, std::ios::binary);
        if (!in) {
            err << "replay: cannot open " << opt.transcript << "\n";
            return kExitIo;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        std::string original = buf.str();
        Transcript recorded = transcript_from_jsonl(original);

        std::vector<Scenario> suite = load_suite(opt.suite);
        const Scenario* scenario = nullptr;
        for (auto& s : suite)
            if (s.id == recorded.scenario_id) scenario = &s;
        if (!scenario) {
            err << "replay: scenario " << recorded.scenario_id << " not in suite\n";
            return kExitIo;
        }
        std::vector<std::string> outputs;
        for (auto& turn : recorded.history.turns) outputs.push_back(turn.raw);
        std::vector<TokenUsage> usages; // replay recorded usage so cost matches
        if (!recorded.cost.approx)
            for (std::size_t i = 0;
                 i < recorded.cost.tokens_in.size() && i < recorded.cost.tokens_out.size(); ++i)
                usages.push_back({recorded.cost.tokens_in[i], recorded.cost.tokens_out[i]});
        ScriptedPolicy policy(outputs, usages);
        Transcript replayed = run_episode(*scenario, policy, recorded.config);
        std::string regenerated = transcript_to_jsonl(replayed);
        if (!opt.out.empty()) {
            std::ofstream f(opt.out, std::ios::binary);
            f << regenerated;
        }
        if (regenerated == original) {
            out << "replay identical: " << recorded.scenario_id << "\n";
            return kExitOk;
        }
        out << "replay differs: " << recorded.scenario_id << "\n";
        return kExitEpisodeFailed;
    } catch (const std::exception& e) {
        err << "replay: " << e.what() << "\n";
        return kExitIo;
    }
}

} // namespace tablegraph::cli
