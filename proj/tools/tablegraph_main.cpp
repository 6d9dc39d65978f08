#include <iostream>

#include "CLI11.hpp"

#include "tablegraph/commands.hpp"

using namespace tablegraph;

int main(int argc, char** argv) {
    CLI::App app{"tablegraph: deterministic tabletop ambiguity benchmark and scene-graph agent harness"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from a config file (flags override)");

    cli::GenOptions gen;
    CLI::App* gen_cmd = app.add_subcommand("gen", "generate a scenario suite");
    gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
    gen_cmd->add_option("--mode", gen.mode, "single or dual")->capture_default_str();
    gen_cmd->add_option("--clear", gen.clear, "clear scenarios (single mode)")->capture_default_str();
    gen_cmd->add_option("--multiplicity", gen.multiplicity, "multiplicity scenarios")->capture_default_str();
    gen_cmd->add_option("--absence", gen.absence, "absence scenarios")->capture_default_str();
    gen_cmd->add_option("--underspecified", gen.underspecified, "underspecified scenarios")->capture_default_str();
    gen_cmd->add_option("--count", gen.count, "scenario count (dual mode)")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "master seed")->capture_default_str();

    cli::RunOptions run;
    CLI::App* run_cmd = app.add_subcommand("run", "run episodes over a suite");
    run_cmd->add_option("--suite", run.suite, "suite manifest path")->required();
    run_cmd->add_option("--out", run.out_dir, "transcript output directory")->required();
    run_cmd->add_option("--policy", run.policy, "oracle, llm or scripted")->capture_default_str();
    run_cmd->add_option("--graph-mode", run.graph_mode, "query, full_in_prompt or no_edges")->capture_default_str();
    run_cmd->add_option("--max-turns", run.max_turns, "retrieval turn budget")->capture_default_str();
    run_cmd->add_option("--parallel", run.parallelism, "worker threads")->capture_default_str();
    run_cmd->add_option("--retries", run.retries, "retries after transport failures")->capture_default_str();
    run_cmd->add_option("--seed", run.seed, "seed for seeded policies, echoed for provenance")->capture_default_str();
    run_cmd->add_option("--script", run.script, "scripted policy outputs (JSON map id -> lines)");
    run_cmd->add_option("--base-url", run.base_url, "chat endpoint base URL")->capture_default_str();
    run_cmd->add_option("--model", run.model, "model name")->capture_default_str();
    run_cmd->add_option("--temperature", run.temperature, "sampling temperature")->capture_default_str();
    run_cmd->add_option("--max-tokens", run.max_tokens, "completion token limit")->capture_default_str();
    run_cmd->add_option("--api-key-env", run.api_key_env, "env var holding the API key")->capture_default_str();
    run_cmd->add_option("--cache", run.cache_dir, "record/replay cache directory");
    run_cmd->add_flag("--live", run.live, "allow network requests (otherwise cache only)");

    cli::EvalOptions eval;
    CLI::App* eval_cmd = app.add_subcommand("eval", "score transcripts into a report");
    eval_cmd->add_option("--suite", eval.suite, "suite manifest path")->required();
    eval_cmd->add_option("--transcripts", eval.transcripts, "transcript directory")->required();
    eval_cmd->add_option("--out", eval.out, "report JSON output path");

    cli::InspectOptions inspect;
    CLI::App* inspect_cmd = app.add_subcommand("inspect", "pretty-print a scenario, graph, world or transcript");
    inspect_cmd->add_option("path", inspect.path, "file to inspect")->required();

    cli::ReplayOptions replay;
    CLI::App* replay_cmd = app.add_subcommand("replay", "re-run a recorded transcript and verify it is identical");
    replay_cmd->add_option("--suite", replay.suite, "suite manifest path")->required();
    replay_cmd->add_option("--transcript", replay.transcript, "transcript to replay")->required();
    replay_cmd->add_option("--out", replay.out, "write the replayed transcript here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? cli::kExitOk : cli::kExitConfig;
    }

    if (gen_cmd->parsed()) return cli::cmd_gen(gen, std::cout, std::cerr);
    if (run_cmd->parsed()) return cli::cmd_run(run, std::cout, std::cerr);
    if (eval_cmd->parsed()) return cli::cmd_eval(eval, std::cout, std::cerr);
    if (inspect_cmd->parsed()) return cli::cmd_inspect(inspect, std::cout, std::cerr);
    if (replay_cmd->parsed()) return cli::cmd_replay(replay, std::cout, std::cerr);
    return cli::kExitConfig;
}
