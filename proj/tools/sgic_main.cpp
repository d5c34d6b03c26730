// Command-line front end. Every runtime failure is reported as a single
// JSON object on stderr ({"error":{"type":...,"message":...}}) so scripted
// callers can branch on the error type without scraping prose.
#include <exception>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgic/errors.hpp"
#include "sgic/runstore.hpp"
#include "sgic/util.hpp"

namespace {

using sgic::json;

struct CommonOpts {
    std::string config_path;
    json patch = json::object();
};

void deep_merge(json& base, const json& patch) {
    for (const auto& [k, v] : patch.items()) {
        if (v.is_object() && base.contains(k) && base.at(k).is_object())
            deep_merge(base.at(k), v);
        else
            base[k] = v;
    }
}

sgic::RunConfig load_config(const CommonOpts& opts) {
    json base = json::object();
    if (!opts.config_path.empty()) {
        try {
            base = json::parse(sgic::read_text_file(opts.config_path));
        } catch (const json::exception& e) {
            throw sgic::InvalidInputError("cannot parse config " + opts.config_path + ": " +
                                          e.what());
        }
    }
    deep_merge(base, opts.patch);
    return sgic::RunConfig::from_json(base);
}

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "JSON run config; flags below override it");

    auto set_str = [cmd, &o](const std::string& flag, const char* ptr, const char* help) {
        cmd->add_option_function<std::string>(
            flag, [&o, ptr](const std::string& v) { o.patch[json::json_pointer(ptr)] = v; },
            help);
    };
    auto set_long = [cmd, &o](const std::string& flag, const char* ptr, const char* help) {
        cmd->add_option_function<long>(
            flag, [&o, ptr](long v) { o.patch[json::json_pointer(ptr)] = v; }, help);
    };
    auto set_double = [cmd, &o](const std::string& flag, const char* ptr, const char* help) {
        cmd->add_option_function<double>(
            flag, [&o, ptr](double v) { o.patch[json::json_pointer(ptr)] = v; }, help);
    };
    auto set_flag = [cmd, &o](const std::string& flag, const char* ptr, const char* help) {
        cmd->add_flag_callback(
            flag, [&o, ptr] { o.patch[json::json_pointer(ptr)] = true; }, help);
    };

    set_str("--run-id", "/run_id", "run identifier (directory name under output dir)");
    set_str("--output-dir", "/output_dir", "root directory for run artifacts");
    set_str("--dataset", "/dataset/name", "dataset loader: hotpotqa, nq, gsm8k, jsonl");
    set_str("--data", "/dataset/path", "dataset file path");
    set_str("--split", "/dataset/split", "train, validation, or test");
    set_long("--limit", "/dataset/limit", "cap on loaded samples (-1 = all)");
    set_long("--seed", "/dataset/seed", "seed for dataset-level randomness");
    set_str("--backend", "/backend/kind", "backend kind: mock or http");
    set_str("--mock-script", "/backend/script", "JSONL script for the mock backend");
    set_str("--exhaust", "/backend/exhaust", "mock exhaust policy: error or repeat_last");
    set_str("--base-url", "/backend/base_url", "http backend base URL");
    set_str("--model", "/backend/model", "http backend model name");
    set_str("--api-key-env", "/backend/api_key_env", "env var holding the API key");
    set_long("--max-retries", "/backend/max_retries", "retries for transient backend errors");
    set_str("--cache-dir", "/backend/cache_dir", "greedy-call cache directory");
    set_long("--rounds", "/calibration/max_rounds", "calibration rounds after the initial answer");
    set_str("--score-mode", "/calibration/score_mode", "computed, injected, or oracle");
    set_str("--mean-policy", "/calibration/mean_policy", "fixed_round0 or per_round");
    set_str("--scale-mode", "/calibration/scale_mode", "piecewise or as_printed");
    set_double("--temperature", "/calibration/temperature", "sampling temperature");
    set_long("--max-tokens", "/calibration/max_tokens", "generation token cap");
    set_long("--max-in-flight", "/calibration/max_in_flight", "parallel backend calls per wave");
    set_long("--doc-token-limit", "/calibration/doc_token_limit",
             "per-document whitespace-token cap");
    set_flag("--stop-on-repeat", "/calibration/stop_on_repeat",
             "stop a sample once an answer repeats");
    set_flag("--stop-on-correct", "/calibration/stop_on_correct",
             "stop a sample once an answer matches gold");
    set_flag("--include-round0", "/calibration/include_round0_in_selection",
             "let the initial answer win final selection");
    set_str("--templates-dir", "/templates_dir", "directory of prompt template overrides");
    set_long("--ratio-revise", "/ratio_revise", "revise share of the r:p mixing ratio");
    set_long("--ratio-preserve", "/ratio_preserve", "preserve share of the r:p mixing ratio");
}

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const sgic::MockScriptExhaustedError*>(&e)) return "mock_script_exhausted";
    if (dynamic_cast<const sgic::GatewayError*>(&e)) return "gateway";
    if (dynamic_cast<const sgic::DegenerateMeanError*>(&e)) return "degenerate_mean";
    if (dynamic_cast<const sgic::UndefinedMetricError*>(&e)) return "undefined_metric";
    if (dynamic_cast<const sgic::InvalidInputError*>(&e)) return "invalid_input";
    if (dynamic_cast<const std::ios_base::failure*>(&e)) return "io";
    if (dynamic_cast<const json::exception*>(&e)) return "io";
    return "internal";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"self-guided iterative calibration for retrieval-augmented QA"};
    app.require_subcommand(1);
    CommonOpts opts;

    auto* calibrate = app.add_subcommand("calibrate", "run the full calibration pipeline");
    add_common(calibrate, opts);
    calibrate->callback([&] {
        const auto dir = sgic::cmd_calibrate(load_config(opts));
        std::cout << json{{"run_dir", dir.string()}}.dump() << "\n";
    });

    auto* build = app.add_subcommand("build-trainset", "calibrate a train split and export SFT data");
    add_common(build, opts);
    build->callback([&] {
        const auto dir = sgic::cmd_build_trainset(load_config(opts));
        std::cout << json{{"run_dir", dir.string()}, {"sft", (dir / "sft.jsonl").string()}}.dump()
                  << "\n";
    });

    auto* evaluate = app.add_subcommand("evaluate", "score an existing traces file against golds");
    add_common(evaluate, opts);
    std::string traces_path;
    std::string out_dir;
    evaluate->add_option("--traces", traces_path, "traces.jsonl produced by calibrate")
        ->required();
    evaluate->add_option("--out", out_dir, "output directory (default: alongside the traces)");
    evaluate->callback([&] {
        const std::filesystem::path traces(traces_path);
        const std::filesystem::path out =
            out_dir.empty() ? traces.parent_path() : std::filesystem::path(out_dir);
        std::cout << sgic::cmd_evaluate(traces, load_config(opts), out).dump(2) << "\n";
    });

    auto* tag = app.add_subcommand("tag-experiment",
                                   "compare plain vs key-tagged prompts across doc placements");
    add_common(tag, opts);
    std::vector<std::string> placement_names{"begin", "middle", "end"};
    tag->add_option("--placement", placement_names,
                    "placements to test (begin, middle, end, random)");
    tag->callback([&] {
        std::vector<sgic::Placement> placements;
        for (const auto& name : placement_names)
            placements.push_back(sgic::placement_from_string(name));
        std::cout << sgic::cmd_tag_experiment(load_config(opts), placements).dump(2) << "\n";
    });

    auto* score = app.add_subcommand("score-docs", "print document scores for one sample");
    add_common(score, opts);
    std::string sample_id;
    score->add_option("--sample", sample_id, "sample id (default: first sample)");
    score->callback([&] {
        std::cout << sgic::cmd_score_docs(load_config(opts), sample_id).dump(2) << "\n";
    });

    auto* config = app.add_subcommand("config", "configuration helpers");
    config->require_subcommand(1);
    auto* show = config->add_subcommand("show-defaults", "print the default run config as JSON");
    show->callback(
        [] { std::cout << sgic::RunConfig::defaults().to_json().dump(2) << "\n"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"type", error_type(e)}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 1;
    }
    return 0;
}
