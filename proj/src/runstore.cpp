#include "sgic/runstore.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <set>
#include <sstream>

#include "sgic/errors.hpp"
#include "sgic/eval.hpp"
#include "sgic/jsonl.hpp"
#include "sgic/trainset.hpp"
#include "sgic/util.hpp"

namespace sgic {

namespace {

std::string interpolate_env_string(const std::string& s, std::vector<std::string>& problems) {
    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '$' && i + 1 < s.size() && s[i + 1] == '{') {
            const std::size_t close = s.find('}', i + 2);
            if (close == std::string::npos) {
                problems.push_back("unterminated ${ in \"" + s + "\"");
                out += s.substr(i);
                break;
            }
            const std::string var = s.substr(i + 2, close - i - 2);
            if (const char* v = std::getenv(var.c_str()))
                out += v;
            else
                problems.push_back("environment variable not set: " + var);
            i = close + 1;
        } else {
            out += s[i++];
        }
    }
    return out;
}

json interpolate_env(const json& j, std::vector<std::string>& problems) {
    if (j.is_string()) return interpolate_env_string(j.get<std::string>(), problems);
    if (j.is_object()) {
        json out = json::object();
        for (const auto& [k, v] : j.items()) out[k] = interpolate_env(v, problems);
        return out;
    }
    if (j.is_array()) {
        json out = json::array();
        for (const auto& v : j) out.push_back(interpolate_env(v, problems));
        return out;
    }
    return j;
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where,
                std::vector<std::string>& problems) {
    for (const auto& [k, v] : obj.items())
        if (!allowed.count(k)) problems.push_back("unknown key \"" + k + "\" in " + where);
}

template <typename T, typename Setter>
void grab(const json& obj, const char* key, const std::string& where,
          std::vector<std::string>& problems, Setter setter) {
    if (!obj.contains(key)) return;
    try {
        setter(obj.at(key).get<T>());
    } catch (const std::exception& e) {
        problems.push_back("bad value for " + where + "." + key + ": " + e.what());
    }
}

std::string file_hash(const std::filesystem::path& path) {
    return hex64(fnv1a64(read_text_file(path)));
}

std::string templates_hash(const TemplateSet& t) {
    std::uint64_t h = fnv1a64(t.initial_qa);
    h = fnv1a64(t.doc_probe, h);
    h = fnv1a64(t.calibration, h);
    h = fnv1a64(t.key_tag, h);
    h = fnv1a64(t.gsm8k_calibration, h);
    return hex64(h);
}

CalibrationConfig effective_calibration(const RunConfig& config) {
    CalibrationConfig calib = config.calibration;
    if (!config.templates_dir.empty()) calib.templates = TemplateSet::load_dir(config.templates_dir);
    return calib;
}

}  // namespace

RunConfig RunConfig::defaults() { return RunConfig{}; }

RunConfig RunConfig::from_json(const json& raw) {
    std::vector<std::string> problems;
    const json j = interpolate_env(raw, problems);
    RunConfig c = defaults();

    check_keys(j,
               {"run_id", "output_dir", "dataset", "backend", "calibration", "templates_dir",
                "ratio_revise", "ratio_preserve"},
               "config", problems);
    grab<std::string>(j, "run_id", "config", problems, [&](auto v) { c.run_id = v; });
    grab<std::string>(j, "output_dir", "config", problems, [&](auto v) { c.output_dir = v; });
    grab<std::string>(j, "templates_dir", "config", problems,
                      [&](auto v) { c.templates_dir = v; });
    grab<int>(j, "ratio_revise", "config", problems, [&](auto v) { c.ratio_revise = v; });
    grab<int>(j, "ratio_preserve", "config", problems, [&](auto v) { c.ratio_preserve = v; });

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        check_keys(d, {"name", "path", "split", "limit", "seed"}, "dataset", problems);
        grab<std::string>(d, "name", "dataset", problems, [&](auto v) { c.dataset.name = v; });
        grab<std::string>(d, "path", "dataset", problems, [&](auto v) { c.dataset.path = v; });
        grab<std::string>(d, "split", "dataset", problems,
                          [&](auto v) { c.dataset.split = split_from_string(v); });
        grab<long>(d, "limit", "dataset", problems, [&](auto v) { c.dataset.limit = v; });
        grab<std::uint64_t>(d, "seed", "dataset", problems, [&](auto v) { c.dataset.seed = v; });
    }
    if (j.contains("backend")) {
        const json& b = j.at("backend");
        check_keys(b,
                   {"kind", "script", "exhaust", "base_url", "model", "api_key_env",
                    "max_retries", "cache_dir"},
                   "backend", problems);
        grab<std::string>(b, "kind", "backend", problems, [&](auto v) { c.backend.kind = v; });
        grab<std::string>(b, "script", "backend", problems, [&](auto v) { c.backend.script = v; });
        grab<std::string>(b, "exhaust", "backend", problems,
                          [&](auto v) { c.backend.exhaust = v; });
        grab<std::string>(b, "base_url", "backend", problems,
                          [&](auto v) { c.backend.base_url = v; });
        grab<std::string>(b, "model", "backend", problems, [&](auto v) { c.backend.model = v; });
        grab<std::string>(b, "api_key_env", "backend", problems,
                          [&](auto v) { c.backend.api_key_env = v; });
        grab<int>(b, "max_retries", "backend", problems,
                  [&](auto v) { c.backend.max_retries = v; });
        grab<std::string>(b, "cache_dir", "backend", problems,
                          [&](auto v) { c.backend.cache_dir = v; });
    }
    if (j.contains("calibration")) {
        const json& k = j.at("calibration");
        check_keys(k,
                   {"max_rounds", "stop_on_repeat", "stop_on_correct", "score_mode",
                    "mean_policy", "scale_mode", "temperature", "max_tokens", "max_in_flight",
                    "include_round0_in_selection", "oracle_seed", "doc_token_limit"},
                   "calibration", problems);
        auto& cal = c.calibration;
        grab<int>(k, "max_rounds", "calibration", problems, [&](auto v) { cal.max_rounds = v; });
        grab<bool>(k, "stop_on_repeat", "calibration", problems,
                   [&](auto v) { cal.stop_on_repeat = v; });
        grab<bool>(k, "stop_on_correct", "calibration", problems,
                   [&](auto v) { cal.stop_on_correct = v; });
        grab<std::string>(k, "score_mode", "calibration", problems,
                          [&](auto v) { cal.score_mode = score_mode_from_string(v); });
        grab<std::string>(k, "mean_policy", "calibration", problems,
                          [&](auto v) { cal.mean_policy = mean_policy_from_string(v); });
        grab<std::string>(k, "scale_mode", "calibration", problems, [&](auto v) {
            cal.scale_mode = v == "as_printed" ? ScaleMode::as_printed : ScaleMode::piecewise;
        });
        grab<double>(k, "temperature", "calibration", problems,
                     [&](auto v) { cal.temperature = v; });
        grab<int>(k, "max_tokens", "calibration", problems, [&](auto v) { cal.max_tokens = v; });
        grab<int>(k, "max_in_flight", "calibration", problems,
                  [&](auto v) { cal.max_in_flight = v; });
        grab<bool>(k, "include_round0_in_selection", "calibration", problems,
                   [&](auto v) { cal.include_round0_in_selection = v; });
        grab<std::uint64_t>(k, "oracle_seed", "calibration", problems,
                            [&](auto v) { cal.oracle_seed = v; });
        grab<int>(k, "doc_token_limit", "calibration", problems,
                  [&](auto v) { cal.render.doc_token_limit = v; });
    }

    if (!problems.empty()) {
        std::string msg = "invalid config:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw InvalidInputError(msg);
    }
    return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw InvalidInputError("cannot parse config " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

json RunConfig::to_json() const {
    json j;
    j["run_id"] = run_id;
    j["output_dir"] = output_dir;
    j["dataset"] = {{"name", dataset.name},
                    {"path", dataset.path},
                    {"split", to_string(dataset.split)},
                    {"limit", dataset.limit},
                    {"seed", dataset.seed}};
    j["backend"] = {{"kind", backend.kind},
                    {"script", backend.script},
                    {"exhaust", backend.exhaust},
                    {"base_url", backend.base_url},
                    {"model", backend.model},
                    {"api_key_env", backend.api_key_env},
                    {"max_retries", backend.max_retries},
                    {"cache_dir", backend.cache_dir}};
    j["calibration"] = {{"max_rounds", calibration.max_rounds},
                        {"stop_on_repeat", calibration.stop_on_repeat},
                        {"stop_on_correct", calibration.stop_on_correct},
                        {"score_mode", to_string(calibration.score_mode)},
                        {"mean_policy", to_string(calibration.mean_policy)},
                        {"scale_mode", calibration.scale_mode == ScaleMode::as_printed
                                           ? "as_printed"
                                           : "piecewise"},
                        {"temperature", calibration.temperature},
                        {"max_tokens", calibration.max_tokens},
                        {"max_in_flight", calibration.max_in_flight},
                        {"include_round0_in_selection", calibration.include_round0_in_selection},
                        {"oracle_seed", calibration.oracle_seed},
                        {"doc_token_limit", calibration.render.doc_token_limit}};
    j["templates_dir"] = templates_dir;
    j["ratio_revise"] = ratio_revise;
    j["ratio_preserve"] = ratio_preserve;
    return j;
}

void RunConfig::validate(bool require_paths) const {
    std::vector<std::string> problems;
    if (run_id.empty()) problems.push_back("run_id must be set");
    if (run_id.find('/') != std::string::npos) problems.push_back("run_id must not contain '/'");
    if (output_dir.empty()) problems.push_back("output_dir must be set");

    static const std::set<std::string> kDatasets{"hotpotqa", "nq", "gsm8k", "jsonl"};
    if (!kDatasets.count(dataset.name))
        problems.push_back("unknown dataset name: " + dataset.name);
    if (dataset.path.empty())
        problems.push_back("dataset.path must be set");
    else if (require_paths && !std::filesystem::exists(dataset.path))
        problems.push_back("dataset.path does not exist: " + dataset.path);
    if (dataset.limit == 0 || dataset.limit < -1)
        problems.push_back("dataset.limit must be -1 (all) or positive");

    if (backend.kind == "mock") {
        if (backend.script.empty())
            problems.push_back("mock backend needs backend.script");
        else if (require_paths && !std::filesystem::exists(backend.script))
            problems.push_back("backend.script does not exist: " + backend.script);
        if (backend.exhaust != "error" && backend.exhaust != "repeat_last")
            problems.push_back("backend.exhaust must be error or repeat_last");
    } else if (backend.kind == "http") {
        if (backend.base_url.rfind("http://", 0) != 0)
            problems.push_back("http backend needs an http:// base_url");
        if (backend.model.empty()) problems.push_back("http backend needs backend.model");
        if (!backend.api_key_env.empty() && !std::getenv(backend.api_key_env.c_str()))
            problems.push_back("api key environment variable not set: " + backend.api_key_env);
    } else {
        problems.push_back("unknown backend kind: " + backend.kind);
    }
    if (backend.max_retries < 0) problems.push_back("backend.max_retries must be >= 0");

    if (ratio_revise < 0 || ratio_preserve < 0 || (ratio_revise == 0 && ratio_preserve == 0))
        problems.push_back("mixing ratio must have a positive side");
    if (!templates_dir.empty() && require_paths && !std::filesystem::exists(templates_dir))
        problems.push_back("templates_dir does not exist: " + templates_dir);

    try {
        calibration.validate();
    } catch (const InvalidInputError& e) {
        std::istringstream lines(e.what());
        std::string line;
        std::getline(lines, line);  // drop the heading
        while (std::getline(lines, line))
            if (line.size() > 4) problems.push_back(line.substr(4));
    }

    if (!problems.empty()) {
        std::string msg = "invalid config:";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw InvalidInputError(msg);
    }
}

std::filesystem::path RunConfig::run_dir() const {
    return std::filesystem::path(output_dir) / run_id;
}

// ---------------------------------------------------------------------------
// Manifest and lock
// ---------------------------------------------------------------------------

json RunManifest::to_json() const {
    json j;
    j["run_id"] = run_id;
    j["created_at"] = created_at;
    j["finished_at"] = finished_at;
    j["stage"] = stage;
    j["config"] = config_snapshot;
    j["templates_hash"] = templates_hash;
    j["script_hash"] = script_hash;
    j["progress"] =
        {{"waves_done", waves_done}, {"samples_done", samples_done}, {"resumed", resumed}};
    j["dataset_stats"] = dataset_stats;
    return j;
}

RunManifest RunManifest::from_json(const json& j) {
    RunManifest m;
    m.run_id = j.value("run_id", std::string{});
    m.created_at = j.value("created_at", std::string{});
    m.finished_at = j.value("finished_at", std::string{});
    m.stage = j.value("stage", std::string{});
    m.config_snapshot = j.value("config", json::object());
    m.templates_hash = j.value("templates_hash", std::string{});
    m.script_hash = j.value("script_hash", std::string{});
    if (j.contains("progress")) {
        m.waves_done = j.at("progress").value("waves_done", 0);
        m.samples_done = j.at("progress").value("samples_done", 0L);
        m.resumed = j.at("progress").value("resumed", 0L);
    }
    m.dataset_stats = j.value("dataset_stats", json::object());
    return m;
}

void RunManifest::save(const std::filesystem::path& run_dir) const {
    write_text_file_atomic(run_dir / "manifest.json", to_json().dump(2) + "\n");
}

RunLock::RunLock(const std::filesystem::path& run_dir) : path_(run_dir / ".lock") {
    for (int attempt = 0; attempt < 2; ++attempt) {
        const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd >= 0) {
            const std::string pid = std::to_string(::getpid()) + "\n";
            [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
            ::close(fd);
            return;
        }
        // Reclaim the lock if its owner is gone (crashed run).
        try {
            const std::string holder = read_text_file(path_);
            const long pid = std::stol(holder);
            if (!std::filesystem::exists("/proc/" + std::to_string(pid))) {
                std::filesystem::remove(path_);
                continue;
            }
            throw InvalidInputError("run directory locked by running process " +
                                    std::to_string(pid) + ": " + path_.string());
        } catch (const InvalidInputError&) {
            throw;
        } catch (const std::exception&) {
            // Unreadable lock content: treat as stale.
            std::filesystem::remove(path_);
        }
    }
    throw InvalidInputError("cannot acquire lock: " + path_.string());
}

RunLock::~RunLock() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
}

// ---------------------------------------------------------------------------
// Dataset and gateway wiring
// ---------------------------------------------------------------------------

LoadResult load_dataset(const DatasetSpec& spec, Gateway* gateway) {
    if (spec.name == "hotpotqa") return load_hotpotqa(spec.path, spec.split, spec.limit);
    if (spec.name == "nq") return reconstruct_nq(spec.path, spec.split, spec.limit, spec.seed);
    if (spec.name == "gsm8k") return load_gsm8k_steps(spec.path, spec.split, spec.limit, gateway);
    if (spec.name == "jsonl") {
        LoadResult out;
        out.samples = load_jsonl_samples(spec.path);
        out.stats.total = static_cast<long>(out.samples.size());
        if (spec.limit >= 0 && static_cast<long>(out.samples.size()) > spec.limit)
            out.samples.resize(static_cast<std::size_t>(spec.limit));
        for (auto& s : out.samples) s.split = spec.split;
        out.stats.loaded = static_cast<long>(out.samples.size());
        return out;
    }
    throw InvalidInputError("unknown dataset name: " + spec.name);
}

std::unique_ptr<Gateway> make_gateway(const RunConfig& config,
                                      const std::filesystem::path& run_dir) {
    std::shared_ptr<Backend> backend;
    if (config.backend.kind == "mock") {
        const auto policy = config.backend.exhaust == "repeat_last"
                                ? MockExhaustPolicy::repeat_last
                                : MockExhaustPolicy::error;
        backend = MockBackend::from_jsonl(config.backend.script, policy);
    } else {
        HttpBackendConfig hc;
        hc.base_url = config.backend.base_url;
        hc.model = config.backend.model;
        if (!config.backend.api_key_env.empty()) {
            const char* key = std::getenv(config.backend.api_key_env.c_str());
            if (!key)
                throw InvalidInputError("api key environment variable not set: " +
                                        config.backend.api_key_env);
            hc.api_key = key;
        }
        backend = std::make_shared<HttpBackend>(hc);
    }
    GatewayOptions opts;
    opts.max_retries = config.backend.max_retries;
    if (!config.backend.cache_dir.empty())
        opts.cache_dir = config.backend.cache_dir;
    else if (!run_dir.empty())
        opts.cache_dir = run_dir / "cache";
    return std::make_unique<Gateway>(std::move(backend), std::move(opts));
}

// ---------------------------------------------------------------------------
// Report assembly shared by calibrate and evaluate
// ---------------------------------------------------------------------------

namespace {

const CalibrationRound* chosen_round(const CalibrationTrace& trace) {
    if (trace.rounds.empty()) return nullptr;
    if (trace.final_choice >= 0)
        for (const auto& r : trace.rounds)
            if (r.round_index == trace.final_choice) return &r;
    return &trace.rounds.back();
}

json assemble_report(const std::vector<QASample>& samples,
                     const std::vector<CalibrationTrace>& traces, const json& extra,
                     const std::filesystem::path& out_dir) {
    std::map<std::string, const QASample*> by_id;
    for (const auto& s : samples) by_id.emplace(s.id, &s);

    std::vector<SampleResult> results;
    std::vector<json> metric_lines;
    std::vector<double> unc_scores;
    std::vector<bool> unc_labels;
    json errored = json::array();

    for (const auto& t : traces) {
        if (!t.error.empty() || !t.complete) {
            errored.push_back(json{{"sample_id", t.sample_id}, {"error", t.error}});
            continue;
        }
        auto it = by_id.find(t.sample_id);
        if (it == by_id.end()) continue;  // caller reports id mismatches
        const QASample& s = *it->second;
        const CalibrationRound* chosen = chosen_round(t);
        if (!chosen) continue;

        json line;
        line["id"] = t.sample_id;
        line["qtype"] = to_string(s.qtype);
        line["final_round"] = chosen->round_index;
        line["answer"] = chosen->answer_text;
        line["uncertainty"] = chosen->scaled.uncertainty;
        if (!s.gold_answers.empty()) {
            SampleResult r;
            r.id = t.sample_id;
            r.qtype = s.qtype;
            r.em = exact_match(chosen->answer_text, s.gold_answers);
            r.f1 = f1_score(chosen->answer_text, s.gold_answers);
            results.push_back(r);
            unc_scores.push_back(chosen->scaled.uncertainty);
            unc_labels.push_back(r.em == 0.0);
            line["em"] = r.em;
            line["f1"] = r.f1;
        }
        metric_lines.push_back(std::move(line));
    }

    json rep;
    for (const auto& [k, v] : extra.items()) rep[k] = v;
    std::string text;
    if (!results.empty()) {
        const EvalReport er = report(results, Breakdown::by_qtype);
        rep["eval"] = er.to_json();
        text += er.to_text();
    } else {
        rep["eval"] = nullptr;
        text += "no gold answers available; EM/F1 skipped\n";
    }
    try {
        rep["auroc"] = auroc(unc_scores, unc_labels);
        text += "AUROC (uncertainty vs incorrectness): " +
                std::to_string(rep["auroc"].get<double>()) + "\n";
    } catch (const std::exception& e) {
        rep["auroc"] = nullptr;
        text += std::string("AUROC unavailable: ") + e.what() + "\n";
    }
    const TrajectoryStats traj = trajectory_stats(traces);
    if (traj.n_traces > 0) {
        rep["trajectory"] = traj.to_json();
        rep["trajectory"]["available"] = true;
        text += "calibration outcomes: " + std::to_string(traj.calibrated_success) +
                " corrected, " + std::to_string(traj.calibrated_fail) + " changed-but-wrong, " +
                std::to_string(traj.never_changed) + " never changed (of " +
                std::to_string(traj.initially_incorrect) + " initially wrong)\n";
    } else {
        rep["trajectory"] = json{{"available", false}};
        text += "trajectory stats unavailable (no correctness-annotated traces)\n";
    }
    rep["errored_samples"] = errored;

    write_text_file_atomic(out_dir / "report.json", rep.dump(2) + "\n");
    write_text_file_atomic(out_dir / "report.txt", text);
    write_jsonl_atomic(out_dir / "metrics.jsonl", metric_lines);
    return rep;
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

std::filesystem::path cmd_calibrate(const RunConfig& config) {
    config.validate();
    const auto run_dir = config.run_dir();
    std::filesystem::create_directories(run_dir);
    RunLock lock(run_dir);

    const CalibrationConfig calib = effective_calibration(config);
    const LoadResult data = load_dataset(config.dataset);
    if (data.samples.empty())
        throw InvalidInputError("dataset is empty: " + config.dataset.path);

    RunManifest manifest;
    manifest.run_id = config.run_id;
    manifest.created_at = iso8601_now();
    manifest.stage = "calibrate";
    manifest.config_snapshot = config.to_json();
    manifest.templates_hash = templates_hash(calib.templates);
    if (config.backend.kind == "mock") manifest.script_hash = file_hash(config.backend.script);
    manifest.dataset_stats = data.stats.to_json();
    manifest.save(run_dir);  // on disk before the first backend call

    auto gateway = make_gateway(config, run_dir);
    CorpusOptions opts;
    opts.traces_path = run_dir / "traces.jsonl";
    opts.on_wave = [&](int wave, std::size_t done) {
        manifest.waves_done = wave + 1;
        manifest.samples_done = static_cast<long>(done);
        manifest.save(run_dir);
    };
    // Crash-injection hook for resume tests: abort after N wave flushes.
    if (const char* env = std::getenv("SGIC_ABORT_AFTER_WAVES"))
        opts.abort_after_waves = std::atoi(env);
    const CorpusResult result = calibrate_corpus(data.samples, *gateway, calib, opts);
    manifest.resumed = result.resumed;

    json extra;
    extra["corpus_mean"] = {{"value", result.mean.value},
                            {"population", result.mean.population},
                            {"split", to_string(result.mean.split)}};
    assemble_report(data.samples, result.traces, extra, run_dir);

    manifest.finished_at = iso8601_now();
    manifest.stage = "done";
    manifest.save(run_dir);
    return run_dir;
}

std::filesystem::path cmd_build_trainset(const RunConfig& config) {
    config.validate();
    if (config.dataset.split != Split::train)
        throw InvalidInputError("build-trainset requires dataset.split = train");
    const auto run_dir = config.run_dir();
    std::filesystem::create_directories(run_dir);
    RunLock lock(run_dir);

    const CalibrationConfig calib = effective_calibration(config);
    const LoadResult data = load_dataset(config.dataset);
    if (data.samples.empty())
        throw InvalidInputError("dataset is empty: " + config.dataset.path);

    RunManifest manifest;
    manifest.run_id = config.run_id;
    manifest.created_at = iso8601_now();
    manifest.stage = "build-trainset";
    manifest.config_snapshot = config.to_json();
    manifest.templates_hash = templates_hash(calib.templates);
    if (config.backend.kind == "mock") manifest.script_hash = file_hash(config.backend.script);
    manifest.dataset_stats = data.stats.to_json();
    manifest.save(run_dir);

    auto gateway = make_gateway(config, run_dir);
    BuildOptions bopts;
    bopts.ratio_revise = config.ratio_revise;
    bopts.ratio_preserve = config.ratio_preserve;
    bopts.traces_path = run_dir / "traces.jsonl";
    const auto [records, breport] = build(data.samples, *gateway, calib, bopts);
    if (records.empty())
        throw InvalidInputError("trainset is empty after pruning; nothing to export");
    export_sft(records, run_dir / "sft.jsonl");

    json rep;
    rep["build"] = breport.to_json();
    write_text_file_atomic(run_dir / "report.json", rep.dump(2) + "\n");
    std::ostringstream text;
    text << "samples: " << breport.input_samples << "\n"
         << "revise:   " << breport.revise_emitted << " emitted of " << breport.revise_candidates
         << " candidates\n"
         << "preserve: " << breport.preserve_emitted << " emitted of "
         << breport.preserve_candidates << " candidates\n"
         << "pruned:   " << breport.pruned_samples << "\n"
         << "errored:  " << breport.errored_samples << "\n";
    write_text_file_atomic(run_dir / "report.txt", text.str());

    manifest.finished_at = iso8601_now();
    manifest.stage = "done";
    manifest.save(run_dir);
    return run_dir;
}

json cmd_evaluate(const std::filesystem::path& traces_path, const RunConfig& config,
                  const std::filesystem::path& out_dir) {
    const auto records = read_jsonl(traces_path);
    if (records.empty()) throw InvalidInputError("empty traces file: " + traces_path.string());
    std::vector<CalibrationTrace> traces = traces_from_records(records);

    const LoadResult data = load_dataset(config.dataset);
    std::map<std::string, const QASample*> by_id;
    for (const auto& s : data.samples) by_id.emplace(s.id, &s);

    // Re-deriving correctness from the gold answers keeps stored flags honest
    // and fills them in when the original run had no golds.
    json mismatched = json::array();
    std::vector<CalibrationTrace> aligned;
    for (auto& t : traces) {
        auto it = by_id.find(t.sample_id);
        if (it == by_id.end()) {
            mismatched.push_back(t.sample_id);
            continue;
        }
        if (!it->second->gold_answers.empty())
            for (auto& r : t.rounds)
                r.correct = exact_match(r.answer_text, it->second->gold_answers) == 1;
        aligned.push_back(std::move(t));
    }
    if (aligned.empty())
        throw InvalidInputError("no trace matches the dataset ids; nothing to evaluate");

    std::filesystem::create_directories(out_dir);
    json extra;
    extra["traces"] = aligned.size();
    extra["mismatched_ids"] = mismatched;
    return assemble_report(data.samples, aligned, extra, out_dir);
}

json cmd_tag_experiment(const RunConfig& config, const std::vector<Placement>& placements) {
    config.validate();
    const auto run_dir = config.run_dir();
    std::filesystem::create_directories(run_dir);
    RunLock lock(run_dir);

    const CalibrationConfig calib = effective_calibration(config);
    const LoadResult data = load_dataset(config.dataset);
    if (data.samples.empty())
        throw InvalidInputError("dataset is empty: " + config.dataset.path);
    for (const auto& s : data.samples)
        for (const auto& d : s.documents)
            if (!d.gold_relevant.has_value())
                throw InvalidInputError("tag experiment needs relevance flags; sample " + s.id +
                                        " document " + d.id + " has none");

    RunManifest manifest;
    manifest.run_id = config.run_id;
    manifest.created_at = iso8601_now();
    manifest.stage = "tag-experiment";
    manifest.config_snapshot = config.to_json();
    manifest.templates_hash = templates_hash(calib.templates);
    if (config.backend.kind == "mock") manifest.script_hash = file_hash(config.backend.script);
    manifest.dataset_stats = data.stats.to_json();
    manifest.save(run_dir);

    auto gateway = make_gateway(config, run_dir);
    json rows = json::array();
    std::ostringstream text;
    text << "placement    condition   n       EM       F1\n";

    for (const Placement placement : placements) {
        for (const bool tagged : {false, true}) {
            std::vector<GenRequest> reqs;
            std::vector<const QASample*> order;
            for (const auto& s : data.samples) {
                const QASample permuted =
                    permute_documents(s, placement, config.dataset.seed ^ fnv1a64(s.id));
                std::string prompt;
                if (tagged) {
                    std::set<std::string> ids;
                    for (const auto& d : permuted.documents)
                        if (d.gold_relevant.value_or(false)) ids.insert(d.id);
                    prompt = render_key_tag(calib.templates, permuted, ids, calib.render);
                } else {
                    prompt = render_initial(calib.templates, permuted, calib.render);
                }
                GenRequest req;
                req.prompt = std::move(prompt);
                req.temperature = calib.temperature;
                req.max_tokens = calib.max_tokens;
                reqs.push_back(std::move(req));
                order.push_back(&s);
            }
            const auto outcomes = gateway->generate_batch(reqs, calib.max_in_flight);
            double em_sum = 0.0, f1_sum = 0.0;
            long n = 0, errors = 0;
            for (std::size_t i = 0; i < outcomes.size(); ++i) {
                if (!outcomes[i].ok()) {
                    ++errors;
                    continue;
                }
                em_sum += exact_match(outcomes[i].result->text, order[i]->gold_answers);
                f1_sum += f1_score(outcomes[i].result->text, order[i]->gold_answers);
                ++n;
            }
            json row;
            row["placement"] = to_string(placement);
            row["condition"] = tagged ? "key_tag" : "plain";
            row["n"] = n;
            row["errors"] = errors;
            row["em"] = n > 0 ? em_sum / n * 100.0 : 0.0;
            row["f1"] = n > 0 ? f1_sum / n * 100.0 : 0.0;
            char line[160];
            std::snprintf(line, sizeof(line), "%-12s %-9s %3ld %8.2f %8.2f\n",
                          to_string(placement).c_str(), tagged ? "key_tag" : "plain", n,
                          row["em"].get<double>(), row["f1"].get<double>());
            text << line;
            rows.push_back(std::move(row));
        }
    }

    json rep;
    rep["rows"] = std::move(rows);
    write_text_file_atomic(run_dir / "report.json", rep.dump(2) + "\n");
    write_text_file_atomic(run_dir / "report.txt", text.str());
    manifest.finished_at = iso8601_now();
    manifest.stage = "done";
    manifest.save(run_dir);
    return rep;
}

json cmd_score_docs(const RunConfig& config, const std::string& sample_id) {
    config.validate();
    const CalibrationConfig calib = effective_calibration(config);
    const LoadResult data = load_dataset(config.dataset);
    if (data.samples.empty())
        throw InvalidInputError("dataset is empty: " + config.dataset.path);

    const QASample* sample = &data.samples.front();
    if (!sample_id.empty()) {
        sample = nullptr;
        for (const auto& s : data.samples)
            if (s.id == sample_id) sample = &s;
        if (!sample) throw InvalidInputError("sample id not found in dataset: " + sample_id);
    }

    DocScoreSet scores;
    if (calib.score_mode == ScoreMode::oracle) {
        scores = oracle_scores(*sample, calib.oracle_seed);
    } else if (calib.score_mode == ScoreMode::computed) {
        auto gateway = make_gateway(config, {});
        scores = score_documents(*sample, *gateway, calib);
    } else {
        throw InvalidInputError("score-docs supports computed or oracle score modes");
    }

    json docs = json::array();
    for (std::size_t i = 0; i < sample->documents.size(); ++i) {
        json d;
        d["id"] = sample->documents[i].id;
        d["title"] = sample->documents[i].title;
        if (sample->documents[i].gold_relevant.has_value())
            d["gold_relevant"] = *sample->documents[i].gold_relevant;
        d["raw"] = scores.raw[i];
        d["normalized"] = scores.normalized[i];
        docs.push_back(std::move(d));
    }
    json out;
    out["sample_id"] = sample->id;
    out["question"] = sample->question;
    out["documents"] = std::move(docs);
    return out;
}

}  // namespace sgic
