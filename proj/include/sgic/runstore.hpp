#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sgic/calibrate.hpp"
#include "sgic/datasets.hpp"
#include "sgic/types.hpp"

namespace sgic {

struct DatasetSpec {
    std::string name = "jsonl";  // hotpotqa | nq | gsm8k | jsonl
    std::string path;
    Split split = Split::validation;
    long limit = -1;  // -1 = everything
    std::uint64_t seed = 7;
};

struct BackendSpec {
    std::string kind = "mock";  // mock | http
    std::string script;         // mock: scripted-responses JSONL
    std::string exhaust = "error";  // mock: error | repeat_last
    std::string base_url;           // http
    std::string model;              // http
    std::string api_key_env;        // http: name of the env var holding the key
    int max_retries = 3;
    std::string cache_dir;  // default: <run_dir>/cache
};

struct RunConfig {
    std::string run_id;
    std::string output_dir = "runs";
    DatasetSpec dataset;
    BackendSpec backend;
    CalibrationConfig calibration;
    std::string templates_dir;  // empty = embedded defaults
    int ratio_revise = 1;       // trainset mixing ratio
    int ratio_preserve = 1;

    static RunConfig defaults();
    // Strings may interpolate environment variables as ${VAR}; unknown keys
    // and unresolvable variables are reported together.
    static RunConfig from_json(const json& j);
    static RunConfig from_file(const std::filesystem::path& path);
    json to_json() const;

    // Collects every problem and throws one InvalidInputError listing them.
    void validate(bool require_paths = true) const;
    std::filesystem::path run_dir() const;
};

struct RunManifest {
    std::string run_id;
    std::string created_at;
    std::string finished_at;
    std::string stage;
    json config_snapshot;
    std::string templates_hash;
    std::string script_hash;
    int waves_done = 0;
    long samples_done = 0;
    long resumed = 0;
    json dataset_stats;

    json to_json() const;
    static RunManifest from_json(const json& j);
    void save(const std::filesystem::path& run_dir) const;
};

// Lock file guarding a run directory against concurrent writers. Stale locks
// (owner process gone) are reclaimed.
class RunLock {
public:
    explicit RunLock(const std::filesystem::path& run_dir);
    ~RunLock();
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

private:
    std::filesystem::path path_;
};

// Dataset dispatch on DatasetSpec.name.
LoadResult load_dataset(const DatasetSpec& spec, Gateway* gateway = nullptr);

// Builds the configured backend wrapped in a caching gateway. The cache
// defaults to <run_dir>/cache; pass an empty run_dir for no caching.
std::unique_ptr<Gateway> make_gateway(const RunConfig& config,
                                      const std::filesystem::path& run_dir);

// ---------------------------------------------------------------------------
// Commands. Each returns the run directory (or report JSON) and writes the
// frozen artifact set: manifest.json, traces.jsonl, report.json, report.txt,
// and sft.jsonl when applicable.
// ---------------------------------------------------------------------------

std::filesystem::path cmd_calibrate(const RunConfig& config);

std::filesystem::path cmd_build_trainset(const RunConfig& config);

// Joins stored traces with the configured dataset's gold answers; mismatched
// ids are listed and excluded.
json cmd_evaluate(const std::filesystem::path& traces_path, const RunConfig& config,
                  const std::filesystem::path& out_dir);

json cmd_tag_experiment(const RunConfig& config, const std::vector<Placement>& placements);

// Standalone document scoring for one sample (the first one, or by id).
json cmd_score_docs(const RunConfig& config, const std::string& sample_id = {});

}  // namespace sgic
