#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "flagcast/exercise.hpp"
#include "flagcast/forest.hpp"
#include "flagcast/ingest.hpp"
#include "flagcast/metrics.hpp"

namespace flagcast {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Everything one classification-exercise run needs. The single rng_seed on
// the exercise block governs all randomness; per-stage streams are derived
// from it so the run is reproducible from this config alone.
struct RunConfig {
    ExerciseConfig exercise;
    ForestHyperparams forest;  // seed field is overridden by the run seed
    FeatureOptions features;
    bool grid = false;
    double grid_validation_fraction = 0.25;

    std::uint64_t seed() const { return exercise.rng_seed; }
    void validate() const;
    bool operator==(const RunConfig&) const = default;
};

RunConfig parse_run_config(std::map<std::string, std::string>& kv,
                           const std::string& origin);
std::string serialize_run_config(const RunConfig& config);

// Provenance record for a command invocation. The deterministic part
// (to_tsv) must be byte-identical across reruns with equal inputs and seed;
// wall-clock durations therefore serialize separately.
struct RunManifest {
    std::string tool_version{kToolVersion};
    std::uint64_t seed = 0;
    std::uint64_t config_digest = 0;
    std::vector<std::pair<std::string, std::uint64_t>> input_digests;
    std::vector<std::pair<std::string, double>> stage_ms;

    std::string to_tsv() const;
    std::string timings_tsv() const;
};

struct PipelineResult {
    RunConfig config;
    ForestModel model;
    EvalReport report;
    ScoredAccounts scored;  // restricted to the evaluation universe
    std::optional<GridSearchResult> grid;
    std::vector<std::pair<std::string, double>> stage_ms;
    std::int64_t eligible_count = 0;
    std::int64_t positive_count = 0;  // before undersampling
    std::int64_t training_count = 0;  // after undersampling
    std::int64_t universe_count = 0;
};

// prune -> features -> label -> undersample -> [grid] -> fit -> score ->
// sweep. Propagates DegenerateTrainingError, CoverageError, UndefinedAucError
// untouched; they describe the data, not the code.
PipelineResult run_classification_exercise(std::span<const LoginEvent> logins,
                                           std::span<const FlagEvent> flags,
                                           const RunConfig& config,
                                           int threads = 1);

// Writes model.tsv, report.tsv, report.txt, roc.tsv, scores.tsv,
// effective_config.cfg, manifest.tsv, timings.tsv, and grid.tsv when a grid
// ran. Everything except timings.tsv is a pure function of inputs and seed.
void write_run_outputs(
    const std::filesystem::path& dir, const PipelineResult& result,
    const std::vector<std::pair<std::string, std::uint64_t>>& input_digests);

}  // namespace flagcast
