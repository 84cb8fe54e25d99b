#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flagcast/core.hpp"
#include "flagcast/features.hpp"

namespace flagcast {

// Full parameterization of one Classification Exercise. All day values are
// absolute positions on the trace's day axis.
struct ExerciseConfig {
    DayInterval train_dw;
    DayInterval train_bw;
    DayInterval train_lw;
    DayInterval test_dw;
    DayInterval test_lw;
    std::optional<DayInterval> extended_lw;       // must contain test_lw
    std::optional<DayInterval> preprocess_interval;
    std::vector<std::int32_t> horizons;
    std::vector<double> thresholds;
    double undersample_ratio = 1.0;               // negatives per positive
    std::optional<std::int32_t> min_account_age_days;
    std::optional<std::int32_t> min_active_days;
    bool exclude_preflagged = false;
    std::uint64_t rng_seed = 42;

    // Smallest usable horizon: the one whose truth window is exactly the
    // labeled test window. Larger horizons need the extended window.
    std::int32_t h_min() const { return test_lw.end - test_dw.end; }
    std::int32_t h_max() const {
        return (extended_lw ? extended_lw->end : test_lw.end) - test_dw.end;
    }

    // Window ordering, horizon ranges, threshold ranges. ConfigError on any
    // violation.
    void validate() const;

    bool operator==(const ExerciseConfig&) const = default;
};

// Expands a named Table-style layout against a concrete trace. Presets
// assume the canonical 118-day trace: data_end must be at least epoch+117.
ExerciseConfig make_preset(const std::string& name, Day epoch, Day data_end);

// Reads config keys from `kv`, erasing every key it consumes so callers can
// detect leftovers. `origin` names the source in error messages.
ExerciseConfig parse_exercise_config(std::map<std::string, std::string>& kv,
                                     const std::string& origin);

// Canonical key=value rendering; parse_exercise_config inverts it.
std::string serialize_exercise_config(const ExerciseConfig& config);

struct LabeledExample {
    AccountId account;
    FeatureVector vector;
    bool label = false;

    bool operator==(const LabeledExample&) const = default;
};

// Scores keyed by account, sorted by account.
using ScoredAccounts = std::vector<std::pair<AccountId, double>>;

struct PredictionSet {
    ScoredAccounts scored;
    double threshold = 0.5;
    AccountSet positives;
};

// positives derived as { a : score >= threshold }.
PredictionSet make_prediction_set(ScoredAccounts scored, double threshold);

// Training-phase pruning. Starts from accounts active in train_dw, then
// applies: flagged during train_dw or train_bw (always); flagged before
// train_dw when exclude_preflagged; account age and activity-history floors
// when configured.
AccountSet prune_training_accounts(const AccountSetLedger& ledger,
                                   const ExerciseConfig& config);

// One example per eligible account; positive iff flagged inside train_lw.
// `train_features` must hold vectors over train_dw for every eligible account.
std::vector<LabeledExample> label_training(const AccountSetLedger& ledger,
                                           const AccountSet& eligible,
                                           const DayInterval& train_lw,
                                           const FeatureTable& train_features);

// Keeps every positive; draws floor(ratio * positives) negatives uniformly
// without replacement (capped at what exists). Throws DegenerateTrainingError
// when there is no positive to keep.
std::vector<LabeledExample> undersample(std::span<const LabeledExample> examples,
                                        double ratio, std::uint64_t seed);

// Accounts the exercise is scored on: active in test_dw, never flagged up to
// the end of training, minus preprocess-interval flags when configured.
AccountSet evaluation_universe(const AccountSetLedger& ledger,
                               const ExerciseConfig& config);

// Members of the evaluation universe flagged within (test_dw.end,
// test_dw.end + H]. H outside [h_min, h_max] is a ConfigError.
AccountSet ground_truth_at_horizon(const AccountSetLedger& ledger,
                                   const ExerciseConfig& config, std::int32_t H);
AccountSet ground_truth_at_horizon(const AccountSetLedger& ledger,
                                   const ExerciseConfig& config, std::int32_t H,
                                   const AccountSet& universe);

}  // namespace flagcast
