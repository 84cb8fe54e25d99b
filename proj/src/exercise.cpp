#include "flagcast/exercise.hpp"

#include <algorithm>
#include <cmath>

#include "flagcast/errors.hpp"
#include "flagcast/rng.hpp"
#include "flagcast/util.hpp"

namespace flagcast {

namespace {

void require_ordered(const DayInterval& earlier, const DayInterval& later,
                     const char* what) {
    if (earlier.end >= later.start) {
        throw ConfigError(std::string(what) + ": [" +
                          std::to_string(earlier.start.index) + "," +
                          std::to_string(earlier.end.index) + "] must end before [" +
                          std::to_string(later.start.index) + "," +
                          std::to_string(later.end.index) + "] starts");
    }
}

}  // namespace

void ExerciseConfig::validate() const {
    require_ordered(train_dw, train_bw, "training DW/BW");
    require_ordered(train_bw, train_lw, "training BW/LW");
    require_ordered(test_dw, test_lw, "testing DW/LW");
    if (extended_lw &&
        !(extended_lw->start <= test_lw.start && test_lw.end <= extended_lw->end)) {
        throw ConfigError("extended_lw must contain test_lw");
    }
    for (double t : thresholds) {
        if (!(t >= 0.0 && t <= 1.0)) {
            throw ConfigError("threshold " + format_double(t) + " outside [0,1]");
        }
    }
    for (std::int32_t h : horizons) {
        if (h < h_min() || h > h_max()) {
            throw ConfigError("horizon " + std::to_string(h) + " outside [" +
                              std::to_string(h_min()) + "," + std::to_string(h_max()) +
                              "]");
        }
    }
    if (!(undersample_ratio > 0.0) || !std::isfinite(undersample_ratio)) {
        throw ConfigError("undersample_ratio must be positive");
    }
    if (min_account_age_days && *min_account_age_days < 0) {
        throw ConfigError("min_account_age_days must be non-negative");
    }
    if (min_active_days && *min_active_days < 0) {
        throw ConfigError("min_active_days must be non-negative");
    }
}

ExerciseConfig make_preset(const std::string& name, Day epoch, Day data_end) {
    if (data_end - epoch < 117) {
        throw ConfigError("preset '" + name +
                          "' needs at least 118 days of data; trace has " +
                          std::to_string(data_end - epoch + 1));
    }
    auto at = [&](std::int32_t lo, std::int32_t hi) {
        return DayInterval{epoch + lo, epoch + hi};
    };

    ExerciseConfig c;
    c.thresholds = {0.5, 0.9};
    if (name == "ce_a") {
        c.train_dw = at(0, 6);
        c.train_bw = at(7, 13);
        c.train_lw = at(14, 20);
        c.test_dw = at(21, 27);
        c.test_lw = at(28, 34);
        c.extended_lw = DayInterval{epoch + 28, data_end};
        c.horizons = {7, 21, 30, 60, 90};
    } else if (name == "ce_b" || name == "ce_c") {
        c.train_dw = at(56, 62);
        c.train_bw = at(63, 69);
        c.train_lw = at(70, 76);
        c.test_dw = at(77, 83);
        c.test_lw = at(84, 90);
        c.extended_lw = DayInterval{epoch + 84, data_end};
        c.horizons = {7, 14, 21, 30};
        if (name == "ce_c") {
            c.exclude_preflagged = true;
            // Two months of age cannot be satisfied on a trace whose epoch is
            // only 56 days before training; 56 is the attainable bound.
            c.min_account_age_days = 56;
            c.min_active_days = 20;
            c.preprocess_interval = at(0, 27);
        }
    } else if (name == "ce_d") {
        c.train_dw = at(0, 20);
        c.train_bw = at(21, 41);
        c.train_lw = at(42, 62);
        c.test_dw = at(63, 83);
        c.test_lw = at(84, 104);
        c.extended_lw = DayInterval{epoch + 84, data_end};
        c.horizons = {21, 28, 34};
    } else {
        throw ConfigError("unknown preset '" + name +
                          "'; expected ce_a, ce_b, ce_c, or ce_d");
    }
    c.validate();
    return c;
}

namespace {

using kv::as_bool;
using kv::as_double;
using kv::as_int;
using kv::require;
using kv::take;

DayInterval to_interval(std::map<std::string, std::string>& kv,
                        const std::string& prefix, const std::string& origin) {
    auto start = as_int(require(kv, prefix + ".start", origin), prefix, origin);
    auto end = as_int(require(kv, prefix + ".end", origin), prefix, origin);
    if (start > end) {
        throw ConfigError(origin + ": " + prefix + ".start exceeds " + prefix + ".end");
    }
    return DayInterval{Day{static_cast<std::int32_t>(start)},
                       Day{static_cast<std::int32_t>(end)}};
}

std::optional<DayInterval> to_optional_interval(std::map<std::string, std::string>& kv,
                                                const std::string& prefix,
                                                const std::string& origin) {
    bool has_start = kv.count(prefix + ".start") > 0;
    bool has_end = kv.count(prefix + ".end") > 0;
    if (!has_start && !has_end) return std::nullopt;
    if (has_start != has_end) {
        throw ConfigError(origin + ": " + prefix +
                          " needs both .start and .end or neither");
    }
    return to_interval(kv, prefix, origin);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t comma = value.find(',', start);
        if (comma == std::string::npos) {
            parts.push_back(value.substr(start));
            break;
        }
        parts.push_back(value.substr(start, comma - start));
        start = comma + 1;
    }
    return parts;
}

}  // namespace

ExerciseConfig parse_exercise_config(std::map<std::string, std::string>& kv,
                                     const std::string& origin) {
    ExerciseConfig c;
    c.train_dw = to_interval(kv, "train_dw", origin);
    c.train_bw = to_interval(kv, "train_bw", origin);
    c.train_lw = to_interval(kv, "train_lw", origin);
    c.test_dw = to_interval(kv, "test_dw", origin);
    c.test_lw = to_interval(kv, "test_lw", origin);
    c.extended_lw = to_optional_interval(kv, "extended_lw", origin);
    c.preprocess_interval = to_optional_interval(kv, "preprocess_interval", origin);

    for (const auto& part : split_list(require(kv, "horizons", origin))) {
        c.horizons.push_back(
            static_cast<std::int32_t>(as_int(part, "horizons", origin)));
    }
    c.thresholds.clear();
    for (const auto& part : split_list(require(kv, "thresholds", origin))) {
        c.thresholds.push_back(as_double(part, "thresholds", origin));
    }

    if (auto v = take(kv, "undersample_ratio")) {
        c.undersample_ratio = as_double(*v, "undersample_ratio", origin);
    }
    if (auto v = take(kv, "min_account_age_days")) {
        c.min_account_age_days =
            static_cast<std::int32_t>(as_int(*v, "min_account_age_days", origin));
    }
    if (auto v = take(kv, "min_active_days")) {
        c.min_active_days =
            static_cast<std::int32_t>(as_int(*v, "min_active_days", origin));
    }
    if (auto v = take(kv, "exclude_preflagged")) {
        c.exclude_preflagged = as_bool(*v, "exclude_preflagged", origin);
    }
    if (auto v = take(kv, "rng_seed")) {
        std::uint64_t seed = 0;
        if (!parse_u64(*v, seed)) {
            throw ConfigError(origin + ": key 'rng_seed' has non-integer value '" +
                              *v + "'");
        }
        c.rng_seed = seed;
    }
    c.validate();
    return c;
}

std::string serialize_exercise_config(const ExerciseConfig& c) {
    std::string out;
    auto interval = [&](const std::string& prefix, const DayInterval& w) {
        out += prefix + ".start=" + std::to_string(w.start.index) + "\n";
        out += prefix + ".end=" + std::to_string(w.end.index) + "\n";
    };
    interval("train_dw", c.train_dw);
    interval("train_bw", c.train_bw);
    interval("train_lw", c.train_lw);
    interval("test_dw", c.test_dw);
    interval("test_lw", c.test_lw);
    if (c.extended_lw) interval("extended_lw", *c.extended_lw);
    if (c.preprocess_interval) interval("preprocess_interval", *c.preprocess_interval);

    out += "horizons=";
    for (std::size_t i = 0; i < c.horizons.size(); ++i) {
        if (i) out.push_back(',');
        out += std::to_string(c.horizons[i]);
    }
    out += "\nthresholds=";
    for (std::size_t i = 0; i < c.thresholds.size(); ++i) {
        if (i) out.push_back(',');
        out += format_double(c.thresholds[i]);
    }
    out += "\nundersample_ratio=" + format_double(c.undersample_ratio) + "\n";
    if (c.min_account_age_days) {
        out += "min_account_age_days=" + std::to_string(*c.min_account_age_days) + "\n";
    }
    if (c.min_active_days) {
        out += "min_active_days=" + std::to_string(*c.min_active_days) + "\n";
    }
    out += "exclude_preflagged=" + std::string(c.exclude_preflagged ? "1" : "0") + "\n";
    out += "rng_seed=" + std::to_string(c.rng_seed) + "\n";
    return out;
}

PredictionSet make_prediction_set(ScoredAccounts scored, double threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ConfigError("threshold " + format_double(threshold) + " outside [0,1]");
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    PredictionSet p;
    p.threshold = threshold;
    for (const auto& [account, score] : scored) {
        if (score >= threshold) p.positives.push_back(account);
    }
    p.scored = std::move(scored);
    return p;
}

AccountSet prune_training_accounts(const AccountSetLedger& ledger,
                                   const ExerciseConfig& config) {
    AccountSet eligible;
    for (AccountId a : ledger.active_accounts(config.train_dw)) {
        if (ledger.flagged_in(a, config.train_dw) ||
            ledger.flagged_in(a, config.train_bw)) {
            continue;
        }
        if (config.exclude_preflagged &&
            ledger.flagged_on_or_before(a, config.train_dw.start - 1)) {
            continue;
        }
        if (config.min_account_age_days) {
            auto first = ledger.first_seen(a);
            if (!first || *first > config.train_dw.start - *config.min_account_age_days) {
                continue;
            }
        }
        if (config.min_active_days &&
            ledger.active_days_before(a, config.train_dw.start) <
                *config.min_active_days) {
            continue;
        }
        eligible.push_back(a);
    }
    return eligible;
}

std::vector<LabeledExample> label_training(const AccountSetLedger& ledger,
                                           const AccountSet& eligible,
                                           const DayInterval& train_lw,
                                           const FeatureTable& train_features) {
    std::vector<LabeledExample> examples;
    examples.reserve(eligible.size());
    for (AccountId a : eligible) {
        const FeatureVector* vec = train_features.find(a);
        if (!vec) {
            throw ContractError("no feature vector for eligible account " +
                                std::to_string(a.id));
        }
        LabeledExample ex;
        ex.account = a;
        ex.vector = *vec;
        ex.label = ledger.flagged_in(a, train_lw);
        examples.push_back(std::move(ex));
    }
    return examples;
}

std::vector<LabeledExample> undersample(std::span<const LabeledExample> examples,
                                        double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0) || !std::isfinite(ratio)) {
        throw ConfigError("undersample ratio must be positive");
    }
    std::vector<std::size_t> negatives;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (examples[i].label) {
            ++positives;
        } else {
            negatives.push_back(i);
        }
    }
    if (positives == 0) {
        throw DegenerateTrainingError(
            "no positive examples in the training label window");
    }

    std::size_t want = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(positives)));
    want = std::min(want, negatives.size());

    Rng rng(seed);
    for (std::size_t i = 0; i < want; ++i) {
        std::size_t j = i + rng.next_below(negatives.size() - i);
        std::swap(negatives[i], negatives[j]);
    }
    negatives.resize(want);
    std::sort(negatives.begin(), negatives.end());

    std::vector<LabeledExample> out;
    out.reserve(positives + want);
    std::size_t next_neg = 0;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        if (examples[i].label) {
            out.push_back(examples[i]);
        } else if (next_neg < negatives.size() && negatives[next_neg] == i) {
            out.push_back(examples[i]);
            ++next_neg;
        }
    }
    return out;
}

AccountSet evaluation_universe(const AccountSetLedger& ledger,
                               const ExerciseConfig& config) {
    AccountSet universe;
    for (AccountId a : ledger.active_accounts(config.test_dw)) {
        if (ledger.flagged_on_or_before(a, config.train_lw.end)) continue;
        if (config.preprocess_interval &&
            ledger.flagged_in(a, *config.preprocess_interval)) {
            continue;
        }
        universe.push_back(a);
    }
    return universe;
}

AccountSet ground_truth_at_horizon(const AccountSetLedger& ledger,
                                   const ExerciseConfig& config, std::int32_t H,
                                   const AccountSet& universe) {
    if (H < config.h_min() || H > config.h_max()) {
        throw ConfigError("horizon " + std::to_string(H) + " outside [" +
                          std::to_string(config.h_min()) + "," +
                          std::to_string(config.h_max()) + "]");
    }
    DayInterval window{config.test_dw.end + 1, config.test_dw.end + H};
    AccountSet truth;
    for (AccountId a : universe) {
        if (ledger.flagged_in(a, window)) truth.push_back(a);
    }
    return truth;
}

AccountSet ground_truth_at_horizon(const AccountSetLedger& ledger,
                                   const ExerciseConfig& config, std::int32_t H) {
    return ground_truth_at_horizon(ledger, config, H,
                                   evaluation_universe(ledger, config));
}

}  // namespace flagcast
