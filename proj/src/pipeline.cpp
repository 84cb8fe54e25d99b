#include "flagcast/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <utility>

#include "flagcast/errors.hpp"
#include "flagcast/rng.hpp"
#include "flagcast/util.hpp"

namespace flagcast {

namespace {

using kv::as_bool;
using kv::as_double;
using kv::as_int;
using kv::take;

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string format_ms(double ms) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", ms);
    return buf;
}

}  // namespace

void RunConfig::validate() const {
    exercise.validate();
    forest.validate();
    if (!(grid_validation_fraction > 0.0 && grid_validation_fraction < 1.0)) {
        throw ConfigError("grid.validation_fraction must lie in (0,1)");
    }
}

RunConfig parse_run_config(std::map<std::string, std::string>& kv,
                           const std::string& origin) {
    RunConfig c;
    c.exercise = parse_exercise_config(kv, origin);

    auto int32 = [&](const std::string& key, std::int32_t& out) {
        if (auto v = take(kv, key)) {
            out = static_cast<std::int32_t>(as_int(*v, key, origin));
        }
    };
    int32("forest.n_trees", c.forest.n_trees);
    int32("forest.max_depth", c.forest.max_depth);
    int32("forest.min_samples_leaf", c.forest.min_samples_leaf);
    int32("forest.features_per_split", c.forest.features_per_split);
    if (auto v = take(kv, "forest.bootstrap_fraction")) {
        c.forest.bootstrap_fraction = as_double(*v, "forest.bootstrap_fraction", origin);
    }
    if (auto v = take(kv, "features.window_distinct_uniques")) {
        c.features.window_distinct_uniques =
            as_bool(*v, "features.window_distinct_uniques", origin);
    }
    if (auto v = take(kv, "grid.enabled")) {
        c.grid = as_bool(*v, "grid.enabled", origin);
    }
    if (auto v = take(kv, "grid.validation_fraction")) {
        c.grid_validation_fraction = as_double(*v, "grid.validation_fraction", origin);
    }
    c.validate();
    return c;
}

std::string serialize_run_config(const RunConfig& c) {
    std::string out = serialize_exercise_config(c.exercise);
    out += "forest.n_trees=" + std::to_string(c.forest.n_trees) + "\n";
    out += "forest.max_depth=" + std::to_string(c.forest.max_depth) + "\n";
    out += "forest.min_samples_leaf=" + std::to_string(c.forest.min_samples_leaf) + "\n";
    out +=
        "forest.features_per_split=" + std::to_string(c.forest.features_per_split) +
        "\n";
    out += "forest.bootstrap_fraction=" + format_double(c.forest.bootstrap_fraction) +
           "\n";
    out += "features.window_distinct_uniques=" +
           std::string(c.features.window_distinct_uniques ? "1" : "0") + "\n";
    out += "grid.enabled=" + std::string(c.grid ? "1" : "0") + "\n";
    out += "grid.validation_fraction=" + format_double(c.grid_validation_fraction) +
           "\n";
    return out;
}

std::string RunManifest::to_tsv() const {
    std::string out = "field\tvalue\n";
    out += "tool_version\t" + tool_version + "\n";
    out += "seed\t" + std::to_string(seed) + "\n";
    out += "config_digest\t" + hex16(config_digest) + "\n";
    for (const auto& [name, digest] : input_digests) {
        out += "input." + name + "\t" + hex16(digest) + "\n";
    }
    return out;
}

std::string RunManifest::timings_tsv() const {
    std::string out = "stage\tms\n";
    for (const auto& [stage, ms] : stage_ms) {
        out += stage + "\t" + format_ms(ms) + "\n";
    }
    return out;
}

PipelineResult run_classification_exercise(std::span<const LoginEvent> logins,
                                           std::span<const FlagEvent> flags,
                                           const RunConfig& config, int threads) {
    config.validate();
    const ExerciseConfig& ex = config.exercise;
    const std::uint64_t seed = config.seed();
    const auto nthreads = static_cast<unsigned>(std::max(threads, 1));

    PipelineResult r;
    r.config = config;

    auto timed = [&](const char* stage, auto&& fn) {
        StopWatch watch;
        fn();
        r.stage_ms.emplace_back(stage, watch.elapsed_ms());
    };

    StopWatch ledger_watch;
    const AccountSetLedger ledger = build_ledger(logins, flags);
    r.stage_ms.emplace_back("ledger", ledger_watch.elapsed_ms());

    AccountSet eligible;
    timed("prune", [&] {
        eligible = prune_training_accounts(ledger, ex);
        r.eligible_count = static_cast<std::int64_t>(eligible.size());
    });

    FeatureTable train_table;
    timed("train_features", [&] {
        train_table = extract_all(ledger, logins, ex.train_dw, config.features, nthreads);
    });

    std::vector<LabeledExample> labeled;
    timed("label", [&] {
        labeled = label_training(ledger, eligible, ex.train_lw, train_table);
        r.positive_count = std::count_if(labeled.begin(), labeled.end(),
                                         [](const LabeledExample& e) { return e.label; });
    });

    std::vector<LabeledExample> sample;
    timed("undersample", [&] {
        sample = undersample(labeled, ex.undersample_ratio,
                             derive_seed(seed, "undersample"));
        r.training_count = static_cast<std::int64_t>(sample.size());
    });

    ForestHyperparams hp = config.forest;
    if (config.grid) {
        timed("grid", [&] {
            std::vector<ForestHyperparams> candidates = default_grid(seed);
            r.grid = grid_search(sample, candidates, config.grid_validation_fraction,
                                 seed, threads);
            hp = r.grid->best;
        });
    }
    hp.seed = derive_seed(seed, "forest");

    timed("fit", [&] { r.model = fit(sample, hp, threads); });

    FeatureTable test_table;
    timed("test_features", [&] {
        test_table = extract_all(ledger, logins, ex.test_dw, config.features, nthreads);
    });

    timed("score", [&] {
        ScoredAccounts all = score_accounts(r.model, test_table, threads);
        AccountSet universe = evaluation_universe(ledger, ex);
        r.universe_count = static_cast<std::int64_t>(universe.size());
        r.scored.reserve(universe.size());
        std::size_t i = 0;
        for (AccountId account : universe) {
            while (i < all.size() && all[i].first < account) ++i;
            if (i < all.size() && all[i].first == account) r.scored.push_back(all[i]);
        }
    });

    timed("evaluate", [&] { r.report = horizon_sweep(r.scored, ledger, ex); });
    return r;
}

void write_run_outputs(
    const std::filesystem::path& dir, const PipelineResult& result,
    const std::vector<std::pair<std::string, std::uint64_t>>& input_digests) {
    std::filesystem::create_directories(dir);

    save_model_file(dir / "model.tsv", result.model);
    write_file(dir / "report.tsv", result.report.to_tsv());
    write_file(dir / "report.txt", result.report.to_text());

    std::string roc = "horizon\tthreshold\tfpr\ttpr\n";
    for (const HorizonMetrics& h : result.report.horizons) {
        for (const RocPoint& p : h.roc) {
            roc += std::to_string(h.horizon) + "\t" + format_double(p.threshold) +
                   "\t" + format_double(p.fpr) + "\t" + format_double(p.tpr) + "\n";
        }
    }
    write_file(dir / "roc.tsv", roc);

    std::string scores = "account\tscore\n";
    for (const auto& [account, score] : result.scored) {
        scores += std::to_string(account.id) + "\t" + format_double(score) + "\n";
    }
    write_file(dir / "scores.tsv", scores);

    const std::string cfg = serialize_run_config(result.config);
    write_file(dir / "effective_config.cfg", cfg);

    RunManifest manifest;
    manifest.seed = result.config.seed();
    manifest.config_digest = fnv1a64(cfg);
    manifest.input_digests = input_digests;
    manifest.stage_ms = result.stage_ms;
    write_file(dir / "manifest.tsv", manifest.to_tsv());
    write_file(dir / "timings.tsv", manifest.timings_tsv());

    if (result.grid) {
        std::string grid =
            "n_trees\tmax_depth\tmin_samples_leaf\tfeatures_per_split"
            "\tbootstrap_fraction\tvalidation_auc\n";
        for (const GridCandidate& c : result.grid->table) {
            grid += std::to_string(c.hp.n_trees) + "\t" +
                    std::to_string(c.hp.max_depth) + "\t" +
                    std::to_string(c.hp.min_samples_leaf) + "\t" +
                    std::to_string(c.hp.features_per_split) + "\t" +
                    format_double(c.hp.bootstrap_fraction) + "\t" +
                    format_double(c.validation_auc) + "\n";
        }
        write_file(dir / "grid.tsv", grid);
    }
}

}  // namespace flagcast
