// Batch front end: generate traces, estimate flagging lag, run classification
// exercises, inspect models. Exit codes: 0 success, 2 bad input or config,
// 1 internal failure.

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flagcast/errors.hpp"
#include "flagcast/exercise.hpp"
#include "flagcast/features.hpp"
#include "flagcast/forest.hpp"
#include "flagcast/ingest.hpp"
#include "flagcast/pipeline.hpp"
#include "flagcast/synth.hpp"
#include "flagcast/util.hpp"

namespace fs = std::filesystem;
using namespace flagcast;

namespace {

std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        out.push_back(text.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const char* flag) {
    std::vector<double> out;
    for (const std::string& field : split_commas(text)) {
        double v = 0.0;
        if (!parse_f64(field, v)) {
            throw ConfigError(std::string(flag) + ": bad value '" + field + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<std::int32_t> parse_int_list(const std::string& text, const char* flag) {
    std::vector<std::int32_t> out;
    for (const std::string& field : split_commas(text)) {
        std::int64_t v = 0;
        if (!parse_i64(field, v)) {
            throw ConfigError(std::string(flag) + ": bad value '" + field + "'");
        }
        out.push_back(static_cast<std::int32_t>(v));
    }
    return out;
}

void reject_unknown_keys(const std::map<std::string, std::string>& kv,
                         const std::string& origin) {
    if (!kv.empty()) {
        throw ConfigError(origin + ": unknown key '" + kv.begin()->first + "'");
    }
}

fs::path existing(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("no such file: " + path.string());
    return path;
}

struct SynthArgs {
    std::string config;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 1;
};

int cmd_synth(const SynthArgs& args) {
    auto kvmap = parse_kv_file(existing(args.config));
    SynthSpec spec = parse_synth_spec(kvmap, args.config);
    reject_unknown_keys(kvmap, args.config);
    if (args.has_seed) spec.seed = args.seed;

    StopWatch gen_watch;
    SynthOutput out = generate(spec, args.threads);
    const double gen_ms = gen_watch.elapsed_ms();

    const fs::path dir(args.out_dir);
    fs::create_directories(dir);
    StopWatch write_watch;
    write_login_file(dir / "logins.tsv", out.logins);
    write_flag_file(dir / "flags.tsv", out.flags);
    write_truth_file(dir / "truth.tsv", out.truth);
    const std::string effective = serialize_synth_spec(spec);
    write_file(dir / "effective_spec.cfg", effective);

    RunManifest manifest;
    manifest.seed = spec.seed;
    manifest.config_digest = fnv1a64(effective);
    manifest.input_digests = {
        {fs::path(args.config).filename().string(), fnv1a64_file(args.config)}};
    manifest.stage_ms = {{"generate", gen_ms}, {"write", write_watch.elapsed_ms()}};
    write_file(dir / "manifest.tsv", manifest.to_tsv());
    write_file(dir / "timings.tsv", manifest.timings_tsv());

    std::cout << "wrote logins.tsv (" << out.logins.size() << " rows, digest "
              << hex16(fnv1a64_file(dir / "logins.tsv")) << ")\n"
              << "wrote flags.tsv (" << out.flags.size() << " rows, digest "
              << hex16(fnv1a64_file(dir / "flags.tsv")) << ")\n"
              << "wrote truth.tsv (" << out.truth.size() << " rows, digest "
              << hex16(fnv1a64_file(dir / "truth.tsv")) << ")\n";
    return 0;
}

struct LagArgs {
    std::string data_dir;
    std::int32_t start = 0;
    bool has_start = false;
    std::int32_t end = 0;
    bool has_end = false;
};

int cmd_lag(const LagArgs& args) {
    const fs::path dir(args.data_dir);
    auto logins = parse_login_file(existing(dir / "logins.tsv"));
    auto flags = parse_flag_file(existing(dir / "flags.tsv"));
    AccountSetLedger ledger = build_ledger(logins, flags);

    DayInterval interval = ledger.coverage();
    if (args.has_start != args.has_end) {
        throw ConfigError("--start and --end must be given together");
    }
    if (args.has_start) {
        if (args.start > args.end) throw ConfigError("--start exceeds --end");
        interval = DayInterval{Day{args.start}, Day{args.end}};
    }

    LagDistribution lag = compute_lag_cdf(ledger, interval);
    std::string table = "lag_days\tcumulative_pct\n";
    for (const auto& [days, cumulative] : lag.cdf) {
        char pct[32];
        std::snprintf(pct, sizeof pct, "%.2f", cumulative * 100.0);
        table += std::to_string(days) + "\t" + pct + "\n";
    }
    std::cout << table;
    return 0;
}

struct RunCeArgs {
    std::string config;
    std::string preset;
    std::string data_dir;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool has_seed = false;
    int threads = 1;
    std::string thresholds;
    std::string horizons;
};

int cmd_run_ce(const RunCeArgs& args) {
    if (args.config.empty() == args.preset.empty()) {
        throw ConfigError("exactly one of --config and --preset is required");
    }

    const fs::path dir(args.data_dir);
    auto logins = parse_login_file(existing(dir / "logins.tsv"));
    auto flags = parse_flag_file(existing(dir / "flags.tsv"));

    RunConfig config;
    if (!args.config.empty()) {
        auto kvmap = parse_kv_file(existing(args.config));
        config = parse_run_config(kvmap, args.config);
        reject_unknown_keys(kvmap, args.config);
    } else {
        std::optional<Day> lo, hi;
        auto see = [&](Day d) {
            if (!lo || d < *lo) lo = d;
            if (!hi || d > *hi) hi = d;
        };
        for (const LoginEvent& e : logins) see(e.day);
        for (const FlagEvent& f : flags) see(f.day);
        if (!lo) throw ConfigError(args.data_dir + ": no events to run on");
        config.exercise = make_preset(args.preset, *lo, *hi);
    }
    if (args.has_seed) config.exercise.rng_seed = args.seed;
    if (!args.thresholds.empty()) {
        config.exercise.thresholds = parse_double_list(args.thresholds, "--threshold");
    }
    if (!args.horizons.empty()) {
        config.exercise.horizons = parse_int_list(args.horizons, "--horizon");
    }

    PipelineResult result =
        run_classification_exercise(logins, flags, config, args.threads);

    std::vector<std::pair<std::string, std::uint64_t>> inputs = {
        {"logins.tsv", fnv1a64_file(dir / "logins.tsv")},
        {"flags.tsv", fnv1a64_file(dir / "flags.tsv")}};
    write_run_outputs(args.out_dir, result, inputs);

    std::cout << result.report.to_text();
    return 0;
}

int cmd_importances(const std::string& model_path) {
    ForestModel model = load_model_file(existing(model_path));
    const auto& imp = importances(model);

    std::array<std::size_t, kFeatureCount> order{};
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });

    std::string table = "rank\tfeature\tpct\n";
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        char pct[32];
        std::snprintf(pct, sizeof pct, "%.4f", imp[order[rank]] * 100.0);
        table += std::to_string(rank + 1) + "\t" +
                 std::string(kFeatureNames[order[rank]]) + "\t" + pct + "\n";
    }
    std::cout << table;
    return 0;
}

int user_error(const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Offline experiments over day-partitioned login traces"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic trace");
    synth->add_option("--config", synth_args.config, "Trace spec file")->required();
    synth->add_option("--out-dir", synth_args.out_dir, "Output directory")->required();
    CLI::Option* synth_seed =
        synth->add_option("--seed", synth_args.seed, "Override the spec seed");
    synth->add_option("--threads", synth_args.threads, "Worker cap");

    LagArgs lag_args;
    CLI::App* lag = app.add_subcommand("lag", "Estimate the flagging-lag CDF");
    lag->add_option("--data-dir", lag_args.data_dir,
                    "Directory holding logins.tsv and flags.tsv")
        ->required();
    CLI::Option* lag_start =
        lag->add_option("--start", lag_args.start, "First day of the interval");
    CLI::Option* lag_end =
        lag->add_option("--end", lag_args.end, "Last day of the interval");

    RunCeArgs ce_args;
    CLI::App* run_ce = app.add_subcommand("run-ce", "Run a classification exercise");
    run_ce->add_option("--config", ce_args.config, "Exercise config file");
    run_ce->add_option("--preset", ce_args.preset, "Named layout (ce_a .. ce_d)");
    run_ce->add_option("--data-dir", ce_args.data_dir,
                       "Directory holding logins.tsv and flags.tsv")
        ->required();
    run_ce->add_option("--out-dir", ce_args.out_dir, "Output directory")->required();
    CLI::Option* ce_seed =
        run_ce->add_option("--seed", ce_args.seed, "Override the config seed");
    run_ce->add_option("--threads", ce_args.threads, "Worker cap");
    run_ce->add_option("--threshold", ce_args.thresholds,
                       "Comma-separated threshold overrides");
    run_ce->add_option("--horizon", ce_args.horizons,
                       "Comma-separated horizon overrides");

    std::string model_path;
    CLI::App* imp = app.add_subcommand("importances", "Rank a model's features");
    imp->add_option("--model", model_path, "Model file from run-ce")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    synth_args.has_seed = synth_seed->count() > 0;
    lag_args.has_start = lag_start->count() > 0;
    lag_args.has_end = lag_end->count() > 0;
    ce_args.has_seed = ce_seed->count() > 0;

    try {
        if (*synth) return cmd_synth(synth_args);
        if (*lag) return cmd_lag(lag_args);
        if (*run_ce) return cmd_run_ce(ce_args);
        if (*imp) return cmd_importances(model_path);
        return 2;
    } catch (const ConfigError& e) {
        return user_error(e);
    } catch (const ParseError& e) {
        return user_error(e);
    } catch (const SpecError& e) {
        return user_error(e);
    } catch (const CoverageError& e) {
        return user_error(e);
    } catch (const EmptyDistributionError& e) {
        return user_error(e);
    } catch (const DegenerateTrainingError& e) {
        return user_error(e);
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
