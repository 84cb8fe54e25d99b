#include "flagcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "flagcast/errors.hpp"
#include "flagcast/util.hpp"

namespace flagcast {

std::optional<double> ConfusionMatrix::precision() const {
    if (tp + fp == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double ConfusionMatrix::recall() const {
    return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double ConfusionMatrix::accuracy() const {
    auto n = total();
    return n == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(n);
}

double ConfusionMatrix::fpr() const {
    return fp + tn == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(fp + tn);
}

ConfusionMatrix confusion(const AccountSet& predicted, const AccountSet& truth,
                          const AccountSet& universe) {
    if (!accset::is_subset(predicted, universe)) {
        throw ContractError("predicted set reaches outside the evaluation universe");
    }
    if (!accset::is_subset(truth, universe)) {
        throw ContractError("truth set reaches outside the evaluation universe");
    }
    std::int64_t tp = 0;
    auto p = predicted.begin();
    auto t = truth.begin();
    while (p != predicted.end() && t != truth.end()) {
        if (*p < *t) {
            ++p;
        } else if (*t < *p) {
            ++t;
        } else {
            ++tp;
            ++p;
            ++t;
        }
    }
    ConfusionMatrix m;
    m.tp = tp;
    m.fp = static_cast<std::int64_t>(predicted.size()) - tp;
    m.fn = static_cast<std::int64_t>(truth.size()) - tp;
    m.tn = static_cast<std::int64_t>(universe.size()) - m.tp - m.fp - m.fn;
    return m;
}

RocCurve roc_and_auc(const ScoredAccounts& scored, const AccountSet& truth,
                     const AccountSet& universe) {
    if (!accset::is_subset(truth, universe)) {
        throw ContractError("truth set reaches outside the evaluation universe");
    }
    ScoredAccounts sorted = scored;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    struct Sample {
        double score;
        bool positive;
    };
    std::vector<Sample> samples;
    samples.reserve(universe.size());
    for (AccountId a : universe) {
        auto it = std::lower_bound(
            sorted.begin(), sorted.end(), a,
            [](const auto& entry, AccountId key) { return entry.first < key; });
        if (it == sorted.end() || it->first != a) {
            throw ContractError("no score for account " + std::to_string(a.id));
        }
        double s = it->second;
        if (!(s >= 0.0 && s <= 1.0)) {
            throw ContractError("score " + format_double(s) + " for account " +
                                std::to_string(a.id) + " outside [0,1]");
        }
        samples.push_back({s, accset::contains(truth, a)});
    }

    std::int64_t n_pos = 0;
    for (const auto& s : samples) n_pos += s.positive ? 1 : 0;
    std::int64_t n_neg = static_cast<std::int64_t>(samples.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw UndefinedAucError("AUC is undefined with " + std::to_string(n_pos) +
                                " positives and " + std::to_string(n_neg) +
                                " negatives");
    }

    std::vector<double> thresholds;
    thresholds.reserve(samples.size() + 2);
    for (const auto& s : samples) thresholds.push_back(s.score);
    thresholds.push_back(0.0);
    thresholds.push_back(1.0);
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                     thresholds.end());

    std::sort(samples.begin(), samples.end(),
              [](const Sample& a, const Sample& b) { return a.score > b.score; });

    // Integer accumulation: sum of dfp*(tp + tp_prev) over threshold steps is
    // exactly twice the trapezoid area scaled by n_pos*n_neg, which is the
    // tie-corrected rank statistic's numerator.
    RocCurve curve;
    curve.points.reserve(thresholds.size());
    std::int64_t tp = 0, fp = 0, prev_tp = 0, prev_fp = 0, numerator = 0;
    std::size_t next = 0;
    for (double t : thresholds) {
        while (next < samples.size() && samples[next].score >= t) {
            (samples[next].positive ? tp : fp) += 1;
            ++next;
        }
        numerator += (fp - prev_fp) * (tp + prev_tp);
        curve.points.push_back({t, static_cast<double>(fp) / static_cast<double>(n_neg),
                                static_cast<double>(tp) / static_cast<double>(n_pos)});
        prev_tp = tp;
        prev_fp = fp;
    }
    curve.auc = static_cast<double>(numerator) /
                (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return curve;
}

double btr(double auc) { return (auc - 0.5) / 0.5 * 100.0; }

namespace {

constexpr const char* kCellsHeader =
    "horizon\tthreshold\ttp\tfp\ttn\tfn\tprecision\trecall\taccuracy\tfpr";
constexpr const char* kHorizonsHeader = "horizon\tauc\tbtr";
constexpr const char* kRocHeader = "horizon\tthreshold\tfpr\ttpr";

struct ReportParser {
    const std::string& text;
    const std::string& origin;
    std::size_t pos = 0;
    int line_no = 0;

    std::optional<std::string> next_line() {
        if (pos >= text.size()) return std::nullopt;
        std::size_t nl = text.find('\n', pos);
        std::string line = nl == std::string::npos ? text.substr(pos)
                                                   : text.substr(pos, nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(origin, line_no, 1, what);
    }

    void expect(const std::string& want) {
        auto line = next_line();
        if (!line || *line != want) {
            fail("expected '" + want + "'" +
                 (line ? ", got '" + *line + "'" : ", got end of input"));
        }
    }

    std::int64_t as_int(std::string_view field) {
        std::int64_t v = 0;
        if (!parse_i64(field, v)) fail("bad integer '" + std::string(field) + "'");
        return v;
    }

    double as_double(std::string_view field) {
        double v = 0;
        if (!parse_f64(field, v)) fail("bad number '" + std::string(field) + "'");
        return v;
    }
};

}  // namespace

std::string EvalReport::to_tsv() const {
    std::string out = "[cells]\n";
    out += kCellsHeader;
    out.push_back('\n');
    for (const auto& cell : cells) {
        out += std::to_string(cell.horizon);
        out.push_back('\t');
        out += format_double(cell.threshold);
        const auto& m = cell.counts;
        for (std::int64_t v : {m.tp, m.fp, m.tn, m.fn}) {
            out.push_back('\t');
            out += std::to_string(v);
        }
        out.push_back('\t');
        if (auto p = m.precision()) out += format_double(*p);
        out.push_back('\t');
        out += format_double(m.recall());
        out.push_back('\t');
        out += format_double(m.accuracy());
        out.push_back('\t');
        out += format_double(m.fpr());
        out.push_back('\n');
    }
    out += "[horizons]\n";
    out += kHorizonsHeader;
    out.push_back('\n');
    for (const auto& h : horizons) {
        out += std::to_string(h.horizon);
        out.push_back('\t');
        out += format_double(h.auc);
        out.push_back('\t');
        out += format_double(h.btr);
        out.push_back('\n');
    }
    out += "[roc]\n";
    out += kRocHeader;
    out.push_back('\n');
    for (const auto& h : horizons) {
        for (const auto& pt : h.roc) {
            out += std::to_string(h.horizon);
            out.push_back('\t');
            out += format_double(pt.threshold);
            out.push_back('\t');
            out += format_double(pt.fpr);
            out.push_back('\t');
            out += format_double(pt.tpr);
            out.push_back('\n');
        }
    }
    return out;
}

EvalReport EvalReport::from_tsv(const std::string& text, const std::string& origin) {
    ReportParser p{text, origin};
    EvalReport report;

    p.expect("[cells]");
    p.expect(kCellsHeader);
    bool saw_horizons = false;
    while (true) {
        auto line = p.next_line();
        if (!line) p.fail("missing [horizons] section");
        if (*line == "[horizons]") {
            saw_horizons = true;
            break;
        }
        auto fields = split_tsv(*line);
        if (fields.size() != 10) p.fail("cell row needs 10 fields");
        CellMetrics cell;
        cell.horizon = static_cast<std::int32_t>(p.as_int(fields[0]));
        cell.threshold = p.as_double(fields[1]);
        cell.counts.tp = p.as_int(fields[2]);
        cell.counts.fp = p.as_int(fields[3]);
        cell.counts.tn = p.as_int(fields[4]);
        cell.counts.fn = p.as_int(fields[5]);
        report.cells.push_back(cell);
    }
    if (!saw_horizons) p.fail("missing [horizons] section");

    p.expect(kHorizonsHeader);
    while (true) {
        auto line = p.next_line();
        if (!line) p.fail("missing [roc] section");
        if (*line == "[roc]") break;
        auto fields = split_tsv(*line);
        if (fields.size() != 3) p.fail("horizon row needs 3 fields");
        HorizonMetrics h;
        h.horizon = static_cast<std::int32_t>(p.as_int(fields[0]));
        h.auc = p.as_double(fields[1]);
        h.btr = p.as_double(fields[2]);
        report.horizons.push_back(h);
    }

    p.expect(kRocHeader);
    std::map<std::int32_t, std::size_t> by_horizon;
    for (std::size_t i = 0; i < report.horizons.size(); ++i) {
        by_horizon[report.horizons[i].horizon] = i;
    }
    while (auto line = p.next_line()) {
        if (line->empty()) continue;
        auto fields = split_tsv(*line);
        if (fields.size() != 4) p.fail("roc row needs 4 fields");
        auto horizon = static_cast<std::int32_t>(p.as_int(fields[0]));
        auto it = by_horizon.find(horizon);
        if (it == by_horizon.end()) p.fail("roc row for unlisted horizon");
        RocPoint pt;
        pt.threshold = p.as_double(fields[1]);
        pt.fpr = p.as_double(fields[2]);
        pt.tpr = p.as_double(fields[3]);
        report.horizons[it->second].roc.push_back(pt);
    }
    return report;
}

std::string EvalReport::to_text() const {
    std::string out;
    char buf[160];
    std::vector<double> thresholds;
    for (const auto& cell : cells) {
        if (std::find(thresholds.begin(), thresholds.end(), cell.threshold) ==
            thresholds.end()) {
            thresholds.push_back(cell.threshold);
        }
    }
    for (double t : thresholds) {
        std::snprintf(buf, sizeof buf, "Operating threshold T=%s\n",
                      format_double(t).c_str());
        out += buf;
        out += "  H      PRE      REC      ACC      FPR\n";
        for (const auto& cell : cells) {
            if (cell.threshold != t) continue;
            auto p = cell.counts.precision();
            char pre[16];
            if (p) {
                std::snprintf(pre, sizeof pre, "%.4f", *p);
            } else {
                std::snprintf(pre, sizeof pre, "%s", "-");
            }
            std::snprintf(buf, sizeof buf, "  %-5d  %-7s  %.4f   %.4f   %.4f\n",
                          cell.horizon, pre, cell.counts.recall(),
                          cell.counts.accuracy(), cell.counts.fpr());
            out += buf;
        }
        out.push_back('\n');
    }
    out += "Ranking quality\n  H      AUC      BTR\n";
    for (const auto& h : horizons) {
        std::snprintf(buf, sizeof buf, "  %-5d  %.4f   %.2f%%\n", h.horizon, h.auc,
                      h.btr);
        out += buf;
    }
    return out;
}

EvalReport horizon_sweep(const ScoredAccounts& scored, const AccountSetLedger& ledger,
                         const ExerciseConfig& config) {
    auto universe = evaluation_universe(ledger, config);

    std::vector<AccountSet> predicted;
    predicted.reserve(config.thresholds.size());
    for (double t : config.thresholds) {
        predicted.push_back(make_prediction_set(scored, t).positives);
    }

    EvalReport report;
    for (std::int32_t h : config.horizons) {
        auto truth = ground_truth_at_horizon(ledger, config, h, universe);
        for (std::size_t ti = 0; ti < config.thresholds.size(); ++ti) {
            CellMetrics cell;
            cell.horizon = h;
            cell.threshold = config.thresholds[ti];
            cell.counts = confusion(predicted[ti], truth, universe);
            report.cells.push_back(cell);
        }
        auto curve = roc_and_auc(scored, truth, universe);
        HorizonMetrics hm;
        hm.horizon = h;
        hm.auc = curve.auc;
        hm.btr = btr(curve.auc);
        hm.roc = std::move(curve.points);
        report.horizons.push_back(std::move(hm));
    }
    return report;
}

}  // namespace flagcast
