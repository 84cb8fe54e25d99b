#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flagcast/core.hpp"
#include "flagcast/exercise.hpp"

namespace flagcast {

// Counts over one evaluation universe: tp+fp+tn+fn == |universe|.
struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
    // Absent when nothing was predicted positive.
    std::optional<double> precision() const;
    double recall() const;    // 0 when truth is empty
    double accuracy() const;  // 0 on an empty universe
    double fpr() const;       // 0 when every account is in truth
    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(const AccountSet& predicted, const AccountSet& truth,
                          const AccountSet& universe);

struct RocPoint {
    double threshold;
    double fpr;
    double tpr;
    bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
    std::vector<RocPoint> points;  // one per threshold, thresholds descending
    double auc = 0.0;
};

// Thresholds swept over all distinct scores plus {0,1}. The integration is
// exact: it reproduces the tie-corrected rank statistic bit for bit.
RocCurve roc_and_auc(const ScoredAccounts& scored, const AccountSet& truth,
                     const AccountSet& universe);

// Percentage better than a chance classifier: (auc - 0.5)/0.5 * 100.
double btr(double auc);

struct CellMetrics {
    std::int32_t horizon = 0;
    double threshold = 0.0;
    ConfusionMatrix counts;
    bool operator==(const CellMetrics&) const = default;
};

struct HorizonMetrics {
    std::int32_t horizon = 0;
    double auc = 0.0;
    double btr = 0.0;
    std::vector<RocPoint> roc;
    bool operator==(const HorizonMetrics&) const = default;
};

struct EvalReport {
    std::vector<CellMetrics> cells;        // horizon-major, threshold-minor
    std::vector<HorizonMetrics> horizons;  // config order

    std::string to_tsv() const;
    static EvalReport from_tsv(const std::string& text, const std::string& origin);
    std::string to_text() const;
    bool operator==(const EvalReport&) const = default;
};

EvalReport horizon_sweep(const ScoredAccounts& scored, const AccountSetLedger& ledger,
                         const ExerciseConfig& config);

}  // namespace flagcast
