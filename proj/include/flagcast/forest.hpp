#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flagcast/exercise.hpp"
#include "flagcast/features.hpp"

namespace flagcast {

struct ForestHyperparams {
    std::int32_t n_trees = 100;
    std::int32_t max_depth = 12;
    std::int32_t min_samples_leaf = 1;
    std::int32_t features_per_split = 3;
    double bootstrap_fraction = 1.0;
    std::uint64_t seed = 42;

    void validate() const;  // ConfigError on out-of-range fields
    bool operator==(const ForestHyperparams&) const = default;
};

// The tuning grid used when a run asks for model selection.
std::vector<ForestHyperparams> default_grid(std::uint64_t seed);

// Flat tree storage. Internal nodes carry feature >= 0 and child indices that
// always point forward (pre-order layout); leaves have feature == -1.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    double gain = 0.0;  // impurity decrease at this node, 0 for leaves
    std::int32_t left = -1;
    std::int32_t right = -1;
    double pos_fraction = 0.0;
    std::int64_t n_samples = 0;
    bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // root at 0

    double predict(const std::array<double, kFeatureCount>& values) const;
    bool operator==(const DecisionTree&) const = default;
};

struct ForestModel {
    ForestHyperparams hp;
    std::string feature_order;
    std::vector<DecisionTree> trees;
    std::array<double, kFeatureCount> importances{};
    bool operator==(const ForestModel&) const = default;
};

// Grows one tree over examples[sample_indices]; indices may repeat (bootstrap
// multiplicity). Exposed so the split choice can be audited externally.
DecisionTree grow_tree(std::span<const LabeledExample> examples,
                       std::span<const std::size_t> sample_indices,
                       const ForestHyperparams& hp, std::uint64_t tree_seed);

ForestModel fit(std::span<const LabeledExample> examples, const ForestHyperparams& hp,
                int threads = 1);

double predict_proba(const ForestModel& model, const FeatureVector& vector);
bool classify(const ForestModel& model, const FeatureVector& vector, double threshold);
ScoredAccounts score_accounts(const ForestModel& model, const FeatureTable& table,
                              int threads = 1);

const std::array<double, kFeatureCount>& importances(const ForestModel& model);

std::string save_model(const ForestModel& model);
ForestModel load_model(const std::string& text, const std::string& origin);
void save_model_file(const std::filesystem::path& path, const ForestModel& model);
ForestModel load_model_file(const std::filesystem::path& path);

struct GridCandidate {
    ForestHyperparams hp;
    double validation_auc = 0.0;
};

struct GridSearchResult {
    ForestHyperparams best;
    std::vector<GridCandidate> table;  // grid order
};

GridSearchResult grid_search(std::span<const LabeledExample> examples,
                             std::span<const ForestHyperparams> grid,
                             double validation_fraction, std::uint64_t seed,
                             int threads = 1);

}  // namespace flagcast
