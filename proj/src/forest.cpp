#include "flagcast/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "flagcast/errors.hpp"
#include "flagcast/metrics.hpp"
#include "flagcast/rng.hpp"
#include "flagcast/util.hpp"

namespace flagcast {

void ForestHyperparams::validate() const {
    if (n_trees < 1) throw ConfigError("n_trees must be positive");
    if (max_depth < 1) throw ConfigError("max_depth must be positive");
    if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be positive");
    if (features_per_split < 1 ||
        std::cmp_greater(features_per_split, kFeatureCount)) {
        throw ConfigError("features_per_split must lie in [1," +
                          std::to_string(kFeatureCount) + "]");
    }
    if (!(bootstrap_fraction > 0.0 && bootstrap_fraction <= 1.0)) {
        throw ConfigError("bootstrap_fraction must lie in (0,1]");
    }
}

std::vector<ForestHyperparams> default_grid(std::uint64_t seed) {
    std::vector<ForestHyperparams> grid;
    for (std::int32_t trees : {50, 100, 200}) {
        for (std::int32_t depth : {8, 12, 16}) {
            for (std::int32_t leaf : {1, 5}) {
                for (std::int32_t fps : {3, 6}) {
                    ForestHyperparams hp;
                    hp.n_trees = trees;
                    hp.max_depth = depth;
                    hp.min_samples_leaf = leaf;
                    hp.features_per_split = fps;
                    hp.bootstrap_fraction = 1.0;
                    hp.seed = seed;
                    grid.push_back(hp);
                }
            }
        }
    }
    return grid;
}

double DecisionTree::predict(const std::array<double, kFeatureCount>& values) const {
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const TreeNode& node = nodes[i];
        i = static_cast<std::size_t>(
            values[static_cast<std::size_t>(node.feature)] <= node.threshold
                ? node.left
                : node.right);
    }
    return nodes[i].pos_fraction;
}

namespace {

struct WorkItem {
    std::int32_t parent;  // -1 at the root
    bool is_left;
    std::size_t begin, end;  // range in the node's index array
    std::int32_t depth;
};

}  // namespace

DecisionTree grow_tree(std::span<const LabeledExample> examples,
                       std::span<const std::size_t> sample_indices,
                       const ForestHyperparams& hp, std::uint64_t tree_seed) {
    hp.validate();
    if (sample_indices.empty()) {
        throw ContractError("cannot grow a tree over zero samples");
    }
    Rng rng(tree_seed);
    std::vector<std::size_t> idx(sample_indices.begin(), sample_indices.end());

    DecisionTree tree;
    std::vector<WorkItem> stack;
    stack.push_back({-1, false, 0, idx.size(), 0});

    const int subset = std::min<int>(hp.features_per_split, kFeatureCount);
    std::vector<std::pair<double, bool>> scratch;

    while (!stack.empty()) {
        WorkItem item = stack.back();
        stack.pop_back();
        const auto node_index = static_cast<std::int32_t>(tree.nodes.size());
        if (item.parent >= 0) {
            auto& parent = tree.nodes[static_cast<std::size_t>(item.parent)];
            (item.is_left ? parent.left : parent.right) = node_index;
        }

        const auto n = static_cast<std::int64_t>(item.end - item.begin);
        std::int64_t p = 0;
        for (std::size_t i = item.begin; i < item.end; ++i) {
            p += examples[idx[i]].label ? 1 : 0;
        }
        const std::int64_t q = n - p;

        TreeNode node;
        node.n_samples = n;
        node.pos_fraction = static_cast<double>(p) / static_cast<double>(n);

        bool found = false;
        int best_feature = -1;
        double best_threshold = 0.0;
        // Weighted child impurity of a candidate is num/(n*den); every
        // comparison cross-multiplies so equal gains tie exactly, and ties
        // resolve to the lowest feature then lowest threshold by scan order.
        __int128 best_num = 0;
        std::int64_t best_den = 1;

        if (item.depth < hp.max_depth && p > 0 && q > 0 &&
            n >= 2 * static_cast<std::int64_t>(hp.min_samples_leaf)) {
            std::array<int, kFeatureCount> pool;
            std::iota(pool.begin(), pool.end(), 0);
            if (std::cmp_less(subset, kFeatureCount)) {
                for (int i = 0; i < subset; ++i) {
                    auto j = static_cast<std::size_t>(i) +
                             rng.next_below(
                                 static_cast<std::uint64_t>(kFeatureCount - i));
                    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
                }
                std::sort(pool.begin(), pool.begin() + subset);
            }

            for (int fi = 0; fi < subset; ++fi) {
                const int f = pool[static_cast<std::size_t>(fi)];
                scratch.clear();
                scratch.reserve(static_cast<std::size_t>(n));
                for (std::size_t i = item.begin; i < item.end; ++i) {
                    const auto& e = examples[idx[i]];
                    scratch.push_back(
                        {e.vector.values[static_cast<std::size_t>(f)], e.label});
                }
                std::sort(scratch.begin(), scratch.end(),
                          [](const auto& a, const auto& b) {
                              return a.first < b.first;
                          });
                std::int64_t pl = 0;
                for (std::int64_t i = 1; i < n; ++i) {
                    pl += scratch[static_cast<std::size_t>(i - 1)].second ? 1 : 0;
                    if (scratch[static_cast<std::size_t>(i - 1)].first ==
                        scratch[static_cast<std::size_t>(i)].first) {
                        continue;
                    }
                    const std::int64_t nl = i, nr = n - i;
                    if (nl < hp.min_samples_leaf || nr < hp.min_samples_leaf) {
                        continue;
                    }
                    const std::int64_t ql = nl - pl;
                    const std::int64_t pr = p - pl, qr = nr - pr;
                    const std::int64_t sl = nl * nl - pl * pl - ql * ql;
                    const std::int64_t sr = nr * nr - pr * pr - qr * qr;
                    const __int128 num =
                        static_cast<__int128>(sl) * nr + static_cast<__int128>(sr) * nl;
                    const std::int64_t den = nl * nr;
                    if (!found || num * best_den < best_num * den) {
                        found = true;
                        best_num = num;
                        best_den = den;
                        best_feature = f;
                        best_threshold =
                            (scratch[static_cast<std::size_t>(i - 1)].first +
                             scratch[static_cast<std::size_t>(i)].first) /
                            2.0;
                    }
                }
            }

            if (found) {
                const std::int64_t parent_num = n * n - p * p - q * q;
                found = static_cast<__int128>(parent_num) * best_den >
                        best_num * static_cast<__int128>(n);
                if (found) {
                    node.feature = best_feature;
                    node.threshold = best_threshold;
                    node.gain = static_cast<double>(parent_num) /
                                    (static_cast<double>(n) * static_cast<double>(n)) -
                                static_cast<double>(best_num) /
                                    (static_cast<double>(n) *
                                     static_cast<double>(best_den));
                }
            }
        }

        tree.nodes.push_back(node);
        if (!found) continue;

        auto mid = std::partition(
            idx.begin() + static_cast<std::ptrdiff_t>(item.begin),
            idx.begin() + static_cast<std::ptrdiff_t>(item.end), [&](std::size_t s) {
                return examples[s]
                           .vector.values[static_cast<std::size_t>(best_feature)] <=
                       best_threshold;
            });
        const auto split_at =
            static_cast<std::size_t>(mid - idx.begin());
        // right pushed first so the left subtree is laid out first (pre-order)
        stack.push_back({node_index, false, split_at, item.end, item.depth + 1});
        stack.push_back({node_index, true, item.begin, split_at, item.depth + 1});
    }
    return tree;
}

ForestModel fit(std::span<const LabeledExample> examples, const ForestHyperparams& hp,
                int threads) {
    hp.validate();
    const auto n = static_cast<std::int64_t>(examples.size());
    std::int64_t p = 0;
    for (const auto& e : examples) p += e.label ? 1 : 0;
    if (n == 0 || p == 0 || p == n) {
        throw DegenerateTrainingError("training needs both classes; got " +
                                      std::to_string(p) + " positives out of " +
                                      std::to_string(n));
    }

    ForestModel model;
    model.hp = hp;
    model.feature_order = feature_order_tag();
    model.trees.resize(static_cast<std::size_t>(hp.n_trees));

    auto draws = static_cast<std::size_t>(hp.bootstrap_fraction *
                                          static_cast<double>(n));
    if (draws == 0) draws = 1;

    parallel_for(static_cast<std::size_t>(hp.n_trees), threads,
                 [&](std::size_t begin, std::size_t end) {
                     std::vector<std::size_t> sample(draws);
                     for (std::size_t t = begin; t < end; ++t) {
                         Rng rng(derive_seed(hp.seed, static_cast<std::uint64_t>(t)));
                         for (auto& s : sample) {
                             s = static_cast<std::size_t>(
                                 rng.next_below(static_cast<std::uint64_t>(n)));
                         }
                         model.trees[t] = grow_tree(examples, sample, hp,
                                                    rng.next_u64());
                     }
                 });

    std::array<double, kFeatureCount> acc{};
    for (const auto& tree : model.trees) {
        const auto root_n = static_cast<double>(tree.nodes[0].n_samples);
        for (const auto& node : tree.nodes) {
            if (node.feature >= 0) {
                acc[static_cast<std::size_t>(node.feature)] +=
                    static_cast<double>(node.n_samples) / root_n * node.gain;
            }
        }
    }
    const double total = std::accumulate(acc.begin(), acc.end(), 0.0);
    if (total > 0.0) {
        for (double& v : acc) v /= total;
    } else {
        acc.fill(1.0 / kFeatureCount);
    }
    model.importances = acc;
    return model;
}

double predict_proba(const ForestModel& model, const FeatureVector& vector) {
    if (model.feature_order != feature_order_tag()) {
        throw ContractError("model feature order '" + model.feature_order +
                            "' does not match this build");
    }
    if (model.trees.empty()) throw ContractError("model has no trees");
    double sum = 0.0;
    for (const auto& tree : model.trees) sum += tree.predict(vector.values);
    return sum / static_cast<double>(model.trees.size());
}

bool classify(const ForestModel& model, const FeatureVector& vector,
              double threshold) {
    return predict_proba(model, vector) >= threshold;
}

ScoredAccounts score_accounts(const ForestModel& model, const FeatureTable& table,
                              int threads) {
    if (model.feature_order != feature_order_tag()) {
        throw ContractError("model feature order '" + model.feature_order +
                            "' does not match this build");
    }
    const auto& rows = table.rows();
    ScoredAccounts scored(rows.size());
    parallel_for(rows.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            double sum = 0.0;
            for (const auto& tree : model.trees) sum += tree.predict(rows[i].values);
            scored[i] = {rows[i].account,
                         sum / static_cast<double>(model.trees.size())};
        }
    });
    return scored;
}

const std::array<double, kFeatureCount>& importances(const ForestModel& model) {
    return model.importances;
}

namespace {

constexpr const char* kModelMagic = "flagcast-model v1";

struct LineReader {
    const std::string& text;
    const std::string& origin;
    std::size_t pos = 0;
    int line_no = 0;

    std::optional<std::string> next() {
        if (pos >= text.size()) return std::nullopt;
        auto nl = text.find('\n', pos);
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

    std::string expect_kv(const std::string& key) {
        auto line = next();
        if (!line || line->rfind(key + "=", 0) != 0) {
            fail("expected '" + key + "=...'");
        }
        return line->substr(key.size() + 1);
    }
};

}  // namespace

std::string save_model(const ForestModel& model) {
    std::string out = kModelMagic;
    out.push_back('\n');
    out += "n_trees=" + std::to_string(model.hp.n_trees) + "\n";
    out += "max_depth=" + std::to_string(model.hp.max_depth) + "\n";
    out += "min_samples_leaf=" + std::to_string(model.hp.min_samples_leaf) + "\n";
    out += "features_per_split=" + std::to_string(model.hp.features_per_split) + "\n";
    out += "bootstrap_fraction=" + format_double(model.hp.bootstrap_fraction) + "\n";
    out += "seed=" + std::to_string(model.hp.seed) + "\n";
    out += "feature_order=" + model.feature_order + "\n";
    out += "importances=";
    for (std::size_t i = 0; i < model.importances.size(); ++i) {
        if (i) out.push_back(',');
        out += format_double(model.importances[i]);
    }
    out.push_back('\n');
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        const auto& nodes = model.trees[t].nodes;
        out += "tree\t" + std::to_string(t) + "\t" + std::to_string(nodes.size()) +
               "\n";
        for (const auto& node : nodes) {
            out += std::to_string(node.feature);
            out.push_back('\t');
            out += format_double(node.threshold);
            out.push_back('\t');
            out += format_double(node.gain);
            out.push_back('\t');
            out += std::to_string(node.left);
            out.push_back('\t');
            out += std::to_string(node.right);
            out.push_back('\t');
            out += format_double(node.pos_fraction);
            out.push_back('\t');
            out += std::to_string(node.n_samples);
            out.push_back('\n');
        }
    }
    return out;
}

ForestModel load_model(const std::string& text, const std::string& origin) {
    LineReader reader{text, origin};
    auto magic = reader.next();
    if (!magic || *magic != kModelMagic) reader.fail("not a model file");

    ForestModel model;
    auto as_i32 = [&](const std::string& v, const char* what) {
        std::int64_t out = 0;
        if (!parse_i64(v, out)) reader.fail(std::string("bad ") + what);
        return static_cast<std::int32_t>(out);
    };
    model.hp.n_trees = as_i32(reader.expect_kv("n_trees"), "n_trees");
    model.hp.max_depth = as_i32(reader.expect_kv("max_depth"), "max_depth");
    model.hp.min_samples_leaf =
        as_i32(reader.expect_kv("min_samples_leaf"), "min_samples_leaf");
    model.hp.features_per_split =
        as_i32(reader.expect_kv("features_per_split"), "features_per_split");
    if (!parse_f64(reader.expect_kv("bootstrap_fraction"),
                   model.hp.bootstrap_fraction)) {
        reader.fail("bad bootstrap_fraction");
    }
    if (!parse_u64(reader.expect_kv("seed"), model.hp.seed)) {
        reader.fail("bad seed");
    }
    try {
        model.hp.validate();
    } catch (const ConfigError& e) {
        reader.fail(e.what());
    }
    model.feature_order = reader.expect_kv("feature_order");

    auto importance_text = reader.expect_kv("importances");
    std::size_t start = 0, count = 0;
    while (start <= importance_text.size() && count < kFeatureCount) {
        auto comma = importance_text.find(',', start);
        auto field = comma == std::string::npos
                         ? importance_text.substr(start)
                         : importance_text.substr(start, comma - start);
        if (!parse_f64(field, model.importances[count])) {
            reader.fail("bad importance value '" + field + "'");
        }
        ++count;
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (count != kFeatureCount) reader.fail("importances needs 13 values");

    for (std::int32_t t = 0; t < model.hp.n_trees; ++t) {
        auto header = reader.next();
        if (!header) reader.fail("missing tree " + std::to_string(t));
        auto fields = split_tsv(*header);
        std::int64_t tree_index = -1, n_nodes = 0;
        if (fields.size() != 3 || fields[0] != "tree" ||
            !parse_i64(fields[1], tree_index) || tree_index != t ||
            !parse_i64(fields[2], n_nodes) || n_nodes < 1) {
            reader.fail("expected 'tree\t" + std::to_string(t) + "\t<count>'");
        }
        DecisionTree tree;
        tree.nodes.reserve(static_cast<std::size_t>(n_nodes));
        for (std::int64_t i = 0; i < n_nodes; ++i) {
            auto line = reader.next();
            if (!line) reader.fail("tree truncated");
            auto f = split_tsv(*line);
            if (f.size() != 7) reader.fail("node row needs 7 fields");
            TreeNode node;
            std::int64_t feature = 0, left = 0, right = 0;
            if (!parse_i64(f[0], feature) || !parse_f64(f[1], node.threshold) ||
                !parse_f64(f[2], node.gain) || !parse_i64(f[3], left) ||
                !parse_i64(f[4], right) || !parse_f64(f[5], node.pos_fraction) ||
                !parse_i64(f[6], node.n_samples)) {
                reader.fail("malformed node row");
            }
            if (feature < -1 || feature >= static_cast<std::int64_t>(kFeatureCount)) {
                reader.fail("feature index " + std::to_string(feature) +
                            " out of range");
            }
            node.feature = static_cast<std::int32_t>(feature);
            node.left = static_cast<std::int32_t>(left);
            node.right = static_cast<std::int32_t>(right);
            if (node.feature == -1) {
                if (node.left != -1 || node.right != -1) {
                    reader.fail("leaf with children");
                }
            } else if (node.left <= i || node.right <= i || node.left >= n_nodes ||
                       node.right >= n_nodes) {
                reader.fail("child index out of range");
            }
            if (node.n_samples < 1) reader.fail("node with no samples");
            tree.nodes.push_back(node);
        }
        model.trees.push_back(std::move(tree));
    }
    while (auto line = reader.next()) {
        if (!line->empty()) reader.fail("trailing content after last tree");
    }
    return model;
}

void save_model_file(const std::filesystem::path& path, const ForestModel& model) {
    write_file(path, save_model(model));
}

ForestModel load_model_file(const std::filesystem::path& path) {
    return load_model(read_file(path), path.string());
}

GridSearchResult grid_search(std::span<const LabeledExample> examples,
                             std::span<const ForestHyperparams> grid,
                             double validation_fraction, std::uint64_t seed,
                             int threads) {
    if (grid.empty()) throw ContractError("empty hyperparameter grid");
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation fraction must lie in (0,1)");
    }

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        (examples[i].label ? pos : neg).push_back(i);
    }
    if (pos.empty() || neg.empty()) {
        throw DegenerateTrainingError("grid search needs both classes");
    }

    Rng rng(derive_seed(seed, std::string_view("grid-split")));
    auto shuffle = [&](std::vector<std::size_t>& v) {
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            auto j = i + rng.next_below(v.size() - i);
            std::swap(v[i], v[j]);
        }
    };
    shuffle(pos);
    shuffle(neg);

    const auto val_pos = static_cast<std::size_t>(
        validation_fraction * static_cast<double>(pos.size()));
    const auto val_neg = static_cast<std::size_t>(
        validation_fraction * static_cast<double>(neg.size()));
    if (val_pos == 0 || val_neg == 0) {
        throw DegenerateTrainingError(
            "stratified validation split has a single class; not enough "
            "examples for validation_fraction=" +
            format_double(validation_fraction));
    }

    std::vector<std::size_t> val_idx(pos.begin(),
                                     pos.begin() + static_cast<std::ptrdiff_t>(val_pos));
    val_idx.insert(val_idx.end(), neg.begin(),
                   neg.begin() + static_cast<std::ptrdiff_t>(val_neg));
    std::vector<std::size_t> fit_idx(pos.begin() + static_cast<std::ptrdiff_t>(val_pos),
                                     pos.end());
    fit_idx.insert(fit_idx.end(), neg.begin() + static_cast<std::ptrdiff_t>(val_neg),
                   neg.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::sort(fit_idx.begin(), fit_idx.end());

    std::vector<LabeledExample> fit_set, val_set;
    fit_set.reserve(fit_idx.size());
    val_set.reserve(val_idx.size());
    for (auto i : fit_idx) fit_set.push_back(examples[i]);
    for (auto i : val_idx) val_set.push_back(examples[i]);

    AccountSet truth, universe;
    for (const auto& e : val_set) {
        universe.push_back(e.account);
        if (e.label) truth.push_back(e.account);
    }
    accset::normalize(truth);
    accset::normalize(universe);

    GridSearchResult result;
    bool have_best = false;
    double best_auc = 0.0;
    for (const auto& hp : grid) {
        auto model = fit(fit_set, hp, threads);
        ScoredAccounts scored;
        scored.reserve(val_set.size());
        for (const auto& e : val_set) {
            scored.push_back({e.account, predict_proba(model, e.vector)});
        }
        const double auc = roc_and_auc(scored, truth, universe).auc;
        result.table.push_back({hp, auc});

        bool better = !have_best || auc > best_auc;
        if (have_best && auc == best_auc) {
            better = hp.n_trees < result.best.n_trees ||
                     (hp.n_trees == result.best.n_trees &&
                      hp.max_depth < result.best.max_depth);
        }
        if (better) {
            result.best = hp;
            best_auc = auc;
            have_best = true;
        }
    }
    return result;
}

}  // namespace flagcast
