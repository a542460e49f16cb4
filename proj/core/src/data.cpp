#include "selftrain/data.hpp"

#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>

#include "selftrain/errors.hpp"
#include "selftrain/rng.hpp"

namespace selftrain {

Example make_labeled(std::vector<double> features, int label, std::int64_t origin_id) {
    return Example{std::move(features), label,
                   Provenance{Provenance::Source::TrueLabel, 0}, origin_id};
}

Example make_pseudo_labeled(std::vector<double> features, int label, int iteration,
                            std::int64_t origin_id) {
    return Example{std::move(features), label,
                   Provenance{Provenance::Source::PseudoLabel, iteration}, origin_id};
}

Example make_unlabeled(std::vector<double> features, std::int64_t origin_id) {
    return Example{std::move(features), std::nullopt, std::nullopt, origin_id};
}

Dataset::Dataset(int feature_dim, int num_classes)
    : feature_dim_(feature_dim), num_classes_(num_classes) {
    if (feature_dim < 0 || num_classes < 0) {
        throw std::invalid_argument("Dataset: negative dimensions");
    }
}

void Dataset::add(Example example) {
    if (static_cast<int>(example.features.size()) != feature_dim_) {
        throw std::invalid_argument("Dataset: feature dimension mismatch");
    }
    if (example.label.has_value() != example.provenance.has_value()) {
        throw std::invalid_argument("Dataset: label present iff provenance is set");
    }
    if (example.label && (*example.label < 0 || *example.label >= num_classes_)) {
        throw std::invalid_argument("Dataset: class index out of range");
    }
    examples_.push_back(std::move(example));
}

void Dataset::set_num_classes(int num_classes) {
    for (const Example& example : examples_) {
        if (example.label && *example.label >= num_classes) {
            throw std::invalid_argument("Dataset: class count below existing label");
        }
    }
    num_classes_ = num_classes;
}

void Dataset::relabel(std::size_t i, int label) {
    if (i >= examples_.size()) {
        throw std::invalid_argument("Dataset: relabel index out of range");
    }
    if (label < 0 || label >= num_classes_) {
        throw std::invalid_argument("Dataset: class index out of range");
    }
    if (!examples_[i].label) {
        throw std::invalid_argument("Dataset: relabel of unlabeled example");
    }
    examples_[i].label = label;
}

bool has_unique_ids(const Dataset& dataset) {
    std::unordered_set<std::int64_t> seen;
    seen.reserve(dataset.size());
    for (const Example& example : dataset) {
        if (!seen.insert(example.origin_id).second) {
            return false;
        }
    }
    return true;
}

PoolState make_pool(Dataset labeled, Dataset unlabeled) {
    if (!labeled.empty() && !unlabeled.empty() &&
        labeled.feature_dim() != unlabeled.feature_dim()) {
        throw std::invalid_argument("make_pool: feature dimension mismatch");
    }
    std::unordered_set<std::int64_t> ids;
    ids.reserve(labeled.size() + unlabeled.size());
    for (const Example& example : labeled) {
        if (!example.label) {
            throw std::invalid_argument("make_pool: unlabeled example on labeled side");
        }
        if (!ids.insert(example.origin_id).second) {
            throw std::invalid_argument("make_pool: duplicate origin_id");
        }
    }
    for (const Example& example : unlabeled) {
        if (example.label) {
            throw std::invalid_argument("make_pool: labeled example in pool");
        }
        if (!ids.insert(example.origin_id).second) {
            throw std::invalid_argument("make_pool: duplicate origin_id");
        }
    }
    return PoolState{std::move(labeled), std::move(unlabeled), 0};
}

std::vector<Dataset> subsample(const Dataset& training_set, std::size_t m, std::size_t k,
                               std::uint64_t seed) {
    if (training_set.empty()) {
        throw DataError("empty labeled pool");
    }
    if (m < 1 || k < 1) {
        throw std::invalid_argument("subsample: m and k must be >= 1");
    }
    Rng rng(seed);
    std::vector<Dataset> samples;
    samples.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        Dataset sample(training_set.feature_dim(), training_set.num_classes());
        sample.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            sample.add(training_set[rng.below(training_set.size())]);
        }
        samples.push_back(std::move(sample));
    }
    return samples;
}

PoolState merge_pseudo(const PoolState& state, std::span<const std::int64_t> selected_ids,
                       std::span<const int> labels) {
    if (selected_ids.size() != labels.size()) {
        throw std::invalid_argument("merge_pseudo: ids and labels differ in length");
    }

    std::unordered_map<std::int64_t, int> selected;
    selected.reserve(selected_ids.size());
    for (std::size_t i = 0; i < selected_ids.size(); ++i) {
        if (!selected.emplace(selected_ids[i], labels[i]).second) {
            throw std::invalid_argument("merge_pseudo: duplicate selected id " +
                                        std::to_string(selected_ids[i]));
        }
    }

    PoolState next;
    next.labeled = state.labeled;
    next.unlabeled = Dataset(state.unlabeled.feature_dim(), state.unlabeled.num_classes());
    next.iteration = state.iteration + 1;

    std::size_t moved = 0;
    for (const Example& example : state.unlabeled) {
        const auto it = selected.find(example.origin_id);
        if (it == selected.end()) {
            next.unlabeled.add(example);
            continue;
        }
        next.labeled.add(make_pseudo_labeled(example.features, it->second, state.iteration,
                                             example.origin_id));
        ++moved;
    }
    if (moved != selected.size()) {
        throw std::invalid_argument("merge_pseudo: unknown unlabeled id");
    }
    return next;
}

PoolState refresh_pseudo_labels(const PoolState& state,
                                const std::unordered_map<std::int64_t, int>& new_labels) {
    PoolState next = state;
    std::size_t applied = 0;
    for (std::size_t i = 0; i < next.labeled.size(); ++i) {
        const Example& example = next.labeled[i];
        const auto it = new_labels.find(example.origin_id);
        if (it == new_labels.end()) {
            continue;
        }
        if (!example.provenance || !example.provenance->is_pseudo()) {
            throw std::invalid_argument("cannot relabel ground truth");
        }
        next.labeled.relabel(i, it->second);
        ++applied;
    }
    if (applied != new_labels.size()) {
        throw std::invalid_argument("refresh_pseudo_labels: id not in labeled set");
    }
    return next;
}

}  // namespace selftrain
