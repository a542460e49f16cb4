#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace selftrain {

// How an example got its label. Absent entirely for pool examples.
struct Provenance {
    enum class Source { TrueLabel, PseudoLabel };
    Source source = Source::TrueLabel;
    int iteration = 0;  // iteration the pseudo-label was first assigned at

    bool is_pseudo() const { return source == Source::PseudoLabel; }
};

struct Example {
    std::vector<double> features;
    std::optional<int> label;
    std::optional<Provenance> provenance;
    std::int64_t origin_id = -1;  // stable identity across pool moves
};

Example make_labeled(std::vector<double> features, int label, std::int64_t origin_id);
Example make_pseudo_labeled(std::vector<double> features, int label, int iteration,
                            std::int64_t origin_id);
Example make_unlabeled(std::vector<double> features, std::int64_t origin_id);

/// Ordered collection of examples sharing a feature dimension and class
/// count. Insertion order is the iteration order. Canonical datasets
/// (loader outputs, pool partitions) carry unique origin_ids; bootstrap
/// samples deliberately repeat them.
class Dataset {
public:
    Dataset() = default;
    Dataset(int feature_dim, int num_classes);

    void add(Example example);
    void reserve(std::size_t n) { examples_.reserve(n); }

    std::size_t size() const { return examples_.size(); }
    bool empty() const { return examples_.empty(); }
    const Example& operator[](std::size_t i) const { return examples_[i]; }
    auto begin() const { return examples_.begin(); }
    auto end() const { return examples_.end(); }

    int feature_dim() const { return feature_dim_; }
    int num_classes() const { return num_classes_; }

    /// Widen the class count (e.g. after merging CSV splits). Never shrinks
    /// below an already-present label.
    void set_num_classes(int num_classes);

    /// Replace the label of the example at index i, keeping its provenance
    /// source and assignment iteration. Used by pseudo-label refresh.
    void relabel(std::size_t i, int label);

private:
    std::vector<Example> examples_;
    int feature_dim_ = 0;
    int num_classes_ = 0;
};

bool has_unique_ids(const Dataset& dataset);

/// The evolving labeled/unlabeled partition of a run. Value type: all
/// transitions return a new state, so states are safe to share across
/// threads without locking.
struct PoolState {
    Dataset labeled;    // original labels plus accumulated pseudo-labels
    Dataset unlabeled;  // remaining pool, labels absent
    int iteration = 0;
};

/// Validates the partition invariants (labels present/absent, ids unique
/// and disjoint across the two sides).
PoolState make_pool(Dataset labeled, Dataset unlabeled);

/// Draw k bootstrap samples of size m, uniformly with replacement.
/// Deterministic for a fixed (seed, input) pair. m may exceed the source
/// size; with replacement that stays well-defined.
std::vector<Dataset> subsample(const Dataset& training_set, std::size_t m, std::size_t k,
                               std::uint64_t seed);

/// Move the selected pool examples into the labeled side with pseudo-label
/// provenance stamped at the current iteration, and advance the iteration
/// counter. selected_ids and labels are parallel arrays.
PoolState merge_pseudo(const PoolState& state, std::span<const std::int64_t> selected_ids,
                       std::span<const int> labels);

/// Overwrite the labels of previously pseudo-labeled examples. True-labeled
/// examples are immutable; attempting to touch one is an error. Provenance
/// (including the original assignment iteration) is preserved.
PoolState refresh_pseudo_labels(const PoolState& state,
                                const std::unordered_map<std::int64_t, int>& new_labels);

}  // namespace selftrain
