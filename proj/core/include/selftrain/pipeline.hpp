#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "selftrain/data.hpp"
#include "selftrain/ensemble.hpp"
#include "selftrain/ingest.hpp"
#include "selftrain/metrics.hpp"
#include "selftrain/model.hpp"

namespace selftrain {

enum class Mode { NonEnsemble, EnsembleNoSubsample, EnsembleWithSubsample };

std::string mode_name(Mode mode);
Mode mode_from_name(const std::string& name);

struct ExperimentConfig {
    Mode mode = Mode::EnsembleWithSubsample;
    int k = 3;
    std::size_t m = 0;        // bootstrap sample size (EnsembleWithSubsample only)
    std::size_t p = 0;        // pseudo-labels selected per iteration
    int num_iterations = 0;   // N; a run reports N+1 rows including the base
    std::vector<ModelSpec> model_specs;  // one per member
    TrainConfig train_config;
    std::optional<AugmentSpec> augment;
    std::uint64_t seed = 0;

    // Position of each member in the seed-derivation schedule. Defaults to
    // 0..k-1; compare_modes gives a single-model run the slot of the member
    // it mirrors, so runs trained on identical data produce identical models.
    std::vector<int> seed_slots;

    void validate() const;
};

/// The default heterogeneous teacher committee: a softmax-linear model and
/// two MLPs of different depth.
std::vector<ModelSpec> default_member_specs(int input_dim, int num_classes);

struct IterationResult {
    int iteration = 0;
    std::size_t labeled_size = 0;  // training-set size consumed this iteration
    std::vector<EvalResult> per_model;
    EvalResult ensemble;
    std::size_t selected_count = 0;
    std::size_t pool_remaining = 0;
    // Diagnostics, filled only when hidden ground truth is available.
    std::optional<double> pseudo_label_precision;
    std::optional<double> selected_ood_fraction;
};

/// Heavyweight per-iteration detail, for audit files and invariant checks.
struct IterationTrace {
    std::vector<EnsemblePrediction> pool_predictions;  // pool order, pre-selection
    std::vector<std::int64_t> selected_ids;            // entropy-ascending
    std::vector<int> assigned_labels;
    std::vector<std::pair<std::int64_t, int>> refreshed_labels;
};

struct IterationOutcome {
    PoolState next_state;
    IterationResult result;
    std::vector<TrainedModel> models;
    IterationTrace trace;
};

/// One full procedure step: build the k training sets for the current mode,
/// train every member from fresh initialization, predict over the pool,
/// refresh previously assigned pseudo-labels with the new ensemble, select
/// the lowest-entropy examples, assign their pseudo-labels, merge, and
/// evaluate member and ensemble metrics on the test set.
IterationOutcome run_iteration(const PoolState& state, const ExperimentConfig& config,
                               const Dataset& test, std::uint64_t iteration_seed,
                               const HiddenLabels* hidden = nullptr);

using IterationObserver =
    std::function<void(const IterationResult&, const IterationTrace&)>;

/// Chain N+1 iterations starting from the initial labeled/unlabeled split.
/// Row 0 is the base iteration: its models consume exactly the initial
/// labeled set, untouched by any pseudo-label. Deterministic for a fixed
/// (datasets, config) pair regardless of thread count.
std::vector<IterationResult> run_experiment(const Dataset& labeled, const Dataset& unlabeled,
                                            const Dataset& test,
                                            const ExperimentConfig& config,
                                            const HiddenLabels* hidden = nullptr,
                                            const IterationObserver& observer = {});

struct ExperimentRun {
    Mode mode = Mode::NonEnsemble;
    std::string label;                    // unique per run, filesystem-friendly
    std::vector<std::string> model_names; // one per member
    bool has_ensemble_row = false;
    std::vector<IterationResult> iterations;
};

struct ExperimentMatrix {
    std::vector<ExperimentRun> runs;
};

using MatrixObserver = std::function<void(const ExperimentRun& run, const IterationResult&,
                                          const IterationTrace&)>;

/// The three-experiment comparison on shared data and seeds: one
/// conventional single-teacher run per member architecture, then the
/// ensemble without subsampling, then the ensemble with subsampling.
ExperimentMatrix compare_modes(const Dataset& labeled, const Dataset& unlabeled,
                               const Dataset& test, const ExperimentConfig& base_config,
                               const HiddenLabels* hidden = nullptr,
                               const MatrixObserver& observer = {});

/// The run layout compare_modes produces, without executing anything.
/// Lets journal readers and report tests agree on row structure.
std::vector<ExperimentRun> matrix_layout(const ExperimentConfig& base_config);

}  // namespace selftrain
