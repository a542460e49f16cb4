#include "selftrain/pipeline.hpp"

#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "selftrain/errors.hpp"
#include "selftrain/parallel.hpp"
#include "selftrain/rng.hpp"

namespace selftrain {

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::NonEnsemble:
            return "non_ensemble";
        case Mode::EnsembleNoSubsample:
            return "ensemble_no_subsample";
        case Mode::EnsembleWithSubsample:
            return "ensemble_subsample";
    }
    throw std::invalid_argument("unknown mode");
}

Mode mode_from_name(const std::string& name) {
    if (name == "non_ensemble") {
        return Mode::NonEnsemble;
    }
    if (name == "ensemble_no_subsample") {
        return Mode::EnsembleNoSubsample;
    }
    if (name == "ensemble_subsample") {
        return Mode::EnsembleWithSubsample;
    }
    throw ConfigError("unknown experiment mode '" + name + "'");
}

void ExperimentConfig::validate() const {
    if (k < 1) {
        throw ConfigError("experiment config: k must be >= 1");
    }
    if (mode == Mode::NonEnsemble && k != 1) {
        throw ConfigError("experiment config: non-ensemble mode forces k = 1");
    }
    if (mode == Mode::EnsembleWithSubsample && m < 1) {
        throw ConfigError("experiment config: subsampling mode needs m >= 1");
    }
    if (num_iterations < 0) {
        throw ConfigError("experiment config: iterations must be >= 0");
    }
    if (static_cast<int>(model_specs.size()) != k) {
        throw ConfigError("experiment config: need exactly k model specs");
    }
    if (!seed_slots.empty() && static_cast<int>(seed_slots.size()) != k) {
        throw ConfigError("experiment config: seed_slots must match k");
    }
    for (const ModelSpec& spec : model_specs) {
        spec.validate();
    }
    train_config.validate();
    if (augment) {
        augment->validate();
    }
}

std::vector<ModelSpec> default_member_specs(int input_dim, int num_classes) {
    ModelSpec linear{ModelKind::SoftmaxLinear, {}, Activation::ReLU, input_dim,
                     num_classes, 0};
    ModelSpec small{ModelKind::Mlp, {64}, Activation::ReLU, input_dim, num_classes, 1};
    ModelSpec wide{ModelKind::Mlp, {128, 64}, Activation::ReLU, input_dim, num_classes, 2};
    return {linear, small, wide};
}

namespace {

constexpr std::uint64_t kSubsampleTag = 0x53;
constexpr std::uint64_t kInitTag = 0x49;
constexpr std::uint64_t kShuffleTag = 0x45;

int member_slot(const ExperimentConfig& config, int member) {
    return config.seed_slots.empty() ? member : config.seed_slots[member];
}

std::vector<TrainedModel> train_members(const PoolState& state,
                                        const ExperimentConfig& config,
                                        std::uint64_t iteration_seed) {
    const int k = config.k;
    std::vector<Dataset> samples;
    if (config.mode == Mode::EnsembleWithSubsample) {
        samples = subsample(state.labeled, config.m, static_cast<std::size_t>(k),
                            derive_seed({iteration_seed, kSubsampleTag}));
    }

    std::vector<TrainedModel> models(k);
    parallel_for(static_cast<std::size_t>(k), [&](std::size_t begin, std::size_t end) {
        for (std::size_t j = begin; j < end; ++j) {
            const std::uint64_t member_seed = derive_seed(
                {iteration_seed, static_cast<std::uint64_t>(member_slot(config, j))});
            ModelSpec spec = config.model_specs[j];
            spec.init_seed = derive_seed({member_seed, kInitTag});
            TrainConfig train_config = config.train_config;
            train_config.shuffle_seed = derive_seed({member_seed, kShuffleTag});
            const Dataset& training_set =
                config.mode == Mode::EnsembleWithSubsample ? samples[j] : state.labeled;
            models[j] = train(spec, training_set, train_config, config.augment);
        }
    });
    return models;
}

std::vector<EnsemblePrediction> predict_pool(const std::vector<TrainedModel>& models,
                                             const Dataset& pool) {
    std::vector<std::vector<ProbVector>> member_probs(models.size());
    for (std::size_t j = 0; j < models.size(); ++j) {
        member_probs[j] = predict_dataset(models[j], pool);
    }
    std::vector<EnsemblePrediction> preds(pool.size());
    parallel_for(pool.size(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            std::vector<ProbVector> members(models.size());
            for (std::size_t j = 0; j < models.size(); ++j) {
                members[j] = member_probs[j][i];
            }
            preds[i] = make_ensemble_prediction(pool[i].origin_id, std::move(members));
        }
    });
    return preds;
}

}  // namespace

IterationOutcome run_iteration(const PoolState& state, const ExperimentConfig& config,
                               const Dataset& test, std::uint64_t iteration_seed,
                               const HiddenLabels* hidden) {
    config.validate();
    if (state.labeled.empty()) {
        throw DataError("empty labeled pool");
    }
    if (test.empty()) {
        throw std::invalid_argument("run_iteration: empty test set");
    }
    for (const Example& example : test) {
        if (!example.label) {
            throw std::invalid_argument("run_iteration: unlabeled test example");
        }
    }

    IterationOutcome outcome;
    outcome.result.iteration = state.iteration;
    outcome.result.labeled_size = state.labeled.size();

    try {
        outcome.models = train_members(state, config, iteration_seed);
    } catch (const TrainingDivergence& e) {
        throw TrainingDivergence("iteration " + std::to_string(state.iteration) + ": " +
                                 e.what());
    }

    // Test metrics for each member and for the ensemble mean.
    std::vector<int> test_labels(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        test_labels[i] = *test[i].label;
    }
    std::vector<std::vector<ProbVector>> member_test(outcome.models.size());
    for (std::size_t j = 0; j < outcome.models.size(); ++j) {
        member_test[j] = predict_dataset(outcome.models[j], test);
        outcome.result.per_model.push_back(evaluate(member_test[j], test_labels));
    }
    std::vector<ProbVector> ensemble_test(test.size());
    parallel_for(test.size(), [&](std::size_t begin, std::size_t end) {
        std::vector<ProbVector> members(outcome.models.size());
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t j = 0; j < outcome.models.size(); ++j) {
                members[j] = member_test[j][i];
            }
            ensemble_test[i] = ensemble_average(members);
        }
    });
    outcome.result.ensemble = evaluate(ensemble_test, test_labels);

    // Ensemble predictions over the remaining pool.
    outcome.trace.pool_predictions = predict_pool(outcome.models, state.unlabeled);

    // Previously assigned pseudo-labels go through the latest ensemble again.
    Dataset pseudo_subset(state.labeled.feature_dim(), state.labeled.num_classes());
    for (const Example& example : state.labeled) {
        if (example.provenance && example.provenance->is_pseudo()) {
            pseudo_subset.add(make_unlabeled(example.features, example.origin_id));
        }
    }
    PoolState refreshed = state;
    if (!pseudo_subset.empty()) {
        const std::vector<EnsemblePrediction> pseudo_preds =
            predict_pool(outcome.models, pseudo_subset);
        std::unordered_map<std::int64_t, int> new_labels;
        new_labels.reserve(pseudo_preds.size());
        for (const EnsemblePrediction& pred : pseudo_preds) {
            const int label = pseudo_label(pred.mean_probs);
            new_labels.emplace(pred.example_id, label);
            outcome.trace.refreshed_labels.emplace_back(pred.example_id, label);
        }
        refreshed = refresh_pseudo_labels(state, new_labels);
    }

    // Entropy-ranked selection and hard pseudo-label assignment.
    outcome.trace.selected_ids =
        select_lowest_entropy(outcome.trace.pool_predictions, config.p);
    std::unordered_map<std::int64_t, std::size_t> pool_index;
    pool_index.reserve(outcome.trace.pool_predictions.size());
    for (std::size_t i = 0; i < outcome.trace.pool_predictions.size(); ++i) {
        pool_index.emplace(outcome.trace.pool_predictions[i].example_id, i);
    }
    outcome.trace.assigned_labels.reserve(outcome.trace.selected_ids.size());
    for (const std::int64_t id : outcome.trace.selected_ids) {
        const EnsemblePrediction& pred =
            outcome.trace.pool_predictions[pool_index.at(id)];
        outcome.trace.assigned_labels.push_back(pseudo_label(pred.mean_probs));
    }

    outcome.next_state =
        merge_pseudo(refreshed, outcome.trace.selected_ids, outcome.trace.assigned_labels);

    outcome.result.selected_count = outcome.trace.selected_ids.size();
    outcome.result.pool_remaining = outcome.next_state.unlabeled.size();

    if (hidden && !outcome.trace.selected_ids.empty()) {
        const int c = state.labeled.num_classes();
        std::size_t correct = 0;
        std::size_t ood = 0;
        for (std::size_t i = 0; i < outcome.trace.selected_ids.size(); ++i) {
            const auto it = hidden->find(outcome.trace.selected_ids[i]);
            if (it == hidden->end()) {
                continue;
            }
            if (it->second >= c) {
                ++ood;
            } else if (it->second == outcome.trace.assigned_labels[i]) {
                ++correct;
            }
        }
        const double n = static_cast<double>(outcome.trace.selected_ids.size());
        outcome.result.pseudo_label_precision = static_cast<double>(correct) / n;
        outcome.result.selected_ood_fraction = static_cast<double>(ood) / n;
    }
    return outcome;
}

std::vector<IterationResult> run_experiment(const Dataset& labeled, const Dataset& unlabeled,
                                            const Dataset& test,
                                            const ExperimentConfig& config,
                                            const HiddenLabels* hidden,
                                            const IterationObserver& observer) {
    config.validate();
    for (const ModelSpec& spec : config.model_specs) {
        if (spec.input_dim != labeled.feature_dim()) {
            throw std::invalid_argument("run_experiment: model input_dim does not match data");
        }
        if (spec.num_classes != labeled.num_classes()) {
            throw std::invalid_argument("run_experiment: model num_classes does not match data");
        }
    }
    if (!test.empty() && test.feature_dim() != labeled.feature_dim()) {
        throw std::invalid_argument("run_experiment: test feature dimension mismatch");
    }

    PoolState state = make_pool(labeled, unlabeled);
    std::vector<IterationResult> results;
    results.reserve(config.num_iterations + 1);
    for (int i = 0; i <= config.num_iterations; ++i) {
        IterationOutcome outcome = run_iteration(
            state, config, test, derive_seed({config.seed, static_cast<std::uint64_t>(i)}),
            hidden);
        results.push_back(outcome.result);
        if (observer) {
            observer(outcome.result, outcome.trace);
        }
        state = std::move(outcome.next_state);
    }
    return results;
}

std::vector<ExperimentRun> matrix_layout(const ExperimentConfig& base_config) {
    std::vector<ExperimentRun> runs;
    for (int j = 0; j < base_config.k; ++j) {
        ExperimentRun run;
        run.mode = Mode::NonEnsemble;
        run.model_names = {base_config.model_specs[j].name()};
        run.label = mode_name(Mode::NonEnsemble) + "_" + run.model_names.front();
        run.has_ensemble_row = false;
        runs.push_back(std::move(run));
    }
    for (const Mode mode : {Mode::EnsembleNoSubsample, Mode::EnsembleWithSubsample}) {
        ExperimentRun run;
        run.mode = mode;
        run.label = mode_name(mode);
        for (const ModelSpec& spec : base_config.model_specs) {
            run.model_names.push_back(spec.name());
        }
        run.has_ensemble_row = true;
        runs.push_back(std::move(run));
    }
    return runs;
}

ExperimentMatrix compare_modes(const Dataset& labeled, const Dataset& unlabeled,
                               const Dataset& test, const ExperimentConfig& base_config,
                               const HiddenLabels* hidden, const MatrixObserver& observer) {
    base_config.validate();
    if (base_config.mode != Mode::EnsembleWithSubsample) {
        throw ConfigError("compare_modes: base config must describe the full "
                          "subsampling ensemble");
    }

    ExperimentMatrix matrix;
    matrix.runs = matrix_layout(base_config);
    std::size_t slot = 0;

    const auto execute = [&](const ExperimentConfig& config) {
        ExperimentRun& run = matrix.runs[slot];
        const IterationObserver forward =
            observer ? IterationObserver([&](const IterationResult& result,
                                             const IterationTrace& trace) {
                observer(run, result, trace);
            })
                     : IterationObserver{};
        run.iterations = run_experiment(labeled, unlabeled, test, config, hidden, forward);
        ++slot;
    };

    // Experiment 1: conventional self-training, one teacher per architecture.
    for (int j = 0; j < base_config.k; ++j) {
        ExperimentConfig config = base_config;
        config.mode = Mode::NonEnsemble;
        config.k = 1;
        config.model_specs = {base_config.model_specs[j]};
        config.seed_slots = {j};
        execute(config);
    }
    // Experiment 2: ensemble trained on the full labeled set each iteration.
    {
        ExperimentConfig config = base_config;
        config.mode = Mode::EnsembleNoSubsample;
        execute(config);
    }
    // Experiment 3: ensemble over bootstrap subsamples.
    execute(base_config);

    return matrix;
}

}  // namespace selftrain
