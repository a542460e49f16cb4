#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "selftrain/ingest.hpp"
#include "selftrain/pipeline.hpp"

namespace selftrain::cli {

struct CsvSource {
    std::string labeled;
    std::string unlabeled;
    std::string test;
    std::optional<std::string> hidden_labels;
};

struct Stl10Source {
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    std::optional<std::string> unlabeled_images;
};

using DataSource = std::variant<SyntheticSpec, CsvSource, Stl10Source>;

/// Model architecture as written in a config file; dimensions are filled
/// in once the data is known.
struct ModelBlueprint {
    ModelKind kind = ModelKind::SoftmaxLinear;
    std::vector<int> hidden_sizes;
    Activation activation = Activation::ReLU;
};

struct ExperimentSettings {
    bool all_modes = true;
    Mode mode = Mode::EnsembleWithSubsample;  // used when !all_modes
    int k = 3;
    std::size_t m = 0;
    std::size_t p = 0;
    int iterations = 0;
    std::vector<ModelBlueprint> models;  // empty = default committee
    TrainConfig train;
    std::optional<AugmentSpec> augment;
    std::uint64_t seed = 0;
};

struct RunConfig {
    DataSource data;
    ExperimentSettings experiment;
    std::string out_dir;
    bool write_text = true;
    bool write_csv = true;
    nlohmann::json raw;  // canonical form, used for the journal and digest
};

/// Parse and validate a config file. Throws ConfigError with the violated
/// field in the message.
RunConfig load_run_config(const std::string& path);

/// Instantiate the experiment config for concrete data dimensions.
ExperimentConfig materialize_experiment(const ExperimentSettings& settings, int feature_dim,
                                        int num_classes);

/// FNV-1a 64 over the canonical config dump, as a fixed-width hex string.
std::string config_digest(const nlohmann::json& config);

}  // namespace selftrain::cli
