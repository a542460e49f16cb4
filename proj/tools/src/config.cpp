#include "selftrain/cli/config.hpp"

#include <cstdio>
#include <fstream>

#include "selftrain/errors.hpp"

namespace selftrain::cli {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) {
    throw ConfigError(message);
}

const json& require(const json& parent, const char* key, const std::string& where) {
    const auto it = parent.find(key);
    if (it == parent.end()) {
        fail("config: missing required field '" + where + key + "'");
    }
    return *it;
}

template <typename T>
T get_or(const json& parent, const char* key, T fallback) {
    const auto it = parent.find(key);
    if (it == parent.end()) {
        return fallback;
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        fail(std::string("config: field '") + key + "' has the wrong type");
    }
}

template <typename T>
T get_required(const json& parent, const char* key, const std::string& where) {
    const json& value = require(parent, key, where);
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        fail("config: field '" + where + key + "' has the wrong type");
    }
}

SyntheticSpec parse_synthetic(const json& j) {
    SyntheticSpec spec;
    spec.num_classes = get_or(j, "num_classes", spec.num_classes);
    spec.feature_dim = get_or(j, "feature_dim", spec.feature_dim);
    spec.n_labeled = get_or(j, "n_labeled", spec.n_labeled);
    spec.n_unlabeled = get_or(j, "n_unlabeled", spec.n_unlabeled);
    spec.n_test = get_or(j, "n_test", spec.n_test);
    spec.class_separation = get_or(j, "class_separation", spec.class_separation);
    spec.ood_fraction = get_or(j, "ood_fraction", spec.ood_fraction);
    spec.seed = get_or(j, "seed", spec.seed);
    spec.validate();
    return spec;
}

CsvSource parse_csv_source(const json& j) {
    CsvSource source;
    source.labeled = get_required<std::string>(j, "labeled", "data.csv.");
    source.unlabeled = get_required<std::string>(j, "unlabeled", "data.csv.");
    source.test = get_required<std::string>(j, "test", "data.csv.");
    if (j.contains("hidden_labels")) {
        source.hidden_labels = get_required<std::string>(j, "hidden_labels", "data.csv.");
    }
    return source;
}

Stl10Source parse_stl10_source(const json& j) {
    Stl10Source source;
    source.train_images = get_required<std::string>(j, "train_images", "data.stl10.");
    source.train_labels = get_required<std::string>(j, "train_labels", "data.stl10.");
    source.test_images = get_required<std::string>(j, "test_images", "data.stl10.");
    source.test_labels = get_required<std::string>(j, "test_labels", "data.stl10.");
    if (j.contains("unlabeled_images")) {
        source.unlabeled_images =
            get_required<std::string>(j, "unlabeled_images", "data.stl10.");
    }
    return source;
}

ModelBlueprint parse_model(const json& j) {
    ModelBlueprint blueprint;
    const std::string kind = get_required<std::string>(j, "kind", "experiment.models[].");
    if (kind == "softmax_linear") {
        blueprint.kind = ModelKind::SoftmaxLinear;
    } else if (kind == "mlp") {
        blueprint.kind = ModelKind::Mlp;
        blueprint.hidden_sizes = get_or(j, "hidden_sizes", std::vector<int>{});
        if (blueprint.hidden_sizes.empty()) {
            fail("config: mlp model needs non-empty hidden_sizes");
        }
    } else {
        fail("config: unknown model kind '" + kind + "'");
    }
    const std::string activation = get_or<std::string>(j, "activation", "relu");
    if (activation == "relu") {
        blueprint.activation = Activation::ReLU;
    } else if (activation == "tanh") {
        blueprint.activation = Activation::Tanh;
    } else {
        fail("config: unknown activation '" + activation + "'");
    }
    return blueprint;
}

TrainConfig parse_train(const json& j) {
    TrainConfig config;
    config.learning_rate = get_or(j, "learning_rate", config.learning_rate);
    config.batch_size = get_or(j, "batch_size", config.batch_size);
    config.epochs = get_or(j, "epochs", 20);
    config.adam_beta1 = get_or(j, "adam_beta1", config.adam_beta1);
    config.adam_beta2 = get_or(j, "adam_beta2", config.adam_beta2);
    config.adam_epsilon = get_or(j, "adam_epsilon", config.adam_epsilon);
    config.weight_decay = get_or(j, "weight_decay", config.weight_decay);
    config.validate();
    return config;
}

AugmentSpec parse_augment(const json& j) {
    AugmentSpec spec;
    spec.p_hflip = get_or(j, "p_hflip", spec.p_hflip);
    spec.p_vflip = get_or(j, "p_vflip", spec.p_vflip);
    spec.max_shift_frac = get_or(j, "max_shift_frac", spec.max_shift_frac);
    const auto shape = get_required<std::vector<int>>(j, "image_shape",
                                                      "experiment.augment.");
    if (shape.size() != 3) {
        fail("config: augment image_shape must be [height, width, channels]");
    }
    spec.height = shape[0];
    spec.width = shape[1];
    spec.channels = shape[2];
    spec.validate();
    return spec;
}

ExperimentSettings parse_experiment(const json& j) {
    ExperimentSettings settings;
    const std::string mode = get_or<std::string>(j, "mode", "all");
    if (mode == "all") {
        settings.all_modes = true;
    } else {
        settings.all_modes = false;
        settings.mode = mode_from_name(mode);
    }
    settings.k = get_or(j, "k", settings.k);
    settings.m = get_or(j, "m", settings.m);
    settings.p = get_or(j, "p", settings.p);
    settings.iterations = get_or(j, "iterations", settings.iterations);
    settings.seed = get_or(j, "seed", settings.seed);
    if (j.contains("models")) {
        const json& models = require(j, "models", "experiment.");
        if (!models.is_array() || models.empty()) {
            fail("config: experiment.models must be a non-empty array");
        }
        for (const json& model : models) {
            settings.models.push_back(parse_model(model));
        }
    }
    settings.train = j.contains("train") ? parse_train(j.at("train")) : parse_train(json::object());
    if (j.contains("augment")) {
        settings.augment = parse_augment(j.at("augment"));
    }
    if (settings.k < 1) {
        fail("config: experiment.k must be >= 1");
    }
    if (!settings.models.empty() &&
        static_cast<int>(settings.models.size()) != settings.k) {
        fail("config: experiment.models must list exactly k entries");
    }
    if (settings.models.empty() && settings.k != 3) {
        fail("config: default model committee has k = 3; list models explicitly "
             "for other k");
    }
    return settings;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail("cannot open config file: " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail("config parse error: " + std::string(e.what()));
    }

    if (get_required<int>(j, "schema", "") != 1) {
        fail("config: unsupported schema version");
    }

    RunConfig config;
    config.raw = j;

    const json& data = require(j, "data", "");
    const int sources = static_cast<int>(data.contains("synthetic")) +
                        static_cast<int>(data.contains("csv")) +
                        static_cast<int>(data.contains("stl10"));
    if (sources != 1) {
        fail("config: data must name exactly one source (synthetic, csv or stl10)");
    }
    if (data.contains("synthetic")) {
        config.data = parse_synthetic(data.at("synthetic"));
    } else if (data.contains("csv")) {
        config.data = parse_csv_source(data.at("csv"));
    } else {
        config.data = parse_stl10_source(data.at("stl10"));
    }

    config.experiment = parse_experiment(require(j, "experiment", ""));

    const json output = get_or(j, "output", json::object());
    config.out_dir = get_or<std::string>(output, "dir", "out");
    if (output.contains("formats")) {
        const auto formats = get_required<std::vector<std::string>>(output, "formats",
                                                                    "output.");
        config.write_text = false;
        config.write_csv = false;
        for (const std::string& format : formats) {
            if (format == "text") {
                config.write_text = true;
            } else if (format == "csv") {
                config.write_csv = true;
            } else {
                fail("config: unknown report format '" + format + "'");
            }
        }
    }
    return config;
}

ExperimentConfig materialize_experiment(const ExperimentSettings& settings, int feature_dim,
                                        int num_classes) {
    ExperimentConfig config;
    config.mode = settings.all_modes ? Mode::EnsembleWithSubsample : settings.mode;
    config.k = settings.k;
    config.m = settings.m;
    config.p = settings.p;
    config.num_iterations = settings.iterations;
    config.train_config = settings.train;
    config.augment = settings.augment;
    config.seed = settings.seed;

    if (settings.models.empty()) {
        config.model_specs = default_member_specs(feature_dim, num_classes);
    } else {
        for (std::size_t j = 0; j < settings.models.size(); ++j) {
            const ModelBlueprint& blueprint = settings.models[j];
            config.model_specs.push_back(ModelSpec{blueprint.kind, blueprint.hidden_sizes,
                                                   blueprint.activation, feature_dim,
                                                   num_classes, j});
        }
    }

    if (!settings.all_modes && config.mode == Mode::NonEnsemble) {
        config.k = 1;
        config.model_specs.resize(1);
    }
    return config;
}

std::string config_digest(const nlohmann::json& config) {
    const std::string dump = config.dump();
    std::uint64_t hash = 1469598103934665603ULL;
    for (const unsigned char c : dump) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    char buffer[17];
    std::snprintf(buffer, sizeof(buffer), "%016llx",
                  static_cast<unsigned long long>(hash));
    return std::string(buffer);
}

}  // namespace selftrain::cli
