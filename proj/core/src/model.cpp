#include "selftrain/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "selftrain/errors.hpp"
#include "selftrain/parallel.hpp"
#include "selftrain/rng.hpp"

namespace selftrain {

void ProbVector::validate() const {
    double sum = 0.0;
    for (const double p : probs) {
        if (!(p >= 0.0)) {
            throw std::invalid_argument("ProbVector: negative or NaN entry");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument("ProbVector: entries do not sum to 1");
    }
}

int argmax_lowest(std::span<const double> values) {
    if (values.empty()) {
        throw std::invalid_argument("argmax of empty vector");
    }
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

void ModelSpec::validate() const {
    if (input_dim < 1 || num_classes < 1) {
        throw std::invalid_argument("ModelSpec: input_dim and num_classes must be >= 1");
    }
    for (const int size : hidden_sizes) {
        if (size < 1) {
            throw std::invalid_argument("ModelSpec: hidden sizes must be >= 1");
        }
    }
    if (kind == ModelKind::SoftmaxLinear && !hidden_sizes.empty()) {
        throw std::invalid_argument("ModelSpec: softmax-linear takes no hidden sizes");
    }
}

std::vector<int> ModelSpec::layer_sizes() const {
    std::vector<int> sizes;
    sizes.reserve(hidden_sizes.size() + 2);
    sizes.push_back(input_dim);
    if (kind == ModelKind::Mlp) {
        sizes.insert(sizes.end(), hidden_sizes.begin(), hidden_sizes.end());
    }
    sizes.push_back(num_classes);
    return sizes;
}

std::size_t ModelSpec::parameter_count() const {
    const std::vector<int> sizes = layer_sizes();
    std::size_t count = 0;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
        count += static_cast<std::size_t>(sizes[l - 1] + 1) * sizes[l];
    }
    return count;
}

std::string ModelSpec::name() const {
    if (kind == ModelKind::SoftmaxLinear) {
        return "softmax_linear";
    }
    std::string name = "mlp";
    for (const int size : hidden_sizes) {
        name += "_" + std::to_string(size);
    }
    if (activation == Activation::Tanh) {
        name += "_tanh";
    }
    return name;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    }
    if (batch_size < 1) {
        throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    }
    if (epochs < 0) {
        throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    }
    if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0) {
        throw std::invalid_argument("TrainConfig: betas must be in (0,1)");
    }
    if (!(adam_epsilon > 0.0)) {
        throw std::invalid_argument("TrainConfig: adam_epsilon must be > 0");
    }
    if (weight_decay < 0.0) {
        throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
    }
}

ProbVector softmax(std::span<const double> logits) {
    if (logits.empty()) {
        throw std::invalid_argument("softmax of empty vector");
    }
    double max_logit = logits[0];
    for (const double z : logits) {
        if (!std::isfinite(z)) {
            throw std::invalid_argument("non-finite logits");
        }
        max_logit = std::max(max_logit, z);
    }
    ProbVector out;
    out.probs.resize(logits.size());
    double sum = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        out.probs[j] = std::exp(logits[j] - max_logit);
        sum += out.probs[j];
    }
    for (double& p : out.probs) {
        p /= sum;
    }
    return out;
}

double cross_entropy(const ProbVector& pred, int target_class) {
    if (target_class < 0 || target_class >= static_cast<int>(pred.size())) {
        throw std::invalid_argument("cross_entropy: target class out of range");
    }
    return -std::log(std::max(pred[static_cast<std::size_t>(target_class)], 1e-12));
}

// ------------------------------------------------------------- internals

namespace {

struct LayerView {
    std::size_t w_offset;
    std::size_t b_offset;
    int in;
    int out;
};

std::vector<LayerView> layer_views(const ModelSpec& spec) {
    const std::vector<int> sizes = spec.layer_sizes();
    std::vector<LayerView> views;
    views.reserve(sizes.size() - 1);
    std::size_t offset = 0;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
        LayerView view;
        view.in = sizes[l - 1];
        view.out = sizes[l];
        view.w_offset = offset;
        offset += static_cast<std::size_t>(view.in) * view.out;
        view.b_offset = offset;
        offset += static_cast<std::size_t>(view.out);
        views.push_back(view);
    }
    return views;
}

// Per-layer activation buffers reused across examples.
struct Workspace {
    std::vector<std::vector<double>> acts;    // acts[l] = output of layer l
    std::vector<std::vector<double>> deltas;  // matching error signals

    explicit Workspace(const std::vector<LayerView>& views) {
        acts.resize(views.size());
        deltas.resize(views.size());
        for (std::size_t l = 0; l < views.size(); ++l) {
            acts[l].resize(views[l].out);
            deltas[l].resize(views[l].out);
        }
    }
};

void forward(const std::vector<double>& params, const std::vector<LayerView>& views,
             Activation activation, std::span<const double> x, Workspace& ws) {
    std::span<const double> input = x;
    for (std::size_t l = 0; l < views.size(); ++l) {
        const LayerView& view = views[l];
        const double* w = params.data() + view.w_offset;
        const double* b = params.data() + view.b_offset;
        std::vector<double>& out = ws.acts[l];
        for (int o = 0; o < view.out; ++o) {
            const double* row = w + static_cast<std::size_t>(o) * view.in;
            double z = b[o];
            for (int i = 0; i < view.in; ++i) {
                z += row[i] * input[i];
            }
            out[o] = z;
        }
        const bool is_last = l + 1 == views.size();
        if (!is_last) {
            if (activation == Activation::ReLU) {
                for (double& a : out) {
                    a = a > 0.0 ? a : 0.0;
                }
            } else {
                for (double& a : out) {
                    a = std::tanh(a);
                }
            }
        }
        input = out;
    }
}

/// Forward + backward for one example; accumulates into grad and returns
/// the example's loss. grad has the same layout as params.
double backward(const std::vector<double>& params, const std::vector<LayerView>& views,
                Activation activation, std::span<const double> x, int label,
                Workspace& ws, std::vector<double>& grad) {
    forward(params, views, activation, x, ws);
    const std::size_t last = views.size() - 1;
    const ProbVector probs = softmax(ws.acts[last]);
    const double loss = cross_entropy(probs, label);

    // Fused softmax + cross-entropy: dL/dlogit = p - onehot.
    std::vector<double>& delta_out = ws.deltas[last];
    for (std::size_t j = 0; j < probs.size(); ++j) {
        delta_out[j] = probs[j];
    }
    delta_out[static_cast<std::size_t>(label)] -= 1.0;

    for (std::size_t l = views.size(); l-- > 0;) {
        const LayerView& view = views[l];
        const std::vector<double>& delta = ws.deltas[l];
        const std::span<const double> prev_act =
            l == 0 ? x : std::span<const double>(ws.acts[l - 1]);

        double* gw = grad.data() + view.w_offset;
        double* gb = grad.data() + view.b_offset;
        for (int o = 0; o < view.out; ++o) {
            const double d = delta[o];
            double* grow = gw + static_cast<std::size_t>(o) * view.in;
            for (int i = 0; i < view.in; ++i) {
                grow[i] += d * prev_act[i];
            }
            gb[o] += d;
        }

        if (l == 0) {
            break;
        }
        const double* w = params.data() + view.w_offset;
        std::vector<double>& delta_prev = ws.deltas[l - 1];
        std::fill(delta_prev.begin(), delta_prev.end(), 0.0);
        for (int o = 0; o < view.out; ++o) {
            const double d = delta[o];
            const double* row = w + static_cast<std::size_t>(o) * view.in;
            for (int i = 0; i < view.in; ++i) {
                delta_prev[i] += row[i] * d;
            }
        }
        const std::vector<double>& act = ws.acts[l - 1];
        if (activation == Activation::ReLU) {
            for (int i = 0; i < view.in; ++i) {
                if (act[i] <= 0.0) {
                    delta_prev[i] = 0.0;
                }
            }
        } else {
            for (int i = 0; i < view.in; ++i) {
                delta_prev[i] *= 1.0 - act[i] * act[i];
            }
        }
    }
    return loss;
}

void check_training_data(const ModelSpec& spec, const Dataset& data) {
    if (data.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (data.feature_dim() != spec.input_dim) {
        throw std::invalid_argument("train: feature dimension mismatch");
    }
    for (const Example& example : data) {
        if (!example.label) {
            throw std::invalid_argument("train: unlabeled example in training set");
        }
        if (*example.label >= spec.num_classes) {
            throw std::invalid_argument("train: label outside model classes");
        }
    }
}

}  // namespace

TrainedModel init_model(const ModelSpec& spec) {
    spec.validate();
    TrainedModel model;
    model.spec = spec;
    model.parameters.assign(spec.parameter_count(), 0.0);

    const bool he_style = spec.kind == ModelKind::Mlp && spec.activation == Activation::ReLU;
    Rng rng(spec.init_seed);
    for (const LayerView& view : layer_views(spec)) {
        const double bound = he_style
                                 ? std::sqrt(2.0 / view.in)
                                 : std::sqrt(6.0 / (view.in + view.out));
        double* w = model.parameters.data() + view.w_offset;
        const std::size_t n = static_cast<std::size_t>(view.in) * view.out;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = rng.uniform(-bound, bound);
        }
        // biases stay zero
    }
    return model;
}

TrainedModel train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config,
                   const std::optional<AugmentSpec>& augment_spec) {
    config.validate();
    check_training_data(spec, data);

    TrainedModel model = init_model(spec);
    const std::vector<LayerView> views = layer_views(spec);
    Workspace ws(views);

    const std::size_t n_params = model.parameters.size();
    std::vector<double> grad(n_params);
    std::vector<double> adam_m(n_params, 0.0);
    std::vector<double> adam_v(n_params, 0.0);
    long adam_t = 0;

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed({config.shuffle_seed, 0x5au, static_cast<std::uint64_t>(epoch)}));
        Rng augment_rng(derive_seed({config.shuffle_seed, 0xa6u, static_cast<std::uint64_t>(epoch)}));
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(),
                                             start + static_cast<std::size_t>(config.batch_size));
            const double batch_n = static_cast<double>(end - start);

            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            try {
                for (std::size_t i = start; i < end; ++i) {
                    const Example& example = data[order[i]];
                    if (augment_spec) {
                        const Example augmented =
                            augment(example, *augment_spec, augment_rng);
                        batch_loss += backward(model.parameters, views, spec.activation,
                                               augmented.features, *example.label, ws,
                                               grad);
                    } else {
                        batch_loss += backward(model.parameters, views, spec.activation,
                                               example.features, *example.label, ws,
                                               grad);
                    }
                }
            } catch (const std::invalid_argument&) {
                // Inputs were validated up front, so a throw here means the
                // forward pass produced non-finite logits.
                throw TrainingDivergence("training diverged at epoch " +
                                         std::to_string(epoch));
            }
            batch_loss /= batch_n;
            if (!std::isfinite(batch_loss)) {
                throw TrainingDivergence("training diverged at epoch " +
                                         std::to_string(epoch));
            }
            epoch_loss += batch_loss * batch_n;

            for (double& g : grad) {
                g /= batch_n;
            }
            if (config.weight_decay > 0.0) {
                for (const LayerView& view : views) {
                    double* g = grad.data() + view.w_offset;
                    const double* w = model.parameters.data() + view.w_offset;
                    const std::size_t count = static_cast<std::size_t>(view.in) * view.out;
                    for (std::size_t i = 0; i < count; ++i) {
                        g[i] += config.weight_decay * w[i];
                    }
                }
            }

            ++adam_t;
            const double bias1 = 1.0 - std::pow(config.adam_beta1, adam_t);
            const double bias2 = 1.0 - std::pow(config.adam_beta2, adam_t);
            for (std::size_t i = 0; i < n_params; ++i) {
                adam_m[i] = config.adam_beta1 * adam_m[i] + (1.0 - config.adam_beta1) * grad[i];
                adam_v[i] = config.adam_beta2 * adam_v[i] +
                            (1.0 - config.adam_beta2) * grad[i] * grad[i];
                const double m_hat = adam_m[i] / bias1;
                const double v_hat = adam_v[i] / bias2;
                model.parameters[i] -=
                    config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
            }
        }
        model.train_log.emplace_back(epoch, epoch_loss / static_cast<double>(data.size()));
    }
    return model;
}

ProbVector predict(const TrainedModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.spec.input_dim) {
        throw std::invalid_argument("predict: feature dimension mismatch");
    }
    if (model.parameters.size() != model.spec.parameter_count()) {
        throw std::invalid_argument("predict: parameter count does not match spec");
    }
    const std::vector<LayerView> views = layer_views(model.spec);
    Workspace ws(views);
    forward(model.parameters, views, model.spec.activation, x, ws);
    return softmax(ws.acts.back());
}

int predict_class(const TrainedModel& model, std::span<const double> x) {
    return argmax_lowest(predict(model, x).probs);
}

std::vector<ProbVector> predict_dataset(const TrainedModel& model, const Dataset& data) {
    if (data.feature_dim() != model.spec.input_dim) {
        throw std::invalid_argument("predict_dataset: feature dimension mismatch");
    }
    if (model.parameters.size() != model.spec.parameter_count()) {
        throw std::invalid_argument("predict_dataset: parameter count does not match spec");
    }
    const std::vector<LayerView> views = layer_views(model.spec);
    std::vector<ProbVector> out(data.size());
    parallel_for(data.size(), [&](std::size_t begin, std::size_t end) {
        Workspace ws(views);
        for (std::size_t i = begin; i < end; ++i) {
            forward(model.parameters, views, model.spec.activation, data[i].features, ws);
            out[i] = softmax(ws.acts.back());
        }
    });
    return out;
}

double mean_loss(const TrainedModel& model, const Dataset& data) {
    check_training_data(model.spec, data);
    const std::vector<LayerView> views = layer_views(model.spec);
    Workspace ws(views);
    double total = 0.0;
    for (const Example& example : data) {
        forward(model.parameters, views, model.spec.activation, example.features, ws);
        total += cross_entropy(softmax(ws.acts.back()), *example.label);
    }
    return total / static_cast<double>(data.size());
}

std::vector<double> mean_loss_gradient(const TrainedModel& model, const Dataset& data) {
    check_training_data(model.spec, data);
    const std::vector<LayerView> views = layer_views(model.spec);
    Workspace ws(views);
    std::vector<double> grad(model.parameters.size(), 0.0);
    for (const Example& example : data) {
        backward(model.parameters, views, model.spec.activation, example.features,
                 *example.label, ws, grad);
    }
    for (double& g : grad) {
        g /= static_cast<double>(data.size());
    }
    return grad;
}

double gradient_check(const ModelSpec& spec, const Dataset& data) {
    constexpr double kStep = 1e-5;
    TrainedModel model = init_model(spec);
    const std::vector<double> analytic = mean_loss_gradient(model, data);

    double max_error = 0.0;
    for (std::size_t i = 0; i < model.parameters.size(); ++i) {
        const double saved = model.parameters[i];
        model.parameters[i] = saved + kStep;
        const double loss_plus = mean_loss(model, data);
        model.parameters[i] = saved - kStep;
        const double loss_minus = mean_loss(model, data);
        model.parameters[i] = saved;

        const double numeric = (loss_plus - loss_minus) / (2.0 * kStep);
        const double denom = std::max(1.0, std::abs(analytic[i]) + std::abs(numeric));
        max_error = std::max(max_error, std::abs(analytic[i] - numeric) / denom);
    }
    return max_error;
}

// ------------------------------------------------------------ checkpoint

namespace {

nlohmann::json spec_to_json(const ModelSpec& spec) {
    return nlohmann::json{
        {"kind", spec.kind == ModelKind::SoftmaxLinear ? "softmax_linear" : "mlp"},
        {"hidden_sizes", spec.hidden_sizes},
        {"activation", spec.activation == Activation::ReLU ? "relu" : "tanh"},
        {"input_dim", spec.input_dim},
        {"num_classes", spec.num_classes},
        {"init_seed", spec.init_seed},
    };
}

ModelSpec spec_from_json(const nlohmann::json& j) {
    ModelSpec spec;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "softmax_linear") {
        spec.kind = ModelKind::SoftmaxLinear;
    } else if (kind == "mlp") {
        spec.kind = ModelKind::Mlp;
    } else {
        throw DataError("model checkpoint: unknown kind '" + kind + "'");
    }
    spec.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
    const std::string activation = j.at("activation").get<std::string>();
    if (activation == "relu") {
        spec.activation = Activation::ReLU;
    } else if (activation == "tanh") {
        spec.activation = Activation::Tanh;
    } else {
        throw DataError("model checkpoint: unknown activation '" + activation + "'");
    }
    spec.input_dim = j.at("input_dim").get<int>();
    spec.num_classes = j.at("num_classes").get<int>();
    spec.init_seed = j.at("init_seed").get<std::uint64_t>();
    return spec;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
    nlohmann::json j{
        {"schema", 1},
        {"spec", spec_to_json(model.spec)},
        {"parameters", model.parameters},
        {"train_log", model.train_log},
    };
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot open file for writing: " + path);
    }
    out << j.dump() << '\n';
    if (!out) {
        throw DataError("write failed: " + path);
    }
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open file: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model checkpoint parse error: " + std::string(e.what()));
    }
    try {
        if (j.at("schema").get<int>() != 1) {
            throw DataError("model checkpoint: unsupported schema");
        }
        TrainedModel model;
        model.spec = spec_from_json(j.at("spec"));
        model.parameters = j.at("parameters").get<std::vector<double>>();
        model.train_log = j.at("train_log").get<std::vector<std::pair<int, double>>>();
        if (model.parameters.size() != model.spec.parameter_count()) {
            throw DataError("model checkpoint: parameter count mismatch");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model checkpoint field error: " + std::string(e.what()));
    }
}

}  // namespace selftrain
