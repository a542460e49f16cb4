#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "selftrain/data.hpp"
#include "selftrain/ingest.hpp"

namespace selftrain {

/// Point on the probability simplex over the class set.
struct ProbVector {
    std::vector<double> probs;

    std::size_t size() const { return probs.size(); }
    double operator[](std::size_t i) const { return probs[i]; }
    auto begin() const { return probs.begin(); }
    auto end() const { return probs.end(); }

    /// Throws unless entries are >= 0 and sum to 1 within 1e-6.
    void validate() const;
};

/// Argmax with ties broken toward the lowest index. The single prediction
/// convention used everywhere (class prediction and pseudo-labeling).
int argmax_lowest(std::span<const double> values);

enum class ModelKind { SoftmaxLinear, Mlp };
enum class Activation { ReLU, Tanh };

struct ModelSpec {
    ModelKind kind = ModelKind::SoftmaxLinear;
    std::vector<int> hidden_sizes;  // Mlp only
    Activation activation = Activation::ReLU;
    int input_dim = 0;
    int num_classes = 0;
    std::uint64_t init_seed = 0;

    void validate() const;
    /// [input_dim, hidden..., num_classes]
    std::vector<int> layer_sizes() const;
    std::size_t parameter_count() const;
    /// Stable display name, e.g. "softmax_linear", "mlp_128_64".
    std::string name() const;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 16;
    int epochs = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t shuffle_seed = 0;
    double weight_decay = 0.0;

    void validate() const;
};

struct TrainedModel {
    ModelSpec spec;
    std::vector<double> parameters;  // per layer: W row-major [out][in], then b
    std::vector<std::pair<int, double>> train_log;  // (epoch, mean loss)
};

/// Max-shifted softmax; stable for logit magnitudes up to ~1e4.
ProbVector softmax(std::span<const double> logits);

/// -log(pred[target]) with a 1e-12 clamp inside the log.
double cross_entropy(const ProbVector& pred, int target_class);

/// Fresh parameters from the spec's init_seed: uniform weights scaled
/// sqrt(2/fan_in) for ReLU nets, Glorot sqrt(6/(fan_in+fan_out)) for Tanh
/// and linear models; biases zero. Empty train_log.
TrainedModel init_model(const ModelSpec& spec);

/// Mini-batch Adam on the mean cross-entropy. Deterministic per-epoch
/// shuffling from shuffle_seed; with an AugmentSpec, every example is
/// re-augmented each epoch.
TrainedModel train(const ModelSpec& spec, const Dataset& data, const TrainConfig& config,
                   const std::optional<AugmentSpec>& augment_spec = std::nullopt);

ProbVector predict(const TrainedModel& model, std::span<const double> x);
int predict_class(const TrainedModel& model, std::span<const double> x);

/// predict() over every example, parallelized across worker threads.
/// Output order matches the dataset; identical for any thread count.
std::vector<ProbVector> predict_dataset(const TrainedModel& model, const Dataset& data);

/// Mean cross-entropy over a labeled dataset.
double mean_loss(const TrainedModel& model, const Dataset& data);
/// Analytic gradient of mean_loss with respect to every parameter.
std::vector<double> mean_loss_gradient(const TrainedModel& model, const Dataset& data);

/// Compare the analytic gradient against central finite differences
/// (step 1e-5) over all parameters of a freshly initialized model; returns
/// the maximum relative error (unit floor in the denominator so near-zero
/// components do not amplify rounding noise).
double gradient_check(const ModelSpec& spec, const Dataset& data);

/// Checkpoint round-trip; the written file restores the model bit-exactly.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace selftrain
