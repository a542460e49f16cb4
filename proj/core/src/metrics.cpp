#include "selftrain/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace selftrain {

double accuracy(std::span<const ProbVector> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) {
        throw std::invalid_argument("accuracy: predictions and labels differ in length");
    }
    if (predictions.empty()) {
        throw std::invalid_argument("accuracy: empty input");
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (argmax_lowest(predictions[i].probs) == labels[i]) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double avg_max_prob(std::span<const ProbVector> predictions) {
    if (predictions.empty()) {
        throw std::invalid_argument("avg_max_prob: empty input");
    }
    double total = 0.0;
    for (const ProbVector& pred : predictions) {
        total += *std::max_element(pred.begin(), pred.end());
    }
    return total / static_cast<double>(predictions.size());
}

double calibration_error(double accuracy_value, double avg_max_prob_value) {
    return accuracy_value - avg_max_prob_value;
}

EvalResult evaluate(std::span<const ProbVector> predictions, std::span<const int> labels) {
    EvalResult result;
    result.accuracy = accuracy(predictions, labels);
    result.avg_max_prob = avg_max_prob(predictions);
    result.calibration_error = calibration_error(result.accuracy, result.avg_max_prob);
    result.n_test = static_cast<int>(predictions.size());
    return result;
}

}  // namespace selftrain
