#include "selftrain/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace selftrain {

ProbVector ensemble_average(std::span<const ProbVector> member_probs) {
    if (member_probs.empty()) {
        throw std::invalid_argument("ensemble_average: no members");
    }
    const std::size_t c = member_probs.front().size();
    ProbVector mean;
    mean.probs.assign(c, 0.0);
    for (const ProbVector& member : member_probs) {
        if (member.size() != c) {
            throw std::invalid_argument("ensemble_average: member length mismatch");
        }
        for (std::size_t j = 0; j < c; ++j) {
            mean.probs[j] += member[j];
        }
    }
    const double inv_k = 1.0 / static_cast<double>(member_probs.size());
    for (double& p : mean.probs) {
        p *= inv_k;
    }
    return mean;
}

double shannon_entropy(const ProbVector& p) {
    double entropy = 0.0;
    for (const double prob : p) {
        if (prob > 0.0) {
            entropy -= prob * std::log(prob);
        }
    }
    return entropy;
}

EnsemblePrediction make_ensemble_prediction(std::int64_t example_id,
                                            std::vector<ProbVector> member_probs) {
    EnsemblePrediction pred;
    pred.example_id = example_id;
    pred.mean_probs = ensemble_average(member_probs);
    pred.entropy = shannon_entropy(pred.mean_probs);
    pred.member_probs = std::move(member_probs);
    return pred;
}

std::vector<std::int64_t> select_lowest_entropy(std::span<const EnsemblePrediction> preds,
                                                std::size_t p) {
    const std::size_t take = std::min(p, preds.size());
    std::vector<std::pair<double, std::int64_t>> keys;
    keys.reserve(preds.size());
    for (const EnsemblePrediction& pred : preds) {
        keys.emplace_back(pred.entropy, pred.example_id);
    }
    // Partition the take lowest keys first, then order just that prefix.
    if (take < keys.size()) {
        std::nth_element(keys.begin(), keys.begin() + take, keys.end());
    }
    std::sort(keys.begin(), keys.begin() + take);

    std::vector<std::int64_t> selected;
    selected.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        selected.push_back(keys[i].second);
    }
    return selected;
}

int pseudo_label(const ProbVector& pred) {
    return argmax_lowest(pred.probs);
}

}  // namespace selftrain
