#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "selftrain/model.hpp"

namespace selftrain {

/// One pool example as seen by the teacher ensemble: the k member
/// prediction vectors, their mean, and the Shannon entropy of the mean.
struct EnsemblePrediction {
    std::int64_t example_id = -1;
    std::vector<ProbVector> member_probs;
    ProbVector mean_probs;
    double entropy = 0.0;
};

/// Elementwise arithmetic mean of the member prediction vectors.
ProbVector ensemble_average(std::span<const ProbVector> member_probs);

/// -sum p ln p in nats, with 0 ln 0 := 0.
double shannon_entropy(const ProbVector& p);

EnsemblePrediction make_ensemble_prediction(std::int64_t example_id,
                                            std::vector<ProbVector> member_probs);

/// Ids of the min(p, n) lowest-entropy predictions, ordered by
/// (entropy ascending, origin_id ascending). Requesting more than the pool
/// holds returns the whole pool.
std::vector<std::int64_t> select_lowest_entropy(std::span<const EnsemblePrediction> preds,
                                                std::size_t p);

/// Hard pseudo-label: argmax with the same lowest-index tie-break as
/// predict_class.
int pseudo_label(const ProbVector& pred);

}  // namespace selftrain
