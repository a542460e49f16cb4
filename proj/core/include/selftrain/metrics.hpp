#pragma once

#include <span>

#include "selftrain/model.hpp"

namespace selftrain {

/// Test-set summary for one classifier (or one ensemble).
/// calibration_error is signed: negative means underconfident.
struct EvalResult {
    double accuracy = 0.0;
    double avg_max_prob = 0.0;
    double calibration_error = 0.0;
    int n_test = 0;
};

/// Fraction of predictions whose argmax (lowest-index tie-break) equals
/// the label.
double accuracy(std::span<const ProbVector> predictions, std::span<const int> labels);

/// Mean of the per-prediction maximum probability.
double avg_max_prob(std::span<const ProbVector> predictions);

/// accuracy - avg_max_prob, kept signed.
double calibration_error(double accuracy_value, double avg_max_prob_value);

EvalResult evaluate(std::span<const ProbVector> predictions, std::span<const int> labels);

}  // namespace selftrain
