#pragma once

#include <string>

#include "selftrain/pipeline.hpp"

namespace selftrain {

struct Report {
    std::string text;  // two aligned tables: accuracy and calibration error
    std::string csv;   // one row per (experiment, model, iteration), full precision
};

/// Renders the experiment matrix the way the run journal and the CLI
/// expect it: an accuracy table and a signed calibration-error table
/// (with a final-iteration |error| diagnostics column), plus a
/// delimiter-separated file carrying every metric at full double
/// precision.
Report format_report(const ExperimentMatrix& matrix);

}  // namespace selftrain
