#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "selftrain/pipeline.hpp"

namespace selftrain::cli {

// The run journal is a JSON-lines file: a meta record (schema, config and
// its digest) followed by run headers and one record per iteration, in
// execution order. Doubles are serialized with shortest round-trip
// precision, so regenerating a report from the journal is lossless.

class JournalWriter {
public:
    JournalWriter(const std::string& path, const nlohmann::json& config);

    void begin_run(const ExperimentRun& run);
    void add_iteration(const IterationResult& result);
    void close();

private:
    std::ofstream out_;
    std::string current_run_;
};

struct Journal {
    nlohmann::json config;
    std::string config_digest;
    ExperimentMatrix matrix;
};

/// Parse and validate a journal; errors name the offending record.
Journal read_journal(const std::string& path);

nlohmann::json iteration_to_json(const IterationResult& result);
IterationResult iteration_from_json(const nlohmann::json& j);

}  // namespace selftrain::cli
