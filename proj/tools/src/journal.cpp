#include "selftrain/cli/journal.hpp"

#include "selftrain/cli/config.hpp"
#include "selftrain/errors.hpp"

namespace selftrain::cli {

namespace {

using nlohmann::json;

json eval_to_json(const EvalResult& eval) {
    return json{{"accuracy", eval.accuracy},
                {"avg_max_prob", eval.avg_max_prob},
                {"calibration_error", eval.calibration_error},
                {"n_test", eval.n_test}};
}

EvalResult eval_from_json(const json& j) {
    EvalResult eval;
    eval.accuracy = j.at("accuracy").get<double>();
    eval.avg_max_prob = j.at("avg_max_prob").get<double>();
    eval.calibration_error = j.at("calibration_error").get<double>();
    eval.n_test = j.at("n_test").get<int>();
    return eval;
}

}  // namespace

json iteration_to_json(const IterationResult& result) {
    json j{{"record", "iteration"},
           {"iteration", result.iteration},
           {"labeled_size", result.labeled_size},
           {"ensemble", eval_to_json(result.ensemble)},
           {"selected_count", result.selected_count},
           {"pool_remaining", result.pool_remaining}};
    json per_model = json::array();
    for (const EvalResult& eval : result.per_model) {
        per_model.push_back(eval_to_json(eval));
    }
    j["per_model"] = std::move(per_model);
    j["pseudo_label_precision"] =
        result.pseudo_label_precision ? json(*result.pseudo_label_precision) : json();
    j["selected_ood_fraction"] =
        result.selected_ood_fraction ? json(*result.selected_ood_fraction) : json();
    return j;
}

IterationResult iteration_from_json(const json& j) {
    IterationResult result;
    result.iteration = j.at("iteration").get<int>();
    result.labeled_size = j.at("labeled_size").get<std::size_t>();
    for (const json& eval : j.at("per_model")) {
        result.per_model.push_back(eval_from_json(eval));
    }
    result.ensemble = eval_from_json(j.at("ensemble"));
    result.selected_count = j.at("selected_count").get<std::size_t>();
    result.pool_remaining = j.at("pool_remaining").get<std::size_t>();
    if (!j.at("pseudo_label_precision").is_null()) {
        result.pseudo_label_precision = j.at("pseudo_label_precision").get<double>();
    }
    if (!j.at("selected_ood_fraction").is_null()) {
        result.selected_ood_fraction = j.at("selected_ood_fraction").get<double>();
    }
    return result;
}

JournalWriter::JournalWriter(const std::string& path, const json& config)
    : out_(path, std::ios::trunc) {
    if (!out_) {
        throw DataError("cannot open journal for writing: " + path);
    }
    const json meta{{"record", "meta"},
                    {"schema", 1},
                    {"config_digest", config_digest(config)},
                    {"config", config}};
    out_ << meta.dump() << '\n';
}

void JournalWriter::begin_run(const ExperimentRun& run) {
    if (run.label == current_run_) {
        return;
    }
    current_run_ = run.label;
    const json header{{"record", "run"},
                      {"label", run.label},
                      {"mode", mode_name(run.mode)},
                      {"models", run.model_names},
                      {"has_ensemble_row", run.has_ensemble_row}};
    out_ << header.dump() << '\n';
}

void JournalWriter::add_iteration(const IterationResult& result) {
    if (current_run_.empty()) {
        throw std::logic_error("journal: iteration before any run header");
    }
    out_ << iteration_to_json(result).dump() << '\n';
}

void JournalWriter::close() {
    out_.flush();
    if (!out_) {
        throw DataError("journal write failed");
    }
    out_.close();
}

Journal read_journal(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open journal: " + path);
    }

    Journal journal;
    std::string line;
    std::size_t record_number = 0;
    ExperimentRun* current = nullptr;
    bool saw_meta = false;

    while (std::getline(in, line)) {
        ++record_number;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw DataError("journal record " + std::to_string(record_number) +
                            ": parse error: " + e.what());
        }
        try {
            const std::string record = j.at("record").get<std::string>();
            if (record == "meta") {
                if (j.at("schema").get<int>() != 1) {
                    throw DataError("journal record " + std::to_string(record_number) +
                                    ": unsupported schema");
                }
                journal.config = j.at("config");
                journal.config_digest = j.at("config_digest").get<std::string>();
                saw_meta = true;
            } else if (record == "run") {
                ExperimentRun run;
                run.label = j.at("label").get<std::string>();
                run.mode = mode_from_name(j.at("mode").get<std::string>());
                run.model_names = j.at("models").get<std::vector<std::string>>();
                run.has_ensemble_row = j.at("has_ensemble_row").get<bool>();
                journal.matrix.runs.push_back(std::move(run));
                current = &journal.matrix.runs.back();
            } else if (record == "iteration") {
                if (!current) {
                    throw DataError("journal record " + std::to_string(record_number) +
                                    ": iteration before any run header");
                }
                current->iterations.push_back(iteration_from_json(j));
            } else {
                throw DataError("journal record " + std::to_string(record_number) +
                                ": unknown record type '" + record + "'");
            }
        } catch (const json::exception& e) {
            throw DataError("journal record " + std::to_string(record_number) + ": " +
                            e.what());
        }
    }

    if (!saw_meta) {
        throw DataError("journal: missing meta record");
    }
    if (journal.matrix.runs.empty()) {
        throw DataError("journal: no run records");
    }
    for (const ExperimentRun& run : journal.matrix.runs) {
        if (run.iterations.empty()) {
            throw DataError("journal: run '" + run.label + "' has no iterations");
        }
    }
    return journal;
}

}  // namespace selftrain::cli
