#include "selftrain/cli/commands.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "selftrain/cli/config.hpp"
#include "selftrain/cli/journal.hpp"
#include "selftrain/errors.hpp"
#include "selftrain/report.hpp"

namespace selftrain::cli {

namespace {

namespace fs = std::filesystem;

std::string full_precision(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot open file for writing: " + path.string());
    }
    out << content;
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

Dataset with_origin_ids_from(const Dataset& dataset, std::int64_t first_id) {
    Dataset out(dataset.feature_dim(), dataset.num_classes());
    out.reserve(dataset.size());
    std::int64_t id = first_id;
    for (const Example& example : dataset) {
        Example copy = example;
        copy.origin_id = id++;
        out.add(copy);
    }
    return out;
}

struct LoadedData {
    Dataset labeled;
    Dataset unlabeled;
    Dataset test;
    std::optional<HiddenLabels> hidden;
};

HiddenLabels load_hidden_csv(const std::string& path, std::int64_t first_pool_id,
                             std::size_t pool_size, int num_classes) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open file: " + path);
    }
    HiddenLabels hidden;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line == "unlabeled_row,hidden_class,is_ood") {
            continue;
        }
        long row = 0;
        long cluster = 0;
        long ood_flag = 0;
        if (std::sscanf(line.c_str(), "%ld,%ld,%ld", &row, &cluster, &ood_flag) != 3) {
            throw DataError("hidden labels parse error at row " +
                            std::to_string(line_number));
        }
        if (row < 0 || static_cast<std::size_t>(row) >= pool_size) {
            throw DataError("hidden labels: row index out of range at row " +
                            std::to_string(line_number));
        }
        if ((cluster >= num_classes) != (ood_flag != 0)) {
            throw DataError("hidden labels: is_ood flag inconsistent at row " +
                            std::to_string(line_number));
        }
        hidden.emplace(first_pool_id + row, static_cast<int>(cluster));
    }
    return hidden;
}

LoadedData load_data(const RunConfig& config) {
    LoadedData data;
    if (const auto* synthetic = std::get_if<SyntheticSpec>(&config.data)) {
        SyntheticData generated = gen_synthetic(*synthetic);
        data.labeled = std::move(generated.labeled);
        data.unlabeled = std::move(generated.unlabeled);
        data.test = std::move(generated.test);
        data.hidden = std::move(generated.hidden);
        return data;
    }
    if (const auto* csv = std::get_if<CsvSource>(&config.data)) {
        Dataset labeled = load_csv(csv->labeled, true);
        Dataset unlabeled = load_csv(csv->unlabeled, false);
        Dataset test = load_csv(csv->test, true);
        const int num_classes = std::max(labeled.num_classes(), test.num_classes());
        labeled.set_num_classes(num_classes);
        test.set_num_classes(num_classes);
        unlabeled.set_num_classes(num_classes);

        // Per-file ids restart at zero; give the three splits disjoint ranges.
        data.labeled = with_origin_ids_from(labeled, 0);
        const std::int64_t pool_first = static_cast<std::int64_t>(labeled.size());
        data.unlabeled = with_origin_ids_from(unlabeled, pool_first);
        data.test = with_origin_ids_from(
            test, pool_first + static_cast<std::int64_t>(unlabeled.size()));
        if (csv->hidden_labels) {
            data.hidden = load_hidden_csv(*csv->hidden_labels, pool_first,
                                          data.unlabeled.size(), num_classes);
        }
        return data;
    }
    const auto& stl10 = std::get<Stl10Source>(config.data);
    Dataset labeled = load_stl10(stl10.train_images, stl10.train_labels);
    Dataset test = load_stl10(stl10.test_images, stl10.test_labels);
    Dataset unlabeled = stl10.unlabeled_images
                            ? load_stl10(*stl10.unlabeled_images, std::nullopt)
                            : Dataset(kStl10FeatureDim, kStl10Classes);
    data.labeled = with_origin_ids_from(labeled, 0);
    const std::int64_t pool_first = static_cast<std::int64_t>(labeled.size());
    data.unlabeled = with_origin_ids_from(unlabeled, pool_first);
    data.test = with_origin_ids_from(
        test, pool_first + static_cast<std::int64_t>(unlabeled.size()));
    return data;
}

std::string audit_csv(const IterationTrace& trace, int k, int num_classes) {
    std::string csv = "origin_id";
    for (int j = 0; j < k; ++j) {
        csv += ",member_max_prob_" + std::to_string(j);
    }
    for (int c = 0; c < num_classes; ++c) {
        csv += ",mean_prob_" + std::to_string(c);
    }
    csv += ",entropy,pseudo_label\n";
    for (const EnsemblePrediction& pred : trace.pool_predictions) {
        csv += std::to_string(pred.example_id);
        for (const ProbVector& member : pred.member_probs) {
            double max_prob = 0.0;
            for (const double p : member) {
                max_prob = std::max(max_prob, p);
            }
            csv += ',' + full_precision(max_prob);
        }
        for (const double p : pred.mean_probs) {
            csv += ',' + full_precision(p);
        }
        csv += ',' + full_precision(pred.entropy);
        csv += ',' + std::to_string(pseudo_label(pred.mean_probs));
        csv += '\n';
    }
    return csv;
}

}  // namespace

void cmd_gen_data(const std::string& config_path, std::ostream& out) {
    const RunConfig config = load_run_config(config_path);
    const auto* spec = std::get_if<SyntheticSpec>(&config.data);
    if (!spec) {
        throw ConfigError("gen-data needs a synthetic data source");
    }

    const SyntheticData data = gen_synthetic(*spec);
    const fs::path dir(config.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);

    save_csv(data.labeled, (dir / "labeled.csv").string(), true);
    save_csv(data.unlabeled, (dir / "unlabeled.csv").string(), false);
    save_csv(data.test, (dir / "test.csv").string(), true);

    std::string hidden_csv = "unlabeled_row,hidden_class,is_ood\n";
    std::size_t ood_count = 0;
    const std::int64_t pool_first = static_cast<std::int64_t>(data.labeled.size());
    for (const auto& [origin_id, cluster] : data.hidden) {
        const bool ood = cluster >= spec->num_classes;
        ood_count += ood ? 1 : 0;
        hidden_csv += std::to_string(origin_id - pool_first);
        hidden_csv += ',' + std::to_string(cluster);
        hidden_csv += ',' + std::to_string(ood ? 1 : 0);
        hidden_csv += '\n';
    }
    write_text_file(dir / "hidden_labels.csv", hidden_csv);

    out << "labeled:   " << data.labeled.size() << " examples -> "
        << (dir / "labeled.csv").string() << "\n"
        << "unlabeled: " << data.unlabeled.size() << " examples (" << ood_count
        << " out-of-distribution) -> " << (dir / "unlabeled.csv").string() << "\n"
        << "test:      " << data.test.size() << " examples -> "
        << (dir / "test.csv").string() << "\n"
        << "hidden:    " << data.hidden.size() << " rows -> "
        << (dir / "hidden_labels.csv").string() << "\n";
}

void cmd_run(const std::string& config_path, const std::string& out_dir_override,
             std::ostream& out) {
    const RunConfig config = load_run_config(config_path);
    const fs::path dir(out_dir_override.empty() ? config.out_dir : out_dir_override);
    std::error_code ec;
    fs::create_directories(dir / "audit", ec);

    const LoadedData data = load_data(config);
    if (data.labeled.empty()) {
        throw DataError("empty labeled pool");
    }
    const ExperimentConfig experiment = materialize_experiment(
        config.experiment, data.labeled.feature_dim(), data.labeled.num_classes());
    const HiddenLabels* hidden = data.hidden ? &*data.hidden : nullptr;

    JournalWriter journal((dir / "journal.jsonl").string(), config.raw);
    const auto audit_observer = [&](const ExperimentRun& run, const IterationResult& result,
                                    const IterationTrace& trace) {
        journal.begin_run(run);
        journal.add_iteration(result);
        const fs::path audit_path =
            dir / "audit" / (run.label + "_iter" + std::to_string(result.iteration) + ".csv");
        write_text_file(audit_path, audit_csv(trace, static_cast<int>(run.model_names.size()),
                                              data.labeled.num_classes()));
    };

    ExperimentMatrix matrix;
    if (config.experiment.all_modes) {
        matrix = compare_modes(data.labeled, data.unlabeled, data.test, experiment, hidden,
                               audit_observer);
    } else {
        ExperimentRun run;
        run.mode = experiment.mode;
        run.label = mode_name(experiment.mode);
        for (const ModelSpec& spec : experiment.model_specs) {
            run.model_names.push_back(spec.name());
        }
        run.has_ensemble_row = experiment.mode != Mode::NonEnsemble;
        run.iterations = run_experiment(
            data.labeled, data.unlabeled, data.test, experiment, hidden,
            [&](const IterationResult& result, const IterationTrace& trace) {
                audit_observer(run, result, trace);
            });
        matrix.runs.push_back(std::move(run));
    }
    journal.close();

    const Report report = format_report(matrix);
    if (config.write_text) {
        write_text_file(dir / "report.txt", report.text);
    }
    if (config.write_csv) {
        write_text_file(dir / "report.csv", report.csv);
    }

    out << "config digest: " << config_digest(config.raw) << "\n"
        << "journal:       " << (dir / "journal.jsonl").string() << "\n";
    if (config.write_text) {
        out << "report (text): " << (dir / "report.txt").string() << "\n";
    }
    if (config.write_csv) {
        out << "report (csv):  " << (dir / "report.csv").string() << "\n";
    }
    out << "\n" << report.text;
}

void cmd_report(const std::string& journal_path, std::ostream& out) {
    const Journal journal = read_journal(journal_path);
    const Report report = format_report(journal.matrix);
    out << report.text;
}

}  // namespace selftrain::cli
