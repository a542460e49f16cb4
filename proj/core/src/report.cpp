#include "selftrain/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace selftrain {

namespace {

std::string full_precision(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

std::string fixed4(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.4f", value);
    return buffer;
}

// One (experiment, model) table row spanning all iterations.
struct Row {
    std::string experiment;
    std::string model;
    const ExperimentRun* run;
    int member = -1;  // -1 = ensemble row

    const EvalResult& eval(std::size_t iteration) const {
        const IterationResult& result = run->iterations[iteration];
        return member < 0 ? result.ensemble
                          : result.per_model[static_cast<std::size_t>(member)];
    }
};

std::vector<Row> collect_rows(const ExperimentMatrix& matrix) {
    std::vector<Row> rows;
    for (const ExperimentRun& run : matrix.runs) {
        for (std::size_t j = 0; j < run.model_names.size(); ++j) {
            rows.push_back(Row{mode_name(run.mode), run.model_names[j], &run,
                               static_cast<int>(j)});
        }
        if (run.has_ensemble_row) {
            rows.push_back(Row{mode_name(run.mode), "ensemble", &run, -1});
        }
    }
    return rows;
}

std::string render_table(const std::string& title, const std::vector<Row>& rows,
                         std::size_t iterations, bool calibration) {
    std::vector<std::string> headers = {"experiment", "model"};
    headers.push_back("base");
    for (std::size_t i = 1; i < iterations; ++i) {
        headers.push_back("iter" + std::to_string(i));
    }
    if (calibration) {
        headers.push_back("|err|_final");
    }

    std::vector<std::vector<std::string>> cells;
    for (const Row& row : rows) {
        std::vector<std::string> line = {row.experiment, row.model};
        for (std::size_t i = 0; i < iterations; ++i) {
            const EvalResult& eval = row.eval(i);
            line.push_back(fixed4(calibration ? eval.calibration_error : eval.accuracy));
        }
        if (calibration) {
            line.push_back(fixed4(std::abs(row.eval(iterations - 1).calibration_error)));
        }
        cells.push_back(std::move(line));
    }

    std::vector<std::size_t> widths(headers.size());
    for (std::size_t col = 0; col < headers.size(); ++col) {
        widths[col] = headers[col].size();
        for (const auto& line : cells) {
            widths[col] = std::max(widths[col], line[col].size());
        }
    }

    const auto emit_line = [&](const std::vector<std::string>& line) {
        std::string out;
        for (std::size_t col = 0; col < line.size(); ++col) {
            out += line[col];
            if (col + 1 < line.size()) {
                out.append(widths[col] - line[col].size() + 2, ' ');
            }
        }
        out += '\n';
        return out;
    };

    std::string text = title + "\n" + std::string(title.size(), '-') + "\n";
    text += emit_line(headers);
    for (const auto& line : cells) {
        text += emit_line(line);
    }
    return text;
}

std::string optional_field(const std::optional<double>& value) {
    return value ? full_precision(*value) : std::string();
}

}  // namespace

Report format_report(const ExperimentMatrix& matrix) {
    if (matrix.runs.empty()) {
        throw std::invalid_argument("format_report: empty matrix");
    }
    const std::size_t iterations = matrix.runs.front().iterations.size();
    for (const ExperimentRun& run : matrix.runs) {
        if (run.iterations.size() != iterations || iterations == 0) {
            throw std::invalid_argument("format_report: ragged or empty run");
        }
    }

    const std::vector<Row> rows = collect_rows(matrix);

    Report report;
    report.text = render_table("Accuracy", rows, iterations, false) + "\n" +
                  render_table("Calibration error (accuracy - avg max prob)", rows,
                               iterations, true);

    report.csv = "experiment,model,iteration,labeled_size,accuracy,avg_max_prob,"
                 "calibration_error,pseudo_label_precision\n";
    for (const Row& row : rows) {
        for (std::size_t i = 0; i < iterations; ++i) {
            const IterationResult& result = row.run->iterations[i];
            const EvalResult& eval = row.eval(i);
            report.csv += row.experiment;
            report.csv += ',';
            report.csv += row.model;
            report.csv += ',';
            report.csv += std::to_string(result.iteration);
            report.csv += ',';
            report.csv += std::to_string(result.labeled_size);
            report.csv += ',';
            report.csv += full_precision(eval.accuracy);
            report.csv += ',';
            report.csv += full_precision(eval.avg_max_prob);
            report.csv += ',';
            report.csv += full_precision(eval.calibration_error);
            report.csv += ',';
            report.csv += optional_field(result.pseudo_label_precision);
            report.csv += '\n';
        }
    }
    return report;
}

}  // namespace selftrain
