// Acceptance suite. Runs each criterion at its stated tolerance and prints
// one PASS/FAIL line per criterion; exits nonzero if any fail.
//
// Criteria 5-7 share one set of runs: the three-experiment comparison on
// the synthetic fixture, five paired replicas (each seed drives both the
// data generator and the run). Cross-seed statistics are medians of the
// per-seed (paired) differences, which is what sharing seeds across modes
// is for.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "selftrain/cli/commands.hpp"
#include "selftrain/cli/journal.hpp"
#include "selftrain/ensemble.hpp"
#include "selftrain/ingest.hpp"
#include "selftrain/metrics.hpp"
#include "selftrain/model.hpp"
#include "selftrain/pipeline.hpp"
#include "selftrain/report.hpp"
#include "selftrain/rng.hpp"

#include <filesystem>
#include <fstream>

using namespace selftrain;

namespace {

struct Failure {
    std::string reason;
};

void require(bool condition, const std::string& reason) {
    if (!condition) {
        throw Failure{reason};
    }
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double elapsed_seconds(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string format(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.4g", value);
    return buffer;
}

ProbVector random_simplex(int num_classes, Rng& rng) {
    std::vector<double> values(num_classes);
    double sum = 0.0;
    for (double& v : values) {
        v = -std::log(1.0 - rng.uniform01());
        sum += v;
    }
    for (double& v : values) {
        v /= sum;
    }
    return ProbVector{std::move(values)};
}

Dataset random_labeled(int n, int dim, int num_classes, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data(dim, num_classes);
    for (int i = 0; i < n; ++i) {
        std::vector<double> features(dim);
        for (double& f : features) {
            f = rng.normal();
        }
        data.add(make_labeled(std::move(features),
                              static_cast<int>(rng.below(num_classes)), i));
    }
    return data;
}

// ------------------------------------------------------------------------
// Criterion 1: gradient oracle (central differences, step 1e-5).
// ------------------------------------------------------------------------
std::string criterion_gradient_oracle() {
    const auto start = std::chrono::steady_clock::now();

    ModelSpec linear{ModelKind::SoftmaxLinear, {}, Activation::ReLU, 20, 5, 31};
    const double linear_error = gradient_check(linear, random_labeled(8, 20, 5, 14));
    require(linear_error < 1e-4,
            "softmax-linear max relative error " + format(linear_error) + " >= 1e-4");

    ModelSpec mlp{ModelKind::Mlp, {16}, Activation::ReLU, 10, 5, 32};
    const double mlp_error = gradient_check(mlp, random_labeled(8, 10, 5, 15));
    require(mlp_error < 1e-3,
            "mlp[16] max relative error " + format(mlp_error) + " >= 1e-3");

    const double seconds = elapsed_seconds(start);
    require(seconds < 10.0, "runtime " + format(seconds) + "s >= 10s");
    return "linear err " + format(linear_error) + ", mlp err " + format(mlp_error) +
           ", " + format(seconds) + "s";
}

// ------------------------------------------------------------------------
// Criterion 2: entropy selection equals the brute-force full-sort oracle.
// ------------------------------------------------------------------------
std::string criterion_selection_oracle() {
    const auto start = std::chrono::steady_clock::now();

    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(9000 + seed);
        std::vector<EnsemblePrediction> preds;
        preds.reserve(1000);
        for (int i = 0; i < 1000; ++i) {
            preds.push_back(make_ensemble_prediction(i, {random_simplex(10, rng)}));
        }

        // Independent oracle: full stable sort by (entropy, id).
        std::vector<std::pair<double, std::int64_t>> keys;
        for (const EnsemblePrediction& pred : preds) {
            keys.emplace_back(pred.entropy, pred.example_id);
        }
        std::stable_sort(keys.begin(), keys.end());
        std::vector<std::int64_t> expected;
        for (int i = 0; i < 100; ++i) {
            expected.push_back(keys[i].second);
        }

        const auto selected = select_lowest_entropy(preds, 100);
        require(selected == expected,
                "selection mismatch against full-sort oracle at seed " +
                    std::to_string(seed));
    }

    const double seconds = elapsed_seconds(start);
    require(seconds < 5.0, "runtime " + format(seconds) + "s >= 5s");
    return "100 seeds x 1000 vectors, " + format(seconds) + "s";
}

// ------------------------------------------------------------------------
// Criterion 3: metric identities and entropy bounds.
// ------------------------------------------------------------------------
std::string criterion_metric_identities() {
    Rng rng(53);
    std::vector<ProbVector> preds;
    std::vector<int> labels;
    for (int i = 0; i < 10000; ++i) {
        preds.push_back(random_simplex(10, rng));
        labels.push_back(static_cast<int>(rng.below(10)));
    }

    // Direct computation, avoiding the library's metric functions.
    std::size_t correct = 0;
    double max_sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < preds[i].size(); ++j) {
            if (preds[i][j] > preds[i][best]) {
                best = j;
            }
        }
        correct += static_cast<int>(best) == labels[i] ? 1 : 0;
        max_sum += preds[i][best];
    }
    const double direct = static_cast<double>(correct) / preds.size() -
                          max_sum / preds.size();
    const double composed = calibration_error(accuracy(preds, labels),
                                              avg_max_prob(preds));
    require(std::abs(composed - direct) <= 1e-12,
            "calibration identity off by " + format(std::abs(composed - direct)));

    // Entropy bounds with equality at the one-hot and uniform fixtures.
    ProbVector one_hot{std::vector<double>(10, 0.0)};
    one_hot.probs[3] = 1.0;
    require(shannon_entropy(one_hot) == 0.0, "one-hot entropy not exactly 0");
    const double ln10 = std::log(10.0);
    const ProbVector uniform{std::vector<double>(10, 0.1)};
    require(std::abs(shannon_entropy(uniform) - ln10) <= 1e-12,
            "uniform entropy differs from ln 10");
    for (const ProbVector& pred : preds) {
        const double entropy = shannon_entropy(pred);
        require(entropy >= 0.0 && entropy <= ln10 + 1e-12,
                "entropy " + format(entropy) + " outside [0, ln 10]");
    }
    return "10000 pairs, identity <= 1e-12, bounds hold";
}

// ------------------------------------------------------------------------
// Criterion 4: separable-data sanity.
// ------------------------------------------------------------------------
std::string criterion_separable_sanity() {
    const auto start = std::chrono::steady_clock::now();

    SyntheticSpec spec;
    spec.num_classes = 2;
    spec.feature_dim = 2;
    spec.n_labeled = 200;
    spec.n_unlabeled = 0;
    spec.n_test = 400;
    spec.class_separation = 10.0;
    spec.seed = 21;
    const SyntheticData data = gen_synthetic(spec);

    ModelSpec model_spec{ModelKind::SoftmaxLinear, {}, Activation::ReLU, 2, 2, 1};
    TrainConfig config;
    config.epochs = 50;
    config.shuffle_seed = 2;
    // 50 epochs is ~650 Adam steps; the step size must let the weights
    // travel further than the Glorot init scale on this fixture.
    config.learning_rate = 1e-2;
    const TrainedModel model = train(model_spec, data.labeled, config);

    std::size_t train_correct = 0;
    for (const Example& example : data.labeled) {
        train_correct += predict_class(model, example.features) == *example.label;
    }
    require(train_correct == data.labeled.size(),
            "train accuracy " + format(static_cast<double>(train_correct) / 200.0) +
                " != 1.0");

    std::vector<int> labels;
    for (const Example& example : data.test) {
        labels.push_back(*example.label);
    }
    const double test_accuracy = accuracy(predict_dataset(model, data.test), labels);
    require(test_accuracy >= 0.99, "test accuracy " + format(test_accuracy) + " < 0.99");

    const double seconds = elapsed_seconds(start);
    require(seconds < 5.0, "runtime " + format(seconds) + "s >= 5s");
    return "train 1.0, test " + format(test_accuracy) + ", " + format(seconds) + "s";
}

// ------------------------------------------------------------------------
// Criteria 5-7: the scaled three-experiment comparison.
// ------------------------------------------------------------------------

// Fixture pinned by calibration against criterion 5's base-accuracy window:
// committee of three comparable MLPs (a linear member is Bayes-optimal on
// Gaussian clusters and would invert the mode comparison), separation 3.2
// so the base lands mid-window, bootstrap size 3x the initial labeled set,
// light weight decay so members convert pseudo-label volume into accuracy
// without erasing the bagging effect.
struct FixtureOutcome {
    std::vector<double> ws_base, ws_final, ns_final, ne_final;
    std::vector<double> ws_gain, ws_minus_ns, ns_minus_ne;
    std::vector<double> ens_abs_err, member_abs_err;
    std::vector<double> first_selection_ood;
    double seconds = 0.0;
};

const FixtureOutcome& fixture_runs() {
    static const FixtureOutcome outcome = [] {
        FixtureOutcome out;
        const auto start = std::chrono::steady_clock::now();
        for (int seed = 1; seed <= 5; ++seed) {
            SyntheticSpec dspec;
            dspec.num_classes = 10;
            dspec.feature_dim = 32;
            dspec.n_labeled = 500;
            dspec.n_unlabeled = 20000;
            dspec.n_test = 4000;
            dspec.class_separation = 3.2;
            dspec.ood_fraction = 0.2;
            dspec.seed = 1000 + seed;
            const SyntheticData data = gen_synthetic(dspec);

            ExperimentConfig config;
            config.mode = Mode::EnsembleWithSubsample;
            config.k = 3;
            config.m = 1500;
            config.p = 1000;
            config.num_iterations = 3;
            config.model_specs = {
                ModelSpec{ModelKind::Mlp, {48}, Activation::ReLU, 32, 10, 0},
                ModelSpec{ModelKind::Mlp, {32, 16}, Activation::ReLU, 32, 10, 1},
                ModelSpec{ModelKind::Mlp, {64}, Activation::Tanh, 32, 10, 2},
            };
            config.train_config.epochs = 40;
            config.train_config.weight_decay = 0.005;
            config.seed = static_cast<std::uint64_t>(seed);

            const ExperimentMatrix matrix = compare_modes(
                data.labeled, data.unlabeled, data.test, config, &data.hidden);

            const auto& with_sub = matrix.runs[4].iterations;
            const auto& no_sub = matrix.runs[3].iterations;
            const auto& single = matrix.runs[0].iterations;  // canonical teacher

            out.ws_base.push_back(with_sub.front().ensemble.accuracy);
            out.ws_final.push_back(with_sub.back().ensemble.accuracy);
            out.ns_final.push_back(no_sub.back().ensemble.accuracy);
            out.ne_final.push_back(single.back().per_model[0].accuracy);
            out.ws_gain.push_back(out.ws_final.back() - out.ws_base.back());
            out.ws_minus_ns.push_back(out.ws_final.back() - out.ns_final.back());
            out.ns_minus_ne.push_back(out.ns_final.back() - out.ne_final.back());
            out.ens_abs_err.push_back(
                std::abs(with_sub.back().ensemble.calibration_error));
            for (const EvalResult& eval : with_sub.back().per_model) {
                out.member_abs_err.push_back(std::abs(eval.calibration_error));
            }
            out.first_selection_ood.push_back(
                with_sub.front().selected_ood_fraction.value_or(1.0));
        }
        out.seconds = elapsed_seconds(start);
        return out;
    }();
    return outcome;
}

std::string criterion_method_efficacy() {
    const FixtureOutcome& out = fixture_runs();
    const double base = median(out.ws_base);
    require(base >= 0.60 && base <= 0.80,
            "median base accuracy " + format(base) + " outside [0.60, 0.80]");
    const double gain = median(out.ws_gain);
    require(gain >= 0.03,
            "median per-seed accuracy gain " + format(gain) + " < 0.03");
    require(out.seconds < 180.0,
            "runtime " + format(out.seconds) + "s >= 180s");
    return "base " + format(base) + ", gain " + format(gain) + ", " +
           format(out.seconds) + "s (shared by criteria 5-7)";
}

std::string criterion_mode_ordering() {
    const FixtureOutcome& out = fixture_runs();
    const double ws_vs_ns = median(out.ws_minus_ns);
    require(ws_vs_ns >= -0.005,
            "subsampling ensemble trails the no-subsample ensemble by " +
                format(-ws_vs_ns) + " (> 0.005 tie band)");
    const double ns_vs_ne = median(out.ns_minus_ne);
    require(ns_vs_ne >= -0.005,
            "no-subsample ensemble trails the single teacher by " +
                format(-ns_vs_ne) + " (> 0.005 tie band)");
    const double ens_err = median(out.ens_abs_err);
    const double member_err = median(out.member_abs_err);
    require(ens_err <= member_err,
            "ensemble |calibration error| " + format(ens_err) +
                " above member median " + format(member_err));
    return "WS-NS " + format(ws_vs_ns) + ", NS-NE " + format(ns_vs_ne) +
           ", |err| ens " + format(ens_err) + " <= members " + format(member_err);
}

std::string criterion_ood_rejection() {
    const FixtureOutcome& out = fixture_runs();
    int below_base_rate = 0;
    for (const double fraction : out.first_selection_ood) {
        below_base_rate += fraction < 0.2 ? 1 : 0;
    }
    require(below_base_rate >= 4,
            "OOD fraction of the first selection below 0.2 in only " +
                std::to_string(below_base_rate) + "/5 seeds");
    return std::to_string(below_base_rate) + "/5 seeds below the 0.2 base rate";
}

// ------------------------------------------------------------------------
// Criterion 8: pipeline invariants on a miniature run.
// ------------------------------------------------------------------------
std::string criterion_pipeline_invariants() {
    const auto start = std::chrono::steady_clock::now();

    SyntheticSpec dspec;
    dspec.num_classes = 4;
    dspec.feature_dim = 8;
    dspec.n_labeled = 100;
    dspec.n_unlabeled = 1000;
    dspec.n_test = 200;
    dspec.class_separation = 3.5;
    dspec.ood_fraction = 0.2;
    dspec.seed = 77;
    const SyntheticData data = gen_synthetic(dspec);

    ExperimentConfig config;
    config.mode = Mode::EnsembleWithSubsample;
    config.k = 3;
    config.m = 80;
    config.p = 100;
    config.num_iterations = 2;
    config.model_specs = {
        ModelSpec{ModelKind::SoftmaxLinear, {}, Activation::ReLU, 8, 4, 0},
        ModelSpec{ModelKind::Mlp, {16}, Activation::ReLU, 8, 4, 1},
        ModelSpec{ModelKind::Mlp, {24, 12}, Activation::ReLU, 8, 4, 2},
    };
    config.train_config.epochs = 6;
    config.seed = 3;

    std::map<std::int64_t, int> original_labels;
    for (const Example& example : data.labeled) {
        original_labels[example.origin_id] = *example.label;
    }
    const std::size_t total = data.labeled.size() + data.unlabeled.size();

    PoolState state = make_pool(data.labeled, data.unlabeled);
    for (int i = 0; i <= config.num_iterations; ++i) {
        const IterationOutcome outcome = run_iteration(
            state, config, data.test,
            derive_seed({config.seed, static_cast<std::uint64_t>(i)}), &data.hidden);

        require(outcome.next_state.labeled.size() +
                        outcome.next_state.unlabeled.size() == total,
                "pool conservation violated at iteration " + std::to_string(i));
        require(outcome.next_state.labeled.size() ==
                    state.labeled.size() + outcome.result.selected_count,
                "growth law violated at iteration " + std::to_string(i));

        for (const Example& example : outcome.next_state.labeled) {
            const auto it = original_labels.find(example.origin_id);
            if (it != original_labels.end()) {
                require(*example.label == it->second &&
                            !example.provenance->is_pseudo(),
                        "true label mutated at iteration " + std::to_string(i));
            }
        }

        std::map<std::int64_t, double> pool_entropy;
        for (const EnsemblePrediction& pred : outcome.trace.pool_predictions) {
            pool_entropy[pred.example_id] = pred.entropy;
        }
        double max_selected = 0.0;
        for (const std::int64_t id : outcome.trace.selected_ids) {
            max_selected = std::max(max_selected, pool_entropy[id]);
            pool_entropy.erase(id);
        }
        for (const auto& [id, entropy] : pool_entropy) {
            require(max_selected <= entropy,
                    "selected entropy above an unselected one at iteration " +
                        std::to_string(i));
        }
        state = outcome.next_state;
    }

    // Bit-identical rerun.
    const auto run_once = [&] {
        return run_experiment(data.labeled, data.unlabeled, data.test, config,
                              &data.hidden);
    };
    const auto first = run_once();
    const auto second = run_once();
    require(first.size() == second.size(), "rerun row count differs");
    for (std::size_t i = 0; i < first.size(); ++i) {
        require(first[i].ensemble.accuracy == second[i].ensemble.accuracy &&
                    first[i].ensemble.avg_max_prob == second[i].ensemble.avg_max_prob &&
                    first[i].selected_count == second[i].selected_count,
                "rerun differs at iteration " + std::to_string(i));
        for (std::size_t j = 0; j < first[i].per_model.size(); ++j) {
            require(first[i].per_model[j].accuracy == second[i].per_model[j].accuracy,
                    "rerun member metrics differ at iteration " + std::to_string(i));
        }
    }

    const double seconds = elapsed_seconds(start);
    require(seconds < 30.0, "runtime " + format(seconds) + "s >= 30s");
    return "conservation, growth, immutability, selection order, rerun; " +
           format(seconds) + "s";
}

// ------------------------------------------------------------------------
// Criterion 9: format round-trips.
// ------------------------------------------------------------------------
std::string criterion_format_round_trips() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "selftrain_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // STL-10 byte-buffer round trip.
    std::string bytes;
    bytes.reserve(3 * kStl10FeatureDim);
    unsigned value = 99;
    for (int i = 0; i < 3 * kStl10FeatureDim; ++i) {
        value = value * 1103515245u + 12345u;
        bytes.push_back(static_cast<char>((value >> 16) & 0xff));
    }
    const std::string labels = {'\x05', '\x0a', '\x01'};
    const auto write_file = [](const fs::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << content;
    };
    const auto read_file = [](const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    write_file(dir / "x.bin", bytes);
    write_file(dir / "y.bin", labels);
    const Dataset loaded = load_stl10((dir / "x.bin").string(), (dir / "y.bin").string());
    save_stl10(loaded, (dir / "x2.bin").string(), (dir / "y2.bin").string());
    require(read_file(dir / "x2.bin") == bytes, "image bytes changed in round trip");
    require(read_file(dir / "y2.bin") == labels, "label bytes changed in round trip");

    // Journal -> report regeneration is lossless.
    std::ostringstream config_json;
    config_json << R"({
  "schema": 1,
  "data": {"synthetic": {"num_classes": 3, "feature_dim": 6, "n_labeled": 60,
                          "n_unlabeled": 240, "n_test": 90,
                          "class_separation": 4.0, "ood_fraction": 0.2, "seed": 8}},
  "experiment": {"mode": "all", "k": 3, "m": 90, "p": 40, "iterations": 1, "seed": 4,
                  "models": [{"kind": "softmax_linear"},
                              {"kind": "mlp", "hidden_sizes": [8]},
                              {"kind": "mlp", "hidden_sizes": [12, 6]}],
                  "train": {"epochs": 5}},
  "output": {"dir": ")" << (dir / "out").string() << R"("}
})";
    write_file(dir / "config.json", config_json.str());

    std::ostringstream run_output;
    cli::cmd_run((dir / "config.json").string(), "", run_output);
    std::ostringstream regenerated;
    cli::cmd_report((dir / "out" / "journal.jsonl").string(), regenerated);
    require(regenerated.str() == read_file(dir / "out" / "report.txt"),
            "report regenerated from the journal differs from the run's report");
    return "STL-10 bytes identical; journal -> report lossless";
}

struct Criterion {
    std::string name;
    std::function<std::string()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"criterion-1-gradient-oracle", criterion_gradient_oracle},
        {"criterion-2-entropy-selection-oracle", criterion_selection_oracle},
        {"criterion-3-metric-identities", criterion_metric_identities},
        {"criterion-4-separable-sanity", criterion_separable_sanity},
        {"criterion-5-method-efficacy", criterion_method_efficacy},
        {"criterion-6-mode-ordering", criterion_mode_ordering},
        {"criterion-7-ood-rejection", criterion_ood_rejection},
        {"criterion-8-pipeline-invariants", criterion_pipeline_invariants},
        {"criterion-9-format-round-trips", criterion_format_round_trips},
    };

    int failures = 0;
    for (const Criterion& criterion : criteria) {
        try {
            const std::string detail = criterion.run();
            std::printf("PASS  %-38s %s\n", criterion.name.c_str(), detail.c_str());
        } catch (const Failure& failure) {
            ++failures;
            std::printf("FAIL  %-38s %s\n", criterion.name.c_str(),
                        failure.reason.c_str());
        } catch (const std::exception& e) {
            ++failures;
            std::printf("FAIL  %-38s unexpected error: %s\n", criterion.name.c_str(),
                        e.what());
        }
        std::fflush(stdout);
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
    }
    return failures == 0 ? 0 : 1;
}
