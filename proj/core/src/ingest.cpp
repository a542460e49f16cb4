#include "selftrain/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "selftrain/errors.hpp"

namespace selftrain {

namespace {

std::vector<unsigned char> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file: " + path);
    }
    in.seekg(0, std::ios::end);
    const std::streamoff size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size)) {
        throw DataError("cannot read file: " + path);
    }
    return bytes;
}

void write_binary_file(const std::string& path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open file for writing: " + path);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("write failed: " + path);
    }
}

std::string format_double(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, result.ptr);
}

std::string_view trim(std::string_view token) {
    while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) {
        token.remove_prefix(1);
    }
    while (!token.empty() && (token.back() == ' ' || token.back() == '\t' ||
                              token.back() == '\r')) {
        token.remove_suffix(1);
    }
    return token;
}

bool parse_double(std::string_view token, double& out) {
    token = trim(token);
    if (token.empty()) {
        return false;
    }
    const auto result = std::from_chars(token.data(), token.data() + token.size(), out);
    return result.ec == std::errc{} && result.ptr == token.data() + token.size();
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            tokens.push_back(line.substr(start));
            break;
        }
        tokens.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return tokens;
}

}  // namespace

// ---------------------------------------------------------------- STL-10

Dataset load_stl10(const std::string& images_path,
                   const std::optional<std::string>& labels_path) {
    const std::vector<unsigned char> bytes = read_binary_file(images_path);
    if (bytes.size() % kStl10FeatureDim != 0) {
        throw DataError("truncated STL-10 file");
    }
    const std::size_t count = bytes.size() / kStl10FeatureDim;

    std::vector<int> labels;
    if (labels_path) {
        const std::vector<unsigned char> label_bytes = read_binary_file(*labels_path);
        if (label_bytes.size() != count) {
            throw DataError("STL-10 label count mismatch");
        }
        labels.reserve(count);
        for (const unsigned char byte : label_bytes) {
            if (byte < 1 || byte > kStl10Classes) {
                throw DataError("invalid label byte");
            }
            labels.push_back(static_cast<int>(byte) - 1);
        }
    }

    Dataset dataset(kStl10FeatureDim, kStl10Classes);
    dataset.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::vector<double> features(kStl10FeatureDim);
        const unsigned char* record = bytes.data() + i * kStl10FeatureDim;
        for (int j = 0; j < kStl10FeatureDim; ++j) {
            features[j] = static_cast<double>(record[j]) / 255.0;
        }
        if (labels_path) {
            dataset.add(make_labeled(std::move(features), labels[i],
                                     static_cast<std::int64_t>(i)));
        } else {
            dataset.add(make_unlabeled(std::move(features), static_cast<std::int64_t>(i)));
        }
    }
    return dataset;
}

void save_stl10(const Dataset& dataset, const std::string& images_path,
                const std::optional<std::string>& labels_path) {
    if (!dataset.empty() && dataset.feature_dim() != kStl10FeatureDim) {
        throw std::invalid_argument("save_stl10: feature dimension is not 96*96*3");
    }
    std::vector<unsigned char> bytes;
    bytes.reserve(dataset.size() * kStl10FeatureDim);
    std::vector<unsigned char> label_bytes;
    for (const Example& example : dataset) {
        for (const double feature : example.features) {
            const long pixel = std::lround(feature * 255.0);
            if (pixel < 0 || pixel > 255) {
                throw std::invalid_argument("save_stl10: feature outside [0,1]");
            }
            bytes.push_back(static_cast<unsigned char>(pixel));
        }
        if (labels_path) {
            if (!example.label) {
                throw std::invalid_argument("save_stl10: missing label");
            }
            label_bytes.push_back(static_cast<unsigned char>(*example.label + 1));
        }
    }
    write_binary_file(images_path, bytes);
    if (labels_path) {
        write_binary_file(*labels_path, label_bytes);
    }
}

// ------------------------------------------------------------------- CSV

Dataset load_csv(const std::string& path, bool labeled) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open file: " + path);
    }

    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::string line;
    std::size_t line_number = 0;
    std::size_t column_count = 0;
    bool first_data_line = true;

    while (std::getline(in, line)) {
        ++line_number;
        if (trim(line).empty()) {
            continue;
        }
        const std::vector<std::string_view> tokens = split_commas(line);

        if (first_data_line) {
            double probe = 0.0;
            if (!parse_double(tokens.front(), probe)) {
                // Header row; skip it.
                first_data_line = false;
                continue;
            }
            column_count = tokens.size();
            first_data_line = false;
        } else if (column_count == 0) {
            column_count = tokens.size();
        }

        if (tokens.size() != column_count) {
            throw DataError("inconsistent column count at row " +
                            std::to_string(line_number));
        }

        const std::size_t feature_count = labeled ? tokens.size() - 1 : tokens.size();
        if (labeled && tokens.size() < 2) {
            throw DataError("labeled csv needs at least one feature column (row " +
                            std::to_string(line_number) + ")");
        }
        std::vector<double> features(feature_count);
        for (std::size_t j = 0; j < feature_count; ++j) {
            if (!parse_double(tokens[j], features[j])) {
                throw DataError("csv parse error at row " + std::to_string(line_number) +
                                ", column " + std::to_string(j + 1));
            }
        }
        if (labeled) {
            double label_value = 0.0;
            if (!parse_double(tokens.back(), label_value) ||
                label_value != std::floor(label_value) || label_value < 0) {
                throw DataError("csv label must be a non-negative integer (row " +
                                std::to_string(line_number) + ")");
            }
            labels.push_back(static_cast<int>(label_value));
        }
        rows.push_back(std::move(features));
    }

    int num_classes = 0;
    for (const int label : labels) {
        num_classes = std::max(num_classes, label + 1);
    }

    Dataset dataset(rows.empty() ? 0 : static_cast<int>(rows.front().size()), num_classes);
    dataset.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (labeled) {
            dataset.add(make_labeled(std::move(rows[i]), labels[i],
                                     static_cast<std::int64_t>(i)));
        } else {
            dataset.add(make_unlabeled(std::move(rows[i]), static_cast<std::int64_t>(i)));
        }
    }
    return dataset;
}

void save_csv(const Dataset& dataset, const std::string& path, bool with_labels) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot open file for writing: " + path);
    }
    for (const Example& example : dataset) {
        std::string row;
        for (std::size_t j = 0; j < example.features.size(); ++j) {
            if (j > 0) {
                row += ',';
            }
            row += format_double(example.features[j]);
        }
        if (with_labels) {
            if (!example.label) {
                throw std::invalid_argument("save_csv: missing label");
            }
            row += ',';
            row += std::to_string(*example.label);
        }
        row += '\n';
        out << row;
    }
    if (!out) {
        throw DataError("write failed: " + path);
    }
}

// ------------------------------------------------------------- synthetic

void SyntheticSpec::validate() const {
    if (num_classes < 2) {
        throw ConfigError("synthetic spec: num_classes must be >= 2");
    }
    if (feature_dim < 1) {
        throw ConfigError("synthetic spec: feature_dim must be >= 1");
    }
    if (n_labeled < 1 || n_labeled % num_classes != 0) {
        throw ConfigError("synthetic spec: n_labeled must be positive and divisible "
                          "by num_classes");
    }
    if (n_unlabeled < 0 || n_test < 0) {
        throw ConfigError("synthetic spec: split sizes must be non-negative");
    }
    if (!(class_separation > 0.0)) {
        throw ConfigError("synthetic spec: class_separation must be > 0");
    }
    if (ood_fraction < 0.0 || ood_fraction >= 1.0) {
        throw ConfigError("synthetic spec: ood_fraction must be in [0,1)");
    }
}

namespace {

// Cluster means with pairwise distance >= separation: a scaled simplex on
// the coordinate axes when the dimension allows, otherwise a circle in the
// first two dimensions (adjacent chord = separation), otherwise a line.
std::vector<std::vector<double>> cluster_means(int total_clusters, int dim,
                                               double separation) {
    std::vector<std::vector<double>> means(total_clusters, std::vector<double>(dim, 0.0));
    if (total_clusters <= dim) {
        const double scale = separation / std::numbers::sqrt2;
        for (int t = 0; t < total_clusters; ++t) {
            means[t][t] = scale;
        }
    } else if (dim >= 2) {
        const double radius =
            separation / (2.0 * std::sin(std::numbers::pi / total_clusters));
        for (int t = 0; t < total_clusters; ++t) {
            const double angle = 2.0 * std::numbers::pi * t / total_clusters;
            means[t][0] = radius * std::cos(angle);
            means[t][1] = radius * std::sin(angle);
        }
    } else {
        for (int t = 0; t < total_clusters; ++t) {
            means[t][0] = separation * t;
        }
    }
    return means;
}

std::vector<double> draw_point(const std::vector<double>& mean, Rng& rng) {
    std::vector<double> point(mean.size());
    for (std::size_t j = 0; j < mean.size(); ++j) {
        point[j] = mean[j] + rng.normal();
    }
    return point;
}

}  // namespace

SyntheticData gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();

    const int c = spec.num_classes;
    const int n_ood = static_cast<int>(std::floor(spec.ood_fraction * spec.n_unlabeled));
    const int ood_clusters = n_ood > 0 ? std::max(1, c / 2) : 0;
    const auto means = cluster_means(c + ood_clusters, spec.feature_dim,
                                     spec.class_separation);

    Rng rng(spec.seed);
    SyntheticData data;
    data.labeled = Dataset(spec.feature_dim, c);
    data.unlabeled = Dataset(spec.feature_dim, c);
    data.test = Dataset(spec.feature_dim, c);

    std::int64_t next_id = 0;
    data.labeled.reserve(spec.n_labeled);
    for (int i = 0; i < spec.n_labeled; ++i) {
        const int cls = i % c;
        data.labeled.add(make_labeled(draw_point(means[cls], rng), cls, next_id++));
    }

    // Pool composition: fixed OOD count spread round-robin over the extra
    // clusters, in-distribution classes drawn uniformly, then shuffled so
    // the contamination is not a contiguous block.
    std::vector<int> pool_clusters;
    pool_clusters.reserve(spec.n_unlabeled);
    for (int i = 0; i < n_ood; ++i) {
        pool_clusters.push_back(c + i % ood_clusters);
    }
    for (int i = n_ood; i < spec.n_unlabeled; ++i) {
        pool_clusters.push_back(static_cast<int>(rng.below(c)));
    }
    rng.shuffle(pool_clusters);

    data.unlabeled.reserve(spec.n_unlabeled);
    for (const int cluster : pool_clusters) {
        data.hidden.emplace(next_id, cluster);
        data.unlabeled.add(make_unlabeled(draw_point(means[cluster], rng), next_id++));
    }

    data.test.reserve(spec.n_test);
    for (int i = 0; i < spec.n_test; ++i) {
        const int cls = i % c;
        data.test.add(make_labeled(draw_point(means[cls], rng), cls, next_id++));
    }
    return data;
}

// ----------------------------------------------------------- augmentation

void AugmentSpec::validate() const {
    if (p_hflip < 0.0 || p_hflip > 1.0 || p_vflip < 0.0 || p_vflip > 1.0) {
        throw ConfigError("augment spec: flip probabilities must be in [0,1]");
    }
    if (max_shift_frac < 0.0 || max_shift_frac > 0.5) {
        throw ConfigError("augment spec: max_shift_frac must be in [0,0.5]");
    }
    if (height < 1 || width < 1 || channels < 1) {
        throw ConfigError("augment spec: image shape must be positive");
    }
}

std::size_t image_index(const AugmentSpec& spec, int channel, int row, int col) {
    return static_cast<std::size_t>(channel) * spec.height * spec.width +
           static_cast<std::size_t>(col) * spec.height + static_cast<std::size_t>(row);
}

namespace {

void check_shape(std::span<const double> features, const AugmentSpec& spec) {
    if (static_cast<int>(features.size()) != spec.pixel_count()) {
        throw std::invalid_argument("augment shape mismatch");
    }
}

}  // namespace

std::vector<double> hflip_image(std::span<const double> features, const AugmentSpec& spec) {
    check_shape(features, spec);
    std::vector<double> out(features.size());
    for (int ch = 0; ch < spec.channels; ++ch) {
        for (int col = 0; col < spec.width; ++col) {
            for (int row = 0; row < spec.height; ++row) {
                out[image_index(spec, ch, row, col)] =
                    features[image_index(spec, ch, row, spec.width - 1 - col)];
            }
        }
    }
    return out;
}

std::vector<double> vflip_image(std::span<const double> features, const AugmentSpec& spec) {
    check_shape(features, spec);
    std::vector<double> out(features.size());
    for (int ch = 0; ch < spec.channels; ++ch) {
        for (int col = 0; col < spec.width; ++col) {
            for (int row = 0; row < spec.height; ++row) {
                out[image_index(spec, ch, row, col)] =
                    features[image_index(spec, ch, spec.height - 1 - row, col)];
            }
        }
    }
    return out;
}

std::vector<double> shift_image(std::span<const double> features, const AugmentSpec& spec,
                                int dx, int dy) {
    check_shape(features, spec);
    std::vector<double> out(features.size(), 0.0);
    for (int ch = 0; ch < spec.channels; ++ch) {
        for (int col = 0; col < spec.width; ++col) {
            const int src_col = col - dx;
            if (src_col < 0 || src_col >= spec.width) {
                continue;
            }
            for (int row = 0; row < spec.height; ++row) {
                const int src_row = row - dy;
                if (src_row < 0 || src_row >= spec.height) {
                    continue;
                }
                out[image_index(spec, ch, row, col)] =
                    features[image_index(spec, ch, src_row, src_col)];
            }
        }
    }
    return out;
}

Example augment(const Example& example, const AugmentSpec& spec, Rng& rng) {
    spec.validate();
    check_shape(example.features, spec);

    // Fixed draw count per call keeps parallel per-example streams aligned.
    const bool do_hflip = rng.bernoulli(spec.p_hflip);
    const bool do_vflip = rng.bernoulli(spec.p_vflip);
    const int max_dx = static_cast<int>(std::floor(spec.max_shift_frac * spec.width));
    const int max_dy = static_cast<int>(std::floor(spec.max_shift_frac * spec.height));
    const int dx = -max_dx + static_cast<int>(rng.below(2 * max_dx + 1));
    const int dy = -max_dy + static_cast<int>(rng.below(2 * max_dy + 1));

    Example out = example;
    if (do_hflip) {
        out.features = hflip_image(out.features, spec);
    }
    if (do_vflip) {
        out.features = vflip_image(out.features, spec);
    }
    if (dx != 0 || dy != 0) {
        out.features = shift_image(out.features, spec, dx, dy);
    }
    return out;
}

}  // namespace selftrain
