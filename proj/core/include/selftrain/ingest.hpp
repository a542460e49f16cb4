#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selftrain/data.hpp"
#include "selftrain/rng.hpp"

namespace selftrain {

// ----------------------------------------------------------------------
// STL-10 binary format. Per image: 3 channel planes stored contiguously
// (red, green, blue), each plane 96x96 in column-major order. Loaded
// features keep the file byte order, scaled to [0,1] by 1/255. Label bytes
// are 1-indexed on disk, 0-indexed in memory.
// ----------------------------------------------------------------------

inline constexpr int kStl10Side = 96;
inline constexpr int kStl10Channels = 3;
inline constexpr int kStl10FeatureDim = kStl10Side * kStl10Side * kStl10Channels;
inline constexpr int kStl10Classes = 10;

Dataset load_stl10(const std::string& images_path,
                   const std::optional<std::string>& labels_path);

/// Inverse of load_stl10: re-serializes a dataset with [0,1]-scaled byte
/// features back to the binary layout, bit-exactly.
void save_stl10(const Dataset& dataset, const std::string& images_path,
                const std::optional<std::string>& labels_path);

// ----------------------------------------------------------------------
// CSV: UTF-8, comma delimiter, '.' decimal separator, optional single
// header row (detected by a non-numeric first token). When labeled, the
// last column is an integer class index.
// ----------------------------------------------------------------------

Dataset load_csv(const std::string& path, bool labeled);
void save_csv(const Dataset& dataset, const std::string& path, bool with_labels);

// ----------------------------------------------------------------------
// Synthetic semi-supervised benchmark: c unit-covariance Gaussian clusters
// with means on a scaled simplex (circle fallback when the dimension is
// too small), plus optional out-of-distribution clusters contaminating the
// unlabeled pool at the same separation scale.
// ----------------------------------------------------------------------

struct SyntheticSpec {
    int num_classes = 10;
    int feature_dim = 32;
    int n_labeled = 500;
    int n_unlabeled = 20000;
    int n_test = 4000;
    double class_separation = 3.0;  // pairwise distance between cluster means
    double ood_fraction = 0.0;      // fraction of the pool drawn from extra clusters
    std::uint64_t seed = 0;

    void validate() const;
};

/// Hidden ground truth for pool examples, keyed by origin_id. Values are
/// generating-cluster indices; >= num_classes marks out-of-distribution.
/// Diagnostics only -- never visible to the training pipeline.
using HiddenLabels = std::map<std::int64_t, int>;

struct SyntheticData {
    Dataset labeled;
    Dataset unlabeled;
    Dataset test;
    HiddenLabels hidden;
};

SyntheticData gen_synthetic(const SyntheticSpec& spec);

// ----------------------------------------------------------------------
// Augmentation: independent horizontal/vertical flips and an integer pixel
// shift with zero padding. Operates on image features in the STL-10 layout
// (channel planes, column-major).
// ----------------------------------------------------------------------

struct AugmentSpec {
    double p_hflip = 0.0;
    double p_vflip = 0.0;
    double max_shift_frac = 0.0;  // of the image side, both axes
    int height = 0;
    int width = 0;
    int channels = 1;

    void validate() const;
    int pixel_count() const { return height * width * channels; }
};

/// Flat index of (channel, row, col) under the plane/column-major layout.
std::size_t image_index(const AugmentSpec& spec, int channel, int row, int col);

std::vector<double> hflip_image(std::span<const double> features, const AugmentSpec& spec);
std::vector<double> vflip_image(std::span<const double> features, const AugmentSpec& spec);
/// Translate by (dx, dy) pixels (positive = right/down), zero padding.
std::vector<double> shift_image(std::span<const double> features, const AugmentSpec& spec,
                                int dx, int dy);

/// Randomized augmentation. Label, provenance and origin_id pass through
/// untouched. Draw order is fixed (hflip, vflip, dx, dy), so a given rng
/// stream position fully determines the output.
Example augment(const Example& example, const AugmentSpec& spec, Rng& rng);

}  // namespace selftrain
