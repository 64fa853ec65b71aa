#pragma once

// Domain containers and their on-disk interchange formats.
//
// All three binary formats are little-endian with an 8-byte ASCII magic:
//
//   FVEC0001  u32 n, u32 d, n*d float32 row-major
//   LBL00001  u32 n, u32 T, n u32 class ids
//   HEAD0001  u32 T, u32 d, float32 lambda, T*d float32 W row-major, T float32 b
//
// Features are stored as float32 and widened to double for every computation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spectra {

using ClassId = std::uint32_t;

class FeatureSet {
public:
    /// Throws InvalidArgument on empty shape or size mismatch, NonFiniteValue on NaN/Inf.
    FeatureSet(std::size_t n, std::size_t d, std::vector<float> data);

    std::size_t size() const noexcept { return n_; }
    std::size_t dim() const noexcept { return d_; }
    std::span<const float> row(std::size_t i) const { return {data_.data() + i * d_, d_}; }
    std::span<const float> data() const noexcept { return data_; }

    bool operator==(const FeatureSet&) const = default;

private:
    std::size_t n_;
    std::size_t d_;
    std::vector<float> data_;
};

class LabelVector {
public:
    /// Throws InvalidArgument when num_classes < 2 and ClassOutOfRange for an id >= num_classes.
    LabelVector(std::size_t num_classes, std::vector<ClassId> classes);

    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t size() const noexcept { return classes_.size(); }
    ClassId operator[](std::size_t i) const { return classes_[i]; }
    std::span<const ClassId> classes() const noexcept { return classes_; }

    bool operator==(const LabelVector&) const = default;

private:
    std::size_t num_classes_;
    std::vector<ClassId> classes_;
};

/// Final linear layer: logits = W f + b, with W stored row-major (one row per class).
/// lambda is the L2 strength the head was trained with; 0 marks an external head.
class LinearHead {
public:
    LinearHead(std::size_t num_classes, std::size_t dim, std::vector<double> weights,
               std::vector<double> bias, double lambda);

    /// All-zero head.
    static LinearHead zeros(std::size_t num_classes, std::size_t dim, double lambda = 0.0);

    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t dim() const noexcept { return dim_; }
    double lambda() const noexcept { return lambda_; }

    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> row(std::size_t k) const { return {weights_.data() + k * dim_, dim_}; }
    std::span<const double> bias() const noexcept { return bias_; }
    double bias(std::size_t k) const { return bias_[k]; }

    /// W f + b. Throws DimensionMismatch.
    std::vector<double> logits(std::span<const double> f) const;

    bool operator==(const LinearHead&) const = default;

private:
    std::size_t num_classes_;
    std::size_t dim_;
    std::vector<double> weights_;
    std::vector<double> bias_;
    double lambda_;
};

/// A test point to explain. predicted defaults to the argmax logit and
/// relative defaults to the predicted class (the general case).
struct Query {
    std::vector<double> features;
    std::optional<ClassId> predicted;
    std::optional<ClassId> relative;
};

/// Query with the class ids filled in and checked against a head.
struct ResolvedQuery {
    std::vector<double> features;
    ClassId predicted;
    ClassId relative;

    bool general() const noexcept { return predicted == relative; }
};

ResolvedQuery resolve(const LinearHead& head, const Query& q);

enum class SupportKind { General, Relative };

struct SupportSet {
    std::vector<std::size_t> indices;  // strictly increasing
    ResolvedQuery query;
    SupportKind kind;
};

/// Throws DimensionMismatch unless features, labels (and head) agree on n, d and T.
void check_consistent(const FeatureSet& fs, const LabelVector& lv);
void check_consistent(const FeatureSet& fs, const LabelVector& lv, const LinearHead& head);

std::vector<double> widen(std::span<const float> row);

FeatureSet load_feature_set(const std::filesystem::path& path);
void save_feature_set(const FeatureSet& fs, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_feature_set(const FeatureSet& fs);
FeatureSet decode_feature_set(std::span<const std::uint8_t> bytes);

LabelVector load_label_vector(const std::filesystem::path& path);
void save_label_vector(const LabelVector& lv, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_label_vector(const LabelVector& lv);
LabelVector decode_label_vector(std::span<const std::uint8_t> bytes);

/// Loaded heads carry float32-rounded parameters.
LinearHead load_linear_head(const std::filesystem::path& path);
void save_linear_head(const LinearHead& head, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_linear_head(const LinearHead& head);
LinearHead decode_linear_head(std::span<const std::uint8_t> bytes);

/// Optional JSON bundle description. Relative paths resolve against the
/// manifest's own directory.
struct DatasetManifest {
    std::optional<std::filesystem::path> features;
    std::optional<std::filesystem::path> labels;
    std::optional<std::filesystem::path> head;
    std::string name;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace spectra
