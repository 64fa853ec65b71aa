#include "spectra/core_data.hpp"

#include "spectra/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace spectra {

namespace {

constexpr std::size_t kMagicSize = 8;
constexpr char kFeatureMagic[] = "FVEC0001";
constexpr char kLabelMagic[] = "LBL00001";
constexpr char kHeadMagic[] = "HEAD0001";

std::string index_msg(std::string_view what, std::size_t index)
{
    return std::string(what) + " at index " + std::to_string(index);
}

class ByteWriter {
public:
    explicit ByteWriter(std::size_t reserve) { bytes_.reserve(reserve); }

    void magic(const char* m) { bytes_.insert(bytes_.end(), m, m + kMagicSize); }

    void u32(std::uint32_t v)
    {
        for (int shift = 0; shift < 32; shift += 8)
            bytes_.push_back(static_cast<std::uint8_t>((v >> shift) & 0xffu));
    }

    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    void expect_magic(const char* m)
    {
        if (bytes_.size() < kMagicSize)
            throw Error(ErrorCode::TruncatedFile,
                        "file shorter than the 8-byte magic (" + std::to_string(bytes_.size()) +
                            " bytes)",
                        bytes_.size());
        if (std::memcmp(bytes_.data(), m, kMagicSize) != 0)
            throw Error(ErrorCode::BadMagic,
                        "expected magic " + std::string(m, kMagicSize) + ", found " +
                            printable(bytes_.first(kMagicSize)),
                        0);
        pos_ = kMagicSize;
    }

    std::uint32_t u32()
    {
        if (pos_ + 4 > bytes_.size())
            throw Error(ErrorCode::TruncatedFile, "header cut short at byte " + std::to_string(pos_),
                        pos_);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }

    /// Enforces that the payload after the header is exactly `payload` bytes.
    void expect_remaining(std::uint64_t payload) const
    {
        const std::uint64_t expected = pos_ + payload;
        if (bytes_.size() != expected)
            throw Error(ErrorCode::TruncatedFile,
                        "file is " + std::to_string(bytes_.size()) + " bytes, header implies " +
                            std::to_string(expected),
                        std::min<std::uint64_t>(bytes_.size(), expected));
    }

    std::size_t position() const noexcept { return pos_; }

private:
    static std::string printable(std::span<const std::uint8_t> s)
    {
        std::string out;
        for (auto c : s)
            out.push_back(c >= 0x20 && c < 0x7f ? static_cast<char>(c) : '?');
        return out;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::uint32_t checked_u32(std::size_t v, std::string_view what)
{
    if (v > 0xffffffffu)
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " exceeds u32 range");
    return static_cast<std::uint32_t>(v);
}

template <typename T>
void check_finite(std::span<const T> values, std::string_view what)
{
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw Error(ErrorCode::NonFiniteValue, index_msg(std::string(what) + " is not finite", i),
                        i);
}

} // namespace

FeatureSet::FeatureSet(std::size_t n, std::size_t d, std::vector<float> data)
    : n_(n), d_(d), data_(std::move(data))
{
    if (n_ == 0 || d_ == 0)
        throw Error(ErrorCode::InvalidArgument, "feature set needs n >= 1 and d >= 1");
    if (data_.size() != n_ * d_)
        throw Error(ErrorCode::InvalidArgument,
                    "feature data has " + std::to_string(data_.size()) + " values, expected " +
                        std::to_string(n_ * d_));
    check_finite<float>(data_, "feature value");
}

LabelVector::LabelVector(std::size_t num_classes, std::vector<ClassId> classes)
    : num_classes_(num_classes), classes_(std::move(classes))
{
    if (num_classes_ < 2)
        throw Error(ErrorCode::InvalidArgument, "label vector needs at least 2 classes");
    for (std::size_t i = 0; i < classes_.size(); ++i)
        if (classes_[i] >= num_classes_)
            throw Error(ErrorCode::ClassOutOfRange,
                        index_msg("class id " + std::to_string(classes_[i]) + " >= T=" +
                                      std::to_string(num_classes_),
                                  i),
                        i);
}

LinearHead::LinearHead(std::size_t num_classes, std::size_t dim, std::vector<double> weights,
                       std::vector<double> bias, double lambda)
    : num_classes_(num_classes), dim_(dim), weights_(std::move(weights)), bias_(std::move(bias)),
      lambda_(lambda)
{
    if (num_classes_ < 2 || dim_ == 0)
        throw Error(ErrorCode::InvalidArgument, "head needs T >= 2 and d >= 1");
    if (weights_.size() != num_classes_ * dim_ || bias_.size() != num_classes_)
        throw Error(ErrorCode::DimensionMismatch, "head weight/bias sizes do not match T x d");
    check_finite<double>(weights_, "head weight");
    check_finite<double>(bias_, "head bias");
    if (!std::isfinite(lambda_) || lambda_ < 0.0)
        throw Error(ErrorCode::InvalidArgument, "head lambda must be finite and >= 0");
}

LinearHead LinearHead::zeros(std::size_t num_classes, std::size_t dim, double lambda)
{
    return LinearHead(num_classes, dim, std::vector<double>(num_classes * dim, 0.0),
                      std::vector<double>(num_classes, 0.0), lambda);
}

std::vector<double> LinearHead::logits(std::span<const double> f) const
{
    if (f.size() != dim_)
        throw Error(ErrorCode::DimensionMismatch,
                    "feature vector has dimension " + std::to_string(f.size()) + ", head expects " +
                        std::to_string(dim_));
    std::vector<double> z(num_classes_);
    for (std::size_t k = 0; k < num_classes_; ++k) {
        double acc = bias_[k];
        const auto w = row(k);
        for (std::size_t j = 0; j < dim_; ++j)
            acc += w[j] * f[j];
        z[k] = acc;
    }
    return z;
}

ResolvedQuery resolve(const LinearHead& head, const Query& q)
{
    check_finite<double>(q.features, "query feature");
    const auto z = head.logits(q.features);
    ClassId c = 0;
    if (q.predicted) {
        c = *q.predicted;
    } else {
        // Lowest id wins ties.
        for (std::size_t k = 1; k < z.size(); ++k)
            if (z[k] > z[c])
                c = static_cast<ClassId>(k);
    }
    const ClassId k = q.relative.value_or(c);
    if (c >= head.num_classes() || k >= head.num_classes())
        throw Error(ErrorCode::ClassOutOfRange,
                    "query class (c=" + std::to_string(c) + ", k=" + std::to_string(k) +
                        ") out of range for T=" + std::to_string(head.num_classes()));
    return ResolvedQuery{q.features, c, k};
}

void check_consistent(const FeatureSet& fs, const LabelVector& lv)
{
    if (fs.size() != lv.size())
        throw Error(ErrorCode::DimensionMismatch,
                    "feature set has " + std::to_string(fs.size()) + " rows, labels have " +
                        std::to_string(lv.size()));
}

void check_consistent(const FeatureSet& fs, const LabelVector& lv, const LinearHead& head)
{
    check_consistent(fs, lv);
    if (fs.dim() != head.dim())
        throw Error(ErrorCode::DimensionMismatch,
                    "features have d=" + std::to_string(fs.dim()) + ", head has d=" +
                        std::to_string(head.dim()));
    if (lv.num_classes() != head.num_classes())
        throw Error(ErrorCode::DimensionMismatch,
                    "labels have T=" + std::to_string(lv.num_classes()) + ", head has T=" +
                        std::to_string(head.num_classes()));
}

std::vector<double> widen(std::span<const float> row)
{
    return {row.begin(), row.end()};
}

// --- FVEC ---

std::vector<std::uint8_t> encode_feature_set(const FeatureSet& fs)
{
    ByteWriter w(16 + 4 * fs.data().size());
    w.magic(kFeatureMagic);
    w.u32(checked_u32(fs.size(), "n"));
    w.u32(checked_u32(fs.dim(), "d"));
    for (float v : fs.data())
        w.f32(v);
    return w.take();
}

FeatureSet decode_feature_set(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    r.expect_magic(kFeatureMagic);
    const std::uint64_t n = r.u32();
    const std::uint64_t d = r.u32();
    r.expect_remaining(4 * n * d);
    std::vector<float> data(n * d);
    for (auto& v : data)
        v = r.f32();
    return FeatureSet(n, d, std::move(data));
}

// --- LBL ---

std::vector<std::uint8_t> encode_label_vector(const LabelVector& lv)
{
    ByteWriter w(16 + 4 * lv.size());
    w.magic(kLabelMagic);
    w.u32(checked_u32(lv.size(), "n"));
    w.u32(checked_u32(lv.num_classes(), "T"));
    for (ClassId c : lv.classes())
        w.u32(c);
    return w.take();
}

LabelVector decode_label_vector(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    r.expect_magic(kLabelMagic);
    const std::uint64_t n = r.u32();
    const std::uint64_t t = r.u32();
    r.expect_remaining(4 * n);
    std::vector<ClassId> classes(n);
    for (auto& c : classes)
        c = r.u32();
    return LabelVector(t, std::move(classes));
}

// --- HEAD ---

std::vector<std::uint8_t> encode_linear_head(const LinearHead& head)
{
    ByteWriter w(20 + 4 * (head.weights().size() + head.bias().size()));
    w.magic(kHeadMagic);
    w.u32(checked_u32(head.num_classes(), "T"));
    w.u32(checked_u32(head.dim(), "d"));
    w.f32(static_cast<float>(head.lambda()));
    for (double v : head.weights())
        w.f32(static_cast<float>(v));
    for (double v : head.bias())
        w.f32(static_cast<float>(v));
    return w.take();
}

LinearHead decode_linear_head(std::span<const std::uint8_t> bytes)
{
    ByteReader r(bytes);
    r.expect_magic(kHeadMagic);
    const std::uint64_t t = r.u32();
    const std::uint64_t d = r.u32();
    const std::size_t lambda_offset = r.position();
    const float lambda = r.f32();
    r.expect_remaining(4 * (t * d + t));
    if (!std::isfinite(lambda))
        throw Error(ErrorCode::NonFiniteValue, "head lambda is not finite", lambda_offset);
    std::vector<double> weights(t * d);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const float v = r.f32();
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteValue, index_msg("head weight is not finite", i), i);
        weights[i] = v;
    }
    std::vector<double> bias(t);
    for (std::size_t i = 0; i < bias.size(); ++i) {
        const float v = r.f32();
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteValue, index_msg("head bias is not finite", i), i);
        bias[i] = v;
    }
    return LinearHead(t, d, std::move(weights), std::move(bias), lambda);
}

// --- files ---

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad())
        throw Error(ErrorCode::IoError, "read failed on " + path.string());
    return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorCode::IoError, "write failed on " + path.string());
}

FeatureSet load_feature_set(const std::filesystem::path& path)
{
    return decode_feature_set(read_file_bytes(path));
}

void save_feature_set(const FeatureSet& fs, const std::filesystem::path& path)
{
    write_file_bytes(path, encode_feature_set(fs));
}

LabelVector load_label_vector(const std::filesystem::path& path)
{
    return decode_label_vector(read_file_bytes(path));
}

void save_label_vector(const LabelVector& lv, const std::filesystem::path& path)
{
    write_file_bytes(path, encode_label_vector(lv));
}

LinearHead load_linear_head(const std::filesystem::path& path)
{
    return decode_linear_head(read_file_bytes(path));
}

void save_linear_head(const LinearHead& head, const std::filesystem::path& path)
{
    write_file_bytes(path, encode_linear_head(head));
}

// --- manifest ---

DatasetManifest load_manifest(const std::filesystem::path& path)
{
    const auto bytes = read_file_bytes(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidArgument,
                    "manifest " + path.string() + " is not valid JSON: " + e.what(), e.byte);
    }
    if (!j.is_object())
        throw Error(ErrorCode::InvalidArgument, "manifest must be a JSON object");

    const auto base = path.parent_path();
    auto entry = [&](const char* key) -> std::optional<std::filesystem::path> {
        if (!j.contains(key) || j[key].is_null())
            return std::nullopt;
        if (!j[key].is_string())
            throw Error(ErrorCode::InvalidArgument, std::string("manifest field '") + key +
                                                        "' must be a string");
        std::filesystem::path p = j[key].get<std::string>();
        return p.is_relative() ? base / p : p;
    };

    DatasetManifest m;
    m.features = entry("features");
    m.labels = entry("labels");
    m.head = entry("head");
    if (j.contains("name") && j["name"].is_string())
        m.name = j["name"].get<std::string>();
    return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path)
{
    nlohmann::json j = nlohmann::json::object();
    if (manifest.features)
        j["features"] = manifest.features->generic_string();
    if (manifest.labels)
        j["labels"] = manifest.labels->generic_string();
    if (manifest.head)
        j["head"] = manifest.head->generic_string();
    j["name"] = manifest.name;
    const auto text = j.dump(2) + "\n";
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

} // namespace spectra
