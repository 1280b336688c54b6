#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace afec {

class LineProcess;

/// Dense float vector. Encoders hand these out unit-normalized.
class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}

    std::size_t dimension() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }
    std::span<const float> values() const noexcept { return values_; }
    std::vector<float>& mutable_values() noexcept { return values_; }
    double norm() const;

    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<float> values_;
};

/// Dot product with 64-bit accumulation in a fixed lane order, so the result
/// is bit-identical for (a, b) and (b, a) and across builds.
double dot(std::span<const float> a, std::span<const float> b);

/// Cosine similarity in [-1, 1]. Zero vectors score 0.
/// Throws std::invalid_argument on dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);
double cosine(std::span<const float> a, std::span<const float> b);

/// Scales to unit length in double precision; a zero vector is left alone.
EmbeddingVector normalized(std::span<const double> values);

/// Row-major id-tagged matrix of equal-width vectors.
class VectorMatrix {
public:
    VectorMatrix() = default;
    explicit VectorMatrix(std::size_t dim) : dim_(dim) {}

    void add(std::string id, std::span<const float> values);
    void add(std::string id, const EmbeddingVector& v) { add(std::move(id), v.values()); }
    void reserve(std::size_t n);

    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return ids_.empty(); }
    const std::string& id(std::size_t i) const { return ids_[i]; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }
    std::span<const float> row(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
    EmbeddingVector vector(std::size_t i) const;

    bool operator==(const VectorMatrix&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<float> data_;
};

struct EncoderBinding {
    std::string name;
    std::string version;
    std::size_t dimension = 0;

    bool operator==(const EncoderBinding&) const = default;
};

std::string describe(const EncoderBinding& binding);

class Encoder {
public:
    virtual ~Encoder() = default;
    virtual std::string name() const = 0;
    virtual std::string version() const = 0;
    virtual std::size_t dimension() const = 0;
    /// Unit-norm vector. Throws std::invalid_argument on empty text and
    /// EncodingError on backend failure.
    virtual EmbeddingVector encode(std::string_view text) const = 0;
    /// Element i equals encode(texts[i]). Failures name the element index.
    virtual std::vector<EmbeddingVector> encode_batch(std::span<const std::string> texts) const;
    /// Concurrent callers allowed by this encoder.
    virtual std::size_t max_concurrency() const { return 1; }

    EncoderBinding binding() const { return {name(), version(), dimension()}; }
};

/// Signed feature hashing of lowercased word unigrams and bigrams.
class HashingEncoder final : public Encoder {
public:
    explicit HashingEncoder(std::size_t dimension = 768);

    std::string name() const override { return "hashing"; }
    std::string version() const override { return "1"; }
    std::size_t dimension() const override { return dimension_; }
    EmbeddingVector encode(std::string_view text) const override;
    std::size_t max_concurrency() const override;

private:
    std::size_t dimension_;
};

/// Child process that reads one text per line and answers with
/// `dimension` whitespace-separated floats per line. Transport failures
/// restart the child and retry up to `max_attempts` times.
class SubprocessEncoder final : public Encoder {
public:
    SubprocessEncoder(std::string command, std::size_t dimension, std::string version = "1",
                      std::size_t max_attempts = 3);
    ~SubprocessEncoder() override;

    std::string name() const override { return "external:" + command_; }
    std::string version() const override { return version_; }
    std::size_t dimension() const override { return dimension_; }
    EmbeddingVector encode(std::string_view text) const override;

private:
    std::string command_;
    std::size_t dimension_;
    std::string version_;
    std::size_t max_attempts_;
    mutable std::mutex mutex_;
    mutable std::unique_ptr<LineProcess> process_;
};

/// "baseline" (alias "hashing") or "external:<command>".
std::unique_ptr<Encoder> make_encoder(std::string_view spec, std::size_t dimension = 768);

/// Throws IndexError naming both bindings when they differ.
void require_binding(const EncoderBinding& expected, const EncoderBinding& actual);

/// FNV-1a, 64-bit. Stable across platforms; used wherever a persistent hash is needed.
std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

// Vector cache file: header (magic, format version, encoder name, encoder
// version, dimension, count, id width) then `count` fixed-width records of
// a NUL-padded id followed by `dimension` little-endian float32 values.
struct VectorCache {
    EncoderBinding encoder;
    VectorMatrix vectors;
};

void write_vector_cache(const std::filesystem::path& path, const EncoderBinding& encoder, const VectorMatrix& vectors);
/// Throws LoadError on a bad header or truncated records.
VectorCache read_vector_cache(const std::filesystem::path& path);

}  // namespace afec
