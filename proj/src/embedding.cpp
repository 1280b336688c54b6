#include "afec/embedding.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "afec/errors.hpp"
#include "afec/parallel.hpp"
#include "afec/subprocess.hpp"
#include "afec/text.hpp"

namespace afec {

namespace {

constexpr char kCacheMagic[8] = {'A', 'F', 'E', 'C', 'V', 'E', 'C', '\0'};
constexpr std::uint32_t kCacheFormat = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

struct Reader {
    std::istream& in;
    const std::filesystem::path& path;

    void bytes(char* dst, std::size_t n) {
        in.read(dst, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(in.gcount()) != n) throw LoadError("truncated vector cache: " + path.string());
    }
    std::uint32_t u32() {
        unsigned char b[4];
        bytes(reinterpret_cast<char*>(b), 4);
        return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    std::uint64_t u64() {
        unsigned char b[8];
        bytes(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
        return v;
    }
    std::string str(std::size_t limit) {
        const std::uint32_t n = u32();
        if (n > limit) throw LoadError("corrupt vector cache header: " + path.string());
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
};

}  // namespace

double EmbeddingVector::norm() const { return std::sqrt(dot(values_, values_)); }

// Lanes are independent and reduced in a fixed order, so every clone returns the same bits.
__attribute__((target_clones("avx512f", "avx2", "default")))
double dot(std::span<const float> a, std::span<const float> b) {
    constexpr std::size_t kLanes = 8;
    std::array<double, kLanes> acc{};
    const std::size_t n = std::min(a.size(), b.size());
    const std::size_t full = n - n % kLanes;
    for (std::size_t i = 0; i < full; i += kLanes)
        for (std::size_t k = 0; k < kLanes; ++k)
            acc[k] += static_cast<double>(a[i + k]) * static_cast<double>(b[i + k]);
    for (std::size_t i = full; i < n; ++i) acc[i - full] += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

double cosine(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) { return cosine(a.values(), b.values()); }

EmbeddingVector normalized(std::span<const double> values) {
    double sq = 0.0;
    for (double v : values) sq += v * v;
    std::vector<float> out(values.size());
    const double scale = sq > 0.0 ? 1.0 / std::sqrt(sq) : 1.0;
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<float>(values[i] * scale);
    return EmbeddingVector(std::move(out));
}

void VectorMatrix::add(std::string id, std::span<const float> values) {
    if (ids_.empty() && dim_ == 0) dim_ = values.size();
    if (values.size() != dim_)
        throw std::invalid_argument("VectorMatrix: expected dimension " + std::to_string(dim_) + ", got " +
                                    std::to_string(values.size()));
    ids_.push_back(std::move(id));
    data_.insert(data_.end(), values.begin(), values.end());
}

void VectorMatrix::reserve(std::size_t n) {
    ids_.reserve(n);
    data_.reserve(n * dim_);
}

EmbeddingVector VectorMatrix::vector(std::size_t i) const {
    auto r = row(i);
    return EmbeddingVector(std::vector<float>(r.begin(), r.end()));
}

std::string describe(const EncoderBinding& b) {
    return b.name + "@" + b.version + "/" + std::to_string(b.dimension);
}

std::vector<EmbeddingVector> Encoder::encode_batch(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out(texts.size());
    parallel_blocks(texts.size(), std::min(max_concurrency(), default_workers()), [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            try {
                out[i] = encode(texts[i]);
            } catch (const std::invalid_argument& err) {
                throw std::invalid_argument("element " + std::to_string(i) + ": " + err.what());
            } catch (const EncodingError& err) {
                throw EncodingError("element " + std::to_string(i) + ": " + err.what(), err.attempts(),
                                    err.retryable());
            }
        }
    });
    return out;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

HashingEncoder::HashingEncoder(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw std::invalid_argument("HashingEncoder: dimension must be positive");
}

std::size_t HashingEncoder::max_concurrency() const { return default_workers(); }

EmbeddingVector HashingEncoder::encode(std::string_view text) const {
    if (trim(text).empty()) throw std::invalid_argument("encode: empty text");
    std::vector<std::string> words;
    for (auto& t : tokenize(text)) words.push_back(to_lower(t));

    std::vector<double> acc(dimension_, 0.0);
    auto add_feature = [&](std::string_view feature) {
        const std::uint64_t h = fnv1a64(feature);
        const double sign = (h >> 63) ? -1.0 : 1.0;
        acc[h % dimension_] += sign;
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
        add_feature("u:" + words[i]);
        if (i + 1 < words.size()) add_feature("b:" + words[i] + ' ' + words[i + 1]);
    }
    if (std::all_of(acc.begin(), acc.end(), [](double v) { return v == 0.0; })) acc[0] = 1.0;
    return normalized(acc);
}

SubprocessEncoder::SubprocessEncoder(std::string command, std::size_t dimension, std::string version,
                                     std::size_t max_attempts)
    : command_(std::move(command)),
      dimension_(dimension),
      version_(std::move(version)),
      max_attempts_(std::max<std::size_t>(1, max_attempts)) {
    if (dimension == 0) throw std::invalid_argument("SubprocessEncoder: dimension must be positive");
}

SubprocessEncoder::~SubprocessEncoder() = default;

EmbeddingVector SubprocessEncoder::encode(std::string_view text) const {
    if (trim(text).empty()) throw std::invalid_argument("encode: empty text");
    std::lock_guard lock(mutex_);
    std::string last_error;
    for (std::size_t attempt = 1; attempt <= max_attempts_; ++attempt) {
        std::string reply;
        try {
            if (!process_) process_ = std::make_unique<LineProcess>(command_);
            reply = process_->request(text);
        } catch (const std::exception& e) {
            last_error = e.what();
            process_.reset();
            continue;
        }
        std::vector<double> values;
        values.reserve(dimension_);
        const char* p = reply.data();
        const char* end = p + reply.size();
        while (p < end) {
            while (p < end && (*p == ' ' || *p == '\t' || *p == ',')) ++p;
            if (p == end) break;
            double v = 0.0;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{}) throw EncodingError("external encoder sent a non-numeric value", attempt, false);
            values.push_back(v);
            p = next;
        }
        if (values.size() != dimension_)
            throw EncodingError("external encoder sent " + std::to_string(values.size()) + " values, expected " +
                                    std::to_string(dimension_),
                                attempt, false);
        return normalized(values);
    }
    throw EncodingError("external encoder unavailable after " + std::to_string(max_attempts_) +
                            " attempts: " + last_error,
                        max_attempts_, true);
}

std::unique_ptr<Encoder> make_encoder(std::string_view spec, std::size_t dimension) {
    if (spec == "baseline" || spec == "hashing") return std::make_unique<HashingEncoder>(dimension);
    constexpr std::string_view external = "external:";
    if (spec.starts_with(external) && spec.size() > external.size())
        return std::make_unique<SubprocessEncoder>(std::string(spec.substr(external.size())), dimension);
    throw std::invalid_argument("unknown encoder: " + std::string(spec));
}

void require_binding(const EncoderBinding& expected, const EncoderBinding& actual) {
    if (expected != actual)
        throw IndexError("encoder mismatch: graph was built with " + describe(expected) + ", query uses " +
                         describe(actual));
}

void write_vector_cache(const std::filesystem::path& path, const EncoderBinding& encoder, const VectorMatrix& vectors) {
    if (!vectors.empty() && vectors.dim() != encoder.dimension)
        throw std::invalid_argument("vector cache: matrix dimension differs from encoder dimension");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write vector cache: " + path.string());
    std::size_t id_width = 0;
    for (const auto& id : vectors.ids()) id_width = std::max(id_width, id.size());

    out.write(kCacheMagic, sizeof kCacheMagic);
    put_u32(out, kCacheFormat);
    put_string(out, encoder.name);
    put_string(out, encoder.version);
    put_u32(out, static_cast<std::uint32_t>(encoder.dimension));
    put_u64(out, vectors.size());
    put_u32(out, static_cast<std::uint32_t>(id_width));
    std::string id_field;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        id_field.assign(id_width, '\0');
        std::memcpy(id_field.data(), vectors.id(i).data(), vectors.id(i).size());
        out.write(id_field.data(), static_cast<std::streamsize>(id_width));
        for (float f : vectors.row(i)) put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
    if (!out) throw std::runtime_error("failed writing vector cache: " + path.string());
}

VectorCache read_vector_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open vector cache: " + path.string());
    Reader r{in, path};
    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kCacheMagic, sizeof magic) != 0) throw LoadError("not a vector cache: " + path.string());
    const std::uint32_t format = r.u32();
    if (format != kCacheFormat)
        throw LoadError("vector cache format " + std::to_string(format) + " unsupported (expected " +
                        std::to_string(kCacheFormat) + ")");
    VectorCache cache;
    cache.encoder.name = r.str(1 << 16);
    cache.encoder.version = r.str(1 << 16);
    cache.encoder.dimension = r.u32();
    const std::uint64_t count = r.u64();
    const std::uint32_t id_width = r.u32();
    cache.vectors = VectorMatrix(cache.encoder.dimension);
    cache.vectors.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 24)));
    std::string id(id_width, '\0');
    std::vector<float> row(cache.encoder.dimension);
    for (std::uint64_t i = 0; i < count; ++i) {
        r.bytes(id.data(), id_width);
        for (auto& f : row) f = std::bit_cast<float>(r.u32());
        cache.vectors.add(std::string(id.c_str()), row);
    }
    return cache;
}

}  // namespace afec
