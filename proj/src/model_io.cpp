#include "uwbench/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "uwbench/error.hpp"

namespace uw::net {

namespace {

constexpr std::uint32_t kKindModel = 1;
constexpr std::uint32_t kKindExtractor = 2;
constexpr std::size_t kMagicLen = 6;
// Upper bound on any single extent read from disk.
constexpr std::int32_t kMaxExtent = 1 << 16;

class Writer {
public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    void conv(const ConvLayer& l) {
        i32(l.in_c);
        i32(l.out_c);
        i32(l.k);
        i32(static_cast<std::int32_t>(l.act));
        for (double v : l.kernel) f32(v);
        for (double v : l.bias) f32(v);
    }
    std::vector<std::uint8_t> finish() {
        u32(static_cast<std::uint32_t>(crc32(0L, bytes_.data(), static_cast<uInt>(bytes_.size()))));
        return std::move(bytes_);
    }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f32() { return std::bit_cast<float>(u32()); }

    std::int32_t extent(const char* what) {
        const std::int32_t v = i32();
        if (v < 1 || v > kMaxExtent) throw DimensionError(std::string("weight file: implausible ") + what);
        return v;
    }

    ConvLayer conv() {
        ConvLayer l;
        l.in_c = extent("input channel count");
        l.out_c = extent("output channel count");
        l.k = extent("kernel size");
        if (l.k % 2 == 0) throw DimensionError("weight file: even kernel size");
        const std::int32_t act = i32();
        if (act < 0 || act > 2) throw CorruptionError("weight file: unknown activation code");
        l.act = static_cast<Activation>(act);
        const std::size_t nk = static_cast<std::size_t>(l.out_c) * l.in_c * l.k * l.k;
        need(4 * (nk + static_cast<std::size_t>(l.out_c)));
        l.kernel.resize(nk);
        for (double& v : l.kernel) v = f32();
        l.bias.resize(static_cast<std::size_t>(l.out_c));
        for (double& v : l.bias) v = f32();
        return l;
    }

    bool done() const { return pos_ == size_; }

private:
    void need(std::size_t n) const {
        if (size_ - pos_ < n) throw CorruptionError("weight file truncated");
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

void write_header(Writer& w, std::uint32_t kind) {
    w.raw(kWeightMagic, kMagicLen - 1);
    w.raw(&kWeightVersion, 1);
    w.u32(kind);
}

// Checks magic, version and checksum; returns a reader positioned after the kind field.
Reader open_payload(const std::vector<std::uint8_t>& bytes, std::uint32_t expected_kind) {
    if (bytes.size() < kMagicLen) throw CorruptionError("weight file truncated");
    if (std::memcmp(bytes.data(), kWeightMagic, kMagicLen - 1) != 0) {
        throw FormatError("not a weight file (bad magic)");
    }
    if (bytes[kMagicLen - 1] != static_cast<std::uint8_t>(kWeightVersion)) {
        throw VersionError(std::string("unsupported weight file version '") + static_cast<char>(bytes[kMagicLen - 1]) +
                           "', expected '" + kWeightVersion + "'");
    }
    if (bytes.size() < kMagicLen + 8) throw CorruptionError("weight file truncated");
    const std::size_t body = bytes.size() - 4;
    Reader trailer(bytes.data() + body, 4);
    const std::uint32_t stored = trailer.u32();
    const auto actual = static_cast<std::uint32_t>(crc32(0L, bytes.data(), static_cast<uInt>(body)));
    if (stored != actual) throw CorruptionError("weight file checksum mismatch (truncated or damaged)");

    Reader r(bytes.data() + kMagicLen, body - kMagicLen);
    const std::uint32_t kind = r.u32();
    if (kind != expected_kind) {
        throw FormatError(kind == kKindModel ? "weight file holds a Water-Net model, not a feature extractor"
                                             : "weight file does not hold a Water-Net model");
    }
    return r;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const WaterNetModel& model) {
    validate_model(model);
    Writer w;
    write_header(w, kKindModel);
    w.u32(static_cast<std::uint32_t>(model.rng_seed & 0xffffffffu));
    w.u32(static_cast<std::uint32_t>(model.rng_seed >> 32));
    w.u32(static_cast<std::uint32_t>(model.trunk.size()));
    for (const auto& branch : model.ftu) w.u32(static_cast<std::uint32_t>(branch.size()));
    for (const ConvLayer* l : model.layers()) w.conv(*l);
    return w.finish();
}

WaterNetModel deserialize_model(const std::vector<std::uint8_t>& bytes) {
    Reader r = open_payload(bytes, kKindModel);
    WaterNetModel m;
    const std::uint64_t lo = r.u32();
    const std::uint64_t hi = r.u32();
    m.rng_seed = lo | (hi << 32);
    const std::uint32_t trunk = r.u32();
    std::array<std::uint32_t, kBranches> ftu{};
    for (auto& n : ftu) n = r.u32();
    if (trunk > 1024 || ftu[0] > 1024 || ftu[1] > 1024 || ftu[2] > 1024) {
        throw DimensionError("weight file: implausible layer count");
    }
    for (std::uint32_t i = 0; i < trunk; ++i) m.trunk.push_back(r.conv());
    m.head = r.conv();
    for (int b = 0; b < kBranches; ++b) {
        for (std::uint32_t i = 0; i < ftu[b]; ++i) m.ftu[b].push_back(r.conv());
    }
    if (!r.done()) throw CorruptionError("weight file has trailing bytes");
    validate_model(m);
    return m;
}

std::vector<std::uint8_t> serialize_extractor(const FeatureExtractor& fx) {
    validate_extractor(fx);
    Writer w;
    write_header(w, kKindExtractor);
    w.u32(static_cast<std::uint32_t>(fx.stages.size()));
    w.u32(static_cast<std::uint32_t>(fx.tap_index));
    for (const auto& s : fx.stages) {
        w.u32(static_cast<std::uint32_t>(s.kind));
        if (s.kind == FeatureExtractor::Stage::Kind::conv) w.conv(s.conv);
    }
    return w.finish();
}

FeatureExtractor deserialize_extractor(const std::vector<std::uint8_t>& bytes) {
    Reader r = open_payload(bytes, kKindExtractor);
    FeatureExtractor fx;
    const std::uint32_t count = r.u32();
    if (count == 0 || count > 1024) throw DimensionError("weight file: implausible stage count");
    fx.tap_index = static_cast<int>(r.u32());
    for (std::uint32_t i = 0; i < count; ++i) {
        FeatureExtractor::Stage s;
        const std::uint32_t kind = r.u32();
        if (kind > 1) throw CorruptionError("weight file: unknown stage kind");
        s.kind = static_cast<FeatureExtractor::Stage::Kind>(kind);
        if (s.kind == FeatureExtractor::Stage::Kind::conv) s.conv = r.conv();
        fx.stages.push_back(std::move(s));
    }
    if (!r.done()) throw CorruptionError("weight file has trailing bytes");
    validate_extractor(fx);
    return fx;
}

void save_model(const WaterNetModel& model, const std::filesystem::path& path) {
    write_file(serialize_model(model), path);
}

WaterNetModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

void save_extractor(const FeatureExtractor& fx, const std::filesystem::path& path) {
    write_file(serialize_extractor(fx), path);
}

FeatureExtractor load_extractor(const std::filesystem::path& path) { return deserialize_extractor(read_file(path)); }

}  // namespace uw::net
