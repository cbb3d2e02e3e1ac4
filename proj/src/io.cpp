#include "rvqstream/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rvqstream/version.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts unsupported");

namespace rvqstream::io {

namespace {

constexpr char kFeatureMagic[4] = {'F', 'E', 'A', '1'};
constexpr char kStackMagic[4] = {'R', 'V', 'Q', '1'};
constexpr char kTokenMagic[4] = {'T', 'O', 'K', '1'};

void append_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}

template <typename T>
void append_pod(std::string& out, T value) {
    append_bytes(out, &value, sizeof(value));
}

class Cursor {
  public:
    Cursor(const std::string& bytes, const std::string& what)
        : bytes_(bytes), what_(what) {}

    void read(void* dst, std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw FormatError(what_ + ": truncated file");
        }
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    template <typename T>
    T pod() {
        T v;
        read(&v, sizeof(v));
        return v;
    }

    void expect_magic(const char magic[4]) {
        char m[4];
        read(m, 4);
        if (std::memcmp(m, magic, 4) != 0) {
            throw FormatError(what_ + ": bad magic");
        }
    }

    bool at_end() const { return pos_ == bytes_.size(); }

  private:
    const std::string& bytes_;
    std::string what_;
    std::size_t pos_ = 0;
};

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    std::error_code exists_ec;
    const auto status = std::filesystem::status(path, exists_ec);
    if (!exists_ec && std::filesystem::exists(status) &&
        !std::filesystem::is_regular_file(status)) {
        // Devices, FIFOs and the like must not be replaced by rename.
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw IoError("cannot open for write: " + path.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        return;
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot open for write: " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw IoError("write failed: " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw IoError("rename failed: " + path.string() + ": " + ec.message());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open: " + path.string());
    }
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    return bytes;
}

// ---- feature files ------------------------------------------------------

void write_features(const std::filesystem::path& path, const FrameSeq& seq) {
    std::string out;
    out.reserve(16 + seq.raw().size() * sizeof(float));
    append_bytes(out, kFeatureMagic, 4);
    append_pod<std::uint32_t>(out, static_cast<std::uint32_t>(seq.dim()));
    append_pod<std::uint64_t>(out, seq.frames());
    append_bytes(out, seq.data(), seq.raw().size() * sizeof(float));
    write_file_atomic(path, out);
}

FrameSeq read_features(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    Cursor c(bytes, "feature file " + path.string());
    c.expect_magic(kFeatureMagic);
    const auto dim = c.pod<std::uint32_t>();
    const auto frames = c.pod<std::uint64_t>();
    if (dim == 0) {
        throw FormatError("feature file: zero dim");
    }
    FrameSeq seq(frames, dim);
    c.read(seq.data(), seq.raw().size() * sizeof(float));
    if (!c.at_end()) {
        throw FormatError("feature file: trailing bytes");
    }
    return seq;
}

// ---- codebook stacks ----------------------------------------------------

void write_stack(const std::filesystem::path& path, const RvqStack& stack,
                 const StackMeta& meta) {
    stack.validate();
    const std::uint32_t k = stack.layers[0].size;
    const std::uint32_t d = stack.dim;
    for (const Codebook& cb : stack.layers) {
        if (cb.size != k) {
            throw ConfigError("write_stack: container requires uniform K");
        }
    }
    std::string out;
    append_bytes(out, kStackMagic, 4);
    append_pod<std::uint32_t>(out, k);
    append_pod<std::uint32_t>(out, d);
    append_pod<std::uint32_t>(out, static_cast<std::uint32_t>(stack.layers.size()));
    append_pod<std::uint64_t>(out, stack.seed);
    for (const Codebook& cb : stack.layers) {
        append_bytes(out, cb.entries.data(), cb.entries.size() * sizeof(float));
    }
    write_file_atomic(path, out);

    nlohmann::json j;
    j["schema_version"] = {{"major", RVQSTREAM_SCHEMA_MAJOR}, {"minor", RVQSTREAM_SCHEMA_MINOR}};
    j["tool_version"] = meta.tool_version.empty() ? RVQSTREAM_VERSION : meta.tool_version;
    j["seed"] = meta.seed;
    j["epochs"] = meta.epochs;
    j["ema_decay"] = meta.ema_decay;
    j["dead_code_rel_threshold"] = meta.dead_code_rel_threshold;
    j["codebook_size"] = k;
    j["dim"] = d;
    j["depth"] = stack.layers.size();
    j["frame_rate_hz"] = stack.frame_rate_hz;
    j["final_distortion"] = meta.final_distortion;
    write_file_atomic(path.string() + ".json", j.dump(2) + "\n");
}

RvqStack read_stack(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    Cursor c(bytes, "codebook file " + path.string());
    c.expect_magic(kStackMagic);
    const auto k = c.pod<std::uint32_t>();
    const auto d = c.pod<std::uint32_t>();
    const auto depth = c.pod<std::uint32_t>();
    const auto seed = c.pod<std::uint64_t>();
    if (k == 0 || d == 0 || depth == 0 || depth > 64) {
        throw FormatError("codebook file: implausible header");
    }
    RvqStack stack;
    stack.dim = d;
    stack.seed = seed;
    for (std::uint32_t layer = 0; layer < depth; ++layer) {
        Codebook cb(static_cast<int>(layer), k, d);
        c.read(cb.entries.data(), cb.entries.size() * sizeof(float));
        stack.layers.push_back(std::move(cb));
    }
    if (!c.at_end()) {
        throw FormatError("codebook file: trailing bytes");
    }
    // Sidecar is optional on read; frame rate defaults when absent.
    const std::filesystem::path side = path.string() + ".json";
    if (std::filesystem::exists(side)) {
        const auto j = nlohmann::json::parse(read_file(side));
        if (j.contains("schema_version") &&
            j["schema_version"].value("major", RVQSTREAM_SCHEMA_MAJOR) != RVQSTREAM_SCHEMA_MAJOR) {
            throw FormatError("codebook sidecar: unsupported schema major version");
        }
        stack.frame_rate_hz = j.value("frame_rate_hz", kDefaultFrameRateHz);
    }
    stack.validate();
    return stack;
}

StackMeta read_stack_meta(const std::filesystem::path& path) {
    const auto j = nlohmann::json::parse(read_file(path.string() + ".json"));
    if (j.contains("schema_version") &&
        j["schema_version"].value("major", RVQSTREAM_SCHEMA_MAJOR) != RVQSTREAM_SCHEMA_MAJOR) {
        throw FormatError("codebook sidecar: unsupported schema major version");
    }
    StackMeta meta;
    meta.tool_version = j.value("tool_version", "");
    meta.seed = j.value("seed", std::uint64_t{0});
    meta.epochs = j.value("epochs", 0u);
    meta.ema_decay = j.value("ema_decay", 0.0);
    meta.dead_code_rel_threshold = j.value("dead_code_rel_threshold", 0.0);
    meta.final_distortion = j.value("final_distortion", std::vector<double>{});
    return meta;
}

// ---- token streams ------------------------------------------------------

void write_tokens(const std::filesystem::path& path, const TokenStream& stream) {
    std::string out;
    out.reserve(24 + stream.frames.size() * kNumLayers * sizeof(std::uint16_t));
    append_bytes(out, kTokenMagic, 4);
    append_pod<std::uint32_t>(out, stream.depth);
    append_pod<double>(out, stream.frame_rate_hz);
    append_pod<std::uint64_t>(out, stream.frames.size());
    for (const CodeFrame& f : stream.frames) {
        append_bytes(out, f.codes.data(), f.codes.size() * sizeof(std::uint16_t));
    }
    write_file_atomic(path, out);
}

TokenStream read_tokens(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    Cursor c(bytes, "token file " + path.string());
    c.expect_magic(kTokenMagic);
    TokenStream stream;
    stream.depth = c.pod<std::uint32_t>();
    stream.frame_rate_hz = c.pod<double>();
    const auto count = c.pod<std::uint64_t>();
    if (stream.depth == 0 || stream.depth > kNumLayers) {
        throw FormatError("token file: bad depth");
    }
    stream.frames.resize(count);
    for (CodeFrame& f : stream.frames) {
        c.read(f.codes.data(), f.codes.size() * sizeof(std::uint16_t));
    }
    if (!c.at_end()) {
        throw FormatError("token file: trailing bytes");
    }
    return stream;
}

TokenReader::TokenReader(const std::filesystem::path& path) {
    file_ = std::fopen(path.string().c_str(), "rb");
    if (file_ == nullptr) {
        throw IoError("cannot open: " + path.string());
    }
    char magic[4];
    std::uint32_t depth = 0;
    double rate = 0.0;
    std::uint64_t count = 0;
    if (std::fread(magic, 1, 4, file_) != 4 || std::memcmp(magic, kTokenMagic, 4) != 0 ||
        std::fread(&depth, sizeof(depth), 1, file_) != 1 ||
        std::fread(&rate, sizeof(rate), 1, file_) != 1 ||
        std::fread(&count, sizeof(count), 1, file_) != 1) {
        std::fclose(file_);
        file_ = nullptr;
        throw FormatError("token file: bad header: " + path.string());
    }
    if (depth == 0 || depth > kNumLayers) {
        std::fclose(file_);
        file_ = nullptr;
        throw FormatError("token file: bad depth");
    }
    depth_ = depth;
    frame_rate_hz_ = rate;
    frame_count_ = count;
}

TokenReader::~TokenReader() {
    if (file_ != nullptr) {
        std::fclose(file_);
    }
}

bool TokenReader::next(CodeFrame& out) {
    if (read_ >= frame_count_) {
        return false;
    }
    // One fixed-size read per frame: 16 x u16 = 32 bytes.
    if (std::fread(out.codes.data(), sizeof(std::uint16_t), kNumLayers, file_) !=
        static_cast<std::size_t>(kNumLayers)) {
        throw FormatError("token file: truncated frame data");
    }
    ++read_;
    return true;
}

// ---- framed pipe --------------------------------------------------------

void append_pipe_frame(std::FILE* out, std::uint64_t index,
                       std::span<const float> frame) {
    if (std::fwrite(&index, sizeof(index), 1, out) != 1 ||
        std::fwrite(frame.data(), sizeof(float), frame.size(), out) != frame.size()) {
        throw IoError("pipe frame write failed");
    }
    std::fflush(out);
}

std::vector<std::pair<std::uint64_t, std::vector<float>>> read_pipe_frames(
    const std::filesystem::path& path, std::size_t dim) {
    const std::string bytes = read_file(path);
    const std::size_t record = sizeof(std::uint64_t) + dim * sizeof(float);
    if (bytes.size() % record != 0) {
        throw FormatError("pipe file: size not a multiple of record size");
    }
    std::vector<std::pair<std::uint64_t, std::vector<float>>> frames;
    frames.reserve(bytes.size() / record);
    for (std::size_t off = 0; off < bytes.size(); off += record) {
        std::uint64_t index;
        std::memcpy(&index, bytes.data() + off, sizeof(index));
        std::vector<float> v(dim);
        std::memcpy(v.data(), bytes.data() + off + sizeof(index), dim * sizeof(float));
        frames.emplace_back(index, std::move(v));
    }
    return frames;
}

// ---- checksums ----------------------------------------------------------

std::uint64_t fnv1a64(const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    return fnv1a64(bytes.data(), bytes.size());
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

}  // namespace rvqstream::io
