#pragma once

// Binary container formats (little-endian throughout) and small I/O helpers.
//
//   feature file   "FEA1" | u32 dim | u64 frame_count | f32 data row-major
//   codebook file  "RVQ1" | u32 K | u32 D | u32 depth | u64 seed
//                  | depth x (K x D) f32 centroids, layer-major
//                  plus a <path>.json sidecar with training metadata
//   token stream   "TOK1" | u32 depth | f64 frame_rate_hz | u64 frame_count
//                  | per frame 16 x u16 indices (slots past depth are zero)
//
// Writers go through a temp-file + rename so partially written outputs never
// appear under the final name.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rvqstream/types.hpp"

namespace rvqstream::io {

struct TokenStream {
    std::uint32_t depth = kNumLayers;
    double frame_rate_hz = kDefaultFrameRateHz;
    std::vector<CodeFrame> frames;

    bool operator==(const TokenStream&) const = default;
};

// Training metadata carried in the codebook sidecar.
struct StackMeta {
    std::string tool_version;
    std::uint64_t seed = 0;
    std::uint32_t epochs = 0;
    double ema_decay = 0.0;
    double dead_code_rel_threshold = 0.0;
    std::vector<double> final_distortion;  // per layer
};

void write_features(const std::filesystem::path& path, const FrameSeq& seq);
FrameSeq read_features(const std::filesystem::path& path);

void write_stack(const std::filesystem::path& path, const RvqStack& stack,
                 const StackMeta& meta);
RvqStack read_stack(const std::filesystem::path& path);
StackMeta read_stack_meta(const std::filesystem::path& path);  // <path>.json

void write_tokens(const std::filesystem::path& path, const TokenStream& stream);
TokenStream read_tokens(const std::filesystem::path& path);

// Streamed token reader: opens the file, then yields one frame per call
// using fixed 32-byte reads (16 x u16).
class TokenReader {
  public:
    explicit TokenReader(const std::filesystem::path& path);
    ~TokenReader();
    TokenReader(const TokenReader&) = delete;
    TokenReader& operator=(const TokenReader&) = delete;

    std::uint32_t depth() const { return depth_; }
    double frame_rate_hz() const { return frame_rate_hz_; }
    std::uint64_t frame_count() const { return frame_count_; }

    bool next(CodeFrame& out);

  private:
    std::FILE* file_ = nullptr;
    std::uint32_t depth_ = 0;
    double frame_rate_hz_ = 0.0;
    std::uint64_t frame_count_ = 0;
    std::uint64_t read_ = 0;
};

// Framed record for the streaming decode pipe: u64 frame_index then D f32.
void append_pipe_frame(std::FILE* out, std::uint64_t index,
                       std::span<const float> frame);
// Reads records back (for tests / downstream tools); dim must be known.
std::vector<std::pair<std::uint64_t, std::vector<float>>> read_pipe_frames(
    const std::filesystem::path& path, std::size_t dim);

// Whole-file atomic write.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

// FNV-1a 64-bit, used for manifest/output checksums.
std::uint64_t fnv1a64(const void* data, std::size_t bytes);
std::uint64_t fnv1a64_file(const std::filesystem::path& path);
std::string hex64(std::uint64_t value);

}  // namespace rvqstream::io
