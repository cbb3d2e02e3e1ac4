#pragma once

// Sliding-window block attention for the chunked detokenizer: tokens group
// into fixed-size blocks, a query block attends to blocks [q-lookback,
// q+lookahead], and chunk c becomes decodable once tokens through block
// c+lookahead exist. The downstream stages appear only through their timing
// contracts (per-token audio and a one-time vocoder lookahead debt).

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "rvqstream/errors.hpp"

namespace rvqstream {

struct BlockPartition {
    std::size_t chunk_size = 8;  // tokens per block
    std::size_t num_tokens = 0;

    std::size_t blocks() const {
        return (num_tokens + chunk_size - 1) / chunk_size;
    }
    std::size_t block_of(std::size_t token) const { return token / chunk_size; }
};

// Window extents in blocks; defaults follow the reference pipeline.
struct AttentionWindow {
    std::size_t lookback = 3;
    std::size_t lookahead = 1;
};

class BlockMask {
  public:
    BlockMask(std::size_t num_blocks, AttentionWindow window);

    std::size_t num_blocks() const { return num_blocks_; }
    const AttentionWindow& window() const { return window_; }

    // allow(q, k) <=> q - lookback <= k <= q + lookahead (clamped to range).
    bool allow(std::size_t q_block, std::size_t k_block) const;

    // Token-level expansion: allow(token_q, token_k) of the owning blocks.
    bool allow_tokens(const BlockPartition& partition, std::size_t q_token,
                      std::size_t k_token) const;

  private:
    std::size_t num_blocks_;
    AttentionWindow window_;
};

BlockMask build_mask(const BlockPartition& partition, AttentionWindow window = {});

// Tokens the LM must have produced before the first chunk can decode:
// chunk_size * (1 + lookahead).
std::size_t first_decodable(const BlockPartition& partition, AttentionWindow window = {});

struct ChunkScheduleRow {
    std::size_t chunk = 0;
    std::size_t first_token = 0;
    std::size_t tokens = 0;
    // Token count at which this chunk may decode; tail chunks clamp to
    // num_tokens and only decode once the stream is marked finished.
    std::size_t ready_at_token = 0;
    bool needs_stream_end = false;
    double audio_ms = 0.0;
    double lookahead_debt_ms = 0.0;  // audio withheld from this chunk
};

struct ChunkSchedule {
    std::vector<ChunkScheduleRow> rows;
    double token_ms = 0.0;
    double vocoder_lookahead_ms = 0.0;

    double total_audio_ms() const;
};

// First emitted chunk carries chunk audio minus the vocoder lookahead; the
// debt is repaid once and later chunks carry full chunk audio.
ChunkSchedule schedule_chunks(const BlockPartition& partition, double token_ms,
                              double vocoder_lookahead_ms, AttentionWindow window = {});

// Token-level mask as PBM (P1, 1 = attends) and the schedule as CSV.
void write_mask_pbm(std::ostream& out, const BlockMask& mask,
                    const BlockPartition& partition);
void write_schedule_csv(std::ostream& out, const ChunkSchedule& schedule);

}  // namespace rvqstream
