#include "rvqstream/block_attention.hpp"

#include <algorithm>
#include <ostream>

namespace rvqstream {

BlockMask::BlockMask(std::size_t num_blocks, AttentionWindow window)
    : num_blocks_(num_blocks), window_(window) {
    if (num_blocks == 0) {
        throw ConfigError("BlockMask: zero blocks");
    }
}

bool BlockMask::allow(std::size_t q_block, std::size_t k_block) const {
    if (q_block >= num_blocks_ || k_block >= num_blocks_) {
        throw ConfigError("BlockMask: block index out of range");
    }
    const std::size_t lo = q_block >= window_.lookback ? q_block - window_.lookback : 0;
    const std::size_t hi = q_block + window_.lookahead;  // clamped by range check above
    return k_block >= lo && k_block <= hi;
}

bool BlockMask::allow_tokens(const BlockPartition& partition, std::size_t q_token,
                             std::size_t k_token) const {
    return allow(partition.block_of(q_token), partition.block_of(k_token));
}

BlockMask build_mask(const BlockPartition& partition, AttentionWindow window) {
    if (partition.chunk_size == 0 || partition.num_tokens == 0) {
        throw ConfigError("build_mask: zero chunk_size or num_tokens");
    }
    return BlockMask(partition.blocks(), window);
}

std::size_t first_decodable(const BlockPartition& partition, AttentionWindow window) {
    if (partition.chunk_size == 0) {
        throw ConfigError("first_decodable: zero chunk_size");
    }
    return partition.chunk_size * (1 + window.lookahead);
}

double ChunkSchedule::total_audio_ms() const {
    double total = 0.0;
    for (const ChunkScheduleRow& row : rows) {
        total += row.audio_ms;
    }
    return total;
}

ChunkSchedule schedule_chunks(const BlockPartition& partition, double token_ms,
                              double vocoder_lookahead_ms, AttentionWindow window) {
    if (partition.chunk_size == 0 || partition.num_tokens == 0) {
        throw ConfigError("schedule_chunks: zero chunk_size or num_tokens");
    }
    if (!(token_ms > 0.0)) {
        throw ConfigError("schedule_chunks: token_ms must be > 0");
    }
    if (vocoder_lookahead_ms < 0.0) {
        throw ConfigError("schedule_chunks: negative vocoder lookahead");
    }
    const double chunk_audio = static_cast<double>(partition.chunk_size) * token_ms;
    if (vocoder_lookahead_ms >= chunk_audio) {
        throw ConfigError("schedule_chunks: vocoder lookahead >= chunk audio, first packet empty");
    }

    ChunkSchedule schedule;
    schedule.token_ms = token_ms;
    schedule.vocoder_lookahead_ms = vocoder_lookahead_ms;
    const std::size_t blocks = partition.blocks();
    for (std::size_t c = 0; c < blocks; ++c) {
        ChunkScheduleRow row;
        row.chunk = c;
        row.first_token = c * partition.chunk_size;
        row.tokens = std::min(partition.chunk_size, partition.num_tokens - row.first_token);
        const std::size_t raw_ready = (c + 1 + window.lookahead) * partition.chunk_size;
        row.ready_at_token = std::min(raw_ready, partition.num_tokens);
        row.needs_stream_end = raw_ready > partition.num_tokens;
        row.audio_ms = static_cast<double>(row.tokens) * token_ms;
        if (c == 0) {
            row.lookahead_debt_ms = vocoder_lookahead_ms;
            row.audio_ms -= vocoder_lookahead_ms;
            if (row.audio_ms <= 0.0) {
                throw ConfigError("schedule_chunks: first packet audio would be empty");
            }
        }
        schedule.rows.push_back(row);
    }
    return schedule;
}

void write_mask_pbm(std::ostream& out, const BlockMask& mask,
                    const BlockPartition& partition) {
    const std::size_t n = partition.num_tokens;
    out << "P1\n" << n << " " << n << "\n";
    for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t k = 0; k < n; ++k) {
            out << (mask.allow_tokens(partition, q, k) ? '1' : '0');
            out << (k + 1 == n ? '\n' : ' ');
        }
    }
}

void write_schedule_csv(std::ostream& out, const ChunkSchedule& schedule) {
    out << "chunk,first_token,tokens,ready_at_token,needs_stream_end,audio_ms,lookahead_debt_ms\n";
    for (const ChunkScheduleRow& row : schedule.rows) {
        out << row.chunk << ',' << row.first_token << ',' << row.tokens << ','
            << row.ready_at_token << ',' << (row.needs_stream_end ? 1 : 0) << ','
            << row.audio_ms << ',' << row.lookahead_debt_ms << '\n';
    }
}

}  // namespace rvqstream
