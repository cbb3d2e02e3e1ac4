#pragma once

// Deterministic discrete-event model of the streaming pipelines. All times
// are integer microseconds so the first-packet identity (TTFP + decode TPP)
// holds exactly, with no float drift.
//
// Timing model:
//   * the LM's first first_decodable_tokens tokens complete together at
//     lm_ttfp (TTFP is an opaque cost covering prefill plus the first
//     packet's tokens; it is not decomposed);
//   * later tokens arrive in groups of packet_tokens costing lm_tpp each,
//     spaced uniformly inside the group (token j of a group completes at
//     group_start + floor((j+1) * lm_tpp / packet_tokens));
//   * packet p may start decoding once tokens through
//     first_decodable_tokens + p * packet_tokens exist and the decoder is
//     free; decode costs decode_tpp and emits audio at its end;
//   * overlapped mode lets the LM keep generating during decode; serial
//     mode starts the next token group only after the previous decode ends.
//     First-packet latency is identical under both;
//   * packet 0 carries packet audio minus the vocoder lookahead, later
//     packets carry full packet audio.

#include <cstdint>
#include <string>
#include <vector>

#include "rvqstream/errors.hpp"

namespace rvqstream {

using Micros = std::int64_t;

constexpr Micros ms_to_us(double ms) {
    return static_cast<Micros>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5));
}
constexpr double us_to_ms(Micros us) { return static_cast<double>(us) / 1000.0; }

struct PipelineConfig {
    std::string name = "custom";
    double token_rate_hz = 12.5;
    Micros token_us = 80000;  // 1e6 / token_rate_hz
    int packet_tokens = 4;
    Micros vocoder_lookahead_us = 0;
    int first_decodable_tokens = 4;
    Micros lm_ttfp_us = 0;
    Micros lm_tpp_us = 0;
    Micros decode_tpp_us = 0;
    bool overlapped = true;  // decode of packet i overlaps LM generation

    Micros packet_audio_us() const {
        return static_cast<Micros>(packet_tokens) * token_us;
    }

    void validate() const;

    // The two reference pipelines; costs filled in by the caller.
    static PipelineConfig pipeline_25hz();
    static PipelineConfig pipeline_12hz();
};

enum class EventKind : std::uint8_t {
    token_done,     // index = token ordinal (0-based)
    decode_start,   // index = packet ordinal
    decode_end,
    audio_emit,     // value_us = packet audio duration
};

struct TraceEvent {
    Micros t_us = 0;
    EventKind kind = EventKind::token_done;
    std::int64_t index = 0;
    Micros value_us = 0;

    bool operator==(const TraceEvent&) const = default;
};

const char* event_kind_name(EventKind kind);

struct LatencyReport {
    Micros first_packet_latency_us = 0;
    Micros first_packet_audio_us = 0;
    Micros steady_packet_period_us = 0;
    Micros total_compute_us = 0;
    Micros audio_out_us = 0;
    Micros session_end_us = 0;  // last audio emission
    std::int64_t packets = 0;
    std::int64_t tokens = 0;
    double rtf = 0.0;  // total_compute / audio_out
    bool real_time_capable = false;
};

struct SimResult {
    LatencyReport report;
    std::vector<TraceEvent> trace;
};

// = lm_ttfp + decode_tpp, exactly.
Micros first_packet_latency_us(const PipelineConfig& config);

SimResult simulate(const PipelineConfig& config, std::int64_t total_tokens);

// One sweep row: a config plus the externally measured RTF it came with
// (reported side by side; it is not derivable from the cost inputs).
struct SweepRow {
    PipelineConfig config;
    std::string pipeline = "12hz";  // "25hz" | "12hz"
    int concurrency = 1;
    double rtf_reference = 0.0;
    std::int64_t tokens = 256;
};

std::vector<SweepRow> read_sweep_csv(const std::string& csv_text,
                                     std::int64_t default_tokens);
std::string write_sweep_csv(const std::vector<SweepRow>& rows);

// Event trace as JSON lines; timestamps round-trip exactly (integer
// microseconds carried alongside the human-readable milliseconds).
std::string trace_to_jsonl(const std::vector<TraceEvent>& trace);
std::vector<TraceEvent> trace_from_jsonl(const std::string& text);

}  // namespace rvqstream
