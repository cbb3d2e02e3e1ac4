#pragma once

// Causal streaming wrapper around the RVQ stack. Encode is stateless per
// frame; decode dequantizes and runs a strictly causal FIR over past frames
// only, so output n is a function of inputs 0..n. Missing history before the
// stream start counts as zeros.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rvqstream/rvq.hpp"
#include "rvqstream/types.hpp"

namespace rvqstream {

// Causal FIR, applied per feature dimension. tap 0 weighs the current frame;
// taps must sum to 1 (DC-preserving) with tap 0 > 0.
struct FirFilter {
    std::vector<float> taps;

    FirFilter() : taps{1.0f} {}
    explicit FirFilter(std::vector<float> t);

    static FirFilter identity() { return FirFilter(); }
    // Stand-in for the causal conv decoder; length is a placeholder choice.
    static FirFilter default_decoder() { return FirFilter({0.4f, 0.3f, 0.2f, 0.1f}); }

    std::size_t history_len() const { return taps.size() - 1; }
};

class StreamEncoder {
  public:
    explicit StreamEncoder(const RvqStack& stack, int depth);

    // Emits the frame's codes immediately; no lookahead, identical to offline
    // encode_frame of the same input.
    CodeFrame push(std::span<const float> frame);

    std::uint64_t frames_seen() const { return frames_seen_; }
    void reset() { frames_seen_ = 0; }

  private:
    const RvqStack* stack_;
    int depth_;
    std::uint64_t frames_seen_ = 0;
};

class StreamDecoder {
  public:
    StreamDecoder(const RvqStack& stack, int depth, FirFilter filter);

    // Dequantizes and filters with past history only.
    std::vector<float> push(const CodeFrame& codes);

    std::uint64_t frames_seen() const { return frames_seen_; }
    const FirFilter& filter() const { return filter_; }

    void reset();

    // State round-trips through bytes; restore requires the same stack.
    std::string serialize_state() const;
    void restore_state(const std::string& bytes);

  private:
    const RvqStack* stack_;
    int depth_;
    FirFilter filter_;
    std::uint64_t frames_seen_ = 0;
    std::vector<float> history_;  // ring of the last history_len() decoded frames
    std::size_t ring_pos_ = 0;
};

// Offline reference: decode all frames, then apply the same causal FIR with
// zero initial history. Streaming decode of a full file matches this
// bit-for-bit.
FrameSeq decode_offline(const std::vector<CodeFrame>& codes, const RvqStack& stack,
                        int depth, const FirFilter& filter);

}  // namespace rvqstream
