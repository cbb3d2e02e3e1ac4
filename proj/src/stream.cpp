#include "rvqstream/stream.hpp"

#include <cmath>
#include <cstring>

#include "rvqstream/kernels.hpp"

namespace rvqstream {

FirFilter::FirFilter(std::vector<float> t) : taps(std::move(t)) {
    if (taps.empty()) {
        throw ConfigError("FirFilter: no taps");
    }
    if (!(taps[0] > 0.0f)) {
        throw ConfigError("FirFilter: tap 0 must be > 0");
    }
    double sum = 0.0;
    for (float tap : taps) {
        if (!std::isfinite(tap)) {
            throw ConfigError("FirFilter: non-finite tap");
        }
        sum += static_cast<double>(tap);
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw ConfigError("FirFilter: taps must sum to 1 (got " + std::to_string(sum) + ")");
    }
}

StreamEncoder::StreamEncoder(const RvqStack& stack, int depth)
    : stack_(&stack), depth_(depth) {
    if (depth < 1 || depth > stack.depth()) {
        throw ConfigError("StreamEncoder: depth out of range");
    }
}

CodeFrame StreamEncoder::push(std::span<const float> frame) {
    const EncodedFrame enc = encode_frame(frame, *stack_, depth_);
    ++frames_seen_;
    return enc.codes;
}

StreamDecoder::StreamDecoder(const RvqStack& stack, int depth, FirFilter filter)
    : stack_(&stack), depth_(depth), filter_(std::move(filter)) {
    if (depth < 1 || depth > stack.depth()) {
        throw ConfigError("StreamDecoder: depth out of range");
    }
    history_.assign(filter_.history_len() * stack.dim, 0.0f);
}

std::vector<float> StreamDecoder::push(const CodeFrame& codes) {
    const std::vector<float> raw = decode_frame(codes, *stack_, depth_);
    const std::size_t dim = stack_->dim;
    const std::size_t hist = filter_.history_len();

    std::vector<float> out(dim, 0.0f);
    kernels::axpy(out.data(), raw.data(), filter_.taps[0], dim);
    // taps[t] weighs frame n-t; slots past the stream start stay zero.
    for (std::size_t t = 1; t <= hist && t <= frames_seen_; ++t) {
        const std::size_t slot = (ring_pos_ + hist - t) % hist;
        kernels::axpy(out.data(), history_.data() + slot * dim, filter_.taps[t], dim);
    }
    if (hist > 0) {
        std::memcpy(history_.data() + ring_pos_ * dim, raw.data(), dim * sizeof(float));
        ring_pos_ = (ring_pos_ + 1) % hist;
    }
    ++frames_seen_;
    return out;
}

void StreamDecoder::reset() {
    frames_seen_ = 0;
    ring_pos_ = 0;
    std::fill(history_.begin(), history_.end(), 0.0f);
}

std::string StreamDecoder::serialize_state() const {
    // Ring is normalized to oldest-first on save so equal states serialize
    // to equal bytes regardless of ring_pos_.
    const std::size_t dim = stack_->dim;
    const std::size_t hist = filter_.history_len();
    std::string out;
    const std::uint64_t seen = frames_seen_;
    const std::uint32_t h32 = static_cast<std::uint32_t>(hist);
    const std::uint32_t d32 = static_cast<std::uint32_t>(dim);
    out.append(reinterpret_cast<const char*>(&seen), sizeof(seen));
    out.append(reinterpret_cast<const char*>(&h32), sizeof(h32));
    out.append(reinterpret_cast<const char*>(&d32), sizeof(d32));
    for (std::size_t t = 0; t < hist; ++t) {
        const std::size_t slot = (ring_pos_ + t) % hist;
        out.append(reinterpret_cast<const char*>(history_.data() + slot * dim),
                   dim * sizeof(float));
    }
    return out;
}

void StreamDecoder::restore_state(const std::string& bytes) {
    const std::size_t dim = stack_->dim;
    const std::size_t hist = filter_.history_len();
    const std::size_t want = sizeof(std::uint64_t) + 2 * sizeof(std::uint32_t) +
                             hist * dim * sizeof(float);
    if (bytes.size() != want) {
        throw FormatError("StreamDecoder: state size mismatch");
    }
    std::uint64_t seen;
    std::uint32_t h32, d32;
    std::size_t off = 0;
    std::memcpy(&seen, bytes.data() + off, sizeof(seen));
    off += sizeof(seen);
    std::memcpy(&h32, bytes.data() + off, sizeof(h32));
    off += sizeof(h32);
    std::memcpy(&d32, bytes.data() + off, sizeof(d32));
    off += sizeof(d32);
    if (h32 != hist || d32 != dim) {
        throw FormatError("StreamDecoder: state shape mismatch");
    }
    frames_seen_ = seen;
    ring_pos_ = 0;
    std::memcpy(history_.data(), bytes.data() + off, hist * dim * sizeof(float));
}

FrameSeq decode_offline(const std::vector<CodeFrame>& codes, const RvqStack& stack,
                        int depth, const FirFilter& filter) {
    const std::size_t dim = stack.dim;
    FrameSeq raw = decode_frames(codes, stack, depth);
    FrameSeq out(codes.size(), dim);
    for (std::size_t n = 0; n < codes.size(); ++n) {
        float* dst = out.frame(n).data();
        for (std::size_t t = 0; t < filter.taps.size() && t <= n; ++t) {
            kernels::axpy(dst, raw.frame(n - t).data(), filter.taps[t], dim);
        }
    }
    return out;
}

}  // namespace rvqstream
