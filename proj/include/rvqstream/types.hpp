#pragma once

// Core value types shared across the codec: frame sequences, per-frame code
// tuples, codebooks and the 16-layer residual quantizer stack.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rvqstream/errors.hpp"

namespace rvqstream {

inline constexpr int kNumLayers = 16;      // 1 semantic + 15 acoustic
inline constexpr int kNumAcousticLayers = kNumLayers - 1;
inline constexpr double kDefaultFrameRateHz = 12.5;
inline constexpr std::uint32_t kDefaultCodebookSize = 2048;
inline constexpr std::uint32_t kDefaultDim = 64;

// Contiguous row-major (frames x dim) float storage. One row is one
// FeatureFrame.
class FrameSeq {
  public:
    FrameSeq() = default;
    FrameSeq(std::size_t frames, std::size_t dim)
        : dim_(dim), data_(frames * dim, 0.0f) {}

    std::size_t frames() const { return dim_ == 0 ? 0 : data_.size() / dim_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return data_.empty(); }

    std::span<float> frame(std::size_t i) {
        return {data_.data() + i * dim_, dim_};
    }
    std::span<const float> frame(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& raw() { return data_; }
    const std::vector<float>& raw() const { return data_; }

    void push_frame(std::span<const float> f) {
        if (dim_ == 0) {
            dim_ = f.size();
        }
        if (f.size() != dim_) {
            throw DimensionError("push_frame: frame dim mismatch");
        }
        data_.insert(data_.end(), f.begin(), f.end());
    }

    bool operator==(const FrameSeq&) const = default;

  private:
    std::size_t dim_ = 0;
    std::vector<float> data_;
};

// Per-frame tuple of layer indices. Slot 0 is the semantic layer; slots
// beyond the encode depth stay zero.
struct CodeFrame {
    std::array<std::uint16_t, kNumLayers> codes{};

    bool operator==(const CodeFrame&) const = default;
};

// One quantizer layer: K centroids of dimension D plus EMA training state.
struct Codebook {
    int layer_index = 0;
    std::uint32_t size = 0;             // K
    std::uint32_t dim = 0;              // D
    std::vector<float> entries;         // K x D row-major
    std::vector<double> ema_usage;      // per-entry EMA occupancy, >= 0
    std::vector<double> ema_sum;        // per-entry EMA of assigned sums, K x D

    Codebook() = default;
    Codebook(int layer, std::uint32_t k, std::uint32_t d)
        : layer_index(layer),
          size(k),
          dim(d),
          entries(std::size_t(k) * d, 0.0f),
          ema_usage(k, 0.0),
          ema_sum(std::size_t(k) * d, 0.0) {}

    std::span<const float> entry(std::size_t i) const {
        return {entries.data() + i * dim, dim};
    }
    std::span<float> entry(std::size_t i) {
        return {entries.data() + i * dim, dim};
    }
};

// Ordered 16-layer stack; decode applies layers in index order.
struct RvqStack {
    double frame_rate_hz = kDefaultFrameRateHz;
    std::uint32_t dim = 0;
    std::uint64_t seed = 0;
    std::vector<Codebook> layers;  // layers[0] = semantic, 1..15 acoustic

    int depth() const { return static_cast<int>(layers.size()); }

    const Codebook& semantic() const { return layers.at(0); }
    const Codebook& acoustic(int i) const { return layers.at(std::size_t(i) + 1); }

    void validate() const {
        if (layers.empty()) {
            throw ConfigError("RvqStack: no layers");
        }
        for (std::size_t i = 0; i < layers.size(); ++i) {
            if (layers[i].dim != dim) {
                throw DimensionError("RvqStack: layer dim mismatch");
            }
            if (layers[i].size == 0) {
                throw ConfigError("RvqStack: empty codebook");
            }
        }
    }
};

// One teacher feature frame (externally supplied, dimension Dt).
struct TeacherFrame {
    std::vector<float> vector;
};

}  // namespace rvqstream
