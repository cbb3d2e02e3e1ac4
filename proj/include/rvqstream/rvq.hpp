#pragma once

// Residual vector quantization: greedy layer-by-layer encode, summed-centroid
// decode, EMA k-means codebook training and the semantic teacher-alignment
// loss. Layer 0 quantizes the frame itself, each later layer quantizes the
// running residual; reconstruction at depth d is the sum of the first d
// selected centroids.
//
// Trained residual layers (1..15) reserve entry 0 as the all-zero "null
// refinement" and keep it frozen. Selecting it leaves the residual unchanged,
// so the greedy argmin can never increase residual energy: per-layer residual
// energies are non-increasing for every input, not just in expectation.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rvqstream/types.hpp"

namespace rvqstream {

struct QuantizeResult {
    std::uint16_t index = 0;
    std::vector<float> residual;
};

// Nearest entry by squared Euclidean distance, ties to the lowest index.
QuantizeResult quantize_layer(std::span<const float> vector, const Codebook& codebook);

struct EncodedFrame {
    CodeFrame codes;
    int depth = 0;
    // residual_energy[i] = squared norm of the residual after layer i.
    std::array<float, kNumLayers> residual_energy{};
};

EncodedFrame encode_frame(std::span<const float> frame, const RvqStack& stack, int depth);

std::vector<float> decode_frame(const CodeFrame& codes, const RvqStack& stack, int depth);

// Batch helpers; frame order is preserved and results are identical for any
// worker count.
std::vector<EncodedFrame> encode_frames(const FrameSeq& frames, const RvqStack& stack,
                                        int depth, int workers = 1);
FrameSeq decode_frames(const std::vector<CodeFrame>& codes, const RvqStack& stack,
                       int depth);

struct TrainConfig {
    std::uint32_t codebook_size = kDefaultCodebookSize;
    std::uint32_t dim = kDefaultDim;
    int depth = kNumLayers;
    std::uint32_t epochs = 24;
    double ema_decay = 0.99;
    // An entry is dead when its EMA usage drops below
    // dead_code_rel_threshold * frames / K.
    double dead_code_rel_threshold = 1e-3;
    std::uint64_t seed = 0;
    double frame_rate_hz = kDefaultFrameRateHz;
    int workers = 1;
};

struct TrainResult {
    RvqStack stack;
    std::vector<double> final_distortion;                // per layer
    std::vector<std::vector<double>> distortion_history;  // per layer, per epoch
    std::uint64_t dead_code_reassignments = 0;
};

// Layers train sequentially on the residuals of the layers before them.
// Deterministic for a given (seed, corpus, config), including worker count.
TrainResult train_codebooks(const FrameSeq& corpus, const TrainConfig& config);

struct AlignmentResult {
    double loss = 0.0;          // mean (1 - cosine), in [0, 2]
    std::uint64_t zero_norm_warnings = 0;
};

// Mean (1 - cos) between projection * layer0_reconstruction and the teacher
// frames. Zero-norm vectors contribute loss 1 and bump the warning count.
AlignmentResult semantic_alignment_loss(const RvqStack& stack, const FrameSeq& frames,
                                        const std::vector<TeacherFrame>& teacher,
                                        std::span<const float> projection,
                                        std::size_t teacher_dim);

// Seeded random projection (teacher_dim x dim, row-major) with orthonormal
// rows when teacher_dim <= dim, orthonormal columns otherwise.
std::vector<float> random_orthonormal_projection(std::size_t teacher_dim,
                                                 std::size_t dim, std::uint64_t seed);

}  // namespace rvqstream
