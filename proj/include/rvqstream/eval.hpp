#pragma once

// Codec fidelity metrics: per-depth SNR, multi-scale magnitude-spectrum L1
// over the feature sequence (windows of 32/64/128 frames), per-layer code
// perplexity, and the optional teacher-alignment loss.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rvqstream/rvq.hpp"
#include "rvqstream/types.hpp"

namespace rvqstream {

// Exact reconstructions report this instead of +inf.
inline constexpr double kSnrCapDb = 120.0;

struct EvalReport {
    std::vector<double> snr_db;                 // index d-1 = SNR at depth d
    std::map<int, double> spectral_loss;        // window size -> mean |Δ|magnitude|
    std::vector<double> perplexity;             // per layer, in [1, K]
    std::optional<double> alignment_loss;
    std::uint64_t alignment_warnings = 0;
};

struct EvalOptions {
    std::vector<int> spectral_windows = {32, 64, 128};
    // Teacher alignment runs when teacher frames are supplied.
    const std::vector<TeacherFrame>* teacher = nullptr;
    std::size_t teacher_dim = 0;
    std::vector<float> projection;  // empty -> seeded orthonormal default
};

EvalReport eval_codec(const RvqStack& stack, const FrameSeq& corpus,
                      const EvalOptions& options = {});

// Mean L1 between magnitude spectra of the two sequences, per window size.
// Sequences shorter than the window are zero-padded to one segment;
// otherwise segments hop by window/2 and ragged tails are dropped.
double spectral_l1(const FrameSeq& a, const FrameSeq& b, int window);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& json_text);

}  // namespace rvqstream
