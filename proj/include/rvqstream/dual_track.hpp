#pragma once

// Dual-track session assembly: text tokens and acoustic code frames occupy
// parallel channels at each autoregressive step. Every step consumes one
// text token (or the pad symbol once text is exhausted) and emits exactly
// one full 16-code frame: the backbone picks the zeroth code, the
// multi-token predictor fills the 15 residual codes from it.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rvqstream/types.hpp"

namespace rvqstream {

using TextToken = std::string;
inline const TextToken kPadToken = "<pad>";

// Mean code index per layer over the last F frames (zeros when empty).
struct ContextSummary {
    std::array<double, kNumLayers> mean_codes{};
    std::size_t frames_summarized = 0;
};

ContextSummary summarize_context(const std::vector<CodeFrame>& history,
                                 std::size_t window = 4);

struct StepInput {
    std::size_t step = 0;
    TextToken text;
    bool is_pad = false;
    ContextSummary context;
};

StepInput assemble_step(std::size_t step, const std::optional<TextToken>& text,
                        const std::vector<CodeFrame>& history,
                        std::size_t context_window = 4);

// Deterministic per-frame generator. Implementations must return indices
// inside their declared codebook sizes; generate_frame enforces it.
class StepModel {
  public:
    virtual ~StepModel() = default;
    virtual std::uint32_t zeroth_codebook_size() const = 0;
    virtual std::uint32_t residual_codebook_size() const = 0;
    virtual std::uint16_t predict_zeroth(const StepInput& input) const = 0;
    virtual std::array<std::uint16_t, kNumAcousticLayers> predict_residuals(
        const StepInput& input, std::uint16_t zeroth) const = 0;
};

// zeroth = hash(text) mod K, residuals a fixed function of the zeroth code.
class EchoModel final : public StepModel {
  public:
    explicit EchoModel(std::uint32_t codebook_size);
    std::uint32_t zeroth_codebook_size() const override { return k_; }
    std::uint32_t residual_codebook_size() const override { return k_; }
    std::uint16_t predict_zeroth(const StepInput& input) const override;
    std::array<std::uint16_t, kNumAcousticLayers> predict_residuals(
        const StepInput& input, std::uint16_t zeroth) const override;

  private:
    std::uint32_t k_;
};

// Seeded order-1 Markov tables over the zeroth code, keyed by the previous
// zeroth code and a text bucket; residual layers use per-layer tables.
class MarkovModel final : public StepModel {
  public:
    MarkovModel(std::uint32_t codebook_size, std::uint64_t seed,
                std::uint32_t text_buckets = 16);
    std::uint32_t zeroth_codebook_size() const override { return k_; }
    std::uint32_t residual_codebook_size() const override { return k_; }
    std::uint16_t predict_zeroth(const StepInput& input) const override;
    std::array<std::uint16_t, kNumAcousticLayers> predict_residuals(
        const StepInput& input, std::uint16_t zeroth) const override;

  private:
    std::uint32_t k_;
    std::uint32_t buckets_;
    std::vector<std::uint16_t> zeroth_table_;    // (k x buckets)
    std::vector<std::uint16_t> residual_table_;  // (15 x k)
};

// One full frame for the step: codes[0] from the backbone, codes[1..15]
// from the MTP conditioned on the zeroth code.
CodeFrame generate_frame(const StepModel& model, const StepInput& input);

struct StopRule {
    std::size_t max_steps = 4096;
    // Stop after this many pad steps once text is exhausted.
    std::optional<std::size_t> pad_steps_after_text;
    // Stop (without emitting) when the backbone produces this zeroth code.
    std::optional<std::uint16_t> stop_code;

    bool bounded_by_rule() const {
        return pad_steps_after_text.has_value() || stop_code.has_value();
    }
};

struct StepEvent {
    std::size_t step = 0;
    TextToken text;
    bool is_pad = false;
    CodeFrame codes;
    std::uint64_t t_text_in = 0;   // monotone event clock
    std::uint64_t t_frame_out = 0;
};

struct SessionResult {
    std::vector<CodeFrame> frames;
    std::vector<StepEvent> events;
    std::vector<float> speaker_embedding;  // opaque, passed through
    std::string stop_reason;               // "max_steps" | "pad_tail" | "stop_code"
};

SessionResult run_session(const std::vector<TextToken>& text, const StepModel& model,
                          const StopRule& stop,
                          std::vector<float> speaker_embedding = {},
                          std::size_t context_window = 4);

// Whitespace tokenization for the CLI surface.
std::vector<TextToken> tokenize_text(const std::string& text);

std::uint64_t hash_token(const TextToken& token);

}  // namespace rvqstream
