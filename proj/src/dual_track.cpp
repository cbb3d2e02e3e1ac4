#include "rvqstream/dual_track.hpp"

#include <sstream>

#include "rvqstream/rng.hpp"

namespace rvqstream {

std::uint64_t hash_token(const TextToken& token) {
    // FNV-1a 64.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : token) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ContextSummary summarize_context(const std::vector<CodeFrame>& history,
                                 std::size_t window) {
    ContextSummary summary;
    if (history.empty() || window == 0) {
        return summary;
    }
    const std::size_t take = std::min(window, history.size());
    for (std::size_t i = history.size() - take; i < history.size(); ++i) {
        for (std::size_t layer = 0; layer < kNumLayers; ++layer) {
            summary.mean_codes[layer] += static_cast<double>(history[i].codes[layer]);
        }
    }
    for (double& m : summary.mean_codes) {
        m /= static_cast<double>(take);
    }
    summary.frames_summarized = take;
    return summary;
}

StepInput assemble_step(std::size_t step, const std::optional<TextToken>& text,
                        const std::vector<CodeFrame>& history,
                        std::size_t context_window) {
    StepInput input;
    input.step = step;
    input.is_pad = !text.has_value();
    input.text = text.value_or(kPadToken);
    input.context = summarize_context(history, context_window);
    return input;
}

EchoModel::EchoModel(std::uint32_t codebook_size) : k_(codebook_size) {
    if (k_ == 0 || k_ > 65536) {
        throw ConfigError("EchoModel: codebook size out of range");
    }
}

std::uint16_t EchoModel::predict_zeroth(const StepInput& input) const {
    return static_cast<std::uint16_t>(hash_token(input.text) % k_);
}

std::array<std::uint16_t, kNumAcousticLayers> EchoModel::predict_residuals(
    const StepInput&, std::uint16_t zeroth) const {
    std::array<std::uint16_t, kNumAcousticLayers> out{};
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint64_t v =
            (static_cast<std::uint64_t>(zeroth) * 2654435761ULL + (i + 1) * 2246822519ULL);
        out[i] = static_cast<std::uint16_t>(v % k_);
    }
    return out;
}

MarkovModel::MarkovModel(std::uint32_t codebook_size, std::uint64_t seed,
                         std::uint32_t text_buckets)
    : k_(codebook_size), buckets_(text_buckets) {
    if (k_ == 0 || k_ > 65536 || buckets_ == 0) {
        throw ConfigError("MarkovModel: bad codebook size or bucket count");
    }
    Rng rng(mix_seed(seed, 0x6d61726bULL));  // "mark"
    zeroth_table_.resize(std::size_t(k_) * buckets_);
    for (std::uint16_t& v : zeroth_table_) {
        v = static_cast<std::uint16_t>(rng.below(k_));
    }
    residual_table_.resize(std::size_t(kNumAcousticLayers) * k_);
    for (std::uint16_t& v : residual_table_) {
        v = static_cast<std::uint16_t>(rng.below(k_));
    }
}

std::uint16_t MarkovModel::predict_zeroth(const StepInput& input) const {
    // Order-1 state: the previous frame's zeroth code, recovered from the
    // context summary (mean over the last 1-frame window would equal it; with
    // a wider window the rounded mean still only depends on past frames).
    const std::size_t prev =
        input.context.frames_summarized == 0
            ? 0
            : static_cast<std::size_t>(input.context.mean_codes[0] + 0.5) % k_;
    const std::size_t bucket = hash_token(input.text) % buckets_;
    return zeroth_table_[prev * buckets_ + bucket];
}

std::array<std::uint16_t, kNumAcousticLayers> MarkovModel::predict_residuals(
    const StepInput&, std::uint16_t zeroth) const {
    std::array<std::uint16_t, kNumAcousticLayers> out{};
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = residual_table_[i * k_ + zeroth % k_];
    }
    return out;
}

CodeFrame generate_frame(const StepModel& model, const StepInput& input) {
    const std::uint16_t zeroth = model.predict_zeroth(input);
    if (zeroth >= model.zeroth_codebook_size()) {
        throw ModelContractError("generate_frame: zeroth code out of range");
    }
    const auto residuals = model.predict_residuals(input, zeroth);
    CodeFrame frame;
    frame.codes[0] = zeroth;
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        if (residuals[i] >= model.residual_codebook_size()) {
            throw ModelContractError("generate_frame: residual code out of range at layer " +
                                     std::to_string(i + 1));
        }
        frame.codes[i + 1] = residuals[i];
    }
    return frame;
}

SessionResult run_session(const std::vector<TextToken>& text, const StepModel& model,
                          const StopRule& stop, std::vector<float> speaker_embedding,
                          std::size_t context_window) {
    SessionResult result;
    result.speaker_embedding = std::move(speaker_embedding);
    std::uint64_t clock = 0;
    std::size_t pad_steps = 0;

    for (std::size_t step = 0;; ++step) {
        if (stop.pad_steps_after_text.has_value() && step >= text.size() &&
            pad_steps >= *stop.pad_steps_after_text) {
            result.stop_reason = "pad_tail";
            break;
        }
        if (step >= stop.max_steps) {
            if (stop.bounded_by_rule()) {
                throw MaxStepsExceededError("run_session: hit step cap (" +
                                            std::to_string(stop.max_steps) +
                                            ") before stop rule fired");
            }
            result.stop_reason = "max_steps";
            break;
        }
        const std::optional<TextToken> token =
            step < text.size() ? std::optional<TextToken>(text[step]) : std::nullopt;
        const StepInput input = assemble_step(step, token, result.frames, context_window);
        if (input.is_pad) {
            ++pad_steps;
        }

        StepEvent event;
        event.step = step;
        event.text = input.text;
        event.is_pad = input.is_pad;
        event.t_text_in = clock++;  // text consumed before the frame emits

        const CodeFrame frame = generate_frame(model, input);
        if (stop.stop_code.has_value() && frame.codes[0] == *stop.stop_code) {
            result.stop_reason = "stop_code";
            break;  // control frame, not emitted
        }
        event.codes = frame;
        event.t_frame_out = clock++;
        result.frames.push_back(frame);
        result.events.push_back(event);
    }
    return result;
}

std::vector<TextToken> tokenize_text(const std::string& text) {
    std::vector<TextToken> tokens;
    std::istringstream in(text);
    TextToken token;
    while (in >> token) {
        tokens.push_back(token);
    }
    return tokens;
}

}  // namespace rvqstream
