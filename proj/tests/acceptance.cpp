// Acceptance suite. Each criterion prints exactly one PASS/FAIL line; the
// process exits non-zero if any criterion fails. Stated runtime budgets are
// enforced here, not just observed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "rvqstream/block_attention.hpp"
#include "rvqstream/dual_track.hpp"
#include "rvqstream/io.hpp"
#include "rvqstream/latency_sim.hpp"
#include "rvqstream/rng.hpp"
#include "rvqstream/rvq.hpp"
#include "rvqstream/stream.hpp"

using namespace rvqstream;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

FrameSeq random_frames(std::size_t n, std::uint32_t d, std::uint64_t seed,
                       double scale = 2.0) {
    FrameSeq seq(n, d);
    Rng rng(seed);
    for (float& x : seq.raw()) {
        x = static_cast<float>(rng.gaussian(0.0, scale));
    }
    return seq;
}

RvqStack random_stack(std::uint32_t k, std::uint32_t d, int depth, std::uint64_t seed) {
    RvqStack stack;
    stack.dim = d;
    stack.seed = seed;
    Rng rng(seed);
    for (int layer = 0; layer < depth; ++layer) {
        Codebook cb(layer, k, d);
        const double s = 1.5 / (1.0 + layer);
        for (float& e : cb.entries) {
            e = static_cast<float>(rng.gaussian(0.0, s));
        }
        stack.layers.push_back(std::move(cb));
    }
    return stack;
}

// ---- criterion 1: reference first-packet sums, exact ------------------------

bool table5_reproduction(std::string& detail) {
    const auto start = Clock::now();
    const std::string csv = io::read_file(std::string(RVQSTREAM_DATA_DIR) + "/table5.csv");
    const std::vector<SweepRow> rows = read_sweep_csv(csv, 64);
    const Micros want_us[12] = {ms_to_us(150), ms_to_us(284), ms_to_us(523),
                                ms_to_us(138), ms_to_us(260), ms_to_us(481),
                                ms_to_us(101), ms_to_us(195), ms_to_us(333),
                                ms_to_us(97),  ms_to_us(179), ms_to_us(299)};
    if (rows.size() != 12) {
        detail = "expected 12 config rows, got " + std::to_string(rows.size());
        return false;
    }
    for (std::size_t i = 0; i < 12; ++i) {
        const Micros got = first_packet_latency_us(rows[i].config);
        if (got != want_us[i]) {
            detail = "row " + std::to_string(i) + ": got " +
                     std::to_string(us_to_ms(got)) + " ms, want " +
                     std::to_string(us_to_ms(want_us[i])) + " ms";
            return false;
        }
    }
    const double elapsed = ms_since(start);
    if (elapsed >= 1000.0) {
        detail = "runtime " + std::to_string(elapsed) + " ms >= 1 s budget";
        return false;
    }
    detail = "12/12 exact in " + std::to_string(elapsed) + " ms";
    return true;
}

// ---- criterion 2: first-packet audio accounting, exact -----------------------

bool first_packet_audio(std::string& detail) {
    // 25 Hz: chunk 8, 40 ms tokens, 130 ms vocoder lookahead.
    const BlockPartition p25{8, 40};
    if (first_decodable(p25) != 16) {
        detail = "25hz first_decodable != 16";
        return false;
    }
    const ChunkSchedule schedule = schedule_chunks(p25, 40.0, 130.0);
    if (schedule.rows[0].audio_ms != 190.0) {
        detail = "25hz schedule first chunk audio != 190 ms";
        return false;
    }

    PipelineConfig c25 = PipelineConfig::pipeline_25hz();
    c25.lm_ttfp_us = ms_to_us(125);
    c25.decode_tpp_us = ms_to_us(25);
    c25.lm_tpp_us = ms_to_us(56);
    const SimResult sim25 = simulate(c25, 16);
    if (sim25.report.first_packet_audio_us != ms_to_us(190) ||
        c25.first_decodable_tokens != 16) {
        detail = "25hz simulate: first packet != 190 ms after 16 tokens";
        return false;
    }
    bool fails_below = false;
    try {
        simulate(c25, 15);
    } catch (const NoPacketError&) {
        fails_below = true;  // exactly 16 needed
    }
    if (!fails_below) {
        detail = "25hz simulate accepted 15 tokens";
        return false;
    }

    PipelineConfig c12 = PipelineConfig::pipeline_12hz();
    c12.lm_ttfp_us = ms_to_us(97);
    c12.decode_tpp_us = ms_to_us(4);
    c12.lm_tpp_us = ms_to_us(21);
    const SimResult sim12 = simulate(c12, 4);
    if (sim12.report.first_packet_audio_us != ms_to_us(320) ||
        c12.first_decodable_tokens != 4) {
        detail = "12hz simulate: first packet != 320 ms after 4 tokens";
        return false;
    }
    fails_below = false;
    try {
        simulate(c12, 3);
    } catch (const NoPacketError&) {
        fails_below = true;
    }
    if (!fails_below) {
        detail = "12hz simulate accepted 3 tokens";
        return false;
    }
    detail = "25hz: 190 ms @ 16 tokens; 12hz: 320 ms @ 4 tokens (exact)";
    return true;
}

// ---- criterion 3: block-mask oracle equivalence ------------------------------

bool block_mask_oracle(std::string& detail) {
    const auto start = Clock::now();
    std::uint64_t checked = 0;
    for (std::size_t blocks = 1; blocks <= 64; ++blocks) {
        for (std::size_t chunk : {std::size_t(1), std::size_t(3), std::size_t(8)}) {
            // Full and ragged final blocks.
            for (std::size_t trim : {std::size_t(0), chunk > 1 ? chunk - 1 : std::size_t(0)}) {
                const std::size_t tokens = blocks * chunk - trim;
                if (tokens == 0) {
                    continue;
                }
                const BlockPartition p{chunk, tokens};
                const BlockMask mask = build_mask(p);
                for (std::size_t q = 0; q < p.blocks(); ++q) {
                    for (std::size_t k = 0; k < p.blocks(); ++k) {
                        const bool oracle =
                            static_cast<long>(k) >= static_cast<long>(q) - 3 &&
                            static_cast<long>(k) <= static_cast<long>(q) + 1;
                        if (mask.allow(q, k) != oracle) {
                            detail = "mismatch at blocks=" + std::to_string(p.blocks()) +
                                     " q=" + std::to_string(q) + " k=" + std::to_string(k);
                            return false;
                        }
                        ++checked;
                    }
                }
            }
        }
    }
    const double elapsed = ms_since(start);
    if (elapsed >= 5000.0) {
        detail = "runtime " + std::to_string(elapsed) + " ms >= 5 s budget";
        return false;
    }
    detail = std::to_string(checked) + " (q,k) pairs, zero mismatches, " +
             std::to_string(elapsed) + " ms";
    return true;
}

// ---- criterion 4: RVQ monotonicity property suite ----------------------------

bool rvq_monotonicity(std::string& detail) {
    std::uint64_t frames_checked = 0;
    for (std::uint32_t k : {4u, 16u, 64u}) {
        // Random trained stack of depth 16.
        TrainConfig cfg;
        cfg.codebook_size = k;
        cfg.dim = 12;
        cfg.depth = 16;
        cfg.epochs = 5;
        cfg.seed = 5000 + k;
        const FrameSeq corpus = random_frames(1200, 12, 6000 + k, 3.0);
        const RvqStack stack = train_codebooks(corpus, cfg).stack;

        const FrameSeq probes = random_frames(400, 12, 7000 + k, 3.0);
        std::vector<double> noise(16, 0.0);
        double signal = 0.0;
        for (std::size_t i = 0; i < probes.frames(); ++i) {
            const EncodedFrame enc = encode_frame(probes.frame(i), stack, 16);
            for (int d = 1; d < 16; ++d) {
                if (enc.residual_energy[std::size_t(d)] >
                    enc.residual_energy[std::size_t(d) - 1]) {
                    detail = "residual energy increased at layer " + std::to_string(d) +
                             " (K=" + std::to_string(k) + ", frame " + std::to_string(i) + ")";
                    return false;
                }
            }
            for (int d = 0; d < 16; ++d) {
                noise[std::size_t(d)] += enc.residual_energy[std::size_t(d)];
            }
            double s = 0;
            for (float v : probes.frame(i)) {
                s += double(v) * double(v);
            }
            signal += s;
            ++frames_checked;
        }
        // Depth-d SNR non-decreasing <=> total noise non-increasing in d.
        double prev_snr = -1e300;
        for (int d = 0; d < 16; ++d) {
            const double snr = noise[std::size_t(d)] > 0.0
                                   ? 10.0 * std::log10(signal / noise[std::size_t(d)])
                                   : 1e300;
            if (snr < prev_snr) {
                detail = "SNR decreased at depth " + std::to_string(d + 1) +
                         " (K=" + std::to_string(k) + ")";
                return false;
            }
            prev_snr = snr;
        }
    }
    detail = std::to_string(frames_checked) + " frames x 16 layers, zero violations";
    return frames_checked >= 1000;
}

// ---- criterion 5: EMA training vs direct Lloyd oracle ------------------------

bool training_oracle(std::string& detail) {
    const auto start = Clock::now();
    const std::size_t n = 2000;
    const std::uint32_t dim = 8;
    FrameSeq corpus(n, dim);
    Rng rng(4242);
    for (std::size_t i = 0; i < n; ++i) {
        auto f = corpus.frame(i);
        const double center = i % 2 == 0 ? 4.0 : -4.0;
        for (std::size_t j = 0; j < dim; ++j) {
            f[j] = static_cast<float>(center + rng.gaussian(0.0, 0.5));
        }
    }

    TrainConfig cfg;
    cfg.codebook_size = 2;
    cfg.dim = dim;
    cfg.depth = 1;
    cfg.epochs = 800;  // plenty for the EMA to settle
    cfg.ema_decay = 0.9;
    cfg.seed = 4243;
    const TrainResult ema = train_codebooks(corpus, cfg);

    // Direct Lloyd's iterations (independent implementation), seeded from the
    // two extreme points so it lands in the same global optimum.
    std::vector<double> c0(dim), c1(dim);
    std::size_t lo = 0, hi = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (corpus.frame(i)[0] < corpus.frame(lo)[0]) {
            lo = i;
        }
        if (corpus.frame(i)[0] > corpus.frame(hi)[0]) {
            hi = i;
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        c0[j] = corpus.frame(lo)[j];
        c1[j] = corpus.frame(hi)[j];
    }
    double lloyd = 0.0;
    for (int iter = 0; iter < 300; ++iter) {
        std::vector<double> s0(dim, 0.0), s1(dim, 0.0);
        std::size_t n0 = 0, n1 = 0;
        lloyd = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto f = corpus.frame(i);
            double d0 = 0, d1 = 0;
            for (std::size_t j = 0; j < dim; ++j) {
                d0 += (double(f[j]) - c0[j]) * (double(f[j]) - c0[j]);
                d1 += (double(f[j]) - c1[j]) * (double(f[j]) - c1[j]);
            }
            if (d0 <= d1) {
                ++n0;
                lloyd += d0;
                for (std::size_t j = 0; j < dim; ++j) {
                    s0[j] += double(f[j]);
                }
            } else {
                ++n1;
                lloyd += d1;
                for (std::size_t j = 0; j < dim; ++j) {
                    s1[j] += double(f[j]);
                }
            }
        }
        for (std::size_t j = 0; j < dim; ++j) {
            if (n0 > 0) c0[j] = s0[j] / double(n0);
            if (n1 > 0) c1[j] = s1[j] / double(n1);
        }
    }
    lloyd /= double(n);

    const double rel = std::abs(ema.final_distortion[0] - lloyd) / lloyd;
    const double elapsed = ms_since(start);
    if (rel > 1e-6) {
        detail = "relative distortion gap " + std::to_string(rel) + " > 1e-6";
        return false;
    }
    if (elapsed >= 10000.0) {
        detail = "runtime " + std::to_string(elapsed) + " ms >= 10 s budget";
        return false;
    }
    std::ostringstream msg;
    msg << "relative gap " << rel << " in " << elapsed << " ms";
    detail = msg.str();
    return true;
}

// ---- criterion 6: streaming/offline bit-exactness ----------------------------

bool streaming_bit_exactness(std::string& detail) {
    Rng meta(777);
    for (int session = 0; session < 100; ++session) {
        const std::uint32_t k = 4u << meta.below(3);          // 4, 8, 16
        const std::uint32_t dim = 4 + std::uint32_t(meta.below(12));
        const int depth = 1 + int(meta.below(16));
        const std::size_t frames = 3 + meta.below(30);
        const RvqStack stack = random_stack(k, dim, 16, 8000 + std::uint64_t(session));
        const FrameSeq input = random_frames(frames, dim, 9000 + std::uint64_t(session));
        const FirFilter filter = FirFilter::default_decoder();

        // Offline passes.
        std::vector<CodeFrame> offline_codes;
        for (const EncodedFrame& e : encode_frames(input, stack, depth)) {
            offline_codes.push_back(e.codes);
        }
        const FrameSeq offline_out = decode_offline(offline_codes, stack, depth, filter);

        // Streaming passes.
        StreamEncoder enc(stack, depth);
        StreamDecoder dec(stack, depth, filter);
        for (std::size_t i = 0; i < frames; ++i) {
            const CodeFrame c = enc.push(input.frame(i));
            if (!(c == offline_codes[i])) {
                detail = "session " + std::to_string(session) + ": encode diverged at frame " +
                         std::to_string(i);
                return false;
            }
            const std::vector<float> out = dec.push(c);
            if (std::memcmp(out.data(), offline_out.frame(i).data(),
                            dim * sizeof(float)) != 0) {
                detail = "session " + std::to_string(session) + ": decode diverged at frame " +
                         std::to_string(i);
                return false;
            }
        }

        // Future-input perturbation leaves all past outputs bit-identical.
        const std::size_t cut = meta.below(frames);
        FrameSeq perturbed_in = input;
        for (std::size_t i = cut; i < frames; ++i) {
            for (float& v : perturbed_in.frame(i)) {
                v += 1.0f;
            }
        }
        auto perturbed_codes = offline_codes;
        for (std::size_t i = cut; i < frames; ++i) {
            for (auto& code : perturbed_codes[i].codes) {
                code = static_cast<std::uint16_t>((code + 1) % k);
            }
        }
        StreamEncoder enc_a(stack, depth), enc_b(stack, depth);
        StreamDecoder dec_a(stack, depth, filter), dec_b(stack, depth, filter);
        for (std::size_t i = 0; i < cut; ++i) {
            const CodeFrame ca = enc_a.push(input.frame(i));
            const CodeFrame cb = enc_b.push(perturbed_in.frame(i));
            if (!(ca == cb)) {
                detail = "session " + std::to_string(session) +
                         ": future frame perturbation changed past codes";
                return false;
            }
            const auto oa = dec_a.push(offline_codes[i]);
            const auto ob = dec_b.push(perturbed_codes[i]);
            if (std::memcmp(oa.data(), ob.data(), dim * sizeof(float)) != 0) {
                detail = "session " + std::to_string(session) +
                         ": future code perturbation changed past decode output";
                return false;
            }
        }
    }
    detail = "100 sessions, streaming == offline bit-exact, causality holds";
    return true;
}

// ---- criterion 7: dual-track session contract --------------------------------

bool dual_track_contract(std::string& detail) {
    Rng meta(888);
    for (int session = 0; session < 100; ++session) {
        const std::uint32_t k = 8u << meta.below(3);  // 8..32
        const bool use_markov = meta.below(2) == 0;
        const std::uint64_t seed = 100 + std::uint64_t(session);
        const EchoModel echo(k);
        const MarkovModel markov(k, seed);
        const StepModel& model = use_markov ? static_cast<const StepModel&>(markov)
                                            : static_cast<const StepModel&>(echo);

        const std::size_t text_len = 1 + meta.below(12);
        std::vector<TextToken> text;
        for (std::size_t t = 0; t < text_len; ++t) {
            text.push_back("w" + std::to_string(meta.below(50)));
        }
        StopRule stop;
        stop.max_steps = 256;
        stop.pad_steps_after_text = meta.below(6);

        const SessionResult a = run_session(text, model, stop);
        const SessionResult b = run_session(text, model, stop);

        // Exactly one full frame per step, codes in range.
        if (a.events.size() != a.frames.size()) {
            detail = "session " + std::to_string(session) + ": step/frame count mismatch";
            return false;
        }
        for (std::size_t i = 0; i < a.events.size(); ++i) {
            if (a.events[i].step != i) {
                detail = "session " + std::to_string(session) + ": non-contiguous steps";
                return false;
            }
            for (std::uint16_t code : a.events[i].codes.codes) {
                if (code >= k) {
                    detail = "session " + std::to_string(session) + ": code out of range";
                    return false;
                }
            }
        }
        // Determinism.
        if (!(a.frames == b.frames)) {
            detail = "session " + std::to_string(session) + ": rerun diverged";
            return false;
        }
        // Causality: altering text after a cut leaves earlier frames unchanged.
        if (text_len >= 2) {
            const std::size_t cut = 1 + meta.below(text_len - 1);
            std::vector<TextToken> altered = text;
            for (std::size_t i = cut; i < altered.size(); ++i) {
                altered[i] = "ALT" + std::to_string(i);
            }
            const SessionResult c = run_session(altered, model, stop);
            for (std::size_t i = 0; i < cut; ++i) {
                if (!(c.frames[i] == a.frames[i])) {
                    detail = "session " + std::to_string(session) +
                             ": future text change altered frame " + std::to_string(i);
                    return false;
                }
            }
        }
    }
    detail = "100 sessions, one 16-code frame per step, causal + deterministic";
    return true;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<bool(std::string&)> run;
    };
    const std::vector<Criterion> criteria = {
        {"table5-first-packet-sums", table5_reproduction},
        {"first-packet-audio-accounting", first_packet_audio},
        {"block-mask-oracle-equivalence", block_mask_oracle},
        {"rvq-monotonicity-suite", rvq_monotonicity},
        {"codebook-training-oracle", training_oracle},
        {"streaming-offline-bit-exactness", streaming_bit_exactness},
        {"dual-track-contract", dual_track_contract},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("%s  %-34s %s\n", ok ? "PASS" : "FAIL", c.name, detail.c_str());
        std::fflush(stdout);
        if (!ok) {
            ++failures;
        }
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
