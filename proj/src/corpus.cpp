#include "rvqstream/corpus.hpp"

#include <cmath>
#include <numeric>

#include <fftw3.h>
#include <nlohmann/json.hpp>

#include "rvqstream/rng.hpp"
#include "rvqstream/version.hpp"

namespace rvqstream {

namespace {

constexpr double kPi = 3.14159265358979323846;

void accumulate_stats(const FrameSeq& frames, CorpusStats& stats) {
    const std::size_t dim = frames.dim();
    const std::size_t n = frames.frames();
    stats.mean.assign(dim, 0.0);
    stats.variance.assign(dim, 0.0);
    if (n == 0) {
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto f = frames.frame(i);
        for (std::size_t d = 0; d < dim; ++d) {
            stats.mean[d] += f[d];
        }
    }
    for (double& m : stats.mean) {
        m /= static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto f = frames.frame(i);
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = f[d] - stats.mean[d];
            stats.variance[d] += diff * diff;
        }
    }
    for (double& v : stats.variance) {
        v /= static_cast<double>(n);
    }
}

CorpusResult gen_mixture(const SyntheticCorpusSpec& spec) {
    const MixtureParams& p = spec.mixture;
    if (p.components <= 0) {
        throw ConfigError("gen_corpus: mixture needs >= 1 component");
    }
    std::vector<double> weights = p.weights;
    if (weights.empty()) {
        weights.assign(std::size_t(p.components), 1.0 / p.components);
    }
    if (weights.size() != std::size_t(p.components)) {
        throw ConfigError("gen_corpus: weights length != components");
    }
    double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (wsum <= 0.0) {
        throw ConfigError("gen_corpus: weights must sum > 0");
    }
    for (double& w : weights) {
        w /= wsum;
    }

    Rng mean_rng(mix_seed(spec.seed, 0x6d65616eULL));  // component means
    std::vector<double> means(std::size_t(p.components) * spec.dim);
    for (double& m : means) {
        m = mean_rng.gaussian(0.0, p.mean_scale);
    }

    CorpusResult result;
    result.frames = FrameSeq(spec.frames, spec.dim);
    result.stats.component_counts.assign(std::size_t(p.components), 0);
    Rng draw_rng(mix_seed(spec.seed, 0x64726177ULL));
    for (std::size_t i = 0; i < spec.frames; ++i) {
        const double u = draw_rng.uniform();
        std::size_t comp = weights.size() - 1;
        double acc = 0.0;
        for (std::size_t c = 0; c < weights.size(); ++c) {
            acc += weights[c];
            if (u < acc) {
                comp = c;
                break;
            }
        }
        ++result.stats.component_counts[comp];
        auto frame = result.frames.frame(i);
        for (std::size_t d = 0; d < spec.dim; ++d) {
            frame[d] = static_cast<float>(
                means[comp * spec.dim + d] +
                (p.sigma > 0.0 ? draw_rng.gaussian(0.0, p.sigma) : 0.0));
        }
    }
    accumulate_stats(result.frames, result.stats);
    return result;
}

// Triangular mel filterbank over an FFT power spectrum.
std::vector<double> mel_weights(int bands, int fft_size, double sample_rate) {
    auto hz_to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
    auto mel_to_hz = [](double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); };
    const int bins = fft_size / 2 + 1;
    const double mel_lo = hz_to_mel(0.0);
    const double mel_hi = hz_to_mel(sample_rate / 2.0);
    std::vector<double> edges(std::size_t(bands) + 2);
    for (std::size_t b = 0; b < edges.size(); ++b) {
        edges[b] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(b) /
                                          static_cast<double>(bands + 1));
    }
    std::vector<double> weights(std::size_t(bands) * bins, 0.0);
    for (int b = 0; b < bands; ++b) {
        const double lo = edges[std::size_t(b)];
        const double mid = edges[std::size_t(b) + 1];
        const double hi = edges[std::size_t(b) + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = sample_rate * static_cast<double>(k) / fft_size;
            double w = 0.0;
            if (f >= lo && f <= mid && mid > lo) {
                w = (f - lo) / (mid - lo);
            } else if (f > mid && f <= hi && hi > mid) {
                w = (hi - f) / (hi - mid);
            }
            weights[std::size_t(b) * bins + std::size_t(k)] = w;
        }
    }
    return weights;
}

CorpusResult gen_tones(const SyntheticCorpusSpec& spec) {
    const ToneParams& p = spec.tones;
    if (p.num_tones <= 0 || p.fft_size <= 0 || p.sample_rate_hz <= 0.0) {
        throw ConfigError("gen_corpus: bad tone params");
    }
    if (spec.frame_rate_hz <= 0.0) {
        throw ConfigError("gen_corpus: bad frame rate");
    }
    const std::size_t hop =
        static_cast<std::size_t>(p.sample_rate_hz / spec.frame_rate_hz + 0.5);
    const std::size_t window = static_cast<std::size_t>(p.fft_size);
    const std::size_t samples = spec.frames * hop + window;

    Rng rng(mix_seed(spec.seed, 0x746f6e65ULL));  // "tone"
    struct Tone {
        double freq, amp, phase, am_rate, am_depth;
    };
    std::vector<Tone> tones(std::size_t(p.num_tones));
    for (Tone& t : tones) {
        t.freq = rng.uniform(p.min_freq_hz, p.max_freq_hz);
        t.amp = rng.uniform(0.1, 1.0);
        t.phase = rng.uniform(0.0, 2.0 * kPi);
        t.am_rate = rng.uniform(0.1, 2.0);
        t.am_depth = rng.uniform(0.0, 0.5);
    }

    std::vector<double> wave(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        const double t = static_cast<double>(s) / p.sample_rate_hz;
        double v = 0.0;
        for (const Tone& tone : tones) {
            const double am = 1.0 + tone.am_depth * std::sin(2.0 * kPi * tone.am_rate * t);
            v += tone.amp * am * std::sin(2.0 * kPi * tone.freq * t + tone.phase);
        }
        if (p.noise_sigma > 0.0) {
            v += rng.gaussian(0.0, p.noise_sigma);
        }
        wave[s] = v;
    }

    // Hann-windowed frames -> FFT power -> mel bands -> log.
    const int bins = p.fft_size / 2 + 1;
    const std::vector<double> bank = mel_weights(int(spec.dim), p.fft_size, p.sample_rate_hz);
    std::vector<double> hann(window);
    for (std::size_t i = 0; i < window; ++i) {
        hann[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                       static_cast<double>(window - 1));
    }

    double* in = fftw_alloc_real(window);
    fftw_complex* out = fftw_alloc_complex(std::size_t(bins));
    fftw_plan plan = fftw_plan_dft_r2c_1d(int(window), in, out, FFTW_ESTIMATE);

    CorpusResult result;
    result.frames = FrameSeq(spec.frames, spec.dim);
    std::vector<double> power(static_cast<std::size_t>(bins));
    for (std::size_t f = 0; f < spec.frames; ++f) {
        const double* src = wave.data() + f * hop;
        for (std::size_t i = 0; i < window; ++i) {
            in[i] = src[i] * hann[i];
        }
        fftw_execute(plan);
        for (int k = 0; k < bins; ++k) {
            power[std::size_t(k)] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
        }
        auto frame = result.frames.frame(f);
        for (std::size_t b = 0; b < spec.dim; ++b) {
            double e = 0.0;
            for (int k = 0; k < bins; ++k) {
                e += bank[b * std::size_t(bins) + std::size_t(k)] * power[std::size_t(k)];
            }
            frame[b] = static_cast<float>(std::log(1.0 + e));
        }
    }
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);

    accumulate_stats(result.frames, result.stats);
    return result;
}

}  // namespace

CorpusResult gen_corpus(const SyntheticCorpusSpec& spec) {
    if (spec.frames == 0) {
        throw ConfigError("gen_corpus: zero frames");
    }
    if (spec.dim == 0) {
        throw ConfigError("gen_corpus: zero dim");
    }
    switch (spec.kind) {
        case CorpusKind::gaussian_mixture: return gen_mixture(spec);
        case CorpusKind::filterbank_tones: return gen_tones(spec);
    }
    throw ConfigError("gen_corpus: unknown kind");
}

std::string stats_to_json(const SyntheticCorpusSpec& spec, const CorpusStats& stats) {
    nlohmann::json j;
    j["schema_version"] = {{"major", RVQSTREAM_SCHEMA_MAJOR}, {"minor", RVQSTREAM_SCHEMA_MINOR}};
    j["tool_version"] = RVQSTREAM_VERSION;
    j["kind"] = spec.kind == CorpusKind::gaussian_mixture ? "gaussian_mixture"
                                                          : "filterbank_tones";
    j["frames"] = spec.frames;
    j["dim"] = spec.dim;
    j["seed"] = spec.seed;
    j["frame_rate_hz"] = spec.frame_rate_hz;
    j["mean"] = stats.mean;
    j["variance"] = stats.variance;
    if (!stats.component_counts.empty()) {
        j["component_counts"] = stats.component_counts;
    }
    return j.dump(2) + "\n";
}

}  // namespace rvqstream
