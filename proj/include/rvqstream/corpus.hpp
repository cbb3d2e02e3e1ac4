#pragma once

// Seeded synthetic feature corpora: either draws from a Gaussian mixture or
// mel-like log filterbank features of a synthetic multi-tone waveform. Same
// spec + seed gives a bit-identical corpus.

#include <cstdint>
#include <string>
#include <vector>

#include "rvqstream/types.hpp"

namespace rvqstream {

enum class CorpusKind { gaussian_mixture, filterbank_tones };

struct MixtureParams {
    int components = 4;
    double mean_scale = 5.0;        // component means ~ N(0, mean_scale^2)
    double sigma = 1.0;             // within-component std dev
    std::vector<double> weights;    // optional; uniform when empty
};

struct ToneParams {
    double sample_rate_hz = 16000.0;
    int num_tones = 3;
    double min_freq_hz = 80.0;
    double max_freq_hz = 6000.0;
    double noise_sigma = 1e-3;
    int fft_size = 1024;
};

struct SyntheticCorpusSpec {
    CorpusKind kind = CorpusKind::gaussian_mixture;
    std::size_t frames = 0;
    std::uint32_t dim = kDefaultDim;
    std::uint64_t seed = 0;
    double frame_rate_hz = kDefaultFrameRateHz;
    MixtureParams mixture;
    ToneParams tones;
};

struct CorpusStats {
    std::vector<double> mean;          // per dim
    std::vector<double> variance;      // per dim
    std::vector<std::uint64_t> component_counts;  // mixture kind only
};

struct CorpusResult {
    FrameSeq frames;
    CorpusStats stats;
};

CorpusResult gen_corpus(const SyntheticCorpusSpec& spec);

std::string stats_to_json(const SyntheticCorpusSpec& spec, const CorpusStats& stats);

}  // namespace rvqstream
