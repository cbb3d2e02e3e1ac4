#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "rvqstream/corpus.hpp"
#include "rvqstream/eval.hpp"
#include "rvqstream/rng.hpp"
#include "rvqstream/rvq.hpp"

using namespace rvqstream;

namespace {

SyntheticCorpusSpec mixture_spec(std::size_t frames, std::uint32_t dim,
                                 std::uint64_t seed) {
    SyntheticCorpusSpec spec;
    spec.kind = CorpusKind::gaussian_mixture;
    spec.frames = frames;
    spec.dim = dim;
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("zero-variance single-component mixture collapses to the mean") {
    SyntheticCorpusSpec spec = mixture_spec(50, 8, 5);
    spec.mixture.components = 1;
    spec.mixture.sigma = 0.0;
    const CorpusResult corpus = gen_corpus(spec);
    const auto first = corpus.frames.frame(0);
    for (std::size_t i = 1; i < corpus.frames.frames(); ++i) {
        const auto f = corpus.frames.frame(i);
        CHECK(std::memcmp(f.data(), first.data(), f.size() * sizeof(float)) == 0);
    }
    for (double v : corpus.stats.variance) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("same spec and seed give bit-identical corpora") {
    const SyntheticCorpusSpec spec = mixture_spec(200, 16, 6);
    const CorpusResult a = gen_corpus(spec);
    const CorpusResult b = gen_corpus(spec);
    CHECK(a.frames == b.frames);

    SyntheticCorpusSpec tones = spec;
    tones.kind = CorpusKind::filterbank_tones;
    tones.frames = 40;
    const CorpusResult ta = gen_corpus(tones);
    const CorpusResult tb = gen_corpus(tones);
    CHECK(ta.frames == tb.frames);
    CHECK(ta.frames.frames() == 40);
    CHECK(ta.frames.dim() == 16);
}

TEST_CASE("two-component frequencies stay within the 3-sigma binomial bound") {
    SyntheticCorpusSpec spec = mixture_spec(10000, 4, 7);
    spec.mixture.components = 2;
    spec.mixture.weights = {0.3, 0.7};
    const CorpusResult corpus = gen_corpus(spec);
    REQUIRE(corpus.stats.component_counts.size() == 2);
    const double n = 10000.0;
    const double weights[2] = {0.3, 0.7};
    for (int c = 0; c < 2; ++c) {
        const double expect = n * weights[c];
        const double sigma = std::sqrt(n * weights[c] * (1.0 - weights[c]));
        const double got = static_cast<double>(corpus.stats.component_counts[std::size_t(c)]);
        CHECK(std::abs(got - expect) <= 3.0 * sigma);
    }
}

TEST_CASE("zero frames or dims are rejected") {
    SyntheticCorpusSpec spec = mixture_spec(0, 8, 1);
    CHECK_THROWS_AS(gen_corpus(spec), ConfigError);
    spec.frames = 10;
    spec.dim = 0;
    CHECK_THROWS_AS(gen_corpus(spec), ConfigError);
}

TEST_CASE("filterbank features respond to tone content") {
    SyntheticCorpusSpec spec = mixture_spec(30, 24, 8);
    spec.kind = CorpusKind::filterbank_tones;
    spec.tones.noise_sigma = 0.0;
    const CorpusResult corpus = gen_corpus(spec);
    // Some band must carry signal, and every value is finite.
    double max_val = 0.0;
    for (float v : corpus.frames.raw()) {
        CHECK(std::isfinite(v));
        max_val = std::max(max_val, double(v));
    }
    CHECK(max_val > 1.0);
}

// ---- eval -----------------------------------------------------------------

namespace {

RvqStack trained_stack(const FrameSeq& corpus, std::uint32_t k, int depth,
                       std::uint64_t seed) {
    TrainConfig cfg;
    cfg.codebook_size = k;
    cfg.dim = static_cast<std::uint32_t>(corpus.dim());
    cfg.depth = depth;
    cfg.epochs = 8;
    cfg.seed = seed;
    return train_codebooks(corpus, cfg).stack;
}

}  // namespace

TEST_CASE("SNR is non-decreasing in depth and perplexity stays in [1, K]") {
    const CorpusResult corpus = gen_corpus(mixture_spec(400, 8, 9));
    const RvqStack stack = trained_stack(corpus.frames, 16, 8, 10);
    const EvalReport report = eval_codec(stack, corpus.frames);
    REQUIRE(report.snr_db.size() == 8);
    for (std::size_t d = 1; d < report.snr_db.size(); ++d) {
        CHECK(report.snr_db[d] >= report.snr_db[d - 1]);
    }
    for (double p : report.perplexity) {
        CHECK(p >= 1.0);
        CHECK(p <= 16.0);
    }
}

TEST_CASE("a corpus of exact centroids reports the capped SNR sentinel") {
    RvqStack stack;
    stack.dim = 4;
    Rng rng(11);
    Codebook cb(0, 8, 4);
    for (float& e : cb.entries) {
        e = static_cast<float>(rng.gaussian(0.0, 3.0));
    }
    stack.layers.push_back(cb);

    FrameSeq corpus(8, 4);
    for (std::size_t i = 0; i < 8; ++i) {
        const auto entry = stack.layers[0].entry(i);
        std::copy(entry.begin(), entry.end(), corpus.frame(i).begin());
    }
    const EvalReport report = eval_codec(stack, corpus);
    CHECK(report.snr_db[0] == kSnrCapDb);
}

TEST_CASE("spectral loss matches a direct scalar DFT recomputation") {
    // 2-frame toy corpus, window 32 -> one zero-padded segment per dim.
    FrameSeq a(2, 3);
    FrameSeq b(2, 3);
    Rng rng(12);
    for (float& v : a.raw()) {
        v = static_cast<float>(rng.gaussian());
    }
    for (float& v : b.raw()) {
        v = static_cast<float>(rng.gaussian());
    }

    const int window = 32;
    const double got = spectral_l1(a, b, window);

    // Independent oracle: naive DFT magnitudes in double.
    auto magnitude = [&](const FrameSeq& seq, std::size_t dim, int bin) {
        double re = 0.0, im = 0.0;
        for (int t = 0; t < window; ++t) {
            const double x =
                t < 2 ? static_cast<double>(seq.frame(std::size_t(t))[dim]) : 0.0;
            const double ang = -2.0 * 3.14159265358979323846 * bin * t / window;
            re += x * std::cos(ang);
            im += x * std::sin(ang);
        }
        return std::sqrt(re * re + im * im);
    };
    double want = 0.0;
    std::size_t terms = 0;
    for (std::size_t d = 0; d < 3; ++d) {
        for (int k = 0; k <= window / 2; ++k) {
            want += std::abs(magnitude(a, d, k) - magnitude(b, d, k));
            ++terms;
        }
    }
    want /= static_cast<double>(terms);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("identical sequences have zero spectral loss at every window") {
    const CorpusResult corpus = gen_corpus(mixture_spec(150, 4, 13));
    for (int window : {32, 64, 128}) {
        CHECK(spectral_l1(corpus.frames, corpus.frames, window) == 0.0);
    }
}

TEST_CASE("eval report JSON round-trips and rejects foreign major versions") {
    const CorpusResult corpus = gen_corpus(mixture_spec(200, 6, 14));
    const RvqStack stack = trained_stack(corpus.frames, 8, 4, 15);
    EvalOptions options;
    const EvalReport report = eval_codec(stack, corpus.frames, options);

    const std::string json = report_to_json(report);
    const EvalReport back = report_from_json(json);
    CHECK(back.snr_db == report.snr_db);
    CHECK(back.perplexity == report.perplexity);
    CHECK(back.spectral_loss == report.spectral_loss);

    std::string bad = json;
    const auto pos = bad.find("\"major\": 1");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 10, "\"major\": 9");
    CHECK_THROWS_AS(report_from_json(bad), FormatError);
}

TEST_CASE("alignment loss plugs into the eval report when a teacher is given") {
    const CorpusResult corpus = gen_corpus(mixture_spec(120, 6, 16));
    const RvqStack stack = trained_stack(corpus.frames, 8, 2, 17);
    std::vector<TeacherFrame> teacher(corpus.frames.frames());
    Rng rng(18);
    for (auto& t : teacher) {
        t.vector.resize(4);
        for (float& v : t.vector) {
            v = static_cast<float>(rng.gaussian());
        }
    }
    EvalOptions options;
    options.teacher = &teacher;
    options.teacher_dim = 4;
    const EvalReport report = eval_codec(stack, corpus.frames, options);
    REQUIRE(report.alignment_loss.has_value());
    CHECK(*report.alignment_loss >= 0.0);
    CHECK(*report.alignment_loss <= 2.0);
}
