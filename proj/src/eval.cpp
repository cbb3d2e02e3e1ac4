#include "rvqstream/eval.hpp"

#include <cmath>

#include <fftw3.h>
#include <nlohmann/json.hpp>

#include "rvqstream/kernels.hpp"
#include "rvqstream/version.hpp"

namespace rvqstream {

namespace {

double capped_snr_db(double signal, double noise) {
    if (noise <= 0.0) {
        return kSnrCapDb;
    }
    return std::min(kSnrCapDb, 10.0 * std::log10(signal / noise));
}

// Magnitude spectrum of one zero-padded segment (onesided, window/2+1 bins).
class SegmentDft {
  public:
    explicit SegmentDft(int window) : window_(window), bins_(window / 2 + 1) {
        in_ = fftw_alloc_real(std::size_t(window_));
        out_ = fftw_alloc_complex(std::size_t(bins_));
        plan_ = fftw_plan_dft_r2c_1d(window_, in_, out_, FFTW_ESTIMATE);
    }
    ~SegmentDft() {
        fftw_destroy_plan(plan_);
        fftw_free(in_);
        fftw_free(out_);
    }
    SegmentDft(const SegmentDft&) = delete;
    SegmentDft& operator=(const SegmentDft&) = delete;

    int bins() const { return bins_; }

    // seq: strided dim-major access into a FrameSeq column.
    void magnitudes(const FrameSeq& seq, std::size_t dim_index, std::size_t start,
                    std::size_t len, std::vector<double>& out_mag) {
        for (int i = 0; i < window_; ++i) {
            const std::size_t frame = start + std::size_t(i);
            in_[i] = (std::size_t(i) < len && frame < seq.frames())
                         ? static_cast<double>(seq.frame(frame)[dim_index])
                         : 0.0;
        }
        fftw_execute(plan_);
        out_mag.resize(std::size_t(bins_));
        for (int k = 0; k < bins_; ++k) {
            out_mag[std::size_t(k)] = std::hypot(out_[k][0], out_[k][1]);
        }
    }

  private:
    int window_;
    int bins_;
    double* in_;
    fftw_complex* out_;
    fftw_plan plan_;
};

}  // namespace

double spectral_l1(const FrameSeq& a, const FrameSeq& b, int window) {
    if (a.frames() != b.frames() || a.dim() != b.dim()) {
        throw DimensionError("spectral_l1: sequence shapes differ");
    }
    if (window < 2) {
        throw ConfigError("spectral_l1: window too small");
    }
    const std::size_t n = a.frames();
    const std::size_t w = std::size_t(window);
    std::vector<std::size_t> starts;
    if (n < w) {
        starts.push_back(0);  // single zero-padded segment
    } else {
        for (std::size_t s = 0; s + w <= n; s += w / 2) {
            starts.push_back(s);
        }
    }
    SegmentDft dft(window);
    std::vector<double> mag_a, mag_b;
    double total = 0.0;
    std::uint64_t terms = 0;
    for (std::size_t d = 0; d < a.dim(); ++d) {
        for (std::size_t s : starts) {
            const std::size_t len = std::min(w, n - s);
            dft.magnitudes(a, d, s, len, mag_a);
            dft.magnitudes(b, d, s, len, mag_b);
            for (int k = 0; k < dft.bins(); ++k) {
                total += std::abs(mag_a[std::size_t(k)] - mag_b[std::size_t(k)]);
                ++terms;
            }
        }
    }
    return terms == 0 ? 0.0 : total / static_cast<double>(terms);
}

EvalReport eval_codec(const RvqStack& stack, const FrameSeq& corpus,
                      const EvalOptions& options) {
    stack.validate();
    if (corpus.dim() != stack.dim) {
        throw DimensionError("eval_codec: corpus dim != stack dim");
    }
    const int depth = stack.depth();
    const std::size_t n = corpus.frames();
    const std::size_t dim = stack.dim;

    EvalReport report;
    report.snr_db.assign(std::size_t(depth), 0.0);
    report.perplexity.assign(std::size_t(depth), 0.0);

    // One encode pass at full depth; prefix stability covers every depth.
    std::vector<double> noise(std::size_t(depth), 0.0);
    double signal = 0.0;
    std::vector<std::vector<std::uint64_t>> usage(static_cast<std::size_t>(depth));
    for (int d = 0; d < depth; ++d) {
        usage[std::size_t(d)].assign(stack.layers[std::size_t(d)].size, 0);
    }

    FrameSeq recon_full(n, dim);  // depth-16 reconstruction, reused for spectral loss
    std::vector<float> recon(dim);
    for (std::size_t i = 0; i < n; ++i) {
        const auto frame = corpus.frame(i);
        signal += static_cast<double>(
            kernels::dot(frame.data(), frame.data(), dim));
        const EncodedFrame enc = encode_frame(frame, stack, depth);
        std::fill(recon.begin(), recon.end(), 0.0f);
        for (int d = 0; d < depth; ++d) {
            const Codebook& cb = stack.layers[std::size_t(d)];
            const std::uint16_t code = enc.codes.codes[std::size_t(d)];
            ++usage[std::size_t(d)][code];
            kernels::add(recon.data(), cb.entry(code).data(), dim);
            // Residual energy after layer d is exactly the depth-(d+1) error.
            noise[std::size_t(d)] += static_cast<double>(enc.residual_energy[std::size_t(d)]);
        }
        std::copy(recon.begin(), recon.end(), recon_full.frame(i).begin());
    }

    for (int d = 0; d < depth; ++d) {
        report.snr_db[std::size_t(d)] = capped_snr_db(signal, noise[std::size_t(d)]);
        double entropy = 0.0;
        for (std::uint64_t count : usage[std::size_t(d)]) {
            if (count > 0) {
                const double p = static_cast<double>(count) / static_cast<double>(n);
                entropy -= p * std::log(p);
            }
        }
        report.perplexity[std::size_t(d)] = std::exp(entropy);
    }

    for (int window : options.spectral_windows) {
        report.spectral_loss[window] = spectral_l1(corpus, recon_full, window);
    }

    if (options.teacher != nullptr) {
        std::vector<float> projection = options.projection;
        if (projection.empty()) {
            projection = random_orthonormal_projection(options.teacher_dim, dim, stack.seed);
        }
        const AlignmentResult align = semantic_alignment_loss(
            stack, corpus, *options.teacher, projection, options.teacher_dim);
        report.alignment_loss = align.loss;
        report.alignment_warnings = align.zero_norm_warnings;
    }
    return report;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["schema_version"] = {{"major", RVQSTREAM_SCHEMA_MAJOR}, {"minor", RVQSTREAM_SCHEMA_MINOR}};
    j["tool_version"] = RVQSTREAM_VERSION;
    j["snr_db"] = report.snr_db;
    nlohmann::json spectral = nlohmann::json::object();
    for (const auto& [window, loss] : report.spectral_loss) {
        spectral[std::to_string(window)] = loss;
    }
    j["spectral_loss"] = spectral;
    j["perplexity"] = report.perplexity;
    if (report.alignment_loss.has_value()) {
        j["alignment_loss"] = *report.alignment_loss;
        j["alignment_warnings"] = report.alignment_warnings;
    }
    return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    if (!j.contains("schema_version") ||
        j["schema_version"].value("major", -1) != RVQSTREAM_SCHEMA_MAJOR) {
        throw FormatError("eval report: unsupported schema major version");
    }
    EvalReport report;
    report.snr_db = j.value("snr_db", std::vector<double>{});
    report.perplexity = j.value("perplexity", std::vector<double>{});
    if (j.contains("spectral_loss")) {
        for (const auto& [key, value] : j["spectral_loss"].items()) {
            report.spectral_loss[std::stoi(key)] = value.get<double>();
        }
    }
    if (j.contains("alignment_loss")) {
        report.alignment_loss = j["alignment_loss"].get<double>();
        report.alignment_warnings = j.value("alignment_warnings", std::uint64_t{0});
    }
    return report;
}

}  // namespace rvqstream
