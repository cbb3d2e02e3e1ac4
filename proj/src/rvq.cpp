#include "rvqstream/rvq.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "rvqstream/kernels.hpp"
#include "rvqstream/rng.hpp"

namespace rvqstream {

namespace {

// Fixed shard count for training reductions. Shard partials combine in shard
// order, so results are bit-identical for any worker count up to kShards.
constexpr int kShards = 8;

void check_dim(std::size_t got, std::size_t want, const char* where) {
    if (got != want) {
        throw DimensionError(std::string(where) + ": dim " + std::to_string(got) +
                             " != " + std::to_string(want));
    }
}

}  // namespace

QuantizeResult quantize_layer(std::span<const float> vector, const Codebook& codebook) {
    if (codebook.size == 0) {
        throw ConfigError("quantize_layer: empty codebook");
    }
    check_dim(vector.size(), codebook.dim, "quantize_layer");
    QuantizeResult result;
    result.index = static_cast<std::uint16_t>(kernels::nearest_row(
        vector.data(), codebook.entries.data(), codebook.size, codebook.dim, nullptr));
    result.residual.resize(codebook.dim);
    kernels::sub(result.residual.data(), vector.data(),
                 codebook.entry(result.index).data(), codebook.dim);
    return result;
}

EncodedFrame encode_frame(std::span<const float> frame, const RvqStack& stack, int depth) {
    if (depth < 1 || depth > stack.depth()) {
        throw ConfigError("encode_frame: depth out of range");
    }
    check_dim(frame.size(), stack.dim, "encode_frame");
    EncodedFrame out;
    out.depth = depth;
    std::vector<float> residual(frame.begin(), frame.end());
    for (int layer = 0; layer < depth; ++layer) {
        const Codebook& cb = stack.layers[std::size_t(layer)];
        const std::size_t index = kernels::nearest_row(
            residual.data(), cb.entries.data(), cb.size, cb.dim, nullptr);
        out.codes.codes[std::size_t(layer)] = static_cast<std::uint16_t>(index);
        kernels::sub(residual.data(), residual.data(), cb.entry(index).data(), cb.dim);
        out.residual_energy[std::size_t(layer)] =
            kernels::dot(residual.data(), residual.data(), cb.dim);
    }
    return out;
}

std::vector<float> decode_frame(const CodeFrame& codes, const RvqStack& stack, int depth) {
    if (depth < 1 || depth > stack.depth()) {
        throw ConfigError("decode_frame: depth out of range");
    }
    std::vector<float> out(stack.dim, 0.0f);
    for (int layer = 0; layer < depth; ++layer) {
        const Codebook& cb = stack.layers[std::size_t(layer)];
        const std::uint16_t index = codes.codes[std::size_t(layer)];
        if (index >= cb.size) {
            throw CodeRangeError("decode_frame: code " + std::to_string(index) +
                                 " out of range for layer " + std::to_string(layer));
        }
        kernels::add(out.data(), cb.entry(index).data(), cb.dim);
    }
    return out;
}

std::vector<EncodedFrame> encode_frames(const FrameSeq& frames, const RvqStack& stack,
                                        int depth, int workers) {
    std::vector<EncodedFrame> out(frames.frames());
    const std::size_t n = frames.frames();
    auto encode_range = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            out[i] = encode_frame(frames.frame(i), stack, depth);
        }
    };
    if (workers <= 1 || n < 64) {
        encode_range(0, n);
        return out;
    }
    const std::size_t w = std::min<std::size_t>(std::size_t(workers), n);
    std::vector<std::thread> threads;
    threads.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        const std::size_t lo = n * t / w;
        const std::size_t hi = n * (t + 1) / w;
        threads.emplace_back(encode_range, lo, hi);
    }
    for (auto& th : threads) {
        th.join();
    }
    return out;
}

FrameSeq decode_frames(const std::vector<CodeFrame>& codes, const RvqStack& stack,
                       int depth) {
    FrameSeq out(codes.size(), stack.dim);
    for (std::size_t i = 0; i < codes.size(); ++i) {
        const std::vector<float> frame = decode_frame(codes[i], stack, depth);
        std::copy(frame.begin(), frame.end(), out.frame(i).begin());
    }
    return out;
}

// ---- training -----------------------------------------------------------

namespace {

// k-means++ seeding over `data` (n x dim), distances in double. Entries below
// `first_free` are left untouched (the reserved null refinement).
void kmeanspp_init(Codebook& cb, const float* data, std::size_t n, std::size_t dim,
                   std::size_t first_free, Rng& rng) {
    const std::size_t k = cb.size;
    if (first_free >= k) {
        return;
    }
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    std::size_t first = static_cast<std::size_t>(rng.below(n));
    std::copy(data + first * dim, data + (first + 1) * dim, cb.entry(first_free).begin());
    for (std::size_t c = first_free + 1; c < k; ++c) {
        const float* prev = cb.entry(c - 1).data();
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 = kernels::squared_l2(data + i * dim, prev, dim);
            if (d2 < min_d2[i]) {
                min_d2[i] = d2;
            }
            total += min_d2[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double run = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                run += min_d2[i];
                if (run >= target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.below(n));
        }
        std::copy(data + pick * dim, data + (pick + 1) * dim, cb.entry(c).begin());
    }
    // EMA state starts consistent with the seeded entries.
    for (std::size_t c = 0; c < k; ++c) {
        cb.ema_usage[c] = 1.0;
        for (std::size_t j = 0; j < dim; ++j) {
            cb.ema_sum[c * dim + j] = static_cast<double>(cb.entries[c * dim + j]);
        }
    }
}

struct ShardStats {
    std::vector<double> sum;     // k x dim
    std::vector<double> count;   // k
    double distortion = 0.0;
    // Worst-quantized vectors in the shard (err, frame), kept as a min-heap
    // of up to K candidates so every dead entry can get a distinct victim.
    std::vector<std::pair<double, std::size_t>> worst;
};

struct EpochStats {
    std::vector<double> sum;
    std::vector<double> count;
    double distortion = 0.0;
    std::vector<std::pair<double, std::size_t>> worst;  // global, sorted worst-first
};

// One assignment pass over `data`, reduced shard-by-shard in fixed order.
EpochStats assignment_pass(const Codebook& cb, const float* data, std::size_t n,
                           std::size_t dim, int workers) {
    const std::size_t k = cb.size;
    std::vector<ShardStats> shards(kShards);
    const auto heap_cmp = [](const std::pair<double, std::size_t>& a,
                             const std::pair<double, std::size_t>& b) {
        if (a.first != b.first) {
            return a.first > b.first;  // min-heap on error
        }
        return a.second < b.second;
    };
    auto run_shard = [&](int s) {
        ShardStats& st = shards[std::size_t(s)];
        st.sum.assign(k * dim, 0.0);
        st.count.assign(k, 0.0);
        const std::size_t lo = n * std::size_t(s) / kShards;
        const std::size_t hi = n * (std::size_t(s) + 1) / kShards;
        for (std::size_t i = lo; i < hi; ++i) {
            const float* v = data + i * dim;
            float err = 0.0f;
            const std::size_t a =
                kernels::nearest_row(v, cb.entries.data(), k, dim, &err);
            st.count[a] += 1.0;
            for (std::size_t j = 0; j < dim; ++j) {
                st.sum[a * dim + j] += static_cast<double>(v[j]);
            }
            st.distortion += static_cast<double>(err);
            const std::pair<double, std::size_t> cand(static_cast<double>(err), i);
            if (st.worst.size() < k) {
                st.worst.push_back(cand);
                std::push_heap(st.worst.begin(), st.worst.end(), heap_cmp);
            } else if (heap_cmp(cand, st.worst.front())) {
                std::pop_heap(st.worst.begin(), st.worst.end(), heap_cmp);
                st.worst.back() = cand;
                std::push_heap(st.worst.begin(), st.worst.end(), heap_cmp);
            }
        }
    };
    if (workers <= 1) {
        for (int s = 0; s < kShards; ++s) {
            run_shard(s);
        }
    } else {
        std::vector<std::thread> threads;
        std::atomic<int> next{0};
        const int w = std::min(workers, kShards);
        for (int t = 0; t < w; ++t) {
            threads.emplace_back([&] {
                for (int s = next.fetch_add(1); s < kShards; s = next.fetch_add(1)) {
                    run_shard(s);
                }
            });
        }
        for (auto& th : threads) {
            th.join();
        }
    }
    // Fixed-order reduce: shard 0, 1, ... regardless of worker count.
    EpochStats out;
    out.sum.assign(k * dim, 0.0);
    out.count.assign(k, 0.0);
    for (int s = 0; s < kShards; ++s) {
        const ShardStats& st = shards[std::size_t(s)];
        for (std::size_t j = 0; j < k * dim; ++j) {
            out.sum[j] += st.sum[j];
        }
        for (std::size_t j = 0; j < k; ++j) {
            out.count[j] += st.count[j];
        }
        out.distortion += st.distortion;
        out.worst.insert(out.worst.end(), st.worst.begin(), st.worst.end());
    }
    out.distortion /= static_cast<double>(n);
    std::sort(out.worst.begin(), out.worst.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) {
            return a.first > b.first;
        }
        return a.second < b.second;
    });
    return out;
}

struct LayerTrainOut {
    std::vector<double> distortion_history;
    std::uint64_t reassignments = 0;
};

// EMA k-means on one layer. The update keeps each centroid on the segment
// between its old position and the batch mean, so per-epoch distortion
// (measured at assignment time) does not increase. Entries below first_free
// stay frozen (residual layers reserve entry 0 as the all-zero null
// refinement, which is what makes greedy encode's residual energy
// non-increasing: the argmin can always do at least as well as "add
// nothing").
LayerTrainOut train_layer(Codebook& cb, const float* data, std::size_t n,
                          std::size_t dim, std::size_t first_free,
                          const TrainConfig& config, Rng& rng) {
    kmeanspp_init(cb, data, n, dim, first_free, rng);
    const std::size_t k = cb.size;
    const double dead_threshold =
        config.dead_code_rel_threshold * static_cast<double>(n) / static_cast<double>(k);
    LayerTrainOut out;
    for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        EpochStats stats = assignment_pass(cb, data, n, dim, config.workers);
        out.distortion_history.push_back(stats.distortion);

        const double g = config.ema_decay;
        for (std::size_t c = first_free; c < k; ++c) {
            cb.ema_usage[c] = g * cb.ema_usage[c] + (1.0 - g) * stats.count[c];
            for (std::size_t j = 0; j < dim; ++j) {
                cb.ema_sum[c * dim + j] =
                    g * cb.ema_sum[c * dim + j] + (1.0 - g) * stats.sum[c * dim + j];
            }
            if (cb.ema_usage[c] > 0.0) {
                for (std::size_t j = 0; j < dim; ++j) {
                    cb.entries[c * dim + j] = static_cast<float>(
                        cb.ema_sum[c * dim + j] / cb.ema_usage[c]);
                }
            }
        }

        // Dead-code handling: every starved entry is reassigned, each to a
        // distinct corpus vector, worst quantization error first.
        std::size_t next_victim = 0;
        for (std::size_t c = first_free; c < k && next_victim < stats.worst.size(); ++c) {
            if (cb.ema_usage[c] >= dead_threshold) {
                continue;
            }
            const float* v = data + stats.worst[next_victim].second * dim;
            ++next_victim;
            std::copy(v, v + dim, cb.entry(c).begin());
            cb.ema_usage[c] = 1.0;
            for (std::size_t j = 0; j < dim; ++j) {
                cb.ema_sum[c * dim + j] = static_cast<double>(v[j]);
            }
            ++out.reassignments;
        }
    }
    return out;
}

}  // namespace

TrainResult train_codebooks(const FrameSeq& corpus, const TrainConfig& config) {
    if (config.codebook_size == 0 || config.depth < 1 || config.depth > kNumLayers) {
        throw ConfigError("train_codebooks: bad codebook size or depth");
    }
    if (corpus.dim() != config.dim) {
        throw DimensionError("train_codebooks: corpus dim != config dim");
    }
    if (corpus.frames() < config.codebook_size) {
        throw InsufficientDataError("train_codebooks: corpus smaller than codebook (" +
                                    std::to_string(corpus.frames()) + " < " +
                                    std::to_string(config.codebook_size) + ")");
    }
    const std::size_t n = corpus.frames();
    const std::size_t dim = config.dim;

    TrainResult result;
    result.stack.dim = config.dim;
    result.stack.frame_rate_hz = config.frame_rate_hz;
    result.stack.seed = config.seed;

    Rng root(config.seed);
    // Layer i trains on the residuals left by layers < i.
    std::vector<float> residuals(corpus.raw());
    for (int layer = 0; layer < config.depth; ++layer) {
        Codebook cb(layer, config.codebook_size, config.dim);
        // Residual layers reserve entry 0 as the all-zero refinement.
        const std::size_t first_free = layer == 0 ? 0 : 1;
        Rng layer_rng = root.fork(static_cast<std::uint64_t>(layer));
        LayerTrainOut lt =
            train_layer(cb, residuals.data(), n, dim, first_free, config, layer_rng);
        result.dead_code_reassignments += lt.reassignments;

        // Residuals for the next layer, and this layer's final distortion.
        double distortion = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            float* v = residuals.data() + i * dim;
            float err = 0.0f;
            const std::size_t a =
                kernels::nearest_row(v, cb.entries.data(), cb.size, dim, &err);
            kernels::sub(v, v, cb.entry(a).data(), dim);
            distortion += static_cast<double>(err);
        }
        distortion /= static_cast<double>(n);
        lt.distortion_history.push_back(distortion);
        result.final_distortion.push_back(distortion);
        result.distortion_history.push_back(std::move(lt.distortion_history));
        result.stack.layers.push_back(std::move(cb));
    }
    return result;
}

// ---- semantic alignment ---------------------------------------------------

std::vector<float> random_orthonormal_projection(std::size_t teacher_dim,
                                                 std::size_t dim, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x70726f6aULL));  // "proj"
    std::vector<double> m(teacher_dim * dim);
    for (double& x : m) {
        x = rng.gaussian();
    }
    // Modified Gram-Schmidt on rows (teacher_dim <= dim) or columns.
    const bool by_rows = teacher_dim <= dim;
    const std::size_t vecs = by_rows ? teacher_dim : dim;
    const std::size_t len = by_rows ? dim : teacher_dim;
    auto at = [&](std::size_t v, std::size_t i) -> double& {
        return by_rows ? m[v * dim + i] : m[i * dim + v];
    };
    for (std::size_t v = 0; v < vecs; ++v) {
        for (std::size_t u = 0; u < v; ++u) {
            double proj = 0.0;
            for (std::size_t i = 0; i < len; ++i) {
                proj += at(v, i) * at(u, i);
            }
            for (std::size_t i = 0; i < len; ++i) {
                at(v, i) -= proj * at(u, i);
            }
        }
        double norm2 = 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            norm2 += at(v, i) * at(v, i);
        }
        const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
        for (std::size_t i = 0; i < len; ++i) {
            at(v, i) *= inv;
        }
    }
    std::vector<float> out(teacher_dim * dim);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<float>(m[i]);
    }
    return out;
}

AlignmentResult semantic_alignment_loss(const RvqStack& stack, const FrameSeq& frames,
                                        const std::vector<TeacherFrame>& teacher,
                                        std::span<const float> projection,
                                        std::size_t teacher_dim) {
    if (frames.frames() != teacher.size()) {
        throw DimensionError("semantic_alignment_loss: sequence length mismatch");
    }
    if (projection.size() != teacher_dim * stack.dim) {
        throw DimensionError("semantic_alignment_loss: projection shape mismatch");
    }
    AlignmentResult result;
    if (frames.frames() == 0) {
        return result;
    }
    double total = 0.0;
    std::vector<float> projected(teacher_dim);
    for (std::size_t i = 0; i < frames.frames(); ++i) {
        if (teacher[i].vector.size() != teacher_dim) {
            throw DimensionError("semantic_alignment_loss: teacher dim mismatch");
        }
        // Layer-0 reconstruction, projected into teacher space.
        const QuantizeResult q = quantize_layer(frames.frame(i), stack.semantic());
        const std::span<const float> recon = stack.semantic().entry(q.index);
        for (std::size_t r = 0; r < teacher_dim; ++r) {
            projected[r] =
                kernels::dot(projection.data() + r * stack.dim, recon.data(), stack.dim);
        }
        const double pn = std::sqrt(static_cast<double>(
            kernels::dot(projected.data(), projected.data(), teacher_dim)));
        const double tn = std::sqrt(static_cast<double>(kernels::dot(
            teacher[i].vector.data(), teacher[i].vector.data(), teacher_dim)));
        if (pn == 0.0 || tn == 0.0) {
            total += 1.0;  // orthogonality convention for zero-norm vectors
            ++result.zero_norm_warnings;
            continue;
        }
        const double cos = static_cast<double>(kernels::dot(
                               projected.data(), teacher[i].vector.data(), teacher_dim)) /
                           (pn * tn);
        total += 1.0 - std::clamp(cos, -1.0, 1.0);
    }
    result.loss = total / static_cast<double>(frames.frames());
    return result;
}

}  // namespace rvqstream
