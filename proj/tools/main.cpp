// rvqstream CLI: synthetic corpora, RVQ codebook training, offline and
// streaming encode/decode, block-attention mask dumps, dual-track sessions
// and the latency simulator. Every subcommand accepts --seed and --config;
// config files supply defaults, command-line flags win. Each run writes
// run-manifest.json with input/output checksums.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rvqstream/block_attention.hpp"
#include "rvqstream/corpus.hpp"
#include "rvqstream/dual_track.hpp"
#include "rvqstream/eval.hpp"
#include "rvqstream/io.hpp"
#include "rvqstream/kernels.hpp"
#include "rvqstream/latency_sim.hpp"
#include "rvqstream/rng.hpp"
#include "rvqstream/rvq.hpp"
#include "rvqstream/stream.hpp"
#include "rvqstream/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rvqstream;

namespace {

// ---- config file support --------------------------------------------------
// A config file holds flag defaults: a JSON object ({"seed": 7, "k": 64}) or
// flat `key = value` lines. Entries become argv entries injected right after
// the subcommand; every option takes its last occurrence, so explicit flags
// override the file and the file overrides built-in defaults.

std::vector<std::string> config_to_args(const fs::path& path) {
    std::vector<std::string> args;
    const std::string text = io::read_file(path);
    auto push = [&args](const std::string& key, const std::string& value) {
        args.push_back("--" + key);
        if (!value.empty()) {
            args.push_back(value);
        }
    };
    if (path.extension() == ".json") {
        const json j = json::parse(text);
        if (!j.is_object()) {
            throw ConfigError("config file: top level must be an object");
        }
        for (const auto& [key, value] : j.items()) {
            if (value.is_boolean()) {
                if (value.get<bool>()) {
                    push(key, "");
                }
            } else if (value.is_string()) {
                push(key, value.get<std::string>());
            } else {
                push(key, value.dump());
            }
        }
        return args;
    }
    // key = value lines; '#' starts a comment.
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.resize(hash);
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r\"");
            const auto e = s.find_last_not_of(" \t\r\"");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!key.empty()) {
            push(key, value);
        }
    }
    return args;
}

// ---- run manifest -----------------------------------------------------------

struct Manifest {
    std::string subcommand;
    std::vector<std::string> argv;
    std::uint64_t seed = 0;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;

    void write() const {
        json j;
        j["schema_version"] = {{"major", RVQSTREAM_SCHEMA_MAJOR},
                               {"minor", RVQSTREAM_SCHEMA_MINOR}};
        j["tool_version"] = RVQSTREAM_VERSION;
        j["kernel_backend"] = kernels::backend_name(kernels::active_backend());
        j["subcommand"] = subcommand;
        j["argv"] = argv;
        j["seed"] = seed;
        auto files = [](const std::vector<fs::path>& paths) {
            json arr = json::array();
            for (const fs::path& p : paths) {
                json f;
                f["path"] = p.string();
                if (fs::is_regular_file(p)) {
                    f["fnv1a64"] = io::hex64(io::fnv1a64_file(p));
                    f["bytes"] = fs::file_size(p);
                }
                arr.push_back(f);
            }
            return arr;
        };
        j["inputs"] = files(inputs);
        j["outputs"] = files(outputs);
        io::write_file_atomic("run-manifest.json", j.dump(2) + "\n");
    }
};

std::vector<float> parse_taps(const std::string& csv) {
    std::vector<float> taps;
    std::istringstream in(csv);
    std::string field;
    while (std::getline(in, field, ',')) {
        taps.push_back(std::stof(field));
    }
    return taps;
}

json report_to_json_obj(const LatencyReport& rep, const PipelineConfig& config) {
    json j;
    j["schema_version"] = {{"major", RVQSTREAM_SCHEMA_MAJOR},
                           {"minor", RVQSTREAM_SCHEMA_MINOR}};
    j["pipeline"] = config.name;
    j["overlapped"] = config.overlapped;
    j["tokens"] = rep.tokens;
    j["packets"] = rep.packets;
    j["first_packet_latency_ms"] = us_to_ms(rep.first_packet_latency_us);
    j["first_packet_audio_ms"] = us_to_ms(rep.first_packet_audio_us);
    j["steady_packet_period_ms"] = us_to_ms(rep.steady_packet_period_us);
    j["audio_out_ms"] = us_to_ms(rep.audio_out_us);
    j["total_compute_ms"] = us_to_ms(rep.total_compute_us);
    j["session_end_ms"] = us_to_ms(rep.session_end_us);
    j["rtf"] = rep.rtf;
    j["real_time_capable"] = rep.real_time_capable;
    return j;
}

// ---- subcommands ------------------------------------------------------------

struct CommonOpts {
    std::uint64_t seed = 0;
    std::string config_path;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--seed", opts.seed, "RNG seed (default 0)");
    cmd->add_option("--config", opts.config_path,
                    "Config file with flag defaults (json or key=value)");
}

int cmd_gen_corpus(const CommonOpts& common, const std::string& kind,
                   std::size_t frames, std::uint32_t dim, double frame_rate,
                   int components, double sigma, double mean_scale,
                   const std::string& weights_csv, int tones, double noise_sigma,
                   const std::string& out, Manifest& manifest) {
    SyntheticCorpusSpec spec;
    if (kind == "gaussian") {
        spec.kind = CorpusKind::gaussian_mixture;
    } else if (kind == "tones") {
        spec.kind = CorpusKind::filterbank_tones;
    } else {
        throw ConfigError("gen-corpus: unknown --kind '" + kind + "'");
    }
    spec.frames = frames;
    spec.dim = dim;
    spec.seed = common.seed;
    spec.frame_rate_hz = frame_rate;
    spec.mixture.components = components;
    spec.mixture.sigma = sigma;
    spec.mixture.mean_scale = mean_scale;
    if (!weights_csv.empty()) {
        std::istringstream in(weights_csv);
        std::string field;
        while (std::getline(in, field, ',')) {
            spec.mixture.weights.push_back(std::stod(field));
        }
    }
    spec.tones.num_tones = tones;
    spec.tones.noise_sigma = noise_sigma;

    const CorpusResult corpus = gen_corpus(spec);
    io::write_features(out, corpus.frames);
    io::write_file_atomic(out + ".json", stats_to_json(spec, corpus.stats));
    manifest.outputs = {out, out + ".json"};
    std::cout << "wrote " << corpus.frames.frames() << " frames (dim " << spec.dim
              << ") to " << out << "\n";
    return 0;
}

int cmd_train(const CommonOpts& common, const std::string& corpus_path,
              std::uint32_t k, int depth, std::uint32_t epochs, double decay,
              double dead_threshold, int workers, const std::string& out,
              Manifest& manifest) {
    const FrameSeq corpus = io::read_features(corpus_path);
    TrainConfig cfg;
    cfg.codebook_size = k;
    cfg.dim = static_cast<std::uint32_t>(corpus.dim());
    cfg.depth = depth;
    cfg.epochs = epochs;
    cfg.ema_decay = decay;
    cfg.dead_code_rel_threshold = dead_threshold;
    cfg.seed = common.seed;
    cfg.workers = workers;

    const TrainResult result = train_codebooks(corpus, cfg);
    io::StackMeta meta;
    meta.tool_version = RVQSTREAM_VERSION;
    meta.seed = cfg.seed;
    meta.epochs = cfg.epochs;
    meta.ema_decay = cfg.ema_decay;
    meta.dead_code_rel_threshold = cfg.dead_code_rel_threshold;
    meta.final_distortion = result.final_distortion;
    io::write_stack(out, result.stack, meta);
    manifest.inputs = {corpus_path};
    manifest.outputs = {out, out + ".json"};
    std::cout << "trained " << depth << " layers (K=" << k << ") on "
              << corpus.frames() << " frames; layer-0 distortion "
              << result.final_distortion.front() << ", layer-" << (depth - 1)
              << " distortion " << result.final_distortion.back() << "\n";
    return 0;
}

int cmd_encode(const std::string& stack_path, const std::string& corpus_path,
               int depth, int workers, const std::string& out, Manifest& manifest) {
    const RvqStack stack = io::read_stack(stack_path);
    const FrameSeq corpus = io::read_features(corpus_path);
    const int d = depth > 0 ? depth : stack.depth();
    io::TokenStream stream;
    stream.depth = static_cast<std::uint32_t>(d);
    stream.frame_rate_hz = stack.frame_rate_hz;
    for (const EncodedFrame& enc : encode_frames(corpus, stack, d, workers)) {
        stream.frames.push_back(enc.codes);
    }
    io::write_tokens(out, stream);
    manifest.inputs = {stack_path, corpus_path};
    manifest.outputs = {out};
    std::cout << "encoded " << stream.frames.size() << " frames at depth " << d
              << " to " << out << "\n";
    return 0;
}

int cmd_decode(const std::string& stack_path, const std::string& tokens_path,
               int depth, const std::string& taps_csv, const std::string& out,
               Manifest& manifest) {
    const RvqStack stack = io::read_stack(stack_path);
    const io::TokenStream stream = io::read_tokens(tokens_path);
    const int d = depth > 0 ? depth : static_cast<int>(stream.depth);
    const FirFilter filter(parse_taps(taps_csv));
    const FrameSeq decoded = decode_offline(stream.frames, stack, d, filter);
    io::write_features(out, decoded);
    manifest.inputs = {stack_path, tokens_path};
    manifest.outputs = {out};
    std::cout << "decoded " << decoded.frames() << " frames at depth " << d << " to "
              << out << "\n";
    return 0;
}

int cmd_stream_decode(const std::string& stack_path, const std::string& tokens_path,
                      int depth, const std::string& taps_csv, const std::string& out,
                      Manifest& manifest) {
    const RvqStack stack = io::read_stack(stack_path);
    io::TokenReader reader(tokens_path);
    const int d = depth > 0 ? depth : static_cast<int>(reader.depth());
    StreamDecoder decoder(stack, d, FirFilter(parse_taps(taps_csv)));

    std::FILE* sink = out == "-" ? stdout : std::fopen(out.c_str(), "wb");
    if (sink == nullptr) {
        throw IoError("cannot open output: " + out);
    }
    CodeFrame frame;
    std::uint64_t index = 0;
    while (reader.next(frame)) {
        const std::vector<float> decoded = decoder.push(frame);
        io::append_pipe_frame(sink, index++, decoded);
    }
    if (sink != stdout) {
        std::fclose(sink);
        manifest.outputs = {out};
        std::cout << "streamed " << index << " frames to " << out << "\n";
    }
    manifest.inputs = {stack_path, tokens_path};
    return 0;
}

int cmd_mask_dump(std::size_t chunk_size, std::size_t num_tokens, std::size_t lookback,
                  std::size_t lookahead, double token_ms, double vocoder_lookahead_ms,
                  const std::string& pbm_out, const std::string& csv_out,
                  Manifest& manifest) {
    const BlockPartition partition{chunk_size, num_tokens};
    const AttentionWindow window{lookback, lookahead};
    const BlockMask mask = build_mask(partition, window);
    {
        std::ostringstream pbm;
        write_mask_pbm(pbm, mask, partition);
        io::write_file_atomic(pbm_out, pbm.str());
    }
    {
        std::ostringstream csv;
        write_schedule_csv(csv,
                           schedule_chunks(partition, token_ms, vocoder_lookahead_ms, window));
        io::write_file_atomic(csv_out, csv.str());
    }
    manifest.outputs = {pbm_out, csv_out};
    std::cout << "mask " << num_tokens << "x" << num_tokens << " (" << partition.blocks()
              << " blocks) -> " << pbm_out << ", schedule -> " << csv_out << "\n";
    return 0;
}

int cmd_session(const CommonOpts& common, const std::string& text,
                const std::string& model_name, std::uint32_t k,
                std::size_t max_steps, std::optional<std::size_t> pad_steps,
                std::optional<int> stop_code, std::size_t speaker_dim,
                const std::string& out, Manifest& manifest) {
    const std::vector<TextToken> tokens = tokenize_text(text);
    std::unique_ptr<StepModel> model;
    if (model_name == "echo") {
        model = std::make_unique<EchoModel>(k);
    } else if (model_name == "markov") {
        model = std::make_unique<MarkovModel>(k, common.seed);
    } else {
        throw ConfigError("session: unknown --model '" + model_name + "'");
    }
    StopRule stop;
    stop.max_steps = max_steps;
    stop.pad_steps_after_text = pad_steps;
    if (stop_code.has_value()) {
        stop.stop_code = static_cast<std::uint16_t>(*stop_code);
    }
    std::vector<float> speaker;
    if (speaker_dim > 0) {
        Rng rng(mix_seed(common.seed, 0x73706b72ULL));
        speaker.resize(speaker_dim);
        for (float& v : speaker) {
            v = static_cast<float>(rng.gaussian());
        }
    }
    const SessionResult session = run_session(tokens, *model, stop, speaker);

    // Transcript: one JSON object per step.
    std::ostringstream lines;
    for (const StepEvent& e : session.events) {
        json j;
        j["step"] = e.step;
        j["text_token"] = e.text;
        j["codes"] = e.codes.codes;
        j["t_text_in"] = e.t_text_in;
        j["t_frame_out"] = e.t_frame_out;
        lines << j.dump() << "\n";
    }
    io::write_file_atomic(out, lines.str());

    json summary;
    summary["schema_version"] = {{"major", RVQSTREAM_SCHEMA_MAJOR},
                                 {"minor", RVQSTREAM_SCHEMA_MINOR}};
    summary["steps"] = session.events.size();
    summary["stop_reason"] = session.stop_reason;
    summary["model"] = model_name;
    summary["codebook_size"] = k;
    summary["seed"] = common.seed;
    if (!session.speaker_embedding.empty()) {
        summary["speaker_embedding"] = session.speaker_embedding;
    }
    io::write_file_atomic(out + ".json", summary.dump(2) + "\n");

    manifest.outputs = {out, out + ".json"};
    std::cout << "session: " << session.frames.size() << " frames, stop="
              << session.stop_reason << " -> " << out << "\n";
    return 0;
}

std::int64_t transcript_frame_count(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open transcript: " + path.string());
    }
    std::int64_t count = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const json j = json::parse(line);
        if (j.contains("step")) {
            ++count;
        }
    }
    return count;
}

int cmd_simulate(const std::string& pipeline, double ttfp_ms, double lm_tpp_ms,
                 double decode_tpp_ms, std::int64_t tokens,
                 const std::string& transcript, bool serial,
                 const std::string& trace_out, const std::string& report_out,
                 Manifest& manifest) {
    PipelineConfig config;
    if (pipeline == "25hz") {
        config = PipelineConfig::pipeline_25hz();
    } else if (pipeline == "12hz") {
        config = PipelineConfig::pipeline_12hz();
    } else {
        throw ConfigError("simulate: unknown --pipeline '" + pipeline + "'");
    }
    config.lm_ttfp_us = ms_to_us(ttfp_ms);
    config.lm_tpp_us = ms_to_us(lm_tpp_ms);
    config.decode_tpp_us = ms_to_us(decode_tpp_ms);
    config.overlapped = !serial;
    if (!transcript.empty()) {
        tokens = transcript_frame_count(transcript);
        manifest.inputs = {transcript};
    }

    const SimResult sim = simulate(config, tokens);
    if (!trace_out.empty()) {
        io::write_file_atomic(trace_out, trace_to_jsonl(sim.trace));
        manifest.outputs.push_back(trace_out);
    }
    const json report = report_to_json_obj(sim.report, config);
    if (report_out.empty() || report_out == "-") {
        std::cout << report.dump(2) << "\n";
    } else {
        io::write_file_atomic(report_out, report.dump(2) + "\n");
        manifest.outputs.push_back(report_out);
    }
    return 0;
}

int cmd_sweep(const std::string& configs_path, std::int64_t tokens,
              const std::string& out, Manifest& manifest) {
    const std::vector<SweepRow> rows = read_sweep_csv(io::read_file(configs_path), tokens);
    const std::string csv = write_sweep_csv(rows);
    if (out.empty() || out == "-") {
        std::cout << csv;
    } else {
        io::write_file_atomic(out, csv);
        manifest.outputs = {out};
    }
    manifest.inputs = {configs_path};
    return 0;
}

int cmd_eval(const std::string& stack_path, const std::string& corpus_path,
             const std::string& teacher_path, const std::string& out,
             Manifest& manifest) {
    const RvqStack stack = io::read_stack(stack_path);
    const FrameSeq corpus = io::read_features(corpus_path);
    EvalOptions options;
    std::vector<TeacherFrame> teacher;
    if (!teacher_path.empty()) {
        const FrameSeq teacher_seq = io::read_features(teacher_path);
        if (teacher_seq.frames() != corpus.frames()) {
            throw DimensionError("eval: teacher frame count != corpus frame count");
        }
        teacher.resize(teacher_seq.frames());
        for (std::size_t i = 0; i < teacher_seq.frames(); ++i) {
            teacher[i].vector.assign(teacher_seq.frame(i).begin(),
                                     teacher_seq.frame(i).end());
        }
        options.teacher = &teacher;
        options.teacher_dim = teacher_seq.dim();
        manifest.inputs.push_back(teacher_path);
    }
    const EvalReport report = eval_codec(stack, corpus, options);
    const std::string json_text = report_to_json(report);
    if (out.empty() || out == "-") {
        std::cout << json_text;
    } else {
        io::write_file_atomic(out, json_text);
        manifest.outputs = {out};
        std::cout << "eval: depth-" << report.snr_db.size() << " SNR "
                  << report.snr_db.back() << " dB -> " << out << "\n";
    }
    manifest.inputs.push_back(stack_path);
    manifest.inputs.push_back(corpus_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"streaming RVQ codec toolkit and latency simulator"};
    app.set_version_flag("--version", RVQSTREAM_VERSION);
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);  // usage errors print help text
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CommonOpts common;
    Manifest manifest;

    // gen-corpus
    auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic feature corpus");
    std::string gen_kind = "gaussian";
    std::size_t gen_frames = 4096;
    std::uint32_t gen_dim = kDefaultDim;
    double gen_rate = kDefaultFrameRateHz;
    int gen_components = 4;
    double gen_sigma = 1.0, gen_mean_scale = 5.0, gen_noise = 1e-3;
    int gen_tones = 3;
    std::string gen_weights, gen_out = "corpus.fea";
    add_common(gen, common);
    gen->add_option("--kind", gen_kind, "gaussian | tones");
    gen->add_option("--frames", gen_frames, "Frame count");
    gen->add_option("--dim", gen_dim, "Feature dimension");
    gen->add_option("--frame-rate", gen_rate, "Frames per second");
    gen->add_option("--components", gen_components, "Mixture components");
    gen->add_option("--sigma", gen_sigma, "Within-component std dev");
    gen->add_option("--mean-scale", gen_mean_scale, "Component mean spread");
    gen->add_option("--weights", gen_weights, "Comma-separated mixture weights");
    gen->add_option("--tones", gen_tones, "Sinusoid count (tones kind)");
    gen->add_option("--noise-sigma", gen_noise, "Waveform noise (tones kind)");
    gen->add_option("--out", gen_out, "Output feature file");

    // train-codebook
    auto* train = app.add_subcommand("train-codebook", "Train an RVQ stack with EMA k-means");
    std::string train_corpus, train_out = "stack.rvq";
    std::uint32_t train_k = 256;
    int train_depth = kNumLayers;
    std::uint32_t train_epochs = 24;
    double train_decay = 0.99, train_dead = 1e-3;
    int train_workers = 1;
    add_common(train, common);
    train->add_option("--corpus", train_corpus, "Training feature file")->required();
    train->add_option("--k", train_k, "Codebook size per layer");
    train->add_option("--depth", train_depth, "Number of layers (1..16)");
    train->add_option("--epochs", train_epochs, "EMA epochs per layer");
    train->add_option("--decay", train_decay, "EMA decay");
    train->add_option("--dead-threshold", train_dead, "Dead-code relative threshold");
    train->add_option("--workers", train_workers, "Worker threads (results identical)");
    train->add_option("--out", train_out, "Output codebook file");

    // encode
    auto* encode = app.add_subcommand("encode", "Encode features to a token stream");
    std::string enc_stack, enc_corpus, enc_out = "tokens.tok";
    int enc_depth = 0, enc_workers = 1;
    add_common(encode, common);
    encode->add_option("--codebook", enc_stack, "Codebook file")->required();
    encode->add_option("--corpus", enc_corpus, "Input feature file")->required();
    encode->add_option("--depth", enc_depth, "Encode depth (default: stack depth)");
    encode->add_option("--workers", enc_workers, "Worker threads");
    encode->add_option("--out", enc_out, "Output token file");

    // decode
    auto* decode = app.add_subcommand("decode", "Offline decode of a token stream");
    std::string dec_stack, dec_tokens, dec_out = "decoded.fea", dec_taps = "1";
    int dec_depth = 0;
    add_common(decode, common);
    decode->add_option("--codebook", dec_stack, "Codebook file")->required();
    decode->add_option("--tokens", dec_tokens, "Input token file")->required();
    decode->add_option("--depth", dec_depth, "Decode depth (default: file depth)");
    decode->add_option("--fir-taps", dec_taps, "Causal FIR taps, comma-separated");
    decode->add_option("--out", dec_out, "Output feature file");

    // stream-decode
    auto* sdec = app.add_subcommand("stream-decode",
                                    "Streaming decode to the framed pipe format");
    std::string sdec_stack, sdec_tokens, sdec_out = "-";
    std::string sdec_taps = "0.4,0.3,0.2,0.1";
    int sdec_depth = 0;
    add_common(sdec, common);
    sdec->add_option("--codebook", sdec_stack, "Codebook file")->required();
    sdec->add_option("--tokens", sdec_tokens, "Input token file")->required();
    sdec->add_option("--depth", sdec_depth, "Decode depth (default: file depth)");
    sdec->add_option("--fir-taps", sdec_taps, "Causal FIR taps, comma-separated");
    sdec->add_option("--out", sdec_out, "Output pipe file ('-' = stdout)");

    // mask-dump
    auto* mask = app.add_subcommand("mask-dump", "Dump block-attention mask and chunk schedule");
    std::size_t mask_chunk = 8, mask_tokens = 64, mask_back = 3, mask_ahead = 1;
    double mask_token_ms = 40.0, mask_lookahead_ms = 130.0;
    std::string mask_pbm = "mask.pbm", mask_csv = "schedule.csv";
    add_common(mask, common);
    mask->add_option("--chunk-size", mask_chunk, "Tokens per block");
    mask->add_option("--num-tokens", mask_tokens, "Total tokens");
    mask->add_option("--lookback", mask_back, "Lookback blocks");
    mask->add_option("--lookahead", mask_ahead, "Lookahead blocks");
    mask->add_option("--token-ms", mask_token_ms, "Audio per token (ms)");
    mask->add_option("--vocoder-lookahead-ms", mask_lookahead_ms, "Vocoder lookahead (ms)");
    mask->add_option("--pbm", mask_pbm, "Token-level mask PBM output");
    mask->add_option("--schedule", mask_csv, "Chunk schedule CSV output");

    // session
    auto* session = app.add_subcommand("session", "Run a dual-track toy-model session");
    std::string sess_text, sess_model = "markov", sess_out = "transcript.jsonl";
    std::uint32_t sess_k = kDefaultCodebookSize;
    std::size_t sess_max = 4096, sess_speaker_dim = 0;
    std::optional<std::size_t> sess_pad;
    std::optional<int> sess_stop_code;
    add_common(session, common);
    session->add_option("--text", sess_text, "Input text (whitespace tokens)");
    session->add_option("--model", sess_model, "echo | markov");
    session->add_option("--k", sess_k, "Toy codebook size");
    session->add_option("--max-steps", sess_max, "Hard step cap");
    session->add_option("--pad-steps", sess_pad, "Stop after N pad steps past text");
    session->add_option("--stop-code", sess_stop_code, "Stop when the zeroth code equals this");
    session->add_option("--speaker-dim", sess_speaker_dim, "Opaque speaker embedding length");
    session->add_option("--out", sess_out, "Transcript JSONL output");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Latency simulation of one pipeline");
    std::string sim_pipeline = "12hz", sim_trace, sim_report, sim_transcript;
    double sim_ttfp = 97.0, sim_lm_tpp = 21.0, sim_decode_tpp = 4.0;
    std::int64_t sim_tokens = 64;
    bool sim_serial = false;
    add_common(sim, common);
    sim->add_option("--pipeline", sim_pipeline, "25hz | 12hz");
    sim->add_option("--ttfp-ms", sim_ttfp, "LM time to first packet tokens");
    sim->add_option("--lm-tpp-ms", sim_lm_tpp, "LM steady-state per-packet cost");
    sim->add_option("--decode-tpp-ms", sim_decode_tpp, "Tokenizer decode per-packet cost");
    sim->add_option("--tokens", sim_tokens, "Total tokens to generate");
    sim->add_option("--transcript", sim_transcript,
                    "Session transcript JSONL; its frame count becomes --tokens");
    sim->add_flag("--serial", sim_serial, "Disable decode/LM overlap");
    sim->add_option("--trace-out", sim_trace, "Event trace JSONL output");
    sim->add_option("--report-out", sim_report, "Report JSON output ('-' = stdout)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Simulate every config in a CSV");
    std::string sweep_configs, sweep_out = "-";
    std::int64_t sweep_tokens = 256;
    add_common(sweep, common);
    sweep->add_option("configs", sweep_configs, "Config CSV path")->required();
    sweep->add_option("--tokens", sweep_tokens, "Tokens per simulation");
    sweep->add_option("--out", sweep_out, "Report CSV output ('-' = stdout)");

    // eval
    auto* eval = app.add_subcommand("eval", "Codec fidelity metrics");
    std::string eval_stack, eval_corpus, eval_teacher, eval_out = "-";
    add_common(eval, common);
    eval->add_option("--codebook", eval_stack, "Codebook file")->required();
    eval->add_option("--corpus", eval_corpus, "Evaluation feature file")->required();
    eval->add_option("--teacher", eval_teacher, "Teacher feature file (optional)");
    eval->add_option("--out", eval_out, "Report JSON output ('-' = stdout)");

    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
        if (args[i] == "--config") {
            try {
                const std::vector<std::string> injected = config_to_args(args[i + 1]);
                args.insert(args.begin() + 1, injected.begin(), injected.end());
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 1;
            }
            break;
        }
    }

    try {
        // CLI11 consumes the argument vector in reverse order.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    manifest.argv.assign(argv, argv + argc);
    manifest.seed = common.seed;

    try {
        int rc = 1;
        if (gen->parsed()) {
            manifest.subcommand = "gen-corpus";
            rc = cmd_gen_corpus(common, gen_kind, gen_frames, gen_dim, gen_rate,
                                gen_components, gen_sigma, gen_mean_scale, gen_weights,
                                gen_tones, gen_noise, gen_out, manifest);
        } else if (train->parsed()) {
            manifest.subcommand = "train-codebook";
            rc = cmd_train(common, train_corpus, train_k, train_depth, train_epochs,
                           train_decay, train_dead, train_workers, train_out, manifest);
        } else if (encode->parsed()) {
            manifest.subcommand = "encode";
            rc = cmd_encode(enc_stack, enc_corpus, enc_depth, enc_workers, enc_out, manifest);
        } else if (decode->parsed()) {
            manifest.subcommand = "decode";
            rc = cmd_decode(dec_stack, dec_tokens, dec_depth, dec_taps, dec_out, manifest);
        } else if (sdec->parsed()) {
            manifest.subcommand = "stream-decode";
            rc = cmd_stream_decode(sdec_stack, sdec_tokens, sdec_depth, sdec_taps,
                                   sdec_out, manifest);
        } else if (mask->parsed()) {
            manifest.subcommand = "mask-dump";
            rc = cmd_mask_dump(mask_chunk, mask_tokens, mask_back, mask_ahead,
                               mask_token_ms, mask_lookahead_ms, mask_pbm, mask_csv,
                               manifest);
        } else if (session->parsed()) {
            manifest.subcommand = "session";
            rc = cmd_session(common, sess_text, sess_model, sess_k, sess_max, sess_pad,
                             sess_stop_code, sess_speaker_dim, sess_out, manifest);
        } else if (sim->parsed()) {
            manifest.subcommand = "simulate";
            rc = cmd_simulate(sim_pipeline, sim_ttfp, sim_lm_tpp, sim_decode_tpp,
                              sim_tokens, sim_transcript, sim_serial, sim_trace,
                              sim_report, manifest);
        } else if (sweep->parsed()) {
            manifest.subcommand = "sweep";
            rc = cmd_sweep(sweep_configs, sweep_tokens, sweep_out, manifest);
        } else if (eval->parsed()) {
            manifest.subcommand = "eval";
            rc = cmd_eval(eval_stack, eval_corpus, eval_teacher, eval_out, manifest);
        }
        if (rc == 0) {
            manifest.write();
        }
        return rc;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
