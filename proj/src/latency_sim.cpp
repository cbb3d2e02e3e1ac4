#include "rvqstream/latency_sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace rvqstream {

void PipelineConfig::validate() const {
    if (packet_tokens <= 0 || token_us <= 0) {
        throw ConfigError("PipelineConfig: packet_tokens and token_us must be > 0");
    }
    if (first_decodable_tokens < packet_tokens) {
        throw ConfigError("PipelineConfig: first_decodable_tokens < packet_tokens");
    }
    if (lm_ttfp_us < 0 || lm_tpp_us < 0 || decode_tpp_us < 0 || vocoder_lookahead_us < 0) {
        throw ConfigError("PipelineConfig: negative cost");
    }
    if (vocoder_lookahead_us >= packet_audio_us()) {
        throw ConfigError("PipelineConfig: vocoder lookahead >= packet audio, first packet empty");
    }
}

PipelineConfig PipelineConfig::pipeline_25hz() {
    PipelineConfig c;
    c.name = "25hz";
    c.token_rate_hz = 25.0;
    c.token_us = 40000;
    c.packet_tokens = 8;
    c.vocoder_lookahead_us = 130000;
    c.first_decodable_tokens = 16;  // current chunk + 1 lookahead chunk
    return c;
}

PipelineConfig PipelineConfig::pipeline_12hz() {
    PipelineConfig c;
    c.name = "12hz";
    c.token_rate_hz = 12.5;
    c.token_us = 80000;
    c.packet_tokens = 4;
    c.vocoder_lookahead_us = 0;  // pure left-context decoder
    c.first_decodable_tokens = 4;
    return c;
}

const char* event_kind_name(EventKind kind) {
    switch (kind) {
        case EventKind::token_done: return "token_done";
        case EventKind::decode_start: return "decode_start";
        case EventKind::decode_end: return "decode_end";
        case EventKind::audio_emit: return "audio_emit";
    }
    return "?";
}

Micros first_packet_latency_us(const PipelineConfig& config) {
    config.validate();
    return config.lm_ttfp_us + config.decode_tpp_us;
}

SimResult simulate(const PipelineConfig& config, std::int64_t total_tokens) {
    config.validate();
    if (total_tokens < config.first_decodable_tokens) {
        throw NoPacketError("simulate: " + std::to_string(total_tokens) +
                            " tokens < first_decodable_tokens (" +
                            std::to_string(config.first_decodable_tokens) + ")");
    }

    SimResult result;
    std::vector<TraceEvent>& trace = result.trace;
    const std::int64_t fd = config.first_decodable_tokens;
    const std::int64_t pt = config.packet_tokens;

    // Packets: packet p needs fd + p*pt tokens.
    const std::int64_t packets = 1 + (total_tokens - fd) / pt;

    // Token completions. The first fd tokens are stamped at TTFP; later
    // groups cost lm_tpp each with uniform intra-group spacing. In serial
    // mode a group only starts after the previous packet's decode ends.
    std::vector<Micros> token_done(static_cast<std::size_t>(total_tokens), 0);
    for (std::int64_t i = 0; i < std::min(fd, total_tokens); ++i) {
        token_done[std::size_t(i)] = config.lm_ttfp_us;
    }

    Micros lm_busy_until = config.lm_ttfp_us;
    Micros lm_compute = config.lm_ttfp_us;
    Micros decoder_free_at = 0;
    Micros prev_emit = 0;
    std::int64_t next_token = fd;  // first token of the next group
    std::int64_t decoded_packets = 0;

    auto generate_group = [&]() {
        const std::int64_t group_tokens = std::min<std::int64_t>(pt, total_tokens - next_token);
        const Micros start = lm_busy_until;
        for (std::int64_t j = 0; j < group_tokens; ++j) {
            token_done[std::size_t(next_token + j)] =
                start + (static_cast<Micros>(j + 1) * config.lm_tpp_us) / pt;
        }
        const Micros spent = (static_cast<Micros>(group_tokens) * config.lm_tpp_us) / pt;
        lm_busy_until = start + spent;
        lm_compute += spent;
        next_token += group_tokens;
    };

    if (config.overlapped) {
        // LM generates continuously; token times are independent of decode.
        while (next_token < total_tokens) {
            generate_group();
        }
    }

    for (std::int64_t p = 0; p < packets; ++p) {
        const std::int64_t need = fd + p * pt;  // tokens required before decode
        if (!config.overlapped) {
            while (next_token < need) {
                generate_group();
            }
        }
        const Micros tokens_ready = token_done[std::size_t(need - 1)];
        const Micros start = std::max(tokens_ready, decoder_free_at);
        const Micros end = start + config.decode_tpp_us;
        decoder_free_at = end;
        if (!config.overlapped) {
            // LM resumes only after this decode finishes.
            lm_busy_until = std::max(lm_busy_until, end);
        }
        const Micros audio =
            config.packet_audio_us() - (p == 0 ? config.vocoder_lookahead_us : 0);

        trace.push_back({start, EventKind::decode_start, p, 0});
        trace.push_back({end, EventKind::decode_end, p, 0});
        trace.push_back({end, EventKind::audio_emit, p, audio});

        LatencyReport& rep = result.report;
        if (p == 0) {
            rep.first_packet_latency_us = end;
            rep.first_packet_audio_us = audio;
        } else {
            rep.steady_packet_period_us = end - prev_emit;
        }
        prev_emit = end;
        rep.audio_out_us += audio;
        ++decoded_packets;
    }
    if (!config.overlapped) {
        while (next_token < total_tokens) {
            generate_group();
        }
    }

    for (std::int64_t i = 0; i < total_tokens; ++i) {
        trace.push_back({token_done[std::size_t(i)], EventKind::token_done, i, 0});
    }
    // At equal timestamps: token completions, then decode start/end, then
    // emission (enum order), then by index.
    std::sort(trace.begin(), trace.end(), [](const TraceEvent& a, const TraceEvent& b) {
        if (a.t_us != b.t_us) {
            return a.t_us < b.t_us;
        }
        if (a.kind != b.kind) {
            return static_cast<int>(a.kind) < static_cast<int>(b.kind);
        }
        return a.index < b.index;
    });

    LatencyReport& rep = result.report;
    rep.packets = decoded_packets;
    rep.tokens = total_tokens;
    rep.session_end_us = prev_emit;
    rep.total_compute_us = lm_compute + decoded_packets * config.decode_tpp_us;
    if (packets < 2) {
        // No steady-state sample; fall back to the analytic cadence.
        rep.steady_packet_period_us = config.overlapped
                                          ? std::max(config.lm_tpp_us, config.decode_tpp_us)
                                          : config.lm_tpp_us + config.decode_tpp_us;
    }
    rep.rtf = rep.audio_out_us > 0
                  ? static_cast<double>(rep.total_compute_us) /
                        static_cast<double>(rep.audio_out_us)
                  : 0.0;
    rep.real_time_capable = rep.steady_packet_period_us <= config.packet_audio_us();
    return result;
}

// ---- sweep CSV ------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        // trim
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return fields;
}

}  // namespace

std::vector<SweepRow> read_sweep_csv(const std::string& csv_text,
                                     std::int64_t default_tokens) {
    std::istringstream in(csv_text);
    std::string line;
    std::vector<std::string> header;
    std::vector<SweepRow> rows;
    auto col = [&](const std::vector<std::string>& fields, const std::string& name,
                   bool required = true) -> std::string {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                if (i >= fields.size()) {
                    throw FormatError("sweep csv: short row (missing " + name + ")");
                }
                return fields[i];
            }
        }
        if (required) {
            throw FormatError("sweep csv: missing column " + name);
        }
        return "";
    };
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (header.empty()) {
            header = split_csv_line(line);
            continue;
        }
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.empty()) {
            continue;
        }
        SweepRow row;
        row.pipeline = col(fields, "pipeline");
        if (row.pipeline == "25hz") {
            row.config = PipelineConfig::pipeline_25hz();
        } else if (row.pipeline == "12hz") {
            row.config = PipelineConfig::pipeline_12hz();
        } else {
            throw FormatError("sweep csv: unknown pipeline '" + row.pipeline + "'");
        }
        row.config.name = col(fields, "name");
        row.concurrency = std::stoi(col(fields, "concurrency"));
        row.config.lm_ttfp_us = ms_to_us(std::stod(col(fields, "lm_ttfp_ms")));
        row.config.decode_tpp_us = ms_to_us(std::stod(col(fields, "decode_tpp_ms")));
        row.config.lm_tpp_us = ms_to_us(std::stod(col(fields, "lm_tpp_ms")));
        const std::string rtf = col(fields, "rtf_reference", false);
        row.rtf_reference = rtf.empty() ? 0.0 : std::stod(rtf);
        const std::string tokens = col(fields, "tokens", false);
        row.tokens = tokens.empty() ? default_tokens : std::stoll(tokens);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw FormatError("sweep csv: no data rows");
    }
    return rows;
}

std::string trace_to_jsonl(const std::vector<TraceEvent>& trace) {
    std::ostringstream out;
    for (const TraceEvent& e : trace) {
        nlohmann::json j;
        j["t_us"] = e.t_us;
        j["t_ms"] = us_to_ms(e.t_us);
        j["event"] = event_kind_name(e.kind);
        j["index"] = e.index;
        if (e.kind == EventKind::audio_emit) {
            j["audio_us"] = e.value_us;
            j["audio_ms"] = us_to_ms(e.value_us);
        }
        out << j.dump() << "\n";
    }
    return out.str();
}

std::vector<TraceEvent> trace_from_jsonl(const std::string& text) {
    std::vector<TraceEvent> trace;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const nlohmann::json j = nlohmann::json::parse(line);
        TraceEvent e;
        e.t_us = j.at("t_us").get<Micros>();
        e.index = j.at("index").get<std::int64_t>();
        const std::string kind = j.at("event").get<std::string>();
        if (kind == "token_done") {
            e.kind = EventKind::token_done;
        } else if (kind == "decode_start") {
            e.kind = EventKind::decode_start;
        } else if (kind == "decode_end") {
            e.kind = EventKind::decode_end;
        } else if (kind == "audio_emit") {
            e.kind = EventKind::audio_emit;
            e.value_us = j.at("audio_us").get<Micros>();
        } else {
            throw FormatError("trace: unknown event kind '" + kind + "'");
        }
        trace.push_back(e);
    }
    return trace;
}

std::string write_sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "name,concurrency,pipeline,tokens,lm_ttfp_ms,decode_tpp_ms,lm_tpp_ms,"
           "first_packet_latency_ms,first_packet_audio_ms,steady_packet_period_ms,"
           "packets,audio_out_ms,total_compute_ms,rtf_sim,rtf_reference,real_time_capable\n";
    for (const SweepRow& row : rows) {
        const SimResult sim = simulate(row.config, row.tokens);
        const LatencyReport& rep = sim.report;
        out << row.config.name << ',' << row.concurrency << ',' << row.pipeline << ','
            << rep.tokens << ','
            << us_to_ms(row.config.lm_ttfp_us) << ',' << us_to_ms(row.config.decode_tpp_us)
            << ',' << us_to_ms(row.config.lm_tpp_us) << ','
            << us_to_ms(rep.first_packet_latency_us) << ','
            << us_to_ms(rep.first_packet_audio_us) << ','
            << us_to_ms(rep.steady_packet_period_us) << ',' << rep.packets << ','
            << us_to_ms(rep.audio_out_us) << ',' << us_to_ms(rep.total_compute_us) << ','
            << rep.rtf << ',' << row.rtf_reference << ','
            << (rep.real_time_capable ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace rvqstream
