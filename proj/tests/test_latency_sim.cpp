#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "rvqstream/latency_sim.hpp"

using namespace rvqstream;

namespace {

PipelineConfig cfg_25hz(double ttfp_ms, double decode_ms, double lm_tpp_ms) {
    PipelineConfig c = PipelineConfig::pipeline_25hz();
    c.lm_ttfp_us = ms_to_us(ttfp_ms);
    c.decode_tpp_us = ms_to_us(decode_ms);
    c.lm_tpp_us = ms_to_us(lm_tpp_ms);
    return c;
}

PipelineConfig cfg_12hz(double ttfp_ms, double decode_ms, double lm_tpp_ms) {
    PipelineConfig c = PipelineConfig::pipeline_12hz();
    c.lm_ttfp_us = ms_to_us(ttfp_ms);
    c.decode_tpp_us = ms_to_us(decode_ms);
    c.lm_tpp_us = ms_to_us(lm_tpp_ms);
    return c;
}

const TraceEvent* find_event(const std::vector<TraceEvent>& trace, EventKind kind,
                             std::int64_t index) {
    for (const TraceEvent& e : trace) {
        if (e.kind == kind && e.index == index) {
            return &e;
        }
    }
    return nullptr;
}

}  // namespace

TEST_CASE("first-packet latency is exactly TTFP + decode TPP") {
    CHECK(first_packet_latency_us(cfg_12hz(97, 4, 21)) == ms_to_us(101));
    CHECK(first_packet_latency_us(cfg_25hz(125, 25, 56)) == ms_to_us(150));
    CHECK(first_packet_latency_us(cfg_12hz(0, 0, 0)) == 0);
}

TEST_CASE("12 Hz: 4 tokens give exactly one 320 ms packet") {
    const SimResult sim = simulate(cfg_12hz(97, 4, 21), 4);
    CHECK(sim.report.packets == 1);
    CHECK(sim.report.first_packet_audio_us == ms_to_us(320));
    CHECK(sim.report.audio_out_us == ms_to_us(320));
    CHECK(sim.report.first_packet_latency_us == ms_to_us(101));
}

TEST_CASE("25 Hz: 16 tokens give one 190 ms packet after the lookahead debt") {
    const SimResult sim = simulate(cfg_25hz(125, 25, 56), 16);
    CHECK(sim.report.packets == 1);
    CHECK(sim.report.first_packet_audio_us == ms_to_us(190));
    CHECK(sim.report.first_packet_latency_us == ms_to_us(150));
}

TEST_CASE("25 Hz with 24 tokens: hand-traced two-packet timeline") {
    // Hand trace, overlapped mode:
    //   t=125ms        tokens 0..15 complete (TTFP)
    //   decode 0: 125 -> 150ms, emits 190ms audio
    //   tokens 16..23: uniform spacing over lm_tpp=56ms -> 7ms per token,
    //     token 23 completes at 125 + 56 = 181ms
    //   decode 1: max(181, 150) = 181 -> 206ms, emits 320ms audio
    const PipelineConfig c = cfg_25hz(125, 25, 56);
    const SimResult sim = simulate(c, 24);
    CHECK(sim.report.packets == 2);

    const TraceEvent* token15 = find_event(sim.trace, EventKind::token_done, 15);
    REQUIRE(token15 != nullptr);
    CHECK(token15->t_us == ms_to_us(125));

    const TraceEvent* token16 = find_event(sim.trace, EventKind::token_done, 16);
    REQUIRE(token16 != nullptr);
    CHECK(token16->t_us == ms_to_us(125) + ms_to_us(56) / 8);

    const TraceEvent* token23 = find_event(sim.trace, EventKind::token_done, 23);
    REQUIRE(token23 != nullptr);
    CHECK(token23->t_us == ms_to_us(181));

    const TraceEvent* d1_start = find_event(sim.trace, EventKind::decode_start, 1);
    REQUIRE(d1_start != nullptr);
    CHECK(d1_start->t_us == ms_to_us(181));

    const TraceEvent* d1_emit = find_event(sim.trace, EventKind::audio_emit, 1);
    REQUIRE(d1_emit != nullptr);
    CHECK(d1_emit->t_us == ms_to_us(206));
    CHECK(d1_emit->value_us == ms_to_us(320));
}

TEST_CASE("too few tokens raise NoPacketError") {
    CHECK_THROWS_AS(simulate(cfg_25hz(125, 25, 56), 15), NoPacketError);
    CHECK_THROWS_AS(simulate(cfg_12hz(97, 4, 21), 3), NoPacketError);
}

TEST_CASE("packet conservation: total audio = decodable tokens x token_ms - lookahead") {
    for (std::int64_t tokens : {16, 17, 23, 24, 32, 100}) {
        const PipelineConfig c = cfg_25hz(125, 25, 56);
        const SimResult sim = simulate(c, tokens);
        const std::int64_t decodable = sim.report.packets * c.packet_tokens;
        CHECK(sim.report.audio_out_us ==
              decodable * c.token_us - c.vocoder_lookahead_us);
    }
    for (std::int64_t tokens : {4, 5, 8, 41}) {
        const PipelineConfig c = cfg_12hz(97, 4, 21);
        const SimResult sim = simulate(c, tokens);
        const std::int64_t decodable = sim.report.packets * c.packet_tokens;
        CHECK(sim.report.audio_out_us == decodable * c.token_us);
    }
}

TEST_CASE("trace timestamps are monotone and decode starts after required tokens") {
    for (bool overlapped : {true, false}) {
        PipelineConfig c = cfg_25hz(125, 25, 56);
        c.overlapped = overlapped;
        const SimResult sim = simulate(c, 64);
        for (std::size_t i = 1; i < sim.trace.size(); ++i) {
            CHECK(sim.trace[i].t_us >= sim.trace[i - 1].t_us);
        }
        for (const TraceEvent& e : sim.trace) {
            if (e.kind != EventKind::decode_start) {
                continue;
            }
            const std::int64_t need = c.first_decodable_tokens + e.index * c.packet_tokens;
            const TraceEvent* last_token =
                find_event(sim.trace, EventKind::token_done, need - 1);
            REQUIRE(last_token != nullptr);
            CHECK(e.t_us >= last_token->t_us);
        }
    }
}

TEST_CASE("steady-state cadence matches the analytic value in both overlap modes") {
    PipelineConfig c = cfg_12hz(97, 4, 21);
    SimResult sim = simulate(c, 64);
    CHECK(sim.report.steady_packet_period_us == std::max(c.lm_tpp_us, c.decode_tpp_us));

    c.overlapped = false;
    sim = simulate(c, 64);
    CHECK(sim.report.steady_packet_period_us == c.lm_tpp_us + c.decode_tpp_us);
}

TEST_CASE("first-packet latency is identical under both overlap modes") {
    for (std::int64_t tokens : {16, 40}) {
        PipelineConfig a = cfg_25hz(222, 62, 64);
        PipelineConfig b = a;
        b.overlapped = false;
        CHECK(simulate(a, tokens).report.first_packet_latency_us ==
              simulate(b, tokens).report.first_packet_latency_us);
    }
}

TEST_CASE("real-time flag matches the period <= packet audio inequality") {
    // 21ms per 320ms packet: comfortably real-time.
    SimResult sim = simulate(cfg_12hz(97, 4, 21), 40);
    CHECK(sim.report.real_time_capable ==
          (sim.report.steady_packet_period_us <= ms_to_us(320)));
    CHECK(sim.report.real_time_capable);

    // Pathological cost: one packet of LM work costs more than its audio.
    SimResult slow = simulate(cfg_12hz(97, 100, 400), 40);
    CHECK(slow.report.real_time_capable ==
          (slow.report.steady_packet_period_us <= ms_to_us(320)));
    CHECK_FALSE(slow.report.real_time_capable);
}

TEST_CASE("simulation is deterministic") {
    const PipelineConfig c = cfg_25hz(376, 147, 85);
    const SimResult a = simulate(c, 48);
    const SimResult b = simulate(c, 48);
    CHECK(a.trace == b.trace);
    CHECK(a.report.total_compute_us == b.report.total_compute_us);
}

TEST_CASE("rtf accounts for all LM and decode compute") {
    // 12 tokens at 12 Hz: TTFP covers 4, then two full groups of 4.
    const PipelineConfig c = cfg_12hz(97, 4, 21);
    const SimResult sim = simulate(c, 12);
    CHECK(sim.report.packets == 3);
    CHECK(sim.report.total_compute_us ==
          ms_to_us(97) + 2 * ms_to_us(21) + 3 * ms_to_us(4));
    CHECK(sim.report.rtf == doctest::Approx(double(sim.report.total_compute_us) /
                                            double(sim.report.audio_out_us)));
}

TEST_CASE("sweep csv round-trips configs and reproduces the reference sums") {
    const std::string csv =
        "# reference cost profiles\n"
        "name,pipeline,concurrency,lm_ttfp_ms,decode_tpp_ms,lm_tpp_ms,rtf_reference\n"
        "25hz-1.7b,25hz,1,125,25,56,0.253\n"
        "12hz-1.7b,12hz,1,97,4,21,0.313\n";
    const auto rows = read_sweep_csv(csv, 64);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].config.packet_tokens == 8);
    CHECK(rows[1].config.packet_tokens == 4);
    CHECK(rows[0].rtf_reference == doctest::Approx(0.253));

    const std::string out = write_sweep_csv(rows);
    CHECK(out.find("25hz-1.7b,1,25hz,64,125,25,56,150,") != std::string::npos);
    CHECK(out.find("12hz-1.7b,1,12hz,64,97,4,21,101,") != std::string::npos);

    // Duplicated config rows produce identical report rows.
    const auto dup = read_sweep_csv(csv + "12hz-1.7b,12hz,1,97,4,21,0.313\n", 64);
    const std::string dup_out = write_sweep_csv(dup);
    const auto first = dup_out.find("12hz-1.7b");
    const auto second = dup_out.find("12hz-1.7b", first + 1);
    REQUIRE(second != std::string::npos);
    const auto line_end_1 = dup_out.find('\n', first);
    const auto line_end_2 = dup_out.find('\n', second);
    CHECK(dup_out.substr(first, line_end_1 - first) ==
          dup_out.substr(second, line_end_2 - second));
}

TEST_CASE("trace JSONL round-trips as identity") {
    const SimResult sim = simulate(cfg_25hz(125, 25, 56), 40);
    const std::string jsonl = trace_to_jsonl(sim.trace);
    const std::vector<TraceEvent> back = trace_from_jsonl(jsonl);
    CHECK(back == sim.trace);
    // Re-serialization is byte-identical.
    CHECK(trace_to_jsonl(back) == jsonl);
}

TEST_CASE("invalid configs are rejected") {
    PipelineConfig c = PipelineConfig::pipeline_25hz();
    c.first_decodable_tokens = 4;  // < packet_tokens
    CHECK_THROWS_AS(c.validate(), ConfigError);

    PipelineConfig d = PipelineConfig::pipeline_25hz();
    d.vocoder_lookahead_us = d.packet_audio_us();
    CHECK_THROWS_AS(d.validate(), ConfigError);
}
