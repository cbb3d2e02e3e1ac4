#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "rvqstream/block_attention.hpp"

using namespace rvqstream;

TEST_CASE("query block 3 of 6 attends to blocks 0..4") {
    const BlockPartition p{8, 48};
    const BlockMask mask = build_mask(p);
    std::set<std::size_t> allowed;
    for (std::size_t k = 0; k < 6; ++k) {
        if (mask.allow(3, k)) {
            allowed.insert(k);
        }
    }
    CHECK(allowed == std::set<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("query block 0 clamps to {0, 1}") {
    const BlockPartition p{8, 48};
    const BlockMask mask = build_mask(p);
    std::set<std::size_t> allowed;
    for (std::size_t k = 0; k < 6; ++k) {
        if (mask.allow(0, k)) {
            allowed.insert(k);
        }
    }
    CHECK(allowed == std::set<std::size_t>{0, 1});
}

TEST_CASE("mask equals the brute-force window inequality for every pair") {
    for (std::size_t blocks = 1; blocks <= 64; ++blocks) {
        const BlockPartition p{4, blocks * 4};
        const BlockMask mask = build_mask(p);
        for (std::size_t q = 0; q < blocks; ++q) {
            for (std::size_t k = 0; k < blocks; ++k) {
                // Oracle: q - 3 <= k <= q + 1 in signed arithmetic.
                const bool want = static_cast<long>(k) >= static_cast<long>(q) - 3 &&
                                  static_cast<long>(k) <= static_cast<long>(q) + 1;
                CHECK(mask.allow(q, k) == want);
            }
        }
    }
}

TEST_CASE("token-level mask is the block mask expanded") {
    const BlockPartition p{3, 17};  // ragged final block
    const BlockMask mask = build_mask(p);
    for (std::size_t q = 0; q < p.num_tokens; ++q) {
        for (std::size_t k = 0; k < p.num_tokens; ++k) {
            CHECK(mask.allow_tokens(p, q, k) == mask.allow(q / 3, k / 3));
        }
    }
}

TEST_CASE("window extents are configurable") {
    const BlockPartition p{2, 20};
    const BlockMask mask = build_mask(p, AttentionWindow{1, 0});
    CHECK(mask.allow(5, 4));
    CHECK(mask.allow(5, 5));
    CHECK_FALSE(mask.allow(5, 6));
    CHECK_FALSE(mask.allow(5, 3));
}

TEST_CASE("zero-size partitions are rejected") {
    CHECK_THROWS_AS(build_mask(BlockPartition{0, 8}), ConfigError);
    CHECK_THROWS_AS(build_mask(BlockPartition{8, 0}), ConfigError);
}

TEST_CASE("first_decodable is chunk_size * 2 with one lookahead block") {
    CHECK(first_decodable(BlockPartition{8, 80}) == 16);
    CHECK(first_decodable(BlockPartition{1, 10}) == 2);
    CHECK(first_decodable(BlockPartition{8, 80}, AttentionWindow{3, 2}) == 24);
}

TEST_CASE("chunk 1 becomes decodable after 24 tokens (replay against the mask)") {
    const BlockPartition p{8, 80};
    const BlockMask mask = build_mask(p);
    // Replay token arrivals; chunk c is decodable once every key block its
    // queries attend to is fully present.
    const std::size_t chunk = 1;
    std::size_t ready_at = 0;
    for (std::size_t arrived = 1; arrived <= p.num_tokens; ++arrived) {
        bool ok = true;
        for (std::size_t k_block = 0; k_block < p.blocks() && ok; ++k_block) {
            if (!mask.allow(chunk, k_block)) {
                continue;
            }
            const std::size_t block_end = std::min((k_block + 1) * p.chunk_size, p.num_tokens);
            ok = arrived >= block_end;
        }
        if (ok) {
            ready_at = arrived;
            break;
        }
    }
    CHECK(ready_at == 24);

    const ChunkSchedule schedule = schedule_chunks(p, 40.0, 130.0);
    CHECK(schedule.rows[1].ready_at_token == 24);
}

TEST_CASE("25 Hz schedule: first packet 190 ms, later packets 320 ms") {
    const BlockPartition p{8, 5 * 8};
    const ChunkSchedule schedule = schedule_chunks(p, 40.0, 130.0);
    REQUIRE(schedule.rows.size() == 5);
    CHECK(schedule.rows[0].audio_ms == doctest::Approx(190.0));
    CHECK(schedule.rows[0].lookahead_debt_ms == doctest::Approx(130.0));
    for (std::size_t c = 1; c < 5; ++c) {
        CHECK(schedule.rows[c].audio_ms == doctest::Approx(320.0));
        CHECK(schedule.rows[c].lookahead_debt_ms == 0.0);
    }
    // Cumulative audio over 5 chunks = 5 x 320 - 130.
    CHECK(schedule.total_audio_ms() == doctest::Approx(5 * 320.0 - 130.0));
}

TEST_CASE("zero lookahead keeps the first packet at full chunk audio") {
    const ChunkSchedule schedule = schedule_chunks(BlockPartition{8, 16}, 40.0, 0.0);
    CHECK(schedule.rows[0].audio_ms == doctest::Approx(320.0));
}

TEST_CASE("lookahead at or beyond chunk audio is rejected") {
    CHECK_THROWS_AS(schedule_chunks(BlockPartition{8, 16}, 40.0, 320.0), ConfigError);
    CHECK_THROWS_AS(schedule_chunks(BlockPartition{8, 16}, 40.0, 400.0), ConfigError);
}

TEST_CASE("earliest-decodable counts step by exactly chunk_size until the tail clamp") {
    const BlockPartition p{8, 10 * 8};
    const ChunkSchedule schedule = schedule_chunks(p, 40.0, 130.0);
    for (std::size_t c = 0; c < schedule.rows.size(); ++c) {
        const auto& row = schedule.rows[c];
        if (!row.needs_stream_end) {
            CHECK(row.ready_at_token == (c + 2) * 8);
            if (c > 0 && !schedule.rows[c - 1].needs_stream_end) {
                CHECK(row.ready_at_token == schedule.rows[c - 1].ready_at_token + 8);
            }
        } else {
            CHECK(row.ready_at_token == p.num_tokens);
        }
    }
    // Exactly the final chunk waits for end of stream here.
    CHECK(schedule.rows.back().needs_stream_end);
    CHECK_FALSE(schedule.rows[schedule.rows.size() - 2].needs_stream_end);
}

TEST_CASE("final partial chunk is decodable at end of stream") {
    const BlockPartition p{8, 21};  // blocks of 8, 8, 5
    const ChunkSchedule schedule = schedule_chunks(p, 40.0, 0.0);
    REQUIRE(schedule.rows.size() == 3);
    CHECK(schedule.rows[2].tokens == 5);
    CHECK(schedule.rows[2].audio_ms == doctest::Approx(5 * 40.0));
    CHECK(schedule.rows[2].ready_at_token == 21);
    CHECK(schedule.rows[2].needs_stream_end);
}

TEST_CASE("streaming sufficiency: decode at ready time touches no missing key token") {
    const BlockPartition p{4, 40};
    const BlockMask mask = build_mask(p);
    const ChunkSchedule schedule = schedule_chunks(p, 80.0, 0.0);
    for (const auto& row : schedule.rows) {
        const std::size_t arrived = row.ready_at_token;
        for (std::size_t q = row.first_token; q < row.first_token + row.tokens; ++q) {
            for (std::size_t k = 0; k < p.num_tokens; ++k) {
                if (mask.allow_tokens(p, q, k)) {
                    CHECK(k < arrived);
                }
            }
        }
    }
}

TEST_CASE("PBM and CSV writers emit well-formed output") {
    const BlockPartition p{2, 6};
    const BlockMask mask = build_mask(p);
    std::ostringstream pbm;
    write_mask_pbm(pbm, mask, p);
    const std::string text = pbm.str();
    CHECK(text.rfind("P1\n6 6\n", 0) == 0);
    // 6 header-line + 6 rows
    std::size_t lines = 0;
    for (char ch : text) {
        if (ch == '\n') {
            ++lines;
        }
    }
    CHECK(lines == 8);

    std::ostringstream csv;
    write_schedule_csv(csv, schedule_chunks(p, 40.0, 0.0));
    CHECK(csv.str().find("chunk,first_token") == 0);
}
