#include <doctest.h>

#include <array>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "detcomm/analysis.hpp"
#include "detcomm/protocol.hpp"
#include "test_util.hpp"

using namespace detcomm;
using detcomm::test::same_up_to_phase;
using detcomm::test::within_3sigma;

namespace {

SessionConfig basic_config(std::vector<std::uint8_t> message, std::uint64_t seed) {
    SessionConfig config;
    config.scheme = SchemeParams::optimal();
    config.message = std::move(message);
    config.seed = seed;
    return config;
}

} // namespace

TEST_CASE("message bits expand MSB-first and pack back") {
    const std::vector<std::uint8_t> message = {0x80, 0x01, 0xa5};
    const std::vector<BitValue> bits = message_to_bits(message);
    REQUIRE(bits.size() == 24);
    CHECK(bits[0] == BitValue::PLUS);  // 0x80 leads with a 1
    CHECK(bits[1] == BitValue::MINUS);
    CHECK(bits[15] == BitValue::PLUS); // 0x01 ends with a 1
    CHECK(bits_to_message(bits) == message);
}

TEST_CASE("plan with no controls maps one frame per message bit") {
    SessionConfig config = basic_config({0xff}, 1);
    config.control_fraction = 0.0;
    RandomStream rng(config.seed);
    const std::vector<Frame> frames = plan_session(config, rng);
    REQUIRE(frames.size() == 8);
    for (std::size_t i = 0; i < frames.size(); ++i) {
        CHECK(frames[i].position == i);
        CHECK(frames[i].bit == BitValue::PLUS);
        CHECK_FALSE(frames[i].is_control);
    }
}

TEST_CASE("plan rejects an empty message") {
    SessionConfig config = basic_config({}, 1);
    RandomStream rng(1);
    CHECK_THROWS_AS(plan_session(config, rng), std::invalid_argument);
}

TEST_CASE("control insertion count matches an independent model simulation") {
    // Oracle: the insertion model is a geometric interleave; simulate it
    // directly to get the count distribution for 8000 message frames.
    constexpr std::size_t kMessageBits = 8000;
    constexpr double kFraction = 0.5;
    constexpr int kOracleTrials = 2000;
    RandomStream oracle_rng(555);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int t = 0; t < kOracleTrials; ++t) {
        std::size_t controls = 0;
        for (std::size_t i = 0; i < kMessageBits; ++i) {
            while (oracle_rng.uniform() < kFraction) {
                ++controls;
            }
        }
        sum += static_cast<double>(controls);
        sum_sq += static_cast<double>(controls) * static_cast<double>(controls);
    }
    const double mean = sum / kOracleTrials;
    const double sigma = std::sqrt(sum_sq / kOracleTrials - mean * mean);
    // sanity: mean tracks f/(1-f) per message frame
    CHECK(std::abs(mean - kMessageBits * kFraction / (1.0 - kFraction)) < 3.0 * sigma);

    SessionConfig config = basic_config(std::vector<std::uint8_t>(kMessageBits / 8, 0x3c), 9);
    config.control_fraction = kFraction;
    RandomStream rng(config.seed);
    const std::vector<Frame> frames = plan_session(config, rng);
    std::size_t controls = 0;
    std::size_t messages = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        CHECK(frames[i].position == i); // contiguous positions
        frames[i].is_control ? ++controls : ++messages;
    }
    CHECK(messages == kMessageBits);
    CHECK(std::abs(static_cast<double>(controls) - mean) < 3.0 * sigma);
}

TEST_CASE("ciphers are uniform over the four values") {
    SessionConfig config = basic_config(std::vector<std::uint8_t>(12500, 0x11), 4);
    config.control_fraction = 0.25;
    RandomStream rng(config.seed);
    std::array<std::uint64_t, 4> counts{};
    for (const Frame& frame : plan_session(config, rng)) {
        ++counts[static_cast<std::size_t>(frame.cipher)];
    }
    CHECK(chi_square_uniform_pvalue(counts) > 0.001);
}

TEST_CASE("frame encoding selects the indexed basis state") {
    const BasisPair optimal = build_bases(SchemeParams::optimal());
    const Frame plus0{0, BitValue::PLUS, 0, false};
    CHECK(encode_frame(plus0, optimal) == optimal.b[0]);
    CHECK(encode_frame(plus0, optimal) == product_state(Spatial::R, Polarization::V));

    const BasisPair simple = build_bases(SchemeParams::simple());
    const Frame minus0{0, BitValue::MINUS, 0, false};
    CHECK(same_up_to_phase(encode_frame(minus0, simple),
                           product_state(Spatial::L, Polarization::S), 1e-12));

    for (BitValue bit : {BitValue::PLUS, BitValue::MINUS}) {
        for (int cipher = 0; cipher < 4; ++cipher) {
            const Frame frame{0, bit, cipher, false};
            const StateVector photon = encode_frame(frame, optimal);
            CHECK(born_probability(photon, optimal.prepared(bit, cipher)) ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("bob's detection statistics") {
    const BasisPair bases = build_bases(SchemeParams::optimal());
    RandomStream rng(23);

    constexpr std::size_t kTrials = 100000;
    std::size_t b_choices = 0;
    std::array<std::uint64_t, 4> c_indices{};
    std::size_t c_total = 0;
    for (std::size_t t = 0; t < kTrials; ++t) {
        const Outcome out = bob_measure(0, bases.b[0], bases, rng);
        if (out.basis_choice == BasisChoice::B) {
            ++b_choices;
            REQUIRE(out.index == 0); // eigenstate
        } else {
            ++c_total;
            ++c_indices[static_cast<std::size_t>(out.index)];
        }
    }
    CHECK(within_3sigma(static_cast<double>(b_choices) / kTrials, 0.5, kTrials));
    // conditioned on the C choice, row 1_+ of the table: (0, 1/3, 1/3, 1/3)
    CHECK(c_indices[0] == 0);
    for (std::size_t k = 1; k < 4; ++k) {
        CHECK(within_3sigma(static_cast<double>(c_indices[k]) / static_cast<double>(c_total),
                            1.0 / 3.0, c_total));
    }
}

TEST_CASE("decode rule") {
    CHECK(decode_bit(Outcome{0, BasisChoice::B, 2, false}, 2) == BitValue::PLUS);
    CHECK(decode_bit(Outcome{0, BasisChoice::C, 1, false}, 2) == BitValue::PLUS);
    CHECK(decode_bit(Outcome{0, BasisChoice::C, 3, false}, 3) == BitValue::MINUS);
    CHECK(decode_bit(Outcome{0, BasisChoice::B, 1, false}, 2) == BitValue::MINUS);
    CHECK_THROWS_AS(decode_bit(Outcome{0, BasisChoice::B, 0, true}, 0), std::invalid_argument);
}

TEST_CASE("control verification accepts exactly the possible outcomes") {
    const ProbabilityTable table = probability_table(build_bases(SchemeParams::optimal()));
    const Frame control{0, BitValue::PLUS, 0, true};
    CHECK(verify_control(control, Outcome{0, BasisChoice::B, 0, false}, table));
    CHECK_FALSE(verify_control(control, Outcome{0, BasisChoice::C, 0, false}, table));
    CHECK(verify_control(control, Outcome{0, BasisChoice::C, 2, false}, table));

    const Frame message{0, BitValue::PLUS, 0, false};
    CHECK_THROWS_AS(verify_control(message, Outcome{0, BasisChoice::B, 0, false}, table),
                    std::invalid_argument);
    CHECK_THROWS_AS(verify_control(control, Outcome{0, BasisChoice::B, 0, true}, table),
                    std::invalid_argument);
}

TEST_CASE("honest decode-encode round trip never fails, either basis") {
    // Deterministic protocol: every honest outcome decodes to the sent bit.
    const BasisPair bases = build_bases(SchemeParams::optimal());
    const ProbabilityTable table = probability_table(bases);
    RandomStream rng(37);
    for (BitValue bit : {BitValue::PLUS, BitValue::MINUS}) {
        for (int cipher = 0; cipher < 4; ++cipher) {
            const Frame frame{0, bit, cipher, true};
            const StateVector photon = encode_frame(frame, bases);
            for (int trial = 0; trial < 500; ++trial) {
                const Outcome out = bob_measure(0, photon, bases, rng);
                REQUIRE(decode_bit(out, cipher) == bit);
                REQUIRE(verify_control(frame, out, table));
            }
        }
    }
}

TEST_CASE("honest lossless session decodes exactly") {
    std::vector<std::uint8_t> message;
    for (int i = 0; i < 64; ++i) {
        message.push_back(static_cast<std::uint8_t>(37 * i + 11));
    }
    const SessionConfig config = basic_config(message, 20240229);
    const Transcript transcript = run_session(config, EveStrategy::none());

    CHECK(transcript.error_report.verdict == Verdict::PASS);
    CHECK(transcript.error_report.control_errors == 0);
    CHECK(transcript.error_report.error_rate == 0.0);
    REQUIRE(transcript.decoded_message.has_value());
    CHECK(*transcript.decoded_message == message);
    CHECK(decoded_matches_sent(transcript));
    REQUIRE(transcript.announced_key.has_value());
    CHECK(transcript.announced_key->size() == transcript.frames.size());
    CHECK(transcript.eve_records.empty());
}

TEST_CASE("loss is flagged and surviving positions still decode exactly") {
    SessionConfig config = basic_config(std::vector<std::uint8_t>(500, 0xc3), 777);
    config.loss_probability = 0.1;
    const Transcript transcript = run_session(config, EveStrategy::none());

    CHECK(transcript.error_report.verdict == Verdict::PASS);
    CHECK(transcript.error_report.control_errors == 0);
    CHECK(decoded_matches_sent(transcript));

    std::size_t lost = 0;
    for (const Outcome& out : transcript.outcomes) {
        if (out.lost) {
            ++lost;
        }
    }
    CHECK(within_3sigma(static_cast<double>(lost) / transcript.outcomes.size(), 0.1,
                        transcript.outcomes.size()));
}

TEST_CASE("same seed and config reproduce a bit-identical transcript") {
    SessionConfig config = basic_config({0xde, 0xad, 0xbe, 0xef}, 31337);
    config.loss_probability = 0.05;
    const BasisPair bases = build_bases(config.scheme);
    const EveStrategy eve = optimal_strategy(bases);
    const Transcript t1 = run_session(config, eve);
    const Transcript t2 = run_session(config, eve);
    CHECK(t1 == t2);

    SessionConfig other = config;
    other.seed = 31338;
    CHECK_FALSE(run_session(other, eve) == t1);
}

TEST_CASE("aborted sessions never announce the key") {
    SessionConfig config = basic_config(std::vector<std::uint8_t>(64, 0x7e), 5150);
    config.control_fraction = 0.5;
    const BasisPair bases = build_bases(config.scheme);
    // 1/6 error rate against the default threshold of 1/12: abort is certain
    // at this many control bits.
    const Transcript transcript = run_session(config, optimal_strategy(bases));
    CHECK(transcript.error_report.verdict == Verdict::ABORT);
    CHECK_FALSE(transcript.announced_key.has_value());
    CHECK_FALSE(transcript.decoded_message.has_value());
    CHECK(transcript.error_report.error_rate > 0.05);
}

TEST_CASE("default abort threshold is half the attack floor with a 0.01 floor") {
    SessionConfig config = basic_config({0x01}, 1);
    CHECK(config.effective_abort_threshold() == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
    config.scheme = SchemeParams::simple();
    CHECK(config.effective_abort_threshold() == doctest::Approx(1.0 / 16.0).epsilon(1e-12));
    config.scheme = SchemeParams{std::sqrt(1.0 - 2e-6), 1e-3, 1e-3};
    CHECK(config.effective_abort_threshold() == doctest::Approx(0.01).epsilon(1e-9));
    config.abort_threshold = 0.2;
    CHECK(config.effective_abort_threshold() == 0.2);
}

TEST_CASE("session config validation") {
    SessionConfig config = basic_config({0x00}, 1);
    config.control_fraction = 1.0;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.control_fraction = 0.5;
    config.abort_threshold = 0.5;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
    config.abort_threshold = 0.1;
    config.loss_probability = 1.5;
    CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("config files parse keys, comments, and the eve extra") {
    std::istringstream in(
        "# session fixture\n"
        "scheme = simple\n"
        "message_hex = c0ffee\n"
        "control_fraction = 0.25\n"
        "abort_threshold = 0.03\n"
        "loss_probability = 0.01\n"
        "seed = 987654321\n"
        "eve = random:12\n");
    const ParsedConfig parsed = parse_session_config(in);
    CHECK(parsed.session.scheme.a3 == 0.0);
    CHECK(parsed.session.message == parse_hex("c0ffee"));
    CHECK(parsed.session.control_fraction == 0.25);
    CHECK(parsed.session.abort_threshold == 0.03);
    CHECK(parsed.session.loss_probability == 0.01);
    CHECK(parsed.session.seed == 987654321);
    CHECK(parsed.seed_present);
    CHECK(parsed.extras.at("eve") == "random:12");
}

TEST_CASE("config files accept explicit parameter triples") {
    std::istringstream named("scheme = 0.6,0.8,0.0\nmessage_hex = 00\n");
    CHECK(parse_session_config(named).session.scheme.a2 == doctest::Approx(0.8));

    std::istringstream split_keys("a1 = 0.6\na2 = 0.0\na3 = 0.8\nmessage_hex = ff\n");
    CHECK(parse_session_config(split_keys).session.scheme.a3 == doctest::Approx(0.8));

    std::istringstream invalid("scheme = 0.9,0.3,0.3\nmessage_hex = 00\n");
    CHECK_THROWS_AS(parse_session_config(invalid), std::invalid_argument);

    std::istringstream garbled("scheme optimal\n");
    CHECK_THROWS_AS(parse_session_config(garbled), std::invalid_argument);
}

TEST_CASE("hex helpers round trip and reject malformed input") {
    const std::vector<std::uint8_t> bytes = {0x00, 0xff, 0x5a};
    CHECK(parse_hex(to_hex(bytes)) == bytes);
    CHECK(to_hex(bytes) == "00ff5a");
    CHECK_THROWS_AS(parse_hex("abc"), std::invalid_argument);
    CHECK_THROWS_AS(parse_hex("zz"), std::invalid_argument);
}
