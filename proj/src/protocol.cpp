#include "detcomm/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>

namespace detcomm {

namespace {

constexpr double kTableZeroTol = 1e-12;

} // namespace

double SessionConfig::effective_abort_threshold() const {
    if (abort_threshold) {
        return *abort_threshold;
    }
    return std::max(0.01, 0.5 * error_bound(scheme));
}

void SessionConfig::validate() const {
    scheme.validate();
    if (message.empty()) {
        throw std::invalid_argument("SessionConfig: message must be non-empty");
    }
    if (!(control_fraction >= 0.0 && control_fraction < 1.0)) {
        throw std::invalid_argument("SessionConfig: control_fraction must be in [0, 1)");
    }
    if (!(loss_probability >= 0.0 && loss_probability <= 1.0)) {
        throw std::invalid_argument("SessionConfig: loss_probability must be in [0, 1]");
    }
    const double threshold = effective_abort_threshold();
    if (!(threshold > 0.0 && threshold < 0.5)) {
        throw std::invalid_argument("SessionConfig: abort_threshold must be in (0, 0.5)");
    }
}

std::vector<Frame> plan_session(const SessionConfig& config, RandomStream& rng) {
    config.validate();
    const std::vector<BitValue> bits = message_to_bits(config.message);

    std::vector<Frame> frames;
    frames.reserve(bits.size() * 2);
    std::uint32_t position = 0;
    for (const BitValue bit : bits) {
        while (rng.uniform() < config.control_fraction) {
            Frame control;
            control.position = position++;
            control.bit = (rng.uniform_int(2) == 1) ? BitValue::PLUS : BitValue::MINUS;
            control.cipher = static_cast<int>(rng.uniform_int(4));
            control.is_control = true;
            frames.push_back(control);
        }
        Frame frame;
        frame.position = position++;
        frame.bit = bit;
        frame.cipher = static_cast<int>(rng.uniform_int(4));
        frame.is_control = false;
        frames.push_back(frame);
    }
    return frames;
}

StateVector encode_frame(const Frame& frame, const BasisPair& bases) {
    return bases.prepared(frame.bit, frame.cipher);
}

Outcome bob_measure(std::uint32_t position, const StateVector& state, const BasisPair& bases,
                    RandomStream& rng) {
    const BasisChoice choice = (rng.uniform_int(2) == 0) ? BasisChoice::B : BasisChoice::C;
    const MeasureResult m = measure(state, bases.basis(choice), rng);
    return Outcome{position, choice, m.index, false};
}

Outcome receive_photon(std::uint32_t position, const StateVector& state, const BasisPair& bases,
                       double loss_probability, RandomStream& rng) {
    const bool lost = rng.uniform() < loss_probability;
    if (lost) {
        Outcome out;
        out.position = position;
        out.lost = true;
        return out;
    }
    return bob_measure(position, state, bases, rng);
}

BitValue decode_bit(const Outcome& outcome, int cipher) {
    if (outcome.lost) {
        throw std::invalid_argument("decode_bit: lost outcome carries no bit");
    }
    const bool match = outcome.index == cipher;
    if (outcome.basis_choice == BasisChoice::B) {
        return match ? BitValue::PLUS : BitValue::MINUS;
    }
    return match ? BitValue::MINUS : BitValue::PLUS;
}

bool verify_control(const Frame& frame, const Outcome& outcome, const ProbabilityTable& table) {
    if (!frame.is_control) {
        throw std::invalid_argument("verify_control: frame is not a control frame");
    }
    if (outcome.lost) {
        throw std::invalid_argument("verify_control: lost outcome cannot be verified");
    }
    return table.entry(frame.bit, frame.cipher, outcome.basis_choice, outcome.index) >
           kTableZeroTol;
}

Transcript run_session(const SessionConfig& config, const EveStrategy& eve) {
    config.validate();
    const BasisPair bases = build_bases(config.scheme);
    const ProbabilityTable table = probability_table(bases);

    // Stream split order is part of the session contract: alice, eve, bob.
    RandomStream master(config.seed);
    RandomStream alice_rng = master.split();
    RandomStream eve_rng = master.split();
    RandomStream bob_rng = master.split();

    Transcript transcript;
    transcript.frames = plan_session(config, alice_rng);
    transcript.outcomes.reserve(transcript.frames.size());

    for (const Frame& frame : transcript.frames) {
        const StateVector photon = encode_frame(frame, bases);
        InterceptResult intercepted = eve_intercept(frame.position, photon, eve, eve_rng);
        if (intercepted.record) {
            transcript.eve_records.push_back(*intercepted.record);
        }
        transcript.outcomes.push_back(receive_photon(frame.position, intercepted.forwarded,
                                                     bases, config.loss_probability, bob_rng));
    }

    // Control reveal happens only after every photon frame is delivered;
    // Bob reports outcomes for exactly the revealed positions.
    std::size_t control_total = 0;
    std::size_t control_errors = 0;
    for (std::size_t i = 0; i < transcript.frames.size(); ++i) {
        const Frame& frame = transcript.frames[i];
        if (!frame.is_control || transcript.outcomes[i].lost) {
            continue;
        }
        ++control_total;
        if (!verify_control(frame, transcript.outcomes[i], table)) {
            ++control_errors;
        }
    }

    ErrorReport report;
    report.control_total = control_total;
    report.control_errors = control_errors;
    report.error_rate = (control_total == 0)
                            ? 0.0
                            : static_cast<double>(control_errors) /
                                  static_cast<double>(control_total);
    report.verdict = (report.error_rate > config.effective_abort_threshold()) ? Verdict::ABORT
                                                                              : Verdict::PASS;
    transcript.error_report = report;

    if (report.verdict == Verdict::PASS) {
        std::vector<int> key;
        key.reserve(transcript.frames.size());
        for (const Frame& frame : transcript.frames) {
            key.push_back(frame.cipher);
        }
        transcript.announced_key = std::move(key);

        std::vector<BitValue> decoded;
        decoded.reserve(transcript.frames.size());
        for (std::size_t i = 0; i < transcript.frames.size(); ++i) {
            if (transcript.frames[i].is_control || transcript.outcomes[i].lost) {
                continue;
            }
            decoded.push_back(
                decode_bit(transcript.outcomes[i], (*transcript.announced_key)[i]));
        }
        transcript.decoded_message = bits_to_message(decoded);
    }
    return transcript;
}

bool decoded_matches_sent(const Transcript& transcript) {
    for (std::size_t i = 0; i < transcript.frames.size(); ++i) {
        const Frame& frame = transcript.frames[i];
        if (frame.is_control || transcript.outcomes[i].lost) {
            continue;
        }
        if (decode_bit(transcript.outcomes[i], frame.cipher) != frame.bit) {
            return false;
        }
    }
    return true;
}

std::vector<BitValue> message_to_bits(const std::vector<std::uint8_t>& message) {
    std::vector<BitValue> bits;
    bits.reserve(message.size() * 8);
    for (const std::uint8_t byte : message) {
        for (int shift = 7; shift >= 0; --shift) {
            bits.push_back(((byte >> shift) & 1) ? BitValue::PLUS : BitValue::MINUS);
        }
    }
    return bits;
}

std::vector<std::uint8_t> bits_to_message(const std::vector<BitValue>& bits) {
    std::vector<std::uint8_t> bytes((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == BitValue::PLUS) {
            bytes[i / 8] |= static_cast<std::uint8_t>(1u << (7 - i % 8));
        }
    }
    return bytes;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t first = 0;
    std::size_t last = s.size();
    while (first < last && std::isspace(static_cast<unsigned char>(s[first]))) {
        ++first;
    }
    while (last > first && std::isspace(static_cast<unsigned char>(s[last - 1]))) {
        --last;
    }
    return s.substr(first, last - first);
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
    }
    if (used != value.size()) {
        throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
    }
    return out;
}

SchemeParams parse_scheme_value(const std::string& value) {
    if (value == "optimal") {
        return SchemeParams::optimal();
    }
    if (value == "simple") {
        return SchemeParams::simple();
    }
    // explicit "a1,a2,a3" triple
    std::array<double, 3> a{};
    std::stringstream ss(value);
    std::string part;
    std::size_t i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 3) {
            throw std::invalid_argument("config: scheme triple has too many components");
        }
        a[i++] = parse_double("scheme", trim(part));
    }
    if (i != 3) {
        throw std::invalid_argument("config: scheme must be optimal, simple, or a1,a2,a3");
    }
    SchemeParams params{a[0], a[1], a[2]};
    params.validate();
    return params;
}

} // namespace

ParsedConfig parse_session_config(std::istream& in) {
    ParsedConfig parsed;
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') {
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        }
        kv[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
    }

    SessionConfig& session = parsed.session;
    bool have_explicit = false;
    SchemeParams explicit_params{};
    for (const auto& [key, value] : kv) {
        if (key == "scheme") {
            session.scheme = parse_scheme_value(value);
        } else if (key == "a1") {
            explicit_params.a1 = parse_double(key, value);
            have_explicit = true;
        } else if (key == "a2") {
            explicit_params.a2 = parse_double(key, value);
            have_explicit = true;
        } else if (key == "a3") {
            explicit_params.a3 = parse_double(key, value);
            have_explicit = true;
        } else if (key == "message_hex") {
            session.message = parse_hex(value);
        } else if (key == "control_fraction") {
            session.control_fraction = parse_double(key, value);
        } else if (key == "abort_threshold") {
            session.abort_threshold = parse_double(key, value);
        } else if (key == "loss_probability") {
            session.loss_probability = parse_double(key, value);
        } else if (key == "seed") {
            try {
                session.seed = std::stoull(value);
            } catch (const std::exception&) {
                throw std::invalid_argument("config: bad seed: '" + value + "'");
            }
            parsed.seed_present = true;
        } else {
            parsed.extras[key] = value;
        }
    }
    if (have_explicit) {
        explicit_params.validate();
        session.scheme = explicit_params;
    }
    session.validate();
    return parsed;
}

ParsedConfig load_session_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::invalid_argument("cannot open config file: " + path);
    }
    return parse_session_config(in);
}

std::vector<std::uint8_t> parse_hex(const std::string& text) {
    if (text.size() % 2 != 0) {
        throw std::invalid_argument("hex string must have even length");
    }
    const auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') {
            return c - '0';
        }
        if (c >= 'a' && c <= 'f') {
            return c - 'a' + 10;
        }
        if (c >= 'A' && c <= 'F') {
            return c - 'A' + 10;
        }
        throw std::invalid_argument(std::string("bad hex digit: '") + c + "'");
    };
    std::vector<std::uint8_t> bytes;
    bytes.reserve(text.size() / 2);
    for (std::size_t i = 0; i < text.size(); i += 2) {
        bytes.push_back(static_cast<std::uint8_t>(nibble(text[i]) * 16 + nibble(text[i + 1])));
    }
    return bytes;
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (const std::uint8_t b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

} // namespace detcomm
