#ifndef DETCOMM_PROTOCOL_HPP
#define DETCOMM_PROTOCOL_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "detcomm/adversary.hpp"
#include "detcomm/scheme.hpp"

namespace detcomm {

enum class Verdict : std::uint8_t { ABORT = 0, PASS = 1 };

/// One transmitted bit position in Alice's plan.
struct Frame {
    std::uint32_t position = 0;
    BitValue bit = BitValue::MINUS;
    int cipher = 0; // 0..3 internally; 1-based only in display
    bool is_control = false;

    bool operator==(const Frame&) const = default;
};

/// Bob's detection result for one position. Lost outcomes carry no
/// basis/index semantics.
struct Outcome {
    std::uint32_t position = 0;
    BasisChoice basis_choice = BasisChoice::B;
    int index = 0;
    bool lost = false;

    bool operator==(const Outcome&) const = default;
};

struct ErrorReport {
    std::size_t control_total = 0;
    std::size_t control_errors = 0;
    double error_rate = 0.0;
    Verdict verdict = Verdict::ABORT;

    bool operator==(const ErrorReport&) const = default;
};

struct SessionConfig {
    SchemeParams scheme = SchemeParams::optimal();
    std::vector<std::uint8_t> message;
    double control_fraction = 0.5;
    /// When unset, defaults to half the scheme's analytic attack floor,
    /// with an absolute floor of 0.01.
    std::optional<double> abort_threshold;
    double loss_probability = 0.0;
    std::uint64_t seed = 0;

    double effective_abort_threshold() const;
    void validate() const;
};

struct Transcript {
    std::vector<Frame> frames;
    std::vector<Outcome> outcomes;
    std::vector<EveRecord> eve_records;
    ErrorReport error_report;
    std::optional<std::vector<int>> announced_key; // present iff PASS
    std::optional<std::vector<std::uint8_t>> decoded_message;

    bool operator==(const Transcript&) const = default;
};

/// Expands the message MSB-first into PLUS/MINUS frames, interleaving
/// control frames (random bit, random cipher): before each message frame,
/// extra controls are inserted while a uniform draw stays below
/// control_fraction. Every frame gets an independent uniform cipher.
std::vector<Frame> plan_session(const SessionConfig& config, RandomStream& rng);

/// PLUS -> |B_cipher>, MINUS -> |C_cipher>.
StateVector encode_frame(const Frame& frame, const BasisPair& bases);

/// Bob's detection: fair coin between the B and C bases, then a projective
/// measurement in the chosen one.
Outcome bob_measure(std::uint32_t position, const StateVector& state, const BasisPair& bases,
                    RandomStream& rng);

/// Detection including the loss lottery (one uniform draw per photon, always
/// consumed so transcripts stay seed-stable across loss settings).
Outcome receive_photon(std::uint32_t position, const StateVector& state, const BasisPair& bases,
                       double loss_probability, RandomStream& rng);

/// Same-basis outcomes decode by index match (B: match -> PLUS), cross-basis
/// by mismatch. Throws std::invalid_argument on a lost outcome.
BitValue decode_bit(const Outcome& outcome, int cipher);

/// True iff Bob's outcome has nonzero analytic probability for the control
/// frame's prepared state (Table entry > 1e-12). Throws on non-control
/// frames and lost outcomes.
bool verify_control(const Frame& frame, const Outcome& outcome, const ProbabilityTable& table);

/// Full session: plan, encode, intercept, loss lottery, measurement, control
/// reveal, verification, verdict, and (on PASS) key announcement + decoding.
Transcript run_session(const SessionConfig& config, const EveStrategy& eve);

/// True iff every surviving message-frame outcome decodes to the transmitted
/// bit (uses the true ciphers from the transcript's frames).
bool decoded_matches_sent(const Transcript& transcript);

/// Message bits, MSB-first within each byte.
std::vector<BitValue> message_to_bits(const std::vector<std::uint8_t>& message);

/// Packs bits MSB-first; a trailing partial byte is zero-padded.
std::vector<std::uint8_t> bits_to_message(const std::vector<BitValue>& bits);

// --- session config files -------------------------------------------------
//
// UTF-8 `key = value` lines, `#` comments. Keys: scheme (optimal | simple |
// "a1,a2,a3"), a1/a2/a3 (explicit triple), message_hex, control_fraction,
// abort_threshold, loss_probability, seed. Unknown keys are preserved in
// `extras` for the caller (the CLI reads `eve` from there).

struct ParsedConfig {
    SessionConfig session;
    std::map<std::string, std::string> extras;
    bool seed_present = false;
};

ParsedConfig parse_session_config(std::istream& in);
ParsedConfig load_session_config(const std::string& path);

std::vector<std::uint8_t> parse_hex(const std::string& text);
std::string to_hex(const std::vector<std::uint8_t>& bytes);

} // namespace detcomm

#endif
