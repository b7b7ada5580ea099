#ifndef DETCOMM_TRANSPORT_HPP
#define DETCOMM_TRANSPORT_HPP

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "detcomm/protocol.hpp"

namespace detcomm {

// Framed wire protocol: magic 0x51 0x43, version 0x01, type byte, u32-LE
// payload length, payload. All multi-byte fields little-endian.
inline constexpr std::uint8_t kWireMagic0 = 0x51;
inline constexpr std::uint8_t kWireMagic1 = 0x43;
inline constexpr std::uint8_t kWireVersion = 0x01;
inline constexpr std::size_t kWireHeaderSize = 8;

enum class FrameType : std::uint8_t {
    PHOTON = 0x01,
    CONTROL_POSITIONS = 0x02,
    OUTCOME_REPORT = 0x03,
    ERROR_VERDICT = 0x04,
    KEY_ANNOUNCE = 0x05,
    ABORT = 0x06,
};

enum class CodecErrorKind : std::uint8_t {
    BadMagic,
    BadVersion,
    Truncated,
    UnknownType,
    DenormalizedState,
};

class CodecError : public std::runtime_error {
public:
    CodecError(CodecErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    CodecErrorKind kind() const { return kind_; }

private:
    CodecErrorKind kind_;
};

struct WireFrame {
    FrameType type = FrameType::ABORT;
    std::vector<std::uint8_t> payload;

    bool operator==(const WireFrame&) const = default;
};

/// Serializes one frame (header + payload).
std::vector<std::uint8_t> encode_frame(FrameType type, const std::vector<std::uint8_t>& payload);

/// Parses exactly one frame; the buffer must contain it in full with no
/// trailing bytes. Throws CodecError with the matching kind on malformed
/// input. Photon payloads are additionally checked for normalization.
WireFrame decode_frame(const std::vector<std::uint8_t>& bytes);

// --- typed payloads ---------------------------------------------------------

struct PhotonPayload {
    std::uint32_t position = 0;
    StateVector state;

    bool operator==(const PhotonPayload&) const = default;
};

/// position u32 + 8 float64 (re, im per amplitude, physical basis order).
std::vector<std::uint8_t> encode_photon_payload(const PhotonPayload& photon);
/// Throws CodecError(Truncated) on size mismatch, (DenormalizedState) when
/// the decoded vector's norm is off unity by more than 1e-9.
PhotonPayload decode_photon_payload(const std::vector<std::uint8_t>& payload);

std::vector<std::uint8_t> encode_control_positions(const std::vector<std::uint32_t>& positions);
std::vector<std::uint32_t> decode_control_positions(const std::vector<std::uint8_t>& payload);

/// Entries are reported in the order of the CONTROL_POSITIONS request.
struct OutcomeEntry {
    std::uint8_t basis_choice = 0; // 0 = B, 1 = C
    std::uint8_t index = 0;
    std::uint8_t lost = 0;

    bool operator==(const OutcomeEntry&) const = default;
};

std::vector<std::uint8_t> encode_outcome_report(const std::vector<OutcomeEntry>& entries);
std::vector<OutcomeEntry> decode_outcome_report(const std::vector<std::uint8_t>& payload);

std::vector<std::uint8_t> encode_error_verdict(double error_rate, Verdict verdict);
std::pair<double, Verdict> decode_error_verdict(const std::vector<std::uint8_t>& payload);

/// One cipher byte (0..3) per position. Decode rejects out-of-range bytes
/// with std::invalid_argument (semantic check above the frame layer).
std::vector<std::uint8_t> encode_key_announce(const std::vector<int>& ciphers);
std::vector<int> decode_key_announce(const std::vector<std::uint8_t>& payload);

// --- byte channels ----------------------------------------------------------

/// Ordered reliable unidirectional in-memory byte stream. Reads block until
/// data arrives or the writer closes.
class Pipe {
public:
    void write(const std::uint8_t* data, std::size_t n);
    void close();
    /// Blocks for at least one byte; returns 0 only on clean EOF.
    std::size_t read(std::uint8_t* data, std::size_t n);

private:
    std::mutex mutex_;
    std::condition_variable ready_;
    std::deque<std::uint8_t> buffer_;
    bool closed_ = false;
};

/// One endpoint of a duplex byte channel.
struct ChannelEnd {
    std::shared_ptr<Pipe> in;
    std::shared_ptr<Pipe> out;

    void close_write() const { out->close(); }
};

/// Connected endpoint pair.
std::pair<ChannelEnd, ChannelEnd> make_channel();

void write_frame(const ChannelEnd& channel, FrameType type,
                 const std::vector<std::uint8_t>& payload);

/// Reads one frame; nullopt on clean EOF at a frame boundary, CodecError
/// (Truncated) on EOF mid-frame.
std::optional<WireFrame> read_frame(const ChannelEnd& channel);

// --- session endpoints and the interception proxy ---------------------------

struct ProxyLog {
    std::vector<EveRecord> records;
    std::size_t photon_frames = 0;
    std::size_t classical_frames = 0;
};

/// Man-in-the-middle pump between the Alice-side and Bob-side channels.
/// PHOTON frames pass through the strategy and are re-encoded; classical
/// frames are relayed verbatim in both directions and counted (read-only).
/// Runs until both directions reach EOF.
ProxyLog eve_proxy(const ChannelEnd& upstream, const ChannelEnd& downstream,
                   const EveStrategy& strategy, RandomStream& rng);

struct AliceSessionResult {
    std::vector<Frame> frames;
    ErrorReport error_report;
    std::optional<std::vector<int>> announced_key;
};

/// Alice's side of a wire session: plan, send photons, reveal control
/// positions, verify the reported outcomes, send verdict and (on PASS) the
/// key.
AliceSessionResult alice_endpoint(const ChannelEnd& channel, const SessionConfig& config,
                                  RandomStream& alice_rng);

struct BobSessionResult {
    std::vector<Outcome> outcomes;
    std::optional<std::vector<std::uint8_t>> decoded_message;
};

/// Bob's side: detect photons (with the loss lottery), report the requested
/// control outcomes, and decode the message if the key is announced.
BobSessionResult bob_endpoint(const ChannelEnd& channel, const BasisPair& bases,
                              double loss_probability, RandomStream& bob_rng);

/// Full session over in-memory byte streams with the proxy in the middle.
/// Produces a Transcript bit-identical to run_session for the same config
/// and strategy.
Transcript run_session_wire(const SessionConfig& config, const EveStrategy& eve);

} // namespace detcomm

#endif
