#include "detcomm/transport.hpp"

#include <bit>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

namespace detcomm {

namespace {

constexpr double kWireNormTol = 1e-9;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xff));
    }
}

double get_f64(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

bool known_frame_type(std::uint8_t t) {
    return t >= 0x01 && t <= 0x06;
}

} // namespace

std::vector<std::uint8_t> encode_frame(FrameType type, const std::vector<std::uint8_t>& payload) {
    std::vector<std::uint8_t> out;
    out.reserve(kWireHeaderSize + payload.size());
    out.push_back(kWireMagic0);
    out.push_back(kWireMagic1);
    out.push_back(kWireVersion);
    out.push_back(static_cast<std::uint8_t>(type));
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

WireFrame decode_frame(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < kWireHeaderSize) {
        throw CodecError(CodecErrorKind::Truncated, "frame shorter than header");
    }
    if (bytes[0] != kWireMagic0 || bytes[1] != kWireMagic1) {
        throw CodecError(CodecErrorKind::BadMagic, "bad magic bytes");
    }
    if (bytes[2] != kWireVersion) {
        throw CodecError(CodecErrorKind::BadVersion, "unsupported version");
    }
    if (!known_frame_type(bytes[3])) {
        throw CodecError(CodecErrorKind::UnknownType, "unknown frame type");
    }
    const std::uint32_t len = get_u32(bytes.data() + 4);
    if (bytes.size() < kWireHeaderSize + len) {
        throw CodecError(CodecErrorKind::Truncated, "payload shorter than declared length");
    }
    if (bytes.size() > kWireHeaderSize + len) {
        throw CodecError(CodecErrorKind::Truncated, "trailing bytes after frame");
    }

    WireFrame frame;
    frame.type = static_cast<FrameType>(bytes[3]);
    frame.payload.assign(bytes.begin() + kWireHeaderSize, bytes.end());
    if (frame.type == FrameType::PHOTON) {
        decode_photon_payload(frame.payload); // validates size and normalization
    }
    return frame;
}

std::vector<std::uint8_t> encode_photon_payload(const PhotonPayload& photon) {
    std::vector<std::uint8_t> out;
    out.reserve(4 + 64);
    put_u32(out, photon.position);
    for (const Complex& a : photon.state.amps) {
        put_f64(out, a.real());
        put_f64(out, a.imag());
    }
    return out;
}

PhotonPayload decode_photon_payload(const std::vector<std::uint8_t>& payload) {
    if (payload.size() != 4 + 64) {
        throw CodecError(CodecErrorKind::Truncated, "photon payload must be 68 bytes");
    }
    PhotonPayload photon;
    photon.position = get_u32(payload.data());
    for (std::size_t i = 0; i < 4; ++i) {
        const double re = get_f64(payload.data() + 4 + 16 * i);
        const double im = get_f64(payload.data() + 4 + 16 * i + 8);
        photon.state.amps[i] = Complex(re, im);
    }
    if (!photon.state.is_finite() ||
        std::abs(photon.state.norm_sq() - 1.0) > kWireNormTol) {
        throw CodecError(CodecErrorKind::DenormalizedState,
                         "photon amplitudes are not normalized");
    }
    return photon;
}

std::vector<std::uint8_t> encode_control_positions(const std::vector<std::uint32_t>& positions) {
    std::vector<std::uint8_t> out;
    out.reserve(4 + 4 * positions.size());
    put_u32(out, static_cast<std::uint32_t>(positions.size()));
    for (const std::uint32_t p : positions) {
        put_u32(out, p);
    }
    return out;
}

std::vector<std::uint32_t> decode_control_positions(const std::vector<std::uint8_t>& payload) {
    if (payload.size() < 4) {
        throw CodecError(CodecErrorKind::Truncated, "control positions payload too short");
    }
    const std::uint32_t count = get_u32(payload.data());
    if (payload.size() != 4 + 4 * static_cast<std::size_t>(count)) {
        throw CodecError(CodecErrorKind::Truncated, "control positions count mismatch");
    }
    std::vector<std::uint32_t> positions;
    positions.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        positions.push_back(get_u32(payload.data() + 4 + 4 * i));
    }
    return positions;
}

std::vector<std::uint8_t> encode_outcome_report(const std::vector<OutcomeEntry>& entries) {
    std::vector<std::uint8_t> out;
    out.reserve(3 * entries.size());
    for (const OutcomeEntry& e : entries) {
        out.push_back(e.basis_choice);
        out.push_back(e.index);
        out.push_back(e.lost);
    }
    return out;
}

std::vector<OutcomeEntry> decode_outcome_report(const std::vector<std::uint8_t>& payload) {
    if (payload.size() % 3 != 0) {
        throw CodecError(CodecErrorKind::Truncated, "outcome report not a multiple of 3 bytes");
    }
    std::vector<OutcomeEntry> entries;
    entries.reserve(payload.size() / 3);
    for (std::size_t i = 0; i < payload.size(); i += 3) {
        entries.push_back(OutcomeEntry{payload[i], payload[i + 1], payload[i + 2]});
    }
    return entries;
}

std::vector<std::uint8_t> encode_error_verdict(double error_rate, Verdict verdict) {
    std::vector<std::uint8_t> out;
    put_f64(out, error_rate);
    out.push_back(static_cast<std::uint8_t>(verdict));
    return out;
}

std::pair<double, Verdict> decode_error_verdict(const std::vector<std::uint8_t>& payload) {
    if (payload.size() != 9) {
        throw CodecError(CodecErrorKind::Truncated, "error verdict payload must be 9 bytes");
    }
    const double rate = get_f64(payload.data());
    if (payload[8] > 1) {
        throw std::invalid_argument("error verdict: bad verdict byte");
    }
    return {rate, static_cast<Verdict>(payload[8])};
}

std::vector<std::uint8_t> encode_key_announce(const std::vector<int>& ciphers) {
    std::vector<std::uint8_t> out;
    out.reserve(ciphers.size());
    for (const int c : ciphers) {
        if (c < 0 || c > 3) {
            throw std::invalid_argument("key announce: cipher out of range");
        }
        out.push_back(static_cast<std::uint8_t>(c));
    }
    return out;
}

std::vector<int> decode_key_announce(const std::vector<std::uint8_t>& payload) {
    std::vector<int> ciphers;
    ciphers.reserve(payload.size());
    for (const std::uint8_t b : payload) {
        if (b > 3) {
            throw std::invalid_argument("key announce: cipher out of range");
        }
        ciphers.push_back(b);
    }
    return ciphers;
}

void Pipe::write(const std::uint8_t* data, std::size_t n) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (closed_) {
        throw std::logic_error("Pipe: write after close");
    }
    buffer_.insert(buffer_.end(), data, data + n);
    ready_.notify_all();
}

void Pipe::close() {
    std::lock_guard<std::mutex> lock(mutex_);
    closed_ = true;
    ready_.notify_all();
}

std::size_t Pipe::read(std::uint8_t* data, std::size_t n) {
    std::unique_lock<std::mutex> lock(mutex_);
    ready_.wait(lock, [this] { return !buffer_.empty() || closed_; });
    if (buffer_.empty()) {
        return 0; // EOF
    }
    const std::size_t take = std::min(n, buffer_.size());
    for (std::size_t i = 0; i < take; ++i) {
        data[i] = buffer_.front();
        buffer_.pop_front();
    }
    return take;
}

std::pair<ChannelEnd, ChannelEnd> make_channel() {
    auto forward = std::make_shared<Pipe>();
    auto backward = std::make_shared<Pipe>();
    return {ChannelEnd{backward, forward}, ChannelEnd{forward, backward}};
}

namespace {

/// Reads exactly n bytes; false on clean EOF before the first byte, throws
/// Truncated on EOF mid-read.
bool read_exact(const ChannelEnd& channel, std::uint8_t* data, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
        const std::size_t r = channel.in->read(data + got, n - got);
        if (r == 0) {
            if (got == 0) {
                return false;
            }
            throw CodecError(CodecErrorKind::Truncated, "stream ended mid-frame");
        }
        got += r;
    }
    return true;
}

} // namespace

void write_frame(const ChannelEnd& channel, FrameType type,
                 const std::vector<std::uint8_t>& payload) {
    const std::vector<std::uint8_t> bytes = encode_frame(type, payload);
    channel.out->write(bytes.data(), bytes.size());
}

std::optional<WireFrame> read_frame(const ChannelEnd& channel) {
    std::uint8_t header[kWireHeaderSize];
    if (!read_exact(channel, header, kWireHeaderSize)) {
        return std::nullopt;
    }
    if (header[0] != kWireMagic0 || header[1] != kWireMagic1) {
        throw CodecError(CodecErrorKind::BadMagic, "bad magic bytes");
    }
    if (header[2] != kWireVersion) {
        throw CodecError(CodecErrorKind::BadVersion, "unsupported version");
    }
    if (!known_frame_type(header[3])) {
        throw CodecError(CodecErrorKind::UnknownType, "unknown frame type");
    }
    const std::uint32_t len = get_u32(header + 4);
    WireFrame frame;
    frame.type = static_cast<FrameType>(header[3]);
    frame.payload.resize(len);
    if (len > 0 && !read_exact(channel, frame.payload.data(), len)) {
        throw CodecError(CodecErrorKind::Truncated, "stream ended mid-frame");
    }
    return frame;
}

ProxyLog eve_proxy(const ChannelEnd& upstream, const ChannelEnd& downstream,
                   const EveStrategy& strategy, RandomStream& rng) {
    ProxyLog log;
    std::exception_ptr pump_error;

    // Bob-to-Alice direction carries only classical frames; relay verbatim.
    std::thread backward([&] {
        try {
            while (auto frame = read_frame(downstream)) {
                write_frame(upstream, frame->type, frame->payload);
            }
            upstream.close_write();
        } catch (...) {
            pump_error = std::current_exception();
            upstream.close_write();
        }
    });

    try {
        while (auto frame = read_frame(upstream)) {
            if (frame->type == FrameType::PHOTON) {
                ++log.photon_frames;
                const PhotonPayload photon = decode_photon_payload(frame->payload);
                InterceptResult intercepted =
                    eve_intercept(photon.position, photon.state, strategy, rng);
                if (intercepted.record) {
                    log.records.push_back(*intercepted.record);
                }
                write_frame(downstream, FrameType::PHOTON,
                            encode_photon_payload(
                                PhotonPayload{photon.position, intercepted.forwarded}));
            } else {
                ++log.classical_frames;
                write_frame(downstream, frame->type, frame->payload);
            }
        }
        downstream.close_write();
    } catch (...) {
        downstream.close_write();
        backward.join();
        throw;
    }

    backward.join();
    if (pump_error) {
        std::rethrow_exception(pump_error);
    }
    return log;
}

AliceSessionResult alice_endpoint(const ChannelEnd& channel, const SessionConfig& config,
                                  RandomStream& alice_rng) {
    config.validate();
    const BasisPair bases = build_bases(config.scheme);
    const ProbabilityTable table = probability_table(bases);

    AliceSessionResult result;
    result.frames = plan_session(config, alice_rng);

    for (const Frame& frame : result.frames) {
        const StateVector photon = encode_frame(frame, bases);
        write_frame(channel, FrameType::PHOTON,
                    encode_photon_payload(PhotonPayload{frame.position, photon}));
    }

    std::vector<std::uint32_t> control_positions;
    std::vector<const Frame*> control_frames;
    for (const Frame& frame : result.frames) {
        if (frame.is_control) {
            control_positions.push_back(frame.position);
            control_frames.push_back(&frame);
        }
    }
    write_frame(channel, FrameType::CONTROL_POSITIONS,
                encode_control_positions(control_positions));

    const std::optional<WireFrame> reply = read_frame(channel);
    if (!reply || reply->type != FrameType::OUTCOME_REPORT) {
        throw std::runtime_error("alice: expected outcome report");
    }
    const std::vector<OutcomeEntry> entries = decode_outcome_report(reply->payload);
    if (entries.size() != control_frames.size()) {
        throw std::runtime_error("alice: outcome report size mismatch");
    }

    std::size_t total = 0;
    std::size_t errors = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].lost != 0) {
            continue;
        }
        Outcome outcome;
        outcome.position = control_frames[i]->position;
        outcome.basis_choice = entries[i].basis_choice == 0 ? BasisChoice::B : BasisChoice::C;
        outcome.index = entries[i].index;
        outcome.lost = false;
        ++total;
        if (!verify_control(*control_frames[i], outcome, table)) {
            ++errors;
        }
    }

    result.error_report.control_total = total;
    result.error_report.control_errors = errors;
    result.error_report.error_rate =
        (total == 0) ? 0.0 : static_cast<double>(errors) / static_cast<double>(total);
    result.error_report.verdict =
        (result.error_report.error_rate > config.effective_abort_threshold()) ? Verdict::ABORT
                                                                              : Verdict::PASS;

    write_frame(channel, FrameType::ERROR_VERDICT,
                encode_error_verdict(result.error_report.error_rate,
                                     result.error_report.verdict));

    if (result.error_report.verdict == Verdict::PASS) {
        std::vector<int> key;
        key.reserve(result.frames.size());
        for (const Frame& frame : result.frames) {
            key.push_back(frame.cipher);
        }
        write_frame(channel, FrameType::KEY_ANNOUNCE, encode_key_announce(key));
        result.announced_key = std::move(key);
    } else {
        write_frame(channel, FrameType::ABORT, {});
    }
    channel.close_write();
    return result;
}

BobSessionResult bob_endpoint(const ChannelEnd& channel, const BasisPair& bases,
                              double loss_probability, RandomStream& bob_rng) {
    BobSessionResult result;
    std::set<std::uint32_t> control_positions;
    bool verdict_pass = false;
    bool done = false;

    while (!done) {
        const std::optional<WireFrame> frame = read_frame(channel);
        if (!frame) {
            break;
        }
        switch (frame->type) {
            case FrameType::PHOTON: {
                const PhotonPayload photon = decode_photon_payload(frame->payload);
                if (photon.position != result.outcomes.size()) {
                    throw std::runtime_error("bob: photon positions must be contiguous");
                }
                result.outcomes.push_back(receive_photon(photon.position, photon.state, bases,
                                                         loss_probability, bob_rng));
                break;
            }
            case FrameType::CONTROL_POSITIONS: {
                const std::vector<std::uint32_t> positions =
                    decode_control_positions(frame->payload);
                std::vector<OutcomeEntry> entries;
                entries.reserve(positions.size());
                for (const std::uint32_t p : positions) {
                    if (p >= result.outcomes.size()) {
                        throw std::runtime_error("bob: control position out of range");
                    }
                    const Outcome& o = result.outcomes[p];
                    entries.push_back(OutcomeEntry{
                        static_cast<std::uint8_t>(o.basis_choice == BasisChoice::B ? 0 : 1),
                        static_cast<std::uint8_t>(o.index),
                        static_cast<std::uint8_t>(o.lost ? 1 : 0)});
                    control_positions.insert(p);
                }
                write_frame(channel, FrameType::OUTCOME_REPORT, encode_outcome_report(entries));
                break;
            }
            case FrameType::ERROR_VERDICT: {
                verdict_pass = decode_error_verdict(frame->payload).second == Verdict::PASS;
                break;
            }
            case FrameType::KEY_ANNOUNCE: {
                if (!verdict_pass) {
                    throw std::runtime_error("bob: key announced without a PASS verdict");
                }
                const std::vector<int> key = decode_key_announce(frame->payload);
                if (key.size() != result.outcomes.size()) {
                    throw std::runtime_error("bob: key length mismatch");
                }
                std::vector<BitValue> bits;
                for (std::size_t p = 0; p < key.size(); ++p) {
                    if (control_positions.count(static_cast<std::uint32_t>(p)) > 0 ||
                        result.outcomes[p].lost) {
                        continue;
                    }
                    bits.push_back(decode_bit(result.outcomes[p], key[p]));
                }
                result.decoded_message = bits_to_message(bits);
                done = true;
                break;
            }
            case FrameType::ABORT:
                done = true;
                break;
            case FrameType::OUTCOME_REPORT:
                throw std::runtime_error("bob: unexpected outcome report");
        }
    }
    channel.close_write();
    return result;
}

Transcript run_session_wire(const SessionConfig& config, const EveStrategy& eve) {
    config.validate();
    const BasisPair bases = build_bases(config.scheme);

    // Same split order as run_session: alice, eve, bob.
    RandomStream master(config.seed);
    RandomStream alice_rng = master.split();
    RandomStream eve_rng = master.split();
    RandomStream bob_rng = master.split();

    auto [alice_side, proxy_upstream] = make_channel();
    auto [proxy_downstream, bob_side] = make_channel();

    AliceSessionResult alice_result;
    BobSessionResult bob_result;
    ProxyLog proxy_log;
    std::exception_ptr alice_error;
    std::exception_ptr bob_error;

    std::thread alice_thread([&] {
        try {
            alice_result = alice_endpoint(alice_side, config, alice_rng);
        } catch (...) {
            alice_error = std::current_exception();
            alice_side.close_write();
        }
    });
    std::thread bob_thread([&] {
        try {
            bob_result = bob_endpoint(bob_side, bases, config.loss_probability, bob_rng);
        } catch (...) {
            bob_error = std::current_exception();
            bob_side.close_write();
        }
    });

    std::exception_ptr proxy_error;
    try {
        proxy_log = eve_proxy(proxy_upstream, proxy_downstream, eve, eve_rng);
    } catch (...) {
        proxy_error = std::current_exception();
        proxy_upstream.close_write();
        proxy_downstream.close_write();
    }

    alice_thread.join();
    bob_thread.join();
    // A proxy failure is the root cause of any endpoint failure it induced.
    if (proxy_error) {
        std::rethrow_exception(proxy_error);
    }
    if (alice_error) {
        std::rethrow_exception(alice_error);
    }
    if (bob_error) {
        std::rethrow_exception(bob_error);
    }

    Transcript transcript;
    transcript.frames = std::move(alice_result.frames);
    transcript.outcomes = std::move(bob_result.outcomes);
    transcript.eve_records = std::move(proxy_log.records);
    transcript.error_report = alice_result.error_report;
    transcript.announced_key = std::move(alice_result.announced_key);
    transcript.decoded_message = std::move(bob_result.decoded_message);
    return transcript;
}

} // namespace detcomm
