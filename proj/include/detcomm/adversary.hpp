#ifndef DETCOMM_ADVERSARY_HPP
#define DETCOMM_ADVERSARY_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "detcomm/scheme.hpp"
#include "detcomm/statevec.hpp"

namespace detcomm {

/// Eavesdropper model. NONE leaves photons untouched. INTERCEPT_RESEND
/// measures each photon in a fixed basis {|E_k>} and forwards either the
/// detected state (AS_DETECTED) or a fixed replacement per outcome (FIXED).
/// QND applies a binary projective measurement and forwards the collapsed
/// state.
struct EveStrategy {
    enum class Kind : std::uint8_t { NONE, INTERCEPT_RESEND, QND };
    enum class Forwarding : std::uint8_t { AS_DETECTED, FIXED };

    Kind kind = Kind::NONE;
    OrthonormalBasis measurement;                 // INTERCEPT_RESEND
    Forwarding forwarding = Forwarding::AS_DETECTED;
    std::array<StateVector, 4> fixed_states{};    // FIXED forwarding
    Operator projector;                           // QND

    static EveStrategy none();
    static EveStrategy intercept_resend(const OrthonormalBasis& measurement);
    static EveStrategy intercept_resend_fixed(const OrthonormalBasis& measurement,
                                              const std::array<StateVector, 4>& forwarded);
    /// Throws std::invalid_argument unless `projector` is Hermitian idempotent.
    static EveStrategy qnd(const Operator& projector);
};

/// One intercepted photon: what Eve observed and what she forwarded.
/// `observation` is the outcome index 0..3 for intercept-resend, or 0/1 for
/// the QND projector outcome.
struct EveRecord {
    std::uint32_t position = 0;
    std::uint8_t observation = 0;
    StateVector forwarded;

    bool operator==(const EveRecord&) const = default;
};

struct InterceptResult {
    StateVector forwarded;
    std::optional<EveRecord> record;
};

/// Applies the strategy to one in-flight photon.
InterceptResult eve_intercept(std::uint32_t position, const StateVector& state,
                              const EveStrategy& strategy, RandomStream& rng);

/// Exact closed-form control-bit error rate induced by the strategy,
/// averaged over Alice's 8 equiprobable states, Eve's outcome distribution,
/// and Bob's fair basis choice. 0 for NONE.
double analytic_error_rate(const EveStrategy& strategy, const BasisPair& bases);

/// Minimum intercept-resend error rate for the scheme:
/// (1/4)(1 - a1^4 - a2^4 - a3^4).
double error_bound(const SchemeParams& params);

/// The rate-minimizing (and information-maximizing) intercept-resend attack:
/// measure the B basis, forward as detected.
EveStrategy optimal_strategy(const BasisPair& bases);

enum class ForwardingMode : std::uint8_t { AS_DETECTED, RANDOM_FIXED };

/// Haar-random measurement basis; RANDOM_FIXED additionally draws four
/// independent random forwarded states.
EveStrategy random_strategy(RandomStream& rng, ForwardingMode mode);

struct RecoveryReport {
    std::vector<BitValue> recovered_bits;
    double correct_fraction = 0.0;
    double certain_fraction = 0.0; // fraction with a degenerate posterior
    std::size_t count = 0;
    std::size_t ties = 0; // ambiguous posteriors, resolved toward PLUS
};

/// Bayesian bit recovery once the key is public: for each position, the
/// posterior over {PLUS, MINUS} given Eve's recorded observation and the
/// announced cipher. `records`, `key`, and `bits_truth` must align
/// one-to-one (throws std::invalid_argument otherwise).
RecoveryReport post_key_recover(const std::vector<EveRecord>& records,
                                const std::vector<int>& key,
                                const std::vector<BitValue>& bits_truth,
                                const BasisPair& bases, const EveStrategy& strategy);

/// Total-variation distance between Eve's outcome distributions conditioned
/// on PLUS vs MINUS. Zero for every intercept-resend strategy: the two
/// ensembles are both maximally mixed. Requires an INTERCEPT_RESEND strategy.
double prekey_leakage(const EveStrategy& strategy, const BasisPair& bases);

struct SearchResult {
    double best_rate = 0.0;
    EveStrategy best;
};

/// Derivative-free falsification probe for the error-rate floor: random
/// measurement-basis restarts (plus the B and C bases themselves), each with
/// exact per-outcome forwarded-state minimization and a local random-rotation
/// descent over the measurement basis. Returns the lowest rate found.
SearchResult search_min_error_rate(const BasisPair& bases, int restarts, RandomStream& rng);

/// Parses a strategy spec: "none", "optimal", "qnd", "random:<seed>",
/// "random-fixed:<seed>". "qnd" requires the scheme to expose a backdoor
/// (some a_i = 0); throws std::invalid_argument otherwise.
EveStrategy strategy_from_spec(const std::string& spec, const BasisPair& bases);

} // namespace detcomm

#endif
