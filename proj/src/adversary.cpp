#include "detcomm/adversary.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace detcomm {

namespace {

constexpr double kBranchTol = 1e-15;
constexpr double kPosteriorTol = 1e-12;

/// Probability that Bob's decoded bit is wrong when he receives `forwarded`
/// for a frame Alice prepared as |n_bit>: he measures B or C with a fair
/// coin; same-basis errors are any index != n, cross-basis errors only the
/// index-n outcome.
double decode_error_probability(const StateVector& forwarded, const BasisPair& bases,
                                BitValue bit, int cipher) {
    const StateVector& same = bases.prepared(bit, cipher);
    const StateVector& other =
        bases.prepared(bit == BitValue::PLUS ? BitValue::MINUS : BitValue::PLUS, cipher);
    return 0.5 * (1.0 - born_probability(forwarded, same)) +
           0.5 * born_probability(forwarded, other);
}

} // namespace

EveStrategy EveStrategy::none() {
    return EveStrategy{};
}

EveStrategy EveStrategy::intercept_resend(const OrthonormalBasis& measurement) {
    EveStrategy s;
    s.kind = Kind::INTERCEPT_RESEND;
    s.measurement = measurement;
    s.forwarding = Forwarding::AS_DETECTED;
    return s;
}

EveStrategy EveStrategy::intercept_resend_fixed(const OrthonormalBasis& measurement,
                                                const std::array<StateVector, 4>& forwarded) {
    EveStrategy s;
    s.kind = Kind::INTERCEPT_RESEND;
    s.measurement = measurement;
    s.forwarding = Forwarding::FIXED;
    for (const StateVector& f : forwarded) {
        if (!f.is_normalized(1e-9)) {
            throw std::invalid_argument("EveStrategy: fixed forwarded states must be normalized");
        }
    }
    s.fixed_states = forwarded;
    return s;
}

EveStrategy EveStrategy::qnd(const Operator& projector) {
    if (!projector.is_hermitian() || !projector.is_idempotent()) {
        throw std::invalid_argument("EveStrategy: QND operator must be a Hermitian projector");
    }
    EveStrategy s;
    s.kind = Kind::QND;
    s.projector = projector;
    return s;
}

InterceptResult eve_intercept(std::uint32_t position, const StateVector& state,
                              const EveStrategy& strategy, RandomStream& rng) {
    switch (strategy.kind) {
        case EveStrategy::Kind::NONE:
            return InterceptResult{state, std::nullopt};
        case EveStrategy::Kind::INTERCEPT_RESEND: {
            const MeasureResult m = measure(state, strategy.measurement, rng);
            const StateVector forwarded =
                (strategy.forwarding == EveStrategy::Forwarding::AS_DETECTED)
                    ? m.collapsed
                    : strategy.fixed_states[static_cast<std::size_t>(m.index)];
            return InterceptResult{
                forwarded,
                EveRecord{position, static_cast<std::uint8_t>(m.index), forwarded}};
        }
        case EveStrategy::Kind::QND: {
            const ProjectResult p = project(state, strategy.projector, rng);
            return InterceptResult{
                p.collapsed,
                EveRecord{position, static_cast<std::uint8_t>(p.outcome ? 1 : 0), p.collapsed}};
        }
    }
    throw std::logic_error("eve_intercept: unreachable");
}

double analytic_error_rate(const EveStrategy& strategy, const BasisPair& bases) {
    switch (strategy.kind) {
        case EveStrategy::Kind::NONE:
            return 0.0;
        case EveStrategy::Kind::INTERCEPT_RESEND: {
            double total = 0.0;
            for (BitValue bit : {BitValue::PLUS, BitValue::MINUS}) {
                for (int n = 0; n < 4; ++n) {
                    const StateVector& prepared = bases.prepared(bit, n);
                    for (int k = 0; k < 4; ++k) {
                        const StateVector& ek = strategy.measurement[k];
                        const double weight = born_probability(prepared, ek);
                        if (weight == 0.0) {
                            continue;
                        }
                        const StateVector& forwarded =
                            (strategy.forwarding == EveStrategy::Forwarding::AS_DETECTED)
                                ? ek
                                : strategy.fixed_states[static_cast<std::size_t>(k)];
                        total += weight * decode_error_probability(forwarded, bases, bit, n);
                    }
                }
            }
            return total / 8.0;
        }
        case EveStrategy::Kind::QND: {
            const Operator& p = strategy.projector;
            double total = 0.0;
            for (BitValue bit : {BitValue::PLUS, BitValue::MINUS}) {
                for (int n = 0; n < 4; ++n) {
                    const StateVector& prepared = bases.prepared(bit, n);
                    const StateVector kept = p.apply(prepared);
                    const StateVector dropped = prepared - kept;
                    for (const StateVector& branch : {kept, dropped}) {
                        const double weight = branch.norm_sq();
                        if (weight <= kBranchTol) {
                            continue;
                        }
                        total += weight *
                                 decode_error_probability(branch.normalized(), bases, bit, n);
                    }
                }
            }
            return total / 8.0;
        }
    }
    throw std::logic_error("analytic_error_rate: unreachable");
}

double error_bound(const SchemeParams& params) {
    params.validate();
    const double quartic = std::pow(params.a1, 4) + std::pow(params.a2, 4) +
                           std::pow(params.a3, 4);
    return 0.25 * (1.0 - quartic);
}

EveStrategy optimal_strategy(const BasisPair& bases) {
    return EveStrategy::intercept_resend(bases.b);
}

EveStrategy random_strategy(RandomStream& rng, ForwardingMode mode) {
    const OrthonormalBasis measurement = random_orthonormal_basis(rng);
    if (mode == ForwardingMode::AS_DETECTED) {
        return EveStrategy::intercept_resend(measurement);
    }
    std::array<StateVector, 4> forwarded;
    for (StateVector& f : forwarded) {
        f = random_state(rng);
    }
    return EveStrategy::intercept_resend_fixed(measurement, forwarded);
}

namespace {

struct Likelihoods {
    double plus = 0.0;
    double minus = 0.0;
};

Likelihoods observation_likelihoods(std::uint8_t observation, int cipher,
                                    const BasisPair& bases, const EveStrategy& strategy) {
    Likelihoods l;
    switch (strategy.kind) {
        case EveStrategy::Kind::INTERCEPT_RESEND: {
            const StateVector& ek = strategy.measurement[observation];
            l.plus = born_probability(bases.prepared(BitValue::PLUS, cipher), ek);
            l.minus = born_probability(bases.prepared(BitValue::MINUS, cipher), ek);
            return l;
        }
        case EveStrategy::Kind::QND: {
            const double p_plus =
                strategy.projector.expectation(bases.prepared(BitValue::PLUS, cipher));
            const double p_minus =
                strategy.projector.expectation(bases.prepared(BitValue::MINUS, cipher));
            l.plus = observation ? p_plus : 1.0 - p_plus;
            l.minus = observation ? p_minus : 1.0 - p_minus;
            return l;
        }
        case EveStrategy::Kind::NONE:
            break;
    }
    throw std::invalid_argument("observation_likelihoods: strategy records nothing");
}

} // namespace

RecoveryReport post_key_recover(const std::vector<EveRecord>& records,
                                const std::vector<int>& key,
                                const std::vector<BitValue>& bits_truth,
                                const BasisPair& bases, const EveStrategy& strategy) {
    if (records.size() != key.size() || records.size() != bits_truth.size()) {
        throw std::invalid_argument("post_key_recover: records, key, and truth must align");
    }
    RecoveryReport report;
    report.count = records.size();
    if (records.empty()) {
        return report;
    }

    std::size_t correct = 0;
    std::size_t certain = 0;
    report.recovered_bits.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const Likelihoods l =
            observation_likelihoods(records[i].observation, key[i], bases, strategy);
        BitValue recovered;
        if (std::abs(l.plus - l.minus) <= kPosteriorTol) {
            recovered = BitValue::PLUS;
            ++report.ties;
        } else {
            recovered = (l.plus > l.minus) ? BitValue::PLUS : BitValue::MINUS;
        }
        if (std::min(l.plus, l.minus) <= kPosteriorTol) {
            ++certain;
        }
        if (recovered == bits_truth[i]) {
            ++correct;
        }
        report.recovered_bits.push_back(recovered);
    }
    report.correct_fraction = static_cast<double>(correct) / static_cast<double>(report.count);
    report.certain_fraction = static_cast<double>(certain) / static_cast<double>(report.count);
    return report;
}

double prekey_leakage(const EveStrategy& strategy, const BasisPair& bases) {
    if (strategy.kind != EveStrategy::Kind::INTERCEPT_RESEND) {
        throw std::invalid_argument("prekey_leakage: requires an intercept-resend strategy");
    }
    double tv = 0.0;
    for (int k = 0; k < 4; ++k) {
        const StateVector& ek = strategy.measurement[k];
        double p_plus = 0.0;
        double p_minus = 0.0;
        for (int n = 0; n < 4; ++n) {
            p_plus += born_probability(bases.prepared(BitValue::PLUS, n), ek);
            p_minus += born_probability(bases.prepared(BitValue::MINUS, n), ek);
        }
        tv += std::abs(p_plus - p_minus) / 4.0;
    }
    return 0.5 * tv;
}

namespace {

/// Error-rate contribution of outcome k as a quadratic form in the forwarded
/// state: rate = const(E) independent part + Sum_k <F_k|M_k|F_k>.
Operator forwarding_cost_matrix(const OrthonormalBasis& measurement, const BasisPair& bases,
                                int k) {
    Operator m;
    for (BitValue bit : {BitValue::PLUS, BitValue::MINUS}) {
        for (int n = 0; n < 4; ++n) {
            const double weight = born_probability(bases.prepared(bit, n), measurement[k]) / 8.0;
            if (weight == 0.0) {
                continue;
            }
            const StateVector& same = bases.prepared(bit, n);
            const StateVector& other = bases.prepared(
                bit == BitValue::PLUS ? BitValue::MINUS : BitValue::PLUS, n);
            // 1/2 (I - |same><same|) + 1/2 |other><other|
            Operator q = Operator::identity().scaled(Complex(0.5, 0.0)) -
                         Operator::outer(same, same).scaled(Complex(0.5, 0.0)) +
                         Operator::outer(other, other).scaled(Complex(0.5, 0.0));
            m = m + q.scaled(Complex(weight, 0.0));
        }
    }
    return m;
}

/// Unit vector minimizing <v|M|v> for Hermitian PSD M: power iteration on
/// the spectral complement trace(M) I - M.
StateVector min_expectation_state(const Operator& m, RandomStream& rng) {
    double trace = 0.0;
    for (int i = 0; i < 4; ++i) {
        trace += m.at(i, i).real();
    }
    const Operator shifted = Operator::identity().scaled(Complex(trace + 1.0, 0.0)) - m;

    StateVector v = random_state(rng);
    for (int it = 0; it < 200; ++it) {
        const StateVector w = shifted.apply(v);
        if (w.norm() < 1e-12) {
            break; // m is (numerically) a multiple of the identity
        }
        const StateVector next = w.normalized();
        if (std::abs(std::abs(inner(next, v)) - 1.0) < 1e-15 && it > 8) {
            v = next;
            break;
        }
        v = next;
    }
    return v;
}

double best_fixed_rate(const OrthonormalBasis& measurement, const BasisPair& bases,
                       RandomStream& rng, EveStrategy* out) {
    std::array<StateVector, 4> forwarded;
    for (int k = 0; k < 4; ++k) {
        const Operator m = forwarding_cost_matrix(measurement, bases, k);
        forwarded[static_cast<std::size_t>(k)] = min_expectation_state(m, rng);
    }
    const EveStrategy s = EveStrategy::intercept_resend_fixed(measurement, forwarded);
    const double rate = analytic_error_rate(s, bases);
    if (out != nullptr) {
        *out = s;
    }
    return rate;
}

/// Small random two-column rotation: stays unitary, explores the
/// neighborhood of the measurement basis.
OrthonormalBasis perturb_basis(const OrthonormalBasis& basis, double scale, RandomStream& rng) {
    OrthonormalBasis out = basis;
    const int i = static_cast<int>(rng.uniform_int(4));
    int j = static_cast<int>(rng.uniform_int(3));
    if (j >= i) {
        ++j;
    }
    const double theta = scale * rng.gaussian();
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    const Complex eip(std::cos(phase), std::sin(phase));
    const StateVector vi = out[i];
    const StateVector vj = out[j];
    out.states[static_cast<std::size_t>(i)] =
        vi * Complex(std::cos(theta), 0.0) + vj * (eip * std::sin(theta));
    out.states[static_cast<std::size_t>(j)] =
        vi * (-std::conj(eip) * std::sin(theta)) + vj * Complex(std::cos(theta), 0.0);
    return out;
}

} // namespace

SearchResult search_min_error_rate(const BasisPair& bases, int restarts, RandomStream& rng) {
    if (restarts < 1) {
        throw std::invalid_argument("search_min_error_rate: restarts must be >= 1");
    }
    SearchResult result;
    result.best_rate = 1.0;

    for (int r = 0; r < restarts; ++r) {
        // The first two restarts probe the legitimate bases themselves: the
        // B basis is the analytic optimum, so the local search starts there.
        OrthonormalBasis measurement;
        if (r == 0) {
            measurement = bases.b;
        } else if (r == 1) {
            measurement = bases.c;
        } else {
            measurement = random_orthonormal_basis(rng);
        }

        EveStrategy candidate;
        double rate = best_fixed_rate(measurement, bases, rng, &candidate);

        double scale = 0.3;
        int stale = 0;
        for (int step = 0; step < 48 && stale < 16; ++step) {
            const OrthonormalBasis trial = perturb_basis(measurement, scale, rng);
            EveStrategy trial_strategy;
            const double trial_rate = best_fixed_rate(trial, bases, rng, &trial_strategy);
            if (trial_rate < rate - 1e-15) {
                rate = trial_rate;
                measurement = trial;
                candidate = trial_strategy;
                stale = 0;
            } else {
                ++stale;
                scale *= 0.8;
            }
        }

        if (rate < result.best_rate) {
            result.best_rate = rate;
            result.best = candidate;
        }
    }
    return result;
}

EveStrategy strategy_from_spec(const std::string& spec, const BasisPair& bases) {
    if (spec == "none") {
        return EveStrategy::none();
    }
    if (spec == "optimal") {
        return optimal_strategy(bases);
    }
    if (spec == "qnd") {
        const std::optional<QndBackdoor> backdoor = qnd_vulnerability(bases.params);
        if (!backdoor) {
            throw std::invalid_argument(
                "strategy 'qnd': scheme has no QND backdoor (all a_i nonzero)");
        }
        return EveStrategy::qnd(backdoor->projector);
    }
    const auto parse_seeded = [&](const std::string& prefix,
                                  ForwardingMode mode) -> std::optional<EveStrategy> {
        if (spec.rfind(prefix, 0) != 0) {
            return std::nullopt;
        }
        const std::string seed_text = spec.substr(prefix.size());
        std::size_t used = 0;
        std::uint64_t seed = 0;
        try {
            seed = std::stoull(seed_text, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("strategy '" + spec + "': bad seed");
        }
        if (used != seed_text.size()) {
            throw std::invalid_argument("strategy '" + spec + "': bad seed");
        }
        RandomStream rng(seed);
        return random_strategy(rng, mode);
    };
    if (auto s = parse_seeded("random:", ForwardingMode::AS_DETECTED)) {
        return *s;
    }
    if (auto s = parse_seeded("random-fixed:", ForwardingMode::RANDOM_FIXED)) {
        return *s;
    }
    throw std::invalid_argument("unknown eve strategy: " + spec);
}

} // namespace detcomm
