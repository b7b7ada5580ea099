#include "detcomm/scheme.hpp"

#include <cmath>
#include <stdexcept>

namespace detcomm {

namespace {

// Support threshold for the QND column test. Exact zeros in A arise only
// from exact-zero a_i; near-zero parameters are flagged separately via
// SchemeParams::near_degenerate.
constexpr double kSupportTol = 1e-12;

} // namespace

SchemeParams SchemeParams::optimal() {
    const double r = 1.0 / std::sqrt(3.0);
    return SchemeParams{r, r, r};
}

SchemeParams SchemeParams::simple() {
    const double r = 1.0 / std::sqrt(2.0);
    return SchemeParams{r, r, 0.0};
}

bool SchemeParams::is_valid(double tol) const {
    return std::isfinite(a1) && std::isfinite(a2) && std::isfinite(a3) &&
           std::abs(norm_sq() - 1.0) <= tol;
}

void SchemeParams::validate() const {
    if (!is_valid()) {
        throw std::invalid_argument("SchemeParams: a1^2 + a2^2 + a3^2 must equal 1");
    }
}

bool SchemeParams::near_degenerate(double threshold) const {
    return std::abs(a1) < threshold || std::abs(a2) < threshold || std::abs(a3) < threshold;
}

Operator build_matrix_a(const SchemeParams& params) {
    params.validate();
    const double m[4][4] = {
        {0.0, params.a1, params.a2, params.a3},
        {-params.a1, 0.0, params.a3, -params.a2},
        {-params.a2, -params.a3, 0.0, params.a1},
        {-params.a3, params.a2, -params.a1, 0.0},
    };
    Operator a;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            a.at(r, c) = Complex(0.0, m[r][c]);
        }
    }
    return a;
}

BasisPair build_bases(const SchemeParams& params) {
    const Operator a = build_matrix_a(params);
    BasisPair pair;
    pair.params = params;
    for (int n = 0; n < 4; ++n) {
        pair.b.states[static_cast<std::size_t>(n)] = StateVector::unit(n);
        // |C_n> = Sum_m |B_m> A_mn: with B_m the unit vectors, column n of A.
        StateVector cn;
        for (int m = 0; m < 4; ++m) {
            cn.amps[static_cast<std::size_t>(m)] = a.at(m, n);
        }
        pair.c.states[static_cast<std::size_t>(n)] = cn;
    }
    return pair;
}

ProbabilityTable probability_table(const BasisPair& bases) {
    ProbabilityTable table;
    for (BitValue bit : {BitValue::PLUS, BitValue::MINUS}) {
        for (int cipher = 0; cipher < 4; ++cipher) {
            const StateVector& prepared = bases.prepared(bit, cipher);
            for (BasisChoice choice : {BasisChoice::B, BasisChoice::C}) {
                for (int index = 0; index < 4; ++index) {
                    const double prob = born_probability(prepared, bases.basis(choice)[index]);
                    table.p[static_cast<std::size_t>(ProbabilityTable::row(bit, cipher))]
                           [static_cast<std::size_t>(ProbabilityTable::col(choice, index))] = prob;
                }
            }
        }
    }
    return table;
}

Operator concealment_density(const BasisPair& bases, BitValue bit) {
    const OrthonormalBasis& states = (bit == BitValue::PLUS) ? bases.b : bases.c;
    return states.completeness_sum().scaled(Complex(0.25, 0.0));
}

std::optional<QndBackdoor> qnd_vulnerability(const SchemeParams& params) {
    const Operator a = build_matrix_a(params);

    // A pattern qualifies iff lambda is constant on every column's support;
    // then P = Sum_{lambda=1} |B_n><B_n| keeps each C_m an eigenstate too.
    // lambda and its complement describe the same measurement, so only the
    // lambda_1 = 1 representatives need checking (7 of the 14 nontrivial
    // patterns), in increasing binary value.
    for (int value = 8; value <= 14; ++value) {
        std::array<int, 4> lambda{};
        for (int n = 0; n < 4; ++n) {
            lambda[static_cast<std::size_t>(n)] = (value >> (3 - n)) & 1;
        }

        bool qualifies = true;
        for (int col = 0; col < 4 && qualifies; ++col) {
            int seen = -1;
            for (int row = 0; row < 4; ++row) {
                if (std::abs(a.at(row, col)) <= kSupportTol) {
                    continue;
                }
                const int l = lambda[static_cast<std::size_t>(row)];
                if (seen < 0) {
                    seen = l;
                } else if (seen != l) {
                    qualifies = false;
                    break;
                }
            }
        }
        if (!qualifies) {
            continue;
        }

        QndBackdoor backdoor;
        backdoor.eigenvalue_pattern = lambda;
        Operator projector;
        for (int n = 0; n < 4; ++n) {
            if (lambda[static_cast<std::size_t>(n)] == 1) {
                projector.at(n, n) = Complex(1.0, 0.0);
            }
        }
        backdoor.projector = projector;
        return backdoor;
    }
    return std::nullopt;
}

StateVector product_state(Spatial spatial, Polarization pol) {
    // Storage slots follow the B-basis labeling: (|Rv>, |Lv>, |Lh>, |Rh>).
    const int v_slot = (spatial == Spatial::R) ? 0 : 1;
    const int h_slot = (spatial == Spatial::R) ? 3 : 2;
    const double r = 1.0 / std::sqrt(2.0);
    switch (pol) {
        case Polarization::V:
            return StateVector::unit(v_slot);
        case Polarization::H:
            return StateVector::unit(h_slot);
        case Polarization::S:
            return StateVector::unit(v_slot) * Complex(r, 0.0) +
                   StateVector::unit(h_slot) * Complex(r, 0.0);
        case Polarization::A:
            return StateVector::unit(v_slot) * Complex(r, 0.0) -
                   StateVector::unit(h_slot) * Complex(r, 0.0);
    }
    throw std::invalid_argument("product_state: bad polarization");
}

Operator projector_right() {
    Operator p;
    p.at(0, 0) = Complex(1.0, 0.0); // |Rv>
    p.at(3, 3) = Complex(1.0, 0.0); // |Rh>
    return p;
}

} // namespace detcomm
