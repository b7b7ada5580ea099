#ifndef DETCOMM_SCHEME_HPP
#define DETCOMM_SCHEME_HPP

#include <array>
#include <optional>

#include "detcomm/statevec.hpp"

namespace detcomm {

/// Logical bit carried by one photon. PLUS maps to binary 1, MINUS to 0.
enum class BitValue : std::uint8_t { MINUS = 0, PLUS = 1 };

/// Which of Bob's two measurement bases.
enum class BasisChoice : std::uint8_t { B = 0, C = 1 };

/// The (a1, a2, a3) triple defining the coding scheme. Constrained to the
/// unit sphere: a1^2 + a2^2 + a3^2 = 1 within 1e-12.
struct SchemeParams {
    double a1 = 0.0;
    double a2 = 0.0;
    double a3 = 0.0;

    /// Fully symmetric choice (1/sqrt3, 1/sqrt3, 1/sqrt3): maximizes the
    /// eavesdropper's minimum error rate.
    static SchemeParams optimal();
    /// (1/sqrt2, 1/sqrt2, 0): simplest to realize optically, weaker floor.
    static SchemeParams simple();

    double norm_sq() const { return a1 * a1 + a2 * a2 + a3 * a3; }
    bool is_valid(double tol = kUnitaryTol) const;

    /// Throws std::invalid_argument if the normalization constraint fails.
    void validate() const;

    /// True when any |a_i| is below `threshold` (near the QND-vulnerable
    /// boundary of parameter space).
    bool near_degenerate(double threshold = 1e-3) const;
};

/// Basis-rotation matrix A = i * M with M real antisymmetric; unitary,
/// Hermitian, zero diagonal.
Operator build_matrix_a(const SchemeParams& params);

/// The B and C measurement bases. B holds the physical product states
/// (|Rv>, |Lv>, |Lh>, |Rh>) as unit vectors; C = B * A.
struct BasisPair {
    OrthonormalBasis b;
    OrthonormalBasis c;
    SchemeParams params;

    const OrthonormalBasis& basis(BasisChoice which) const {
        return which == BasisChoice::B ? b : c;
    }
    /// State |n_bit>: the B state for PLUS, the C state for MINUS.
    const StateVector& prepared(BitValue bit, int cipher) const {
        return (bit == BitValue::PLUS ? b : c)[cipher];
    }
};

BasisPair build_bases(const SchemeParams& params);

/// Bob's outcome probabilities for each of Alice's 8 prepared states:
/// rows are (1_+..4_+, 1_-..4_-), columns (B_1..B_4, C_1..C_4).
struct ProbabilityTable {
    std::array<std::array<double, 8>, 8> p{};

    static int row(BitValue bit, int cipher) {
        return (bit == BitValue::PLUS ? 0 : 4) + cipher;
    }
    static int col(BasisChoice choice, int index) {
        return (choice == BasisChoice::B ? 0 : 4) + index;
    }
    double entry(BitValue bit, int cipher, BasisChoice choice, int index) const {
        return p[static_cast<std::size_t>(row(bit, cipher))]
                [static_cast<std::size_t>(col(choice, index))];
    }
};

ProbabilityTable probability_table(const BasisPair& bases);

/// (1/4) Sum_n |n_bit><n_bit|. Equals I/4 for both bit values: the
/// bit-conditioned photon ensembles are maximally mixed, so no pre-key
/// measurement can distinguish them.
Operator concealment_density(const BasisPair& bases, BitValue bit);

/// A nontrivial projective measurement that leaves every B_n and C_m an
/// undisturbed eigenstate: the silent-eavesdropping backdoor. Exists iff
/// some a_i vanishes.
struct QndBackdoor {
    std::array<int, 4> eigenvalue_pattern{}; // lambda_n over B_1..B_4, values 0/1
    Operator projector;                      // Sum_{n: lambda_n = 1} |B_n><B_n|
};

/// Searches the nontrivial eigenvalue patterns for one under which every
/// column of A has constant lambda on its support (entries with |A_nm| >
/// 1e-12). Patterns come in complement pairs describing the same physical
/// measurement, so the search returns the representative with lambda_1 = 1,
/// lowest binary value first.
std::optional<QndBackdoor> qnd_vulnerability(const SchemeParams& params);

// Physical state labels for the spatial (right/left fiber) and polarization
// (vertical/horizontal, symmetric/antisymmetric) degrees of freedom.
enum class Spatial : std::uint8_t { R = 0, L = 1 };
enum class Polarization : std::uint8_t { V, H, S, A };

/// |spatial, polarization> as a StateVector; S and A are the +/- polarization
/// superpositions (|v> +/- |h>)/sqrt2.
StateVector product_state(Spatial spatial, Polarization pol);

/// Projector onto span{|Rv>, |Rh>} -- the right-fiber subspace.
Operator projector_right();

} // namespace detcomm

#endif
