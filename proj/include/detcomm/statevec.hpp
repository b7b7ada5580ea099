#ifndef DETCOMM_STATEVEC_HPP
#define DETCOMM_STATEVEC_HPP

#include <array>
#include <complex>
#include <cstdint>

namespace detcomm {

using Complex = std::complex<double>;

// Tolerances used throughout: 4-dim problems are numerically benign, so
// orthonormality/unitarity is held to 1e-12 and probability sums to 1e-10.
inline constexpr double kUnitaryTol = 1e-12;
inline constexpr double kProbSumTol = 1e-10;

/// Seeded deterministic generator. Splittable: `split()` derives an
/// independent child stream, so parallel consumers stay reproducible.
/// Instances are single-owner sequential objects, never shared.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform();

    /// Uniform integer in [0, bound). Unbiased; bound must be >= 1.
    std::uint32_t uniform_int(std::uint32_t bound);

    /// Standard normal via Box-Muller.
    double gaussian();

    /// Child stream seeded from this stream's state. Advances this stream.
    RandomStream split();

private:
    std::uint64_t state_;

    std::uint64_t next_u64();
};

/// Normalized 4-component complex amplitude vector: the single-photon
/// two-qubit state. Component order follows the physical basis labeling,
/// slots (|Rv>, |Lv>, |Lh>, |Rh>).
struct StateVector {
    std::array<Complex, 4> amps{};

    static StateVector unit(int i);

    bool operator==(const StateVector&) const = default;

    double norm_sq() const;
    double norm() const;
    bool is_finite() const;
    bool is_normalized(double tol = kUnitaryTol) const;

    /// Scales to unit norm. Throws std::invalid_argument if norm < 1e-8.
    StateVector normalized() const;

    StateVector operator+(const StateVector& o) const;
    StateVector operator-(const StateVector& o) const;
    StateVector operator*(Complex s) const;
};

/// Hermitian inner product <a|b>, conjugate-linear in a.
Complex inner(const StateVector& a, const StateVector& b);

/// |<outcome|state>|^2, clamped to [0, 1].
double born_probability(const StateVector& state, const StateVector& outcome);

/// Dense 4x4 complex matrix, row-major.
struct Operator {
    std::array<Complex, 16> entries{};

    static Operator identity();
    static Operator zero();
    /// |ket><bra|
    static Operator outer(const StateVector& ket, const StateVector& bra);

    Complex& at(int r, int c) { return entries[static_cast<std::size_t>(4 * r + c)]; }
    const Complex& at(int r, int c) const { return entries[static_cast<std::size_t>(4 * r + c)]; }

    Operator adjoint() const;
    Operator operator*(const Operator& o) const;
    Operator operator+(const Operator& o) const;
    Operator operator-(const Operator& o) const;
    Operator scaled(Complex s) const;
    StateVector apply(const StateVector& v) const;

    /// <v|M|v>, real part (intended for Hermitian M).
    double expectation(const StateVector& v) const;

    double max_abs() const;
    bool is_finite() const;
    bool is_hermitian(double tol = kUnitaryTol) const;
    bool is_unitary(double tol = kUnitaryTol) const;
    bool is_idempotent(double tol = kUnitaryTol) const;
};

double max_abs_diff(const Operator& a, const Operator& b);

struct OrthonormalBasis {
    std::array<StateVector, 4> states{};

    const StateVector& operator[](int i) const { return states[static_cast<std::size_t>(i)]; }
    bool is_orthonormal(double tol = kUnitaryTol) const;

    /// Sum_k |k><k| (resolves to the identity for any orthonormal basis).
    Operator completeness_sum() const;
};

struct MeasureResult {
    int index;
    StateVector collapsed;
};

/// Projective measurement of `state` in `basis`. Outcome k is sampled by
/// inverse-CDF over the four Born probabilities in index order (clamped and
/// renormalized first); the collapsed state is the selected basis state.
MeasureResult measure(const StateVector& state, const OrthonormalBasis& basis, RandomStream& rng);

struct ProjectResult {
    bool outcome;
    StateVector collapsed;
    double prob; // <state|P|state>, the probability of the true outcome
};

/// Binary projective (QND-style) measurement. `projector` must be Hermitian
/// and idempotent within 1e-12, otherwise std::invalid_argument. Outcome true
/// with probability <state|P|state>; collapsed is the normalized projection
/// onto the selected branch. Eigenstates pass through unchanged.
ProjectResult project(const StateVector& state, const Operator& projector, RandomStream& rng);

/// Haar-distributed basis: Ginibre draw (independent complex Gaussians),
/// Gram-Schmidt over columns in order. Retries on near-degenerate draws.
OrthonormalBasis random_orthonormal_basis(RandomStream& rng);

/// Haar-distributed normalized state.
StateVector random_state(RandomStream& rng);

} // namespace detcomm

#endif
