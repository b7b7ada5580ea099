#include "detcomm/statevec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace detcomm {

namespace {

constexpr double kDegenerateNorm = 1e-8;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

RandomStream::RandomStream(std::uint64_t seed) : state_(splitmix64(seed)) {
    if (state_ == 0) {
        state_ = 0x7c0ffee123456789ULL;
    }
}

std::uint64_t RandomStream::next_u64() {
    // xorshift64* core; period 2^64 - 1, more than enough for desk-scale runs.
    std::uint64_t x = state_;
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    state_ = x;
    return x * 0x2545f4914f6cdd1dULL;
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint32_t RandomStream::uniform_int(std::uint32_t bound) {
    if (bound == 0) {
        throw std::invalid_argument("uniform_int: bound must be >= 1");
    }
    const std::uint64_t span = UINT64_MAX / bound;
    const std::uint64_t cap = span * bound;
    std::uint64_t x = next_u64();
    while (x >= cap) {
        x = next_u64();
    }
    return static_cast<std::uint32_t>(x / span);
}

double RandomStream::gaussian() {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RandomStream RandomStream::split() {
    return RandomStream(next_u64());
}

StateVector StateVector::unit(int i) {
    StateVector v;
    v.amps[static_cast<std::size_t>(i)] = Complex(1.0, 0.0);
    return v;
}

double StateVector::norm_sq() const {
    double s = 0.0;
    for (const Complex& a : amps) {
        s += std::norm(a);
    }
    return s;
}

double StateVector::norm() const {
    return std::sqrt(norm_sq());
}

bool StateVector::is_finite() const {
    for (const Complex& a : amps) {
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) {
            return false;
        }
    }
    return true;
}

bool StateVector::is_normalized(double tol) const {
    return is_finite() && std::abs(norm_sq() - 1.0) <= tol;
}

StateVector StateVector::normalized() const {
    const double n = norm();
    if (!(n > kDegenerateNorm)) {
        throw std::invalid_argument("normalized: vector norm too small");
    }
    StateVector out;
    for (std::size_t i = 0; i < 4; ++i) {
        out.amps[i] = amps[i] / n;
    }
    return out;
}

StateVector StateVector::operator+(const StateVector& o) const {
    StateVector out;
    for (std::size_t i = 0; i < 4; ++i) {
        out.amps[i] = amps[i] + o.amps[i];
    }
    return out;
}

StateVector StateVector::operator-(const StateVector& o) const {
    StateVector out;
    for (std::size_t i = 0; i < 4; ++i) {
        out.amps[i] = amps[i] - o.amps[i];
    }
    return out;
}

StateVector StateVector::operator*(Complex s) const {
    StateVector out;
    for (std::size_t i = 0; i < 4; ++i) {
        out.amps[i] = amps[i] * s;
    }
    return out;
}

Complex inner(const StateVector& a, const StateVector& b) {
    Complex s(0.0, 0.0);
    for (std::size_t i = 0; i < 4; ++i) {
        s += std::conj(a.amps[i]) * b.amps[i];
    }
    return s;
}

double born_probability(const StateVector& state, const StateVector& outcome) {
    return std::clamp(std::norm(inner(outcome, state)), 0.0, 1.0);
}

Operator Operator::identity() {
    Operator m;
    for (int i = 0; i < 4; ++i) {
        m.at(i, i) = Complex(1.0, 0.0);
    }
    return m;
}

Operator Operator::zero() {
    return Operator{};
}

Operator Operator::outer(const StateVector& ket, const StateVector& bra) {
    Operator m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            m.at(r, c) = ket.amps[static_cast<std::size_t>(r)] *
                         std::conj(bra.amps[static_cast<std::size_t>(c)]);
        }
    }
    return m;
}

Operator Operator::adjoint() const {
    Operator m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            m.at(r, c) = std::conj(at(c, r));
        }
    }
    return m;
}

Operator Operator::operator*(const Operator& o) const {
    Operator m;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            Complex s(0.0, 0.0);
            for (int k = 0; k < 4; ++k) {
                s += at(r, k) * o.at(k, c);
            }
            m.at(r, c) = s;
        }
    }
    return m;
}

Operator Operator::operator+(const Operator& o) const {
    Operator m;
    for (std::size_t i = 0; i < 16; ++i) {
        m.entries[i] = entries[i] + o.entries[i];
    }
    return m;
}

Operator Operator::operator-(const Operator& o) const {
    Operator m;
    for (std::size_t i = 0; i < 16; ++i) {
        m.entries[i] = entries[i] - o.entries[i];
    }
    return m;
}

Operator Operator::scaled(Complex s) const {
    Operator m;
    for (std::size_t i = 0; i < 16; ++i) {
        m.entries[i] = entries[i] * s;
    }
    return m;
}

StateVector Operator::apply(const StateVector& v) const {
    StateVector out;
    for (int r = 0; r < 4; ++r) {
        Complex s(0.0, 0.0);
        for (int c = 0; c < 4; ++c) {
            s += at(r, c) * v.amps[static_cast<std::size_t>(c)];
        }
        out.amps[static_cast<std::size_t>(r)] = s;
    }
    return out;
}

double Operator::expectation(const StateVector& v) const {
    return inner(v, apply(v)).real();
}

double Operator::max_abs() const {
    double m = 0.0;
    for (const Complex& e : entries) {
        m = std::max(m, std::abs(e));
    }
    return m;
}

bool Operator::is_finite() const {
    for (const Complex& e : entries) {
        if (!std::isfinite(e.real()) || !std::isfinite(e.imag())) {
            return false;
        }
    }
    return true;
}

bool Operator::is_hermitian(double tol) const {
    return is_finite() && max_abs_diff(*this, adjoint()) <= tol;
}

bool Operator::is_unitary(double tol) const {
    return is_finite() && max_abs_diff(*this * adjoint(), identity()) <= tol;
}

bool Operator::is_idempotent(double tol) const {
    return is_finite() && max_abs_diff(*this * *this, *this) <= tol;
}

double max_abs_diff(const Operator& a, const Operator& b) {
    return (a - b).max_abs();
}

bool OrthonormalBasis::is_orthonormal(double tol) const {
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            const Complex g = inner((*this)[i], (*this)[j]);
            const Complex expect = (i == j) ? Complex(1.0, 0.0) : Complex(0.0, 0.0);
            if (std::abs(g - expect) > tol) {
                return false;
            }
        }
    }
    return true;
}

Operator OrthonormalBasis::completeness_sum() const {
    Operator sum;
    for (int k = 0; k < 4; ++k) {
        sum = sum + Operator::outer((*this)[k], (*this)[k]);
    }
    return sum;
}

MeasureResult measure(const StateVector& state, const OrthonormalBasis& basis, RandomStream& rng) {
    std::array<double, 4> p{};
    double total = 0.0;
    for (int k = 0; k < 4; ++k) {
        p[static_cast<std::size_t>(k)] = born_probability(state, basis[k]);
        total += p[static_cast<std::size_t>(k)];
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("measure: state has no overlap with basis");
    }

    const double u = rng.uniform() * total;
    double cum = 0.0;
    int picked = -1;
    for (int k = 0; k < 4; ++k) {
        cum += p[static_cast<std::size_t>(k)];
        if (u < cum) {
            picked = k;
            break;
        }
    }
    if (picked < 0) {
        // Rounding pushed u past the last boundary; take the last outcome
        // that actually has weight.
        for (int k = 3; k >= 0; --k) {
            if (p[static_cast<std::size_t>(k)] > 0.0) {
                picked = k;
                break;
            }
        }
    }
    return MeasureResult{picked, basis[picked]};
}

ProjectResult project(const StateVector& state, const Operator& projector, RandomStream& rng) {
    if (!projector.is_hermitian() || !projector.is_idempotent()) {
        throw std::invalid_argument("project: operator is not a Hermitian idempotent projector");
    }
    const double prob = std::clamp(projector.expectation(state), 0.0, 1.0);
    bool outcome = rng.uniform() < prob;

    StateVector branch = outcome ? projector.apply(state)
                                 : state - projector.apply(state);
    if (branch.norm() <= kDegenerateNorm) {
        // The sampled branch has (numerically) zero weight; the other branch
        // is then the whole state.
        outcome = !outcome;
        branch = outcome ? projector.apply(state) : state - projector.apply(state);
    }
    return ProjectResult{outcome, branch.normalized(), prob};
}

namespace {

StateVector gaussian_vector(RandomStream& rng) {
    StateVector v;
    for (std::size_t i = 0; i < 4; ++i) {
        const double re = rng.gaussian();
        const double im = rng.gaussian();
        v.amps[i] = Complex(re, im);
    }
    return v;
}

} // namespace

OrthonormalBasis random_orthonormal_basis(RandomStream& rng) {
    for (;;) {
        OrthonormalBasis basis;
        bool degenerate = false;
        for (int k = 0; k < 4 && !degenerate; ++k) {
            StateVector v = gaussian_vector(rng);
            // Two projection passes keep the Gram matrix at 1e-15 level.
            for (int pass = 0; pass < 2; ++pass) {
                for (int j = 0; j < k; ++j) {
                    const Complex c = inner(basis[j], v);
                    v = v - basis[j] * c;
                }
            }
            if (v.norm() < kDegenerateNorm) {
                degenerate = true;
                break;
            }
            basis.states[static_cast<std::size_t>(k)] = v.normalized();
        }
        if (!degenerate) {
            return basis;
        }
    }
}

StateVector random_state(RandomStream& rng) {
    for (;;) {
        const StateVector v = gaussian_vector(rng);
        if (v.norm() >= kDegenerateNorm) {
            return v.normalized();
        }
    }
}

} // namespace detcomm
