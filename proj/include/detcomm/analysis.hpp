#ifndef DETCOMM_ANALYSIS_HPP
#define DETCOMM_ANALYSIS_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "detcomm/adversary.hpp"
#include "detcomm/protocol.hpp"
#include "detcomm/scheme.hpp"

namespace detcomm {

struct SweepRow {
    std::size_t strategy_id = 0;
    ForwardingMode forwarding_mode = ForwardingMode::AS_DETECTED;
    double analytic_rate = 0.0;
    std::optional<double> empirical_rate;
    double bound = 0.0;
};

struct SweepSummary {
    std::size_t n_strategies = 0;
    double min_rate = 0.0;
    double mean_rate = 0.0;
    double bound = 0.0;
    std::size_t violations = 0; // rows with analytic_rate < bound - 1e-9
};

struct SweepResult {
    std::vector<SweepRow> rows;
    SweepSummary summary;
};

/// Evaluates n random intercept-resend strategies against the scheme. Each
/// strategy gets its own split of the seed stream, so results are
/// deterministic per seed and independent of evaluation order. When
/// `empirical_bits` is set, each strategy is additionally run through a full
/// session sized to produce roughly that many control bits, and the measured
/// control error rate is recorded.
SweepResult sweep_strategies(const SchemeParams& params, std::size_t n, ForwardingMode mode,
                             std::uint64_t seed,
                             std::optional<std::size_t> empirical_bits = std::nullopt);

/// Formats rows as CSV (header row, 17 significant digits so float64 values
/// round-trip losslessly).
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

std::string format_g17(double v);

struct CheckResult {
    std::string name;
    bool pass = false;
    double deviation = 0.0;
    std::string detail;
};

struct SchemeReport {
    std::vector<CheckResult> checks;
    std::optional<QndBackdoor> backdoor;
    bool near_degenerate = false;
    double bound = 0.0;
    bool all_pass = false;
};

/// Validates a raw parameter triple: normalization, the algebraic properties
/// of A, basis orthogonality and completeness, the outcome-probability
/// pattern, the attack floor, and the QND backdoor search. A failed
/// normalization check short-circuits the rest.
SchemeReport verify_scheme(double a1, double a2, double a3);

void print_scheme_report(std::ostream& out, const SchemeReport& report);

/// Survival function of the chi-square distribution (closed forms; supports
/// 1..3 degrees of freedom, which covers 2..4 outcome categories).
double chi_square_survival(double stat, int dof);

/// p-value for observed counts against uniform expectation over 4 outcomes.
double chi_square_uniform_pvalue(const std::array<std::uint64_t, 4>& counts);

/// p-value against arbitrary expected probabilities; categories with
/// (numerically) zero expectation are excluded from the statistic, but any
/// observed count there forces p = 0.
double chi_square_pvalue(const std::array<std::uint64_t, 4>& counts,
                         const std::array<double, 4>& expected_probs);

/// Simulates Eve's outcome frequencies conditioned on the transmitted bit
/// and tests both against uniformity: by the concealment condition they
/// carry no bit information. Returns (p conditioned on PLUS, on MINUS).
/// Requires an intercept-resend strategy and samples >= 10^4.
std::pair<double, double> uniformity_test(const EveStrategy& strategy,
                                          const SchemeParams& params, std::size_t samples,
                                          std::uint64_t seed);

/// Eve's post-key view of a finished session: recovers the message bits from
/// her per-photon records using the true ciphers, scored against the
/// transmitted bits. Sessions without interception yield an empty report.
RecoveryReport recover_message(const Transcript& transcript, const BasisPair& bases,
                               const EveStrategy& strategy);

} // namespace detcomm

#endif
