#pragma once

// Change of drift under a non-degenerate Wiener part.
//
// With Q invertible the laws of dX = A X dt + dL and dX~ = A~ X~ dt + dL on
// [0, T] are equivalent. The two dynamics share the jump part, so after
// removing the jumps and the deterministic drift from an observed path f,
//
//   dW = df^c - A~ f dt - b dt       under the A~ dynamics, and
//   dW = df^c - A  f dt - b dt       under the A  dynamics,
//
// the density of the A-law against the A~-law evaluated at f is the Girsanov
// exponential of D f = (A - A~) f:
//
//   log dP_X/dP_X~ (f) = int <Q^{-1} D f, df^c - A~ f dt - b dt> - 1/2 int <Q^{-1} D f, D f> dt.
//
// We discretize with the left endpoint (Ito) rule on the sample grid. The
// implementation evaluates each term as <Q^{-1} D f_k, df^c_k - b dt - (A + A~)/2 f_k dt>,
// which is the same sum but flips sign exactly when A and A~ are swapped.
// Here b is the Levy-Ito drift minus the small-jump compensator, so that df^c
// contains only the Brownian increment and the drift terms.

#include "levyou/levy.hpp"
#include "levyou/ou_solver.hpp"
#include "levyou/paths.hpp"

#include <vector>

namespace levyou {

struct EquivalenceCheck {
    bool holds = false;
    double min_eigenvalue = 0.0;
};

/// Strict positivity of the spectrum of Q (lambda_min > tol). In finite
/// dimension this is all Girsanov needs.
inline EquivalenceCheck check_equivalence_condition(const WienerCovariance& q, double tol = 1e-12) {
    const double lambda = q.min_eigenvalue();
    return {lambda > tol, lambda};
}

inline EquivalenceCheck check_equivalence_condition(const Matrix& q, double tol = 1e-12) {
    return check_equivalence_condition(WienerCovariance(q), tol);
}

/// Left-endpoint log-likelihood ratio of the A-law against the A~-law at f.
inline double log_likelihood_ratio(const OperatorMatrix& a, const OperatorMatrix& a_tilde, const LevyTriplet& triplet,
                                   const CadlagPath& f) {
    const int d = f.dimension();
    require(triplet.dimension() == d && a.rows() == d && a.cols() == d && a_tilde.rows() == d && a_tilde.cols() == d,
            "log_likelihood_ratio: dimension mismatch");
    const auto check = check_equivalence_condition(triplet.covariance);
    require(check.holds, "log_likelihood_ratio: Q is singular, the drift change has no density");
    const Eigen::LDLT<Matrix> q_solver(triplet.covariance.matrix());
    const Vector drift = triplet.drift - (triplet.jumps.has_jumps() ? triplet.jumps.drift_compensation() : Vector::Zero(d));
    const Matrix difference = a - a_tilde;
    const Matrix midpoint = 0.5 * (a + a_tilde);

    double llr = 0.0;
    for (std::size_t k = 0; k + 1 < f.sample_count(); ++k) {
        const double dt = f.time(k + 1) - f.time(k);
        const Vector fk = f.value(k);
        Vector increment = f.value(k + 1) - fk;
        if (auto j = f.jump_at_sample(k + 1)) {
            increment -= f.jumps()[*j].size();
        }
        const Vector score = q_solver.solve(difference * fk);
        llr += score.dot(increment - drift * dt - midpoint * fk * dt);
    }
    return llr;
}

/// log of prod_k exp(<s_k, dW_k> - 1/2 <s_k, Q s_k> dt_k), s_k = Q^{-1} (A - A~) f(t_k),
/// with dW the Wiener increments that drove f, read on f's grid. This is the
/// discrete Girsanov martingale: its exponential has mean exactly 1 whatever the
/// step, which makes it a control variate for exp(llr).
inline double log_girsanov_martingale(const OperatorMatrix& a, const OperatorMatrix& a_tilde, const WienerCovariance& q,
                                      const CadlagPath& f, const CadlagPath& w) {
    const int d = f.dimension();
    require(w.dimension() == d && q.dimension() == d, "log_girsanov_martingale: dimension mismatch");
    require(w.jumps().empty(), "log_girsanov_martingale: the Wiener path must be continuous");
    const Eigen::LDLT<Matrix> q_solver(q.matrix());
    const Matrix difference = a - a_tilde;
    double out = 0.0;
    Vector w_now = evaluate(w, f.time(0));
    for (std::size_t k = 0; k + 1 < f.sample_count(); ++k) {
        const double dt = f.time(k + 1) - f.time(k);
        const Vector drift_change = difference * f.value(k);
        const Vector score = q_solver.solve(drift_change);
        Vector w_next = evaluate(w, f.time(k + 1));
        out += score.dot(w_next - w_now) - 0.5 * score.dot(drift_change) * dt;
        w_now = std::move(w_next);
    }
    return out;
}

/// sup_t |A fX(t) - A~ fX~(t)| over the union of both grids: the smallest R with
/// the pair inside {sup_t |A X_t - A~ X~_t| <= R}.
inline double truncation_level(const CadlagPath& fx, const CadlagPath& fx_tilde, const OperatorMatrix& a,
                               const OperatorMatrix& a_tilde) {
    require_comparable(fx, fx_tilde, "truncation_level");
    require(a.rows() == fx.dimension() && a_tilde.rows() == fx.dimension(), "truncation_level: dimension mismatch");
    const auto times = merge_times(fx.times(), fx_tilde.times());
    double level = 0.0;
    for (double t : times) {
        level = std::max(level, (a * evaluate(fx, t) - a_tilde * evaluate(fx_tilde, t)).norm());
    }
    return level;
}

// ---------------------------------------------------------------------------

struct GirsanovSettings {
    OperatorMatrix a;
    OperatorMatrix a_tilde;
    LevyTriplet triplet;
    double horizon = 1.0;
    double step = 1e-3;
    std::size_t replicas = 10000;
    std::uint64_t seed = 1;
    double se_multiplier = 3.0;
    /// Also simulate at step/2 and evaluate the likelihood ratio at both steps.
    bool refine = true;
};

struct MeanEstimate {
    double mean = 0.0;
    double standard_error = 0.0;
};

struct MeasureChangeReport {
    bool hypothesis_violated = false;
    double min_eigenvalue = 0.0;
    double step = 0.0;          // h
    double refined_step = 0.0;  // h / 2, or h without refinement

    std::vector<double> log_likelihood_ratios;  // at h, one per A~ replica
    MeanEstimate weight;                        // E[exp(llr)] at h
    MeanEstimate refined_weight;                // E[exp(llr)] at h / 2
    // E[exp(llr) - M] at h and h / 2, M the discrete Girsanov martingale on the
    // same grid: the discretization bias of the weight without the shared noise.
    MeanEstimate bias;
    MeanEstimate refined_bias;

    std::vector<MeanEstimate> direct;      // E[X_T] from the A ensemble, per coordinate
    std::vector<MeanEstimate> reweighted;  // mean of exp(llr(X~)) X~_T, per coordinate
    std::vector<double> truncation_levels;  // per replica, coupled pair (X, X~)

    bool mean_one_pass = false;
    bool gap_shrinks = false;
    bool reweighting_pass = false;
    double se_multiplier = 3.0;

    [[nodiscard]] bool passed() const { return !hypothesis_violated && mean_one_pass && gap_shrinks && reweighting_pass; }
};

namespace detail {

class RunningMean {
public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }
    [[nodiscard]] MeanEstimate estimate() const {
        if (n_ < 2) return {mean_, 0.0};
        const double variance = m2_ / static_cast<double>(n_ - 1);
        return {mean_, std::sqrt(variance / static_cast<double>(n_))};
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

}  // namespace detail

/// Simulates, under common settings, an A~ ensemble (likelihood ratios and
/// re-weighted terminal values), an independent A ensemble (direct terminal
/// values) and the coupled A path of every A~ replica (truncation level).
inline MeasureChangeReport equivalence_report(const GirsanovSettings& s) {
    MeasureChangeReport report;
    report.se_multiplier = s.se_multiplier;
    report.step = s.step;
    report.refined_step = s.refine ? 0.5 * s.step : s.step;
    s.triplet.validate();
    const auto check = check_equivalence_condition(s.triplet.covariance);
    report.min_eigenvalue = check.min_eigenvalue;
    if (!check.holds) {
        report.hypothesis_violated = true;
        return report;
    }
    require(s.replicas >= 2, "equivalence_report: need at least two replicas");
    const int d = s.triplet.dimension();
    const OUSpec tilde_spec{s.a_tilde, s.triplet, s.horizon, report.refined_step};
    const OUSpec direct_spec{s.a, s.triplet, s.horizon, report.refined_step};
    ExactOUSolver tilde_solver(tilde_spec);
    ExactOUSolver direct_solver(direct_spec);
    const auto grid = uniform_grid(s.horizon, report.refined_step);
    const auto coarse_grid = uniform_grid(s.horizon, s.step);

    detail::RunningMean weight;
    detail::RunningMean refined_weight;
    detail::RunningMean bias;
    detail::RunningMean refined_bias;
    std::vector<detail::RunningMean> direct(static_cast<std::size_t>(d));
    std::vector<detail::RunningMean> reweighted(static_cast<std::size_t>(d));
    report.log_likelihood_ratios.reserve(s.replicas);
    report.truncation_levels.reserve(s.replicas);

    // The A ensemble uses replica indices disjoint from the A~ ensemble.
    const std::uint64_t direct_offset = std::uint64_t{1} << 40;
    for (std::size_t r = 0; r < s.replicas; ++r) {
        const auto driving = sample_levy(s.triplet, grid, s.seed, r);
        const CounterRng noise(s.seed, r, StreamRole::solver);
        const auto x_tilde = tilde_solver.solve(driving.wiener, driving.jumps, noise);
        const auto x_coupled = direct_solver.solve(driving.wiener, driving.jumps, noise);

        double llr_fine = 0.0;
        double llr_coarse = 0.0;
        double mart_fine = 0.0;
        double mart_coarse = 0.0;
        const auto& q = s.triplet.covariance;
        if (s.refine) {
            llr_fine = log_likelihood_ratio(s.a, s.a_tilde, s.triplet, x_tilde);
            mart_fine = log_girsanov_martingale(s.a, s.a_tilde, q, x_tilde, driving.wiener);
            std::vector<std::size_t> keep;
            std::size_t coarse_pos = 0;
            for (std::size_t k = 0; k < x_tilde.sample_count(); ++k) {
                while (coarse_pos < coarse_grid.size() && coarse_grid[coarse_pos] < x_tilde.time(k)) ++coarse_pos;
                const bool on_coarse = coarse_pos < coarse_grid.size() && coarse_grid[coarse_pos] == x_tilde.time(k);
                if (on_coarse || x_tilde.jump_at_sample(k)) keep.push_back(k);
            }
            const auto coarse = subsample(x_tilde, keep);
            llr_coarse = log_likelihood_ratio(s.a, s.a_tilde, s.triplet, coarse);
            mart_coarse = log_girsanov_martingale(s.a, s.a_tilde, q, coarse, driving.wiener);
        } else {
            llr_coarse = log_likelihood_ratio(s.a, s.a_tilde, s.triplet, x_tilde);
            llr_fine = llr_coarse;
            mart_coarse = log_girsanov_martingale(s.a, s.a_tilde, q, x_tilde, driving.wiener);
            mart_fine = mart_coarse;
        }
        const double w = std::exp(llr_coarse);
        report.log_likelihood_ratios.push_back(llr_coarse);
        weight.add(w);
        refined_weight.add(std::exp(llr_fine));
        bias.add(w - std::exp(mart_coarse));
        refined_bias.add(std::exp(llr_fine) - std::exp(mart_fine));
        const Vector terminal_tilde = x_tilde.value(x_tilde.sample_count() - 1);
        for (int i = 0; i < d; ++i) reweighted[static_cast<std::size_t>(i)].add(w * terminal_tilde[i]);
        report.truncation_levels.push_back(truncation_level(x_coupled, x_tilde, s.a, s.a_tilde));

        const auto own = sample_levy(s.triplet, grid, s.seed, direct_offset + r);
        const auto x = direct_solver.solve(own.wiener, own.jumps, CounterRng(s.seed, direct_offset + r, StreamRole::solver));
        const Vector terminal = x.value(x.sample_count() - 1);
        for (int i = 0; i < d; ++i) direct[static_cast<std::size_t>(i)].add(terminal[i]);
    }

    report.weight = weight.estimate();
    report.refined_weight = refined_weight.estimate();
    report.bias = bias.estimate();
    report.refined_bias = refined_bias.estimate();
    const double k = s.se_multiplier;
    const bool coarse_ok = std::abs(report.weight.mean - 1.0) <= k * report.weight.standard_error;
    const bool fine_ok = std::abs(report.refined_weight.mean - 1.0) <= k * report.refined_weight.standard_error;
    report.mean_one_pass = coarse_ok && fine_ok;
    // Both weights share almost all of their Monte Carlo noise, which dwarfs the
    // O(h) bias at any practical N; compare the control-variate gaps instead.
    report.gap_shrinks = !s.refine || std::abs(report.refined_bias.mean) < std::abs(report.bias.mean);
    report.reweighting_pass = true;
    for (int i = 0; i < d; ++i) {
        const auto direct_i = direct[static_cast<std::size_t>(i)].estimate();
        const auto reweighted_i = reweighted[static_cast<std::size_t>(i)].estimate();
        report.direct.push_back(direct_i);
        report.reweighted.push_back(reweighted_i);
        const double se = std::hypot(direct_i.standard_error, reweighted_i.standard_error);
        if (std::abs(direct_i.mean - reweighted_i.mean) > k * se) report.reweighting_pass = false;
    }
    return report;
}

}  // namespace levyou
