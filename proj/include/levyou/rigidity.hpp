#pragma once

// Drift identification from a single pure-jump OU path.
//
// A path of dX = A X dt + dZ satisfies X_t - A S(X, t) = Z_t, and Z can be read
// off the path itself because X and Z jump at the same times by the same
// amounts. For a candidate V the residual
//
//   r_V(t) = f(t) - V S(f, t) - Z1_{|x| >= 1}(f, t) - Z2_{eps_n <= |x| < 1}(f, t)
//
// vanishes identically for V = A. Any other V leaves a visible residual as soon
// as the path has moved, and least squares on the same identity recovers A.

#include "levyou/jump_calculus.hpp"
#include "levyou/levy.hpp"
#include "levyou/ou_solver.hpp"
#include "levyou/paths.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace levyou {

/// The Gram matrix of the regression is too poorly conditioned to identify A.
class SingularGram : public std::runtime_error {
public:
    SingularGram(double sigma_min, double tolerance)
        : std::runtime_error("drift unidentifiable: smallest singular value of the Gram matrix " +
                             format_double(sigma_min) + " <= " + format_double(tolerance)),
          sigma_min_(sigma_min) {}

    [[nodiscard]] double sigma_min() const noexcept { return sigma_min_; }

private:
    double sigma_min_;
};

/// eps_n = cutoff * 2^{-n}.
inline double shell_radius(int n, double cutoff = kLargeJumpCutoff) { return std::ldexp(cutoff, -n); }

/// Smallest n >= 1 whose shell eps_n <= |x| < cutoff holds every small jump of f
/// and lies below `floor` (the smallest radius charged by the intensity measure).
inline int select_shell_index(const CadlagPath& f, double floor = kLargeJumpCutoff, double cutoff = kLargeJumpCutoff) {
    double smallest = std::min(floor, cutoff);
    for (const auto& jump : f.jumps()) {
        const double r = jump.size().norm();
        if (r < cutoff) smallest = std::min(smallest, r);
    }
    int n = 1;
    while (shell_radius(n, cutoff) > smallest && n < 1000) ++n;
    return n;
}

/// The smallest radius a jump specification charges (0 would mean none).
inline double measure_floor(const JumpSpec& spec) {
    double floor = spec.cutoff;
    if (spec.small_jumps) floor = std::min(floor, spec.small_jumps->epsilon);
    if (const auto* disc = std::get_if<DiscreteJumps>(&spec.sizes)) {
        for (const auto& atom : disc->atoms) floor = std::min(floor, atom.norm());
    }
    // Gaussian sizes charge every shell, but symmetrically: the compensator is
    // zero on every annulus, so only the jumps of the path matter.
    return floor;
}

struct XiResidual {
    OperatorMatrix candidate;
    Matrix residual;  // d x (m+1), r_V(t_k)
    double sup_norm = 0.0;
    int shell_index = 1;
    double shell_inner_radius = 0.5;
};

/// Z1_{|x| >= cutoff}(f, t_k) + Z2_{eps_n <= |x| < cutoff}(f, t_k).
inline Matrix driving_jump_samples(const CadlagPath& f, const CompensatorSpec& mu, int shell_index,
                                   double cutoff = kLargeJumpCutoff) {
    const BorelSet large = Annulus{cutoff, std::numeric_limits<double>::infinity()};
    const BorelSet shell = BorelSet::unit_ball_shell(shell_radius(shell_index, cutoff), cutoff);
    return z1_samples(large, f) + z2_samples(shell, mu, f);
}

/// The jump part read off f, as a path on f's grid.
inline CadlagPath extract_driving_jumps(const CadlagPath& f, const CompensatorSpec& mu, int shell_index,
                                        double cutoff = kLargeJumpCutoff) {
    Matrix values = driving_jump_samples(f, mu, shell_index, cutoff);
    const double eps = shell_radius(shell_index, cutoff);
    std::vector<JumpEvent> jumps;
    for (std::size_t j = 0; j < f.jumps().size(); ++j) {
        const Vector delta = f.jumps()[j].size();
        if (delta.norm() < eps) continue;
        const Vector post = values.col(static_cast<Eigen::Index>(f.jump_sample(j)));
        const Vector pre = post - delta;
        if (post != pre) jumps.push_back({f.jumps()[j].time, pre, post});
    }
    return CadlagPath(f.horizon(), f.times(), std::move(values), std::move(jumps));
}

inline XiResidual xi_residual(const OperatorMatrix& v, const CadlagPath& f, const CompensatorSpec& mu, int shell_index,
                              double cutoff = kLargeJumpCutoff) {
    require(v.rows() == f.dimension() && v.cols() == f.dimension(), "xi_residual: candidate must be d x d");
    require(shell_index >= 1, "xi_residual: shell index must be positive");
    XiResidual out;
    out.candidate = v;
    out.shell_index = shell_index;
    out.shell_inner_radius = shell_radius(shell_index, cutoff);
    out.residual = f.values() - v * f.integrals() - driving_jump_samples(f, mu, shell_index, cutoff);
    out.sup_norm = out.residual.colwise().norm().maxCoeff();
    return out;
}

/// Shell chosen automatically from the path's jumps.
inline XiResidual xi_residual(const OperatorMatrix& v, const CadlagPath& f, const CompensatorSpec& mu) {
    return xi_residual(v, f, mu, select_shell_index(f));
}

struct DriftEstimate {
    OperatorMatrix estimate;
    Matrix gram;  // sum_k s_k s_k^T
    double sigma_min = 0.0;
    double residual = 0.0;  // max_k |y_k - estimate s_k|
};

inline double default_sigma_tolerance(const CadlagPath& f) { return 1e-10 * static_cast<double>(f.sample_count()); }

/// argmin_V sum_k |f(t_k) - Z_f(t_k) - V S(f, t_k)|^2 in closed form.
/// Throws SingularGram when sigma_min(G) <= sigma_tol.
inline DriftEstimate recover_drift(const CadlagPath& f, const CadlagPath& z_f, double sigma_tol) {
    require_comparable(f, z_f, "recover_drift");
    const int d = f.dimension();
    const Matrix& s = f.integrals();
    Matrix y(d, static_cast<Eigen::Index>(f.sample_count()));
    for (std::size_t k = 0; k < f.sample_count(); ++k) {
        y.col(static_cast<Eigen::Index>(k)) = f.value(k) - evaluate(z_f, f.time(k));
    }
    DriftEstimate out;
    out.gram = s * s.transpose();
    const Eigen::JacobiSVD<Matrix> svd(out.gram);
    out.sigma_min = svd.singularValues().minCoeff();
    if (!(out.sigma_min > sigma_tol)) {
        throw SingularGram(out.sigma_min, sigma_tol);
    }
    const Matrix cross = s * y.transpose();  // sum_k s_k y_k^T
    out.estimate = out.gram.ldlt().solve(cross).transpose();
    out.residual = (y - out.estimate * s).colwise().norm().maxCoeff();
    return out;
}

inline DriftEstimate recover_drift(const CadlagPath& f, const CadlagPath& z_f) {
    return recover_drift(f, z_f, default_sigma_tolerance(f));
}

// ---------------------------------------------------------------------------

enum class Verdict { distinct, indistinguishable, inconclusive, hypothesis_violated };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::distinct: return "DISTINCT";
        case Verdict::indistinguishable: return "INDISTINGUISHABLE";
        case Verdict::inconclusive: return "INCONCLUSIVE";
        case Verdict::hypothesis_violated: return "HYPOTHESIS_VIOLATED";
    }
    return "?";
}

struct VerdictSettings {
    OperatorMatrix a;
    OperatorMatrix a_tilde;
    LevyTriplet triplet;  // must be pure jump
    double horizon = 1.0;
    double step = 1e-3;
    std::size_t replicas = 100;
    std::uint64_t seed = 1;
    double tau = 0.01;
    double required_fraction = 0.99;
    double identity_tolerance = 1e-8;
};

struct VerdictRecord {
    VerdictSettings settings;
    Verdict verdict = Verdict::inconclusive;
    std::size_t replicas_with_jumps = 0;
    double fraction = 0.0;                 // among replicas with >= 1 jump
    std::vector<double> residual_sup;      // xi_residual(A~) per replica
    std::vector<std::size_t> jump_counts;  // per replica
};

/// Simulates X under A and asks whether the paths also lie in the residual-free
/// set of A~. If X and X~ were equal in law this could not fail on a jumping path.
inline VerdictRecord distinctness_verdict(const VerdictSettings& s) {
    VerdictRecord record{s, Verdict::inconclusive, 0, 0.0, {}, {}};
    s.triplet.validate();
    if (!s.triplet.pure_jump()) {
        record.verdict = Verdict::hypothesis_violated;
        return record;
    }
    const OUSpec spec{s.a, s.triplet, s.horizon, s.step};
    spec.validate();
    require(s.a_tilde.rows() == s.a.rows() && s.a_tilde.cols() == s.a.cols(), "distinctness_verdict: A~ shape mismatch");
    const auto mu = s.triplet.jumps.compensator();
    const double floor = measure_floor(s.triplet.jumps);
    const auto grid = uniform_grid(s.horizon, s.step);
    ExactOUSolver solver(spec);

    std::size_t exceed = 0;
    bool all_tiny = true;
    for (std::size_t r = 0; r < s.replicas; ++r) {
        const auto driving = sample_levy(s.triplet, grid, s.seed, r);
        const auto x = solver.solve(driving.wiener, driving.jumps, CounterRng(s.seed, r, StreamRole::solver));
        const int n = select_shell_index(x, floor, s.triplet.jumps.cutoff);
        const auto res = xi_residual(s.a_tilde, x, mu, n, s.triplet.jumps.cutoff);
        record.residual_sup.push_back(res.sup_norm);
        record.jump_counts.push_back(x.jumps().size());
        if (!x.jumps().empty()) {
            ++record.replicas_with_jumps;
            if (res.sup_norm > s.tau) ++exceed;
        }
        if (res.sup_norm > s.identity_tolerance) all_tiny = false;
    }
    if (record.replicas_with_jumps == 0) {
        record.verdict = Verdict::inconclusive;
        return record;
    }
    record.fraction = static_cast<double>(exceed) / static_cast<double>(record.replicas_with_jumps);
    if (record.fraction >= s.required_fraction) {
        record.verdict = Verdict::distinct;
    } else if (all_tiny) {
        record.verdict = Verdict::indistinguishable;
    } else {
        record.verdict = Verdict::inconclusive;
    }
    return record;
}

}  // namespace levyou
