#pragma once

// dX_t = A X_t dt + dL_t, X_0 = x0 (default 0), for L = b t + W + Z.
//
// The exact scheme advances between consecutive samples t_k < t_{k+1}
// (the grid refined by every jump time) by variation of constants
//
//   X(t_{k+1}-) = e^{A D} X_k + Phi_1(D) (b + z_k) + I_k,    D = t_{k+1} - t_k,
//   I_k         = int_0^D e^{A (D - u)} dW(t_k + u),
//
// where z_k is the slope of Z's continuous (compensator) part on the step, and
// then adds Delta Z(t_{k+1}). I_k is drawn conditionally on the realized
// increment W(t_{k+1}) - W(t_k), so the solution is coupled to the same driving
// path an Euler scheme would see. Without a Wiener part the integral
// S(X, t_k) is carried along exactly as well.

#include "levyou/levy.hpp"
#include "levyou/paths.hpp"
#include "levyou/rng.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cstring>
#include <unordered_map>

namespace levyou {

struct OUSpec {
    OperatorMatrix drift_operator;  // A
    LevyTriplet triplet;
    double horizon = 1.0;
    double step = 1e-3;

    void validate() const {
        triplet.validate();
        const auto d = triplet.dimension();
        require(drift_operator.rows() == d && drift_operator.cols() == d, "OUSpec: A must be d x d");
        require(drift_operator.allFinite(), "OUSpec: A must be finite");
        require(horizon > 0.0 && std::isfinite(horizon), "OUSpec: horizon must be positive");
        require(step > 0.0 && step <= horizon, "OUSpec: need 0 < h <= T");
    }
};

/// Sigma_h = int_0^h e^{As} Q e^{A^T s} ds, from the block exponential
/// exp([[-A, Q], [0, A^T]] h) = [[F11, F12], [0, F22]], Sigma_h = F22^T F12.
inline Matrix gaussian_step_covariance(const OperatorMatrix& a, const Matrix& q, double h) {
    require(h > 0.0, "gaussian_step_covariance: h must be positive");
    require(a.rows() == a.cols() && q.rows() == a.rows() && q.cols() == a.cols(),
            "gaussian_step_covariance: dimension mismatch");
    const auto d = a.rows();
    Matrix block = Matrix::Zero(2 * d, 2 * d);
    block.topLeftCorner(d, d) = -a * h;
    block.topRightCorner(d, d) = q * h;
    block.bottomRightCorner(d, d) = a.transpose() * h;
    const Matrix e = block.exp();
    Matrix sigma = e.bottomRightCorner(d, d).transpose() * e.topRightCorner(d, d);
    return 0.5 * (sigma + sigma.transpose());
}

/// Stateful only through a cache of per-step matrices; not thread-safe, use one
/// instance per worker.
class ExactOUSolver {
public:
    ExactOUSolver(OperatorMatrix a, Vector b, WienerCovariance q)
        : a_(std::move(a)), b_(std::move(b)), q_(std::move(q)) {
        require(a_.rows() == a_.cols() && a_.rows() == b_.size() && q_.dimension() == b_.size(),
                "ExactOUSolver: dimension mismatch");
        require(a_.allFinite() && b_.allFinite(), "ExactOUSolver: A and b must be finite");
        const auto d = static_cast<int>(b_.size());
        projector_ = Matrix::Zero(d, d);
        if (!q_.is_zero()) {
            // Projector onto range(Q); W increments never leave it.
            Eigen::SelfAdjointEigenSolver<Matrix> eig(q_.matrix());
            const double floor = 1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
            for (int i = 0; i < d; ++i) {
                if (eig.eigenvalues()[i] > floor) {
                    projector_ += eig.eigenvectors().col(i) * eig.eigenvectors().col(i).transpose();
                }
            }
        }
    }

    explicit ExactOUSolver(const OUSpec& spec)
        : ExactOUSolver(spec.drift_operator, spec.triplet.drift, spec.triplet.covariance) {}

    [[nodiscard]] const OperatorMatrix& drift_operator() const noexcept { return a_; }

    /// Solves on the common grid of W and Z. `noise` supplies the conditional
    /// Gaussian part; step k uses the normals at index (step_offset + k) * d + i.
    CadlagPath solve(const CadlagPath& w, const CadlagPath& z, const CounterRng& noise,
                     const std::optional<Vector>& x0 = std::nullopt, std::uint64_t step_offset = 0) {
        const int d = dimension();
        require(w.dimension() == d && z.dimension() == d, "ExactOUSolver: driving path dimension mismatch");
        require(w.times() == z.times(), "ExactOUSolver: W and Z must share one sample grid");
        require(w.jumps().empty(), "ExactOUSolver: the Wiener part must be continuous");
        const auto m = z.sample_count();
        const bool gaussian = !q_.is_zero();
        Matrix values(d, static_cast<Eigen::Index>(m));
        Matrix integrals = Matrix::Zero(d, static_cast<Eigen::Index>(m));
        std::vector<JumpEvent> jumps;
        jumps.reserve(z.jumps().size());

        Vector x = x0 ? *x0 : Vector::Zero(d);
        require(x.size() == d, "ExactOUSolver: initial value dimension mismatch");
        values.col(0) = x;
        Vector xi(d);
        for (std::size_t k = 0; k + 1 < m; ++k) {
            const double dt = z.time(k + 1) - z.time(k);
            const auto& step = matrices(dt);
            const auto jump = z.jump_at_sample(k + 1);
            const Vector z_left = jump ? z.jumps()[*jump].pre : z.value(k + 1);
            const Vector forcing = b_ + (z_left - z.value(k)) / dt;

            const Vector integral = step.phi1 * x + step.psi * forcing;
            Vector next = step.flow * x + step.phi1 * forcing;
            if (gaussian) {
                const Vector dw = w.value(k + 1) - w.value(k);
                for (int i = 0; i < d; ++i) {
                    xi[i] = noise.normal_at((step_offset + k) * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(i));
                }
                next += step.gain * dw + step.residual_factor * xi;
            }
            if (jump) {
                const Vector pre = next;
                next = pre + z.jumps()[*jump].size();
                if (next != pre) jumps.push_back({z.time(k + 1), pre, next});
            }
            integrals.col(static_cast<Eigen::Index>(k + 1)) = integrals.col(static_cast<Eigen::Index>(k)) + integral;
            values.col(static_cast<Eigen::Index>(k + 1)) = next;
            x = std::move(next);
        }
        std::optional<Matrix> channel;
        if (!gaussian) channel = std::move(integrals);
        return CadlagPath(z.horizon(), z.times(), std::move(values), std::move(jumps), std::move(channel));
    }

private:
    struct StepMatrices {
        Matrix flow;             // e^{A D}
        Matrix phi1;             // int_0^D e^{As} ds
        Matrix psi;              // int_0^D (D - s) e^{As} ds
        Matrix gain;             // Cov(I, dW) Cov(dW)^+
        Matrix residual_factor;  // square root of Cov(I | dW)
    };

    [[nodiscard]] int dimension() const { return static_cast<int>(b_.size()); }

    const StepMatrices& matrices(double dt) {
        // Steps that agree to ~13 significant digits share one entry; the
        // resulting error is far below every tolerance used downstream.
        std::uint64_t bits = 0;
        std::memcpy(&bits, &dt, sizeof bits);
        const std::uint64_t key = bits >> 12;
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;

        const auto d = static_cast<Eigen::Index>(dimension());
        Matrix block = Matrix::Zero(3 * d, 3 * d);
        block.block(0, 0, d, d) = a_ * dt;
        block.block(0, d, d, d) = Matrix::Identity(d, d) * dt;
        block.block(d, 2 * d, d, d) = Matrix::Identity(d, d) * dt;
        const Matrix e = block.exp();
        StepMatrices s;
        s.flow = e.block(0, 0, d, d);
        s.phi1 = e.block(0, d, d, d);
        s.psi = e.block(0, 2 * d, d, d);
        if (!q_.is_zero()) {
            const Matrix sigma = gaussian_step_covariance(a_, q_.matrix(), dt);
            s.gain = s.phi1 * projector_ / dt;
            Matrix residual = sigma - s.phi1 * q_.matrix() * s.phi1.transpose() / dt;
            residual = 0.5 * (residual + residual.transpose());
            Eigen::SelfAdjointEigenSolver<Matrix> eig(residual);
            Vector lambda = eig.eigenvalues();
            const double floor = 1e-13 * std::max(std::numeric_limits<double>::min(), sigma.norm());
            for (Eigen::Index i = 0; i < lambda.size(); ++i) {
                lambda[i] = lambda[i] > floor ? std::sqrt(lambda[i]) : 0.0;
            }
            s.residual_factor = eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
        }
        return cache_.emplace(key, std::move(s)).first->second;
    }

    OperatorMatrix a_;
    Vector b_;
    WienerCovariance q_;
    Matrix projector_;
    std::unordered_map<std::uint64_t, StepMatrices> cache_;
};

struct OUSample {
    LevyParts driving;
    CadlagPath path;
};

/// Samples L for (seed, replica) on the uniform grid of the spec and solves exactly.
inline OUSample solve_exact(const OUSpec& spec, std::uint64_t seed, std::uint64_t replica) {
    spec.validate();
    auto driving = sample_levy(spec.triplet, uniform_grid(spec.horizon, spec.step), seed, replica);
    ExactOUSolver solver(spec);
    auto path = solver.solve(driving.wiener, driving.jumps, CounterRng(seed, replica, StreamRole::solver));
    return {std::move(driving), std::move(path)};
}

/// Exact solution for an already realized driving pair (W, Z).
inline CadlagPath solve_exact(const OUSpec& spec, const LevyParts& driving, const CounterRng& noise) {
    spec.validate();
    ExactOUSolver solver(spec);
    return solver.solve(driving.wiener, driving.jumps, noise);
}

/// X_{k+1} = X_k + A X_k (t_{k+1} - t_k) + (L_{k+1} - L_k) on the grid of L,
/// with L's jumps copied into the jump list.
inline CadlagPath solve_euler(const OperatorMatrix& a, const CadlagPath& driving) {
    const int d = driving.dimension();
    require(a.rows() == d && a.cols() == d, "solve_euler: A must be d x d");
    const auto m = driving.sample_count();
    Matrix values(d, static_cast<Eigen::Index>(m));
    values.col(0).setZero();
    std::vector<JumpEvent> jumps;
    Vector x = Vector::Zero(d);
    for (std::size_t k = 0; k + 1 < m; ++k) {
        const double dt = driving.time(k + 1) - driving.time(k);
        if (!(dt > 0.0)) throw ContractViolation("solve_euler: step must be positive");
        Vector next = x + a * x * dt + (driving.value(k + 1) - driving.value(k));
        if (auto j = driving.jump_at_sample(k + 1)) {
            const Vector pre = next - driving.jumps()[*j].size();
            if (next != pre) jumps.push_back({driving.time(k + 1), pre, next});
        }
        values.col(static_cast<Eigen::Index>(k + 1)) = next;
        x = std::move(next);
    }
    return CadlagPath(driving.horizon(), driving.times(), std::move(values), std::move(jumps));
}

/// Euler on the driving path coarsened to step h (jump times are kept).
inline CadlagPath solve_euler(const OperatorMatrix& a, const CadlagPath& driving, double h) {
    return solve_euler(a, coarsen(driving, h));
}

}  // namespace levyou
