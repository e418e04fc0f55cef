#pragma once

// Finitely represented R^d-valued cadlag paths on [0, T].
//
// A path is a strictly increasing sample grid 0 = t_0 < ... < t_m = T with the
// right-continuous value at each sample, read as piecewise constant in between,
// plus an explicit list of jump events carrying (time, f(s-), f(s)). Jump
// functionals only ever look at the jump list, so Delta f(s) is exact even for
// paths whose continuous part moves between samples.
//
// A path may also carry the exact running integral S(f, t_k) at every sample.
// Solvers that integrate their segments analytically attach it; integrate()
// then uses it instead of the piecewise-constant rule.

#include "levyou/core.hpp"

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace levyou {

struct JumpEvent {
    double time = 0.0;
    Vector pre;   // f(s-)
    Vector post;  // f(s)

    [[nodiscard]] Vector size() const { return post - pre; }
};

class CadlagPath {
public:
    /// `values` is d x (m+1); column k is f(t_k). `exact_integrals`, when given,
    /// has the same shape and holds S(f, t_k).
    CadlagPath(double horizon, std::vector<double> times, Matrix values, std::vector<JumpEvent> jumps = {},
               std::optional<Matrix> exact_integrals = std::nullopt)
        : horizon_(horizon), times_(std::move(times)), values_(std::move(values)), jumps_(std::move(jumps)),
          integrals_(std::move(exact_integrals)) {
        validate();
        index_jumps();
        if (!integrals_) {
            build_piecewise_integrals();
        }
    }

    [[nodiscard]] int dimension() const noexcept { return static_cast<int>(values_.rows()); }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::size_t sample_count() const noexcept { return times_.size(); }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }
    [[nodiscard]] double time(std::size_t k) const { return times_[k]; }
    [[nodiscard]] const Matrix& values() const noexcept { return values_; }
    [[nodiscard]] Vector value(std::size_t k) const { return values_.col(static_cast<Eigen::Index>(k)); }
    [[nodiscard]] const std::vector<JumpEvent>& jumps() const noexcept { return jumps_; }

    /// Sample index of jump j.
    [[nodiscard]] std::size_t jump_sample(std::size_t j) const { return jump_samples_[j]; }

    /// Index of the jump recorded at sample k, if any.
    [[nodiscard]] std::optional<std::size_t> jump_at_sample(std::size_t k) const {
        auto it = std::lower_bound(jump_samples_.begin(), jump_samples_.end(), k);
        if (it != jump_samples_.end() && *it == k) {
            return static_cast<std::size_t>(it - jump_samples_.begin());
        }
        return std::nullopt;
    }

    [[nodiscard]] bool has_exact_integrals() const noexcept { return exact_integrals_; }

    /// S(f, t_k).
    [[nodiscard]] Vector integral_at_sample(std::size_t k) const {
        return integrals_->col(static_cast<Eigen::Index>(k));
    }
    [[nodiscard]] const Matrix& integrals() const noexcept { return *integrals_; }

    /// Greatest k with t_k <= t. Requires t in [0, T].
    [[nodiscard]] std::size_t sample_index(double t) const {
        if (!(t >= 0.0 && t <= horizon_)) {
            throw DomainError("time " + format_double(t) + " outside [0, " + format_double(horizon_) + "]");
        }
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        return static_cast<std::size_t>(it - times_.begin()) - 1;
    }

private:
    void validate() {
        require(horizon_ > 0.0 && std::isfinite(horizon_), "CadlagPath: horizon must be positive and finite");
        require(times_.size() >= 2, "CadlagPath: need at least the samples 0 and T");
        require(values_.rows() >= 1, "CadlagPath: dimension must be positive");
        require(static_cast<std::size_t>(values_.cols()) == times_.size(), "CadlagPath: one value column per sample");
        require(times_.front() == 0.0 && times_.back() == horizon_, "CadlagPath: samples must start at 0 and end at T");
        for (std::size_t k = 1; k < times_.size(); ++k) {
            require(times_[k] > times_[k - 1], "CadlagPath: sample times must be strictly increasing");
        }
        require(values_.allFinite(), "CadlagPath: values must be finite");
        if (integrals_) {
            require(integrals_->rows() == values_.rows() && integrals_->cols() == values_.cols(),
                    "CadlagPath: integral channel shape mismatch");
            exact_integrals_ = true;
        }
    }

    void index_jumps() {
        jump_samples_.reserve(jumps_.size());
        double last = 0.0;
        for (const auto& jump : jumps_) {
            require(jump.pre.size() == values_.rows() && jump.post.size() == values_.rows(),
                    "CadlagPath: jump dimension mismatch");
            require(jump.time > last || (jump_samples_.empty() && jump.time > 0.0),
                    "CadlagPath: jump times must be strictly increasing in (0, T]");
            require(jump.time <= horizon_, "CadlagPath: jump after horizon");
            auto it = std::lower_bound(times_.begin(), times_.end(), jump.time);
            require(it != times_.end() && *it == jump.time, "CadlagPath: jump time must be a sample time");
            const auto k = static_cast<std::size_t>(it - times_.begin());
            require(jump.post == values_.col(static_cast<Eigen::Index>(k)),
                    "CadlagPath: jump post-value must equal the sampled value");
            require(jump.post != jump.pre, "CadlagPath: a jump must change the value");
            jump_samples_.push_back(k);
            last = jump.time;
        }
    }

    void build_piecewise_integrals() {
        Matrix cumulative(values_.rows(), values_.cols());
        cumulative.col(0).setZero();
        for (Eigen::Index k = 1; k < values_.cols(); ++k) {
            const auto dt = times_[static_cast<std::size_t>(k)] - times_[static_cast<std::size_t>(k - 1)];
            cumulative.col(k) = cumulative.col(k - 1) + values_.col(k - 1) * dt;
        }
        integrals_ = std::move(cumulative);
    }

    double horizon_;
    std::vector<double> times_;
    Matrix values_;
    std::vector<JumpEvent> jumps_;
    std::vector<std::size_t> jump_samples_;
    std::optional<Matrix> integrals_;
    bool exact_integrals_ = false;
};

// ---------------------------------------------------------------------------
// Point queries

/// p_t(f) = f(t): the value at the greatest sample time <= t.
inline Vector evaluate(const CadlagPath& f, double t) { return f.value(f.sample_index(t)); }

/// f(t-). At a recorded jump this is the stored pre-value; at any other sample
/// boundary it is the previous sample; strictly between samples it is f(t).
inline Vector left_limit(const CadlagPath& f, double t) {
    const auto k = f.sample_index(t);
    if (f.time(k) == t && k > 0) {
        if (auto j = f.jump_at_sample(k)) {
            return f.jumps()[*j].pre;
        }
        return f.value(k - 1);
    }
    return f.value(k);
}

/// S(f, t) = int_0^t f(s) ds.
inline Vector integrate(const CadlagPath& f, double t) {
    const auto k = f.sample_index(t);
    return f.integral_at_sample(k) + f.value(k) * (t - f.time(k));
}

// ---------------------------------------------------------------------------
// Grids and simple constructors

/// 0, T/n, ..., T with n = round(T / h); the last point is exactly T.
inline std::vector<double> uniform_grid(double horizon, double step) {
    require(horizon > 0.0 && step > 0.0 && step <= horizon, "uniform_grid: need 0 < h <= T");
    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(horizon / step)));
    std::vector<double> grid(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        grid[i] = horizon * static_cast<double>(i) / static_cast<double>(n);
    }
    grid.back() = horizon;
    return grid;
}

/// Sorted union of two time lists (exact duplicates collapse).
inline std::vector<double> merge_times(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline CadlagPath zero_path(int dimension, std::vector<double> times) {
    const double horizon = times.back();
    Matrix values = Matrix::Zero(dimension, static_cast<Eigen::Index>(times.size()));
    return CadlagPath(horizon, std::move(times), std::move(values));
}

inline CadlagPath constant_path(const Vector& c, std::vector<double> times) {
    const double horizon = times.back();
    Matrix values = c.replicate(1, static_cast<Eigen::Index>(times.size()));
    return CadlagPath(horizon, std::move(times), std::move(values));
}

/// f(t) = height * 1{t >= at}, sampled on {0, at, T}. Requires 0 < at <= T.
inline CadlagPath step_path(const Vector& height, double at, double horizon) {
    require(at > 0.0 && at <= horizon, "step_path: step time must lie in (0, T]");
    std::vector<double> times = at < horizon ? std::vector<double>{0.0, at, horizon} : std::vector<double>{0.0, at};
    Matrix values = Matrix::Zero(height.size(), static_cast<Eigen::Index>(times.size()));
    for (Eigen::Index k = 1; k < values.cols(); ++k) {
        values.col(k) = height;
    }
    std::vector<JumpEvent> jumps{{at, Vector::Zero(height.size()), height}};
    return CadlagPath(horizon, std::move(times), std::move(values), std::move(jumps));
}

/// Keeps only the listed sample indices (sorted, including 0, the last sample
/// and every jump sample). An attached integral channel stays exact.
inline CadlagPath subsample(const CadlagPath& f, std::span<const std::size_t> keep) {
    require(!keep.empty() && keep.front() == 0 && keep.back() == f.sample_count() - 1,
            "subsample: must keep the first and last samples");
    std::vector<double> times;
    times.reserve(keep.size());
    Matrix values(f.dimension(), static_cast<Eigen::Index>(keep.size()));
    Matrix integrals(f.dimension(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        times.push_back(f.time(keep[i]));
        values.col(static_cast<Eigen::Index>(i)) = f.value(keep[i]);
        integrals.col(static_cast<Eigen::Index>(i)) = f.integral_at_sample(keep[i]);
    }
    std::optional<Matrix> channel;
    if (f.has_exact_integrals()) {
        channel = std::move(integrals);
    }
    return CadlagPath(f.horizon(), std::move(times), std::move(values), f.jumps(), std::move(channel));
}

/// Keeps the samples on multiples of h together with 0, T and every jump sample.
inline CadlagPath coarsen(const CadlagPath& f, double h) {
    if (!(h > 0.0)) throw ContractViolation("coarsen: h must be positive");
    std::vector<std::size_t> keep;
    for (std::size_t k = 0; k < f.sample_count(); ++k) {
        const double ratio = f.time(k) / h;
        const bool on_grid = std::abs(ratio - std::round(ratio)) < 1e-9;
        if (k == 0 || k + 1 == f.sample_count() || on_grid || f.jump_at_sample(k)) keep.push_back(k);
    }
    return subsample(f, keep);
}

/// The piece of f on [t0, T] re-expressed on [0, T - t0] (values unchanged).
/// t0 must be a sample time strictly before T.
inline CadlagPath shift_start(const CadlagPath& f, double t0) {
    const auto k0 = f.sample_index(t0);
    require(f.time(k0) == t0 && k0 + 1 < f.sample_count(), "shift_start: t0 must be an interior sample time");
    std::vector<double> times;
    const auto n = f.sample_count() - k0;
    times.reserve(n);
    for (std::size_t k = k0; k < f.sample_count(); ++k) {
        times.push_back(k == k0 ? 0.0 : f.time(k) - t0);
    }
    const double horizon = times.back();
    Matrix values = f.values().rightCols(static_cast<Eigen::Index>(n));
    std::vector<JumpEvent> jumps;
    for (const auto& jump : f.jumps()) {
        if (jump.time > t0) {
            jumps.push_back({jump.time - t0, jump.pre, jump.post});
        }
    }
    return CadlagPath(horizon, std::move(times), std::move(values), std::move(jumps));
}

/// The piece of f on [0, t1]; t1 must be a sample time.
inline CadlagPath truncate_at(const CadlagPath& f, double t1) {
    const auto k1 = f.sample_index(t1);
    require(f.time(k1) == t1 && k1 > 0, "truncate_at: t1 must be a positive sample time");
    std::vector<double> times(f.times().begin(), f.times().begin() + static_cast<std::ptrdiff_t>(k1 + 1));
    Matrix values = f.values().leftCols(static_cast<Eigen::Index>(k1 + 1));
    std::vector<JumpEvent> jumps;
    for (const auto& jump : f.jumps()) {
        if (jump.time <= t1) {
            jumps.push_back(jump);
        }
    }
    std::optional<Matrix> channel;
    if (f.has_exact_integrals()) {
        channel = f.integrals().leftCols(static_cast<Eigen::Index>(k1 + 1));
    }
    return CadlagPath(t1, std::move(times), std::move(values), std::move(jumps), std::move(channel));
}

// ---------------------------------------------------------------------------
// Distances

inline void require_comparable(const CadlagPath& f, const CadlagPath& g, const char* what) {
    if (f.dimension() != g.dimension() || f.horizon() != g.horizon()) {
        throw ContractViolation(std::string(what) + ": paths must share dimension and horizon");
    }
}

/// sup over the union of both sample grids of |f(t) - g(t)|.
inline double uniform_distance(const CadlagPath& f, const CadlagPath& g) {
    require_comparable(f, g, "uniform_distance");
    double best = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    const auto& tf = f.times();
    const auto& tg = g.times();
    // Both grids start at 0; walk the merged grid keeping the active sample of each.
    while (true) {
        best = std::max(best, (f.values().col(static_cast<Eigen::Index>(i)) -
                               g.values().col(static_cast<Eigen::Index>(j))).norm());
        const double next_f = i + 1 < tf.size() ? tf[i + 1] : std::numeric_limits<double>::infinity();
        const double next_g = j + 1 < tg.size() ? tg[j + 1] : std::numeric_limits<double>::infinity();
        const double next = std::min(next_f, next_g);
        if (!std::isfinite(next)) {
            break;
        }
        if (next_f == next) ++i;
        if (next_g == next) ++j;
    }
    return best;
}

/// Strictly increasing piecewise-linear bijection of [0, T] through the
/// breakpoints (u_i, phi(u_i)).
class TimeChange {
public:
    TimeChange(std::vector<double> knots, std::vector<double> images)
        : knots_(std::move(knots)), images_(std::move(images)) {
        require(knots_.size() == images_.size() && knots_.size() >= 2, "TimeChange: need matching breakpoints");
        require(knots_.front() == 0.0 && images_.front() == 0.0, "TimeChange: phi(0) must be 0");
        require(knots_.back() == images_.back(), "TimeChange: phi(T) must be T");
        for (std::size_t i = 1; i < knots_.size(); ++i) {
            require(knots_[i] > knots_[i - 1] && images_[i] > images_[i - 1], "TimeChange: must be strictly increasing");
        }
    }

    static TimeChange identity(double horizon) { return TimeChange({0.0, horizon}, {0.0, horizon}); }

    [[nodiscard]] double horizon() const noexcept { return knots_.back(); }

    double operator()(double t) const {
        if (t <= 0.0) return 0.0;
        if (t >= knots_.back()) return images_.back();
        auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
        const auto i = static_cast<std::size_t>(it - knots_.begin());
        const double w = (t - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
        return images_[i - 1] + w * (images_[i] - images_[i - 1]);
    }

    /// sup_t |phi(t) - t|, attained at a breakpoint.
    [[nodiscard]] double max_displacement() const {
        double best = 0.0;
        for (std::size_t i = 0; i < knots_.size(); ++i) {
            best = std::max(best, std::abs(images_[i] - knots_[i]));
        }
        return best;
    }

private:
    std::vector<double> knots_;
    std::vector<double> images_;
};

namespace detail {

struct ChangePoints {
    std::vector<double> times;   // a_1 < ... < a_n
    std::vector<Vector> levels;  // level 0 .. n
};

inline ChangePoints change_points(const CadlagPath& f) {
    ChangePoints out;
    out.levels.push_back(f.value(0));
    for (std::size_t k = 1; k < f.sample_count(); ++k) {
        if (f.values().col(static_cast<Eigen::Index>(k)) != f.values().col(static_cast<Eigen::Index>(k - 1))) {
            out.times.push_back(f.time(k));
            out.levels.push_back(f.value(k));
        }
    }
    return out;
}

}  // namespace detail

/// Skorohod J1 distance
///   inf_phi max{ sup_t |phi(t) - t|, sup_t |f(phi(t)) - g(t)| }
/// for piecewise-constant paths.
///
/// f o phi and g only change value at phi^{-1}(a_i) and b_j, the change points
/// of f and g, so the value term depends only on how the two change-point
/// sequences interleave and which of them coincide. Each interleaving is a
/// monotone lattice path from (0,0) to (n_f, n_g): a diagonal step matches a_i
/// with b_j (time cost |a_i - b_j|), a horizontal step places a_i alone
/// inside the gap between consecutive b's (time cost = distance from a_i to
/// that gap), a vertical step passes b_j with no constraint. Visiting state
/// (i, j) costs |F_i - G_j|. The infimum is the bottleneck shortest path,
/// solved by dynamic programming in O(n_f n_g).
inline double skorohod_distance(const CadlagPath& f, const CadlagPath& g) {
    require_comparable(f, g, "skorohod_distance");
    const double horizon = f.horizon();
    const auto cf = detail::change_points(f);
    const auto cg = detail::change_points(g);
    const std::size_t nf = cf.times.size();
    const std::size_t ng = cg.times.size();
    const auto a = [&](std::size_t i) { return cf.times[i - 1]; };  // 1-based
    const auto b = [&](std::size_t j) { return cg.times[j - 1]; };
    const auto node = [&](std::size_t i, std::size_t j) { return (cf.levels[i] - cg.levels[j]).norm(); };
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> best((nf + 1) * (ng + 1), inf);
    const auto at = [&](std::size_t i, std::size_t j) -> double& { return best[i * (ng + 1) + j]; };
    at(0, 0) = node(0, 0);
    for (std::size_t i = 0; i <= nf; ++i) {
        for (std::size_t j = 0; j <= ng; ++j) {
            if (i == 0 && j == 0) continue;
            double candidate = inf;
            if (i > 0) {
                // a_i alone, after b_j and before b_{j+1}; nothing fits after a change at T.
                const bool after_g_end = j > 0 && b(j) == horizon;
                const bool at_end = a(i) == horizon;
                if (!after_g_end && (!at_end || j == ng)) {
                    const double lower = j > 0 ? b(j) : 0.0;
                    const double upper = j < ng ? b(j + 1) : horizon;
                    const double edge = std::max({0.0, lower - a(i), a(i) - upper});
                    candidate = std::min(candidate, std::max(at(i - 1, j), edge));
                }
            }
            if (j > 0) {
                const bool after_f_end = i > 0 && a(i) == horizon;
                const bool at_end = b(j) == horizon;
                if (!after_f_end && (!at_end || i == nf)) {
                    candidate = std::min(candidate, at(i, j - 1));
                }
            }
            if (i > 0 && j > 0 && ((a(i) == horizon) == (b(j) == horizon))) {
                candidate = std::min(candidate, std::max(at(i - 1, j - 1), std::abs(a(i) - b(j))));
            }
            at(i, j) = std::max(candidate, node(i, j));
        }
    }
    return at(nf, ng);
}

}  // namespace levyou
