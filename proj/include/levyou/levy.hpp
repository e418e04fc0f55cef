#pragma once

// R^d-valued Levy processes through their Levy-Ito parts
//
//   L_t = b t + W_Q(t) + Z_t,
//   Z_t = sum of jumps with |x| >= 1 + compensated sum of jumps with |x| < 1.
//
// The jump part is a compound Poisson process (finite activity) optionally
// superposed with a radial power-law family mu(dr) = c r^{-1-alpha} dr
// truncated to eps <= r < 1, which stands in for an infinite-activity measure.

#include "levyou/jump_calculus.hpp"
#include "levyou/paths.hpp"
#include "levyou/rng.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <numbers>
#include <optional>
#include <random>
#include <variant>

namespace levyou {

/// Radius separating large (uncompensated) from small (compensated) jumps.
inline constexpr double kLargeJumpCutoff = 1.0;

/// Jump sizes ~ N(0, scale^2 I).
struct GaussianJumps {
    double scale = 1.0;
};

/// Jump sizes drawn from finitely many atoms.
struct DiscreteJumps {
    std::vector<Vector> atoms;
    std::vector<double> weights;  // normalized on validation
};

using JumpSizes = std::variant<std::monostate, GaussianJumps, DiscreteJumps>;

/// Radial intensity c r^{-1-alpha} dr on [epsilon, cutoff) with directions
/// uniform on the sphere. In d = 1 `one_sided` puts all mass on x > 0
/// (otherwise half on each side).
struct PowerLawShells {
    double coefficient = 1.0;
    double alpha = 0.5;
    double epsilon = 0.1;
    bool one_sided = false;
};

struct JumpSpec {
    int dimension = 1;
    double rate = 0.0;  // lambda, events per unit time
    JumpSizes sizes;
    std::optional<PowerLawShells> small_jumps;
    double cutoff = kLargeJumpCutoff;

    static JumpSpec none(int dimension) { return JumpSpec{dimension, 0.0, std::monostate{}, std::nullopt}; }

    static JumpSpec gaussian(int dimension, double rate, double scale) {
        return JumpSpec{dimension, rate, GaussianJumps{scale}, std::nullopt};
    }

    [[nodiscard]] bool has_jumps() const {
        return (rate > 0.0 && !std::holds_alternative<std::monostate>(sizes)) || small_jumps.has_value();
    }

    void validate() const {
        require(dimension >= 1, "JumpSpec: dimension must be positive");
        require(rate >= 0.0 && std::isfinite(rate), "JumpSpec: rate must be finite and >= 0");
        require(cutoff > 0.0 && std::isfinite(cutoff), "JumpSpec: cutoff must be positive");
        if (rate > 0.0) {
            require(!std::holds_alternative<std::monostate>(sizes), "JumpSpec: positive rate needs a jump-size law");
        }
        if (const auto* g = std::get_if<GaussianJumps>(&sizes)) {
            require(g->scale > 0.0 && std::isfinite(g->scale), "JumpSpec: gaussian scale must be positive");
        }
        if (const auto* disc = std::get_if<DiscreteJumps>(&sizes)) {
            require(!disc->atoms.empty() && disc->atoms.size() == disc->weights.size(),
                    "JumpSpec: discrete law needs one weight per atom");
            for (std::size_t i = 0; i < disc->atoms.size(); ++i) {
                require(disc->atoms[i].size() == dimension, "JumpSpec: atom dimension mismatch");
                require(disc->atoms[i].norm() > 0.0, "JumpSpec: atoms must be non-zero");
                require(disc->weights[i] >= 0.0, "JumpSpec: weights must be non-negative");
            }
            double total = 0.0;
            for (double w : disc->weights) total += w;
            require(total > 0.0, "JumpSpec: weights must not all vanish");
        }
        if (small_jumps) {
            const auto& s = *small_jumps;
            // int min(1, |x|^2) mu(dx) < infinity  <=>  alpha < 2.
            require(s.alpha > 0.0 && s.alpha < 2.0, "JumpSpec: small-jump alpha must lie in (0, 2)");
            require(s.coefficient > 0.0, "JumpSpec: small-jump coefficient must be positive");
            require(s.epsilon > 0.0 && s.epsilon < cutoff, "JumpSpec: truncation epsilon must lie in (0, cutoff)");
            require(!s.one_sided || dimension == 1, "JumpSpec: one-sided small jumps need d = 1");
        }
    }

    [[nodiscard]] CompensatorSpec compensator() const;

    /// int_{0 < |x| < cutoff} u mu(du): the drift removed to compensate small jumps.
    [[nodiscard]] Vector drift_compensation() const;
};

namespace detail {

inline double std_normal_pdf(double x) {
    if (!std::isfinite(x)) return 0.0;
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// x phi(x), with the limits at +-inf.
inline double x_pdf(double x) { return std::isfinite(x) ? x * std_normal_pdf(x) : 0.0; }

/// P(|N(0, s^2 I_d)| < r).
inline double chi_cdf(int d, double scale, double r) {
    if (r <= 0.0) return 0.0;
    if (!std::isfinite(r)) return 1.0;
    return boost::math::gamma_p(0.5 * d, r * r / (2.0 * scale * scale));
}

/// E[|J|^2 ; |J| < r] for J ~ N(0, s^2 I_d).
inline double chi_second_moment(int d, double scale, double r) {
    if (r <= 0.0) return 0.0;
    const double full = d * scale * scale;
    if (!std::isfinite(r)) return full;
    return full * boost::math::gamma_p(0.5 * d + 1.0, r * r / (2.0 * scale * scale));
}

inline CompensatorSpec::Moments gaussian_moments(int d, double rate, double scale, const BorelSet& e) {
    CompensatorSpec::Moments m{0.0, Vector::Zero(d), 0.0};
    if (const auto* ann = e.as_annulus()) {
        // Rotation invariance makes the first moment vanish on every annulus.
        m.mass = rate * (chi_cdf(d, scale, ann->outer) - chi_cdf(d, scale, ann->inner));
        m.second = rate * (chi_second_moment(d, scale, ann->outer) - chi_second_moment(d, scale, ann->inner));
        return m;
    }
    const auto* box = e.as_box();
    require(box != nullptr && box->lower.size() == d, "gaussian compensator: unsupported set");
    std::vector<double> prob(static_cast<std::size_t>(d));
    std::vector<double> first(static_cast<std::size_t>(d));
    std::vector<double> second(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        const double lo = box->lower[i] / scale;
        const double hi = box->upper[i] / scale;
        prob[static_cast<std::size_t>(i)] = std_normal_cdf(hi) - std_normal_cdf(lo);
        first[static_cast<std::size_t>(i)] = scale * (std_normal_pdf(lo) - std_normal_pdf(hi));
        second[static_cast<std::size_t>(i)] = scale * scale * (prob[static_cast<std::size_t>(i)] + x_pdf(lo) - x_pdf(hi));
    }
    double mass = 1.0;
    for (double p : prob) mass *= p;
    m.mass = rate * mass;
    for (int i = 0; i < d; ++i) {
        double others = 1.0;
        for (int j = 0; j < d; ++j) {
            if (j != i) others *= prob[static_cast<std::size_t>(j)];
        }
        m.first[i] = rate * first[static_cast<std::size_t>(i)] * others;
        m.second += rate * second[static_cast<std::size_t>(i)] * others;
    }
    return m;
}

inline CompensatorSpec::Moments discrete_moments(int d, double rate, const DiscreteJumps& law, const BorelSet& e) {
    CompensatorSpec::Moments m{0.0, Vector::Zero(d), 0.0};
    double total = 0.0;
    for (double w : law.weights) total += w;
    for (std::size_t i = 0; i < law.atoms.size(); ++i) {
        if (e.contains(law.atoms[i])) {
            const double w = rate * law.weights[i] / total;
            m.mass += w;
            m.first += w * law.atoms[i];
            m.second += w * law.atoms[i].squaredNorm();
        }
    }
    return m;
}

/// c * int_lo^hi r^p dr.
inline double power_integral(double c, double p, double lo, double hi) {
    if (hi <= lo) return 0.0;
    if (std::abs(p + 1.0) < 1e-15) return c * std::log(hi / lo);
    return c * (std::pow(hi, p + 1.0) - std::pow(lo, p + 1.0)) / (p + 1.0);
}

inline CompensatorSpec::Moments power_moments(int d, const PowerLawShells& s, double cutoff, const BorelSet& e) {
    CompensatorSpec::Moments m{0.0, Vector::Zero(d), 0.0};
    const double c = s.coefficient;
    const double a = s.alpha;
    auto radial = [&](double lo, double hi, double weight, double sign) {
        lo = std::max(lo, s.epsilon);
        hi = std::min(hi, cutoff);
        if (hi <= lo) return;
        m.mass += weight * power_integral(c, -1.0 - a, lo, hi);
        m.second += weight * power_integral(c, 1.0 - a, lo, hi);
        if (sign != 0.0) m.first[0] += sign * weight * power_integral(c, -a, lo, hi);
    };
    if (const auto* ann = e.as_annulus()) {
        if (s.one_sided) {
            radial(ann->inner, ann->outer, 1.0, 1.0);
        } else {
            // Directions are symmetric, so the first moment vanishes.
            radial(ann->inner, ann->outer, 1.0, 0.0);
        }
        return m;
    }
    const auto* box = e.as_box();
    require(box != nullptr && d == 1, "power-law compensator: boxes are supported in d = 1 only");
    const double lo = box->lower[0];
    const double hi = box->upper[0];
    const double side = s.one_sided ? 1.0 : 0.5;
    // Positive half-line: radii in [max(lo, 0), hi).
    if (hi > 0.0) radial(std::max(lo, 0.0), hi, side, 1.0);
    // Negative half-line: x in [lo, min(hi, 0)) <=> r in (-min(hi,0), -lo].
    if (!s.one_sided && lo < 0.0) radial(-std::min(hi, 0.0), -lo, side, -1.0);
    return m;
}

}  // namespace detail

inline CompensatorSpec JumpSpec::compensator() const {
    validate();
    JumpSpec self = *this;
    return CompensatorSpec(dimension, [self](const BorelSet& e) {
        CompensatorSpec::Moments total{0.0, Vector::Zero(self.dimension), 0.0};
        auto add = [&](const CompensatorSpec::Moments& m) {
            total.mass += m.mass;
            total.first += m.first;
            total.second += m.second;
        };
        if (self.rate > 0.0) {
            if (const auto* g = std::get_if<GaussianJumps>(&self.sizes)) {
                add(detail::gaussian_moments(self.dimension, self.rate, g->scale, e));
            } else if (const auto* disc = std::get_if<DiscreteJumps>(&self.sizes)) {
                add(detail::discrete_moments(self.dimension, self.rate, *disc, e));
            }
        }
        if (self.small_jumps) {
            add(detail::power_moments(self.dimension, *self.small_jumps, self.cutoff, e));
        }
        return total;
    });
}

inline Vector JumpSpec::drift_compensation() const {
    // {0 < |x| < cutoff}; the point 0 carries no mass for any supported law.
    return compensator().mean_jump(Annulus{0.0, cutoff});
}

// ---------------------------------------------------------------------------

/// Q together with its symmetric square root.
class WienerCovariance {
public:
    explicit WienerCovariance(Matrix q) : q_(std::move(q)) {
        require(q_.rows() == q_.cols() && q_.rows() >= 1, "WienerCovariance: Q must be square");
        require(q_.allFinite(), "WienerCovariance: Q must be finite");
        const double scale = std::max(1.0, q_.cwiseAbs().maxCoeff());
        require((q_ - q_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, "WienerCovariance: Q must be symmetric");
        if (q_.isZero(0.0)) {
            eigenvalues_ = Vector::Zero(q_.rows());
            eigenvectors_ = Matrix::Identity(q_.rows(), q_.cols());
            factor_ = Matrix::Zero(q_.rows(), q_.cols());
            return;
        }
        Eigen::SelfAdjointEigenSolver<Matrix> eig(q_);
        eigenvalues_ = eig.eigenvalues();
        eigenvectors_ = eig.eigenvectors();
        for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
            if (eigenvalues_[i] < -1e-10) {
                throw ContractViolation("WienerCovariance: Q is not positive semidefinite (eigenvalue " +
                                        format_double(eigenvalues_[i]) + ")");
            }
            eigenvalues_[i] = std::max(0.0, eigenvalues_[i]);
        }
        factor_ = eigenvectors_ * eigenvalues_.cwiseSqrt().asDiagonal() * eigenvectors_.transpose();
    }

    static WienerCovariance zero(int d) { return WienerCovariance(Matrix::Zero(d, d)); }
    static WienerCovariance identity(int d) { return WienerCovariance(Matrix::Identity(d, d)); }

    [[nodiscard]] int dimension() const noexcept { return static_cast<int>(q_.rows()); }
    [[nodiscard]] const Matrix& matrix() const noexcept { return q_; }
    /// Symmetric F with F F^T = Q.
    [[nodiscard]] const Matrix& factor() const noexcept { return factor_; }
    [[nodiscard]] const Vector& eigenvalues() const noexcept { return eigenvalues_; }
    [[nodiscard]] double min_eigenvalue() const { return eigenvalues_.minCoeff(); }
    [[nodiscard]] bool is_zero() const { return q_.isZero(0.0); }

private:
    Matrix q_;
    Vector eigenvalues_;
    Matrix eigenvectors_;
    Matrix factor_;
};

struct LevyTriplet {
    Vector drift;  // b
    WienerCovariance covariance;
    JumpSpec jumps;

    [[nodiscard]] int dimension() const { return static_cast<int>(drift.size()); }

    void validate() const {
        require(drift.size() >= 1 && drift.allFinite(), "LevyTriplet: drift must be finite");
        require(covariance.dimension() == dimension() && jumps.dimension == dimension(),
                "LevyTriplet: component dimensions differ");
        jumps.validate();
    }

    [[nodiscard]] bool pure_jump() const { return drift.isZero(0.0) && covariance.is_zero(); }
};

// ---------------------------------------------------------------------------
// Sampling

/// W on the given grid; increments use the indexed normals of `rng`.
inline CadlagPath sample_wiener(const WienerCovariance& q, std::vector<double> grid, const CounterRng& rng) {
    require(grid.size() >= 2 && grid.front() == 0.0, "sample_wiener: grid must start at 0");
    const int d = q.dimension();
    const double horizon = grid.back();
    Matrix values = Matrix::Zero(d, static_cast<Eigen::Index>(grid.size()));
    if (!q.is_zero()) {
        Vector z(d);
        for (std::size_t k = 1; k < grid.size(); ++k) {
            for (int i = 0; i < d; ++i) z[i] = rng.normal_at((k - 1) * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(i));
            const double dt = grid[k] - grid[k - 1];
            values.col(static_cast<Eigen::Index>(k)) =
                values.col(static_cast<Eigen::Index>(k - 1)) + std::sqrt(dt) * (q.factor() * z);
        }
    }
    return CadlagPath(horizon, std::move(grid), std::move(values));
}

struct JumpArrival {
    double time;
    Vector size;
};

namespace detail {

inline Vector uniform_direction(int d, CounterRng& rng) {
    if (d == 1) return Vector::Constant(1, rng.uniform() < 0.5 ? -1.0 : 1.0);
    Vector v(d);
    do {
        for (int i = 0; i < d; ++i) v[i] = rng.normal();
    } while (v.norm() == 0.0);
    return v / v.norm();
}

}  // namespace detail

/// Jump arrivals on (0, T], sorted by time.
inline std::vector<JumpArrival> sample_jump_arrivals(const JumpSpec& spec, double horizon, CounterRng rng) {
    spec.validate();
    std::vector<JumpArrival> arrivals;
    if (spec.rate > 0.0) {
        std::poisson_distribution<long> count(spec.rate * horizon);
        const long n = count(rng);
        for (long i = 0; i < n; ++i) {
            JumpArrival a{horizon * rng.uniform(), Vector(spec.dimension)};
            if (const auto* g = std::get_if<GaussianJumps>(&spec.sizes)) {
                for (int k = 0; k < spec.dimension; ++k) a.size[k] = g->scale * rng.normal();
            } else if (const auto* disc = std::get_if<DiscreteJumps>(&spec.sizes)) {
                std::discrete_distribution<std::size_t> pick(disc->weights.begin(), disc->weights.end());
                a.size = disc->atoms[pick(rng)];
            }
            arrivals.push_back(std::move(a));
        }
    }
    if (spec.small_jumps) {
        const auto& s = *spec.small_jumps;
        const double lo = std::pow(s.epsilon, -s.alpha);
        const double hi = std::pow(spec.cutoff, -s.alpha);
        const double total = s.coefficient * (lo - hi) / s.alpha;
        std::poisson_distribution<long> count(total * horizon);
        const long n = count(rng);
        for (long i = 0; i < n; ++i) {
            const double time = horizon * rng.uniform();
            // Inverse CDF of the radial law on [eps, cutoff).
            const double r = std::pow(lo - rng.uniform() * (lo - hi), -1.0 / s.alpha);
            Vector direction = s.one_sided ? Vector::Ones(1) : detail::uniform_direction(spec.dimension, rng);
            arrivals.push_back({time, r * direction});
        }
    }
    std::sort(arrivals.begin(), arrivals.end(), [](const auto& x, const auto& y) { return x.time < y.time; });
    // Simultaneous arrivals (probability zero, but possible in floating point) merge.
    std::vector<JumpArrival> merged;
    for (auto& a : arrivals) {
        if (!merged.empty() && merged.back().time == a.time) {
            merged.back().size += a.size;
        } else {
            merged.push_back(std::move(a));
        }
    }
    std::erase_if(merged, [](const JumpArrival& a) { return a.size.isZero(0.0); });
    return merged;
}

/// Z on the grid refined by the jump times:
///   Z_t = sum_{s <= t} Delta Z(s) - t * int_{|x| < 1} u mu(du).
inline CadlagPath jump_path(const JumpSpec& spec, std::span<const double> grid, const std::vector<JumpArrival>& arrivals) {
    require(grid.size() >= 2 && grid.front() == 0.0, "jump_path: grid must start at 0");
    const double horizon = grid.back();
    std::vector<double> jump_times;
    jump_times.reserve(arrivals.size());
    for (const auto& a : arrivals) {
        require(a.time > 0.0 && a.time <= horizon, "jump_path: arrival outside (0, T]");
        jump_times.push_back(a.time);
    }
    auto times = merge_times(grid, jump_times);
    const Vector drift = spec.has_jumps() ? spec.drift_compensation() : Vector::Zero(spec.dimension);
    Matrix values(spec.dimension, static_cast<Eigen::Index>(times.size()));
    std::vector<JumpEvent> jumps;
    Vector running = Vector::Zero(spec.dimension);
    std::size_t next = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        if (next < arrivals.size() && arrivals[next].time == t) {
            const Vector pre = running - t * drift;
            const Vector post = pre + arrivals[next].size;
            running += arrivals[next].size;
            values.col(static_cast<Eigen::Index>(k)) = post;
            if (post != pre) jumps.push_back({t, pre, post});
            ++next;
        } else {
            values.col(static_cast<Eigen::Index>(k)) = running - t * drift;
        }
    }
    return CadlagPath(horizon, std::move(times), std::move(values), std::move(jumps));
}

inline CadlagPath sample_jump_part(const JumpSpec& spec, std::span<const double> grid, const CounterRng& rng) {
    return jump_path(spec, grid, sample_jump_arrivals(spec, grid.back(), rng));
}

/// L = b t + W + Z on the union of both grids. W must be jump-free; the jump
/// list is Z's, shifted by the continuous part at each jump time.
inline CadlagPath compose_levy(const Vector& b, const CadlagPath& w, const CadlagPath& z) {
    require_comparable(w, z, "compose_levy");
    require(b.size() == w.dimension(), "compose_levy: drift dimension mismatch");
    require(w.jumps().empty(), "compose_levy: the continuous part must not carry jumps");
    auto times = merge_times(w.times(), z.times());
    Matrix values(w.dimension(), static_cast<Eigen::Index>(times.size()));
    std::vector<JumpEvent> jumps;
    jumps.reserve(z.jumps().size());
    std::size_t next = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        const Vector continuous = b * t + evaluate(w, t);
        const Vector jump_level = evaluate(z, t);
        values.col(static_cast<Eigen::Index>(k)) = continuous + jump_level;
        if (next < z.jumps().size() && z.jumps()[next].time == t) {
            const auto& zj = z.jumps()[next];
            const Vector pre = continuous + zj.pre;
            const Vector post = continuous + zj.post;
            if (post != pre) jumps.push_back({t, pre, post});
            ++next;
        }
    }
    return CadlagPath(w.horizon(), std::move(times), std::move(values), std::move(jumps));
}

struct LevyParts {
    CadlagPath wiener;
    CadlagPath jumps;
    CadlagPath levy;
};

/// Samples Z first (so the grid contains the jump times), then W on that grid,
/// each from its own stream of (seed, replica).
inline LevyParts sample_levy(const LevyTriplet& triplet, std::span<const double> grid, std::uint64_t seed,
                             std::uint64_t replica) {
    triplet.validate();
    auto z = sample_jump_part(triplet.jumps, grid, CounterRng(seed, replica, StreamRole::jumps));
    auto w = sample_wiener(triplet.covariance, z.times(), CounterRng(seed, replica, StreamRole::wiener));
    auto l = compose_levy(triplet.drift, w, z);
    return {std::move(w), std::move(z), std::move(l)};
}

// ---------------------------------------------------------------------------
// Empirical Levy-Ito split of a single path

struct Decomposition {
    Vector trend;           // slope of f minus its raw jump sum, (f(T) - J(T)) / T
    CadlagPath continuous;  // f - trend * t - J, jump-free
    CadlagPath jumps;       // J(t) = sum_{s <= t} Delta f(s)
};

inline Decomposition decompose(const CadlagPath& f) {
    const int d = f.dimension();
    Matrix raw(d, static_cast<Eigen::Index>(f.sample_count()));
    std::vector<JumpEvent> jump_events;
    jump_events.reserve(f.jumps().size());
    Vector running = Vector::Zero(d);
    std::size_t next = 0;
    for (std::size_t k = 0; k < f.sample_count(); ++k) {
        if (next < f.jumps().size() && f.jump_sample(next) == k) {
            const Vector pre = running;
            running += f.jumps()[next].size();
            if (running != pre) jump_events.push_back({f.time(k), pre, running});
            ++next;
        }
        raw.col(static_cast<Eigen::Index>(k)) = running;
    }
    const double horizon = f.horizon();
    const Eigen::Index last = raw.cols() - 1;
    Vector trend = (f.values().col(last) - raw.col(last)) / horizon;
    Matrix continuous(d, raw.cols());
    for (Eigen::Index k = 0; k < raw.cols(); ++k) {
        continuous.col(k) = f.values().col(k) - trend * f.time(static_cast<std::size_t>(k)) - raw.col(k);
    }
    return {std::move(trend), CadlagPath(horizon, f.times(), std::move(continuous)),
            CadlagPath(horizon, f.times(), std::move(raw), std::move(jump_events))};
}

inline CadlagPath recompose(const Decomposition& parts) { return compose_levy(parts.trend, parts.continuous, parts.jumps); }

// ---------------------------------------------------------------------------
// Small-jump convergence

struct ProbeRow {
    double outer_radius = 0.0;  // eps_{n-1} (the cutoff for the first row)
    double inner_radius = 0.0;  // eps_n
    double empirical_variance = 0.0;
    double analytic_variance = 0.0;  // t * int_{eps_n <= |x| < eps_{n-1}} |x|^2 mu(dx)
    double relative_error = 0.0;
    double max_abs_difference = 0.0;
};

/// Variance of Z2_{E_n^c}(L, t) - Z2_{E_{n-1}^c}(L, t) over replicas, for a
/// non-increasing radius sequence eps_1 >= eps_2 >= ... (eps_0 = cutoff).
inline std::vector<ProbeRow> small_jump_convergence_probe(const JumpSpec& spec, double t, std::span<const double> radii,
                                                          std::size_t replicas, std::uint64_t seed) {
    spec.validate();
    require(spec.has_jumps(), "convergence probe: the jump specification has no jumps");
    require(t > 0.0, "convergence probe: t must be positive");
    require(replicas >= 2, "convergence probe: need at least two replicas");
    require(!radii.empty(), "convergence probe: need at least one radius");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        require(radii[i] > 0.0 && radii[i] <= spec.cutoff, "convergence probe: radii must lie in (0, cutoff]");
        require(i == 0 || radii[i] <= radii[i - 1], "convergence probe: radii must be non-increasing");
    }
    if (spec.small_jumps) {
        require(spec.small_jumps->epsilon <= radii.back(),
                "convergence probe: simulation truncation must not exceed the smallest probed radius");
    }
    const auto mu = spec.compensator();
    const std::vector<double> grid{0.0, t};
    const std::size_t n = radii.size();

    auto shell_z2 = [&](const CadlagPath& z, double eps) -> Vector {
        if (eps >= spec.cutoff) return Vector::Zero(spec.dimension);
        return z2(BorelSet::unit_ball_shell(eps, spec.cutoff), mu, z, t);
    };

    std::vector<Vector> sum(n, Vector::Zero(spec.dimension));
    std::vector<double> sum_sq(n, 0.0);
    std::vector<double> max_abs(n, 0.0);
    for (std::size_t r = 0; r < replicas; ++r) {
        const auto z = sample_jump_part(spec, grid, CounterRng(seed, r, StreamRole::small_jumps));
        Vector previous = Vector::Zero(spec.dimension);
        double previous_radius = spec.cutoff;
        for (std::size_t i = 0; i < n; ++i) {
            const Vector current = radii[i] == previous_radius ? previous : shell_z2(z, radii[i]);
            const Vector diff = current - previous;
            sum[i] += diff;
            sum_sq[i] += diff.squaredNorm();
            max_abs[i] = std::max(max_abs[i], diff.cwiseAbs().maxCoeff());
            previous = current;
            previous_radius = radii[i];
        }
    }
    std::vector<ProbeRow> rows;
    double outer = spec.cutoff;
    const auto nr = static_cast<double>(replicas);
    for (std::size_t i = 0; i < n; ++i) {
        ProbeRow row;
        row.outer_radius = outer;
        row.inner_radius = radii[i];
        // Total variance (trace of the covariance) about the empirical mean.
        row.empirical_variance = (sum_sq[i] / nr - (sum[i] / nr).squaredNorm()) * nr / (nr - 1.0);
        row.analytic_variance = outer > radii[i] ? t * mu.second_moment(Annulus{radii[i], outer}) : 0.0;
        row.relative_error = row.analytic_variance > 0.0
                                 ? std::abs(row.empirical_variance - row.analytic_variance) / row.analytic_variance
                                 : std::abs(row.empirical_variance);
        row.max_abs_difference = max_abs[i];
        rows.push_back(row);
        outer = radii[i];
    }
    return rows;
}

}  // namespace levyou
