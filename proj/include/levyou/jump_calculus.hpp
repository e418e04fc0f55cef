#pragma once

// Jump-measure functionals on cadlag paths.
//
//   count_jumps  pi_t(E, f)  = #{s <= t : Delta f(s) in E}
//   z1           Z1_E(f, t)  = sum_{s <= t, Delta f(s) in E} Delta f(s)
//   z2           Z2_E(f, t)  = Z1_E(f, t) - t * int_E u mu(du)
//
// Sets come from a small closed algebra (norm annuli, half-open boxes and
// disjoint unions) with exact membership.

#include "levyou/paths.hpp"

#include <functional>
#include <limits>
#include <variant>
#include <vector>

namespace levyou {

/// {x : inner <= |x| < outer}; outer may be +inf.
struct Annulus {
    double inner = 0.0;
    double outer = std::numeric_limits<double>::infinity();
};

/// Half-open box prod_i [lower_i, upper_i); bounds may be infinite.
struct Box {
    Vector lower;
    Vector upper;
};

class BorelSet {
public:
    using Parts = std::vector<BorelSet>;

    BorelSet(Annulus a) : shape_(a) {  // NOLINT(google-explicit-constructor)
        require(a.inner >= 0.0 && a.outer > a.inner, "Annulus: need 0 <= inner < outer");
    }
    BorelSet(Box b) : shape_(std::move(b)) {  // NOLINT(google-explicit-constructor)
        const auto& box = std::get<Box>(shape_);
        require(box.lower.size() == box.upper.size() && box.lower.size() > 0, "Box: bound dimensions differ");
        require((box.lower.array() < box.upper.array()).all(), "Box: need lower < upper in every coordinate");
    }

    /// Union of pairwise disjoint parts. Disjointness is the caller's promise;
    /// the additive functionals sum over parts.
    static BorelSet disjoint_union(Parts parts) {
        require(!parts.empty(), "BorelSet: empty union");
        BorelSet out;
        out.shape_ = std::move(parts);
        return out;
    }

    /// E_n^c = B_1 \ {|x| < eps}.
    static BorelSet unit_ball_shell(double eps, double cutoff = 1.0) { return Annulus{eps, cutoff}; }

    [[nodiscard]] bool contains(const Vector& x) const {
        return std::visit(
            [&](const auto& s) -> bool {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Annulus>) {
                    const double r = x.norm();
                    return r >= s.inner && r < s.outer;
                } else if constexpr (std::is_same_v<S, Box>) {
                    require(x.size() == s.lower.size(), "Box: dimension mismatch");
                    return (x.array() >= s.lower.array()).all() && (x.array() < s.upper.array()).all();
                } else {
                    for (const auto& part : s) {
                        if (part.contains(x)) return true;
                    }
                    return false;
                }
            },
            shape_);
    }

    /// dist(0, E) > 0.
    [[nodiscard]] bool bounded_below() const {
        return std::visit(
            [](const auto& s) -> bool {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Annulus>) {
                    return s.inner > 0.0;
                } else if constexpr (std::is_same_v<S, Box>) {
                    return ((s.lower.array() > 0.0) || (s.upper.array() < 0.0)).any();
                } else {
                    for (const auto& part : s) {
                        if (!part.bounded_below()) return false;
                    }
                    return true;
                }
            },
            shape_);
    }

    [[nodiscard]] bool bounded() const {
        return std::visit(
            [](const auto& s) -> bool {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Annulus>) {
                    return std::isfinite(s.outer);
                } else if constexpr (std::is_same_v<S, Box>) {
                    return s.lower.allFinite() && s.upper.allFinite();
                } else {
                    for (const auto& part : s) {
                        if (!part.bounded()) return false;
                    }
                    return true;
                }
            },
            shape_);
    }

    [[nodiscard]] const Annulus* as_annulus() const { return std::get_if<Annulus>(&shape_); }
    [[nodiscard]] const Box* as_box() const { return std::get_if<Box>(&shape_); }
    [[nodiscard]] const Parts* as_union() const { return std::get_if<Parts>(&shape_); }

private:
    BorelSet() = default;
    std::variant<Annulus, Box, Parts> shape_;
};

/// Integrals against an intensity measure mu over supported sets. The
/// evaluators only see annuli and boxes; unions are summed here.
class CompensatorSpec {
public:
    struct Moments {
        double mass = 0.0;         // mu(E)
        Vector first;              // int_E u mu(du)
        double second = 0.0;       // int_E |u|^2 mu(du)
    };
    using Evaluator = std::function<Moments(const BorelSet&)>;

    CompensatorSpec(int dimension, Evaluator primitive) : dimension_(dimension), primitive_(std::move(primitive)) {}

    /// mu = 0.
    static CompensatorSpec zero(int dimension) {
        return CompensatorSpec(dimension, [dimension](const BorelSet&) {
            return Moments{0.0, Vector::Zero(dimension), 0.0};
        });
    }

    [[nodiscard]] int dimension() const noexcept { return dimension_; }

    [[nodiscard]] Moments moments(const BorelSet& e) const {
        if (const auto* parts = e.as_union()) {
            Moments total{0.0, Vector::Zero(dimension_), 0.0};
            for (const auto& part : *parts) {
                const auto m = moments(part);
                total.mass += m.mass;
                total.first += m.first;
                total.second += m.second;
            }
            return total;
        }
        return primitive_(e);
    }

    [[nodiscard]] double mass(const BorelSet& e) const { return moments(e).mass; }
    [[nodiscard]] Vector mean_jump(const BorelSet& e) const { return moments(e).first; }
    [[nodiscard]] double second_moment(const BorelSet& e) const { return moments(e).second; }

private:
    int dimension_;
    Evaluator primitive_;
};

// ---------------------------------------------------------------------------

inline std::size_t count_jumps(const BorelSet& e, const CadlagPath& f, double t) {
    if (!(t >= 0.0 && t <= f.horizon())) throw DomainError("count_jumps: t outside [0, T]");
    std::size_t n = 0;
    for (const auto& jump : f.jumps()) {
        if (jump.time > t) break;
        if (e.contains(jump.size())) ++n;
    }
    return n;
}

inline Vector z1(const BorelSet& e, const CadlagPath& f, double t) {
    require(e.bounded_below(), "z1: the set must be bounded below");
    if (!(t >= 0.0 && t <= f.horizon())) throw DomainError("z1: t outside [0, T]");
    Vector sum = Vector::Zero(f.dimension());
    for (const auto& jump : f.jumps()) {
        if (jump.time > t) break;
        const Vector delta = jump.size();
        if (e.contains(delta)) sum += delta;
    }
    return sum;
}

inline Vector z2(const BorelSet& e, const CompensatorSpec& mu, const CadlagPath& f, double t) {
    require(e.bounded_below() && e.bounded(), "z2: the set must be bounded below and bounded");
    return z1(e, f, t) - t * mu.mean_jump(e);
}

/// Z1_E(f, t_k) at every sample time, d x (m+1).
inline Matrix z1_samples(const BorelSet& e, const CadlagPath& f) {
    require(e.bounded_below(), "z1: the set must be bounded below");
    Matrix out(f.dimension(), static_cast<Eigen::Index>(f.sample_count()));
    Vector running = Vector::Zero(f.dimension());
    std::size_t next = 0;
    for (std::size_t k = 0; k < f.sample_count(); ++k) {
        while (next < f.jumps().size() && f.jump_sample(next) == k) {
            const Vector delta = f.jumps()[next].size();
            if (e.contains(delta)) running += delta;
            ++next;
        }
        out.col(static_cast<Eigen::Index>(k)) = running;
    }
    return out;
}

/// Z2_E(f, t_k) at every sample time.
inline Matrix z2_samples(const BorelSet& e, const CompensatorSpec& mu, const CadlagPath& f) {
    require(e.bounded_below() && e.bounded(), "z2: the set must be bounded below and bounded");
    Matrix out = z1_samples(e, f);
    const Vector drift = mu.mean_jump(e);
    for (std::size_t k = 0; k < f.sample_count(); ++k) {
        out.col(static_cast<Eigen::Index>(k)) -= f.time(k) * drift;
    }
    return out;
}

/// Jump counts up to t over the annuli [r_0, r_1), ..., [r_{k-1}, r_k), [r_k, inf).
inline std::vector<std::size_t> jump_signature(const CadlagPath& f, std::span<const double> radii, double t) {
    require(!radii.empty(), "jump_signature: need at least one radius");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        if (!(radii[i] > 0.0)) throw ContractViolation("jump_signature: radii must be positive");
        if (i > 0 && !(radii[i] > radii[i - 1])) throw ContractViolation("jump_signature: radii must increase");
    }
    std::vector<std::size_t> counts(radii.size(), 0);
    for (const auto& jump : f.jumps()) {
        if (jump.time > t) break;
        const double r = jump.size().norm();
        auto it = std::upper_bound(radii.begin(), radii.end(), r);
        if (it != radii.begin()) {
            ++counts[static_cast<std::size_t>(it - radii.begin()) - 1];
        }
    }
    return counts;
}

inline std::vector<std::size_t> jump_signature(const CadlagPath& f, std::span<const double> radii) {
    return jump_signature(f, radii, f.horizon());
}

}  // namespace levyou
