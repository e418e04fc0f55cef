#include "levyou/jump_calculus.hpp"
#include "levyou/levy.hpp"

#include <gtest/gtest.h>

using namespace levyou;

namespace {

Vector scalar(double x) { return Vector::Constant(1, x); }

// Jumps +2 at 0.3 and +0.5 at 0.7.
CadlagPath two_jump_path() {
    Matrix v(1, 4);
    v << 0.0, 2.0, 2.5, 2.5;
    return CadlagPath(1.0, {0.0, 0.3, 0.7, 1.0}, v, {{0.3, scalar(0.0), scalar(2.0)}, {0.7, scalar(2.0), scalar(2.5)}});
}

const BorelSet kLarge = Annulus{1.0};
const BorelSet kMid = Annulus{0.1, 1.0};

}  // namespace

TEST(BorelSetTest, Membership) {
    EXPECT_TRUE(kLarge.contains(scalar(-3.0)));
    EXPECT_FALSE(kLarge.contains(scalar(0.99)));
    EXPECT_TRUE(kMid.contains(scalar(0.1)));
    EXPECT_FALSE(kMid.contains(scalar(1.0)));
    Vector lo(2), hi(2);
    lo << 0.5, -1.0;
    hi << 1.0, 1.0;
    const BorelSet box = Box{lo, hi};
    Vector x(2);
    x << 0.5, 0.0;
    EXPECT_TRUE(box.contains(x));
    x << 1.0, 0.0;
    EXPECT_FALSE(box.contains(x));
    EXPECT_TRUE(box.bounded_below());
    EXPECT_TRUE(box.bounded());
    const auto u = BorelSet::disjoint_union({Annulus{0.1, 0.2}, Annulus{2.0, 3.0}});
    EXPECT_TRUE(u.contains(scalar(2.5)));
    EXPECT_FALSE(u.contains(scalar(1.0)));
    EXPECT_TRUE(u.bounded_below());
    EXPECT_FALSE(BorelSet(Annulus{0.0, 1.0}).bounded_below());
    EXPECT_FALSE(kLarge.bounded());
    EXPECT_THROW(BorelSet(Annulus{1.0, 0.5}), ContractViolation);
}

TEST(CountJumps, ContinuousPathHasNone) {
    const auto f = constant_path(scalar(1.0), uniform_grid(1.0, 0.1));
    EXPECT_EQ(count_jumps(kLarge, f, 1.0), 0u);
    EXPECT_EQ(count_jumps(kMid, f, 0.5), 0u);
}

TEST(CountJumps, Handcrafted) {
    const auto f = two_jump_path();
    EXPECT_EQ(count_jumps(kLarge, f, 1.0), 1u);
    EXPECT_EQ(count_jumps(kLarge, f, 0.5), 1u);
    EXPECT_EQ(count_jumps(kMid, f, 0.5), 0u);
    EXPECT_EQ(count_jumps(kMid, f, 0.7), 1u);
    EXPECT_EQ(count_jumps(kLarge, f, 0.29), 0u);
}

TEST(CountJumps, Preconditions) {
    // Counting is defined for any set on a finite jump list.
    EXPECT_EQ(count_jumps(Annulus{0.0, 1.0}, two_jump_path(), 1.0), 1u);
    EXPECT_THROW(z1(Annulus{0.0, 1.0}, two_jump_path(), 1.0), ContractViolation);
    EXPECT_THROW(z2(kLarge, CompensatorSpec::zero(1), two_jump_path(), 1.0), ContractViolation);
    EXPECT_THROW(count_jumps(kLarge, two_jump_path(), 1.5), DomainError);
}

TEST(Z1, Examples) {
    const auto f = two_jump_path();
    EXPECT_EQ(z1(kLarge, constant_path(scalar(1.0), {0.0, 1.0}), 1.0)[0], 0.0);
    EXPECT_EQ(z1(kLarge, f, 1.0)[0], 2.0);
    EXPECT_EQ(z1(kMid, f, 1.0)[0], 0.5);
}

TEST(Z1, MatchesJumpListFold) {
    const auto spec = JumpSpec::gaussian(2, 8.0, 1.0);
    const BorelSet e = BorelSet::disjoint_union({Annulus{0.2, 0.9}, Annulus{1.5}});
    for (int r = 0; r < 50; ++r) {
        const auto z = sample_jump_part(spec, uniform_grid(1.0, 0.01), CounterRng(2, r, StreamRole::jumps));
        const auto samples = z1_samples(e, z);
        for (double t : {0.0, 0.25, 0.5, 0.999, 1.0}) {
            Vector fold = Vector::Zero(2);
            for (const auto& j : z.jumps()) {
                const double r2 = j.size().norm();
                if (j.time <= t && ((r2 >= 0.2 && r2 < 0.9) || r2 >= 1.5)) fold += j.post - j.pre;
            }
            EXPECT_EQ(z1(e, z, t), fold);
            if (t == 1.0) {
                EXPECT_EQ(Vector(samples.col(samples.cols() - 1)), fold);
            }
        }
    }
}

TEST(Z2, ZeroMeasureGivesZ1) {
    const auto f = two_jump_path();
    const auto mu = CompensatorSpec::zero(1);
    const BorelSet e = Annulus{0.1, 3.0};
    EXPECT_EQ(z2(e, mu, f, 1.0), z1(e, f, 1.0));
}

TEST(Z2, SymmetricMeasureWithoutJumpsIsZero) {
    const auto mu = JumpSpec::gaussian(2, 5.0, 1.0).compensator();
    const auto f = zero_path(2, {0.0, 0.5, 1.0});
    EXPECT_LT(z2(kMid, mu, f, 1.0).norm(), 1e-15);
}

TEST(Z2, EnsembleIsCentered) {
    // Asymmetric atoms so the compensator is not trivially zero.
    JumpSpec spec = JumpSpec::none(1);
    spec.rate = 5.0;
    spec.sizes = DiscreteJumps{{scalar(0.3), scalar(-0.6), scalar(2.0)}, {2.0, 1.0, 1.0}};
    const auto mu = spec.compensator();
    const BorelSet e = Annulus{0.1, 1.0};
    // Oracle for the compensator: rate * sum_k w_k x_k over atoms in E.
    EXPECT_NEAR(mu.mean_jump(e)[0], 5.0 * (0.5 * 0.3 + 0.25 * -0.6), 1e-15);
    const int n = 10000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int r = 0; r < n; ++r) {
        const auto z = sample_jump_part(spec, std::vector<double>{0.0, 1.0}, CounterRng(7, r, StreamRole::jumps));
        const double v = z2(e, mu, z, 1.0)[0];
        sum += v;
        sum_sq += v * v;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / (n - 1));
    EXPECT_LT(std::abs(mean), 3 * se);
}

TEST(Z2, SamplesAgreeWithPointQueries) {
    const auto spec = JumpSpec::gaussian(1, 10.0, 0.5);
    const auto mu = spec.compensator();
    const auto z = sample_jump_part(spec, uniform_grid(1.0, 0.05), CounterRng(3, 0, StreamRole::jumps));
    const auto samples = z2_samples(kMid, mu, z);
    for (std::size_t k = 0; k < z.sample_count(); ++k) {
        EXPECT_EQ(Vector(samples.col(static_cast<Eigen::Index>(k))), z2(kMid, mu, z, z.time(k)));
    }
}

TEST(Signature, Examples) {
    const std::vector<double> radii{0.1, 1.0};
    const auto zero = zero_path(1, {0.0, 1.0});
    EXPECT_EQ(jump_signature(zero, radii), (std::vector<std::size_t>{0, 0}));
    EXPECT_EQ(jump_signature(two_jump_path(), radii), (std::vector<std::size_t>{1, 1}));
    EXPECT_EQ(jump_signature(two_jump_path(), radii, 0.5), (std::vector<std::size_t>{0, 1}));
    const std::vector<double> bad{1.0, 0.5};
    EXPECT_THROW(jump_signature(zero, bad), ContractViolation);
}
