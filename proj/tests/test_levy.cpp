#include "levyou/levy.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <gtest/gtest.h>

#include <set>

using namespace levyou;

namespace {

struct Moments {
    double mean = 0.0;
    double se = 0.0;
};

Moments moments(const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double n = static_cast<double>(xs.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

LevyTriplet triplet(int d, double b, double q, JumpSpec jumps) {
    return LevyTriplet{Vector::Constant(d, b), WienerCovariance(q * Matrix::Identity(d, d)), std::move(jumps)};
}

}  // namespace

TEST(Rng, StreamsAreDeterministicAndDistinct) {
    const CounterRng a(42, 3, StreamRole::wiener);
    const CounterRng b(42, 3, StreamRole::wiener);
    EXPECT_EQ(a.bits_at(17), b.bits_at(17));
    EXPECT_EQ(a.normal_at(5), b.normal_at(5));
    std::set<std::uint64_t> keys;
    for (std::uint64_t r = 0; r < 10000; ++r) keys.insert(derive_stream_key(42, r, StreamRole::jumps));
    EXPECT_EQ(keys.size(), 10000u);
    EXPECT_NE(derive_stream_key(42, 0, StreamRole::jumps), derive_stream_key(42, 0, StreamRole::wiener));
}

TEST(Rng, UniformMomentsWithinThreeSe) {
    CounterRng rng(1, 0, StreamRole::aux);
    std::vector<double> u;
    std::vector<double> z;
    for (int i = 0; i < 100000; ++i) {
        u.push_back(rng.uniform());
        z.push_back(rng.normal());
    }
    const auto mu = moments(u);
    EXPECT_LT(std::abs(mu.mean - 0.5), 3 * mu.se);
    const auto mz = moments(z);
    EXPECT_LT(std::abs(mz.mean), 3 * mz.se);
}

TEST(WienerCovarianceTest, Validation) {
    Matrix asym(2, 2);
    asym << 1, 0.5, 0, 1;
    EXPECT_THROW(WienerCovariance{asym}, ContractViolation);
    Matrix neg(2, 2);
    neg << 1, 0, 0, -1;
    EXPECT_THROW(WienerCovariance{neg}, ContractViolation);
    Matrix psd(2, 2);
    psd << 2, 1, 1, 2;
    const WienerCovariance q(psd);
    EXPECT_NEAR(q.min_eigenvalue(), 1.0, 1e-14);
    EXPECT_LT((q.factor() * q.factor().transpose() - psd).norm(), 1e-14);
}

TEST(Wiener, ZeroCovarianceGivesZeroPath) {
    const auto w = sample_wiener(WienerCovariance::zero(2), uniform_grid(1.0, 0.01), CounterRng(1, 0, StreamRole::wiener));
    EXPECT_EQ(w.values().norm(), 0.0);
}

TEST(Wiener, TerminalCovarianceIsIdentity) {
    const int n = 10000;
    std::vector<double> xx;
    std::vector<double> yy;
    std::vector<double> xy;
    const std::vector<double> grid{0.0, 0.5, 1.0};
    for (int r = 0; r < n; ++r) {
        const auto w = sample_wiener(WienerCovariance::identity(2), grid, CounterRng(9, r, StreamRole::wiener));
        const Vector w1 = w.value(2);
        xx.push_back(w1[0] * w1[0]);
        yy.push_back(w1[1] * w1[1]);
        xy.push_back(w1[0] * w1[1]);
    }
    const auto mxx = moments(xx);
    const auto myy = moments(yy);
    const auto mxy = moments(xy);
    EXPECT_LT(std::abs(mxx.mean - 1.0), 3 * mxx.se);
    EXPECT_LT(std::abs(myy.mean - 1.0), 3 * myy.se);
    EXPECT_LT(std::abs(mxy.mean), 3 * mxy.se);
}

TEST(Wiener, DisjointIncrementsUncorrelated) {
    const std::vector<double> grid{0.0, 0.3, 0.6, 1.0};
    std::vector<double> products;
    for (int r = 0; r < 10000; ++r) {
        const auto w = sample_wiener(WienerCovariance::identity(1), grid, CounterRng(10, r, StreamRole::wiener));
        products.push_back((w.value(1)[0] - w.value(0)[0]) * (w.value(3)[0] - w.value(2)[0]));
    }
    const auto m = moments(products);
    EXPECT_LT(std::abs(m.mean), 3 * m.se);
}

TEST(Wiener, CorrelatedCovarianceMatches) {
    Matrix q(2, 2);
    q << 1.0, 0.6, 0.6, 2.0;
    std::vector<double> xy;
    for (int r = 0; r < 10000; ++r) {
        const auto w = sample_wiener(WienerCovariance(q), {0.0, 1.0}, CounterRng(12, r, StreamRole::wiener));
        xy.push_back(w.value(1)[0] * w.value(1)[1]);
    }
    const auto m = moments(xy);
    EXPECT_LT(std::abs(m.mean - 0.6), 3 * m.se);
}

TEST(Jumps, NoRateGivesZeroPath) {
    const auto z = sample_jump_part(JumpSpec::none(2), uniform_grid(1.0, 0.1), CounterRng(1, 0, StreamRole::jumps));
    EXPECT_TRUE(z.jumps().empty());
    EXPECT_EQ(z.values().norm(), 0.0);
}

TEST(Jumps, CountsFitPoisson) {
    const auto spec = JumpSpec::gaussian(2, 5.0, 1.0);
    const int n = 10000;
    const int top = 12;  // bins 0..11 and >= 12
    std::vector<double> observed(top + 1, 0.0);
    for (int r = 0; r < n; ++r) {
        const auto z = sample_jump_part(spec, std::vector<double>{0.0, 1.0}, CounterRng(3, r, StreamRole::jumps));
        observed[static_cast<std::size_t>(std::min<std::size_t>(z.jumps().size(), top))] += 1.0;
    }
    const boost::math::poisson_distribution<> poisson(5.0);
    double chi2 = 0.0;
    for (int k = 0; k <= top; ++k) {
        const double p = k < top ? boost::math::pdf(poisson, k) : 1.0 - boost::math::cdf(poisson, top - 1);
        const double expected = n * p;
        chi2 += (observed[static_cast<std::size_t>(k)] - expected) * (observed[static_cast<std::size_t>(k)] - expected) /
                expected;
    }
    const boost::math::chi_squared_distribution<> reference(top);
    EXPECT_LT(chi2, boost::math::quantile(reference, 0.99));
}

TEST(Jumps, SymmetricSizesHaveZeroMeanTerminal) {
    const auto spec = JumpSpec::gaussian(1, 5.0, 1.0);
    std::vector<double> terminal;
    for (int r = 0; r < 10000; ++r) {
        const auto z = sample_jump_part(spec, std::vector<double>{0.0, 1.0}, CounterRng(4, r, StreamRole::jumps));
        terminal.push_back(z.value(z.sample_count() - 1)[0]);
    }
    const auto m = moments(terminal);
    EXPECT_LT(std::abs(m.mean), 3 * m.se);
}

TEST(Jumps, CompensatedPowerFamilyIsCentered) {
    JumpSpec spec = JumpSpec::none(1);
    spec.small_jumps = PowerLawShells{1.0, 0.5, 0.01, true};
    // Oracle: int_eps^1 x x^{-3/2} dx = 2 (1 - sqrt(eps)).
    EXPECT_NEAR(spec.drift_compensation()[0], 2.0 * (1.0 - 0.1), 1e-12);
    std::vector<double> terminal;
    for (int r = 0; r < 10000; ++r) {
        const auto z = sample_jump_part(spec, std::vector<double>{0.0, 1.0}, CounterRng(6, r, StreamRole::jumps));
        terminal.push_back(z.value(z.sample_count() - 1)[0]);
    }
    const auto m = moments(terminal);
    EXPECT_LT(std::abs(m.mean), 3 * m.se);
}

TEST(Jumps, DiscreteAtomsAreTheOnlySizes) {
    JumpSpec spec = JumpSpec::none(1);
    spec.rate = 20.0;
    spec.sizes = DiscreteJumps{{Vector::Constant(1, 0.5), Vector::Constant(1, -2.0)}, {3.0, 1.0}};
    std::size_t small = 0;
    std::size_t total = 0;
    for (int r = 0; r < 200; ++r) {
        const auto z = sample_jump_part(spec, std::vector<double>{0.0, 1.0}, CounterRng(8, r, StreamRole::jumps));
        for (const auto& j : z.jumps()) {
            const double s = j.size()[0];
            EXPECT_TRUE(std::abs(s - 0.5) < 1e-12 || std::abs(s + 2.0) < 1e-12) << s;
            if (s > 0) ++small;
            ++total;
        }
    }
    const double p = static_cast<double>(small) / static_cast<double>(total);
    EXPECT_NEAR(p, 0.75, 3 * std::sqrt(0.75 * 0.25 / static_cast<double>(total)));
}

TEST(JumpSpecTest, Validation) {
    JumpSpec bad = JumpSpec::none(1);
    bad.rate = 1.0;
    EXPECT_THROW(bad.validate(), ContractViolation);
    JumpSpec alpha = JumpSpec::none(1);
    alpha.small_jumps = PowerLawShells{1.0, 2.5, 0.1, false};
    EXPECT_THROW(alpha.validate(), ContractViolation);
    JumpSpec sided = JumpSpec::none(2);
    sided.small_jumps = PowerLawShells{1.0, 0.5, 0.1, true};
    EXPECT_THROW(sided.validate(), ContractViolation);
}

TEST(Compensator, GaussianAnnulusMatchesNormalCdf) {
    const auto mu = JumpSpec::gaussian(1, 3.0, 2.0).compensator();
    auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    const double expected = 3.0 * 2.0 * (phi(1.5 / 2.0) - phi(0.5 / 2.0));
    EXPECT_NEAR(mu.mass(Annulus{0.5, 1.5}), expected, 1e-12);
    EXPECT_NEAR(mu.mean_jump(Annulus{0.5, 1.5}).norm(), 0.0, 1e-15);
}

TEST(Compensator, PowerShellSecondMoment) {
    JumpSpec spec = JumpSpec::none(1);
    spec.small_jumps = PowerLawShells{1.0, 0.5, 0.01, true};
    const auto mu = spec.compensator();
    // int_a^b x^2 x^{-3/2} dx = (2/3)(b^{3/2} - a^{3/2}).
    EXPECT_NEAR(mu.second_moment(Annulus{0.25, 0.5}), (2.0 / 3.0) * (std::pow(0.5, 1.5) - std::pow(0.25, 1.5)), 1e-12);
    // int_a^b x^{-3/2} dx = 2 (a^{-1/2} - b^{-1/2}).
    EXPECT_NEAR(mu.mass(Annulus{0.25, 0.5}), 2.0 * (2.0 - std::sqrt(2.0)), 1e-12);
}

TEST(Compose, Examples) {
    const auto grid = uniform_grid(1.0, 0.1);
    const auto w = sample_wiener(WienerCovariance::identity(2), grid, CounterRng(1, 0, StreamRole::wiener));
    const auto z0 = zero_path(2, grid);
    const auto l = compose_levy(Vector::Zero(2), w, z0);
    EXPECT_EQ(l.values(), w.values());
    Vector b(2);
    b << 1.0, 0.0;
    const auto drift = compose_levy(b, zero_path(2, grid), z0);
    for (std::size_t k = 0; k < drift.sample_count(); ++k) {
        EXPECT_DOUBLE_EQ(drift.value(k)[0], drift.time(k));
        EXPECT_EQ(drift.value(k)[1], 0.0);
    }
}

TEST(Decompose, RoundTripIsExact) {
    const auto t = triplet(2, 0.7, 1.0, JumpSpec::gaussian(2, 5.0, 1.0));
    for (int r = 0; r < 20; ++r) {
        const auto l = sample_levy(t, uniform_grid(1.0, 1e-3), 2, r).levy;
        const auto parts = decompose(l);
        EXPECT_TRUE(parts.continuous.jumps().empty());
        EXPECT_EQ(parts.jumps.jumps().size(), l.jumps().size());
        EXPECT_LE(uniform_distance(recompose(parts), l), 1e-12);
    }
}

TEST(Decompose, DeterministicTrend) {
    Vector b(2);
    b << 0.4, -1.5;
    const auto grid = uniform_grid(2.0, 0.01);
    const auto f = compose_levy(b, zero_path(2, grid), zero_path(2, grid));
    const auto parts = decompose(f);
    EXPECT_LT((parts.trend - b).norm(), 1e-14);
    EXPECT_LT(parts.continuous.values().cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_TRUE(parts.jumps.jumps().empty());
}

TEST(Decompose, PureWienerTrendIsCentered) {
    const auto t = triplet(1, 0.0, 1.0, JumpSpec::none(1));
    std::vector<double> trends;
    for (int r = 0; r < 2000; ++r) {
        const auto parts = decompose(sample_levy(t, uniform_grid(1.0, 0.01), 5, r).levy);
        EXPECT_TRUE(parts.jumps.jumps().empty());
        trends.push_back(parts.trend[0]);
    }
    const auto m = moments(trends);
    EXPECT_LT(std::abs(m.mean), 3 * m.se);
}

TEST(Probe, FiniteActivityGivesZeroDifferences) {
    const std::vector<double> radii{0.5, 0.25};
    JumpSpec atoms = JumpSpec::none(1);
    atoms.rate = 5.0;
    atoms.sizes = DiscreteJumps{{Vector::Constant(1, 2.0)}, {1.0}};
    for (const auto& row : small_jump_convergence_probe(atoms, 1.0, radii, 100, 1)) {
        EXPECT_EQ(row.empirical_variance, 0.0);
        EXPECT_EQ(row.max_abs_difference, 0.0);
    }
}

TEST(Probe, EqualRadiiGiveZero) {
    JumpSpec spec = JumpSpec::none(1);
    spec.small_jumps = PowerLawShells{1.0, 0.5, 0.125, true};
    const std::vector<double> radii{0.5, 0.5};
    const auto rows = small_jump_convergence_probe(spec, 1.0, radii, 100, 1);
    EXPECT_EQ(rows[1].max_abs_difference, 0.0);
    EXPECT_EQ(rows[1].empirical_variance, 0.0);
}

TEST(Probe, ToyMeasureVarianceMatchesTailIntegral) {
    JumpSpec spec = JumpSpec::none(1);
    spec.small_jumps = PowerLawShells{1.0, 0.5, 0.125, true};
    const std::vector<double> radii{0.5, 0.25, 0.125};
    const auto rows = small_jump_convergence_probe(spec, 1.0, radii, 10000, 3);
    double outer = 1.0;
    for (const auto& row : rows) {
        // t int_{eps <= x < outer} x^2 x^{-3/2} dx with t = 1.
        const double oracle = (2.0 / 3.0) * (std::pow(outer, 1.5) - std::pow(row.inner_radius, 1.5));
        EXPECT_NEAR(row.analytic_variance, oracle, 1e-12);
        const double ratio = row.empirical_variance / oracle;
        EXPECT_GE(ratio, 0.9);
        EXPECT_LE(ratio, 1.1);
        outer = row.inner_radius;
    }
}

TEST(Probe, RejectsNoJumps) {
    const std::vector<double> radii{0.5};
    EXPECT_THROW(small_jump_convergence_probe(JumpSpec::none(1), 1.0, radii, 10, 1), ContractViolation);
}
