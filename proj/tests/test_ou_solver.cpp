#include "levyou/ou_solver.hpp"

#include <gtest/gtest.h>

using namespace levyou;

namespace {

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

LevyTriplet make_triplet(const Vector& b, const Matrix& q, JumpSpec jumps) {
    return LevyTriplet{b, WienerCovariance(q), std::move(jumps)};
}

double sup_on_common_times(const CadlagPath& coarse, const CadlagPath& fine) {
    double worst = 0.0;
    for (std::size_t k = 0; k < coarse.sample_count(); ++k) {
        worst = std::max(worst, (coarse.value(k) - evaluate(fine, coarse.time(k))).norm());
    }
    return worst;
}

}  // namespace

TEST(StepCovariance, ZeroDriftIsHQ) {
    const Matrix q = mat2(2.0, 0.3, 0.3, 1.0);
    EXPECT_LT((gaussian_step_covariance(Matrix::Zero(2, 2), q, 0.01) - 0.01 * q).norm(), 1e-15);
}

TEST(StepCovariance, ZeroQIsZero) {
    EXPECT_EQ(gaussian_step_covariance(mat2(0, -1, 1, 0), Matrix::Zero(2, 2), 0.5).norm(), 0.0);
}

TEST(StepCovariance, ScalarClosedForm) {
    for (double a : {-2.0, -0.3, 0.7, 1.5}) {
        for (double h : {1e-3, 0.1, 1.0}) {
            const double q = 1.7;
            const double expected = q * std::expm1(2 * a * h) / (2 * a);
            const double got = gaussian_step_covariance(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, q), h)(0, 0);
            EXPECT_NEAR(got, expected, 1e-12 * std::max(1.0, expected)) << a << " " << h;
        }
    }
}

TEST(StepCovariance, RotationPreservesIsotropy) {
    // With A skew-symmetric e^{As} is orthogonal, so Sigma_h = h I for Q = I.
    const Matrix sigma = gaussian_step_covariance(mat2(0, -1, 1, 0), Matrix::Identity(2, 2), 0.3);
    EXPECT_LT((sigma - 0.3 * Matrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(ExactSolver, ZeroDriftReproducesDrivingPath) {
    const LevyTriplet t = make_triplet(Vector::Zero(2), Matrix::Identity(2, 2), JumpSpec::gaussian(2, 5.0, 1.0));
    const OUSpec spec{Matrix::Zero(2, 2), t, 1.0, 1e-3};
    const auto sample = solve_exact(spec, 3, 0);
    ASSERT_EQ(sample.path.times(), sample.driving.levy.times());
    EXPECT_LT((sample.path.values() - sample.driving.levy.values()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(sample.path.jumps().size(), sample.driving.jumps.jumps().size());
}

TEST(ExactSolver, DeterministicScalarOde) {
    const double a = -0.8;
    const double b = 1.3;
    const LevyTriplet t = make_triplet(Vector::Constant(1, b), Matrix::Zero(1, 1), JumpSpec::none(1));
    const OUSpec spec{Matrix::Constant(1, 1, a), t, 2.0, 0.01};
    const auto x = solve_exact(spec, 1, 0).path;
    ASSERT_TRUE(x.has_exact_integrals());
    for (std::size_t k = 0; k < x.sample_count(); ++k) {
        const double s = x.time(k);
        EXPECT_NEAR(x.value(k)[0], (b / a) * std::expm1(a * s), 1e-10);
        // S(X, s) = (b/a) ((e^{as} - 1)/a - s)
        EXPECT_NEAR(x.integral_at_sample(k)[0], (b / a) * (std::expm1(a * s) / a - s), 1e-10);
    }
}

TEST(ExactSolver, StepSizeDoesNotMatterWithoutNoise) {
    // Semigroup property: the exact flow over one step equals two half steps.
    Vector b(2);
    b << 0.5, -0.2;
    const LevyTriplet t = make_triplet(b, Matrix::Zero(2, 2), JumpSpec::gaussian(2, 4.0, 1.0));
    const Matrix a = mat2(-0.5, -1.0, 1.0, -0.2);
    const auto coarse = solve_exact(OUSpec{a, t, 1.0, 0.1}, 8, 0).path;
    const auto fine = solve_exact(OUSpec{a, t, 1.0, 0.05}, 8, 0).path;
    ASSERT_EQ(coarse.jumps().size(), fine.jumps().size());
    EXPECT_LT(sup_on_common_times(coarse, fine), 1e-12);
}

TEST(ExactSolver, TerminalVarianceMatchesStationaryFormula) {
    const double a = -1.0;
    const LevyTriplet t = make_triplet(Vector::Zero(1), Matrix::Identity(1, 1), JumpSpec::none(1));
    const OUSpec spec{Matrix::Constant(1, 1, a), t, 1.0, 0.05};
    const int n = 10000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int r = 0; r < n; ++r) {
        const double x = solve_exact(spec, 21, r).path.values()(0, 20);
        sum += x * x;
        sum_sq += x * x * x * x;
    }
    const double mean = sum / n;
    const double se = std::sqrt((sum_sq / n - mean * mean) / (n - 1));
    const double expected = -std::expm1(2 * a) / (-2 * a);
    EXPECT_LT(std::abs(mean - expected), 3 * se);
}

TEST(ExactSolver, AgreesWithFineEulerWithJumps) {
    Vector b(2);
    b << 0.3, 0.1;
    const Matrix a = mat2(-0.5, -1.0, 1.0, -0.2);
    // Pure jump plus drift: the exact path at h = 1e-3 is the same path Euler
    // approximates on a 1e-5 grid, since jump arrivals do not depend on the grid.
    {
        const LevyTriplet t = make_triplet(b, Matrix::Zero(2, 2), JumpSpec::gaussian(2, 5.0, 1.0));
        const auto exact = solve_exact(OUSpec{a, t, 1.0, 1e-3}, 4, 0).path;
        const auto driving = sample_levy(t, uniform_grid(1.0, 1e-5), 4, 0).levy;
        const auto euler = solve_euler(a, driving);
        EXPECT_LT(sup_on_common_times(exact, euler), 1e-3);
    }
    // With a Wiener part both schemes run on one 1e-5 grid.
    {
        const LevyTriplet t = make_triplet(b, Matrix::Identity(2, 2), JumpSpec::gaussian(2, 5.0, 1.0));
        const auto sample = solve_exact(OUSpec{a, t, 1.0, 1e-5}, 4, 1);
        const auto euler = solve_euler(a, sample.driving.levy);
        EXPECT_LT(sup_on_common_times(sample.path, euler), 1e-3);
    }
}

TEST(Euler, ZeroDriftTelescopes) {
    const LevyTriplet t = make_triplet(Vector::Constant(2, 0.2), Matrix::Identity(2, 2), JumpSpec::gaussian(2, 5.0, 1.0));
    const auto l = sample_levy(t, uniform_grid(1.0, 1e-3), 2, 0).levy;
    const auto x = solve_euler(Matrix::Zero(2, 2), l);
    EXPECT_LT((x.values() - l.values()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(x.jumps().size(), l.jumps().size());
}

TEST(Euler, ZeroDrivingGivesZero) {
    const auto x = solve_euler(mat2(1, 2, 3, 4), zero_path(2, uniform_grid(1.0, 0.01)));
    EXPECT_EQ(x.values().norm(), 0.0);
}

TEST(Euler, ObservedOrderAtLeastPointNine) {
    Vector b(2);
    b << 0.5, -0.3;
    const Matrix a = mat2(-1.0, -2.0, 2.0, -0.5);
    const LevyTriplet t = make_triplet(b, 0.25 * Matrix::Identity(2, 2), JumpSpec::gaussian(2, 3.0, 0.5));
    const std::vector<double> steps{1e-3, 5e-4, 2.5e-4};
    std::vector<double> error(steps.size(), 0.0);
    const int replicas = 20;
    for (int r = 0; r < replicas; ++r) {
        const auto sample = solve_exact(OUSpec{a, t, 1.0, 2.5e-4}, 17, r);
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto euler = solve_euler(a, sample.driving.levy, steps[i]);
            error[i] += sup_on_common_times(euler, sample.path) / replicas;
        }
    }
    for (std::size_t i = 1; i < steps.size(); ++i) {
        EXPECT_GE(std::log2(error[i - 1] / error[i]), 0.9) << error[i - 1] << " " << error[i];
    }
}

TEST(ExactSolver, RejectsMismatchedGrids) {
    const LevyTriplet t = make_triplet(Vector::Zero(1), Matrix::Identity(1, 1), JumpSpec::none(1));
    ExactOUSolver solver(OUSpec{Matrix::Zero(1, 1), t, 1.0, 0.1});
    const auto w = zero_path(1, uniform_grid(1.0, 0.1));
    const auto z = zero_path(1, uniform_grid(1.0, 0.2));
    EXPECT_THROW(solver.solve(w, z, CounterRng(1)), ContractViolation);
    EXPECT_THROW((OUSpec{Matrix::Zero(2, 2), t, 1.0, 0.1}.validate()), ContractViolation);
}
