#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "perron/matrix.hpp"

using namespace perron;

namespace {

NonNegativeMatrix mat(int n, std::vector<double> e) { return NonNegativeMatrix(n, std::move(e)); }

const NonNegativeMatrix kOnes2 = mat(2, {1, 1, 1, 1});
const NonNegativeMatrix kA2 = mat(2, {0, 1, 3, 2});  // lambda = 3, u = (1/2, 1/2)
const NonNegativeMatrix kScalar3 = mat(1, {3});

double linf(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("matrix construction validates shape and sign") {
    CHECK_THROWS_AS(mat(2, {1, 2, 3}), ValidationError);
    CHECK_THROWS_AS(mat(0, {}), ValidationError);
    CHECK_THROWS_AS(mat(2, {1, -0.25, 0, 1}), ValidationError);
    CHECK_THROWS_AS(mat(1, {std::nan("")}), ValidationError);
    CHECK(kA2(1, 0) == 3.0);
    CHECK(kA2.row_sum(1) == 5.0);
}

TEST_CASE("validate_primitive: positive, periodic and two-step cases") {
    PrimitivityReport all_pos = validate_primitive(kOnes2);
    CHECK(all_pos.is_primitive);
    CHECK(*all_pos.exponent == 1);

    PrimitivityReport perm = validate_primitive(mat(2, {0, 1, 1, 0}));
    CHECK_FALSE(perm.is_primitive);
    CHECK_FALSE(perm.reason.empty());

    // A^2 = [[3,2],[6,7]] > 0, so the boolean pattern squares to positive.
    PrimitivityReport two_step = validate_primitive(kA2);
    CHECK(two_step.is_primitive);
    CHECK(*two_step.exponent == 2);
}

TEST_CASE("validate_primitive: reducible matrix stabilizes without positivity") {
    PrimitivityReport rep = validate_primitive(mat(2, {1, 0, 1, 1}));
    CHECK_FALSE(rep.is_primitive);
    // Wielandt cap respected (exponent at most (n-1)^2+1 when primitive).
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        NonNegativeMatrix A = random_primitive_matrix(rng, 2 + trial % 6, 0.4);
        PrimitivityReport r = validate_primitive(A);
        REQUIRE(r.is_primitive);
        int n = A.size();
        CHECK(*r.exponent <= (n - 1) * (n - 1) + 1);
    }
}

TEST_CASE("perron_pair on the worked examples") {
    PerronPair p1 = perron_pair(kScalar3);
    CHECK(p1.lambda == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(p1.u[0] == doctest::Approx(1.0));

    PerronPair p2 = perron_pair(kOnes2);
    CHECK(p2.lambda == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(p2.u[0] == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(p2.u[1] == doctest::Approx(0.5).epsilon(1e-10));

    // Characteristic polynomial lambda^2 - 2 lambda - 3 = 0 -> lambda = 3.
    PerronPair p3 = perron_pair(kA2);
    CHECK(p3.lambda == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(linf(p3.u, {0.5, 0.5}) < 1e-10);
    CHECK(p3.residual <= 1e-12);

    double sum = p3.u[0] + p3.u[1];
    CHECK(std::abs(sum - 1.0) < 1e-12);
}

TEST_CASE("perron_pair rejects non-primitive input") {
    CHECK_THROWS_AS(perron_pair(mat(2, {0, 1, 1, 0})), PreconditionError);
}

TEST_CASE("perron_pair reports non-convergence with the last residual") {
    try {
        perron_pair(mat(2, {2, 1, 1, 1}), 1e-12, 2);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.residual() > 0.0);
        CHECK(e.iterations() == 2);
    }
}

TEST_CASE("stopped_matrix zeroes one row and bounds the spectral radius") {
    StoppedMatrix s1 = stopped_matrix(kOnes2, 0);
    CHECK(s1.base(0, 0) == 0.0);
    CHECK(s1.base(0, 1) == 0.0);
    CHECK(s1.base(1, 0) == 1.0);
    CHECK(s1.base(1, 1) == 1.0);
    CHECK(s1.rho_estimate == doctest::Approx(1.0).epsilon(1e-6));

    StoppedMatrix s2 = stopped_matrix(kScalar3, 0);
    CHECK(s2.base(0, 0) == 0.0);
    CHECK(s2.rho_estimate == doctest::Approx(0.0).epsilon(1e-9));

    // B = [[0,1],[0,0]] is nilpotent: true radius 0, estimate stays small.
    StoppedMatrix s3 = stopped_matrix(kA2, 1);
    CHECK(s3.base(1, 0) == 0.0);
    CHECK(s3.base(1, 1) == 0.0);
    CHECK(s3.base(0, 1) == 1.0);
    CHECK(s3.rho_estimate >= 0.0);
    CHECK(s3.rho_estimate < 0.1);

    CHECK_THROWS_AS(stopped_matrix(kA2, 2), ValidationError);
}

TEST_CASE("series_vector on the worked examples") {
    // All-ones: every term is lambda^{-n} (1,1), geometric sum = (1,1).
    StoppedMatrix s = stopped_matrix(kOnes2, 0);
    TruncationPlan plan = make_truncation_plan(s, 2.0, 1e-12);
    std::vector<double> v = series_vector(kOnes2, 0, 2.0, plan);
    CHECK(linf(v, {1.0, 1.0}) < 1e-11);

    // 1x1: single term 3^{-1} * 3 = 1.
    TruncationPlan p1 = make_truncation_plan(stopped_matrix(kScalar3, 0), 3.0);
    CHECK(series_vector(kScalar3, 0, 3.0, p1)[0] == doctest::Approx(1.0).epsilon(1e-12));

    // Nilpotent stopped matrix: exactly two terms, v = (1, 1).
    TruncationPlan p2 = make_truncation_plan(stopped_matrix(kA2, 1), 3.0);
    std::vector<double> v2 = series_vector(kA2, 1, 3.0, p2);
    CHECK(linf(v2, {1.0, 1.0}) < 1e-12);
    CHECK(v2[1] == doctest::Approx(1.0));  // v(i) = 1
    std::vector<double> u2 = normalized_l1(v2);
    CHECK(linf(u2, {0.5, 0.5}) < 1e-12);
}

TEST_CASE("series_vector truncation failure carries the partial sum") {
    StoppedMatrix s = stopped_matrix(kOnes2, 0);
    TruncationPlan plan = make_truncation_plan(s, 2.0, 1e-12, 5);
    try {
        series_vector(kOnes2, 0, 2.0, plan);
        FAIL("expected TruncationError");
    } catch (const TruncationError& e) {
        CHECK(e.terms() == 5);
        CHECK(e.tail_bound() > 1e-12);
        CHECK(e.partial().size() == 2);
        CHECK(e.partial()[0] > 0.9);  // 5 geometric terms of the limit 1
        CHECK(e.partial()[0] < 1.0);
    }
}

TEST_CASE("series evaluation never reads the stopped row") {
    // Poison row i of B after zeroing: results must not change.
    StoppedMatrix s = stopped_matrix(kA2, 1);
    TruncationPlan plan = make_truncation_plan(s, 3.0);
    std::vector<double> clean = series_vector(s, kA2, 3.0, plan);

    std::vector<double> e = s.base.entries();
    e[1 * 2 + 0] = 7.5e6;  // garbage where zeros belong
    e[1 * 2 + 1] = -0.0;
    StoppedMatrix poisoned{NonNegativeMatrix(2, e), s.stopped_type, s.rho_estimate};
    std::vector<double> dirty = series_vector(poisoned, kA2, 3.0, plan);
    CHECK(clean == dirty);
}

TEST_CASE("resolvent_vector on the worked examples") {
    // (lambda I - B) = [[2,0],[-1,1]], inverse by hand -> v = (1,1).
    std::vector<double> v = resolvent_vector(kOnes2, 0, 2.0);
    CHECK(linf(v, {1.0, 1.0}) < 1e-12);

    CHECK(resolvent_vector(kScalar3, 0, 3.0)[0] == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<double> v2 = resolvent_vector(kA2, 1, 3.0);
    CHECK(v2[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(linf(normalized_l1(v2), {0.5, 0.5}) < 1e-12);
}

TEST_CASE("resolvent_vector rejects lambda at or below rho(B)") {
    // For the all-ones matrix stopped at 0, rho(B) = 1: lambda = 1 is singular.
    CHECK_THROWS_AS(resolvent_vector(kOnes2, 0, 1.0), LinearSolveError);
}

TEST_CASE("path_sum_check equals one at the Perron eigenvalue") {
    TruncationPlan p0 = make_truncation_plan(stopped_matrix(kOnes2, 0), 2.0, 1e-12);
    CHECK(path_sum_check(kOnes2, 0, 2.0, p0) == doctest::Approx(1.0).epsilon(1e-10));

    TruncationPlan p1 = make_truncation_plan(stopped_matrix(kScalar3, 0), 3.0);
    CHECK(path_sum_check(kScalar3, 0, 3.0, p1) == doctest::Approx(1.0).epsilon(1e-12));

    // Closed form for [[0,1],[3,2]], i=1: sum_{n>=2} 3^{-n} 3 * 2^{n-2} = 1.
    TruncationPlan p2 = make_truncation_plan(stopped_matrix(kA2, 0), 3.0, 1e-12);
    CHECK(path_sum_check(kA2, 0, 3.0, p2) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("path_sum_check is strictly increasing in 1/lambda") {
    std::mt19937_64 rng(11);
    NonNegativeMatrix A = random_primitive_matrix(rng, 4);
    double lambda = perron_pair(A).lambda;
    StoppedMatrix s = stopped_matrix(A, 1);
    double prev = -1.0;
    for (double factor : {1.5, 1.35, 1.2, 1.1, 1.02}) {
        TruncationPlan plan = make_truncation_plan(s, factor * lambda, 1e-12);
        double ps = path_sum_check(A, 1, factor * lambda, plan);
        CHECK(ps > prev);
        CHECK(ps < 1.0);  // below the fixed point for lambda above the eigenvalue
        prev = ps;
    }
}

TEST_CASE("stationary_markov on the worked examples") {
    CHECK(stationary_markov(mat(1, {1}))[0] == doctest::Approx(1.0));

    // pi P = pi solved by hand: (1/3, 2/3).
    std::vector<double> pi = stationary_markov(mat(2, {0.5, 0.5, 0.25, 0.75}));
    CHECK(linf(pi, {1.0 / 3.0, 2.0 / 3.0}) < 1e-12);

    // Doubly stochastic: uniform.
    std::vector<double> pi3 = stationary_markov(
        mat(3, {0.4, 0.3, 0.3, 0.3, 0.4, 0.3, 0.3, 0.3, 0.4}));
    CHECK(linf(pi3, {1.0 / 3, 1.0 / 3, 1.0 / 3}) < 1e-12);

    CHECK_THROWS_AS(stationary_markov(mat(2, {0.5, 0.6, 0.25, 0.75})), ValidationError);
}

TEST_CASE("matrix_exponential against a hand-computed 2x2 flow") {
    // M = (B - I) with B = [[0,0],[1,1]] satisfies M^2 = -M, so
    // e^{Mt} = I + (1 - e^{-t}) M = [[e^{-t}, 0], [1 - e^{-t}, 1]].
    for (double t : {0.0, 0.3, 1.0, 2.5}) {
        std::vector<double> m = {-t, 0.0, t, 0.0};
        std::vector<double> e = matrix_exponential(2, m);
        CHECK(e[0] == doctest::Approx(std::exp(-t)).epsilon(1e-12));
        CHECK(e[1] == doctest::Approx(0.0));
        CHECK(e[2] == doctest::Approx(1.0 - std::exp(-t)).epsilon(1e-12));
        CHECK(e[3] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

// ---------------------------------------------------------------------------
// Randomized properties.

TEST_CASE("evaluators agree with the oracle on random primitive matrices") {
    std::mt19937_64 rng(20240601);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 2 + static_cast<int>(rng() % 19);  // up to 20
        double zf = (trial % 3 == 0) ? 0.3 : 0.0;
        NonNegativeMatrix A = random_primitive_matrix(rng, n, zf);
        PerronPair pair = perron_pair(A, 1e-13);
        int i = static_cast<int>(rng() % n);
        StoppedMatrix s = stopped_matrix(A, i);
        TruncationPlan plan = make_truncation_plan(s, pair.lambda, 1e-10);

        std::vector<double> vs = series_vector(s, A, pair.lambda, plan);
        std::vector<double> vr = resolvent_vector(A, i, pair.lambda);

        CHECK(vs[i] == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(linf(normalized_l1(vs), pair.u) < 1e-8);
        CHECK(linf(normalized_l1(vr), pair.u) < 1e-8);
        CHECK(linf(normalized_l1(vs), normalized_l1(vr)) < 1e-8);

        // Proof identity: ||v^T A - lambda v^T||_1 small for the raw series v.
        double resid = 0.0;
        for (int j = 0; j < n; ++j) {
            double va = 0.0;
            for (int k = 0; k < n; ++k) va += vs[k] * A(k, j);
            resid += std::abs(va - pair.lambda * vs[j]);
        }
        CHECK(resid <= 10 * 1e-10 * pair.lambda * n);

        // Path sum at the true eigenvalue.
        CHECK(path_sum_check(A, i, pair.lambda, plan) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("scale invariance of the Perron pair") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 10; ++trial) {
        int n = 2 + static_cast<int>(rng() % 9);
        NonNegativeMatrix A = random_primitive_matrix(rng, n);
        PerronPair base = perron_pair(A, 1e-13);
        for (double c : {0.25, 1.0 / base.lambda, 3.0}) {
            PerronPair scaled = perron_pair(A.scaled(c), 1e-13);
            CHECK(std::abs(scaled.lambda - c * base.lambda) <= 1e-10 * std::max(1.0, c * base.lambda));
            CHECK(linf(scaled.u, base.u) < 1e-10);
        }
    }
}

TEST_CASE("series v(i)=1 for every stopped type") {
    std::mt19937_64 rng(555);
    NonNegativeMatrix A = random_primitive_matrix(rng, 6, 0.2);
    double lambda = perron_pair(A, 1e-13).lambda;
    for (int i = 0; i < A.size(); ++i) {
        StoppedMatrix s = stopped_matrix(A, i);
        TruncationPlan plan = make_truncation_plan(s, lambda, 1e-10);
        CHECK(series_vector(s, A, lambda, plan)[i] == doctest::Approx(1.0).epsilon(1e-8));
    }
}
