#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "perron/errors.hpp"

namespace perron {

// Dense non-negative square matrix, row-major.  Entry (i,j) is the mean
// number of type-j offspring of one type-i individual.  Immutable after
// construction; derived matrices are built as fresh values.
class NonNegativeMatrix {
  public:
    NonNegativeMatrix(int n, std::vector<double> entries);

    int size() const { return n_; }
    double operator()(int i, int j) const {
        return e_[static_cast<std::size_t>(i) * n_ + j];
    }
    const std::vector<double>& entries() const { return e_; }

    std::vector<double> row(int i) const;
    double row_sum(int i) const;
    double max_entry() const;
    bool is_row_stochastic(double tol = 1e-12) const;

    // Entry-wise c*A.  c must be positive and finite.
    NonNegativeMatrix scaled(double c) const;

  private:
    int n_;
    std::vector<double> e_;
};

struct PrimitivityReport {
    bool is_primitive = false;
    std::optional<int> exponent;  // smallest m with A^m > 0 entrywise
    std::string reason;           // diagnostic when not primitive
};

// Dominant left eigenpair: u^T A = lambda u^T, |u|_1 = 1, u > 0.
struct PerronPair {
    double lambda = 0.0;
    std::vector<double> u;
    double residual = 0.0;  // ||u^T A - lambda u^T||_1 at convergence
};

// A with its stopped row zeroed, plus a power-iteration estimate of the
// spectral radius of the result.  rho_estimate is an order-of-magnitude
// bound, not an exact eigenvalue (B may be reducible or nilpotent).
struct StoppedMatrix {
    NonNegativeMatrix base;
    int stopped_type;
    double rho_estimate;
};

// Truncation policy for the series evaluator.  ratio is the certified
// geometric decay rate rho_estimate/lambda (with safety margin); empty
// when no usable bound exists, in which case the evaluator runs to n_max
// and reports a truncation error unless the terms vanish exactly.
struct TruncationPlan {
    double tol = 1e-10;
    long n_max = 1000000;
    std::optional<double> ratio;
};

// Exact primitivity test on the boolean pattern of A: some power
// m <= (n-1)^2 + 1 (Wielandt bound) must be entrywise positive.
// Uses packed boolean matrix powers, never floating accumulation.
PrimitivityReport validate_primitive(const NonNegativeMatrix& A);

// Left power iteration from the uniform vector, L1-normalized each step.
// Throws PreconditionError when A is not primitive, ConvergenceError
// (carrying the last residual) when max_iter is exhausted.
PerronPair perron_pair(const NonNegativeMatrix& A, double tol = 1e-12,
                       long max_iter = 200000);

// B = A with row stopped_type zeroed; rho via 200 shifted power
// iterations, max ratio over the last 10.
StoppedMatrix stopped_matrix(const NonNegativeMatrix& A, int stopped_type);

// Plan with ratio = 1.1 * rho_estimate / lambda when that is < 1.
TruncationPlan make_truncation_plan(const StoppedMatrix& stopped, double lambda,
                                    double tol = 1e-10, long n_max = 1000000);

// v(j) = sum_{n>=1} lambda^{-n} (A B^{n-1})(i,j), evaluated by iterating
// the row vector r_n = r_{n-1} B with r_1 = row i of A.  The iteration
// skips the stopped row structurally (never reads it).  When lambda is
// the Perron eigenvalue, v(i) = 1 up to plan.tol and v is the left
// Perron eigenvector scaled to v(i) = 1.
std::vector<double> series_vector(const NonNegativeMatrix& A, int stopped_type,
                                  double lambda, const TruncationPlan& plan);
std::vector<double> series_vector(const StoppedMatrix& stopped,
                                  const NonNegativeMatrix& A, double lambda,
                                  const TruncationPlan& plan);

// v = (row i of A) (lambda I - B)^{-1} via partial-pivoting elimination.
// Throws LinearSolveError when a pivot falls below 1e-12 (signals
// lambda <= rho(B)).
std::vector<double> resolvent_vector(const NonNegativeMatrix& A,
                                     int stopped_type, double lambda);

// Coordinate i of the series vector: the lambda-weighted sum over paths
// that leave i and first return to i.  Equals 1 when lambda is the
// Perron eigenvalue.
double path_sum_check(const NonNegativeMatrix& A, int stopped_type,
                      double lambda, const TruncationPlan& plan);

// Invariant probability of a primitive row-stochastic matrix: fixed-point
// iteration pi <- pi P (lambda forced to 1).
std::vector<double> stationary_markov(const NonNegativeMatrix& P,
                                      double tol = 1e-13,
                                      long max_iter = 200000);

// e^M for a dense n x n matrix (row-major, general sign), by scaling and
// squaring with a truncated Taylor series.
std::vector<double> matrix_exponential(int n, const std::vector<double>& m);

// Test/CLI helper: entries uniform on [0,2]; zero_fraction of them are
// forced to exactly zero, redrawing until the result is primitive.
NonNegativeMatrix random_primitive_matrix(std::mt19937_64& rng, int n,
                                          double zero_fraction = 0.0);

// L1 helpers shared by evaluators and estimators.
double l1_norm(const std::vector<double>& v);
std::vector<double> normalized_l1(const std::vector<double>& v);

}  // namespace perron
