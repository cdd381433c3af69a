#include "perron/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

namespace perron {

namespace {

std::string fmt_index(int i, int j) {
    std::ostringstream os;
    os << "(" << i + 1 << "," << j + 1 << ")";
    return os.str();
}

}  // namespace

NonNegativeMatrix::NonNegativeMatrix(int n, std::vector<double> entries)
    : n_(n), e_(std::move(entries)) {
    if (n_ < 1) throw ValidationError("matrix dimension must be >= 1");
    if (e_.size() != static_cast<std::size_t>(n_) * n_)
        throw ValidationError("entry count does not match dimension");
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            double v = (*this)(i, j);
            if (!std::isfinite(v))
                throw ValidationError("non-finite entry at " + fmt_index(i, j));
            if (v < 0.0)
                throw ValidationError("negative entry at " + fmt_index(i, j));
        }
    }
}

std::vector<double> NonNegativeMatrix::row(int i) const {
    if (i < 0 || i >= n_) throw ValidationError("row index out of range");
    return std::vector<double>(e_.begin() + static_cast<std::size_t>(i) * n_,
                               e_.begin() + static_cast<std::size_t>(i + 1) * n_);
}

double NonNegativeMatrix::row_sum(int i) const {
    if (i < 0 || i >= n_) throw ValidationError("row index out of range");
    double s = 0.0;
    for (int j = 0; j < n_; ++j) s += (*this)(i, j);
    return s;
}

double NonNegativeMatrix::max_entry() const {
    return *std::max_element(e_.begin(), e_.end());
}

bool NonNegativeMatrix::is_row_stochastic(double tol) const {
    for (int i = 0; i < n_; ++i)
        if (std::abs(row_sum(i) - 1.0) > tol) return false;
    return true;
}

NonNegativeMatrix NonNegativeMatrix::scaled(double c) const {
    if (!(c > 0.0) || !std::isfinite(c))
        throw ValidationError("scale factor must be positive and finite");
    std::vector<double> e(e_);
    for (double& v : e) v *= c;
    return NonNegativeMatrix(n_, std::move(e));
}

double l1_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

std::vector<double> normalized_l1(const std::vector<double>& v) {
    double s = l1_norm(v);
    if (s <= 0.0) throw ValidationError("cannot L1-normalize a zero vector");
    std::vector<double> out(v);
    for (double& x : out) x /= s;
    return out;
}

// ---------------------------------------------------------------------------
// Primitivity: boolean pattern powers, packed 64 entries per word.

namespace {

class BoolMatrix {
  public:
    BoolMatrix(int n) : n_(n), words_((n + 63) / 64), bits_(static_cast<std::size_t>(n) * words_, 0) {}

    static BoolMatrix pattern_of(const NonNegativeMatrix& A) {
        BoolMatrix b(A.size());
        for (int i = 0; i < A.size(); ++i)
            for (int j = 0; j < A.size(); ++j)
                if (A(i, j) > 0.0) b.set(i, j);
        return b;
    }

    void set(int i, int j) {
        bits_[static_cast<std::size_t>(i) * words_ + j / 64] |= (std::uint64_t{1} << (j % 64));
    }
    bool get(int i, int j) const {
        return (bits_[static_cast<std::size_t>(i) * words_ + j / 64] >> (j % 64)) & 1u;
    }

    // this * other on the boolean semiring: row i of the product is the OR
    // of rows j of `other` over the set bits j of row i.
    BoolMatrix times(const BoolMatrix& other) const {
        BoolMatrix out(n_);
        for (int i = 0; i < n_; ++i) {
            std::uint64_t* dst = &out.bits_[static_cast<std::size_t>(i) * words_];
            for (int j = 0; j < n_; ++j) {
                if (!get(i, j)) continue;
                const std::uint64_t* src = &other.bits_[static_cast<std::size_t>(j) * words_];
                for (int w = 0; w < words_; ++w) dst[w] |= src[w];
            }
        }
        return out;
    }

    bool all_positive() const {
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if (!get(i, j)) return false;
        return true;
    }

    bool operator==(const BoolMatrix& o) const { return bits_ == o.bits_; }

  private:
    int n_;
    int words_;
    std::vector<std::uint64_t> bits_;
};

}  // namespace

PrimitivityReport validate_primitive(const NonNegativeMatrix& A) {
    const int n = A.size();
    const long cap = static_cast<long>(n - 1) * (n - 1) + 1;  // Wielandt bound
    BoolMatrix base = BoolMatrix::pattern_of(A);
    BoolMatrix power = base;
    PrimitivityReport report;
    for (long m = 1; m <= cap; ++m) {
        if (power.all_positive()) {
            report.is_primitive = true;
            report.exponent = static_cast<int>(m);
            return report;
        }
        BoolMatrix next = power.times(base);
        if (next == power) {
            // Pattern reached a fixed point with zeros: no later power can
            // become positive.
            report.reason = "pattern of A^m stabilized with zero entries at m=" +
                            std::to_string(m) + "; matrix is reducible";
            return report;
        }
        power = std::move(next);
    }
    report.reason = "no power up to the Wielandt bound (n-1)^2+1=" +
                    std::to_string(cap) + " is entrywise positive; matrix is imprimitive";
    return report;
}

// ---------------------------------------------------------------------------
// Left power iteration.

PerronPair perron_pair(const NonNegativeMatrix& A, double tol, long max_iter) {
    PrimitivityReport rep = validate_primitive(A);
    if (!rep.is_primitive)
        throw PreconditionError("perron_pair requires a primitive matrix: " + rep.reason);
    const int n = A.size();
    std::vector<double> x(n, 1.0 / n);
    std::vector<double> y(n);
    double lambda = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    for (long it = 0; it < max_iter; ++it) {
        // y = x^T A
        for (int j = 0; j < n; ++j) y[j] = 0.0;
        for (int i = 0; i < n; ++i) {
            double xi = x[i];
            if (xi == 0.0) continue;
            for (int j = 0; j < n; ++j) y[j] += xi * A(i, j);
        }
        lambda = 0.0;
        for (int j = 0; j < n; ++j) lambda += y[j];  // |y|_1, y >= 0
        if (!(lambda > 0.0))
            throw ConvergenceError("power iteration collapsed to zero", residual, it);
        residual = 0.0;
        for (int j = 0; j < n; ++j) residual += std::abs(y[j] - lambda * x[j]);
        if (residual <= tol) {
            PerronPair out;
            out.lambda = lambda;
            out.u = x;
            out.residual = residual;
            return out;
        }
        for (int j = 0; j < n; ++j) x[j] = y[j] / lambda;
    }
    throw ConvergenceError("power iteration did not reach tol within max_iter",
                           residual, max_iter);
}

// ---------------------------------------------------------------------------
// Stopped matrix and spectral-radius margin.

StoppedMatrix stopped_matrix(const NonNegativeMatrix& A, int stopped_type) {
    const int n = A.size();
    if (stopped_type < 0 || stopped_type >= n)
        throw ValidationError("stopped type index out of range");
    std::vector<double> e = A.entries();
    for (int j = 0; j < n; ++j) e[static_cast<std::size_t>(stopped_type) * n + j] = 0.0;
    NonNegativeMatrix B(n, std::move(e));

    // B may be reducible or nilpotent, so plain power iteration can die or
    // oscillate.  Iterate on B + I (spectra shift exactly by 1 for
    // non-negative B) and take the max L1 growth ratio over the last 10 of
    // 200 steps, minus the shift.
    const double shift = 1.0;
    const int iters = 200;
    const int window = 10;
    std::vector<double> x(n, 1.0 / n);
    std::vector<double> y(n);
    double rho = 0.0;
    for (int it = 0; it < iters; ++it) {
        for (int j = 0; j < n; ++j) y[j] = shift * x[j];
        for (int i = 0; i < n; ++i) {
            double xi = x[i];
            if (xi == 0.0) continue;
            for (int j = 0; j < n; ++j) y[j] += xi * B(i, j);
        }
        double ratio = 0.0;
        for (int j = 0; j < n; ++j) ratio += y[j];  // |y|_1 with |x|_1 = 1
        if (it >= iters - window) rho = std::max(rho, ratio - shift);
        for (int j = 0; j < n; ++j) x[j] = y[j] / ratio;
    }
    return StoppedMatrix{std::move(B), stopped_type, std::max(rho, 0.0)};
}

TruncationPlan make_truncation_plan(const StoppedMatrix& stopped, double lambda,
                                    double tol, long n_max) {
    if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    if (n_max < 1) throw ValidationError("n_max must be positive");
    TruncationPlan plan;
    plan.tol = tol;
    plan.n_max = n_max;
    double r = stopped.rho_estimate / lambda;
    // 10% safety margin on the decay rate, capped below 1 so the bound
    // stays usable whenever rho_estimate < lambda; the n_max fallback is
    // reserved for rho_estimate >= lambda.
    if (r < 1.0) plan.ratio = std::min(1.1 * r, 0.5 * (1.0 + r));
    return plan;
}

// ---------------------------------------------------------------------------
// Series evaluator.

namespace {

// Shared iteration core.  `rows` supplies the rows of B; the stopped row
// is skipped structurally, so its contents are never read.
std::vector<double> series_eval(const NonNegativeMatrix& rows, int stopped_type,
                                const std::vector<double>& first_row,
                                double lambda, const TruncationPlan& plan) {
    if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
    const int n = rows.size();
    std::vector<double> w(first_row);  // w_n = lambda^{-n} r_n
    for (double& v : w) v /= lambda;
    std::vector<double> sum(n, 0.0);
    std::vector<double> next(n);
    double tail_factor = plan.ratio ? *plan.ratio / (1.0 - *plan.ratio)
                                    : std::numeric_limits<double>::infinity();
    double bound = std::numeric_limits<double>::infinity();
    for (long term = 1; term <= plan.n_max; ++term) {
        for (int j = 0; j < n; ++j) sum[j] += w[j];
        double wn = l1_norm(w);
        // Exactly-zero tail, or terms stuck in the denormal range where
        // rounding can cycle: nothing representable is left to add.
        if (wn < 1e-300) return sum;
        bound = wn * tail_factor;
        if (bound < plan.tol) return sum;
        for (int j = 0; j < n; ++j) next[j] = 0.0;
        for (int k = 0; k < n; ++k) {
            if (k == stopped_type) continue;
            double wk = w[k];
            if (wk == 0.0) continue;
            for (int j = 0; j < n; ++j) next[j] += wk * rows(k, j);
        }
        for (int j = 0; j < n; ++j) w[j] = next[j] / lambda;
    }
    throw TruncationError("series tail bound not satisfied within n_max terms",
                          std::move(sum), bound, plan.n_max);
}

}  // namespace

std::vector<double> series_vector(const NonNegativeMatrix& A, int stopped_type,
                                  double lambda, const TruncationPlan& plan) {
    if (stopped_type < 0 || stopped_type >= A.size())
        throw ValidationError("stopped type index out of range");
    // Rows k != stopped_type of B equal those of A, so A itself can supply
    // them; the stopped row is skipped either way.
    return series_eval(A, stopped_type, A.row(stopped_type), lambda, plan);
}

std::vector<double> series_vector(const StoppedMatrix& stopped,
                                  const NonNegativeMatrix& A, double lambda,
                                  const TruncationPlan& plan) {
    if (stopped.base.size() != A.size())
        throw ValidationError("stopped matrix dimension mismatch");
    return series_eval(stopped.base, stopped.stopped_type,
                       A.row(stopped.stopped_type), lambda, plan);
}

double path_sum_check(const NonNegativeMatrix& A, int stopped_type,
                      double lambda, const TruncationPlan& plan) {
    return series_vector(A, stopped_type, lambda, plan)[stopped_type];
}

// ---------------------------------------------------------------------------
// Resolvent evaluator: solve v (lambda I - B) = row i of A.

std::vector<double> resolvent_vector(const NonNegativeMatrix& A,
                                     int stopped_type, double lambda) {
    const int n = A.size();
    if (stopped_type < 0 || stopped_type >= n)
        throw ValidationError("stopped type index out of range");
    if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");

    // Row system v M = a with M = lambda I - B is the column system
    // M^T v^T = a^T; build M^T directly.
    std::vector<double> m(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            double b_cr = (c == stopped_type) ? 0.0 : A(c, r);  // B(c,r)
            m[static_cast<std::size_t>(r) * n + c] = (r == c ? lambda : 0.0) - b_cr;
        }
    }
    std::vector<double> v = A.row(stopped_type);

    // Partial-pivoting elimination.
    const double pivot_floor = 1e-12;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(m[static_cast<std::size_t>(r) * n + col]) >
                std::abs(m[static_cast<std::size_t>(pivot) * n + col]))
                pivot = r;
        double pv = m[static_cast<std::size_t>(pivot) * n + col];
        if (std::abs(pv) < pivot_floor)
            throw LinearSolveError(
                "lambda I - B is singular or ill-conditioned (pivot " +
                    std::to_string(std::abs(pv)) + "); lambda <= rho(B)?",
                std::abs(pv));
        if (pivot != col) {
            for (int c = col; c < n; ++c)
                std::swap(m[static_cast<std::size_t>(pivot) * n + c],
                          m[static_cast<std::size_t>(col) * n + c]);
            std::swap(v[pivot], v[col]);
        }
        for (int r = col + 1; r < n; ++r) {
            double f = m[static_cast<std::size_t>(r) * n + col] / pv;
            if (f == 0.0) continue;
            m[static_cast<std::size_t>(r) * n + col] = 0.0;
            for (int c = col + 1; c < n; ++c)
                m[static_cast<std::size_t>(r) * n + c] -=
                    f * m[static_cast<std::size_t>(col) * n + c];
            v[r] -= f * v[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = v[r];
        for (int c = r + 1; c < n; ++c)
            s -= m[static_cast<std::size_t>(r) * n + c] * v[c];
        v[r] = s / m[static_cast<std::size_t>(r) * n + r];
    }
    return v;
}

// ---------------------------------------------------------------------------
// Markov stationary distribution: lambda forced to 1.

std::vector<double> stationary_markov(const NonNegativeMatrix& P, double tol,
                                      long max_iter) {
    const int n = P.size();
    for (int i = 0; i < n; ++i)
        if (std::abs(P.row_sum(i) - 1.0) > 1e-12)
            throw ValidationError("row " + std::to_string(i + 1) +
                                  " does not sum to 1; matrix is not row-stochastic");
    PrimitivityReport rep = validate_primitive(P);
    if (!rep.is_primitive)
        throw PreconditionError("stationary_markov requires a primitive chain: " +
                                rep.reason);
    std::vector<double> x(n, 1.0 / n);
    std::vector<double> y(n);
    double residual = std::numeric_limits<double>::infinity();
    for (long it = 0; it < max_iter; ++it) {
        for (int j = 0; j < n; ++j) y[j] = 0.0;
        for (int i = 0; i < n; ++i) {
            double xi = x[i];
            for (int j = 0; j < n; ++j) y[j] += xi * P(i, j);
        }
        residual = 0.0;
        for (int j = 0; j < n; ++j) residual += std::abs(y[j] - x[j]);
        x.swap(y);
        if (residual <= tol) return x;
    }
    throw ConvergenceError("stationary distribution did not converge", residual,
                           max_iter);
}

// ---------------------------------------------------------------------------
// Matrix exponential by scaling and squaring.

std::vector<double> matrix_exponential(int n, const std::vector<double>& m) {
    if (n < 1 || m.size() != static_cast<std::size_t>(n) * n)
        throw ValidationError("matrix_exponential: bad dimensions");
    double norm = 0.0;  // max row sum of |entries|
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += std::abs(m[static_cast<std::size_t>(i) * n + j]);
        norm = std::max(norm, s);
    }
    int squarings = 0;
    double scale = 1.0;
    while (norm * scale > 0.5) {
        scale *= 0.5;
        ++squarings;
    }

    auto matmul = [n](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                double aik = a[static_cast<std::size_t>(i) * n + k];
                if (aik == 0.0) continue;
                for (int j = 0; j < n; ++j)
                    out[static_cast<std::size_t>(i) * n + j] +=
                        aik * b[static_cast<std::size_t>(k) * n + j];
            }
        return out;
    };

    std::vector<double> scaled(m);
    for (double& v : scaled) v *= scale;

    // Taylor series of e^{scaled}; terms shrink at least geometrically
    // since the scaled norm is <= 0.5.
    std::vector<double> result(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) result[static_cast<std::size_t>(i) * n + i] = 1.0;
    std::vector<double> term = result;
    for (int k = 1; k <= 64; ++k) {
        term = matmul(term, scaled);
        for (double& v : term) v /= k;
        double tnorm = 0.0;
        for (double v : term) tnorm = std::max(tnorm, std::abs(v));
        for (std::size_t idx = 0; idx < result.size(); ++idx) result[idx] += term[idx];
        if (tnorm < 1e-18) break;
    }
    for (int s = 0; s < squarings; ++s) result = matmul(result, result);
    return result;
}

// ---------------------------------------------------------------------------
// Seeded random primitive matrix for tests and the CLI.

NonNegativeMatrix random_primitive_matrix(std::mt19937_64& rng, int n,
                                          double zero_fraction) {
    if (n < 1) throw ValidationError("dimension must be >= 1");
    if (zero_fraction < 0.0 || zero_fraction >= 1.0)
        throw ValidationError("zero_fraction must be in [0,1)");
    std::uniform_real_distribution<double> entry(0.0, 2.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<double> e(static_cast<std::size_t>(n) * n);
        for (double& v : e) {
            double x = entry(rng);
            while (x <= 0.0) x = entry(rng);  // guarantee a positive pattern
            if (zero_fraction > 0.0 && coin(rng) < zero_fraction) x = 0.0;
            v = x;
        }
        NonNegativeMatrix A(n, std::move(e));
        if (validate_primitive(A).is_primitive) return A;
    }
    throw ValidationError("failed to draw a primitive matrix in 1000 attempts");
}

}  // namespace perron
