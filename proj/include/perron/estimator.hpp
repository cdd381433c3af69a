#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perron/branching_ct.hpp"
#include "perron/galton_watson.hpp"
#include "perron/matrix.hpp"

namespace perron {

enum class EstimatorMethod { gw_reciprocal, gw_vector, ct_reciprocal };
enum class ScalingTarget { critical, supercritical_margin };

struct Estimate {
    double value = 0.0;
    double stderr_ = 0.0;
    long replicas = 0;
    double ci_low = 0.0;   // value - 1.96 stderr
    double ci_high = 0.0;  // value + 1.96 stderr
};

// Fixed-key stop-reason counts across all replicas (and start types).
struct StopReasonHistogram {
    long extinct = 0;
    long clock_killed = 0;
    long generation_cap = 0;
    long time_cap = 0;
    long size_cap = 0;

    void add(GwStopReason r);
    void add(CtStopReason r);
    long capped() const { return generation_cap + time_cap + size_cap; }
    long total() const {
        return extinct + clock_killed + generation_cap + time_cap + size_cap;
    }
};

struct EigenvectorEstimate {
    std::vector<Estimate> u_hat;
    EstimatorMethod method = EstimatorMethod::gw_reciprocal;
    double lambda_used = 0.0;  // effective eigenvalue c * lambda(A)
    double c_used = 1.0;
    double sum_u_hat = 0.0;               // normalization diagnostic, expect ~1
    std::optional<double> v_start_raw;    // gw_vector: mean v(i) before normalizing
    std::optional<int> start_type;        // gw_vector only
    StopReasonHistogram stops;
    double s_max_over_mean = 0.0;         // heavy-tail diagnostic, worst start type
};

// u(i) = 1 / mean(S_i) with S = sum of recorded sizes (clock mode) or
// sum of lambda_eff^{-n} sizes(n) (analytic mode), one batch of replicas
// per start type; delta-method standard errors.  Replica r of type i uses
// the stream derived from (master_seed, i, r), so results are independent
// of the thread schedule.
EigenvectorEstimate estimate_u_gw_reciprocal(const NonNegativeMatrix& A,
                                             long replicas, ClockConfig clock,
                                             LawKind kind, double c,
                                             std::uint64_t master_seed,
                                             int threads = 0);

// All coordinates of v from runs started at one type i (per-type
// recording), normalized to unit L1; covariance-aware delta-method errors.
EigenvectorEstimate estimate_u_gw_vector(const NonNegativeMatrix& A,
                                         int start_type, long replicas,
                                         ClockConfig clock, LawKind kind,
                                         double c, std::uint64_t master_seed,
                                         int threads = 0);

// Continuous-time reciprocal estimator; uses the exponential kill clock
// when lambda_eff > 1, the analytic-weight run otherwise.
EigenvectorEstimate estimate_u_ct(const NonNegativeMatrix& A, long replicas,
                                  CtClockConfig clock, LawKind kind, double c,
                                  std::uint64_t master_seed, int threads = 0);

// critical -> 1/lambda(A); supercritical_margin -> 1.5/lambda(A).
double choose_scaling(const NonNegativeMatrix& A, ScalingTarget target);

// Heuristic default start type for the vector method: the row with the
// largest sum (most offspring per individual).
int default_start_type(const NonNegativeMatrix& A);

// Thread-count resolution: request > 0 wins, else PERRON_THREADS, else
// hardware concurrency.
int resolve_thread_count(int requested);

}  // namespace perron
