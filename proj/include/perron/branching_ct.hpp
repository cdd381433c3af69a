#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "perron/galton_watson.hpp"
#include "perron/matrix.hpp"

namespace perron {

enum class CtStopReason { extinct, clock_killed, time_cap, size_cap };

struct CtClockConfig {
    double lambda = 1.5;                 // kill rate lambda - 1
    double time_cap = 1000.0;
    std::uint64_t size_cap = 100000000;  // abort threshold
};

struct CtTrajectory {
    int stopped_type = 0;
    double weighted_integral = 0.0;  // integral of |Z_t|_1 (weighted) up to the stop
    long event_count = 0;
    CtStopReason stop_reason = CtStopReason::extinct;
};

// Event-driven run of the stopped continuous-time process.  The initial
// population is one full-law offspring sample of type i; every individual
// carries rate 1; a type-i individual dies without offspring, any other is
// replaced by an offspring sample.  An independent Exp(lambda-1) kill time
// realizes the e^{-(lambda-1)t} weight, so weighted_integral accumulates
// the plain |Z|_1 dt up to min(kill, extinction, time_cap).  Requires
// lambda > 1; throws SimulationCapError past clock.size_cap.
CtTrajectory run_stopped_ct(int stopped_type, const OffspringLaw& law,
                            const CtClockConfig& clock, std::mt19937_64& rng);

// Analytic-weight variant for lambda <= 1 (critical scaling): no kill
// clock; accumulates the exact piecewise integral of e^{-(lambda-1)t}|Z_t|_1
// until extinction or time_cap.
CtTrajectory run_stopped_ct_weighted(int stopped_type, const OffspringLaw& law,
                                     const CtClockConfig& clock,
                                     std::mt19937_64& rng);

// Empirical mean of Z_t^i(k) on a time grid, for comparison against the
// closed form row_i(A) e^{(B-I)t}.
struct CtMeanCurve {
    std::vector<double> times;
    std::vector<std::vector<double>> mean;      // [time][type]
    std::vector<std::vector<double>> stderr_;   // [time][type]
    long replicas = 0;
};

CtMeanCurve expectation_check_ct(const NonNegativeMatrix& A, int stopped_type,
                                 const std::vector<double>& t_grid,
                                 long replicas, std::uint64_t master_seed);

// row_i(A) e^{(B-I)t}: the exact mean of the stopped process at time t.
std::vector<double> ct_mean_exact(const NonNegativeMatrix& A, int stopped_type,
                                  double t);

}  // namespace perron
