#include "perron/branching_ct.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "perron/rng.hpp"

namespace perron {

namespace {

// Index of the individual hit by the next event: uniform over the living
// population, by linear scan over type counts (n is small).
int pick_type(const Population& pop, std::uint64_t total, std::mt19937_64& rng) {
    double u = uniform01(rng) * static_cast<double>(total);
    double acc = 0.0;
    int n = static_cast<int>(pop.counts.size());
    for (int j = 0; j < n; ++j) {
        acc += static_cast<double>(pop.counts[j]);
        if (u < acc) return j;
    }
    return n - 1;
}

void apply_event(Population& pop, int type, int stopped_type,
                 const OffspringLaw& law, std::mt19937_64& rng) {
    pop.counts[type] -= 1;  // the reproducing (or dying) individual is replaced
    if (type == stopped_type) return;
    Population kids = sample_offspring_aggregate(law, type, 1, rng);
    int n = law.types();
    for (int l = 0; l < n; ++l) pop.counts[l] += kids.counts[l];
}

}  // namespace

CtTrajectory run_stopped_ct(int stopped_type, const OffspringLaw& law,
                            const CtClockConfig& clock, std::mt19937_64& rng) {
    const int n = law.types();
    if (stopped_type < 0 || stopped_type >= n)
        throw ValidationError("stopped type index out of range");
    if (!(clock.lambda > 1.0))
        throw PreconditionError("exponential kill clock requires lambda > 1");

    CtTrajectory traj;
    traj.stopped_type = stopped_type;

    const double kill_time = exp_draw(rng, clock.lambda - 1.0);
    const double horizon = std::min(kill_time, clock.time_cap);

    // Z_0 drawn from the full type-i offspring law.
    Population pop = sample_offspring_aggregate(law, stopped_type, 1, rng);
    double t = 0.0;
    while (true) {
        std::uint64_t total = pop.total();
        if (total == 0) {
            traj.stop_reason = CtStopReason::extinct;
            return traj;
        }
        if (total > clock.size_cap) {
            traj.stop_reason = CtStopReason::size_cap;
            throw SimulationCapError("population size " + std::to_string(total) +
                                     " exceeded size_cap at time " + std::to_string(t));
        }
        double gap = exp_draw(rng, static_cast<double>(total));
        if (t + gap >= horizon) {
            traj.weighted_integral += static_cast<double>(total) * (horizon - t);
            traj.stop_reason = kill_time <= clock.time_cap ? CtStopReason::clock_killed
                                                           : CtStopReason::time_cap;
            return traj;
        }
        traj.weighted_integral += static_cast<double>(total) * gap;
        t += gap;
        int type = pick_type(pop, total, rng);
        apply_event(pop, type, stopped_type, law, rng);
        traj.event_count += 1;
    }
}

CtTrajectory run_stopped_ct_weighted(int stopped_type, const OffspringLaw& law,
                                     const CtClockConfig& clock,
                                     std::mt19937_64& rng) {
    const int n = law.types();
    if (stopped_type < 0 || stopped_type >= n)
        throw ValidationError("stopped type index out of range");
    const double rate = clock.lambda - 1.0;  // may be zero or negative

    // Exact integral of e^{-rate t} over [a, b], both weights evaluated
    // relative to a for stability.
    auto weighted_span = [rate](double a, double b) {
        if (std::abs(rate) < 1e-12) return b - a;
        return std::exp(-rate * a) * (-std::expm1(-rate * (b - a))) / rate;
    };

    CtTrajectory traj;
    traj.stopped_type = stopped_type;

    Population pop = sample_offspring_aggregate(law, stopped_type, 1, rng);
    double t = 0.0;
    while (true) {
        std::uint64_t total = pop.total();
        if (total == 0) {
            traj.stop_reason = CtStopReason::extinct;
            return traj;
        }
        if (total > clock.size_cap) {
            traj.stop_reason = CtStopReason::size_cap;
            throw SimulationCapError("population size " + std::to_string(total) +
                                     " exceeded size_cap at time " + std::to_string(t));
        }
        double gap = exp_draw(rng, static_cast<double>(total));
        if (t + gap >= clock.time_cap) {
            traj.weighted_integral +=
                static_cast<double>(total) * weighted_span(t, clock.time_cap);
            traj.stop_reason = CtStopReason::time_cap;
            return traj;
        }
        traj.weighted_integral += static_cast<double>(total) * weighted_span(t, t + gap);
        t += gap;
        int type = pick_type(pop, total, rng);
        apply_event(pop, type, stopped_type, law, rng);
        traj.event_count += 1;
    }
}

CtMeanCurve expectation_check_ct(const NonNegativeMatrix& A, int stopped_type,
                                 const std::vector<double>& t_grid,
                                 long replicas, std::uint64_t master_seed) {
    const int n = A.size();
    if (stopped_type < 0 || stopped_type >= n)
        throw ValidationError("stopped type index out of range");
    if (replicas < 1) throw ValidationError("replicas must be positive");
    std::vector<double> grid(t_grid);
    std::sort(grid.begin(), grid.end());
    if (!grid.empty() && grid.front() < 0.0)
        throw ValidationError("time grid must be non-negative");
    const double t_end = grid.empty() ? 0.0 : grid.back();
    const std::size_t g = grid.size();

    OffspringLaw law(LawKind::poisson_rows, A, 1.0);
    std::vector<double> sum(g * n, 0.0), sumsq(g * n, 0.0);

    for (long r = 0; r < replicas; ++r) {
        auto rng = replica_stream(master_seed, static_cast<std::uint64_t>(stopped_type), r);
        Population pop = sample_offspring_aggregate(law, stopped_type, 1, rng);
        double t = 0.0;
        std::size_t next_grid = 0;
        auto snapshot_until = [&](double event_time) {
            while (next_grid < g && grid[next_grid] < event_time) {
                for (int k = 0; k < n; ++k) {
                    double v = static_cast<double>(pop.counts[k]);
                    sum[next_grid * n + k] += v;
                    sumsq[next_grid * n + k] += v * v;
                }
                ++next_grid;
            }
        };
        while (next_grid < g) {
            std::uint64_t total = pop.total();
            if (total == 0) {
                snapshot_until(t_end + 1.0);  // constant zero from here on
                break;
            }
            double gap = exp_draw(rng, static_cast<double>(total));
            // Population is constant on [t, t+gap): snapshot any grid
            // points crossed, boundary owned by the pre-event state.
            snapshot_until(std::min(t + gap, t_end + 1.0));
            t += gap;
            if (t > t_end) break;
            int type = pick_type(pop, total, rng);
            apply_event(pop, type, stopped_type, law, rng);
        }
    }

    CtMeanCurve curve;
    curve.times = grid;
    curve.replicas = replicas;
    curve.mean.assign(g, std::vector<double>(n));
    curve.stderr_.assign(g, std::vector<double>(n));
    for (std::size_t ti = 0; ti < g; ++ti) {
        for (int k = 0; k < n; ++k) {
            double m = sum[ti * n + k] / replicas;
            double var = replicas > 1
                             ? std::max(0.0, (sumsq[ti * n + k] - replicas * m * m) /
                                                 (replicas - 1))
                             : 0.0;
            curve.mean[ti][k] = m;
            curve.stderr_[ti][k] = std::sqrt(var / replicas);
        }
    }
    return curve;
}

std::vector<double> ct_mean_exact(const NonNegativeMatrix& A, int stopped_type,
                                  double t) {
    const int n = A.size();
    if (stopped_type < 0 || stopped_type >= n)
        throw ValidationError("stopped type index out of range");
    // (B - I) t with B = A row-stopped.
    std::vector<double> m(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double b = (i == stopped_type) ? 0.0 : A(i, j);
            m[static_cast<std::size_t>(i) * n + j] = (b - (i == j ? 1.0 : 0.0)) * t;
        }
    std::vector<double> e = matrix_exponential(n, m);
    std::vector<double> out(n, 0.0);
    for (int j = 0; j < n; ++j) {
        double a = A(stopped_type, j);
        if (a == 0.0) continue;
        for (int k = 0; k < n; ++k) out[k] += a * e[static_cast<std::size_t>(j) * n + k];
    }
    return out;
}

}  // namespace perron
