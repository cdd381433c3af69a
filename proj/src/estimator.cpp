#include "perron/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <thread>

#include "perron/rng.hpp"

namespace perron {

void StopReasonHistogram::add(GwStopReason r) {
    switch (r) {
        case GwStopReason::extinct: ++extinct; break;
        case GwStopReason::clock_killed: ++clock_killed; break;
        case GwStopReason::generation_cap: ++generation_cap; break;
    }
}

void StopReasonHistogram::add(CtStopReason r) {
    switch (r) {
        case CtStopReason::extinct: ++extinct; break;
        case CtStopReason::clock_killed: ++clock_killed; break;
        case CtStopReason::time_cap: ++time_cap; break;
        case CtStopReason::size_cap: ++size_cap; break;
    }
}

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("PERRON_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

// Runs body(r) for r in [0, replicas) across a fixed thread partition.
// Outputs must be written to replica-indexed slots; the reduction that
// follows is sequential, so results do not depend on the schedule.
void parallel_replicas(long replicas, int threads,
                       const std::function<void(long)>& body) {
    threads = static_cast<int>(std::max<long>(1, std::min<long>(threads, replicas)));
    if (threads == 1) {
        for (long r = 0; r < replicas; ++r) body(r);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    std::vector<long> error_at(threads, -1);
    long chunk = (replicas + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        long lo = t * chunk;
        long hi = std::min(replicas, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, t, lo, hi]() {
            for (long r = lo; r < hi; ++r) {
                try {
                    body(r);
                } catch (...) {
                    errors[t] = std::current_exception();
                    error_at[t] = r;
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    // Deterministic error choice: the failure with the smallest replica index.
    int winner = -1;
    for (int t = 0; t < threads; ++t)
        if (errors[t] && (winner < 0 || error_at[t] < error_at[winner])) winner = t;
    if (winner >= 0) std::rethrow_exception(errors[winner]);
}

struct MeanStd {
    double mean = 0.0;
    double stderr_ = 0.0;
    double max = 0.0;
};

// Two-pass mean and standard error in fixed replica order.
MeanStd reduce(const std::vector<double>& s) {
    MeanStd out;
    const long n = static_cast<long>(s.size());
    double sum = 0.0;
    for (double v : s) {
        sum += v;
        out.max = std::max(out.max, v);
    }
    out.mean = sum / n;
    if (n > 1) {
        double ss = 0.0;
        for (double v : s) ss += (v - out.mean) * (v - out.mean);
        out.stderr_ = std::sqrt(ss / (n - 1) / n);
    }
    return out;
}

Estimate reciprocal_estimate(const MeanStd& d, long replicas) {
    Estimate e;
    e.value = 1.0 / d.mean;
    e.stderr_ = d.stderr_ / (d.mean * d.mean);  // delta method for 1/x
    e.replicas = replicas;
    e.ci_low = e.value - 1.96 * e.stderr_;
    e.ci_high = e.value + 1.96 * e.stderr_;
    return e;
}

double gw_statistic(const GwTrajectory& traj, GwMode mode, double lambda_eff) {
    if (mode == GwMode::geometric_clock) {
        double s = 0.0;
        for (std::uint64_t z : traj.sizes) s += static_cast<double>(z);
        return s;
    }
    double s = 0.0;
    double w = 1.0;
    for (std::uint64_t z : traj.sizes) {
        w /= lambda_eff;
        s += w * static_cast<double>(z);
    }
    return s;
}

struct EffectiveLaw {
    OffspringLaw law;
    double lambda_eff;
};

EffectiveLaw build_law(const NonNegativeMatrix& A, LawKind kind, double c) {
    if (!(c > 0.0)) throw ValidationError("scaling factor c must be positive");
    double lambda_eff = perron_pair(A.scaled(c)).lambda;
    return EffectiveLaw{OffspringLaw(kind, A, c), lambda_eff};
}

void check_gw_mode(GwMode mode, double lambda_eff) {
    if (mode == GwMode::geometric_clock && !(lambda_eff > 1.0))
        throw PreconditionError(
            "geometric clock requires effective eigenvalue c*lambda > 1 (got " +
            std::to_string(lambda_eff) + "); use a larger c or analytic weights");
    if (mode == GwMode::analytic_weights && lambda_eff > 1.0 + 1e-9)
        throw PreconditionError(
            "analytic weights require a critical or subcritical law, c*lambda <= 1 (got " +
            std::to_string(lambda_eff) + "); paths need not terminate otherwise");
}

}  // namespace

EigenvectorEstimate estimate_u_gw_reciprocal(const NonNegativeMatrix& A,
                                             long replicas, ClockConfig clock,
                                             LawKind kind, double c,
                                             std::uint64_t master_seed,
                                             int threads) {
    if (replicas < 1) throw EstimationError("replicas must be positive");
    const int n = A.size();
    auto [law, lambda_eff] = build_law(A, kind, c);
    check_gw_mode(clock.mode, lambda_eff);
    clock.lambda = lambda_eff;
    threads = resolve_thread_count(threads);

    EigenvectorEstimate est;
    est.method = EstimatorMethod::gw_reciprocal;
    est.lambda_used = lambda_eff;
    est.c_used = c;
    est.u_hat.resize(n);

    for (int i = 0; i < n; ++i) {
        std::vector<double> s(replicas);
        std::vector<GwStopReason> stop(replicas);
        parallel_replicas(replicas, threads, [&](long r) {
            auto rng = replica_stream(master_seed, static_cast<std::uint64_t>(i), r);
            GwTrajectory traj = run_stopped_gw(i, law, clock, rng, false);
            s[r] = gw_statistic(traj, clock.mode, lambda_eff);
            stop[r] = traj.stop_reason;
        });
        long capped = 0;
        for (auto r : stop) {
            est.stops.add(r);
            if (r == GwStopReason::generation_cap) ++capped;
        }
        if (capped == replicas)
            throw EstimationError("every replica for type " + std::to_string(i + 1) +
                                  " hit the generation cap");
        MeanStd d = reduce(s);
        if (!(d.mean > 0.0))
            throw EstimationError("accumulated-size mean is zero for type " +
                                  std::to_string(i + 1) +
                                  "; not enough replicas survived the clock");
        est.u_hat[i] = reciprocal_estimate(d, replicas);
        est.s_max_over_mean = std::max(est.s_max_over_mean, d.max / d.mean);
    }
    for (const Estimate& e : est.u_hat) est.sum_u_hat += e.value;
    return est;
}

EigenvectorEstimate estimate_u_gw_vector(const NonNegativeMatrix& A,
                                         int start_type, long replicas,
                                         ClockConfig clock, LawKind kind,
                                         double c, std::uint64_t master_seed,
                                         int threads) {
    if (replicas < 1) throw EstimationError("replicas must be positive");
    const int n = A.size();
    if (start_type < 0 || start_type >= n)
        throw ValidationError("start type index out of range");
    auto [law, lambda_eff] = build_law(A, kind, c);
    check_gw_mode(clock.mode, lambda_eff);
    clock.lambda = lambda_eff;
    threads = resolve_thread_count(threads);

    // Per-replica coordinate statistics S_r(j) = sum_n w_n Z_n(j).
    std::vector<double> s(static_cast<std::size_t>(replicas) * n);
    std::vector<GwStopReason> stop(replicas);
    parallel_replicas(replicas, threads, [&](long r) {
        auto rng = replica_stream(master_seed, static_cast<std::uint64_t>(start_type), r);
        GwTrajectory traj = run_stopped_gw(start_type, law, clock, rng, true);
        double* out = &s[static_cast<std::size_t>(r) * n];
        for (int j = 0; j < n; ++j) out[j] = 0.0;
        double w = 1.0;
        const auto& gens = *traj.per_type;
        for (std::size_t g = 0; g < gens.size(); ++g) {
            if (clock.mode == GwMode::analytic_weights) w /= lambda_eff;
            for (int j = 0; j < n; ++j)
                out[j] += w * static_cast<double>(gens[g].counts[j]);
        }
        stop[r] = traj.stop_reason;
    });

    EigenvectorEstimate est;
    est.method = EstimatorMethod::gw_vector;
    est.lambda_used = lambda_eff;
    est.c_used = c;
    est.start_type = start_type;

    long capped = 0;
    for (auto r : stop) {
        est.stops.add(r);
        if (r == GwStopReason::generation_cap) ++capped;
    }
    if (capped == replicas)
        throw EstimationError("every replica hit the generation cap");

    // Mean vector, coordinate covariance, and the max total statistic.
    std::vector<double> vhat(n, 0.0);
    double smax = 0.0, smean = 0.0;
    for (long r = 0; r < replicas; ++r) {
        const double* row = &s[static_cast<std::size_t>(r) * n];
        double tot = 0.0;
        for (int j = 0; j < n; ++j) {
            vhat[j] += row[j];
            tot += row[j];
        }
        smax = std::max(smax, tot);
        smean += tot;
    }
    for (int j = 0; j < n; ++j) vhat[j] /= replicas;
    smean /= replicas;

    double total = 0.0;
    for (double v : vhat) total += v;
    if (!(total > 0.0))
        throw EstimationError("vector statistic vanished across all replicas");

    std::vector<double> cov(static_cast<std::size_t>(n) * n, 0.0);
    if (replicas > 1) {
        for (long r = 0; r < replicas; ++r) {
            const double* row = &s[static_cast<std::size_t>(r) * n];
            for (int j = 0; j < n; ++j) {
                double dj = row[j] - vhat[j];
                for (int k = 0; k < n; ++k)
                    cov[static_cast<std::size_t>(j) * n + k] += dj * (row[k] - vhat[k]);
            }
        }
        for (double& v : cov) v /= static_cast<double>(replicas - 1) * replicas;
        // cov now holds Cov(vhat), the sample covariance over replicas.
    }

    // u_j = v_j / sum(v): delta method with the full covariance,
    // grad_k = (delta_jk - u_j) / total.
    est.u_hat.resize(n);
    for (int j = 0; j < n; ++j) {
        double uj = vhat[j] / total;
        double var = 0.0;
        for (int k = 0; k < n; ++k) {
            double gk = ((k == j ? 1.0 : 0.0) - uj) / total;
            for (int l = 0; l < n; ++l) {
                double gl = ((l == j ? 1.0 : 0.0) - uj) / total;
                var += gk * gl * cov[static_cast<std::size_t>(k) * n + l];
            }
        }
        Estimate e;
        e.value = uj;
        e.stderr_ = std::sqrt(std::max(0.0, var));
        e.replicas = replicas;
        e.ci_low = uj - 1.96 * e.stderr_;
        e.ci_high = uj + 1.96 * e.stderr_;
        est.u_hat[j] = e;
    }
    for (const Estimate& e : est.u_hat) est.sum_u_hat += e.value;
    est.v_start_raw = vhat[start_type];
    est.s_max_over_mean = smean > 0.0 ? smax / smean : 0.0;
    return est;
}

EigenvectorEstimate estimate_u_ct(const NonNegativeMatrix& A, long replicas,
                                  CtClockConfig clock, LawKind kind, double c,
                                  std::uint64_t master_seed, int threads) {
    if (replicas < 1) throw EstimationError("replicas must be positive");
    const int n = A.size();
    auto [law, lambda_eff] = build_law(A, kind, c);
    clock.lambda = lambda_eff;
    const bool clocked = lambda_eff > 1.0;
    threads = resolve_thread_count(threads);

    EigenvectorEstimate est;
    est.method = EstimatorMethod::ct_reciprocal;
    est.lambda_used = lambda_eff;
    est.c_used = c;
    est.u_hat.resize(n);

    for (int i = 0; i < n; ++i) {
        std::vector<double> s(replicas);
        std::vector<CtStopReason> stop(replicas);
        parallel_replicas(replicas, threads, [&](long r) {
            auto rng = replica_stream(master_seed, static_cast<std::uint64_t>(i), r);
            CtTrajectory traj = clocked
                                    ? run_stopped_ct(i, law, clock, rng)
                                    : run_stopped_ct_weighted(i, law, clock, rng);
            s[r] = traj.weighted_integral;
            stop[r] = traj.stop_reason;
        });
        long capped = 0;
        for (auto r : stop) {
            est.stops.add(r);
            if (r == CtStopReason::time_cap) ++capped;
        }
        if (capped == replicas)
            throw EstimationError("every replica for type " + std::to_string(i + 1) +
                                  " hit the time cap");
        MeanStd d = reduce(s);
        if (!(d.mean > 0.0))
            throw EstimationError("weighted-integral mean is zero for type " +
                                  std::to_string(i + 1));
        est.u_hat[i] = reciprocal_estimate(d, replicas);
        est.s_max_over_mean = std::max(est.s_max_over_mean, d.max / d.mean);
    }
    for (const Estimate& e : est.u_hat) est.sum_u_hat += e.value;
    return est;
}

double choose_scaling(const NonNegativeMatrix& A, ScalingTarget target) {
    double lambda = perron_pair(A).lambda;
    switch (target) {
        case ScalingTarget::critical: return 1.0 / lambda;
        case ScalingTarget::supercritical_margin: return 1.5 / lambda;
    }
    throw ValidationError("unknown scaling target");
}

int default_start_type(const NonNegativeMatrix& A) {
    int best = 0;
    double best_sum = A.row_sum(0);
    for (int i = 1; i < A.size(); ++i) {
        double s = A.row_sum(i);
        if (s > best_sum) {
            best_sum = s;
            best = i;
        }
    }
    return best;
}

}  // namespace perron
