#include "perron/galton_watson.hpp"

#include <cmath>
#include <string>

#include "perron/rng.hpp"

namespace perron {

OffspringLaw::OffspringLaw(LawKind kind, NonNegativeMatrix base, double c)
    : kind_(kind), base_(std::move(base)), c_(c), mean_(base_.scaled(c)) {
    const int n = mean_.size();
    if (kind_ == LawKind::single_child_markov) {
        row_cdf_.resize(n);
        for (int i = 0; i < n; ++i) {
            double sum = mean_.row_sum(i);
            if (std::abs(sum - 1.0) > 1e-9)
                throw ValidationError(
                    "single_child_markov requires row-stochastic c*A; row " +
                    std::to_string(i + 1) + " sums to " + std::to_string(sum));
            row_cdf_[i].resize(n);
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                acc += mean_(i, j) / sum;
                row_cdf_[i][j] = acc;
            }
            row_cdf_[i][n - 1] = 1.0;
        }
    }
}

NonNegativeMatrix law_mean(const OffspringLaw& law) { return law.mean(); }

namespace {

std::uint64_t poisson_draw(std::mt19937_64& rng, double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<long long> dist(mean);
    return static_cast<std::uint64_t>(dist(rng));
}

std::uint64_t binomial_draw(std::mt19937_64& rng, std::uint64_t k, double p) {
    if (k == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return k;
    std::binomial_distribution<long long> dist(static_cast<long long>(k), p);
    return static_cast<std::uint64_t>(dist(rng));
}

}  // namespace

Population sample_offspring_aggregate(const OffspringLaw& law, int parent_type,
                                      std::uint64_t k, std::mt19937_64& rng) {
    const int n = law.types();
    if (parent_type < 0 || parent_type >= n)
        throw ValidationError("parent type index out of range");
    Population out(n);
    if (k == 0) return out;
    switch (law.kind()) {
        case LawKind::poisson_rows:
            // Superposition: the sum of k Poisson(m_j) draws is
            // Poisson(k m_j), so one draw per target type suffices.
            for (int j = 0; j < n; ++j)
                out.counts[j] =
                    poisson_draw(rng, static_cast<double>(k) * law.mean()(parent_type, j));
            break;
        case LawKind::single_child_markov: {
            const std::vector<double>& cdf = law.row_cdf(parent_type);
            for (std::uint64_t c = 0; c < k; ++c) {
                double u = uniform01(rng);
                int j = 0;
                while (j < n - 1 && u >= cdf[j]) ++j;
                ++out.counts[j];
            }
            break;
        }
        case LawKind::bernoulli_split:
            for (int j = 0; j < n; ++j) {
                double m = law.mean()(parent_type, j);
                double whole = std::floor(m);
                double frac = m - whole;
                out.counts[j] = k * static_cast<std::uint64_t>(whole) +
                                binomial_draw(rng, k, frac);
            }
            break;
    }
    return out;
}

Population step_generation(const Population& pop, const OffspringLaw& law,
                           std::optional<int> stopped_type,
                           std::mt19937_64& rng) {
    const int n = law.types();
    if (static_cast<int>(pop.counts.size()) != n)
        throw ValidationError("population dimension does not match the law");
    Population next(n);
    for (int j = 0; j < n; ++j) {
        if (stopped_type && *stopped_type == j) continue;
        std::uint64_t k = pop.counts[j];
        if (k == 0) continue;
        Population kids = sample_offspring_aggregate(law, j, k, rng);
        for (int l = 0; l < n; ++l) next.counts[l] += kids.counts[l];
    }
    return next;
}

GwTrajectory run_stopped_gw(int stopped_type, const OffspringLaw& law,
                            const ClockConfig& clock, std::mt19937_64& rng,
                            bool record_per_type) {
    const int n = law.types();
    if (stopped_type < 0 || stopped_type >= n)
        throw ValidationError("stopped type index out of range");
    const bool clocked = clock.mode == GwMode::geometric_clock;
    if (clocked && !(clock.lambda > 1.0))
        throw PreconditionError("geometric clock requires lambda > 1");

    GwTrajectory traj;
    traj.stopped_type = stopped_type;
    if (record_per_type) traj.per_type.emplace();

    // Recorded horizon: generations 1 .. tau-1 under the clock (the killed
    // generation is excluded, matching the sum to tau-1 in the estimator).
    const std::uint64_t tau = clocked ? sample_clock_tau(clock.lambda, rng) : 0;

    Population pop(n);
    for (long gen = 1;; ++gen) {
        if (clocked && static_cast<std::uint64_t>(gen) >= tau) {
            traj.stop_reason = GwStopReason::clock_killed;
            return traj;
        }
        // Generation 0 is one type-i individual reproducing with the full
        // law; the stopping rule applies only from generation 1 onward.
        pop = (gen == 1) ? sample_offspring_aggregate(law, stopped_type, 1, rng)
                         : step_generation(pop, law, stopped_type, rng);
        if (pop.empty()) {
            traj.stop_reason = GwStopReason::extinct;
            return traj;
        }
        std::uint64_t size = pop.total();
        if (size > clock.size_cap)
            throw SimulationCapError("population size " + std::to_string(size) +
                                     " exceeded size_cap at generation " +
                                     std::to_string(gen));
        traj.sizes.push_back(size);
        if (traj.per_type) traj.per_type->push_back(pop);
        traj.generations_run = gen;
        if (gen >= clock.generation_cap) {
            traj.stop_reason = GwStopReason::generation_cap;
            return traj;
        }
    }
}

}  // namespace perron
