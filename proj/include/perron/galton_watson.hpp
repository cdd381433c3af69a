#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "perron/matrix.hpp"

namespace perron {

enum class LawKind { poisson_rows, single_child_markov, bernoulli_split };

struct Population {
    std::vector<std::uint64_t> counts;

    explicit Population(int n = 0) : counts(n, 0) {}
    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (std::uint64_t c : counts) t += c;
        return t;
    }
    bool empty() const { return total() == 0; }
    bool operator==(const Population&) const = default;
};

// Per-type reproduction law with exact mean matrix c * base.
//
//   poisson_rows        independent Poisson(c*A(i,j)) per target type;
//                       closed under aggregation of k parents
//   single_child_markov exactly one child, type drawn from row i of c*A
//                       (rows must sum to 1)
//   bernoulli_split     floor(m) deterministic children plus one
//                       Bernoulli(m - floor(m)) child per target type
class OffspringLaw {
  public:
    OffspringLaw(LawKind kind, NonNegativeMatrix base, double c);

    LawKind kind() const { return kind_; }
    double c() const { return c_; }
    const NonNegativeMatrix& base() const { return base_; }
    const NonNegativeMatrix& mean() const { return mean_; }
    int types() const { return mean_.size(); }
    // single_child_markov: cumulative child-type probabilities of row i.
    const std::vector<double>& row_cdf(int i) const { return row_cdf_[i]; }

  private:
    LawKind kind_;
    NonNegativeMatrix base_;
    double c_;
    NonNegativeMatrix mean_;
    std::vector<std::vector<double>> row_cdf_;
};

enum class GwMode { geometric_clock, analytic_weights };
enum class GwStopReason { extinct, clock_killed, generation_cap };

struct ClockConfig {
    GwMode mode = GwMode::geometric_clock;
    double lambda = 1.5;                    // clock parameter 1 - 1/lambda
    long generation_cap = 10000;
    std::uint64_t size_cap = 100000000;     // abort threshold, total individuals
};

// One run of the stopped process: sizes(n) = |Z_n|_1 for the recorded
// generations n = 1, 2, ...  Empty generations are never recorded; under
// the clock the killed generation is excluded (the per-run statistic sums
// generations 1 .. tau-1).
struct GwTrajectory {
    int stopped_type = 0;
    std::vector<std::uint64_t> sizes;
    std::optional<std::vector<Population>> per_type;
    GwStopReason stop_reason = GwStopReason::extinct;
    long generations_run = 0;
};

// Exact mean matrix cA of the law (analytic, never sampled).
NonNegativeMatrix law_mean(const OffspringLaw& law);

// Offspring of k independent parents of one type, sampled at count level:
// Poisson superposition for poisson_rows, k categorical draws for
// single_child_markov, binomial aggregation for bernoulli_split.
Population sample_offspring_aggregate(const OffspringLaw& law, int parent_type,
                                      std::uint64_t k, std::mt19937_64& rng);

// Next generation: offspring of all parents, with stopped_type parents
// contributing none when set.
Population step_generation(const Population& pop, const OffspringLaw& law,
                           std::optional<int> stopped_type,
                           std::mt19937_64& rng);

// Stopped Galton-Watson run from one type-i individual.  Generation 0
// reproduces with the full law; the stopping rule applies from generation
// 1 onward.  In geometric_clock mode the horizon tau is sampled up front
// and generations 1 .. tau-1 are recorded.  Throws SimulationCapError when
// the population exceeds clock.size_cap.
GwTrajectory run_stopped_gw(int stopped_type, const OffspringLaw& law,
                            const ClockConfig& clock, std::mt19937_64& rng,
                            bool record_per_type = false);

}  // namespace perron
