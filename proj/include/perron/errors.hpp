#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace perron {

// Input fails a structural requirement (shape, sign, stochasticity, index).
class ValidationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// A documented precondition does not hold (e.g. matrix not primitive,
// clock parameter out of range).
class PreconditionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Iterative solver did not reach its tolerance within the iteration budget.
class ConvergenceError : public std::runtime_error {
  public:
    ConvergenceError(const std::string& msg, double residual, long iterations)
        : std::runtime_error(msg), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    long iterations() const { return iterations_; }

  private:
    double residual_;
    long iterations_;
};

// Series evaluation could not certify its tail within the term budget.
// Carries the partial sum and the last tail bound (infinity when no
// geometric bound was available).
class TruncationError : public std::runtime_error {
  public:
    TruncationError(const std::string& msg, std::vector<double> partial,
                    double tail_bound, long terms)
        : std::runtime_error(msg),
          partial_(std::move(partial)),
          tail_bound_(tail_bound),
          terms_(terms) {}
    const std::vector<double>& partial() const { return partial_; }
    double tail_bound() const { return tail_bound_; }
    long terms() const { return terms_; }

  private:
    std::vector<double> partial_;
    double tail_bound_;
    long terms_;
};

// Dense solve hit a pivot below the conditioning threshold.  For the
// resolvent this signals lambda <= rho(B), i.e. a wrong eigenvalue.
class LinearSolveError : public std::runtime_error {
  public:
    LinearSolveError(const std::string& msg, double pivot)
        : std::runtime_error(msg), pivot_(pivot) {}
    double pivot() const { return pivot_; }

  private:
    double pivot_;
};

// A simulation exceeded its population size cap (supercritical blow-up).
class SimulationCapError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Monte Carlo aggregation cannot produce a valid estimate
// (zero replicas, every replica capped, degenerate denominator).
class EstimationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace perron
