#pragma once

#include <cstddef>
#include <vector>

namespace codwoe {

// Discrete transportation problem: masses a (|a| sources) and b (|b| sinks),
// both summing to 1 within 1e-9, and a nonnegative |a| x |b| cost matrix.
struct TransportProblem {
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> cost; // row-major |a| x |b|

    double cost_at(size_t i, size_t j) const { return cost[i * b.size() + j]; }
    void validate() const;
};

struct TransportPlan {
    double cost = 0.0;
    std::vector<double> plan; // row-major |a| x |b|
    bool converged = true;            // Sinkhorn only
    double marginal_violation = 0.0;  // Sinkhorn only: L1 gap at termination
    size_t iterations = 0;
};

// Transportation simplex (northwest-corner start, Bland-rule pivoting on the
// basis tree). Correctness-oracle duty only: capped at 8x8.
TransportPlan solve_exact(const TransportProblem& p);

// Entropic OT via log-domain Sinkhorn scaling. Stops when the L1 marginal
// violation drops below tol or max_iter is reached; a non-converged run is
// reported through the flags, not an exception.
TransportPlan solve_sinkhorn(const TransportProblem& p, double epsilon,
                             size_t max_iter = 20000, double tol = 1e-9);

} // namespace codwoe
