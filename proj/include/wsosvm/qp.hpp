#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "wsosvm/common.hpp"

namespace wsosvm::qp {

// minimize 0.5 g'Qg - lin'g
// subject to eq'g = 0 (when eq nonempty), ineq'g >= 0 (when ineq nonempty),
//            lower <= g <= upper.
struct QPInstance {
    std::size_t n = 0;
    std::vector<double> q;     // n*n row-major, symmetric PSD
    std::vector<double> lin;   // all ones for the WSO dual
    std::vector<double> eq;    // empty = absent
    std::vector<double> ineq;  // empty = absent
    std::vector<double> lower;
    std::vector<double> upper;

    double q_at(std::size_t i, std::size_t j) const { return q[i * n + j]; }
    void validate() const;
};

struct KKTReport {
    double stationarity_residual = 0.0;
    double primal_feas_residual = 0.0;
    double complementarity_residual = 0.0;
    int iterations = 0;

    double max_residual() const;
};

struct Multipliers {
    double lagrange_eq = 0.0;
    double lagrange_ineq = 0.0;  // multiplier of ineq'g >= 0, nonnegative
};

struct DualSolution {
    std::vector<double> gamma;
    double objective = 0.0;
    double mu = 0.0;  // ineq'gamma slack; equals the primal ordering multiplier
    double lagrange_eq = 0.0;
    double lagrange_ineq = 0.0;
    KKTReport kkt;
};

struct SolveOptions {
    double tol = 1e-8;          // on the max KKT residual
    std::size_t max_iter = 0;   // 0 -> 50*n outer iterations
    double jitter = 1e-10;      // added to Q's diagonal if a free-set factorization fails
};

// Thrown after max_iter without reaching tol; carries the best iterate.
struct NonConvergence : ConvergenceError {
    NonConvergence(const std::string& msg, DualSolution best)
        : ConvergenceError(msg), best_iterate(std::move(best)) {}
    DualSolution best_iterate;
};

DualSolution solve(const QPInstance& qp, const SolveOptions& options = {});

// Residuals of the first-order system at (gamma, multipliers). Box-bound
// duals are implicit: stationarity treats the gradient one-sidedly at active
// bounds, and complementarity pairs the gradient's sign parts with the
// distances to the bounds.
KKTReport kkt_residuals(const QPInstance& qp, const std::vector<double>& gamma,
                        const Multipliers& multipliers);

double objective(const QPInstance& qp, const std::vector<double>& gamma);

// Debug dump of (Q, lin, constraints, gamma) as CSV matrices.
void dump_qp(const QPInstance& qp, const std::vector<double>& gamma,
             const std::filesystem::path& dir);

}  // namespace wsosvm::qp
