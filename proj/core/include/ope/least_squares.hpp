#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace ope {

struct WeightSolveOptions {
    double lambda = 0.0;    // diagonal regularization added to the system matrix
    bool nonneg = true;     // constrain the solution to u >= 0
    double tolerance = 1e-9;
    int max_iterations = 100000;
};

struct WeightSolveResult {
    Eigen::VectorXd u;
    double residual_norm = 0.0;  // |(G + lambda I)^T u + b|_2
    bool converged = true;
    int iterations = 0;
    // rank diagnostics, filled by the dense unconstrained route (-1 = not computed)
    bool rank_deficient = false;
    Eigen::Index rank = -1;
};

/**
 * Minimizes |(G + lambda I)^T u + b|_2^2.
 *
 * With nonneg set, solves the quadratic program over u >= 0 by projected
 * gradient with Barzilai-Borwein steps (first step exact line search),
 * stopping when the projected-gradient 2-norm falls below `tolerance` or the
 * iteration cap is reached; hitting the cap is reported as non-convergence
 * but still returns the best iterate. Without nonneg, returns the
 * minimum-norm least-squares solution: dense SVD up to 2048 unknowns
 * (singular values below 1e-10 times the largest are treated as zero and
 * flagged as rank deficiency), least-squares conjugate gradients above
 * that. All routes are deterministic.
 */
WeightSolveResult solve_weight_system(const Eigen::SparseMatrix<double>& g,
                                      const Eigen::VectorXd& b, const WeightSolveOptions& options);

}  // namespace ope
