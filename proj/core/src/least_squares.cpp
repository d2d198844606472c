#include "ope/least_squares.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace ope {

namespace {

constexpr double kRankThreshold = 1e-10;
// Dense SVD beyond this size is prohibitive; large systems switch to
// least-squares conjugate gradients (started at zero, so iterates stay in
// the row space and the limit is still the minimum-norm solution).
constexpr Eigen::Index kDenseSvdLimit = 2048;

Eigen::SparseMatrix<double> with_diagonal(const Eigen::SparseMatrix<double>& g, double lambda) {
    if (lambda == 0.0) return g;
    Eigen::SparseMatrix<double> identity(g.rows(), g.cols());
    identity.setIdentity();
    return Eigen::SparseMatrix<double>(g + lambda * identity);
}

WeightSolveResult solve_min_norm(const Eigen::SparseMatrix<double>& system,
                                 const Eigen::VectorXd& b) {
    // minimum-norm solution of system^T u = -b
    WeightSolveResult result;
    if (system.rows() <= kDenseSvdLimit) {
        const Eigen::MatrixXd dense = Eigen::MatrixXd(system).transpose();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(dense, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(kRankThreshold);
        result.u = svd.solve(-b);
        result.rank = svd.rank();
        result.rank_deficient = result.rank < dense.cols();
        result.residual_norm = (dense * result.u + b).norm();
        result.converged = true;
        return result;
    }
    const Eigen::SparseMatrix<double> transposed = system.transpose();
    Eigen::LeastSquaresConjugateGradient<Eigen::SparseMatrix<double>> solver;
    solver.setTolerance(1e-12);
    solver.setMaxIterations(20 * transposed.cols());
    solver.compute(transposed);
    result.u = solver.solve(-b);
    result.converged = solver.info() == Eigen::Success;
    result.iterations = static_cast<int>(solver.iterations());
    // rank diagnostics are only available on the dense path
    result.residual_norm = (transposed * result.u + b).norm();
    return result;
}

WeightSolveResult solve_projected_gradient(const Eigen::SparseMatrix<double>& system,
                                           const Eigen::VectorXd& b,
                                           const WeightSolveOptions& options) {
    const Eigen::Index dim = system.rows();
    WeightSolveResult result;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd residual = b;  // system^T * 0 + b
    Eigen::VectorXd grad = 2.0 * (system * residual);

    auto projected_gradient_norm = [&](const Eigen::VectorXd& point,
                                       const Eigen::VectorXd& gradient) {
        double sq = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double gi = gradient(i);
            if (point(i) > 0.0 || gi < 0.0) sq += gi * gi;
        }
        return std::sqrt(sq);
    };

    Eigen::VectorXd prev_u, prev_grad;
    double step = 0.0;
    int it = 0;
    for (; it < options.max_iterations; ++it) {
        if (projected_gradient_norm(u, grad) <= options.tolerance) break;
        if (it == 0) {
            // exact line search along the steepest descent direction
            const double gg = grad.squaredNorm();
            const Eigen::VectorXd sg = system.transpose() * grad;
            const double denom = 2.0 * sg.squaredNorm();
            step = denom > 0.0 ? gg / denom : 1.0;
        } else {
            const Eigen::VectorXd s = u - prev_u;
            const Eigen::VectorXd y = grad - prev_grad;
            const double sy = s.dot(y);
            if (sy > 0.0) {
                step = s.squaredNorm() / sy;
            } else {
                const double gg = grad.squaredNorm();
                const Eigen::VectorXd sg = system.transpose() * grad;
                const double denom = 2.0 * sg.squaredNorm();
                step = denom > 0.0 ? gg / denom : 1.0;
            }
        }
        prev_u = u;
        prev_grad = grad;
        u = (u - step * grad).cwiseMax(0.0);
        residual = system.transpose() * u + b;
        grad = 2.0 * (system * residual);
    }
    result.u = std::move(u);
    result.iterations = it;
    result.converged = it < options.max_iterations;
    result.residual_norm = residual.norm();
    return result;
}

}  // namespace

WeightSolveResult solve_weight_system(const Eigen::SparseMatrix<double>& g,
                                      const Eigen::VectorXd& b,
                                      const WeightSolveOptions& options) {
    if (g.rows() != g.cols()) throw std::invalid_argument("solve_weight_system: matrix not square");
    if (b.size() != g.rows())
        throw std::invalid_argument("solve_weight_system: rhs length mismatch");
    const Eigen::SparseMatrix<double> system = with_diagonal(g, options.lambda);
    if (options.nonneg) return solve_projected_gradient(system, b, options);
    return solve_min_norm(system, b);
}

}  // namespace ope
