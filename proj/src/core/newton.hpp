#pragma once

// Damped Newton iteration with a cone-safeguarded backtracking line search,
// shared by the surface and Dirichlet solvers.

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace pconvex::solver {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct NewtonConfig {
    double tol = 1e-10;
    int max_iter = 50;
    double damping_min = std::ldexp(1.0, -20);
    bool fd_jacobian = false;
    double fd_step = 1e-6;
    int threads = 1;
};

/// Residual at a trial point.  `admissible` is false when some node left the
/// open cone or the right-hand side is not positive there.
struct Evaluation {
    Eigen::VectorXd residual;
    bool admissible = false;
    double min_margin = 0.0;
    int worst_node = -1;
    std::string reason;

    double norm() const { return residual.size() ? residual.lpNorm<Eigen::Infinity>() : 0.0; }
};

struct NewtonSystem {
    std::function<Evaluation(const Eigen::VectorXd&)> evaluate;
    std::function<SparseMatrix(const Eigen::VectorXd&)> jacobian;
};

struct ConvergenceRecord {
    bool converged = false;
    int iterations = 0;
    std::vector<double> residual_history;  // max-norm at every accepted iterate
    std::vector<double> margin_history;    // min cone margin at every accepted iterate
    std::vector<double> step_lengths;      // damping factor of every accepted step
    std::string failure;
};

struct NewtonResult {
    Eigen::VectorXd x;
    ConvergenceRecord record;
};

/// Throws DomainError if x0 is not admissible.  The line search halves the
/// step until the trial stays admissible with min margin >= 0.1 x current and
/// the residual max-norm decreases.
NewtonResult damped_newton(const NewtonSystem& system, Eigen::VectorXd x0, const NewtonConfig& config);

/// Runs body(begin, end) over [0, count) split across up to `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int, int)>& body);

}  // namespace pconvex::solver
