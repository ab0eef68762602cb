#include "newton.hpp"

#include "errors.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <thread>

namespace pconvex::solver {

void parallel_for(int count, int threads, const std::function<void(int, int)>& body) {
    const int workers = std::clamp(threads, 1, std::max(1, count));
    if (workers == 1) {
        body(0, count);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    const int chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int begin = w * chunk;
        const int end = std::min(count, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& t : pool) t.join();
}

NewtonResult damped_newton(const NewtonSystem& system, Eigen::VectorXd x0, const NewtonConfig& config) {
    NewtonResult out;
    out.x = std::move(x0);
    Evaluation current = system.evaluate(out.x);
    if (!current.admissible) {
        throw DomainError("initial iterate is not admissible: " + current.reason);
    }
    auto& rec = out.record;
    rec.residual_history.push_back(current.norm());
    rec.margin_history.push_back(current.min_margin);

    while (true) {
        if (current.norm() <= config.tol) {
            rec.converged = true;
            return out;
        }
        if (rec.iterations >= config.max_iter) {
            rec.failure = "maximum number of Newton iterations exceeded";
            return out;
        }

        Eigen::VectorXd step;
        {
            SparseMatrix J = system.jacobian(out.x);
            J.makeCompressed();
            Eigen::SparseLU<SparseMatrix> lu;
            lu.analyzePattern(J);
            lu.factorize(J);
            if (lu.info() != Eigen::Success) {
                rec.failure = "Jacobian factorization failed: " + lu.lastErrorMessage();
                return out;
            }
            step = lu.solve(-current.residual);
            if (lu.info() != Eigen::Success || !step.allFinite()) {
                rec.failure = "Jacobian solve failed";
                return out;
            }
        }

        double alpha = 1.0;
        bool accepted = false;
        bool last_admissible = true;
        while (alpha >= config.damping_min) {
            Eigen::VectorXd trial = out.x + alpha * step;
            Evaluation ev = system.evaluate(trial);
            last_admissible = ev.admissible && ev.min_margin >= 0.1 * current.min_margin;
            if (last_admissible && ev.norm() < current.norm()) {
                out.x = std::move(trial);
                current = std::move(ev);
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) {
            rec.failure = last_admissible ? "no residual decrease at minimal damping"
                                          : "cone exit at minimal damping";
            return out;
        }
        ++rec.iterations;
        rec.residual_history.push_back(current.norm());
        rec.margin_history.push_back(current.min_margin);
        rec.step_lengths.push_back(alpha);
    }
}

}  // namespace pconvex::solver
