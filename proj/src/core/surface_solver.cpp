#include "surface_solver.hpp"

#include "spectral_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pconvex::surface {

using geometry::Channel;
using geometry::ChannelWeights;
using geometry::LocalDerivatives;
using geometry::PointFrame;

namespace {

struct NodeState {
    bool ok = false;
    std::string reason;
    double residual = 0.0;
    double margin = -std::numeric_limits<double>::infinity();
    LocalDerivatives local;
    PointFrame frame;
    DataSample sample;
    double f_tilde = 0.0;
};

NodeState node_state(const SurfaceDiscretization& disc, const Eigen::VectorXd& rho, int node,
                     const PrescribedData& data, int p) {
    NodeState s;
    const auto& grid = disc.grid();
    s.local = geometry::apply_stencil(disc.stencil(node), rho);
    if (!(s.local.rho > 0.0)) {
        s.reason = "rho <= 0";
        return s;
    }
    s.frame = geometry::frame_from_local(grid.direction(node), grid.tangent_frame(node), s.local);
    s.margin = spectral::cone_margin(s.frame.curvatures, p).min_subset_sum;
    if (!(s.margin > 0.0)) {
        s.reason = "curvatures outside the open p-convex cone";
        return s;
    }
    s.sample = data.evaluate(s.frame.position, s.frame.normal);
    if (!(s.sample.f > 0.0) || !std::isfinite(s.sample.f)) {
        s.reason = "prescribed f is not positive";
        return s;
    }
    const int c = data.power();
    s.f_tilde = std::pow(s.sample.f, 1.0 / c);
    s.residual = spectral::eval_operator(s.frame.curvatures, p).tilde_F - s.f_tilde;
    s.ok = true;
    return s;
}

// d r / d(rho, rho_1, rho_2, rho_11, rho_12, rho_22) at one node.
ChannelWeights node_sensitivity(const NodeState& s, const PrescribedData& data, int p) {
    const double rho = s.local.rho;
    const double r1 = s.local.grad[0];
    const double r2 = s.local.grad[1];
    const Eigen::Matrix2d& H = s.local.hess;
    const double w = std::sqrt(rho * rho + r1 * r1 + r2 * r2);
    const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
    const Eigen::Matrix2d N = s.frame.second_form * w;

    // tilde F as a spectral function of the pencil (h, g):
    // d tilde F = tr(P dh) - tr(Q dg), P = V diag(F^k) V^T, Q = V diag(F^k kappa_k) V^T.
    const spectral::OperatorJet jet = spectral::eigen_jet(s.frame.curvatures, p);
    const Eigen::Matrix2d& V = s.frame.principal_vectors;
    const Eigen::Vector2d fk = jet.grad;
    const Eigen::Vector2d fk_kappa(fk[0] * s.frame.curvatures[0], fk[1] * s.frame.curvatures[1]);
    const Eigen::Matrix2d P = V * fk.asDiagonal() * V.transpose();
    const Eigen::Matrix2d Q = V * fk_kappa.asDiagonal() * V.transpose();

    Eigen::Matrix2d M1;
    M1 << 2.0 * r1, r2, r2, 0.0;
    Eigen::Matrix2d M2;
    M2 << 0.0, r1, r1, 2.0 * r2;
    Eigen::Matrix2d E11 = Eigen::Matrix2d::Zero();
    E11(0, 0) = 1.0;
    Eigen::Matrix2d E22 = Eigen::Matrix2d::Zero();
    E22(1, 1) = 1.0;
    Eigen::Matrix2d E12;
    E12 << 0.0, 1.0, 1.0, 0.0;

    const std::array<Eigen::Matrix2d, 6> dN = {2.0 * rho * I - H, 2.0 * M1, 2.0 * M2,
                                               -rho * E11, -rho * E12, -rho * E22};
    const std::array<Eigen::Matrix2d, 6> dg = {2.0 * rho * I, M1, M2, Eigen::Matrix2d::Zero(),
                                               Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()};
    const std::array<double, 6> dw = {rho / w, r1 / w, r2 / w, 0.0, 0.0, 0.0};

    // Position and normal sensitivities.
    const Vec3& x = s.frame.direction;
    const Vec3& e1 = s.frame.tangent[0];
    const Vec3& e2 = s.frame.tangent[1];
    const Vec3 m = s.frame.normal * w;  // rho x - grad rho
    const double w3 = w * w * w;
    const std::array<Vec3, 6> dX = {x, Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    const std::array<Vec3, 6> dnu = {Vec3(x / w - m * rho / w3), Vec3(-e1 / w - m * r1 / w3),
                                     Vec3(-e2 / w - m * r2 / w3), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
    const double df_tilde_scale = s.f_tilde / (data.power() * s.sample.f);

    ChannelWeights out{};
    for (int c = 0; c < geometry::kChannels; ++c) {
        const auto k = static_cast<std::size_t>(c);
        const Eigen::Matrix2d dh = dN[k] / w - N * dw[k] / (w * w);
        const double dF = (P.cwiseProduct(dh)).sum() - (Q.cwiseProduct(dg[k])).sum();
        const double df = s.sample.d_position.dot(dX[k]) + s.sample.d_normal.dot(dnu[k]);
        out[k] = dF - df_tilde_scale * df;
    }
    return out;
}

void check_p(const PrescribedData& data, int p) {
    if (data.p != p) throw DomainError("operator p does not match the prescribed data");
}

double grid_spacing(const SphericalGrid& grid) { return std::max(grid.dtheta(), grid.dphi()); }

}  // namespace

SurfaceDiscretization::SurfaceDiscretization(const SphericalGrid& grid) : grid_(grid) {
    const int count = grid.node_count();
    stencils_.reserve(static_cast<std::size_t>(count));
    dependents_.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        stencils_.push_back(geometry::sphere_stencil(grid, i));
        for (int m : stencils_.back().nodes) dependents_[static_cast<std::size_t>(m)].push_back(i);
    }
}

solver::Evaluation evaluate_residual(const SurfaceDiscretization& disc, const Eigen::VectorXd& rho,
                                     const PrescribedData& data, int p, int threads) {
    const int count = disc.grid().node_count();
    solver::Evaluation ev;
    ev.residual.resize(count);
    std::vector<NodeState> states(static_cast<std::size_t>(count));
    solver::parallel_for(count, threads, [&](int begin, int end) {
        for (int i = begin; i < end; ++i) states[static_cast<std::size_t>(i)] = node_state(disc, rho, i, data, p);
    });
    ev.admissible = true;
    ev.min_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < count; ++i) {
        const NodeState& s = states[static_cast<std::size_t>(i)];
        ev.residual[i] = s.ok ? s.residual : std::numeric_limits<double>::quiet_NaN();
        if (s.margin < ev.min_margin || (!s.ok && ev.admissible)) {
            ev.min_margin = std::min(ev.min_margin, s.margin);
            ev.worst_node = i;
        }
        if (!s.ok && ev.admissible) {
            ev.admissible = false;
            ev.reason = "node " + std::to_string(i) + ": " + s.reason;
        }
    }
    return ev;
}

Eigen::VectorXd residual(const RadialField& field, const PrescribedData& data, int p) {
    check_p(data, p);
    const SurfaceDiscretization disc(field.grid);
    const solver::Evaluation ev = evaluate_residual(disc, field.rho, data, p);
    if (!ev.admissible) throw ConeViolation(ev.worst_node, ev.min_margin, "surface residual: " + ev.reason);
    return ev.residual;
}

solver::SparseMatrix assemble_jacobian(const SurfaceDiscretization& disc, const Eigen::VectorXd& rho,
                                       const PrescribedData& data, int p, int threads) {
    const int count = disc.grid().node_count();
    std::vector<std::vector<Eigen::Triplet<double>>> rows(static_cast<std::size_t>(count));
    solver::parallel_for(count, threads, [&](int begin, int end) {
        for (int i = begin; i < end; ++i) {
            const NodeState s = node_state(disc, rho, i, data, p);
            if (!s.ok) throw DomainError("Jacobian requested at an inadmissible iterate: " + s.reason);
            const ChannelWeights dr = node_sensitivity(s, data, p);
            const auto& st = disc.stencil(i);
            auto& row = rows[static_cast<std::size_t>(i)];
            for (std::size_t k = 0; k < st.nodes.size(); ++k) {
                double v = 0.0;
                for (int c = 0; c < geometry::kChannels; ++c) {
                    v += dr[static_cast<std::size_t>(c)] * st.weights[k][static_cast<std::size_t>(c)];
                }
                row.emplace_back(i, st.nodes[k], v);
            }
        }
    });
    std::vector<Eigen::Triplet<double>> triplets;
    for (auto& r : rows) triplets.insert(triplets.end(), r.begin(), r.end());
    solver::SparseMatrix J(count, count);
    J.setFromTriplets(triplets.begin(), triplets.end());
    return J;
}

solver::SparseMatrix finite_difference_jacobian(const SurfaceDiscretization& disc, const Eigen::VectorXd& rho,
                                                const PrescribedData& data, int p, double step, int threads) {
    const int count = disc.grid().node_count();
    std::vector<std::vector<Eigen::Triplet<double>>> cols(static_cast<std::size_t>(count));
    solver::parallel_for(count, threads, [&](int begin, int end) {
        Eigen::VectorXd work = rho;
        for (int m = begin; m < end; ++m) {
            const double h = step * std::max(1.0, std::abs(rho[m]));
            for (int i : disc.dependents(m)) {
                work[m] = rho[m] + h;
                const NodeState plus = node_state(disc, work, i, data, p);
                work[m] = rho[m] - h;
                const NodeState minus = node_state(disc, work, i, data, p);
                work[m] = rho[m];
                if (!plus.ok || !minus.ok) throw DomainError("finite-difference Jacobian left the cone");
                cols[static_cast<std::size_t>(m)].emplace_back(i, m, (plus.residual - minus.residual) / (2.0 * h));
            }
        }
    });
    std::vector<Eigen::Triplet<double>> triplets;
    for (auto& c : cols) triplets.insert(triplets.end(), c.begin(), c.end());
    solver::SparseMatrix J(count, count);
    J.setFromTriplets(triplets.begin(), triplets.end());
    return J;
}

void HomotopySchedule::validate(const PrescribedData& data, double c0) const {
    if (steps < 1) throw DomainError("homotopy needs at least one step");
    if (!(eps > 0.0)) throw DomainError("homotopy eps must be positive");
    const int c = data.power();
    // rho^-C (1 + eps) - eps is decreasing in rho, so its minimum on [r1, r2] is at r2.
    const double min_base = (1.0 + eps) * std::pow(data.r2, -c) - eps;
    if (min_base < c0) {
        throw DomainError("homotopy eps too large: base family drops below c0 = " + std::to_string(c0) +
                          " on the annulus");
    }
}

void fill_diagnostics(SurfaceReport& report, const RadialField& field, const PrescribedData& data, int p) {
    const auto curv = geometry::curvature_field(field, p);
    report.sup_abs_kappa = curv.sup_abs_kappa;
    report.min_cone_margin = curv.min_margin;
    report.min_support = curv.min_support;
    report.max_support = curv.max_support;
    report.min_rho = field.rho.minCoeff();
    report.max_rho = field.rho.maxCoeff();
    report.r1 = data.r1;
    report.r2 = data.r2;
    report.grid_spacing = grid_spacing(field.grid);
    report.max_abs_rho_minus_one = (field.rho.array() - 1.0).abs().maxCoeff();
    report.has_target = data.kind == DataKind::Manufactured;
    if (report.has_target) {
        double err = 0.0;
        for (int i = 0; i < field.grid.node_count(); ++i) {
            err = std::max(err, std::abs(field.rho[i] - manufactured_radius(data, field.grid.direction(i))));
        }
        report.max_error_vs_target = err;
    }
}

SurfaceSolution newton_solve(const RadialField& initial, const PrescribedData& data, int p,
                             const NewtonConfig& config) {
    check_p(data, p);
    const SurfaceDiscretization disc(initial.grid);
    solver::NewtonSystem system;
    system.evaluate = [&](const Eigen::VectorXd& rho) {
        return evaluate_residual(disc, rho, data, p, config.threads);
    };
    system.jacobian = [&](const Eigen::VectorXd& rho) {
        return config.fd_jacobian ? finite_difference_jacobian(disc, rho, data, p, config.fd_step, config.threads)
                                  : assemble_jacobian(disc, rho, data, p, config.threads);
    };
    solver::NewtonResult res = solver::damped_newton(system, initial.rho, config);

    SurfaceSolution out{RadialField{initial.grid, res.x}, {}};
    out.report.newton = res.record;
    out.report.converged = res.record.converged;
    out.report.failure = res.record.failure;
    out.report.total_iterations = res.record.iterations;
    out.report.final_residual = res.record.residual_history.back();
    out.report.last_good_t = 1.0;
    fill_diagnostics(out.report, out.field, data, p);
    return out;
}

SurfaceSolution homotopy_solve(const SphericalGrid& grid, const PrescribedData& data, int p,
                               const HomotopySchedule& schedule, const NewtonConfig& config) {
    check_p(data, p);
    schedule.validate(data);

    SurfaceSolution out{RadialField::constant(grid, 1.0), {}};
    SurfaceReport& rep = out.report;
    rep.conditions = check_barrier_conditions(data, 400);
    rep.conditions.push_back(check_monotonicity_condition(data, 64));
    for (const auto& c : rep.conditions) {
        if (!c.passed) {
            rep.failure = "hypothesis check failed: " + c.name + " (" + c.detail + ")";
            fill_diagnostics(rep, out.field, data, p);
            return out;
        }
    }

    const double base_step = 1.0 / schedule.steps;
    double t_done = 0.0;
    double step = base_step;
    int refinements = 0;
    bool first = true;

    while (true) {
        // Snap to 1 so accumulated round-off in t_done does not add a sliver step.
        const double t = first ? 0.0 : (t_done + step >= 1.0 - 1e-12 ? 1.0 : t_done + step);
        const PrescribedData ft = homotopy_blend(data, t, schedule.eps);
        SurfaceSolution trial{out.field, {}};
        bool ok = false;
        try {
            trial = newton_solve(out.field, ft, p, config);
            ok = trial.report.converged;
        } catch (const DomainError& e) {
            trial.report.failure = e.what();
        }
        rep.homotopy.push_back({t, ok, trial.report.total_iterations, trial.report.final_residual});
        rep.total_iterations += trial.report.total_iterations;
        rep.newton = trial.report.newton;

        if (ok) {
            out.field = trial.field;
            rep.last_good_t = t;
            rep.final_residual = trial.report.final_residual;
            ++rep.homotopy_steps;
            if (first) {
                first = false;
            } else {
                t_done = t;
                refinements = 0;
                step = std::min(base_step, 2.0 * step);
            }
            if (!first && t_done >= 1.0) break;
            continue;
        }
        if (first || ++refinements > schedule.max_refinements) {
            rep.failure = "homotopy t-step underflow after " + std::to_string(schedule.max_refinements) +
                          " bisections; last good t = " + std::to_string(rep.last_good_t) +
                          " (Newton: " + trial.report.failure + ")";
            fill_diagnostics(rep, out.field, data, p);
            return out;
        }
        step *= 0.5;
    }

    rep.converged = true;
    fill_diagnostics(rep, out.field, data, p);
    return out;
}

}  // namespace pconvex::surface
