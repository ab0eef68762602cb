#include "dirichlet_solver.hpp"

#include "errors.hpp"
#include "spectral_operator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace pconvex::dirichlet {

using geometry::Channel;

namespace {

constexpr double kInsideTol = 1e-12;

class ConstantRhs final : public DirichletRhs {
public:
    explicit ConstantRhs(double value) : value_(value) {}
    RhsSample evaluate(const Point&, double, const Point&) const override { return {value_, 0.0, Point::Zero()}; }

private:
    double value_;
};

class RadialBumpRhs final : public DirichletRhs {
public:
    RadialBumpRhs(double value, double amplitude, Point centre)
        : value_(value), amplitude_(amplitude), centre_(std::move(centre)) {}
    RhsSample evaluate(const Point& x, double, const Point&) const override {
        return {value_ * (1.0 + amplitude_ * (x - centre_).squaredNorm()), 0.0, Point::Zero()};
    }

private:
    double value_;
    double amplitude_;
    Point centre_;
};

// u* = exp(|x|^2/2) has D^2 u* = u* (I + x x^T) with eigenvalues u + |Du|^2/u
// and u, so f(x, u, Du) = F(u + |Du|^2/u, u) reproduces it.
class ManufacturedExpRhs final : public DirichletRhs {
public:
    explicit ManufacturedExpRhs(int p) : p_(p) {}
    RhsSample evaluate(const Point&, double u, const Point& du) const override {
        RhsSample s;
        if (!(u > 0.0)) {
            s.f = std::numeric_limits<double>::quiet_NaN();
            return s;
        }
        const double q = du.squaredNorm();
        const spectral::EigenSpectrum spec({u + q / u, u});
        const spectral::OperatorJet jet = spectral::eigen_jet(spec, p_);
        const double F = jet.value_F.value();
        const double dF0 = F * jet.log_grad[0];
        const double dF1 = F * jet.log_grad[1];
        s.f = F;
        s.d_u = dF0 * (1.0 - q / (u * u)) + dF1;
        s.d_gradient = dF0 * 2.0 * du / u;
        return s;
    }

private:
    int p_;
};

Eigen::Matrix2d hessian_of(const std::array<double, geometry::kChannels>& q) {
    Eigen::Matrix2d H;
    H << q[geometry::kD11], q[geometry::kD12], q[geometry::kD12], q[geometry::kD22];
    return H;
}

std::array<double, geometry::kChannels> channels(const NodeStencil& st, const Eigen::VectorXd& u,
                                                 const BoundaryData& v) {
    std::array<double, geometry::kChannels> q{};
    for (const auto& e : st.entries) {
        const double val = e.unknown >= 0 ? u[e.unknown] : v.value(e.point);
        for (int c = 0; c < geometry::kChannels; ++c) q[static_cast<std::size_t>(c)] += e.weights[static_cast<std::size_t>(c)] * val;
    }
    return q;
}

struct NodeState {
    bool ok = false;
    std::string reason;
    double residual = 0.0;
    double margin = -std::numeric_limits<double>::infinity();
    std::array<double, geometry::kChannels> q{};
    geometry::Sym2Eigen eig;
    RhsSample sample;
    double f_tilde = 0.0;
};

NodeState node_state(const DomainGrid& grid, const Eigen::VectorXd& u, const BoundaryData& v, const RhsData& f,
                     int p, int k) {
    NodeState s;
    s.q = channels(grid.stencil(k), u, v);
    s.eig = geometry::sym2_eigen(hessian_of(s.q));
    const spectral::EigenSpectrum spec({s.eig.values[0], s.eig.values[1]}, true);
    s.margin = spectral::cone_margin(spec, p).min_subset_sum;
    if (!(s.margin > 0.0)) {
        s.reason = "Hessian eigenvalues outside the open p-convex cone";
        return s;
    }
    s.sample = f.evaluate(grid.position(k), s.q[geometry::kValue], Point(s.q[geometry::kD1], s.q[geometry::kD2]));
    if (!(s.sample.f > 0.0) || !std::isfinite(s.sample.f)) {
        s.reason = "prescribed f is not positive";
        return s;
    }
    s.f_tilde = std::pow(s.sample.f, 1.0 / f.power());
    s.residual = spectral::eval_operator(spec, p).tilde_F - s.f_tilde;
    s.ok = true;
    return s;
}

std::array<double, geometry::kChannels> node_sensitivity(const NodeState& s, const RhsData& f, int p) {
    const spectral::EigenSpectrum spec({s.eig.values[0], s.eig.values[1]}, true);
    const spectral::OperatorJet jet = spectral::eigen_jet(spec, p);
    const Eigen::Matrix2d G = s.eig.vectors * jet.grad.asDiagonal() * s.eig.vectors.transpose();
    const double scale = s.f_tilde / (f.power() * s.sample.f);
    std::array<double, geometry::kChannels> d{};
    d[geometry::kValue] = -scale * s.sample.d_u;
    d[geometry::kD1] = -scale * s.sample.d_gradient[0];
    d[geometry::kD2] = -scale * s.sample.d_gradient[1];
    d[geometry::kD11] = G(0, 0);
    d[geometry::kD12] = 2.0 * G(0, 1);
    d[geometry::kD22] = G(1, 1);
    return d;
}

void add_line(std::vector<StencilEntry>& extra, ChannelWeights& centre, double a, double b, Channel second,
              double second_scale, int first_channel, StencilEntry fwd, StencilEntry bwd) {
    // Non-uniform three-point formulas along a line with forward distance a
    // and backward distance b.
    const double s2f = 2.0 / (a * (a + b));
    const double s2b = 2.0 / (b * (a + b));
    const double s2c = -2.0 / (a * b);
    fwd.weights[second] += second_scale * s2f;
    bwd.weights[second] += second_scale * s2b;
    centre[second] += second_scale * s2c;
    if (first_channel >= 0) {
        const auto fc = static_cast<std::size_t>(first_channel);
        fwd.weights[fc] += b / (a * (a + b));
        bwd.weights[fc] += -a / (b * (a + b));
        centre[fc] += (a - b) / (a * b);
    }
    extra.push_back(fwd);
    extra.push_back(bwd);
}

}  // namespace

std::string to_string(DomainShape shape) { return shape == DomainShape::Square ? "square" : "disk"; }

DomainShape domain_shape_from_string(const std::string& name) {
    if (name == "square") return DomainShape::Square;
    if (name == "disk") return DomainShape::Disk;
    throw UsageError("unknown domain '" + name + "' (expected square or disk)");
}

DomainGrid::DomainGrid(DomainShape shape, int nodes_per_side) : shape_(shape), n_(nodes_per_side) {
    if (nodes_per_side < 5) throw DomainError("Dirichlet grid needs at least 5 nodes per side");
    if (shape == DomainShape::Square) {
        h_ = 1.0 / (n_ - 1);
        origin_ = Point(0.0, 0.0);
    } else {
        h_ = 2.0 / (n_ - 1);
        origin_ = Point(-1.0, -1.0);
    }

    std::vector<int> index(static_cast<std::size_t>(n_ * n_), -1);
    auto node_pos = [&](int i, int j) { return Point(origin_[0] + i * h_, origin_[1] + j * h_); };
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < n_; ++i) {
            const Point x = node_pos(i, j);
            if (inside(x)) {
                index[static_cast<std::size_t>(j * n_ + i)] = static_cast<int>(positions_.size());
                positions_.push_back(x);
            }
        }
    }

    const std::array<std::array<int, 2>, 4> dirs = {{{1, 0}, {0, 1}, {1, 1}, {1, -1}}};
    stencils_.resize(positions_.size());
    dependents_.resize(positions_.size());
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < n_; ++i) {
            const int k = index[static_cast<std::size_t>(j * n_ + i)];
            if (k < 0) continue;
            const Point x0 = positions_[static_cast<std::size_t>(k)];
            NodeStencil& st = stencils_[static_cast<std::size_t>(k)];
            ChannelWeights centre{};
            centre[geometry::kValue] = 1.0;
            std::vector<StencilEntry> extra;

            for (std::size_t di = 0; di < dirs.size(); ++di) {
                const Point d(dirs[di][0], dirs[di][1]);
                const double len = d.norm();
                auto neighbour = [&](int sign) {
                    StencilEntry e;
                    const int ni = i + sign * dirs[di][0];
                    const int nj = j + sign * dirs[di][1];
                    int idx = -1;
                    if (ni >= 0 && nj >= 0 && ni < n_ && nj < n_) idx = index[static_cast<std::size_t>(nj * n_ + ni)];
                    double dist = h_ * len;
                    if (idx >= 0) {
                        e.unknown = idx;
                        e.point = positions_[static_cast<std::size_t>(idx)];
                    } else {
                        const double frac = boundary_fraction(x0, sign * d);
                        e.unknown = -1;
                        e.point = x0 + frac * h_ * sign * d;
                        dist = frac * h_ * len;
                        st.boundary_adjacent = true;
                    }
                    return std::pair{e, dist};
                };
                auto [fwd, a] = neighbour(+1);
                auto [bwd, b] = neighbour(-1);
                switch (di) {
                    case 0: add_line(extra, centre, a, b, geometry::kD11, 1.0, geometry::kD1, fwd, bwd); break;
                    case 1: add_line(extra, centre, a, b, geometry::kD22, 1.0, geometry::kD2, fwd, bwd); break;
                    // u_xy = (D_{(1,1)} - D_{(1,-1)}) / 2 with unit-direction second differences.
                    case 2: add_line(extra, centre, a, b, geometry::kD12, 0.5, -1, fwd, bwd); break;
                    case 3: add_line(extra, centre, a, b, geometry::kD12, -0.5, -1, fwd, bwd); break;
                    default: break;
                }
            }

            StencilEntry c;
            c.unknown = k;
            c.point = x0;
            c.weights = centre;
            st.entries.push_back(c);
            // Merge repeated unknowns so each appears once.
            for (auto& e : extra) {
                auto it = e.unknown >= 0 ? std::find_if(st.entries.begin(), st.entries.end(),
                                                        [&](const StencilEntry& x) { return x.unknown == e.unknown; })
                                         : st.entries.end();
                if (it == st.entries.end()) {
                    st.entries.push_back(e);
                } else {
                    for (int ch = 0; ch < geometry::kChannels; ++ch) it->weights[static_cast<std::size_t>(ch)] += e.weights[static_cast<std::size_t>(ch)];
                }
            }
            for (const auto& e : st.entries) {
                if (e.unknown >= 0) dependents_[static_cast<std::size_t>(e.unknown)].push_back(k);
            }
        }
    }
}

bool DomainGrid::inside(const Point& x) const {
    if (shape_ == DomainShape::Disk) return x.squaredNorm() < 1.0 - kInsideTol;
    return x[0] > kInsideTol && x[0] < 1.0 - kInsideTol && x[1] > kInsideTol && x[1] < 1.0 - kInsideTol;
}

Point DomainGrid::centre() const { return shape_ == DomainShape::Disk ? Point(0.0, 0.0) : Point(0.5, 0.5); }

double DomainGrid::circumradius() const { return shape_ == DomainShape::Disk ? 1.0 : std::sqrt(0.5); }

double DomainGrid::boundary_fraction(const Point& x0, const Point& d) const {
    double frac = 1.0;
    if (shape_ == DomainShape::Disk) {
        const Point step = h_ * d;
        const double a = step.squaredNorm();
        const double b = 2.0 * x0.dot(step);
        const double c = x0.squaredNorm() - 1.0;
        frac = (-b + std::sqrt(std::max(0.0, b * b - 4.0 * a * c))) / (2.0 * a);
    } else {
        for (int axis = 0; axis < 2; ++axis) {
            if (d[axis] == 0.0) continue;
            const double edge = d[axis] > 0.0 ? 1.0 : 0.0;
            frac = std::min(frac, (edge - x0[axis]) / (h_ * d[axis]));
        }
    }
    return std::clamp(frac, 1e-9, 1.0);
}

BoundaryData BoundaryData::zero() {
    return {"zero", [](const Point&) { return 0.0; }};
}

BoundaryData BoundaryData::quadratic(const Eigen::Matrix2d& A, const Point& b, double c) {
    const Eigen::Matrix2d S = 0.5 * (A + A.transpose());
    return {"quadratic", [S, b, c](const Point& x) { return 0.5 * x.dot(S * x) + b.dot(x) + c; }};
}

BoundaryData BoundaryData::exp_radial() {
    return {"exp_radial", [](const Point& x) { return std::exp(0.5 * x.squaredNorm()); }};
}

int RhsData::power() const { return static_cast<int>(spectral::binomial(2, p)); }

RhsData RhsData::constant(int p, double value) {
    if (!(value > 0.0)) throw DomainError("right-hand side must be positive");
    return {"constant", p, std::make_shared<ConstantRhs>(value)};
}

RhsData RhsData::radial_bump(int p, double value, double amplitude) {
    if (!(value > 0.0) || amplitude < 0.0) throw DomainError("radial_bump needs value > 0 and amplitude >= 0");
    return {"radial_bump", p, std::make_shared<RadialBumpRhs>(value, amplitude, Point::Zero())};
}

RhsData RhsData::manufactured_exp(int p) { return {"manufactured_exp", p, std::make_shared<ManufacturedExpRhs>(p)}; }

ScalarField ScalarField::sample(const DomainGrid& grid, const BoundaryData& boundary,
                                const std::function<double(const Point&)>& fn) {
    ScalarField out{Eigen::VectorXd(grid.unknown_count()), boundary};
    for (int k = 0; k < grid.unknown_count(); ++k) out.interior[k] = fn(grid.position(k));
    return out;
}

LocalHessian local_derivatives(const DomainGrid& grid, const ScalarField& u, int unknown) {
    const auto q = channels(grid.stencil(unknown), u.interior, u.boundary);
    return {q[geometry::kValue], Point(q[geometry::kD1], q[geometry::kD2]), hessian_of(q)};
}

solver::Evaluation evaluate_residual(const DomainGrid& grid, const Eigen::VectorXd& u, const BoundaryData& v,
                                     const RhsData& f, int p, int threads) {
    const int count = grid.unknown_count();
    std::vector<NodeState> states(static_cast<std::size_t>(count));
    solver::parallel_for(count, threads, [&](int begin, int end) {
        for (int k = begin; k < end; ++k) states[static_cast<std::size_t>(k)] = node_state(grid, u, v, f, p, k);
    });
    solver::Evaluation ev;
    ev.residual.resize(count);
    ev.admissible = true;
    ev.min_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < count; ++k) {
        const NodeState& s = states[static_cast<std::size_t>(k)];
        ev.residual[k] = s.ok ? s.residual : std::numeric_limits<double>::quiet_NaN();
        if (!s.ok && ev.admissible) {
            ev.admissible = false;
            ev.worst_node = k;
            ev.reason = "node " + std::to_string(k) + ": " + s.reason;
        }
        if (s.margin < ev.min_margin) {
            ev.min_margin = s.margin;
            if (ev.admissible) ev.worst_node = k;
        }
    }
    return ev;
}

Eigen::VectorXd residual_dirichlet(const DomainGrid& grid, const ScalarField& u, const RhsData& f, int p) {
    if (f.p != p) throw DomainError("operator p does not match the right-hand side");
    const solver::Evaluation ev = evaluate_residual(grid, u.interior, u.boundary, f, p);
    if (!ev.admissible) throw DomainError("Dirichlet residual: " + ev.reason);
    return ev.residual;
}

solver::SparseMatrix assemble_jacobian(const DomainGrid& grid, const Eigen::VectorXd& u, const BoundaryData& v,
                                       const RhsData& f, int p, int threads) {
    const int count = grid.unknown_count();
    std::vector<std::vector<Eigen::Triplet<double>>> rows(static_cast<std::size_t>(count));
    solver::parallel_for(count, threads, [&](int begin, int end) {
        for (int k = begin; k < end; ++k) {
            const NodeState s = node_state(grid, u, v, f, p, k);
            if (!s.ok) throw DomainError("Jacobian requested at an inadmissible iterate: " + s.reason);
            const auto dr = node_sensitivity(s, f, p);
            auto& row = rows[static_cast<std::size_t>(k)];
            for (const auto& e : grid.stencil(k).entries) {
                if (e.unknown < 0) continue;
                double val = 0.0;
                for (int c = 0; c < geometry::kChannels; ++c) val += dr[static_cast<std::size_t>(c)] * e.weights[static_cast<std::size_t>(c)];
                row.emplace_back(k, e.unknown, val);
            }
        }
    });
    std::vector<Eigen::Triplet<double>> triplets;
    for (auto& r : rows) triplets.insert(triplets.end(), r.begin(), r.end());
    solver::SparseMatrix J(count, count);
    J.setFromTriplets(triplets.begin(), triplets.end());
    return J;
}

solver::SparseMatrix finite_difference_jacobian(const DomainGrid& grid, const Eigen::VectorXd& u,
                                                const BoundaryData& v, const RhsData& f, int p, double step) {
    const int count = grid.unknown_count();
    std::vector<Eigen::Triplet<double>> triplets;
    Eigen::VectorXd work = u;
    for (int m = 0; m < count; ++m) {
        const double h = step * std::max(1.0, std::abs(u[m]));
        for (int k : grid.dependents(m)) {
            work[m] = u[m] + h;
            const NodeState plus = node_state(grid, work, v, f, p, k);
            work[m] = u[m] - h;
            const NodeState minus = node_state(grid, work, v, f, p, k);
            work[m] = u[m];
            if (!plus.ok || !minus.ok) throw DomainError("finite-difference Jacobian left the cone");
            triplets.emplace_back(k, m, (plus.residual - minus.residual) / (2.0 * h));
        }
    }
    solver::SparseMatrix J(count, count);
    J.setFromTriplets(triplets.begin(), triplets.end());
    return J;
}

double interior_monitor(const DomainGrid& grid, const ScalarField& u, double beta) {
    bool all_equal = true;
    for (int k = 0; k < grid.unknown_count(); ++k) {
        const double gap = u.boundary.value(grid.position(k)) - u.interior[k];
        if (gap < -1e-12) {
            throw DomainError("interior_monitor: u > v at interior node " + std::to_string(k));
        }
        if (gap > 1e-12) all_equal = false;
    }
    if (all_equal) throw DomainError("interior_monitor: u = v in the interior, the monitor is vacuous");

    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid.unknown_count(); ++k) {
        const double gap = std::max(0.0, u.boundary.value(grid.position(k)) - u.interior[k]);
        const LocalHessian d = local_derivatives(grid, u, k);
        const double weight = beta == 0.0 ? 1.0 : std::pow(gap, beta);
        best = std::max(best, weight * d.hessian.trace());
    }
    return best;
}

C2Report global_c2_report(const DomainGrid& grid, const ScalarField& u) {
    C2Report r;
    for (int k = 0; k < grid.unknown_count(); ++k) {
        const double m = local_derivatives(grid, u, k).hessian.cwiseAbs().maxCoeff();
        r.interior_sup = std::max(r.interior_sup, m);
        if (grid.stencil(k).boundary_adjacent) r.boundary_sup = std::max(r.boundary_sup, m);
    }
    r.ratio = r.boundary_sup > 0.0 ? r.interior_sup / r.boundary_sup : std::numeric_limits<double>::infinity();
    return r;
}

DirichletSolution solve_dirichlet(const DomainGrid& grid, const BoundaryData& v, const RhsData& f, int p,
                                  const NewtonConfig& config, const std::vector<double>& betas) {
    if (f.p != p) throw DomainError("operator p does not match the right-hand side");
    const int count = grid.unknown_count();

    // v must be p-plurisubharmonic on the grid (closed cone, up to round-off).
    const Eigen::VectorXd v_int = ScalarField::sample(grid, v, v.value).interior;
    for (int k = 0; k < count; ++k) {
        const auto q = channels(grid.stencil(k), v_int, v);
        const auto e = geometry::sym2_eigen(hessian_of(q));
        const double margin = spectral::cone_margin(spectral::EigenSpectrum({e.values[0], e.values[1]}, true), p)
                                  .min_subset_sum;
        if (margin < -1e-8 * (1.0 + e.values.cwiseAbs().maxCoeff())) {
            throw DomainError("boundary data is not p-plurisubharmonic at interior node " + std::to_string(k));
        }
    }

    solver::NewtonSystem system;
    system.evaluate = [&](const Eigen::VectorXd& u) { return evaluate_residual(grid, u, v, f, p, config.threads); };
    system.jacobian = [&](const Eigen::VectorXd& u) {
        return config.fd_jacobian ? finite_difference_jacobian(grid, u, v, f, p, config.fd_step)
                                  : assemble_jacobian(grid, u, v, f, p, config.threads);
    };

    DirichletSolution out{ScalarField{v_int, v}, {}};
    DirichletReport& rep = out.report;

    Eigen::VectorXd u0 = v_int;
    const solver::Evaluation at_v = system.evaluate(v_int);
    if (!(at_v.admissible && at_v.norm() <= config.tol)) {
        // u0 = v + s (|x - x0|^2 - R^2): adding 2 s I to the Hessian moves it
        // into the open cone for any s > 0; s is halved while f(x, u0, Du0)
        // is not positive.
        const Point x0 = grid.centre();
        const double R2 = grid.circumradius() * grid.circumradius();
        double s = 1.0;
        bool admissible = false;
        for (int attempt = 0; attempt < 30 && !admissible; ++attempt) {
            for (int k = 0; k < count; ++k) u0[k] = v_int[k] + s * ((grid.position(k) - x0).squaredNorm() - R2);
            admissible = system.evaluate(u0).admissible;
            if (!admissible) s *= 0.5;
        }
        rep.initial_shift = s;
    }

    solver::NewtonResult res = solver::damped_newton(system, u0, config);
    out.u.interior = res.x;
    rep.newton = res.record;
    rep.converged = res.record.converged;
    rep.failure = res.record.failure;
    rep.final_residual = res.record.residual_history.back();
    rep.min_cone_margin = res.record.margin_history.back();
    rep.c2 = global_c2_report(grid, out.u);
    for (double beta : betas) {
        try {
            rep.monitor.emplace_back(beta, interior_monitor(grid, out.u, beta));
        } catch (const DomainError& e) {
            rep.monitor_note = e.what();
            rep.monitor.clear();
            break;
        }
    }
    return out;
}

void write_field_csv(std::ostream& out, const DomainGrid& grid, const ScalarField& u, int p, double beta) {
    out << "x,y,u,lambda1,lambda2,margin,monitor\n";
    char buf[512];
    for (int k = 0; k < grid.unknown_count(); ++k) {
        const LocalHessian d = local_derivatives(grid, u, k);
        const auto e = geometry::sym2_eigen(d.hessian);
        const double margin =
            spectral::cone_margin(spectral::EigenSpectrum({e.values[0], e.values[1]}, true), p).min_subset_sum;
        const double gap = std::max(0.0, u.boundary.value(grid.position(k)) - u.interior[k]);
        const double monitor = (beta == 0.0 ? 1.0 : std::pow(gap, beta)) * d.hessian.trace();
        const Point& x = grid.position(k);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", x[0], x[1], u.interior[k],
                      e.values[0], e.values[1], margin, monitor);
        out << buf;
    }
}

}  // namespace pconvex::dirichlet
