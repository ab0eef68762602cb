#pragma once

// Prescribed curvature problem tilde F(kappa(rho)) = f(X, nu)^(1/C) for
// radial graphs over S^2, solved by damped Newton along a homotopy from the
// unit sphere.

#include "errors.hpp"
#include "hypersurface_geometry.hpp"
#include "newton.hpp"
#include "prescribed_data.hpp"

#include <vector>

namespace pconvex::surface {

using geometry::RadialField;
using geometry::SphericalGrid;
using solver::NewtonConfig;

/// Raised by `residual` when a node is outside the open cone, has rho <= 0,
/// or sees f <= 0.
class ConeViolation : public DomainError {
public:
    ConeViolation(int node, double margin, const std::string& what)
        : DomainError(what), node_(node), margin_(margin) {}
    int node() const { return node_; }
    double margin() const { return margin_; }

private:
    int node_;
    double margin_;
};

/// Precomputed stencils and reverse dependencies for one grid.
class SurfaceDiscretization {
public:
    explicit SurfaceDiscretization(const SphericalGrid& grid);

    const SphericalGrid& grid() const { return grid_; }
    const geometry::Stencil& stencil(int node) const { return stencils_[static_cast<std::size_t>(node)]; }
    /// Nodes whose stencil reads `node`.
    const std::vector<int>& dependents(int node) const { return dependents_[static_cast<std::size_t>(node)]; }

private:
    SphericalGrid grid_;
    std::vector<geometry::Stencil> stencils_;
    std::vector<std::vector<int>> dependents_;
};

/// r = tilde F(kappa) - f(X, nu)^(1/C) at every node.  Throws ConeViolation
/// naming the worst node.
Eigen::VectorXd residual(const RadialField& field, const PrescribedData& data, int p);

/// Non-throwing residual used by the solvers.
solver::Evaluation evaluate_residual(const SurfaceDiscretization& disc, const Eigen::VectorXd& rho,
                                     const PrescribedData& data, int p, int threads = 1);

/// Chain-rule Jacobian through the stencils.
solver::SparseMatrix assemble_jacobian(const SurfaceDiscretization& disc, const Eigen::VectorXd& rho,
                                       const PrescribedData& data, int p, int threads = 1);

/// Columnwise central-difference Jacobian, touching only dependent rows.
solver::SparseMatrix finite_difference_jacobian(const SurfaceDiscretization& disc, const Eigen::VectorXd& rho,
                                                const PrescribedData& data, int p, double step,
                                                int threads = 1);

struct HomotopySchedule {
    int steps = 10;
    double eps = 0.1;
    int max_refinements = 10;

    /// steps >= 1, eps > 0 and (1 + eps) r2^-C - eps >= c0 on the data annulus.
    void validate(const PrescribedData& data, double c0 = 1e-3) const;
};

struct HomotopyStep {
    double t = 0.0;
    bool converged = false;
    int iterations = 0;
    double final_residual = 0.0;
};

struct SurfaceReport {
    solver::ConvergenceRecord newton;  // last Newton solve
    bool converged = false;
    std::string failure;
    std::vector<ConditionReport> conditions;
    std::vector<HomotopyStep> homotopy;
    int total_iterations = 0;
    int homotopy_steps = 0;
    double last_good_t = 0.0;

    double final_residual = 0.0;
    double sup_abs_kappa = 0.0;
    double min_cone_margin = 0.0;
    double min_rho = 0.0;
    double max_rho = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
    double grid_spacing = 0.0;
    double min_support = 0.0;
    double max_support = 0.0;
    double max_abs_rho_minus_one = 0.0;
    bool has_target = false;
    double max_error_vs_target = 0.0;  // manufactured data only
};

struct SurfaceSolution {
    RadialField field;
    SurfaceReport report;
};

/// Throws DomainError if the initial field is not admissible.
SurfaceSolution newton_solve(const RadialField& initial, const PrescribedData& data, int p,
                             const NewtonConfig& config);

/// Continuation in t from the unit sphere (t = 0) to the data (t = 1).  Each
/// failed step is bisected up to `max_refinements` times.
SurfaceSolution homotopy_solve(const SphericalGrid& grid, const PrescribedData& data, int p,
                               const HomotopySchedule& schedule, const NewtonConfig& config);

/// Fills the geometric diagnostics of a report from a field.
void fill_diagnostics(SurfaceReport& report, const RadialField& field, const PrescribedData& data, int p);

}  // namespace pconvex::surface
