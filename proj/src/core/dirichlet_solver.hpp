#pragma once

// Dirichlet problem tilde F(lambda(D^2 u)) = f(x, u, Du)^(1/C) in a planar
// domain with u = v on the boundary, plus the interior and global second
// derivative monitors.

#include "hypersurface_geometry.hpp"
#include "newton.hpp"

#include <Eigen/Dense>

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace pconvex::dirichlet {

using Point = Eigen::Vector2d;
using geometry::ChannelWeights;
using solver::NewtonConfig;

enum class DomainShape { Square, Disk };

std::string to_string(DomainShape shape);
DomainShape domain_shape_from_string(const std::string& name);

/// One stencil term.  `unknown` < 0 marks a boundary point whose value comes
/// from the Dirichlet data at `point`.
struct StencilEntry {
    int unknown = -1;
    Point point = Point::Zero();
    ChannelWeights weights{};
};

struct NodeStencil {
    std::vector<StencilEntry> entries;
    bool boundary_adjacent = false;
};

/// Unit square [0,1]^2 or unit disk (masked square [-1,1]^2) with N nodes per
/// side.  Interior nodes are unknowns.  Along each of the four stencil
/// directions (x, y and both diagonals) a neighbour that is not interior is
/// replaced by the point where that grid line meets the boundary, giving
/// three-point non-uniform differences there; away from the boundary the
/// stencil is the standard 9-point one with the 4-point cross for u_xy.
class DomainGrid {
public:
    DomainGrid(DomainShape shape, int nodes_per_side);

    DomainShape shape() const { return shape_; }
    int nodes_per_side() const { return n_; }
    double spacing() const { return h_; }
    int unknown_count() const { return static_cast<int>(positions_.size()); }

    const Point& position(int unknown) const { return positions_[static_cast<std::size_t>(unknown)]; }
    const NodeStencil& stencil(int unknown) const { return stencils_[static_cast<std::size_t>(unknown)]; }
    /// Unknowns whose stencil reads `unknown`.
    const std::vector<int>& dependents(int unknown) const { return dependents_[static_cast<std::size_t>(unknown)]; }
    bool inside(const Point& x) const;
    /// Centre and circumradius used for the convex initial bump.
    Point centre() const;
    double circumradius() const;

private:
    double boundary_fraction(const Point& x0, const Point& d) const;

    DomainShape shape_;
    int n_;
    double h_;
    Point origin_;
    std::vector<Point> positions_;
    std::vector<NodeStencil> stencils_;
    std::vector<std::vector<int>> dependents_;
};

/// Boundary data v, also evaluated in the interior for initial guesses and
/// the monitor.
struct BoundaryData {
    std::string kind;
    std::function<double(const Point&)> value;

    static BoundaryData zero();
    /// v = 0.5 x^T A x + b^T x + c.
    static BoundaryData quadratic(const Eigen::Matrix2d& A, const Point& b, double c);
    /// v = exp(|x|^2 / 2).
    static BoundaryData exp_radial();
};

struct RhsSample {
    double f = 0.0;
    double d_u = 0.0;
    Point d_gradient = Point::Zero();
};

class DirichletRhs {
public:
    virtual ~DirichletRhs() = default;
    virtual RhsSample evaluate(const Point& x, double u, const Point& du) const = 0;
};

struct RhsData {
    std::string kind;
    int p = 1;
    std::shared_ptr<const DirichletRhs> rhs;

    int power() const;
    RhsSample evaluate(const Point& x, double u, const Point& du) const { return rhs->evaluate(x, u, du); }

    static RhsData constant(int p, double value);
    /// f = value (1 + amplitude |x - centre|^2); depends on x only.
    static RhsData radial_bump(int p, double value, double amplitude);
    /// f = F(u + |Du|^2 / u, u), solved by u* = exp(|x|^2 / 2).
    static RhsData manufactured_exp(int p);
};

/// Values at the interior unknowns; the boundary trace is the Dirichlet data.
struct ScalarField {
    Eigen::VectorXd interior;
    BoundaryData boundary;

    static ScalarField sample(const DomainGrid& grid, const BoundaryData& boundary,
                              const std::function<double(const Point&)>& fn);
};

struct LocalHessian {
    double u = 0.0;
    Point gradient = Point::Zero();
    Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
};

LocalHessian local_derivatives(const DomainGrid& grid, const ScalarField& u, int unknown);

/// r = tilde F(lambda(D^2 u)) - f(x, u, Du)^(1/C) at every interior node;
/// throws DomainError naming the first node outside the open cone.
Eigen::VectorXd residual_dirichlet(const DomainGrid& grid, const ScalarField& u, const RhsData& f, int p);

solver::Evaluation evaluate_residual(const DomainGrid& grid, const Eigen::VectorXd& u, const BoundaryData& v,
                                     const RhsData& f, int p, int threads = 1);
solver::SparseMatrix assemble_jacobian(const DomainGrid& grid, const Eigen::VectorXd& u, const BoundaryData& v,
                                       const RhsData& f, int p, int threads = 1);
solver::SparseMatrix finite_difference_jacobian(const DomainGrid& grid, const Eigen::VectorXd& u,
                                                const BoundaryData& v, const RhsData& f, int p, double step);

/// sup over interior nodes of (v - u)^beta * (u_xx + u_yy).  Throws
/// DomainError if u > v + 1e-12 somewhere, or if u = v (within 1e-12) at
/// every interior node.
double interior_monitor(const DomainGrid& grid, const ScalarField& u, double beta);

struct C2Report {
    double interior_sup = 0.0;
    double boundary_sup = 0.0;  // over boundary-adjacent interior nodes
    double ratio = 0.0;
};
C2Report global_c2_report(const DomainGrid& grid, const ScalarField& u);

struct DirichletReport {
    solver::ConvergenceRecord newton;
    bool converged = false;
    std::string failure;
    double initial_shift = 0.0;  // s in u0 = v + s (|x - x0|^2 - R^2)
    double min_cone_margin = 0.0;
    double final_residual = 0.0;
    std::vector<std::pair<double, double>> monitor;  // (beta, sup (v-u)^beta Lap u)
    std::string monitor_note;
    C2Report c2;
    std::optional<double> max_error_vs_exact;
};

struct DirichletSolution {
    ScalarField u;
    DirichletReport report;
};

/// Throws DomainError if v is not p-plurisubharmonic on the grid or f <= 0.
DirichletSolution solve_dirichlet(const DomainGrid& grid, const BoundaryData& v, const RhsData& f, int p,
                                  const NewtonConfig& config, const std::vector<double>& betas = {2.0});

/// Header `x,y,u,lambda1,lambda2,margin,monitor`; monitor uses `beta`.
void write_field_csv(std::ostream& out, const DomainGrid& grid, const ScalarField& u, int p, double beta);

}  // namespace pconvex::dirichlet
