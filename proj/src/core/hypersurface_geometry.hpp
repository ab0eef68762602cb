#pragma once

// Star-shaped surfaces in R^3 as radial graphs X = rho(x) x over a
// latitude-longitude grid on S^2.

#include "spectral_operator.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

namespace pconvex::geometry {

using Vec3 = Eigen::Vector3d;

/// Closed-form eigen-decomposition of a symmetric 2x2 matrix; values in
/// descending order, vectors orthonormal columns.
struct Sym2Eigen {
    Eigen::Vector2d values;
    Eigen::Matrix2d vectors;
};
Sym2Eigen sym2_eigen(const Eigen::Matrix2d& A);

/// Eigenvalues of h relative to g (det(h - k g) = 0) through the similarity
/// g^{-1/2} h g^{-1/2}.  `vectors` are g-orthonormal: V^T g V = I.
struct GeneralizedEigen2 {
    Eigen::Vector2d values;
    Eigen::Matrix2d vectors;
};
GeneralizedEigen2 generalized_eigen2(const Eigen::Matrix2d& h, const Eigen::Matrix2d& g);

/// Interior colatitudes theta_a = (a + 1) pi / (n_theta + 1), longitudes
/// phi_b = 2 pi b / n_phi, plus one node per pole.  Ring node (a, b) has index
/// a * n_phi + b; the north and south poles follow.
class SphericalGrid {
public:
    SphericalGrid(int n_theta, int n_phi);

    int n_theta() const { return n_theta_; }
    int n_phi() const { return n_phi_; }
    double dtheta() const { return dtheta_; }
    double dphi() const { return dphi_; }
    int node_count() const { return n_theta_ * n_phi_ + 2; }

    int ring_node(int a, int b) const;
    int north() const { return n_theta_ * n_phi_; }
    int south() const { return n_theta_ * n_phi_ + 1; }
    bool is_pole(int node) const { return node >= n_theta_ * n_phi_; }

    double theta(int node) const;
    double phi(int node) const;
    Vec3 direction(int node) const;
    /// Orthonormal tangent frame: (d/dtheta, (1/sin theta) d/dphi) on rings,
    /// the Cartesian (e_x, e_y) at the poles.
    std::array<Vec3, 2> tangent_frame(int node) const;

    bool operator==(const SphericalGrid&) const = default;

private:
    int n_theta_;
    int n_phi_;
    double dtheta_;
    double dphi_;
};

/// Channels of a local stencil: value, gradient (2), Hessian (11, 12, 22) in
/// the node's orthonormal frame.
enum Channel : int { kValue = 0, kD1, kD2, kD11, kD12, kD22, kChannels };

using ChannelWeights = std::array<double, kChannels>;

/// Linear map from nodal values to the six local quantities at one node.
struct Stencil {
    std::vector<int> nodes;
    std::vector<ChannelWeights> weights;
};

/// Second-order central differences converted to the orthonormal frame,
/// including the connection terms of the round metric.
Stencil sphere_stencil(const SphericalGrid& grid, int node);

struct LocalDerivatives {
    double rho = 0.0;
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
};

LocalDerivatives apply_stencil(const Stencil& stencil, const Eigen::VectorXd& values);

struct RadialField {
    SphericalGrid grid;
    Eigen::VectorXd rho;

    static RadialField constant(const SphericalGrid& grid, double value);
    static RadialField sample(const SphericalGrid& grid, const std::function<double(const Vec3&)>& fn);
};

LocalDerivatives sphere_derivatives(const RadialField& field, int node);

struct PointFrame {
    Vec3 direction;  // x on the unit sphere
    std::array<Vec3, 2> tangent;
    Vec3 position;
    Vec3 normal;
    Eigen::Matrix2d metric;
    Eigen::Matrix2d second_form;
    spectral::EigenSpectrum curvatures;  // sorted descending
    Eigen::Matrix2d principal_vectors;   // g-orthonormal, columns match curvatures
    double support = 0.0;
};

/// Metric, second fundamental form, normal, support function and principal
/// curvatures from rho and its frame derivatives at a point x of S^2.
PointFrame frame_from_local(const Vec3& x, const std::array<Vec3, 2>& tangent, const LocalDerivatives& d);

PointFrame point_frame(const RadialField& field, int node);

struct CurvatureField {
    int p = 1;
    std::vector<std::array<double, 2>> kappa;
    std::vector<double> tilde_F;  // NaN outside the closed cone
    std::vector<double> margin;
    std::vector<double> support;
    std::vector<int> outside_cone;  // nodes with margin <= 0

    double min_margin = 0.0;
    double min_support = 0.0;
    double max_support = 0.0;
    double sup_abs_kappa = 0.0;
};

CurvatureField curvature_field(const RadialField& field, int p);

/// Triangulated lat-long shell with pole fans, counterclockwise seen from
/// outside.
void write_obj(std::ostream& out, const RadialField& field);

/// Header `theta,phi,rho,kappa1,kappa2,Ftilde,u,margin`.
void write_curvature_csv(std::ostream& out, const RadialField& field, const CurvatureField& curv);

}  // namespace pconvex::geometry
