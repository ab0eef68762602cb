#include "hypersurface_geometry.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <ostream>
#include <string>

namespace pconvex::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

void put(std::map<int, ChannelWeights>& acc, int node, Channel c, double w) {
    auto [it, inserted] = acc.try_emplace(node);
    if (inserted) it->second.fill(0.0);
    it->second[c] += w;
}

Stencil compact(const std::map<int, ChannelWeights>& acc) {
    Stencil s;
    s.nodes.reserve(acc.size());
    s.weights.reserve(acc.size());
    for (const auto& [node, w] : acc) {
        s.nodes.push_back(node);
        s.weights.push_back(w);
    }
    return s;
}

// Across-the-pole closure: the ring next to the pole, read along the n_phi / 2
// great circles through the pole, gives directional first and second
// differences; their Fourier moments in phi recover the Cartesian gradient and
// Hessian in the tangent plane.
Stencil pole_stencil(const SphericalGrid& grid, bool north) {
    const int n = grid.n_phi();
    const int half = n / 2;
    const int ring = north ? 0 : grid.n_theta() - 1;
    const int pole = north ? grid.north() : grid.south();
    const double h = grid.dtheta();
    const double inv_n = 1.0 / n;

    std::map<int, ChannelWeights> acc;
    put(acc, pole, kValue, 1.0);
    for (int b = 0; b < n; ++b) {
        const double phi = b * grid.dphi();
        const int fwd = grid.ring_node(ring, b);
        const int bwd = grid.ring_node(ring, b + half);
        // D_b = (rho_fwd + rho_bwd - 2 rho_pole) / h^2, G_b = (rho_fwd - rho_bwd) / (2h)
        const double c2 = std::cos(2.0 * phi);
        const double s2 = std::sin(2.0 * phi);
        const double w11 = inv_n * (1.0 + 2.0 * c2) / (h * h);
        const double w22 = inv_n * (1.0 - 2.0 * c2) / (h * h);
        const double w12 = inv_n * 2.0 * s2 / (h * h);
        for (int node : {fwd, bwd}) {
            put(acc, node, kD11, w11);
            put(acc, node, kD22, w22);
            put(acc, node, kD12, w12);
        }
        put(acc, pole, kD11, -2.0 * w11);
        put(acc, pole, kD22, -2.0 * w22);
        put(acc, pole, kD12, -2.0 * w12);

        const double g1 = inv_n * 2.0 * std::cos(phi) / (2.0 * h);
        const double g2 = inv_n * 2.0 * std::sin(phi) / (2.0 * h);
        put(acc, fwd, kD1, g1);
        put(acc, bwd, kD1, -g1);
        put(acc, fwd, kD2, g2);
        put(acc, bwd, kD2, -g2);
    }
    return compact(acc);
}

}  // namespace

Sym2Eigen sym2_eigen(const Eigen::Matrix2d& A) {
    const double a = A(0, 0);
    const double c = A(1, 1);
    const double b = 0.5 * (A(0, 1) + A(1, 0));
    const double d = std::hypot(a - c, 2.0 * b);
    Sym2Eigen out;
    out.values << 0.5 * (a + c + d), 0.5 * (a + c - d);

    Eigen::Vector2d u(a - c + d, 2.0 * b);
    Eigen::Vector2d w(2.0 * b, c - a + d);
    Eigen::Vector2d q = u.squaredNorm() >= w.squaredNorm() ? u : w;
    const double len = q.norm();
    if (len == 0.0) {
        q = Eigen::Vector2d(1.0, 0.0);
    } else {
        q /= len;
    }
    out.vectors.col(0) = q;
    out.vectors.col(1) = Eigen::Vector2d(-q[1], q[0]);
    return out;
}

GeneralizedEigen2 generalized_eigen2(const Eigen::Matrix2d& h, const Eigen::Matrix2d& g) {
    const Sym2Eigen ge = sym2_eigen(g);
    if (!(ge.values[1] > 0.0)) throw NumericError("metric is not positive definite");
    const Eigen::Matrix2d inv_sqrt =
        ge.vectors * ge.values.cwiseSqrt().cwiseInverse().asDiagonal() * ge.vectors.transpose();
    const Eigen::Matrix2d A = inv_sqrt * h * inv_sqrt;
    const Sym2Eigen ae = sym2_eigen(0.5 * (A + A.transpose()));
    return {ae.values, inv_sqrt * ae.vectors};
}

SphericalGrid::SphericalGrid(int n_theta, int n_phi) : n_theta_(n_theta), n_phi_(n_phi) {
    if (n_theta < 8) throw DomainError("spherical grid needs n_theta >= 8, got " + std::to_string(n_theta));
    if (n_phi < 16 || n_phi % 2 != 0) {
        throw DomainError("spherical grid needs an even n_phi >= 16, got " + std::to_string(n_phi));
    }
    dtheta_ = kPi / (n_theta + 1);
    dphi_ = 2.0 * kPi / n_phi;
}

int SphericalGrid::ring_node(int a, int b) const {
    b %= n_phi_;
    if (b < 0) b += n_phi_;
    return a * n_phi_ + b;
}

double SphericalGrid::theta(int node) const {
    if (node == north()) return 0.0;
    if (node == south()) return kPi;
    return (node / n_phi_ + 1) * dtheta_;
}

double SphericalGrid::phi(int node) const {
    if (is_pole(node)) return 0.0;
    return (node % n_phi_) * dphi_;
}

Vec3 SphericalGrid::direction(int node) const {
    if (node == north()) return {0.0, 0.0, 1.0};
    if (node == south()) return {0.0, 0.0, -1.0};
    const double t = theta(node);
    const double p = phi(node);
    return {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
}

std::array<Vec3, 2> SphericalGrid::tangent_frame(int node) const {
    if (is_pole(node)) return {Vec3(1.0, 0.0, 0.0), Vec3(0.0, 1.0, 0.0)};
    const double t = theta(node);
    const double p = phi(node);
    return {Vec3(std::cos(t) * std::cos(p), std::cos(t) * std::sin(p), -std::sin(t)),
            Vec3(-std::sin(p), std::cos(p), 0.0)};
}

Stencil sphere_stencil(const SphericalGrid& grid, int node) {
    if (node == grid.north()) return pole_stencil(grid, true);
    if (node == grid.south()) return pole_stencil(grid, false);

    const int a = node / grid.n_phi();
    const int b = node % grid.n_phi();
    const double ht = grid.dtheta();
    const double hp = grid.dphi();
    const double theta = grid.theta(node);
    const double s = std::sin(theta);
    const double cot = std::cos(theta) / s;

    auto at = [&](int da, int db) {
        const int aa = a + da;
        if (aa < 0) return grid.north();
        if (aa >= grid.n_theta()) return grid.south();
        return grid.ring_node(aa, b + db);
    };

    std::map<int, ChannelWeights> acc;
    put(acc, node, kValue, 1.0);

    // rho_theta, rho_phi, rho_theta_theta, rho_phi_phi, rho_theta_phi as lists
    // of (node, weight); then mapped to the orthonormal frame.
    auto add_theta = [&](Channel c, double f) {
        put(acc, at(1, 0), c, f / (2.0 * ht));
        put(acc, at(-1, 0), c, -f / (2.0 * ht));
    };
    auto add_phi = [&](Channel c, double f) {
        put(acc, at(0, 1), c, f / (2.0 * hp));
        put(acc, at(0, -1), c, -f / (2.0 * hp));
    };
    auto add_theta_theta = [&](Channel c, double f) {
        put(acc, at(1, 0), c, f / (ht * ht));
        put(acc, at(-1, 0), c, f / (ht * ht));
        put(acc, node, c, -2.0 * f / (ht * ht));
    };
    auto add_phi_phi = [&](Channel c, double f) {
        put(acc, at(0, 1), c, f / (hp * hp));
        put(acc, at(0, -1), c, f / (hp * hp));
        put(acc, node, c, -2.0 * f / (hp * hp));
    };
    auto add_theta_phi = [&](Channel c, double f) {
        const double w = f / (4.0 * ht * hp);
        put(acc, at(1, 1), c, w);
        put(acc, at(1, -1), c, -w);
        put(acc, at(-1, 1), c, -w);
        put(acc, at(-1, -1), c, w);
    };

    add_theta(kD1, 1.0);
    add_phi(kD2, 1.0 / s);
    add_theta_theta(kD11, 1.0);
    // rho_12 = (rho_theta_phi - cot rho_phi) / sin
    add_theta_phi(kD12, 1.0 / s);
    add_phi(kD12, -cot / s);
    // rho_22 = rho_phi_phi / sin^2 + cot rho_theta
    add_phi_phi(kD22, 1.0 / (s * s));
    add_theta(kD22, cot);

    return compact(acc);
}

LocalDerivatives apply_stencil(const Stencil& stencil, const Eigen::VectorXd& values) {
    ChannelWeights q{};
    for (std::size_t i = 0; i < stencil.nodes.size(); ++i) {
        const double v = values[stencil.nodes[i]];
        for (int c = 0; c < kChannels; ++c) q[static_cast<std::size_t>(c)] += stencil.weights[i][static_cast<std::size_t>(c)] * v;
    }
    LocalDerivatives d;
    d.rho = q[kValue];
    d.grad << q[kD1], q[kD2];
    d.hess << q[kD11], q[kD12], q[kD12], q[kD22];
    return d;
}

RadialField RadialField::constant(const SphericalGrid& grid, double value) {
    return {grid, Eigen::VectorXd::Constant(grid.node_count(), value)};
}

RadialField RadialField::sample(const SphericalGrid& grid, const std::function<double(const Vec3&)>& fn) {
    RadialField field{grid, Eigen::VectorXd(grid.node_count())};
    for (int i = 0; i < grid.node_count(); ++i) field.rho[i] = fn(grid.direction(i));
    return field;
}

LocalDerivatives sphere_derivatives(const RadialField& field, int node) {
    return apply_stencil(sphere_stencil(field.grid, node), field.rho);
}

PointFrame frame_from_local(const Vec3& x, const std::array<Vec3, 2>& tangent, const LocalDerivatives& d) {
    if (!(d.rho > 0.0)) throw DomainError("radial function must be positive");
    const double rho = d.rho;
    const Eigen::Vector2d& g1 = d.grad;
    const double w = std::sqrt(rho * rho + g1.squaredNorm());

    PointFrame f;
    f.direction = x;
    f.tangent = tangent;
    f.position = rho * x;
    const Vec3 grad3 = g1[0] * tangent[0] + g1[1] * tangent[1];
    f.normal = (rho * x - grad3) / w;
    f.metric = rho * rho * Eigen::Matrix2d::Identity() + g1 * g1.transpose();
    f.second_form = (rho * rho * Eigen::Matrix2d::Identity() + 2.0 * g1 * g1.transpose() - rho * d.hess) / w;
    f.support = rho * rho / w;

    const GeneralizedEigen2 ge = generalized_eigen2(f.second_form, f.metric);
    f.curvatures = spectral::EigenSpectrum({ge.values[0], ge.values[1]}, true);
    f.principal_vectors = ge.vectors;
    return f;
}

PointFrame point_frame(const RadialField& field, int node) {
    return frame_from_local(field.grid.direction(node), field.grid.tangent_frame(node),
                            sphere_derivatives(field, node));
}

CurvatureField curvature_field(const RadialField& field, int p) {
    const int count = field.grid.node_count();
    CurvatureField out;
    out.p = p;
    out.kappa.resize(static_cast<std::size_t>(count));
    out.tilde_F.resize(static_cast<std::size_t>(count));
    out.margin.resize(static_cast<std::size_t>(count));
    out.support.resize(static_cast<std::size_t>(count));
    out.min_margin = std::numeric_limits<double>::infinity();
    out.min_support = std::numeric_limits<double>::infinity();
    out.max_support = -std::numeric_limits<double>::infinity();
    out.sup_abs_kappa = 0.0;

    for (int i = 0; i < count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const PointFrame f = point_frame(field, i);
        out.kappa[k] = {f.curvatures[0], f.curvatures[1]};
        const auto margin = spectral::cone_margin(f.curvatures, p);
        out.margin[k] = margin.min_subset_sum;
        out.tilde_F[k] = spectral::eval_operator(f.curvatures, p).tilde_F;
        out.support[k] = f.support;
        if (!margin.inside()) out.outside_cone.push_back(i);

        out.min_margin = std::min(out.min_margin, margin.min_subset_sum);
        out.min_support = std::min(out.min_support, f.support);
        out.max_support = std::max(out.max_support, f.support);
        out.sup_abs_kappa = std::max({out.sup_abs_kappa, std::abs(f.curvatures[0]), std::abs(f.curvatures[1])});
    }
    return out;
}

void write_obj(std::ostream& out, const RadialField& field) {
    const SphericalGrid& grid = field.grid;
    char buf[128];
    out << "# radial graph shell: " << grid.n_theta() << " rings x " << grid.n_phi() << " longitudes + 2 poles\n";
    for (int i = 0; i < grid.node_count(); ++i) {
        const Vec3 X = field.rho[i] * grid.direction(i);
        std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", X[0], X[1], X[2]);
        out << buf;
    }
    // OBJ indices are one-based.
    auto id = [](int node) { return node + 1; };
    for (int b = 0; b < grid.n_phi(); ++b) {
        out << "f " << id(grid.north()) << ' ' << id(grid.ring_node(0, b)) << ' ' << id(grid.ring_node(0, b + 1))
            << '\n';
    }
    for (int a = 0; a + 1 < grid.n_theta(); ++a) {
        for (int b = 0; b < grid.n_phi(); ++b) {
            const int v00 = id(grid.ring_node(a, b));
            const int v10 = id(grid.ring_node(a + 1, b));
            const int v11 = id(grid.ring_node(a + 1, b + 1));
            const int v01 = id(grid.ring_node(a, b + 1));
            out << "f " << v00 << ' ' << v10 << ' ' << v11 << '\n';
            out << "f " << v00 << ' ' << v11 << ' ' << v01 << '\n';
        }
    }
    const int last = grid.n_theta() - 1;
    for (int b = 0; b < grid.n_phi(); ++b) {
        out << "f " << id(grid.ring_node(last, b)) << ' ' << id(grid.south()) << ' '
            << id(grid.ring_node(last, b + 1)) << '\n';
    }
}

void write_curvature_csv(std::ostream& out, const RadialField& field, const CurvatureField& curv) {
    out << "theta,phi,rho,kappa1,kappa2,Ftilde,u,margin\n";
    char buf[512];
    for (int i = 0; i < field.grid.node_count(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", field.grid.theta(i),
                      field.grid.phi(i), field.rho[i], curv.kappa[k][0], curv.kappa[k][1], curv.tilde_F[k],
                      curv.support[k], curv.margin[k]);
        out << buf;
    }
}

}  // namespace pconvex::geometry
