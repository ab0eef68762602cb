#include "hypersurface_geometry.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

using namespace pconvex;
using namespace pconvex::geometry;

namespace {

// Principal curvatures of a surface of revolution about the z-axis with
// meridian (r(t), z(t)), outward normal, sorted descending.
std::array<double, 2> revolution_curvatures(double r, double r1, double r2, double z1, double z2) {
    const double speed2 = r1 * r1 + z1 * z1;
    const double km = (r2 * z1 - r1 * z2) / std::pow(speed2, 1.5);
    const double kp = -z1 / (r * std::sqrt(speed2));
    return {std::max(km, kp), std::min(km, kp)};
}

// rho = 1 + a cos(theta) in polar form.
std::array<double, 2> cosine_curvatures(double a, double theta) {
    const double s = std::sin(theta), c = std::cos(theta);
    const double rho = 1 + a * c, d1 = -a * s, d2 = -a * c;
    const double r = rho * s;
    const double r1 = d1 * s + rho * c;
    const double r2 = d2 * s + 2 * d1 * c - rho * s;
    const double z1 = d1 * c - rho * s;
    const double z2 = d2 * c - 2 * d1 * s - rho * c;
    return revolution_curvatures(r, r1, r2, z1, z2);
}

// Spheroid x^2 + y^2 + z^2/c^2 = 1 through its parametric angle.
std::array<double, 2> spheroid_curvatures(double c, double theta) {
    const double t = std::atan2(c * std::sin(theta), std::cos(theta));
    const double q = std::cos(t) * std::cos(t) + c * c * std::sin(t) * std::sin(t);
    const double km = c / std::pow(q, 1.5);
    const double kp = c / std::sqrt(q);
    return {std::max(km, kp), std::min(km, kp)};
}

double spheroid_radius(double c, const Vec3& x) {
    return 1.0 / std::sqrt(x.x() * x.x() + x.y() * x.y() + x.z() * x.z() / (c * c));
}

template <class Exact>
double max_kappa_error(int n_theta, const std::function<double(const Vec3&)>& rho, Exact exact) {
    const SphericalGrid grid(n_theta, 2 * n_theta);
    const auto field = RadialField::sample(grid, rho);
    double err = 0.0;
    for (int node = 0; node < grid.node_count(); ++node) {
        const auto frame = point_frame(field, node);
        const auto k = exact(grid.theta(node));
        err = std::max({err, std::abs(frame.curvatures[0] - k[0]), std::abs(frame.curvatures[1] - k[1])});
    }
    return err;
}

double spacing(int n_theta) { return M_PI / (n_theta + 1); }

}  // namespace

TEST_CASE("grid layout") {
    const SphericalGrid grid(8, 16);
    CHECK(grid.node_count() == 8 * 16 + 2);
    CHECK(grid.dphi() == doctest::Approx(2 * M_PI / 16));
    CHECK(grid.dtheta() == doctest::Approx(M_PI / 9));
    CHECK(grid.theta(grid.ring_node(0, 0)) == doctest::Approx(M_PI / 9));
    CHECK(grid.theta(grid.north()) == 0.0);
    CHECK(grid.theta(grid.south()) == doctest::Approx(M_PI));
    CHECK(grid.is_pole(grid.north()));
    CHECK_FALSE(grid.is_pole(grid.ring_node(7, 15)));
    CHECK_THROWS(SphericalGrid(7, 16));
    CHECK_THROWS(SphericalGrid(8, 15));
    CHECK_THROWS(SphericalGrid(8, 14));
}

TEST_CASE("constant radius") {
    const SphericalGrid grid(8, 16);
    for (double r : {0.5, 1.0, 2.0}) {
        const auto field = RadialField::constant(grid, r);
        for (int node = 0; node < grid.node_count(); ++node) {
            const auto d = sphere_derivatives(field, node);
            CHECK(d.grad.norm() < 1e-13);
            CHECK(d.hess.norm() < 1e-11);
            const auto f = point_frame(field, node);
            CHECK((f.metric - r * r * Eigen::Matrix2d::Identity()).norm() < 1e-12);
            CHECK((f.second_form - r * Eigen::Matrix2d::Identity()).norm() < 1e-11);
            CHECK(f.curvatures[0] == doctest::Approx(1 / r).epsilon(1e-11));
            CHECK(f.curvatures[1] == doctest::Approx(1 / r).epsilon(1e-11));
            CHECK(f.support == doctest::Approx(r).epsilon(1e-13));
            CHECK((f.normal - f.direction).norm() < 1e-13);
        }
    }
}

TEST_CASE("curvature_field of spheres") {
    const SphericalGrid grid(8, 16);
    auto cf = curvature_field(RadialField::constant(grid, 1.0), 2);
    for (double v : cf.tilde_F) CHECK(v == doctest::Approx(2.0).epsilon(1e-11));
    CHECK(cf.sup_abs_kappa == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(cf.outside_cone.empty());

    cf = curvature_field(RadialField::constant(grid, 2.0), 1);
    for (double v : cf.tilde_F) CHECK(v * v == doctest::Approx(0.25).epsilon(1e-11));  // F = 1/4

    const SphericalGrid fine(64, 128);
    cf = curvature_field(RadialField::sample(fine, [](const Vec3& x) { return 1 + 0.05 * x.z(); }), 2);
    CHECK(cf.min_margin > 0.0);
}

TEST_CASE("gradient of 1 + 0.1 cos(theta) is second order") {
    double prev = 0.0;
    for (int n_theta : {16, 32, 64}) {
        const SphericalGrid grid(n_theta, 2 * n_theta);
        const auto field = RadialField::sample(grid, [](const Vec3& x) { return 1 + 0.1 * x.z(); });
        double err = 0.0;
        for (int node = 0; node < grid.node_count(); ++node) {
            if (grid.is_pole(node)) continue;
            const auto d = sphere_derivatives(field, node);
            err = std::max(err, (d.grad - Eigen::Vector2d(-0.1 * std::sin(grid.theta(node)), 0.0)).norm());
            CHECK(std::abs(d.hess(0, 1) - d.hess(1, 0)) < 1e-12);
        }
        if (prev > 0) CHECK(std::log(prev / err) / std::log(spacing(n_theta / 2) / spacing(n_theta)) >= 1.9);
        prev = err;
    }
}

TEST_CASE("discrete Hessian is symmetric for a non-axisymmetric field") {
    const SphericalGrid grid(12, 24);
    const auto field = RadialField::sample(grid, [](const Vec3& x) { return 1 + 0.1 * x.x() * x.y() + 0.05 * x.z(); });
    for (int node = 0; node < grid.node_count(); ++node) {
        const auto d = sphere_derivatives(field, node);
        CHECK(std::abs(d.hess(0, 1) - d.hess(1, 0)) < 1e-12);
    }
}

TEST_CASE("principal curvatures converge at second order") {
    SUBCASE("cosine perturbation") {
        std::vector<double> errs;
        for (int n_theta : {16, 32, 64})
            errs.push_back(max_kappa_error(
                n_theta, [](const Vec3& x) { return 1 + 0.1 * x.z(); },
                [](double th) { return cosine_curvatures(0.1, th); }));
        for (int i = 1; i < 3; ++i) {
            const double order = std::log(errs[i - 1] / errs[i]) / std::log(spacing(8 << i) / spacing(16 << i));
            CHECK(order >= 1.9);
        }
    }
    SUBCASE("spheroid with axes (1, 1, 1.2)") {
        std::vector<double> errs;
        // The first ring next to each pole is pre-asymptotic at n_theta = 16.
        for (int n_theta : {32, 64, 128})
            errs.push_back(max_kappa_error(
                n_theta, [](const Vec3& x) { return spheroid_radius(1.2, x); },
                [](double th) { return spheroid_curvatures(1.2, th); }));
        for (int i = 1; i < 3; ++i) {
            const double order = std::log(errs[i - 1] / errs[i]) / std::log(spacing(16 << i) / spacing(32 << i));
            CHECK(order >= 1.9);
        }
        // Pole value c / a^2.
        const SphericalGrid grid(64, 128);
        const auto f = point_frame(RadialField::sample(grid, [](const Vec3& x) { return spheroid_radius(1.2, x); }),
                                   grid.north());
        CHECK(f.curvatures[0] == doctest::Approx(1.2).epsilon(1e-3));
        CHECK(f.curvatures[1] == doctest::Approx(1.2).epsilon(1e-3));
    }
}

TEST_CASE("frame identities") {
    const SphericalGrid grid(16, 32);
    const auto field = RadialField::sample(grid, [](const Vec3& x) { return 1 + 0.2 * x.x() + 0.1 * x.y() * x.z(); });
    for (int node = 0; node < grid.node_count(); ++node) {
        const auto f = point_frame(field, node);
        CHECK(f.normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(f.normal.dot(f.direction) > 0.0);
        CHECK(std::abs(f.support - f.position.dot(f.normal)) <= 1e-12 * std::abs(f.support));
        CHECK(f.support > 0.0);
        for (int i = 0; i < 2; ++i) {
            const Eigen::Matrix2d M = f.second_form - f.curvatures[i] * f.metric;
            CHECK(std::abs(M.determinant()) < 1e-10 * (1 + f.second_form.squaredNorm()));
        }
        // Principal vectors are g-orthonormal.
        const Eigen::Matrix2d G = f.principal_vectors.transpose() * f.metric * f.principal_vectors;
        CHECK((G - Eigen::Matrix2d::Identity()).norm() < 1e-12);
    }
}

TEST_CASE("scaling law") {
    const SphericalGrid grid(16, 32);
    const auto rho = [](const Vec3& x) { return 1 + 0.2 * x.x() + 0.1 * x.y() * x.z(); };
    const auto a = RadialField::sample(grid, rho);
    for (double c : {0.5, 3.0}) {
        const auto b = RadialField::sample(grid, [&](const Vec3& x) { return c * rho(x); });
        for (int node = 0; node < grid.node_count(); ++node) {
            const auto fa = point_frame(a, node), fb = point_frame(b, node);
            for (int i = 0; i < 2; ++i)
                CHECK(std::abs(fb.curvatures[i] * c - fa.curvatures[i]) <= 1e-8 * std::abs(fa.curvatures[i]));
        }
    }
}

TEST_CASE("closed-form 2x2 eigenproblems") {
    Eigen::Matrix2d A;
    A << 2, 1, 1, 3;
    const auto e = sym2_eigen(A);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> ref(A);
    CHECK(e.values[0] == doctest::Approx(ref.eigenvalues()[1]).epsilon(1e-14));
    CHECK(e.values[1] == doctest::Approx(ref.eigenvalues()[0]).epsilon(1e-14));
    CHECK((A * e.vectors - e.vectors * e.values.asDiagonal()).norm() < 1e-13);
    CHECK((e.vectors.transpose() * e.vectors - Eigen::Matrix2d::Identity()).norm() < 1e-14);

    const auto iso = sym2_eigen(Eigen::Matrix2d::Identity() * 4.0);
    CHECK(iso.values[0] == 4.0);
    CHECK(iso.values[1] == 4.0);

    Eigen::Matrix2d g;
    g << 2, 0.5, 0.5, 1;
    const auto ge = generalized_eigen2(A, g);
    for (int i = 0; i < 2; ++i) CHECK(std::abs((A - ge.values[i] * g).determinant()) < 1e-12);
    CHECK((ge.vectors.transpose() * g * ge.vectors - Eigen::Matrix2d::Identity()).norm() < 1e-13);
}

TEST_CASE("CSV and OBJ export") {
    const SphericalGrid grid(8, 16);
    const auto field = RadialField::constant(grid, 1.5);
    std::ostringstream csv;
    write_curvature_csv(csv, field, curvature_field(field, 1));
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "theta,phi,rho,kappa1,kappa2,Ftilde,u,margin");
    int rows = 0;
    while (std::getline(lines, line)) ++rows;
    CHECK(rows == grid.node_count());

    std::ostringstream obj;
    write_obj(obj, field);
    int vertices = 0, faces = 0;
    std::istringstream o(obj.str());
    while (std::getline(o, line)) {
        if (line.rfind("v ", 0) == 0) ++vertices;
        if (line.rfind("f ", 0) == 0) ++faces;
    }
    CHECK(vertices == grid.node_count());
    CHECK(faces == 2 * (grid.n_theta() - 1) * grid.n_phi() + 2 * grid.n_phi());
}
