#include "errors.hpp"
#include "prescribed_data.hpp"

#include <doctest.h>

#include <cmath>

using namespace pconvex;
using namespace pconvex::surface;

namespace {

// Curvatures of rho = 1 + a cos(theta) (surface of revolution, outward normal).
std::array<double, 2> cosine_curvatures(double a, double theta) {
    const double s = std::sin(theta), c = std::cos(theta);
    const double rho = 1 + a * c, d1 = -a * s, d2 = -a * c;
    const double r = rho * s;
    const double r1 = d1 * s + rho * c, r2 = d2 * s + 2 * d1 * c - rho * s;
    const double z1 = d1 * c - rho * s, z2 = d2 * c - 2 * d1 * s - rho * c;
    const double speed2 = r1 * r1 + z1 * z1;
    return {(r2 * z1 - r1 * z2) / std::pow(speed2, 1.5), -z1 / (r * std::sqrt(speed2))};
}

int power(int p) { return p == 1 ? 2 : 1; }  // C(2, p)

const ConditionReport& named(const std::vector<ConditionReport>& v, const std::string& name) {
    for (const auto& r : v)
        if (r.name == name) return r;
    throw std::runtime_error("missing condition " + name);
}

}  // namespace

TEST_CASE("barrier examples") {
    for (int p : {1, 2}) {
        const double pc = std::pow(p, power(p));
        // Pure power: both inequalities hold with equality.
        auto rep = check_barrier_conditions(PrescribedData::radial_power(p, 0.5, 2.0, 0.0), 200);
        CHECK(named(rep, "barrier_inner").passed);
        CHECK(named(rep, "barrier_outer").passed);
        CHECK(std::abs(named(rep, "barrier_inner").worst) < 1e-12);
        CHECK(std::abs(named(rep, "barrier_outer").worst) < 1e-12);

        // No constant satisfies both: the inner bound p^C / r1^C exceeds the
        // outer bound p^C / r2^C.  f = p^C misses each by 1 - r^C.
        rep = check_barrier_conditions(PrescribedData::radial_power(p, 0.5, 2.0, 0.0, pc, 0.0), 200);
        CHECK_FALSE(named(rep, "barrier_inner").passed);
        CHECK_FALSE(named(rep, "barrier_outer").passed);
        CHECK(named(rep, "barrier_inner").worst == doctest::Approx(std::pow(0.5, power(p)) - 1.0));
        CHECK(named(rep, "barrier_outer").worst == doctest::Approx(1.0 - std::pow(2.0, power(p))));

        // 0.1 p^C / r1^C violates the inner inequality.
        const double low = 0.1 * pc / std::pow(0.5, power(p));
        rep = check_barrier_conditions(PrescribedData::radial_power(p, 0.5, 2.0, 0.0, low, 0.0), 200);
        CHECK_FALSE(named(rep, "barrier_inner").passed);
        CHECK(named(rep, "barrier_inner").worst == doctest::Approx(-0.9));
        CHECK(named(rep, "barrier_inner").detail.find("r1") != std::string::npos);
    }
}

TEST_CASE("monotonicity examples") {
    for (int p : {1, 2}) {
        const int C = power(p);
        const double pc = std::pow(p, C);
        auto rep = check_monotonicity_condition(PrescribedData::radial_power(p, 0.5, 2.0, 0.0), 50);
        CHECK(rep.passed);
        CHECK(std::abs(rep.worst) < 1e-6);

        rep = check_monotonicity_condition(PrescribedData::radial_power(p, 0.5, 2.0, 0.0, pc, C + 1.0), 50);
        CHECK(rep.passed);
        CHECK(rep.worst < 0.0);

        rep = check_monotonicity_condition(PrescribedData::radial_power(p, 0.5, 2.0, 0.0, pc, -1.0), 50);
        CHECK_FALSE(rep.passed);
        CHECK(rep.worst > 0.0);
        CHECK(rep.name == "radial_monotonicity");
    }
}

TEST_CASE("gauge term keeps every family strictly decreasing along rays") {
    for (int p : {1, 2}) {
        CHECK(check_monotonicity_condition(PrescribedData::radial_power(p, 0.5, 2.0, 0.1), 50).worst < 0);
        CHECK(check_monotonicity_condition(
                  PrescribedData::perturbed_radial(p, 0.5, 2.0, 0.1, 0.1, Vec3(0, 0, 1)), 50)
                  .passed);
        CHECK(check_monotonicity_condition(PrescribedData::manufactured(p, 0.2, 1.6, 0.5, 0.1, Vec3(0, 0, 1)), 50)
                  .worst < 0);
    }
}

TEST_CASE("manufactured data matches an independent curvature oracle") {
    const double eps = 0.5, a = 0.1;
    for (int p : {1, 2}) {
        const int C = power(p);
        const auto data = PrescribedData::manufactured(p, 0.2, 1.6, eps, a, Vec3(0, 0, 1));
        for (double theta : {0.3, 1.0, 1.7, 2.9}) {
            const Vec3 x(std::sin(theta) * std::cos(0.4), std::sin(theta) * std::sin(0.4), std::cos(theta));
            const auto k = cosine_curvatures(a, theta);
            const double F = p == 1 ? k[0] * k[1] : k[0] + k[1];
            const double rho = 1 + a * std::cos(theta);
            CHECK(manufactured_radius(data, x) == doctest::Approx(rho).epsilon(1e-14));
            for (double r : {0.5, rho, 1.3}) {
                const double expected = F * ((1 + eps) * std::pow(rho / r, C) - eps);
                CHECK(data.value(r * x, x) == doctest::Approx(expected).epsilon(1e-12));
            }
        }
        const auto barrier = check_barrier_conditions(data, 400);
        CHECK(named(barrier, "barrier_inner").passed);
        CHECK(named(barrier, "barrier_outer").passed);
    }
}

TEST_CASE("data derivatives agree with central differences") {
    const Vec3 dir = Vec3(1, 2, 2) / 3.0;
    for (int p : {1, 2}) {
        const std::vector<PrescribedData> sets = {
            PrescribedData::radial_power(p, 0.5, 2.0, 0.1),
            PrescribedData::perturbed_radial(p, 0.5, 2.0, 0.1, 0.2, dir),
            PrescribedData::manufactured(p, 0.2, 1.6, 0.5, 0.1, dir),
            homotopy_blend(PrescribedData::perturbed_radial(p, 0.5, 2.0, 0.1, 0.2, dir), 0.4, 0.05),
        };
        const Vec3 X(0.3, -0.5, 0.9);
        const Vec3 nu = Vec3(0.2, -0.4, 0.9).normalized();
        const double h = 1e-6;
        for (const auto& d : sets) {
            const auto s = d.evaluate(X, nu);
            for (int i = 0; i < 3; ++i) {
                Vec3 e = Vec3::Zero();
                e[i] = h;
                const double dx = (d.value(X + e, nu) - d.value(X - e, nu)) / (2 * h);
                const double dn = (d.value(X, nu + e) - d.value(X, nu - e)) / (2 * h);
                CHECK(s.d_position[i] == doctest::Approx(dx).epsilon(1e-6).scale(std::abs(s.f)));
                CHECK(s.d_normal[i] == doctest::Approx(dn).epsilon(1e-6).scale(std::abs(s.f)));
            }
        }
    }
}

TEST_CASE("homotopy blend endpoints") {
    const auto target = PrescribedData::perturbed_radial(2, 0.5, 2.0, 0.1, 0.2, Vec3(0, 0, 1));
    const Vec3 X(0.1, 0.2, 0.8), nu(0, 0.6, 0.8);
    CHECK(homotopy_blend(target, 1.0, 0.05).value(X, nu) == doctest::Approx(target.value(X, nu)));
    const double r = X.norm();
    CHECK(homotopy_blend(target, 0.0, 0.05).value(X, nu) == doctest::Approx(2.0 * (1.05 / r - 0.05)));
}

TEST_CASE("default homotopy eps and validation") {
    CHECK(default_homotopy_eps(2, 2, 2.0) == 0.1);   // 1.1/2 - 0.1 > 0
    CHECK(default_homotopy_eps(2, 1, 2.0) == 0.1);   // 1.1/4 - 0.1 > 0
    CHECK(default_homotopy_eps(2, 1, 4.0) == 0.05);  // 1.1/16 - 0.1 < 0
    CHECK_THROWS_AS(default_homotopy_eps(2, 1, 40.0), DomainError);
    CHECK_THROWS_AS(PrescribedData::radial_power(2, 1.2, 2.0, 0.1), DomainError);
    CHECK_THROWS_AS(PrescribedData::manufactured(2, 0.2, 1.6, 0.5, 0.6, Vec3(0, 0, 1)), DomainError);
    CHECK(data_kind_from_string("manufactured") == DataKind::Manufactured);
    CHECK_THROWS_AS(data_kind_from_string("bogus"), UsageError);
}
