#pragma once

// Right-hand sides f(X, nu) for the prescribed curvature problem and the
// barrier / radial monotonicity predicates on them.

#include "hypersurface_geometry.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace pconvex::surface {

using geometry::Vec3;

enum class DataKind { RadialPower, PerturbedRadial, Manufactured, Homotopy };

std::string to_string(DataKind kind);
DataKind data_kind_from_string(const std::string& name);

struct DataSample {
    double f = 0.0;
    Vec3 d_position = Vec3::Zero();
    Vec3 d_normal = Vec3::Zero();
};

class RightHandSide {
public:
    virtual ~RightHandSide() = default;
    virtual DataSample evaluate(const Vec3& X, const Vec3& nu) const = 0;
};

/// f(X, nu) with annulus radii r1 < 1 < r2 and the parameters it was built
/// from.  `eps` is the sphere-gauge term: every family below contains
///     p^C [(1 + eps) |X|^-C - eps],   C = C(n, p),
/// (or its manufactured analogue) so that the radial family of spheres is
/// not a continuum of solutions.
struct PrescribedData {
    DataKind kind = DataKind::RadialPower;
    int n = 2;
    int p = 1;
    double r1 = 0.5;
    double r2 = 2.0;
    double eps = 0.0;
    double scale = 1.0;     // radial_power
    double exponent = 1.0;  // radial_power
    double amplitude = 0.0;
    Vec3 direction = Vec3(0.0, 0.0, 1.0);
    std::shared_ptr<const RightHandSide> rhs;

    int power() const;  // C(n, p)
    DataSample evaluate(const Vec3& X, const Vec3& nu) const { return rhs->evaluate(X, nu); }
    double value(const Vec3& X, const Vec3& nu) const { return rhs->evaluate(X, nu).f; }

    /// f = scale [(1 + eps) |X|^-exponent - eps]; scale defaults to p^C and
    /// exponent to C.
    static PrescribedData radial_power(int p, double r1, double r2, double eps);
    static PrescribedData radial_power(int p, double r1, double r2, double eps, double scale, double exponent);

    /// f = p^C [(1 + eps) |X|^-C - eps] (1 + amplitude <nu, direction>).
    static PrescribedData perturbed_radial(int p, double r1, double r2, double eps, double amplitude,
                                           const Vec3& direction);

    /// Target rho* = 1 + amplitude <x, direction>, extended along rays by
    /// f = F(kappa*(x)) [(1 + eps) (rho*(x) / |X|)^C - eps].
    static PrescribedData manufactured(int p, double r1, double r2, double eps, double amplitude,
                                       const Vec3& direction);
};

/// f^t = t f + (1 - t) p^C [(1 + eps) |X|^-C - eps].
PrescribedData homotopy_blend(const PrescribedData& target, double t, double eps);

/// Exact target of a manufactured data set.
double manufactured_radius(const PrescribedData& data, const Vec3& x);

/// Analytic rho*, gradient and Hessian in the given frame for the
/// manufactured target (the restriction of a linear function to S^2 has
/// covariant Hessian -<x, e> I).
geometry::LocalDerivatives manufactured_local(const PrescribedData& data, const Vec3& x,
                                              const std::array<Vec3, 2>& tangent);

struct ConditionReport {
    std::string name;
    bool passed = true;
    double worst = 0.0;   // most adverse sampled value
    std::string detail;   // names the violated inequality when failing
    Vec3 witness_position = Vec3::Zero();
    Vec3 witness_normal = Vec3::Zero();
};

/// f >= p^C / r1^C on |X| = r1 and f <= p^C / r2^C on |X| = r2 with nu = X/|X|.
/// Reports one entry per inequality; `worst` is the minimum relative slack.
std::vector<ConditionReport> check_barrier_conditions(const PrescribedData& data, int n_samples);

/// d/d rho (rho^C f(rho x, nu)) <= 1e-8 along sampled rays with fixed nu.
ConditionReport check_monotonicity_condition(const PrescribedData& data, int n_samples,
                                             std::uint64_t seed = 1);

/// Largest eps in {0.1, 0.05, 0.01} with (1 + eps) r2^-C - eps >= c0; throws
/// DomainError if none qualifies.
double default_homotopy_eps(int n, int p, double r2, double c0 = 1e-3);

/// Quasi-uniform points on S^2 (Fibonacci lattice).
std::vector<Vec3> sphere_points(int count);

}  // namespace pconvex::surface
