#include "prescribed_data.hpp"

#include "errors.hpp"
#include "spectral_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace pconvex::surface {

namespace {

double sphere_gauge(double pc, double eps, double r, int power) {
    return pc * ((1.0 + eps) * std::pow(r, -power) - eps);
}

class RadialPowerRhs final : public RightHandSide {
public:
    RadialPowerRhs(double scale, double exponent, double eps) : scale_(scale), exponent_(exponent), eps_(eps) {}

    DataSample evaluate(const Vec3& X, const Vec3&) const override {
        const double r = X.norm();
        const double rm = std::pow(r, -exponent_);
        DataSample s;
        s.f = scale_ * ((1.0 + eps_) * rm - eps_);
        s.d_position = scale_ * (1.0 + eps_) * (-exponent_) * rm / r * (X / r);
        return s;
    }

private:
    double scale_;
    double exponent_;
    double eps_;
};

class PerturbedRadialRhs final : public RightHandSide {
public:
    PerturbedRadialRhs(double pc, int power, double eps, double amplitude, Vec3 dir)
        : pc_(pc), power_(power), eps_(eps), amplitude_(amplitude), dir_(std::move(dir)) {}

    DataSample evaluate(const Vec3& X, const Vec3& nu) const override {
        const double r = X.norm();
        const double base = sphere_gauge(pc_, eps_, r, power_);
        const double mod = 1.0 + amplitude_ * nu.dot(dir_);
        const double dbase_dr = pc_ * (1.0 + eps_) * (-power_) * std::pow(r, -power_ - 1);
        DataSample s;
        s.f = base * mod;
        s.d_position = dbase_dr * mod * (X / r);
        s.d_normal = base * amplitude_ * dir_;
        return s;
    }

private:
    double pc_;
    int power_;
    double eps_;
    double amplitude_;
    Vec3 dir_;
};

// Forward-mode dual number for the t-derivative of the manufactured
// curvature profile.
struct Dual {
    double v;
    double d;
};
Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
Dual operator*(double c, Dual a) { return {c * a.v, c * a.d}; }
Dual operator/(Dual a, Dual b) { return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)}; }
Dual sqrt(Dual a) {
    const double s = std::sqrt(a.v);
    return {s, a.d / (2.0 * s)};
}

// Target rho* = 1 + delta t with t = <x, e>.  In the frame aligned with the
// tangential gradient: rho_1^2 = delta^2 (1 - t^2), rho_2 = 0, Hessian
// -delta t I, so g and h are diagonal and the curvatures are quotients.
std::array<Dual, 2> manufactured_curvatures(double delta, double t) {
    const Dual tt{t, 1.0};
    const Dual rho = Dual{1.0, 0.0} + delta * tt;
    const Dual q = (delta * delta) * (Dual{1.0, 0.0} + (-1.0) * (tt * tt));
    const Dual rho2 = rho * rho;
    const Dual w = sqrt(rho2 + q);
    const Dual hess_term = delta * (rho * tt);  // -rho rho_ii = rho delta t
    const Dual ka = (rho2 + 2.0 * q + hess_term) / (w * (rho2 + q));
    const Dual kb = (rho2 + hess_term) / (w * rho2);
    return {ka, kb};
}

class ManufacturedRhs final : public RightHandSide {
public:
    ManufacturedRhs(int p, int power, double eps, double amplitude, Vec3 dir)
        : p_(p), power_(power), eps_(eps), amplitude_(amplitude), dir_(std::move(dir)) {}

    DataSample evaluate(const Vec3& X, const Vec3&) const override {
        const double r = X.norm();
        const Vec3 x = X / r;
        const double t = std::clamp(x.dot(dir_), -1.0, 1.0);

        const auto k = manufactured_curvatures(amplitude_, t);
        const spectral::EigenSpectrum spec({k[0].v, k[1].v});
        const spectral::OperatorJet jet = spectral::eigen_jet(spec, p_);
        const double F = jet.value_F.value();
        const double dF_dt = F * (jet.log_grad[0] * k[0].d + jet.log_grad[1] * k[1].d);

        const double rho = 1.0 + amplitude_ * t;
        const double ratio = std::pow(rho / r, power_);
        const double bracket = (1.0 + eps_) * ratio - eps_;

        const double df_dt = dF_dt * bracket + F * (1.0 + eps_) * power_ * ratio / rho * amplitude_;
        const double df_dr = -F * (1.0 + eps_) * power_ * ratio / r;

        DataSample s;
        s.f = F * bracket;
        s.d_position = df_dt * (dir_ - t * x) / r + df_dr * x;
        return s;
    }

private:
    int p_;
    int power_;
    double eps_;
    double amplitude_;
    Vec3 dir_;
};

class HomotopyRhs final : public RightHandSide {
public:
    HomotopyRhs(std::shared_ptr<const RightHandSide> target, double t, double pc, int power, double eps)
        : target_(std::move(target)), t_(t), pc_(pc), power_(power), eps_(eps) {}

    DataSample evaluate(const Vec3& X, const Vec3& nu) const override {
        DataSample s = target_->evaluate(X, nu);
        const double r = X.norm();
        const double base = sphere_gauge(pc_, eps_, r, power_);
        const double dbase_dr = pc_ * (1.0 + eps_) * (-power_) * std::pow(r, -power_ - 1);
        s.f = t_ * s.f + (1.0 - t_) * base;
        s.d_position = t_ * s.d_position + (1.0 - t_) * dbase_dr * (X / r);
        s.d_normal = t_ * s.d_normal;
        return s;
    }

private:
    std::shared_ptr<const RightHandSide> target_;
    double t_;
    double pc_;
    int power_;
    double eps_;
};

void validate(int n, int p, double r1, double r2) {
    if (n != 2) throw DomainError("prescribed curvature data is implemented for surfaces in R^3 (n = 2)");
    if (p < 1 || p > n) throw DomainError("p must lie in [1, n]");
    if (!(r1 > 0.0 && r1 < 1.0 && r2 > 1.0)) throw DomainError("annulus radii must satisfy 0 < r1 < 1 < r2");
}

Vec3 unit(const Vec3& v) {
    const double len = v.norm();
    if (!(len > 0.0)) throw DomainError("direction vector must be nonzero");
    return v / len;
}

}  // namespace

std::string to_string(DataKind kind) {
    switch (kind) {
        case DataKind::RadialPower: return "radial_power";
        case DataKind::PerturbedRadial: return "perturbed_radial";
        case DataKind::Manufactured: return "manufactured";
        case DataKind::Homotopy: return "homotopy";
    }
    return "unknown";
}

DataKind data_kind_from_string(const std::string& name) {
    if (name == "radial_power") return DataKind::RadialPower;
    if (name == "perturbed_radial") return DataKind::PerturbedRadial;
    if (name == "manufactured") return DataKind::Manufactured;
    throw UsageError("unknown data kind '" + name + "'");
}

int PrescribedData::power() const { return static_cast<int>(spectral::binomial(n, p)); }

PrescribedData PrescribedData::radial_power(int p, double r1, double r2, double eps) {
    const int c = static_cast<int>(spectral::binomial(2, p));
    return radial_power(p, r1, r2, eps, std::pow(static_cast<double>(p), c), c);
}

PrescribedData PrescribedData::radial_power(int p, double r1, double r2, double eps, double scale,
                                            double exponent) {
    validate(2, p, r1, r2);
    PrescribedData d;
    d.kind = DataKind::RadialPower;
    d.p = p;
    d.r1 = r1;
    d.r2 = r2;
    d.eps = eps;
    d.scale = scale;
    d.exponent = exponent;
    d.rhs = std::make_shared<RadialPowerRhs>(scale, exponent, eps);
    return d;
}

PrescribedData PrescribedData::perturbed_radial(int p, double r1, double r2, double eps, double amplitude,
                                                const Vec3& direction) {
    validate(2, p, r1, r2);
    PrescribedData d;
    d.kind = DataKind::PerturbedRadial;
    d.p = p;
    d.r1 = r1;
    d.r2 = r2;
    d.eps = eps;
    d.amplitude = amplitude;
    d.direction = unit(direction);
    const int c = d.power();
    d.scale = std::pow(static_cast<double>(p), c);
    d.exponent = c;
    d.rhs = std::make_shared<PerturbedRadialRhs>(d.scale, c, eps, amplitude, d.direction);
    return d;
}

PrescribedData PrescribedData::manufactured(int p, double r1, double r2, double eps, double amplitude,
                                            const Vec3& direction) {
    validate(2, p, r1, r2);
    if (!(std::abs(amplitude) < 0.5)) throw DomainError("manufactured amplitude must satisfy |amplitude| < 0.5");
    PrescribedData d;
    d.kind = DataKind::Manufactured;
    d.p = p;
    d.r1 = r1;
    d.r2 = r2;
    d.eps = eps;
    d.amplitude = amplitude;
    d.direction = unit(direction);
    d.exponent = d.power();
    d.rhs = std::make_shared<ManufacturedRhs>(p, d.power(), eps, amplitude, d.direction);
    return d;
}

PrescribedData homotopy_blend(const PrescribedData& target, double t, double eps) {
    PrescribedData d = target;
    d.kind = DataKind::Homotopy;
    const int c = target.power();
    d.rhs = std::make_shared<HomotopyRhs>(target.rhs, t, std::pow(static_cast<double>(target.p), c), c, eps);
    return d;
}

double manufactured_radius(const PrescribedData& data, const Vec3& x) {
    if (data.kind != DataKind::Manufactured) throw DomainError("data set has no manufactured target");
    return 1.0 + data.amplitude * x.dot(data.direction);
}

geometry::LocalDerivatives manufactured_local(const PrescribedData& data, const Vec3& x,
                                              const std::array<Vec3, 2>& tangent) {
    if (data.kind != DataKind::Manufactured) throw DomainError("data set has no manufactured target");
    const double t = x.dot(data.direction);
    geometry::LocalDerivatives d;
    d.rho = 1.0 + data.amplitude * t;
    d.grad << data.amplitude * data.direction.dot(tangent[0]), data.amplitude * data.direction.dot(tangent[1]);
    d.hess = -data.amplitude * t * Eigen::Matrix2d::Identity();
    return d;
}

std::vector<Vec3> sphere_points(int count) {
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(count));
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double a = golden * i;
        pts.emplace_back(r * std::cos(a), r * std::sin(a), z);
    }
    return pts;
}

std::vector<ConditionReport> check_barrier_conditions(const PrescribedData& data, int n_samples) {
    if (!(data.r1 < 1.0 && 1.0 < data.r2)) throw DomainError("barrier check needs r1 < 1 < r2");
    const int c = data.power();
    const double pc = std::pow(static_cast<double>(data.p), c);
    const double inner_bound = pc / std::pow(data.r1, c);
    const double outer_bound = pc / std::pow(data.r2, c);

    ConditionReport inner{"barrier_inner", true, std::numeric_limits<double>::infinity(), {}, {}, {}};
    ConditionReport outer{"barrier_outer", true, std::numeric_limits<double>::infinity(), {}, {}, {}};
    for (const Vec3& x : sphere_points(n_samples)) {
        const double fi = data.value(data.r1 * x, x);
        const double si = (fi - inner_bound) / inner_bound;
        if (si < inner.worst) {
            inner.worst = si;
            inner.witness_position = data.r1 * x;
            inner.witness_normal = x;
        }
        const double fo = data.value(data.r2 * x, x);
        const double so = (outer_bound - fo) / outer_bound;
        if (so < outer.worst) {
            outer.worst = so;
            outer.witness_position = data.r2 * x;
            outer.witness_normal = x;
        }
    }
    constexpr double kSlack = 1e-12;
    inner.passed = inner.worst >= -kSlack;
    outer.passed = outer.worst >= -kSlack;
    if (!inner.passed) inner.detail = "violated: f(X, X/|X|) >= p^C / r1^C on |X| = r1";
    if (!outer.passed) outer.detail = "violated: f(X, X/|X|) <= p^C / r2^C on |X| = r2";
    return {inner, outer};
}

ConditionReport check_monotonicity_condition(const PrescribedData& data, int n_samples, std::uint64_t seed) {
    const int c = data.power();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto random_unit = [&] {
        Vec3 v(normal(rng), normal(rng), normal(rng));
        return Vec3(v / v.norm());
    };
    constexpr int kRadii = 9;
    ConditionReport rep{"radial_monotonicity", true, -std::numeric_limits<double>::infinity(), {}, {}, {}};
    for (int s = 0; s < n_samples; ++s) {
        const Vec3 x = random_unit();
        const Vec3 nu = random_unit();
        for (int k = 0; k < kRadii; ++k) {
            const double rho = data.r1 + (data.r2 - data.r1) * k / (kRadii - 1);
            const double h = 1e-6 * rho;
            auto g = [&](double r) { return std::pow(r, c) * data.value(r * x, nu); };
            const double deriv = (g(rho + h) - g(rho - h)) / (2.0 * h);
            if (deriv > rep.worst) {
                rep.worst = deriv;
                rep.witness_position = rho * x;
                rep.witness_normal = nu;
            }
        }
    }
    rep.passed = rep.worst <= 1e-8;
    if (!rep.passed) rep.detail = "violated: d/drho (rho^C f(X, nu)) <= 0";
    return rep;
}

double default_homotopy_eps(int n, int p, double r2, double c0) {
    const int c = static_cast<int>(spectral::binomial(n, p));
    for (double eps : {0.1, 0.05, 0.01}) {
        if ((1.0 + eps) * std::pow(r2, -c) - eps >= c0) return eps;
    }
    throw DomainError("no homotopy eps in {0.1, 0.05, 0.01} keeps the base family positive on [r1, r2]");
}

}  // namespace pconvex::surface
