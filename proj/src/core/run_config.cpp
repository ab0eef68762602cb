#include "run_config.hpp"

#include "errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

namespace pconvex::run {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw UsageError("config: '" + display() + "' must be an object");
    }

    template <class T>
    void read(const char* key, T& out) {
        known_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw UsageError("config: key '" + qualified(key) + "' has the wrong type");
        }
    }

    template <class T>
    void read(const char* key, std::optional<T>& out) {
        T value{};
        known_.insert(key);
        if (!j_.contains(key)) return;
        read(key, value);
        out = value;
    }

    bool has(const char* key) const { return j_.contains(key); }

    Section child(const char* key) {
        known_.insert(key);
        static const json empty = json::object();
        return Section(j_.contains(key) ? j_.at(key) : empty, qualified(key));
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!known_.count(item.key())) throw UsageError("config: unknown key '" + qualified(item.key()) + "'");
        }
    }

private:
    std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string display() const { return path_.empty() ? "<root>" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> known_;
};

void require(bool cond, const std::string& message) {
    if (!cond) throw UsageError("config: " + message);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

surface::Vec3 vec3(const std::array<double, 3>& a) { return {a[0], a[1], a[2]}; }

int power_of(int n, int p) { return static_cast<int>(spectral::binomial(n, p)); }

}  // namespace

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::Verify: return "verify";
        case Mode::SolveSurface: return "solve-surface";
        case Mode::SolveDirichlet: return "solve-dirichlet";
    }
    return "verify";
}

Mode mode_from_string(const std::string& name) {
    if (name == "verify") return Mode::Verify;
    if (name == "solve-surface") return Mode::SolveSurface;
    if (name == "solve-dirichlet") return Mode::SolveDirichlet;
    throw UsageError("config: unknown mode '" + name + "' (expected verify, solve-surface or solve-dirichlet)");
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    Section root(j, "");
    int schema = 0;
    require(root.has("schema"), "missing \"schema\": " + std::to_string(kSchemaVersion));
    root.read("schema", schema);
    require(schema == kSchemaVersion, "unsupported schema version " + std::to_string(schema));

    std::string mode = to_string(c.mode);
    root.read("mode", mode);
    c.mode = mode_from_string(mode);
    root.read("n", c.n);
    root.read("p", c.p);
    root.read("seed", c.seed);
    root.read("output_dir", c.output_dir);
    root.read("threads", c.threads);
    root.read("allow_p_range", c.allow_p_range);

    Section v = root.child("verify");
    v.read("samples", c.verify.samples);
    v.read("fd_samples", c.verify.fd_samples);
    v.read("concavity_samples", c.verify.concavity_samples);
    v.read("directions", c.verify.directions);
    v.read("margin_floor", c.verify.margin_floor);
    v.read("fd_margin_floor", c.verify.fd_margin_floor);
    v.read("cap", c.verify.cap);
    v.read("near_boundary", c.verify.near_boundary);
    v.finish();

    Section g = root.child("grid");
    g.read("n_theta", c.grid.n_theta);
    g.read("n_phi", c.grid.n_phi);
    g.read("domain", c.grid.domain);
    g.read("nodes", c.grid.nodes);
    g.finish();

    Section d = root.child("data");
    d.read("kind", c.data.kind);
    d.read("r1", c.data.r1);
    d.read("r2", c.data.r2);
    d.read("eps", c.data.eps);
    d.read("scale", c.data.scale);
    d.read("exponent", c.data.exponent);
    d.read("amplitude", c.data.amplitude);
    d.read("direction", c.data.direction);
    d.finish();

    Section h = root.child("homotopy");
    h.read("steps", c.homotopy.steps);
    h.read("eps", c.homotopy.eps);
    h.read("max_refinements", c.homotopy.max_refinements);
    h.finish();

    Section nw = root.child("newton");
    nw.read("tol", c.newton.tol);
    nw.read("max_iter", c.newton.max_iter);
    nw.read("damping_min", c.newton.damping_min);
    nw.read("fd_jacobian", c.newton.fd_jacobian);
    nw.read("fd_step", c.newton.fd_step);
    nw.finish();

    Section dd = root.child("dirichlet");
    Section bd = dd.child("boundary");
    bd.read("kind", c.dirichlet.boundary.kind);
    bd.read("A", c.dirichlet.boundary.A);
    bd.read("b", c.dirichlet.boundary.b);
    bd.read("c", c.dirichlet.boundary.c);
    bd.finish();
    Section rhs = dd.child("rhs");
    rhs.read("kind", c.dirichlet.rhs.kind);
    rhs.read("value", c.dirichlet.rhs.value);
    rhs.read("amplitude", c.dirichlet.rhs.amplitude);
    rhs.finish();
    dd.read("beta", c.dirichlet.beta);
    dd.read("beta_sweep", c.dirichlet.beta_sweep);
    dd.finish();
    root.finish();

    require(c.n >= 2 && c.n <= spectral::kMaxDimension, "n must lie in [2, 16]");
    require(c.p >= 1 && c.p <= c.n, "p must lie in [1, n]");
    require(c.threads >= 1, "threads must be >= 1");
    require(c.newton.tol > 0.0 && c.newton.max_iter >= 1 && c.newton.damping_min > 0.0 &&
                c.newton.damping_min <= 1.0 && c.newton.fd_step > 0.0,
            "newton parameters out of range");
    c.newton.threads = c.threads;
    if (c.mode == Mode::SolveSurface) {
        require(c.grid.n_theta >= 8 && c.grid.n_phi >= 16 && c.grid.n_phi % 2 == 0,
                "grid needs n_theta >= 8 and an even n_phi >= 16");
        require(c.homotopy.steps >= 1 && c.homotopy.max_refinements >= 0, "homotopy parameters out of range");
    }
    if (c.mode == Mode::SolveDirichlet) {
        require(c.grid.domain == "disk" || c.grid.domain == "square", "grid.domain must be disk or square");
        require(c.grid.nodes >= 5, "grid.nodes must be >= 5");
    }
    if (c.mode != Mode::Verify) {
        require(c.n == 2, "solver modes support n = 2 only");
        require(2 * c.p >= c.n || c.allow_p_range, "solver modes need p >= n/2 (set allow_p_range to override)");
    }
    return c;
}

json RunConfig::to_json() const {
    json j;
    j["schema"] = kSchemaVersion;
    j["mode"] = to_string(mode);
    j["n"] = n;
    j["p"] = p;
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["threads"] = threads;
    j["allow_p_range"] = allow_p_range;
    j["verify"] = {{"samples", verify.samples},
                   {"fd_samples", verify.fd_samples},
                   {"concavity_samples", verify.concavity_samples},
                   {"directions", verify.directions},
                   {"margin_floor", verify.margin_floor},
                   {"fd_margin_floor", verify.fd_margin_floor},
                   {"cap", verify.cap},
                   {"near_boundary", verify.near_boundary}};
    j["grid"] = {{"n_theta", grid.n_theta}, {"n_phi", grid.n_phi}, {"domain", grid.domain}, {"nodes", grid.nodes}};
    json data_j = {{"kind", data.kind}, {"amplitude", data.amplitude}, {"direction", data.direction}};
    if (data.r1) data_j["r1"] = *data.r1;
    if (data.r2) data_j["r2"] = *data.r2;
    if (data.eps) data_j["eps"] = *data.eps;
    if (data.scale) data_j["scale"] = *data.scale;
    if (data.exponent) data_j["exponent"] = *data.exponent;
    j["data"] = data_j;
    j["homotopy"] = {{"steps", homotopy.steps}, {"max_refinements", homotopy.max_refinements}};
    if (homotopy.eps) j["homotopy"]["eps"] = *homotopy.eps;
    j["newton"] = {{"tol", newton.tol},
                   {"max_iter", newton.max_iter},
                   {"damping_min", newton.damping_min},
                   {"fd_jacobian", newton.fd_jacobian},
                   {"fd_step", newton.fd_step}};
    json rhs_j = {{"kind", dirichlet.rhs.kind}, {"amplitude", dirichlet.rhs.amplitude}};
    if (dirichlet.rhs.value) rhs_j["value"] = *dirichlet.rhs.value;
    j["dirichlet"] = {{"boundary",
                       {{"kind", dirichlet.boundary.kind},
                        {"A", dirichlet.boundary.A},
                        {"b", dirichlet.boundary.b},
                        {"c", dirichlet.boundary.c}}},
                      {"rhs", rhs_j},
                      {"beta", dirichlet.beta},
                      {"beta_sweep", dirichlet.beta_sweep}};
    return j;
}

json to_json(const verification::PropertyReport& r) {
    return {{"name", r.name},
            {"kind", verification::to_string(r.kind)},
            {"n", r.n},
            {"p", r.p},
            {"samples", r.samples},
            {"worst", r.worst},
            {"tolerance", r.tolerance},
            {"passed", r.passed},
            {"witness", r.witness},
            {"seed", r.seed}};
}

json to_json(const surface::ConditionReport& r) {
    return {{"name", r.name},
            {"passed", r.passed},
            {"worst", r.worst},
            {"detail", r.detail},
            {"witness_position", {r.witness_position.x(), r.witness_position.y(), r.witness_position.z()}},
            {"witness_normal", {r.witness_normal.x(), r.witness_normal.y(), r.witness_normal.z()}}};
}

json to_json(const solver::ConvergenceRecord& r) {
    return {{"converged", r.converged},
            {"iterations", r.iterations},
            {"residual_history", r.residual_history},
            {"margin_history", r.margin_history},
            {"step_lengths", r.step_lengths},
            {"failure", r.failure}};
}

Run::Run(RunConfig config) : config_(std::move(config)) {}

void Run::execute() {
    report_ = json::object();
    report_["schema"] = kSchemaVersion;
    report_["mode"] = to_string(config_.mode);
    report_["timestamp"] = utc_timestamp();
    report_["config"] = config_.to_json();
    succeeded_ = false;
    warnings_.clear();
    if (config_.mode != Mode::Verify && 2 * config_.p < config_.n) {
        warnings_.push_back("p = " + std::to_string(config_.p) + " < n/2: outside the range covered by the "
                            "a priori estimates (allowed by allow_p_range)");
    }
    try {
        switch (config_.mode) {
            case Mode::Verify: run_verify(); break;
            case Mode::SolveSurface: run_surface(); break;
            case Mode::SolveDirichlet: run_dirichlet(); break;
        }
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        // Data or numerical failures are outcomes, not usage errors.
        report_["error"] = e.what();
        summary_ = std::string("run failed: ") + e.what();
        succeeded_ = false;
    }
    report_["warnings"] = warnings_;
    report_["succeeded"] = succeeded_;
    executed_ = true;
}

void Run::run_verify() {
    const auto& o = config_.verify;
    verification::SampleSpec spec;
    spec.n = config_.n;
    spec.p = config_.p;
    spec.seed = config_.seed;
    spec.cap = o.cap;
    spec.samples = o.samples;
    spec.margin_floor = o.margin_floor;
    spec.validate();

    std::vector<verification::PropertyReport> all = verification::run_lemma_suite(spec);
    auto append = [&](std::vector<verification::PropertyReport> more) {
        all.insert(all.end(), more.begin(), more.end());
    };
    if (o.near_boundary) append(verification::run_near_boundary_suite(spec));

    verification::SampleSpec concave = spec;
    concave.samples = o.concavity_samples;
    append(verification::run_concavity_suite(concave, o.directions));

    verification::SampleSpec fd = spec;
    fd.samples = o.fd_samples;
    fd.margin_floor = o.fd_margin_floor;
    if (fd.margin_floor < 0.1) throw UsageError("config: verify.fd_margin_floor must be >= 0.1");
    append(verification::run_fd_suite(fd));

    json props = json::array();
    bool all_pass = true;
    for (const auto& r : all) {
        props.push_back(to_json(r));
        all_pass = all_pass && r.passed;
    }
    report_["theta"] = spectral::theta_constant(config_.n, config_.p);
    report_["properties"] = props;
    succeeded_ = all_pass;

    std::ostringstream table;
    verification::print_table(table, all);
    summary_ = table.str() + (all_pass ? "all properties passed\n" : "some properties FAILED\n");
}

void Run::run_surface() {
    const int n = config_.n;
    const int p = config_.p;
    const int c = power_of(n, p);
    const auto& d = config_.data;
    const surface::DataKind kind = surface::data_kind_from_string(d.kind);
    const bool manufactured = kind == surface::DataKind::Manufactured;

    // The manufactured family needs a stronger gauge and a wider annulus for
    // its barrier inequalities to hold (see README).
    const double r1 = d.r1.value_or(manufactured ? 0.2 : 0.5);
    const double r2 = d.r2.value_or(manufactured ? 1.6 : 2.0);
    const double hom_eps = config_.homotopy.eps.value_or(surface::default_homotopy_eps(n, p, r2));

    surface::PrescribedData data;
    switch (kind) {
        case surface::DataKind::RadialPower:
            data = surface::PrescribedData::radial_power(p, r1, r2, d.eps.value_or(hom_eps),
                                                         d.scale.value_or(std::pow(double(p), c)),
                                                         d.exponent.value_or(c));
            break;
        case surface::DataKind::PerturbedRadial:
            data = surface::PrescribedData::perturbed_radial(p, r1, r2, d.eps.value_or(hom_eps), d.amplitude,
                                                             vec3(d.direction));
            break;
        case surface::DataKind::Manufactured:
            data = surface::PrescribedData::manufactured(p, r1, r2, d.eps.value_or(0.5), d.amplitude,
                                                         vec3(d.direction));
            break;
        case surface::DataKind::Homotopy:
            throw UsageError("config: data.kind 'homotopy' is internal");
    }

    const geometry::SphericalGrid grid(config_.grid.n_theta, config_.grid.n_phi);
    surface::HomotopySchedule schedule;
    schedule.steps = config_.homotopy.steps;
    schedule.eps = hom_eps;
    schedule.max_refinements = config_.homotopy.max_refinements;

    const surface::SurfaceSolution sol = surface::homotopy_solve(grid, data, p, schedule, config_.newton);
    const auto& r = sol.report;
    surface_field_ = sol.field;

    json conditions = json::array();
    bool hypotheses_ok = true;
    for (const auto& cr : r.conditions) {
        conditions.push_back(to_json(cr));
        hypotheses_ok = hypotheses_ok && cr.passed;
    }
    json homotopy = json::array();
    for (const auto& s : r.homotopy) {
        homotopy.push_back(
            {{"t", s.t}, {"converged", s.converged}, {"iterations", s.iterations}, {"final_residual", s.final_residual}});
    }
    const double delta = r.grid_spacing;
    const bool in_annulus = r.min_rho >= r.r1 - 2.0 * delta && r.max_rho <= r.r2 + 2.0 * delta;

    json rep = {{"converged", r.converged},
                {"failure", r.failure},
                {"conditions", conditions},
                {"hypotheses_passed", hypotheses_ok},
                {"newton", to_json(r.newton)},
                {"homotopy", homotopy},
                {"homotopy_eps", hom_eps},
                {"total_iterations", r.total_iterations},
                {"homotopy_steps", r.homotopy_steps},
                {"last_good_t", r.last_good_t},
                {"final_residual", r.final_residual},
                {"sup_abs_kappa", r.sup_abs_kappa},
                {"min_cone_margin", r.min_cone_margin},
                {"min_rho", r.min_rho},
                {"max_rho", r.max_rho},
                {"r1", r.r1},
                {"r2", r.r2},
                {"grid_spacing", delta},
                {"rho_within_annulus", in_annulus},
                {"min_support", r.min_support},
                {"max_support", r.max_support},
                {"max_abs_rho_minus_one", r.max_abs_rho_minus_one}};
    if (r.has_target) rep["max_error_vs_target"] = r.max_error_vs_target;
    report_["surface"] = rep;
    succeeded_ = r.converged && hypotheses_ok;

    std::ostringstream s;
    if (!hypotheses_ok) {
        s << "hypothesis check failed:";
        for (const auto& cr : r.conditions) {
            if (!cr.passed) s << " " << cr.name << " [" << cr.detail << "]";
        }
        s << "\n";
    } else if (r.converged) {
        s << "converged in " << r.total_iterations << " Newton iterations over " << r.homotopy_steps
          << " homotopy steps; residual " << r.final_residual << ", rho in [" << r.min_rho << ", " << r.max_rho
          << "], max|rho-1| " << r.max_abs_rho_minus_one << ", sup|kappa| " << r.sup_abs_kappa << "\n";
    } else {
        s << "not converged: " << r.failure << "\n";
    }
    summary_ = s.str();
}

void Run::run_dirichlet() {
    const int n = config_.n;
    const int p = config_.p;
    const int c = power_of(n, p);
    const auto& o = config_.dirichlet;
    const dirichlet::DomainShape shape = dirichlet::domain_shape_from_string(config_.grid.domain);
    dirichlet_grid_.emplace(shape, config_.grid.nodes);
    const dirichlet::DomainGrid& grid = *dirichlet_grid_;

    dirichlet::BoundaryData v;
    if (o.boundary.kind == "zero") {
        v = dirichlet::BoundaryData::zero();
    } else if (o.boundary.kind == "quadratic") {
        Eigen::Matrix2d A;
        A << o.boundary.A[0], o.boundary.A[1], o.boundary.A[2], o.boundary.A[3];
        v = dirichlet::BoundaryData::quadratic(A, {o.boundary.b[0], o.boundary.b[1]}, o.boundary.c);
    } else if (o.boundary.kind == "exp_radial") {
        v = dirichlet::BoundaryData::exp_radial();
    } else {
        throw UsageError("config: unknown dirichlet.boundary.kind '" + o.boundary.kind + "'");
    }

    const double pc = std::pow(double(p), c);
    dirichlet::RhsData f;
    std::function<double(const dirichlet::Point&)> exact;
    if (o.rhs.kind == "constant") {
        const double value = o.rhs.value.value_or(pc);
        f = dirichlet::RhsData::constant(p, value);
        if (o.boundary.kind == "zero" && shape == dirichlet::DomainShape::Disk) {
            // u = a (|x|^2 - 1) / 2 has Hessian a I and F(a I) = (p a)^C.
            const double a = std::pow(value, 1.0 / c) / p;
            exact = [a](const dirichlet::Point& x) { return 0.5 * a * (x.squaredNorm() - 1.0); };
        }
    } else if (o.rhs.kind == "radial_bump") {
        f = dirichlet::RhsData::radial_bump(p, o.rhs.value.value_or(pc), o.rhs.amplitude);
    } else if (o.rhs.kind == "manufactured_exp") {
        f = dirichlet::RhsData::manufactured_exp(p);
        if (o.boundary.kind == "exp_radial") exact = [](const dirichlet::Point& x) { return std::exp(0.5 * x.squaredNorm()); };
    } else {
        throw UsageError("config: unknown dirichlet.rhs.kind '" + o.rhs.kind + "'");
    }

    std::vector<double> betas = o.beta_sweep;
    if (std::find(betas.begin(), betas.end(), o.beta) == betas.end()) betas.insert(betas.begin(), o.beta);

    dirichlet::DirichletSolution sol = dirichlet::solve_dirichlet(grid, v, f, p, config_.newton, betas);
    if (exact) {
        double err = 0.0;
        for (int k = 0; k < grid.unknown_count(); ++k) {
            err = std::max(err, std::abs(sol.u.interior[k] - exact(grid.position(k))));
        }
        sol.report.max_error_vs_exact = err;
    }
    dirichlet_field_ = sol.u;
    const auto& r = sol.report;

    json monitor = json::array();
    for (const auto& [beta, value] : r.monitor) monitor.push_back({{"beta", beta}, {"value", value}});
    json rep = {{"converged", r.converged},
                {"failure", r.failure},
                {"newton", to_json(r.newton)},
                {"initial_shift", r.initial_shift},
                {"min_cone_margin", r.min_cone_margin},
                {"final_residual", r.final_residual},
                {"grid_spacing", grid.spacing()},
                {"unknowns", grid.unknown_count()},
                {"monitor", monitor},
                {"monitor_note", r.monitor_note},
                {"c2", {{"interior_sup", r.c2.interior_sup},
                        {"boundary_sup", r.c2.boundary_sup},
                        {"ratio", r.c2.ratio}}}};
    if (r.max_error_vs_exact) rep["max_error_vs_exact"] = *r.max_error_vs_exact;
    report_["dirichlet"] = rep;
    succeeded_ = r.converged;

    std::ostringstream s;
    if (r.converged) {
        s << "converged in " << r.newton.iterations << " Newton iterations; residual " << r.final_residual
          << ", min cone margin " << r.min_cone_margin;
        if (r.max_error_vs_exact) s << ", max error vs exact " << *r.max_error_vs_exact;
        s << "\n";
        for (const auto& [beta, value] : r.monitor) s << "  sup (v-u)^" << beta << " Lap u = " << value << "\n";
        if (!r.monitor_note.empty()) s << "  monitor: " << r.monitor_note << "\n";
    } else {
        s << "not converged: " << r.failure << "\n";
    }
    summary_ = s.str();
}

void Run::write_artifacts(const std::filesystem::path& dir) const {
    if (!executed_) throw UsageError("write_artifacts called before execute");
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name);
        if (!out) throw std::runtime_error("cannot open " + (dir / name).string() + " for writing");
        return out;
    };
    {
        auto out = open("report.json");
        out << report_.dump(2) << "\n";
    }
    if (surface_field_) {
        const auto curv = geometry::curvature_field(*surface_field_, config_.p);
        {
            auto out = open("fields.csv");
            geometry::write_curvature_csv(out, *surface_field_, curv);
        }
        auto out = open("surface.obj");
        geometry::write_obj(out, *surface_field_);
    }
    if (dirichlet_field_ && dirichlet_grid_) {
        auto out = open("fields.csv");
        dirichlet::write_field_csv(out, *dirichlet_grid_, *dirichlet_field_, config_.p, config_.dirichlet.beta);
    }
}

}  // namespace pconvex::run
