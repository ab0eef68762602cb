#pragma once

// Declarative run configuration (JSON, "schema": 1), orchestration of the
// three run modes, and the report / artifact writers.

#include "dirichlet_solver.hpp"
#include "surface_solver.hpp"
#include "verification.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pconvex::run {

inline constexpr int kSchemaVersion = 1;

enum class Mode { Verify, SolveSurface, SolveDirichlet };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& name);

struct VerifyOptions {
    int samples = 10000;
    int fd_samples = 100;
    int concavity_samples = 1000;
    int directions = 8;
    double margin_floor = 1e-3;
    double fd_margin_floor = 0.1;
    double cap = 10.0;
    bool near_boundary = true;
};

struct GridOptions {
    int n_theta = 32;
    int n_phi = 64;
    std::string domain = "disk";
    int nodes = 33;
};

struct DataOptions {
    std::string kind = "radial_power";
    std::optional<double> r1;
    std::optional<double> r2;
    std::optional<double> eps;
    std::optional<double> scale;
    std::optional<double> exponent;
    double amplitude = 0.1;
    std::array<double, 3> direction{0.0, 0.0, 1.0};
};

struct HomotopyOptions {
    int steps = 10;
    std::optional<double> eps;
    int max_refinements = 10;
};

struct BoundaryOptions {
    std::string kind = "zero";
    std::array<double, 4> A{1.0, 0.0, 0.0, 1.0};  // row-major 2x2
    std::array<double, 2> b{0.0, 0.0};
    double c = 0.0;
};

struct RhsOptions {
    std::string kind = "constant";
    std::optional<double> value;  // defaults to p^C
    double amplitude = 0.5;
};

struct DirichletOptions {
    BoundaryOptions boundary;
    RhsOptions rhs;
    double beta = 2.0;
    std::vector<double> beta_sweep;
};

struct RunConfig {
    Mode mode = Mode::Verify;
    int n = 2;
    int p = 1;
    std::uint64_t seed = 7;
    std::string output_dir = "pconvex-out";
    int threads = 1;
    bool allow_p_range = false;
    VerifyOptions verify;
    GridOptions grid;
    DataOptions data;
    HomotopyOptions homotopy;
    solver::NewtonConfig newton;
    DirichletOptions dirichlet;

    /// Throws UsageError on unknown keys, wrong types, a missing or wrong
    /// schema version, or out-of-range values.
    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// One configured run.  `execute` never throws for solver or data failures:
/// those are recorded in the report and make `succeeded()` false.
/// UsageError escapes for invalid configurations.
class Run {
public:
    explicit Run(RunConfig config);

    const RunConfig& config() const { return config_; }
    void execute();
    bool executed() const { return executed_; }
    bool succeeded() const { return succeeded_; }
    const nlohmann::json& report() const { return report_; }
    /// Short human-readable summary of the outcome.
    const std::string& summary() const { return summary_; }
    /// Writes report.json plus fields.csv / surface.obj where applicable.
    void write_artifacts(const std::filesystem::path& dir) const;

private:
    void run_verify();
    void run_surface();
    void run_dirichlet();

    RunConfig config_;
    bool executed_ = false;
    bool succeeded_ = false;
    nlohmann::json report_;
    std::string summary_;
    std::vector<std::string> warnings_;
    std::optional<geometry::RadialField> surface_field_;
    std::optional<dirichlet::DomainGrid> dirichlet_grid_;
    std::optional<dirichlet::ScalarField> dirichlet_field_;
};

nlohmann::json to_json(const verification::PropertyReport& r);
nlohmann::json to_json(const surface::ConditionReport& r);
nlohmann::json to_json(const solver::ConvergenceRecord& r);

}  // namespace pconvex::run
