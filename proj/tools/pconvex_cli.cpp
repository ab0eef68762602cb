// Command-line front end: builds a run config from a JSON file plus flag
// overrides and drives it through the C API.
//
// Exit codes: 0 success, 2 property failure / non-convergence / failed data
// hypotheses, 1 usage error.

#include "pconvex/pconvex.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFailure = 2;

struct Options {
    std::string config_path;
    std::optional<int> n;
    std::optional<int> p;
    std::optional<unsigned long long> seed;
    std::optional<int> samples;
    std::optional<int> threads;
    std::optional<std::string> out;
    std::optional<int> n_theta;
    std::optional<int> n_phi;
    std::optional<int> nodes;
    std::optional<std::string> domain;
    bool allow_p_range = false;
    bool quiet = false;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("-c,--config", o.config_path, "JSON config file (schema 1)");
    cmd->add_option("--n", o.n, "dimension n");
    cmd->add_option("--p", o.p, "subset size p");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--threads", o.threads, "cap on parallel workers")->check(CLI::PositiveNumber);
    cmd->add_option("-o,--out", o.out, "output directory");
    cmd->add_option("--set", o.overrides, "override a config key, e.g. newton.tol=1e-12")->allow_extra_args(false);
    cmd->add_flag("--allow-p-range", o.allow_p_range, "permit p < n/2 in solver modes");
    cmd->add_flag("-q,--quiet", o.quiet, "print only the final status line");
}

nlohmann::json load_config(const std::string& path) {
    if (path.empty()) return nlohmann::json{{"schema", 1}};
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    auto j = nlohmann::json::parse(buf.str(), nullptr, false);
    if (j.is_discarded()) throw std::invalid_argument("config file '" + path + "' is not valid JSON");
    return j;
}

// Sets a dotted path, creating intermediate objects.
void set_path(nlohmann::json& j, const std::string& path, nlohmann::json value) {
    nlohmann::json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty() || !node->is_object()) throw std::invalid_argument("bad override path '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = std::move(value);
            return;
        }
        node = &(*node)[key];
        if (node->is_null()) *node = nlohmann::json::object();
        start = dot + 1;
    }
}

void apply_flags(nlohmann::json& j, const std::string& mode, const Options& o) {
    j["mode"] = mode;
    if (o.n) j["n"] = *o.n;
    if (o.p) j["p"] = *o.p;
    if (o.seed) j["seed"] = *o.seed;
    if (o.threads) j["threads"] = *o.threads;
    if (o.out) j["output_dir"] = *o.out;
    if (o.allow_p_range) j["allow_p_range"] = true;
    if (o.samples) set_path(j, "verify.samples", *o.samples);
    if (o.n_theta) set_path(j, "grid.n_theta", *o.n_theta);
    if (o.n_phi) set_path(j, "grid.n_phi", *o.n_phi);
    if (o.nodes) set_path(j, "grid.nodes", *o.nodes);
    if (o.domain) set_path(j, "grid.domain", *o.domain);
    for (const auto& a : o.overrides) {
        const auto eq = a.find('=');
        if (eq == std::string::npos || eq == 0) throw std::invalid_argument("override '" + a + "' must be key=value");
        auto value = nlohmann::json::parse(a.substr(eq + 1), nullptr, false);
        if (value.is_discarded()) value = a.substr(eq + 1);
        set_path(j, a.substr(0, eq), std::move(value));
    }
}

int usage_error(const std::string& message) {
    std::fprintf(stderr, "pconvex: %s\n", message.c_str());
    return kExitUsage;
}

int run(const std::string& mode, const Options& o) {
    nlohmann::json config;
    try {
        config = load_config(o.config_path);
        if (!config.is_object()) return usage_error("config must be a JSON object");
        apply_flags(config, mode, o);
    } catch (const std::exception& e) {
        return usage_error(e.what());
    }

    pcv_run* handle = nullptr;
    pcv_status st = pcv_run_create(config.dump().c_str(), &handle);
    if (st == PCV_ERR_CONFIG || st == PCV_ERR_INVALID_ARGUMENT) return usage_error(pcv_last_error());
    if (st != PCV_OK) {
        std::fprintf(stderr, "pconvex: %s: %s\n", pcv_status_name(st), pcv_last_error());
        return kExitFailure;
    }

    int exit_code = kExitFailure;
    int succeeded = 0;
    st = pcv_run_execute(handle, &succeeded);
    if (st == PCV_ERR_CONFIG) {
        exit_code = usage_error(pcv_last_error());
    } else if (st != PCV_OK) {
        std::fprintf(stderr, "pconvex: %s: %s\n", pcv_status_name(st), pcv_last_error());
    } else {
        const char* summary = nullptr;
        if (!o.quiet && pcv_run_summary(handle, &summary) == PCV_OK) std::fputs(summary, stdout);
        const char* dir = nullptr;
        pcv_run_output_dir(handle, &dir);
        st = pcv_run_write_artifacts(handle, nullptr);
        if (st != PCV_OK) {
            std::fprintf(stderr, "pconvex: %s: %s\n", pcv_status_name(st), pcv_last_error());
        } else {
            std::printf("%s: %s (artifacts in %s)\n", mode.c_str(), succeeded ? "ok" : "FAILED", dir);
            exit_code = succeeded ? kExitSuccess : kExitFailure;
        }
    }
    pcv_run_destroy(handle);
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for the p-convex curvature operator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pcv_version());

    Options verify_opts, surface_opts, dirichlet_opts;
    auto* verify = app.add_subcommand("verify", "run the randomized property suites");
    add_common(verify, verify_opts);
    verify->add_option("--samples", verify_opts.samples, "cone samples for the lemma suite")
        ->check(CLI::PositiveNumber);

    auto* surface = app.add_subcommand("solve-surface", "solve the prescribed curvature problem on S^2");
    add_common(surface, surface_opts);
    surface->add_option("--n-theta", surface_opts.n_theta, "interior colatitude rings");
    surface->add_option("--n-phi", surface_opts.n_phi, "longitudes (even)");

    auto* dirichlet = app.add_subcommand("solve-dirichlet", "solve the Dirichlet problem in the plane");
    add_common(dirichlet, dirichlet_opts);
    dirichlet->add_option("--nodes", dirichlet_opts.nodes, "grid nodes per side");
    dirichlet->add_option("--domain", dirichlet_opts.domain, "square or disk");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitSuccess : kExitUsage;
    }

    if (verify->parsed()) return run("verify", verify_opts);
    if (surface->parsed()) return run("solve-surface", surface_opts);
    return run("solve-dirichlet", dirichlet_opts);
}
