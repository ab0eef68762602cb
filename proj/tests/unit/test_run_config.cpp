#include "errors.hpp"
#include "run_config.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pconvex;
using namespace pconvex::run;
using nlohmann::json;

namespace {

std::string error_of(const json& j) {
    try {
        RunConfig::from_json(j);
    } catch (const UsageError& e) {
        return e.what();
    }
    return {};
}

json strip_timestamp(json j) {
    j.erase("timestamp");
    return j;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST_CASE("defaults and round trip") {
    const auto c = RunConfig::from_json({{"schema", 1}});
    CHECK(c.mode == Mode::Verify);
    CHECK(c.n == 2);
    CHECK(c.verify.samples == 10000);
    const auto again = RunConfig::from_json(c.to_json());
    CHECK(again.to_json() == c.to_json());
}

TEST_CASE("schema and key validation") {
    CHECK(error_of(json::object()).find("schema") != std::string::npos);
    CHECK(error_of({{"schema", 2}}).find("schema") != std::string::npos);
    CHECK(error_of({{"schema", 1}, {"bogus", 1}}).find("unknown key 'bogus'") != std::string::npos);
    CHECK(error_of({{"schema", 1}, {"newton", {{"tolerance", 1e-8}}}}).find("unknown key 'newton.tolerance'") !=
          std::string::npos);
    CHECK(error_of({{"schema", 1}, {"n", "three"}}).find("n") != std::string::npos);
    CHECK_FALSE(error_of({{"schema", 1}, {"mode", "explode"}}).empty());
    CHECK_FALSE(error_of({{"schema", 1}, {"p", 4}, {"n", 3}}).empty());
    CHECK_FALSE(error_of({{"schema", 1}, {"mode", "solve-surface"}, {"grid", {{"n_phi", 17}}}}).empty());
    CHECK_FALSE(error_of({{"schema", 1}, {"mode", "solve-dirichlet"}, {"grid", {{"domain", "torus"}}}}).empty());
    CHECK_FALSE(error_of({{"schema", 1}, {"mode", "solve-surface"}, {"n", 3}, {"p", 2}}).empty());
    CHECK(error_of({{"schema", 1}, {"mode", "verify"}, {"n", 4}, {"p", 1}}).empty());
}

TEST_CASE("verify run is reproducible apart from the timestamp") {
    const json cfg = {{"schema", 1}, {"mode", "verify"}, {"n", 3}, {"p", 2}, {"verify", {{"samples", 300}, {"fd_samples", 10}, {"concavity_samples", 50}}}};
    Run a(RunConfig::from_json(cfg)), b(RunConfig::from_json(cfg));
    a.execute();
    b.execute();
    CHECK(a.succeeded());
    CHECK(strip_timestamp(a.report()).dump(2) == strip_timestamp(b.report()).dump(2));
    CHECK(a.report()["properties"].size() >= 10u);
    CHECK(a.report()["theta"].get<double>() == doctest::Approx(1.0 / 6.0));

    const auto dir_a = std::filesystem::temp_directory_path() / "pconvex-test-a";
    const auto dir_b = std::filesystem::temp_directory_path() / "pconvex-test-b";
    a.write_artifacts(dir_a);
    b.write_artifacts(dir_b);
    auto ja = json::parse(slurp(dir_a / "report.json")), jb = json::parse(slurp(dir_b / "report.json"));
    CHECK(ja.contains("timestamp"));
    CHECK(strip_timestamp(ja).dump(2) == strip_timestamp(jb).dump(2));
}

TEST_CASE("surface run embeds the hypothesis checks") {
    const json cfg = {{"schema", 1},
                      {"mode", "solve-surface"},
                      {"p", 2},
                      {"grid", {{"n_theta", 8}, {"n_phi", 16}}},
                      {"data", {{"kind", "radial_power"}}}};
    Run r(RunConfig::from_json(cfg));
    r.execute();
    REQUIRE(r.succeeded());
    const auto& s = r.report()["surface"];
    CHECK(s["conditions"].size() == 3u);
    CHECK(s["max_abs_rho_minus_one"].get<double>() <= 1e-8);
    CHECK(s["rho_within_annulus"].get<bool>());

    const auto dir = std::filesystem::temp_directory_path() / "pconvex-test-surface";
    r.write_artifacts(dir);
    CHECK(std::filesystem::exists(dir / "report.json"));
    CHECK(std::filesystem::exists(dir / "fields.csv"));
    CHECK(std::filesystem::exists(dir / "surface.obj"));
}

TEST_CASE("failed hypotheses are recorded, not thrown") {
    const json cfg = {{"schema", 1},
                      {"mode", "solve-surface"},
                      {"p", 1},
                      {"grid", {{"n_theta", 8}, {"n_phi", 16}}},
                      {"data", {{"kind", "radial_power"}, {"scale", 0.5}, {"exponent", 0.0}, {"eps", 0.0}}}};
    Run r(RunConfig::from_json(cfg));
    r.execute();
    CHECK_FALSE(r.succeeded());
    CHECK(r.summary().find("barrier_inner") != std::string::npos);
    bool found = false;
    for (const auto& c : r.report()["surface"]["conditions"])
        if (c["name"] == "barrier_inner") found = !c["passed"].get<bool>();
    CHECK(found);
}

TEST_CASE("dirichlet run") {
    const json cfg = {{"schema", 1},
                      {"mode", "solve-dirichlet"},
                      {"p", 1},
                      {"grid", {{"domain", "disk"}, {"nodes", 17}}},
                      {"dirichlet", {{"beta", 1.0}, {"beta_sweep", {0.5, 2.0}}}}};
    Run r(RunConfig::from_json(cfg));
    r.execute();
    REQUIRE(r.succeeded());
    const auto& d = r.report()["dirichlet"];
    CHECK(d["max_error_vs_exact"].get<double>() < 1e-10);
    CHECK(d["monitor"].size() == 3u);
    const auto dir = std::filesystem::temp_directory_path() / "pconvex-test-dirichlet";
    r.write_artifacts(dir);
    CHECK(slurp(dir / "fields.csv").rfind("x,y,u,lambda1,lambda2,margin,monitor", 0) == 0);
}
