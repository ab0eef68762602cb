#include "pconvex/pconvex.h"

#include "errors.hpp"
#include "run_config.hpp"
#include "spectral_operator.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <new>
#include <string>
#include <vector>

struct pcv_run {
    pconvex::run::Run run;
    std::string report_text;
};

namespace {

thread_local std::string g_last_error;

pcv_status fail(pcv_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

// Maps exceptions escaping the core onto status codes.
template <class Fn>
pcv_status guarded(Fn&& fn) {
    try {
        g_last_error.clear();
        return fn();
    } catch (const pconvex::UsageError& e) {
        return fail(PCV_ERR_CONFIG, e.what());
    } catch (const pconvex::DomainError& e) {
        return fail(PCV_ERR_DOMAIN, e.what());
    } catch (const pconvex::NumericError& e) {
        return fail(PCV_ERR_NUMERIC, e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail(PCV_ERR_IO, e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail(PCV_ERR_CONFIG, e.what());
    } catch (const std::bad_alloc&) {
        return fail(PCV_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(PCV_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(PCV_ERR_INTERNAL, "unknown exception");
    }
}

pcv_status check_spectrum(const double* lambda, int n, int p) {
    if (!lambda) return fail(PCV_ERR_INVALID_ARGUMENT, "lambda is null");
    if (n < 1 || n > pconvex::spectral::kMaxDimension) return fail(PCV_ERR_INVALID_ARGUMENT, "n out of range");
    if (p < 1 || p > n) return fail(PCV_ERR_INVALID_ARGUMENT, "p out of range");
    return PCV_OK;
}

pconvex::spectral::EigenSpectrum spectrum(const double* lambda, int n) {
    return pconvex::spectral::EigenSpectrum(std::vector<double>(lambda, lambda + n));
}

}  // namespace

extern "C" {

const char* pcv_version(void) { return "0.1.0"; }

const char* pcv_last_error(void) { return g_last_error.c_str(); }

const char* pcv_status_name(pcv_status status) {
    switch (status) {
        case PCV_OK: return "ok";
        case PCV_ERR_INVALID_ARGUMENT: return "invalid argument";
        case PCV_ERR_CONFIG: return "config error";
        case PCV_ERR_DOMAIN: return "domain error";
        case PCV_ERR_NUMERIC: return "numeric error";
        case PCV_ERR_IO: return "i/o error";
        case PCV_ERR_STATE: return "invalid state";
        case PCV_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

pcv_status pcv_operator_eval(const double* lambda, int n, int p, double* tilde_F, double* log_F, int* defined) {
    if (pcv_status s = check_spectrum(lambda, n, p); s != PCV_OK) return s;
    if (!tilde_F) return fail(PCV_ERR_INVALID_ARGUMENT, "tilde_F is null");
    return guarded([&] {
        const auto v = pconvex::spectral::eval_operator(spectrum(lambda, n), p);
        *tilde_F = v.tilde_F;
        if (log_F) *log_F = v.F.defined ? v.F.log_magnitude : std::numeric_limits<double>::quiet_NaN();
        if (defined) *defined = v.F.defined ? 1 : 0;
        return PCV_OK;
    });
}

pcv_status pcv_operator_gradient(const double* lambda, int n, int p, double* grad) {
    if (pcv_status s = check_spectrum(lambda, n, p); s != PCV_OK) return s;
    if (!grad) return fail(PCV_ERR_INVALID_ARGUMENT, "grad is null");
    return guarded([&] {
        const auto jet = pconvex::spectral::eigen_jet(spectrum(lambda, n), p);
        for (int k = 0; k < n; ++k) grad[k] = jet.grad[k];
        return PCV_OK;
    });
}

pcv_status pcv_cone_margin(const double* lambda, int n, int p, double* margin, int* witness) {
    if (pcv_status s = check_spectrum(lambda, n, p); s != PCV_OK) return s;
    if (!margin) return fail(PCV_ERR_INVALID_ARGUMENT, "margin is null");
    return guarded([&] {
        const auto m = pconvex::spectral::cone_margin(spectrum(lambda, n), p);
        *margin = m.min_subset_sum;
        if (witness) {
            for (int i = 0; i < p; ++i) witness[i] = m.witness_subset[static_cast<std::size_t>(i)];
        }
        return PCV_OK;
    });
}

pcv_status pcv_theta_constant(int n, int p, double* theta) {
    if (!theta) return fail(PCV_ERR_INVALID_ARGUMENT, "theta is null");
    if (n < 1 || p < 1 || p > n) return fail(PCV_ERR_INVALID_ARGUMENT, "need 1 <= p <= n");
    return guarded([&] {
        *theta = pconvex::spectral::theta_constant(n, p);
        return PCV_OK;
    });
}

pcv_status pcv_run_create(const char* config_json, pcv_run** out) {
    if (!config_json || !out) return fail(PCV_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    return guarded([&] {
        const auto j = nlohmann::json::parse(config_json);
        *out = new pcv_run{pconvex::run::Run(pconvex::run::RunConfig::from_json(j)), {}};
        return PCV_OK;
    });
}

pcv_status pcv_run_execute(pcv_run* run, int* succeeded) {
    if (!run) return fail(PCV_ERR_INVALID_ARGUMENT, "run is null");
    return guarded([&] {
        run->run.execute();
        run->report_text = run->run.report().dump(2);
        if (succeeded) *succeeded = run->run.succeeded() ? 1 : 0;
        return PCV_OK;
    });
}

pcv_status pcv_run_report_json(const pcv_run* run, const char** json) {
    if (!run || !json) return fail(PCV_ERR_INVALID_ARGUMENT, "null argument");
    if (!run->run.executed()) return fail(PCV_ERR_STATE, "run has not been executed");
    *json = run->report_text.c_str();
    return PCV_OK;
}

pcv_status pcv_run_summary(const pcv_run* run, const char** text) {
    if (!run || !text) return fail(PCV_ERR_INVALID_ARGUMENT, "null argument");
    if (!run->run.executed()) return fail(PCV_ERR_STATE, "run has not been executed");
    *text = run->run.summary().c_str();
    return PCV_OK;
}

pcv_status pcv_run_output_dir(const pcv_run* run, const char** dir) {
    if (!run || !dir) return fail(PCV_ERR_INVALID_ARGUMENT, "null argument");
    *dir = run->run.config().output_dir.c_str();
    return PCV_OK;
}

pcv_status pcv_run_write_artifacts(const pcv_run* run, const char* out_dir) {
    if (!run) return fail(PCV_ERR_INVALID_ARGUMENT, "run is null");
    if (!run->run.executed()) return fail(PCV_ERR_STATE, "run has not been executed");
    return guarded([&] {
        try {
            run->run.write_artifacts(out_dir ? std::filesystem::path(out_dir)
                                             : std::filesystem::path(run->run.config().output_dir));
        } catch (const std::runtime_error& e) {
            if (dynamic_cast<const pconvex::NumericError*>(&e)) throw;
            return fail(PCV_ERR_IO, e.what());
        }
        return PCV_OK;
    });
}

void pcv_run_destroy(pcv_run* run) { delete run; }

}  // extern "C"
