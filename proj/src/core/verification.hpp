#pragma once

// Randomized property suites for the spectral operator, checked against
// brute-force oracles that enumerate subsets independently of SubsetTable.

#include "spectral_operator.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pconvex::verification {

using spectral::EigenSpectrum;

struct SampleSpec {
    int n = 3;
    int p = 2;
    int samples = 10000;
    std::uint64_t seed = 7;
    double margin_floor = 1e-3;
    double cap = 10.0;

    void validate() const;
};

enum class PropertyKind {
    Identity,    // worst = largest relative error, passes when <= tolerance
    Inequality,  // worst = smallest normalized slack, passes when >= -tolerance
};

struct PropertyReport {
    std::string name;
    PropertyKind kind = PropertyKind::Identity;
    int n = 0;
    int p = 0;
    int samples = 0;
    double worst = 0.0;
    double tolerance = 0.0;
    bool passed = true;
    std::vector<double> witness;  // spectrum attaining `worst`
    std::uint64_t seed = 0;
};

std::string to_string(PropertyKind kind);

/// Uniform rejection sampling in [-cap, cap]^n keeping cone_margin >= floor;
/// results are sorted descending.  Throws DomainError when the acceptance
/// rate drops below 1e-4.
std::vector<EigenSpectrum> sample_cone(const SampleSpec& spec);

/// Cone samples shifted along (1, ..., 1) so that the margin is log-uniform
/// in [lo, hi].
std::vector<EigenSpectrum> sample_near_boundary(const SampleSpec& spec, double lo = 1e-6, double hi = 1e-3);

/// Direct-product oracles: subsets come from Gosper's bit trick (colex order)
/// and F, F^{kk}, F^{kk,ll} are plain products without logarithms.
namespace oracle {

std::vector<std::uint32_t> subsets(int n, int p);
double F(const std::vector<double>& lambda, int p);
Eigen::VectorXd grad_F(const std::vector<double>& lambda, int p);
Eigen::MatrixXd hess_F(const std::vector<double>& lambda, int p);
Eigen::VectorXd grad_tilde_F(const std::vector<double>& lambda, int p);
Eigen::MatrixXd hess_tilde_F(const std::vector<double>& lambda, int p);

}  // namespace oracle

/// Ellipticity, the four eigenvalue inequalities/identities with the
/// explicit theta, homogeneity, and agreement with the product oracle.
std::vector<PropertyReport> run_lemma_suite(const SampleSpec& spec);

/// Euler and homogeneity identities on near-boundary samples.
std::vector<PropertyReport> run_near_boundary_suite(const SampleSpec& spec);

/// second_directional <= 1e-8 (1 + |B|^2) over random symmetric B, plus a
/// central-difference cross-check of the same quantity at h = 1e-4.
std::vector<PropertyReport> run_concavity_suite(const SampleSpec& spec, int directions_per_sample);

/// Gradient against central differences of eval_operator, Hessian against
/// central differences of the oracle gradient (both at h = 1e-5), and the
/// two off-diagonal Hessian formulas against each other.
std::vector<PropertyReport> run_fd_suite(const SampleSpec& spec);

void print_table(std::ostream& out, const std::vector<PropertyReport>& reports);

}  // namespace pconvex::verification
