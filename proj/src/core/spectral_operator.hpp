#pragma once

// The p-convex operator
//
//     F(lambda) = prod_{i1 < ... < ip} (lambda_i1 + ... + lambda_ip),
//     tilde F   = F^(1 / C(n, p)),
//
// evaluated in the log domain, together with its eigenvalue derivatives and
// the spectral lift to symmetric matrices.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace pconvex::spectral {

/// Largest supported dimension; C(16, 8) = 12870 subsets.
inline constexpr int kMaxDimension = 16;

/// Binomial coefficient C(n, k); zero when k is out of range.
std::int64_t binomial(int n, int k);

struct EigenSpectrum {
    std::vector<double> values;
    bool sorted_descending = false;

    EigenSpectrum() = default;
    explicit EigenSpectrum(std::vector<double> v, bool sorted = false);

    /// Copies and sorts in descending order.
    static EigenSpectrum sorted(std::vector<double> v);

    int size() const { return static_cast<int>(values.size()); }
    double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
    Eigen::Map<const Eigen::VectorXd> vec() const {
        return {values.data(), static_cast<Eigen::Index>(values.size())};
    }
};

/// Overflow-safe representation of F.  On the boundary of the closed cone the
/// magnitude is -inf (F = 0); outside the closed cone `defined` is false.
struct LogValue {
    double log_magnitude = 0.0;
    bool defined = false;

    double value() const;
};

/// Lexicographically ordered p-subsets of {0, ..., n-1} with membership and
/// exchange tables.  Immutable once built; shared through `SubsetTable::get`.
class SubsetTable {
public:
    static const SubsetTable& get(int n, int p);

    int n() const { return n_; }
    int p() const { return p_; }
    int count() const { return static_cast<int>(masks_.size()); }

    std::uint32_t mask(int s) const { return masks_[static_cast<std::size_t>(s)]; }
    const std::vector<int>& members(int s) const { return members_[static_cast<std::size_t>(s)]; }
    /// Subsets containing index k.
    const std::vector<int>& containing(int k) const { return containing_[static_cast<std::size_t>(k)]; }
    /// Index of the subset with the given mask, or -1.
    int index_of(std::uint32_t mask) const;

private:
    SubsetTable(int n, int p);

    int n_;
    int p_;
    std::vector<std::uint32_t> masks_;
    std::vector<std::vector<int>> members_;
    std::vector<std::vector<int>> containing_;
    std::vector<int> lookup_;  // mask -> subset index
};

struct SubsetSum {
    double sum;
    std::vector<int> indices;  // zero-based, increasing
};

struct ConeMargin {
    double min_subset_sum;
    std::vector<int> witness_subset;  // zero-based, lexicographically smallest minimizer

    bool inside() const { return min_subset_sum > 0.0; }
};

struct OperatorValue {
    LogValue F;
    double tilde_F;  // 0 on the boundary, NaN outside the closed cone
};

/// Value and derivatives of tilde F at a diagonal argument.
struct OperatorJet {
    LogValue value_F;
    double value_tilde_F = 0.0;
    /// d log F / d lambda_k = F^{kk} / F.
    Eigen::VectorXd log_grad;
    /// tilde F^{kk}.
    Eigen::VectorXd grad;
    /// tilde F^{kk,ll}.
    Eigen::MatrixXd hess_diag;
    /// tilde F^{kr,rk} for k != r; the diagonal is unused and set to zero.
    Eigen::MatrixXd hess_offdiag;
};

struct MatrixJet {
    double tilde_F;
    Eigen::MatrixXd grad;          // tilde F^{ij}, symmetric
    EigenSpectrum eigenvalues;     // sorted descending
    Eigen::MatrixXd eigenvectors;  // columns match eigenvalues
    OperatorJet eigen;             // jet at the sorted eigenvalues
};

std::vector<SubsetSum> subset_sums(const EigenSpectrum& spec, int p);

ConeMargin cone_margin(const EigenSpectrum& spec, int p);

OperatorValue eval_operator(const EigenSpectrum& spec, int p);

/// Throws DomainError unless spec lies in the open cone.
OperatorJet eigen_jet(const EigenSpectrum& spec, int p);

/// Quotient form (tilde F^{kk} - tilde F^{rr}) / (lambda_k - lambda_r).
double offdiag_quotient(const OperatorJet& jet, const EigenSpectrum& spec, int k, int r);

/// Subset-pair form of tilde F^{kr,rk}; regular at repeated eigenvalues.
double offdiag_pair_sum(const EigenSpectrum& spec, int p, int k, int r);

/// tilde F and its matrix gradient at a symmetric matrix.
MatrixJet matrix_jet(const Eigen::MatrixXd& A, int p);

/// d^2/dt^2 tilde F(diag(spec) + t B) at t = 0.
double second_directional(const EigenSpectrum& spec, int p, const Eigen::MatrixXd& B);

/// theta(n, p) = 1 / (n C(n-1, p-1)) with F^{jj} >= theta sum_i F^{ii} for the
/// p smallest eigenvalues.
double theta_constant(int n, int p);

}  // namespace pconvex::spectral
