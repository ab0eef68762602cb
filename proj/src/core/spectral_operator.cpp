#include "spectral_operator.hpp"

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace pconvex::spectral {

namespace {

void check_dimensions(int n, int p) {
    if (n < 1 || n > kMaxDimension) {
        throw DomainError("dimension n = " + std::to_string(n) + " outside [1, " +
                          std::to_string(kMaxDimension) + "]");
    }
    if (p < 1 || p > n) {
        throw DomainError("p = " + std::to_string(p) + " outside [1, " + std::to_string(n) + "]");
    }
}

std::vector<double> sums_of(const SubsetTable& table, const EigenSpectrum& spec) {
    std::vector<double> sums(static_cast<std::size_t>(table.count()));
    for (int s = 0; s < table.count(); ++s) {
        double acc = 0.0;
        for (int i : table.members(s)) acc += spec[i];
        sums[static_cast<std::size_t>(s)] = acc;
    }
    return sums;
}

bool nearly_equal(double a, double b) {
    return std::abs(a - b) < 1e-6 * (1.0 + std::abs(a) + std::abs(b));
}

}  // namespace

std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

EigenSpectrum::EigenSpectrum(std::vector<double> v, bool sorted)
    : values(std::move(v)), sorted_descending(sorted) {
    if (sorted_descending && !std::is_sorted(values.begin(), values.end(), std::greater<>())) {
        throw DomainError("spectrum flagged as sorted but is not in descending order");
    }
}

EigenSpectrum EigenSpectrum::sorted(std::vector<double> v) {
    std::sort(v.begin(), v.end(), std::greater<>());
    return EigenSpectrum(std::move(v), true);
}

double LogValue::value() const {
    if (!defined) return std::numeric_limits<double>::quiet_NaN();
    return std::exp(log_magnitude);
}

SubsetTable::SubsetTable(int n, int p) : n_(n), p_(p) {
    // Lexicographic enumeration of increasing index tuples.
    std::vector<int> idx(static_cast<std::size_t>(p));
    for (int i = 0; i < p; ++i) idx[static_cast<std::size_t>(i)] = i;
    containing_.resize(static_cast<std::size_t>(n));
    lookup_.assign(std::size_t{1} << n, -1);
    while (true) {
        std::uint32_t m = 0;
        for (int i : idx) m |= (1u << i);
        const int s = static_cast<int>(masks_.size());
        masks_.push_back(m);
        lookup_[m] = s;
        members_.push_back(idx);
        for (int i : idx) containing_[static_cast<std::size_t>(i)].push_back(s);

        int j = p - 1;
        while (j >= 0 && idx[static_cast<std::size_t>(j)] == n - p + j) --j;
        if (j < 0) break;
        ++idx[static_cast<std::size_t>(j)];
        for (int l = j + 1; l < p; ++l) idx[static_cast<std::size_t>(l)] = idx[static_cast<std::size_t>(l - 1)] + 1;
    }
}

const SubsetTable& SubsetTable::get(int n, int p) {
    check_dimensions(n, p);
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::unique_ptr<SubsetTable>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{n, p}];
    if (!slot) slot.reset(new SubsetTable(n, p));
    return *slot;
}

int SubsetTable::index_of(std::uint32_t mask) const {
    if (mask >= lookup_.size()) return -1;
    return lookup_[mask];
}

std::vector<SubsetSum> subset_sums(const EigenSpectrum& spec, int p) {
    const auto& table = SubsetTable::get(spec.size(), p);
    const auto sums = sums_of(table, spec);
    std::vector<SubsetSum> out;
    out.reserve(sums.size());
    for (int s = 0; s < table.count(); ++s) out.push_back({sums[static_cast<std::size_t>(s)], table.members(s)});
    return out;
}

ConeMargin cone_margin(const EigenSpectrum& spec, int p) {
    const auto& table = SubsetTable::get(spec.size(), p);
    const auto sums = sums_of(table, spec);
    int best = 0;
    for (int s = 1; s < table.count(); ++s) {
        if (sums[static_cast<std::size_t>(s)] < sums[static_cast<std::size_t>(best)]) best = s;
    }
    return {sums[static_cast<std::size_t>(best)], table.members(best)};
}

OperatorValue eval_operator(const EigenSpectrum& spec, int p) {
    const auto& table = SubsetTable::get(spec.size(), p);
    const auto sums = sums_of(table, spec);
    const double count = static_cast<double>(table.count());

    OperatorValue out{};
    bool on_boundary = false;
    double log_sum = 0.0;
    for (double s : sums) {
        if (s < 0.0) {
            out.F = {0.0, false};
            out.tilde_F = std::numeric_limits<double>::quiet_NaN();
            return out;
        }
        if (s == 0.0) {
            on_boundary = true;
        } else {
            log_sum += std::log(s);
        }
    }
    if (on_boundary) {
        out.F = {-std::numeric_limits<double>::infinity(), true};
        out.tilde_F = 0.0;
        return out;
    }
    out.F = {log_sum, true};
    out.tilde_F = std::exp(log_sum / count);
    return out;
}

OperatorJet eigen_jet(const EigenSpectrum& spec, int p) {
    const int n = spec.size();
    const auto& table = SubsetTable::get(n, p);
    const auto sums = sums_of(table, spec);
    const double count = static_cast<double>(table.count());

    double log_sum = 0.0;
    for (double s : sums) {
        if (!(s > 0.0)) throw DomainError("eigen_jet: spectrum is not in the open p-convex cone");
        log_sum += std::log(s);
    }

    OperatorJet jet;
    jet.value_F = {log_sum, true};
    jet.value_tilde_F = std::exp(log_sum / count);
    const double scale = jet.value_tilde_F / count;

    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < table.count(); ++s) {
        const double inv = 1.0 / sums[static_cast<std::size_t>(s)];
        const auto& mem = table.members(s);
        for (int a : mem) {
            g[a] += inv;
            for (int b : mem) q(a, b) += inv * inv;
        }
    }

    jet.log_grad = g;
    jet.grad = scale * g;
    // F^{kk,ll} / F = g_k g_l - sum_{S contains k and l} 1 / s_S^2; the chain
    // rule to tilde F adds (1/C - 1) g_k g_l.
    jet.hess_diag = scale * ((1.0 / count) * g * g.transpose() - q);

    jet.hess_offdiag = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
        for (int r = k + 1; r < n; ++r) {
            const double v = nearly_equal(spec[k], spec[r]) ? offdiag_pair_sum(spec, p, k, r)
                                                            : offdiag_quotient(jet, spec, k, r);
            jet.hess_offdiag(k, r) = v;
            jet.hess_offdiag(r, k) = v;
        }
    }
    return jet;
}

double offdiag_quotient(const OperatorJet& jet, const EigenSpectrum& spec, int k, int r) {
    return (jet.grad[k] - jet.grad[r]) / (spec[k] - spec[r]);
}

double offdiag_pair_sum(const EigenSpectrum& spec, int p, int k, int r) {
    const int n = spec.size();
    const auto& table = SubsetTable::get(n, p);
    if (k == r || k < 0 || r < 0 || k >= n || r >= n) throw DomainError("offdiag_pair_sum: need k != r");
    const auto sums = sums_of(table, spec);
    double log_sum = 0.0;
    for (double s : sums) {
        if (!(s > 0.0)) throw DomainError("offdiag_pair_sum: spectrum is not in the open p-convex cone");
        log_sum += std::log(s);
    }
    const double count = static_cast<double>(table.count());
    const double scale = std::exp(log_sum / count) / count;

    const std::uint32_t bit_k = 1u << k;
    const std::uint32_t bit_r = 1u << r;
    double acc = 0.0;
    for (int s : table.containing(r)) {
        const std::uint32_t m = table.mask(s);
        if (m & bit_k) continue;
        const int t = table.index_of((m & ~bit_r) | bit_k);
        acc += 1.0 / (sums[static_cast<std::size_t>(s)] * sums[static_cast<std::size_t>(t)]);
    }
    return -scale * acc;
}

MatrixJet matrix_jet(const Eigen::MatrixXd& A, int p) {
    if (A.rows() != A.cols()) throw DomainError("matrix_jet: matrix is not square");
    const Eigen::MatrixXd sym = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericError("matrix_jet: eigensolver failed");

    const Eigen::Index n = sym.rows();
    std::vector<double> values(static_cast<std::size_t>(n));
    Eigen::MatrixXd vectors(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        values[static_cast<std::size_t>(i)] = solver.eigenvalues()[n - 1 - i];
        vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    MatrixJet out;
    out.eigenvalues = EigenSpectrum(std::move(values), true);
    out.eigen = eigen_jet(out.eigenvalues, p);
    out.tilde_F = out.eigen.value_tilde_F;
    out.eigenvectors = vectors;
    out.grad = vectors * out.eigen.grad.asDiagonal() * vectors.transpose();
    return out;
}

double second_directional(const EigenSpectrum& spec, int p, const Eigen::MatrixXd& B) {
    const int n = spec.size();
    if (B.rows() != n || B.cols() != n) throw DomainError("second_directional: direction has wrong size");
    const OperatorJet jet = eigen_jet(spec, p);
    double acc = B.diagonal().dot(jet.hess_diag * B.diagonal());
    for (int k = 0; k < n; ++k) {
        for (int r = 0; r < n; ++r) {
            if (k == r) continue;
            const double b = 0.5 * (B(k, r) + B(r, k));
            acc += jet.hess_offdiag(k, r) * b * b;
        }
    }
    return acc;
}

double theta_constant(int n, int p) {
    check_dimensions(n, p);
    return 1.0 / (static_cast<double>(n) * static_cast<double>(binomial(n - 1, p - 1)));
}

}  // namespace pconvex::spectral
