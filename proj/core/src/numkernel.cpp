// SPDX-License-Identifier: Apache-2.0
#include "rissim/numkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rissim/errors.hpp"

namespace rissim {

namespace {

void require_nonempty(const ComplexMatrix &a, const char *op)
{
    if (a.empty())
        throw InvalidInput(std::string(op) + ": matrix has a zero dimension");
}

void require_finite(const Eigen::MatrixXcd &m, const char *op)
{
    if (!m.allFinite())
        throw InvalidInput(std::string(op) + ": matrix has non-finite entries");
}

void require_same_shape(const ComplexMatrix &a, const ComplexMatrix &b, const char *op)
{
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInput(std::string(op) + ": shape mismatch");
}

} // namespace

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : m_(Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)))
{
}

ComplexMatrix::ComplexMatrix(Eigen::MatrixXcd m) : m_(std::move(m))
{
    require_finite(m_, "ComplexMatrix");
}

ComplexMatrix ComplexMatrix::from_rows(std::size_t rows, std::size_t cols, std::span<const Complex> entries)
{
    if (entries.size() != rows * cols)
        throw InvalidInput("ComplexMatrix::from_rows: entry count " + std::to_string(entries.size()) +
                           " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = entries[r * cols + c];
    return ComplexMatrix(std::move(m));
}

ComplexMatrix ComplexMatrix::identity(std::size_t n)
{
    return ComplexMatrix(Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const Complex> diag)
{
    ComplexMatrix out(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i)
        out(i, i) = diag[i];
    require_finite(out.m_, "ComplexMatrix::diagonal");
    return out;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> diag)
{
    ComplexMatrix out(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i)
        out(i, i) = diag[i];
    require_finite(out.m_, "ComplexMatrix::diagonal");
    return out;
}

ComplexMatrix ComplexMatrix::gaussian(std::size_t rows, std::size_t cols, Rng &rng, double variance)
{
    ComplexMatrix out(rows, cols);
    // Row-major draw order so that the stream layout matches from_rows().
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            out(r, c) = rng.complex_normal(variance);
    return out;
}

ComplexMatrix ComplexMatrix::column(std::span<const Complex> v)
{
    return from_rows(v.size(), 1, v);
}

ComplexVector ComplexMatrix::column_vector(std::size_t c) const
{
    ComplexVector out(rows());
    for (std::size_t r = 0; r < rows(); ++r)
        out[r] = (*this)(r, c);
    return out;
}

ComplexVector ComplexMatrix::row_vector(std::size_t r) const
{
    ComplexVector out(cols());
    for (std::size_t c = 0; c < cols(); ++c)
        out[c] = (*this)(r, c);
    return out;
}

ComplexMatrix operator*(const ComplexMatrix &a, const ComplexMatrix &b)
{
    if (a.cols() != b.rows())
        throw InvalidInput("ComplexMatrix product: inner dimensions " + std::to_string(a.cols()) + " and " +
                           std::to_string(b.rows()) + " differ");
    return ComplexMatrix(Eigen::MatrixXcd(a.m_ * b.m_));
}

ComplexMatrix operator+(const ComplexMatrix &a, const ComplexMatrix &b)
{
    require_same_shape(a, b, "ComplexMatrix sum");
    return ComplexMatrix(Eigen::MatrixXcd(a.m_ + b.m_));
}

ComplexMatrix operator-(const ComplexMatrix &a, const ComplexMatrix &b)
{
    require_same_shape(a, b, "ComplexMatrix difference");
    return ComplexMatrix(Eigen::MatrixXcd(a.m_ - b.m_));
}

ComplexMatrix operator*(Complex s, const ComplexMatrix &a)
{
    return ComplexMatrix(Eigen::MatrixXcd(s * a.m_));
}

SvdResult svd(const ComplexMatrix &a)
{
    require_nonempty(a, "svd");
    require_finite(a.mat(), "svd");

    Eigen::JacobiSVD<Eigen::MatrixXcd, Eigen::ColPivHouseholderQRPreconditioner> solver(
        a.mat(), Eigen::ComputeThinU | Eigen::ComputeThinV);

    SvdResult out;
    const auto &s = solver.singularValues();
    out.singular_values.assign(s.data(), s.data() + s.size());
    out.left_vectors = ComplexMatrix(Eigen::MatrixXcd(solver.matrixU()));
    out.right_vectors = ComplexMatrix(Eigen::MatrixXcd(solver.matrixV()));
    return out;
}

std::vector<double> singular_values(const ComplexMatrix &a)
{
    require_nonempty(a, "singular_values");
    require_finite(a.mat(), "singular_values");
    Eigen::JacobiSVD<Eigen::MatrixXcd, Eigen::ColPivHouseholderQRPreconditioner> solver(a.mat());
    const auto &s = solver.singularValues();
    return {s.data(), s.data() + s.size()};
}

std::size_t numerical_rank(const ComplexMatrix &a, double rel_tol)
{
    if (!(rel_tol > 0.0 && rel_tol < 1.0))
        throw InvalidInput("numerical_rank: rel_tol must lie in (0, 1)");
    const auto s = singular_values(a);
    if (s.empty() || s.front() == 0.0)
        return 0;
    const double cut = rel_tol * s.front();
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [cut](double v) { return v > cut; }));
}

double condition_number(const ComplexMatrix &a)
{
    const auto s = singular_values(a);
    if (s.front() == 0.0)
        throw InvalidInput("condition_number: zero matrix");
    const double smin = s.back();
    if (smin < kConditionFloor * s.front())
        return std::numeric_limits<double>::infinity();
    return s.front() / smin;
}

std::vector<double> waterfill_powers(std::span<const double> gains, double total_power)
{
    if (!(total_power > 0.0) || !std::isfinite(total_power))
        throw InvalidInput("waterfill_powers: total_power must be positive");
    for (double g : gains)
        if (!(g >= 0.0) || !std::isfinite(g))
            throw InvalidInput("waterfill_powers: gains must be finite and non-negative");

    std::vector<double> p(gains.size(), 0.0);
    double max_inv = 0.0;
    bool any = false;
    for (double g : gains) {
        if (g > 0.0) {
            max_inv = std::max(max_inv, 1.0 / g);
            any = true;
        }
    }
    if (!any)
        return p;

    auto allocated = [&](double level) {
        double sum = 0.0;
        for (double g : gains)
            if (g > 0.0)
                sum += std::max(0.0, level - 1.0 / g);
        return sum;
    };

    double lo = 0.0;
    double hi = total_power + max_inv;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double used = allocated(mid);
        if (std::abs(used - total_power) <= 1e-10 * total_power) {
            lo = hi = mid;
            break;
        }
        (used < total_power ? lo : hi) = mid;
    }
    double level = 0.5 * (lo + hi);

    // Re-solve the level in closed form on the active set so that sum p == total_power.
    double inv_sum = 0.0;
    std::size_t active = 0;
    for (double g : gains) {
        if (g > 0.0 && level - 1.0 / g > 0.0) {
            inv_sum += 1.0 / g;
            ++active;
        }
    }
    if (active > 0) {
        const double exact = (total_power + inv_sum) / static_cast<double>(active);
        bool consistent = true;
        for (double g : gains)
            if (g > 0.0 && level - 1.0 / g > 0.0 && exact - 1.0 / g < 0.0)
                consistent = false;
        if (consistent)
            level = exact;
    }
    for (std::size_t i = 0; i < gains.size(); ++i)
        if (gains[i] > 0.0)
            p[i] = std::max(0.0, level - 1.0 / gains[i]);
    return p;
}

namespace {

void require_powers(double total_power, double noise_power, const char *op)
{
    if (!(total_power > 0.0) || !std::isfinite(total_power))
        throw InvalidInput(std::string(op) + ": total_power must be positive");
    if (!(noise_power > 0.0) || !std::isfinite(noise_power))
        throw InvalidInput(std::string(op) + ": noise_power must be positive");
}

std::vector<double> mode_gains(const std::vector<double> &sv, double noise_power)
{
    std::vector<double> g(sv.size());
    std::transform(sv.begin(), sv.end(), g.begin(), [noise_power](double s) { return s * s / noise_power; });
    return g;
}

} // namespace

double waterfill_capacity(const ComplexMatrix &h, double total_power, double noise_power)
{
    require_powers(total_power, noise_power, "waterfill_capacity");
    const auto gains = mode_gains(singular_values(h), noise_power);
    const auto p = waterfill_powers(gains, total_power);
    double c = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i)
        c += std::log2(1.0 + p[i] * gains[i]);
    return c;
}

double equal_power_capacity(const ComplexMatrix &h, double total_power, double noise_power)
{
    require_powers(total_power, noise_power, "equal_power_capacity");
    const auto gains = mode_gains(singular_values(h), noise_power);
    const double each = total_power / static_cast<double>(gains.size());
    double c = 0.0;
    for (double g : gains)
        c += std::log2(1.0 + each * g);
    return c;
}

ComplexMatrix waterfill_precoder(const ComplexMatrix &h, double total_power, double noise_power)
{
    require_powers(total_power, noise_power, "waterfill_precoder");
    const auto dec = svd(h);
    const auto p = waterfill_powers(mode_gains(dec.singular_values, noise_power), total_power);
    Eigen::MatrixXcd f = dec.right_vectors.mat();
    for (Eigen::Index k = 0; k < f.cols(); ++k)
        f.col(k) *= std::sqrt(p[static_cast<std::size_t>(k)]);
    return ComplexMatrix(std::move(f));
}

double rate_of_product(const Eigen::MatrixXcd &hf, double noise_power)
{
    // det(I + X X^H / n) == det(I + X^H X / n); factor whichever Gram matrix is smaller.
    const bool tall = hf.rows() >= hf.cols();
    const Eigen::Index n = tall ? hf.cols() : hf.rows();
    Eigen::MatrixXcd gram = tall ? Eigen::MatrixXcd(hf.adjoint() * hf) : Eigen::MatrixXcd(hf * hf.adjoint());
    gram /= noise_power;
    gram += Eigen::MatrixXcd::Identity(n, n);
    Eigen::LLT<Eigen::MatrixXcd> llt(gram);
    const auto &l = llt.matrixLLT();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        logdet += std::log2(l(i, i).real());
    return 2.0 * logdet;
}

double precoded_rate(const ComplexMatrix &h, const ComplexMatrix &precoder, double noise_power)
{
    if (!(noise_power > 0.0))
        throw InvalidInput("precoded_rate: noise_power must be positive");
    if (h.cols() != precoder.rows())
        throw InvalidInput("precoded_rate: precoder rows must equal channel columns");
    return rate_of_product(h.mat() * precoder.mat(), noise_power);
}

} // namespace rissim
