// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rissim/random.hpp"

namespace rissim {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// Relative singular-value threshold used for rank decisions.
inline constexpr double kDefaultRankTol = 1e-8;

/// Singular values below this fraction of the largest are treated as zero by condition_number().
inline constexpr double kConditionFloor = 1e-14;

/**
 * Dense complex matrix, stored column-major in an Eigen matrix.
 *
 * Every constructor that takes entries rejects NaN/Inf. A default-constructed
 * matrix is 0x0; it is representable so that operations can report it, but
 * every linear algebra routine rejects it.
 */
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols);
    explicit ComplexMatrix(Eigen::MatrixXcd m);

    /// Builds from a row-major entry list; entries.size() must equal rows * cols.
    static ComplexMatrix from_rows(std::size_t rows, std::size_t cols, std::span<const Complex> entries);
    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix diagonal(std::span<const Complex> diag);
    static ComplexMatrix diagonal(std::span<const double> diag);
    /// i.i.d. CN(0, variance) entries.
    static ComplexMatrix gaussian(std::size_t rows, std::size_t cols, Rng &rng, double variance = 1.0);
    /// Column vector.
    static ComplexMatrix column(std::span<const Complex> v);

    std::size_t rows() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    std::size_t cols() const noexcept { return static_cast<std::size_t>(m_.cols()); }
    bool empty() const noexcept { return m_.size() == 0; }

    Complex operator()(std::size_t r, std::size_t c) const { return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)); }
    Complex &operator()(std::size_t r, std::size_t c) { return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)); }

    const Eigen::MatrixXcd &mat() const noexcept { return m_; }

    ComplexMatrix adjoint() const { return ComplexMatrix(Eigen::MatrixXcd(m_.adjoint())); }
    double frobenius_norm() const { return m_.norm(); }
    bool all_finite() const { return m_.allFinite(); }
    ComplexVector column_vector(std::size_t c) const;
    ComplexVector row_vector(std::size_t r) const;

    friend ComplexMatrix operator*(const ComplexMatrix &a, const ComplexMatrix &b);
    friend ComplexMatrix operator+(const ComplexMatrix &a, const ComplexMatrix &b);
    friend ComplexMatrix operator-(const ComplexMatrix &a, const ComplexMatrix &b);
    friend ComplexMatrix operator*(Complex s, const ComplexMatrix &a);
    friend ComplexMatrix operator*(double s, const ComplexMatrix &a) { return Complex(s, 0.0) * a; }

    bool operator==(const ComplexMatrix &other) const
    {
        return m_.rows() == other.m_.rows() && m_.cols() == other.m_.cols() && m_ == other.m_;
    }

private:
    Eigen::MatrixXcd m_;
};

struct SvdResult {
    std::vector<double> singular_values; ///< non-increasing
    ComplexMatrix left_vectors;          ///< rows x k, orthonormal columns
    ComplexMatrix right_vectors;         ///< cols x k, orthonormal columns
};

/// Thin SVD, k = min(rows, cols). Throws InvalidInput on an empty or non-finite matrix.
SvdResult svd(const ComplexMatrix &a);

std::vector<double> singular_values(const ComplexMatrix &a);

/// Number of singular values strictly above rel_tol * sigma_max; 0 for the zero matrix.
std::size_t numerical_rank(const ComplexMatrix &a, double rel_tol = kDefaultRankTol);

/// sigma_max / sigma_min, or +infinity when sigma_min < kConditionFloor * sigma_max.
double condition_number(const ComplexMatrix &a);

/**
 * Water-filling power allocation over parallel channels with gains g_i (SNR per unit power).
 *
 * Returns p_i >= 0 with sum p_i = total_power. The water level is found by bisection
 * until the allocated power matches total_power to 1e-10 relative.
 */
std::vector<double> waterfill_powers(std::span<const double> gains, double total_power);

/// Shannon capacity (bits/s/Hz) of h under water-filling with a total power budget.
double waterfill_capacity(const ComplexMatrix &h, double total_power, double noise_power);

/// Capacity with total_power split evenly over min(rows, cols) eigenmodes.
double equal_power_capacity(const ComplexMatrix &h, double total_power, double noise_power);

/// Water-filling precoder F = V diag(sqrt(p)), cols(h) x min(rows, cols).
ComplexMatrix waterfill_precoder(const ComplexMatrix &h, double total_power, double noise_power);

/// Achievable rate log2 det(I + H F F^H H^H / noise) of a fixed precoder.
double precoded_rate(const ComplexMatrix &h, const ComplexMatrix &precoder, double noise_power);

/// log2 det(I + X X^H / noise) for an already-precoded channel X = H F.
double rate_of_product(const Eigen::MatrixXcd &hf, double noise_power);

} // namespace rissim
