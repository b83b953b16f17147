// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rissim/geometry.hpp"
#include "rissim/numkernel.hpp"

namespace rissim {

/// Half-open run of consecutive element indices [begin, begin + size).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t size = 0;

    std::size_t end() const noexcept { return begin + size; }
    bool contains(std::size_t i) const noexcept { return i >= begin && i < end(); }
    friend bool operator==(const IndexRange &, const IndexRange &) = default;
};

/// Diagonal of the reflection matrix, theta_n = beta_n exp(j phi_n).
struct ThetaMatrix {
    ComplexVector diagonal;

    std::size_t size() const noexcept { return diagonal.size(); }
    ComplexMatrix as_matrix() const { return ComplexMatrix::diagonal(std::span<const Complex>(diagonal)); }
    friend bool operator==(const ThetaMatrix &, const ThetaMatrix &) = default;
};

/**
 * An N-element passive reflecting surface.
 *
 * Amplitudes stay in [0, 1] and phases in [0, 2pi). When a quantization width is
 * set, every phase write is snapped onto the 2^bits grid so the invariant can't be
 * broken through the setters.
 */
class RisPanel {
public:
    /// Empty placeholder; every operation taking a panel rejects N = 0.
    RisPanel() = default;
    explicit RisPanel(std::size_t n_elements, Point3 position = {});

    std::size_t n_elements() const noexcept { return amplitudes_.size(); }
    const std::vector<double> &amplitudes() const noexcept { return amplitudes_; }
    const std::vector<double> &phases() const noexcept { return phases_; }
    std::optional<int> quantization_bits() const noexcept { return bits_; }
    const std::vector<IndexRange> &partition() const noexcept { return partition_; }
    Point3 position() const noexcept { return position_; }

    void set_amplitude(std::size_t n, double beta);
    void set_phase(std::size_t n, double phi);
    void set_phases(std::span<const double> phi);
    void set_amplitudes(std::span<const double> beta);
    void set_position(Point3 p) { position_ = p; }
    /// Enables quantization and snaps all current phases.
    void set_quantization_bits(int bits);
    /// Blocks must be pairwise disjoint and lie within [0, N).
    void set_partition(std::vector<IndexRange> blocks);

    /// Sum of amplitudes; the coherent array factor under perfect alignment.
    double amplitude_sum() const;

    friend bool operator==(const RisPanel &, const RisPanel &) = default;

private:
    std::vector<double> amplitudes_;
    std::vector<double> phases_;
    std::optional<int> bits_;
    std::vector<IndexRange> partition_;
    Point3 position_;
};

/// Wraps any real angle into [0, 2pi).
double wrap_phase(double phi);

/// Nearest point of the grid {2 pi k / 2^bits}; ties go to the smaller k.
double quantize_phase(double phi, int bits);

ThetaMatrix theta(const RisPanel &panel);

/// Copy of the panel with every phase snapped to the 2^bits grid; amplitudes unchanged.
RisPanel quantize_phases(const RisPanel &panel, int bits);

} // namespace rissim
