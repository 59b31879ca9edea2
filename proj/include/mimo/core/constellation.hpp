#pragma once

#include <complex>
#include <vector>

namespace mimo {

/// Square Gray-labelled QAM, normalized to unit average complex energy.
struct Constellation {
    int qam_order = 0;
    /// Real-dimension alphabet, ascending and symmetric about zero.
    std::vector<double> real_points;
    /// Complex alphabet indexed by Gray label (in-phase bits high, quadrature bits low).
    std::vector<std::complex<double>> complex_points;
    /// Energy per real dimension (half the unit complex symbol energy).
    double es_real = 0.5;

    int size() const { return static_cast<int>(real_points.size()); }
    /// Index of the nearest real point; ties go to the lower index.
    int nearest_index(double value) const;
    double nearest(double value) const { return real_points[static_cast<std::size_t>(nearest_index(value))]; }
    /// Index of an exact alphabet member, or -1.
    int index_of(double value) const;
};

/// Supported orders are 4, 16 and 64; anything else throws std::invalid_argument.
Constellation make_constellation(int qam_order);

}  // namespace mimo
