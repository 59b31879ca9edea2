#pragma once

#include <string>
#include <vector>

#include "mimo/gnn/params.hpp"

namespace mimo {

/// Sizes entering the multiplication-count formulas.  `m` is the size of the
/// real alphabet (sqrt of the QAM order), `n` and `k` are real dimensions.
struct ComplexityInputs {
    double n = 256;
    double k = 128;
    double m = 4;
    double t = 10;
    double s_u = 8;
    double n_h1 = 64;
    double n_h2 = 32;
    double l = 2;
    double re_mimo_ds = 512;
    double re_mimo_heads = 8;
};

ComplexityInputs complexity_inputs(int n, int k, int qam_order, int iterations, const GnnDims& dims = {});

/// Real multiplications per detection for the named detector (amp, gnn, mmse,
/// remimo, oampnet, ep, bpic, gpicnet, gepnet).  Throws std::invalid_argument
/// for any other name.
double complexity_estimate(const std::string& detector, const ComplexityInputs& in);

const std::vector<std::string>& complexity_detectors();

}  // namespace mimo
