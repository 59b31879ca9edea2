#include "mimo/bench/complexity.hpp"

#include <cmath>
#include <stdexcept>

namespace mimo {

ComplexityInputs complexity_inputs(int n, int k, int qam_order, int iterations, const GnnDims& dims) {
    ComplexityInputs in;
    in.n = n;
    in.k = k;
    in.m = std::sqrt(static_cast<double>(qam_order));
    in.t = iterations;
    in.s_u = dims.message;
    in.n_h1 = dims.hidden1;
    in.n_h2 = dims.hidden2;
    in.l = dims.rounds;
    return in;
}

const std::vector<std::string>& complexity_detectors() {
    static const std::vector<std::string> names{"amp", "gnn", "mmse", "remimo", "oampnet",
                                                "ep",  "bpic", "gpicnet", "gepnet"};
    return names;
}

double complexity_estimate(const std::string& detector, const ComplexityInputs& in) {
    const double n = in.n, k = in.k, m = in.m, t = in.t;
    const double su = in.s_u, h1 = in.n_h1, h2 = in.n_h2, l = in.l;
    // GNN setup and per-round costs shared by the graph-based rows.
    const double gnn_setup = su * (h1 + h2 + 3.0) + h1 * h2 + m;
    const double gnn_round = h1 * (4.0 * su + 5.0 + 3.0 * h1) + h2 * (h1 + su + 2.0);

    if (detector == "amp") return (4 * n * k + 8 * n + 6 * k + 4 * m * k) * t;
    if (detector == "gnn")
        return (1.5 * n + 0.5 * n * k + k + gnn_setup) * k +
               (4 * h1 * su + 5 * h1 + h2 * (h1 + su + 2) + 3 * h1 * h1) * k * t;
    if (detector == "mmse") return k * k * k + k * k * (n + 1) + n * k;
    if (detector == "remimo") {
        const double ds = in.re_mimo_ds;
        const double d_psi = ds + m + n;
        const double d_phi = d_psi + 1;
        const double d_v = d_phi / in.re_mimo_heads;
        const double d_k = d_v;
        return 2 * (n + 1) + (5 * ds * (2 * n + 1) + 4 * ds * ds + 2) * k +
               (0.5 * n * (k + 1) + m + 2 * d_phi * d_k + d_phi * d_v + d_phi * ds + d_phi * ds +
                0.625 * d_psi * d_psi + 1) *
                   k * t;
    }
    if (detector == "oampnet")
        return n * k * (k - 1) + (k * k * k + n * n * k + n * k * k + 2 * n * k + 12 * k + 4 * m * k + 2 * k + 8) * t;
    if (detector == "ep") return n * k * k + n * k + (k * k * k + k * k + 13 * k + 2 * m * k) * t;
    if (detector == "bpic") return n * k * k - 6 * k + (17 + 2 * m + n) * k * t;
    if (detector == "gpicnet")
        return (1.5 * n + 1.5 * n * k - 5 + gnn_setup) * k + (3 * n * k + 2 * m + 10 + gnn_round * l) * k * t;
    if (detector == "gepnet")
        return (2.5 * n + 1.5 * n * k + k + gnn_setup) * k +
               (k * k * k + k * k + 13 * k + 2 * k * m + gnn_round * k * l) * t;
    throw std::invalid_argument("no complexity formula for detector '" + detector + "'");
}

}  // namespace mimo
