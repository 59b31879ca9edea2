#include "mimo/gnn/params.hpp"

#include <cmath>

#include "mimo/core/rng.hpp"

namespace mimo {

namespace {

Affine zero_affine(int out, int in) {
    return {Eigen::MatrixXd::Zero(out, in), Eigen::MatrixXd::Zero(out, 1)};
}

}  // namespace

GnnParams GnnParams::zeros(const GnnDims& d) {
    GnnParams p;
    p.dims = d;
    p.init = zero_affine(d.message, 3);
    p.factor1 = zero_affine(d.hidden1, 2 * d.message + 2);
    p.factor2 = zero_affine(d.hidden2, d.hidden1);
    p.factor3 = zero_affine(d.message, d.hidden2);
    p.gru_wi = Eigen::MatrixXd::Zero(3 * d.hidden1, d.message + 2);
    p.gru_wh = Eigen::MatrixXd::Zero(3 * d.hidden1, d.hidden1);
    p.gru_bi = Eigen::MatrixXd::Zero(3 * d.hidden1, 1);
    p.gru_bh = Eigen::MatrixXd::Zero(3 * d.hidden1, 1);
    p.output = zero_affine(d.message, d.hidden1);
    p.readout1 = zero_affine(d.hidden1, d.message);
    p.readout2 = zero_affine(d.hidden2, d.hidden1);
    p.readout3 = zero_affine(d.alphabet, d.hidden2);
    return p;
}

GnnParams GnnParams::random(const GnnDims& dims, std::uint64_t seed) {
    GnnParams p = zeros(dims);
    RngStream rng(seed, 0x6e6e);
    p.for_each([&](const std::string& name, Eigen::MatrixXd& t) {
        // Biases (single-column tensors named *.b / *.b?) stay zero.
        if (name.ends_with(".b") || name.ends_with(".bi") || name.ends_with(".bh")) return;
        const double limit = std::sqrt(3.0 / static_cast<double>(t.cols()));
        for (Eigen::Index j = 0; j < t.cols(); ++j)
            for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = rng.uniform(-limit, limit);
    });
    return p;
}

void GnnParams::for_each(const std::function<void(const std::string&, Eigen::MatrixXd&)>& fn) {
    fn("init.w", init.w);
    fn("init.b", init.b);
    fn("factor1.w", factor1.w);
    fn("factor1.b", factor1.b);
    fn("factor2.w", factor2.w);
    fn("factor2.b", factor2.b);
    fn("factor3.w", factor3.w);
    fn("factor3.b", factor3.b);
    fn("gru.wi", gru_wi);
    fn("gru.wh", gru_wh);
    fn("gru.bi", gru_bi);
    fn("gru.bh", gru_bh);
    fn("output.w", output.w);
    fn("output.b", output.b);
    fn("readout1.w", readout1.w);
    fn("readout1.b", readout1.b);
    fn("readout2.w", readout2.w);
    fn("readout2.b", readout2.b);
    fn("readout3.w", readout3.w);
    fn("readout3.b", readout3.b);
}

void GnnParams::for_each(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& fn) const {
    const_cast<GnnParams*>(this)->for_each(
        [&](const std::string& name, Eigen::MatrixXd& t) { fn(name, static_cast<const Eigen::MatrixXd&>(t)); });
}

std::size_t GnnParams::parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Eigen::MatrixXd& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
}

void zip_tensors(GnnParams& a, const GnnParams& b,
                 const std::function<void(Eigen::MatrixXd&, const Eigen::MatrixXd&)>& fn) {
    std::vector<const Eigen::MatrixXd*> rhs;
    b.for_each([&](const std::string&, const Eigen::MatrixXd& t) { rhs.push_back(&t); });
    std::size_t i = 0;
    a.for_each([&](const std::string&, Eigen::MatrixXd& t) { fn(t, *rhs[i++]); });
}

GnnParams& GnnParams::operator+=(const GnnParams& other) {
    zip_tensors(*this, other, [](Eigen::MatrixXd& x, const Eigen::MatrixXd& y) { x += y; });
    return *this;
}

GnnParams& GnnParams::operator*=(double s) {
    for_each([&](const std::string&, Eigen::MatrixXd& t) { t *= s; });
    return *this;
}

double GnnParams::squared_norm() const {
    double s = 0.0;
    for_each([&](const std::string&, const Eigen::MatrixXd& t) { s += t.squaredNorm(); });
    return s;
}

bool GnnParams::all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const Eigen::MatrixXd& t) { ok = ok && t.allFinite(); });
    return ok;
}

}  // namespace mimo
