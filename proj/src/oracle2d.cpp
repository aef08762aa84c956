#include "smaflow/oracle2d.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <numbers>

namespace smaflow {

namespace {

double k_full(std::size_t i, std::size_t n, double L) {
    long m = i <= n / 2 ? long(i) : long(i) - long(n);
    return 2 * std::numbers::pi * double(m) / L;
}

}  // namespace

FactorFlow2D::FactorFlow2D(std::size_t n1, std::size_t n2, double L1, double L2, std::vector<double> c,
                           double coef, double sign)
    : n1_(n1), n2_(n2), L1_(L1), L2_(L2), c_(std::move(c)), coef_(coef), sign_(sign) {
    if (c_.size() != n1 * n2) throw std::invalid_argument("factor coefficient has the wrong size");
    auto* b = fftw_alloc_complex(n1 * n2);
    buf_ = b;
    fwd_ = fftw_plan_dft_2d(int(n1), int(n2), b, b, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_2d(int(n1), int(n2), b, b, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FactorFlow2D::~FactorFlow2D() {
    fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
    fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
    fftw_free(static_cast<fftw_complex*>(buf_));
}

std::vector<double> FactorFlow2D::laplacian(const std::vector<double>& v) const {
    auto* b = static_cast<fftw_complex*>(buf_);
    const std::size_t N = size();
    for (std::size_t i = 0; i < N; ++i) {
        b[i][0] = v[i];
        b[i][1] = 0;
    }
    fftw_execute(static_cast<fftw_plan>(fwd_));
    for (std::size_t i = 0; i < n1_; ++i)
        for (std::size_t j = 0; j < n2_; ++j) {
            double k1 = k_full(i, n1_, L1_), k2 = k_full(j, n2_, L2_);
            double m = -0.25 * (k1 * k1 + k2 * k2) / double(N);
            b[i * n2_ + j][0] *= m;
            b[i * n2_ + j][1] *= m;
        }
    fftw_execute(static_cast<fftw_plan>(bwd_));
    std::vector<double> out(N);
    for (std::size_t i = 0; i < N; ++i) out[i] = b[i][0];
    return out;
}

std::vector<double> FactorFlow2D::speed(const std::vector<double>& v) const {
    std::vector<double> lap = laplacian(v);
    for (std::size_t i = 0; i < lap.size(); ++i) {
        double arg = 1.0 + sign_ * lap[i] / c_[i];
        if (!(arg > 0)) throw NumericalFailure("factor oracle left the admissible cone");
        lap[i] = coef_ * std::log(arg);
    }
    return lap;
}

std::vector<double> FactorFlow2D::step_rk4(const std::vector<double>& v, double dt) const {
    const std::size_t N = v.size();
    auto shifted = [&](const std::vector<double>& k, double a) {
        std::vector<double> o(N);
        for (std::size_t i = 0; i < N; ++i) o[i] = v[i] + a * k[i];
        return o;
    };
    auto k1 = speed(v);
    auto k2 = speed(shifted(k1, 0.5 * dt));
    auto k3 = speed(shifted(k2, 0.5 * dt));
    auto k4 = speed(shifted(k3, dt));
    std::vector<double> o(N);
    for (std::size_t i = 0; i < N; ++i) o[i] = v[i] + dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    return o;
}

SplitParts split_parts(const RealField& u) {
    const TorusGrid& g = u.grid();
    const std::size_t nz = g.n[0] * g.n[1], nw = g.n[2] * g.n[3];
    SplitParts p{std::vector<double>(nz, 0.0), std::vector<double>(nw, 0.0), 0.0};
    double total = 0;
    for (std::size_t a = 0; a < nz; ++a)
        for (std::size_t b = 0; b < nw; ++b) {
            p.plus[a] += u[a * nw + b] / double(nw);
            p.minus[b] += u[a * nw + b] / double(nz);
            total += u[a * nw + b];
        }
    total /= double(g.size());
    for (auto& x : p.minus) x -= total;
    for (std::size_t a = 0; a < nz; ++a)
        for (std::size_t b = 0; b < nw; ++b)
            p.residual = std::max(p.residual, std::abs(u[a * nw + b] - p.plus[a] - p.minus[b]));
    return p;
}

SplitOracle::SplitOracle(const Background& bg, double beta, const RealField& u0) {
    if (bg.kind != BackgroundKind::kahler_product)
        throw ConfigError("the factor oracle needs a Kahler product background");
    SplitParts p = split_parts(u0);
    if (p.residual > 1e-10 * (1.0 + sup_norm(u0)))
        throw ConfigError("initial data is not split: sup |u0 - (u+ + u-)| = " + std::to_string(p.residual));
    const TorusGrid& g = u0.grid();
    const std::size_t nz = g.n[0] * g.n[1], nw = g.n[2] * g.n[3];
    std::vector<double> gz(nz), hw(nw);
    for (std::size_t a = 0; a < nz; ++a) gz[a] = bg.g[a * nw];
    for (std::size_t b = 0; b < nw; ++b) hw[b] = bg.h[b];
    z = std::make_unique<FactorFlow2D>(g.n[0], g.n[1], g.L[0], g.L[1], gz, beta, 1.0);
    w = std::make_unique<FactorFlow2D>(g.n[2], g.n[3], g.L[2], g.L[3], hw, -1.0, -1.0);
    plus = std::move(p.plus);
    minus = std::move(p.minus);
}

void SplitOracle::advance(double dt) {
    plus = z->step_rk4(plus, dt);
    minus = w->step_rk4(minus, dt);
}

double SplitOracle::distance(const RealField& u) const {
    const std::size_t nz = plus.size(), nw = minus.size();
    double d = 0;
    for (std::size_t a = 0; a < nz; ++a)
        for (std::size_t b = 0; b < nw; ++b) d = std::max(d, std::abs(u[a * nw + b] - plus[a] - minus[b]));
    return d;
}

}  // namespace smaflow
