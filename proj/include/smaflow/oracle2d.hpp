#pragma once

#include "smaflow/geometry.hpp"

#include <cstddef>
#include <memory>
#include <vector>

namespace smaflow {

// Flow on one factor torus: dv/dt = coef * log(1 + sign * v_{aabar} / c), row-major n1 x n2.
// Uses its own FFTW plans and RK4; shares no code with the 4D solver.
class FactorFlow2D {
public:
    FactorFlow2D(std::size_t n1, std::size_t n2, double L1, double L2, std::vector<double> c, double coef,
                 double sign);
    ~FactorFlow2D();
    FactorFlow2D(const FactorFlow2D&) = delete;
    FactorFlow2D& operator=(const FactorFlow2D&) = delete;

    // quarter Laplacian 1/4 (d1^2 + d2^2)
    std::vector<double> laplacian(const std::vector<double>& v) const;
    std::vector<double> speed(const std::vector<double>& v) const;
    std::vector<double> step_rk4(const std::vector<double>& v, double dt) const;
    std::size_t size() const { return n1_ * n2_; }

private:
    std::size_t n1_, n2_;
    double L1_, L2_;
    std::vector<double> c_;
    double coef_, sign_;
    void* fwd_ = nullptr;
    void* bwd_ = nullptr;
    void* buf_ = nullptr;
};

// u = u_plus(x1,x2) + u_minus(x3,x4); u_minus has zero mean
struct SplitParts {
    std::vector<double> plus, minus;
    double residual = 0;  // sup |u - (plus + minus)|
};

SplitParts split_parts(const RealField& u);

// z-factor (coef beta, sign +1, c = g) and w-factor (coef -1, sign -1, c = h) oracles
struct SplitOracle {
    SplitOracle(const Background& bg, double beta, const RealField& u0);
    void advance(double dt);
    // sup |u - (plus + minus)|
    double distance(const RealField& u) const;

    std::unique_ptr<FactorFlow2D> z, w;
    std::vector<double> plus, minus;
};

}  // namespace smaflow
