#include "smaflow/grid.hpp"
#include "smaflow/kernels.hpp"

#include <atomic>
#include <cmath>
#include <limits>

namespace smaflow {

namespace exec {
namespace {
std::atomic<bool> g_deterministic{true};
}
void set_deterministic(bool on) { g_deterministic = on; }
bool deterministic() { return g_deterministic; }
}  // namespace exec

TorusGrid make_grid(std::array<std::size_t, 4> dims, std::array<double, 4> periods) {
    for (int a = 0; a < 4; ++a) {
        std::size_t n = dims[a];
        if (n < 8 || (n & (n - 1)) != 0)
            throw ConfigError("grid dimension " + std::to_string(a + 1) + " = " + std::to_string(n) +
                              " is not a power of two >= 8");
        if (!(periods[a] > 0) || !std::isfinite(periods[a]))
            throw ConfigError("grid period " + std::to_string(a + 1) + " must be positive");
    }
    return TorusGrid{dims, periods};
}

RealField real(const ComplexField& f) { return map(f, [](cplx z) { return z.real(); }); }
RealField imag(const ComplexField& f) { return map(f, [](cplx z) { return z.imag(); }); }
ComplexField conj(const ComplexField& f) { return map(f, [](cplx z) { return std::conj(z); }); }
ComplexField to_complex(const RealField& f) { return map(f, [](double x) { return cplx(x, 0.0); }); }
RealField abs2(const ComplexField& f) { return map(f, [](cplx z) { return std::norm(z); }); }
RealField abs(const ComplexField& f) { return map(f, [](cplx z) { return std::abs(z); }); }
RealField abs(const RealField& f) { return map(f, [](double x) { return std::fabs(x); }); }
RealField log(const RealField& f) { return map(f, [](double x) { return std::log(x); }); }
RealField exp(const RealField& f) { return map(f, [](double x) { return std::exp(x); }); }
RealField sqrt(const RealField& f) { return map(f, [](double x) { return std::sqrt(x); }); }
RealField pow(const RealField& f, double p) { return map(f, [p](double x) { return std::pow(x, p); }); }

FieldStats stats(const RealField& f) {
    if (f.empty()) throw std::invalid_argument("stats of an empty field");
    if (!all_finite(f)) throw std::invalid_argument("stats of a field with non-finite entries");
    FieldStats s;
    s.min = f[0];
    s.max = f[0];
    for (std::size_t i = 1; i < f.size(); ++i) {
        if (f[i] < s.min) {
            s.min = f[i];
            s.argmin = i;
        }
        if (f[i] > s.max) {
            s.max = f[i];
            s.argmax = i;
        }
    }
    s.sup_norm = std::max(std::fabs(s.min), std::fabs(s.max));
    s.mean = mean(f);
    // rounding in the sum can push the mean a hair outside [min, max]
    s.mean = std::min(std::max(s.mean, s.min), s.max);
    return s;
}

double mean(const RealField& f) {
    if (f.empty()) throw std::invalid_argument("mean of an empty field");
    double sum = exec::deterministic() ? kernels::sum_serial(f.data(), f.size())
                                       : kernels::sum_omp(f.data(), f.size());
    return sum / double(f.size());
}

double sup_norm(const RealField& f) {
    double m = 0;
    for (double v : f) m = std::max(m, std::fabs(v));
    return m;
}

double sup_norm(const ComplexField& f) {
    double m = 0;
    for (cplx v : f) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(const RealField& f) {
    for (double v : f)
        if (!std::isfinite(v)) return false;
    return true;
}

bool all_finite(const ComplexField& f) {
    for (cplx v : f)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
}

}  // namespace smaflow
