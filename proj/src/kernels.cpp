#include "smaflow/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smaflow::kernels {

void lambda_eta_serial(std::size_t n, const double* uzz, const double* uww, const double* g,
                       const double* h, double* lam, double* eta) {
    for (std::size_t i = 0; i < n; ++i) {
        lam[i] = 1.0 + uzz[i] / g[i];
        eta[i] = 1.0 - uww[i] / h[i];
    }
}

void lambda_eta_omp(std::size_t n, const double* uzz, const double* uww, const double* g,
                    const double* h, double* lam, double* eta) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        lam[i] = 1.0 + uzz[i] / g[i];
        eta[i] = 1.0 - uww[i] / h[i];
    }
}

void speed_serial(std::size_t n, double beta, const double* lam, const double* eta, const double* f,
                  double* speed) {
    for (std::size_t i = 0; i < n; ++i) {
        speed[i] = beta * std::log(lam[i]) - std::log(eta[i]);
        if (f) speed[i] -= f[i];
    }
}

void speed_omp(std::size_t n, double beta, const double* lam, const double* eta, const double* f,
               double* speed) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) {
        speed[i] = beta * std::log(lam[i]) - std::log(eta[i]);
        if (f) speed[i] -= f[i];
    }
}

void axpy_serial(std::size_t n, double a, const double* x, const double* y, double* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + a * x[i];
}

void axpy_omp(std::size_t n, double a, const double* x, const double* y, double* out) {
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + a * x[i];
}

void rk4_combine_serial(std::size_t n, double dt, const double* u, const double* k1, const double* k2,
                        const double* k3, const double* k4, double* out) {
    const double c = dt / 6.0;
    for (std::size_t i = 0; i < n; ++i) out[i] = u[i] + c * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

void rk4_combine_omp(std::size_t n, double dt, const double* u, const double* k1, const double* k2,
                     const double* k3, const double* k4, double* out) {
    const double c = dt / 6.0;
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) out[i] = u[i] + c * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

// pairwise, blocks of 128
double sum_serial(const double* x, std::size_t n) {
    if (n <= 128) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t h = n / 2;
    return sum_serial(x, h) + sum_serial(x + h, n - h);
}

double sum_omp(const double* x, std::size_t n) {
    const std::size_t chunks = 64, len = (n + chunks - 1) / chunks;
    double part[chunks] = {};
#pragma omp parallel for schedule(static)
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t a = std::min(n, c * len), b = std::min(n, a + len);
        part[c] = sum_serial(x + a, b - a);
    }
    return sum_serial(part, chunks);
}

double min_serial(const double* x, std::size_t n) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::min(m, x[i]);
    return m;
}

double min_omp(const double* x, std::size_t n) {
    double m = std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(min : m) schedule(static)
    for (std::size_t i = 0; i < n; ++i) m = std::min(m, x[i]);
    return m;
}

double max_serial(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

double max_omp(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
#pragma omp parallel for reduction(max : m) schedule(static)
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
    return m;
}

double max_ratio_serial(std::size_t n, double a, const double* b, const double* c) {
    double m = 0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, a / (b[i] * c[i]));
    return m;
}

double max_ratio_omp(std::size_t n, double a, const double* b, const double* c) {
    double m = 0;
#pragma omp parallel for reduction(max : m) schedule(static)
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, a / (b[i] * c[i]));
    return m;
}

}  // namespace smaflow::kernels
