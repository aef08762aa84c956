#pragma once

#include <cstddef>

// Pointwise kernels of the flow loop. Every kernel has a plain serial form,
// kept as the reference, and an OpenMP form used outside deterministic mode.
namespace smaflow::kernels {

// lam = 1 + uzz/g, eta = 1 - uww/h
void lambda_eta_serial(std::size_t n, const double* uzz, const double* uww, const double* g,
                       const double* h, double* lam, double* eta);
void lambda_eta_omp(std::size_t n, const double* uzz, const double* uww, const double* g,
                    const double* h, double* lam, double* eta);

// speed = beta log(lam) - log(eta) - f   (f may be null)
void speed_serial(std::size_t n, double beta, const double* lam, const double* eta, const double* f,
                  double* speed);
void speed_omp(std::size_t n, double beta, const double* lam, const double* eta, const double* f,
               double* speed);

// out = y + a*x
void axpy_serial(std::size_t n, double a, const double* x, const double* y, double* out);
void axpy_omp(std::size_t n, double a, const double* x, const double* y, double* out);

// out = u + dt/6 (k1 + 2k2 + 2k3 + k4)
void rk4_combine_serial(std::size_t n, double dt, const double* u, const double* k1, const double* k2,
                        const double* k3, const double* k4, double* out);
void rk4_combine_omp(std::size_t n, double dt, const double* u, const double* k1, const double* k2,
                     const double* k3, const double* k4, double* out);

double sum_serial(const double* x, std::size_t n);
double sum_omp(const double* x, std::size_t n);
double min_serial(const double* x, std::size_t n);
double min_omp(const double* x, std::size_t n);
double max_serial(const double* x, std::size_t n);
double max_omp(const double* x, std::size_t n);

// max over points of a/(b*c): the coefficient maxima entering the CFL radius
double max_ratio_serial(std::size_t n, double a, const double* b, const double* c);
double max_ratio_omp(std::size_t n, double a, const double* b, const double* c);

}  // namespace smaflow::kernels
