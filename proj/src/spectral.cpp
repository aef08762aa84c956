#include "smaflow/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace smaflow {

namespace {

std::string fmt_g(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", v);
    return b;
}

struct Plans {
    fftw_plan fwd = nullptr, bwd = nullptr, r2c = nullptr, c2r = nullptr;
    std::size_t nhalf = 0;  // n4/2+1
    ~Plans() {
        for (fftw_plan p : {fwd, bwd, r2c, c2r})
            if (p) fftw_destroy_plan(p);
    }
};

using Key = std::array<std::size_t, 4>;

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

const Plans& plans_for(const TorusGrid& g) {
    static std::map<Key, std::unique_ptr<Plans>> cache;
    std::lock_guard<std::mutex> lock(plan_mutex());
    auto it = cache.find(g.n);
    if (it != cache.end()) return *it->second;

    auto p = std::make_unique<Plans>();
    int dims[4] = {int(g.n[0]), int(g.n[1]), int(g.n[2]), int(g.n[3])};
    std::size_t N = g.size();
    p->nhalf = g.n[3] / 2 + 1;
    auto* a = fftw_alloc_complex(N);
    auto* b = fftw_alloc_complex(N);
    auto* r = fftw_alloc_real(N);
    p->fwd = fftw_plan_dft(4, dims, a, b, FFTW_FORWARD, FFTW_ESTIMATE);
    p->bwd = fftw_plan_dft(4, dims, a, b, FFTW_BACKWARD, FFTW_ESTIMATE);
    p->r2c = fftw_plan_dft_r2c(4, dims, r, a, FFTW_ESTIMATE);
    p->c2r = fftw_plan_dft_c2r(4, dims, a, r, FFTW_ESTIMATE);
    fftw_free(a);
    fftw_free(b);
    fftw_free(r);
    if (!p->fwd || !p->bwd || !p->r2c || !p->c2r) throw NumericalFailure("FFTW planning failed");
    auto& ref = *p;
    cache.emplace(g.n, std::move(p));
    return ref;
}

fftw_complex* fc(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }
fftw_complex* fc(const cplx* p) { return reinterpret_cast<fftw_complex*>(const_cast<cplx*>(p)); }

long signed_mode(std::size_t i, std::size_t n) { return i <= n / 2 ? long(i) : long(i) - long(n); }

// per-factor multiplier table of dz^a dzb^b (or dw^a dwb^b) on an (n_a x n_b) plane
std::vector<cplx> factor_table(const TorusGrid& g, int ax, int a, int b) {
    const std::size_t n0 = g.n[ax], n1 = g.n[ax + 1];
    std::vector<cplx> t(n0 * n1);
    const int p = std::min(a, b), r = a - b;
    for (std::size_t i = 0; i < n0; ++i) {
        const double k0 = wavenumber(g, ax, i, false), k0d = wavenumber(g, ax, i, true);
        for (std::size_t j = 0; j < n1; ++j) {
            const double k1 = wavenumber(g, ax + 1, j, false), k1d = wavenumber(g, ax + 1, j, true);
            cplx m = 1.0;
            const double lap = -0.25 * (k0 * k0 + k1 * k1);
            for (int q = 0; q < p; ++q) m *= lap;
            const cplx dz = 0.5 * cplx(k1d, k0d);    // (i k0 + k1)/2
            const cplx dzb = 0.5 * cplx(-k1d, k0d);  // (i k0 - k1)/2
            for (int q = 0; q < r; ++q) m *= dz;
            for (int q = 0; q < -r; ++q) m *= dzb;
            t[i * n1 + j] = m;
        }
    }
    return t;
}

}  // namespace

double wavenumber(const TorusGrid& g, int axis, std::size_t i, bool first_derivative) {
    const std::size_t n = g.n[axis];
    if (first_derivative && i == n / 2) return 0.0;
    return 2.0 * std::numbers::pi * double(signed_mode(i, n)) / g.L[axis];
}

Spectrum::Spectrum(const ComplexField& f) : grid_(f.grid()), coef_(f.size()) {
    const Plans& p = plans_for(grid_);
    fftw_execute_dft(p.fwd, fc(f.data()), fc(coef_.data()));
    const double s = 1.0 / double(f.size());
    for (auto& c : coef_) c *= s;
}

Spectrum::Spectrum(const RealField& f) : Spectrum(to_complex(f)) {}

ComplexField Spectrum::apply(DerivOp op) const {
    const TorusGrid& g = grid_;
    ComplexField out(g);
    if (op == d::id) {
        ComplexField::Storage tmp(coef_);
        fftw_execute_dft(plans_for(g).bwd, fc(tmp.data()), fc(out.data()));
        return out;
    }
    const auto zt = factor_table(g, 0, op.z, op.zb);
    const auto wt = factor_table(g, 2, op.w, op.wb);
    ComplexField::Storage tmp(coef_.size());
    const std::size_t nz = g.n[0] * g.n[1], nw = g.n[2] * g.n[3];
#pragma omp parallel for schedule(static)
    for (std::size_t a = 0; a < nz; ++a)
        for (std::size_t b = 0; b < nw; ++b) tmp[a * nw + b] = coef_[a * nw + b] * zt[a] * wt[b];
    fftw_execute_dft(plans_for(g).bwd, fc(tmp.data()), fc(out.data()));
    return out;
}

ComplexField Spectrum::apply_factor_laplacians(const RealField& a, const RealField& b) const {
    ComplexField fz = apply(d::zzb);
    ComplexField fw = apply(d::wwb);
    for (std::size_t i = 0; i < fz.size(); ++i) fz[i] = a[i] * fz[i] + b[i] * fw[i];
    return fz;
}

ComplexField derivative(const ComplexField& f, DerivOp op) { return Spectrum(f).apply(op); }
ComplexField derivative(const RealField& f, DerivOp op) { return Spectrum(f).apply(op); }

void factor_laplacians(const RealField& u, RealField& u_zzb, RealField& u_wwb) {
    const TorusGrid& g = u.grid();
    const Plans& p = plans_for(g);
    const std::size_t nh = p.nhalf;
    const std::size_t M = g.n[0] * g.n[1] * g.n[2] * nh;
    ComplexField::Storage spec(M), work(M);
    fftw_execute_dft_r2c(p.r2c, const_cast<double*>(u.data()), fc(spec.data()));

    std::vector<double> lz(g.n[0] * g.n[1]), lw(g.n[2] * nh);
    for (std::size_t i = 0; i < g.n[0]; ++i)
        for (std::size_t j = 0; j < g.n[1]; ++j) {
            double k0 = wavenumber(g, 0, i, false), k1 = wavenumber(g, 1, j, false);
            lz[i * g.n[1] + j] = -0.25 * (k0 * k0 + k1 * k1);
        }
    for (std::size_t i = 0; i < g.n[2]; ++i)
        for (std::size_t j = 0; j < nh; ++j) {
            double k0 = wavenumber(g, 2, i, false), k1 = wavenumber(g, 3, j, false);
            lw[i * nh + j] = -0.25 * (k0 * k0 + k1 * k1);
        }
    const double s = 1.0 / double(g.size());
    const std::size_t nz = g.n[0] * g.n[1], nwh = g.n[2] * nh;

    if (!(u_zzb.grid() == g) || u_zzb.size() != g.size()) u_zzb = RealField(g);
    if (!(u_wwb.grid() == g) || u_wwb.size() != g.size()) u_wwb = RealField(g);

#pragma omp parallel for schedule(static)
    for (std::size_t a = 0; a < nz; ++a)
        for (std::size_t b = 0; b < nwh; ++b) work[a * nwh + b] = spec[a * nwh + b] * (lz[a] * s);
    fftw_execute_dft_c2r(p.c2r, fc(work.data()), u_zzb.data());

#pragma omp parallel for schedule(static)
    for (std::size_t a = 0; a < nz; ++a)
        for (std::size_t b = 0; b < nwh; ++b) work[a * nwh + b] = spec[a * nwh + b] * (lw[b] * s);
    fftw_execute_dft_c2r(p.c2r, fc(work.data()), u_wwb.data());
}

RealField poisson_solve_factor(const RealField& rhs, Factor factor) {
    const TorusGrid& g = rhs.grid();
    const int ax = factor == Factor::z ? 0 : 2;
    const double scale = sup_norm(rhs);
    // slice means over the solved factor, one per point of the other factor
    const std::size_t ns = g.n[ax] * g.n[ax + 1];
    const int ox = factor == Factor::z ? 2 : 0;
    std::vector<double> means(g.n[ox] * g.n[ox + 1], 0.0);
    for (std::size_t i1 = 0; i1 < g.n[0]; ++i1)
        for (std::size_t i2 = 0; i2 < g.n[1]; ++i2)
            for (std::size_t i3 = 0; i3 < g.n[2]; ++i3)
                for (std::size_t i4 = 0; i4 < g.n[3]; ++i4) {
                    std::size_t o = factor == Factor::z ? i3 * g.n[3] + i4 : i1 * g.n[1] + i2;
                    means[o] += rhs[g.index(i1, i2, i3, i4)];
                }
    double worst = 0;
    for (double m : means) worst = std::max(worst, std::fabs(m / double(ns)));
    if (worst > 1e-10 * scale + 1e-14)
        throw IncompatibleData("incompatible Poisson data: slice mean " + fmt_g(worst) +
                               " exceeds 1e-10 * |rhs|");
    if (scale == 0.0) return RealField(g, 0.0);

    Spectrum s(rhs);
    ComplexField::Storage tmp(g.size());
    const std::size_t nz = g.n[0] * g.n[1], nw = g.n[2] * g.n[3];
    std::vector<double> inv(factor == Factor::z ? nz : nw);
    for (std::size_t i = 0; i < g.n[ax]; ++i)
        for (std::size_t j = 0; j < g.n[ax + 1]; ++j) {
            double k0 = wavenumber(g, ax, i, false), k1 = wavenumber(g, ax + 1, j, false);
            double lap = -0.25 * (k0 * k0 + k1 * k1);
            inv[i * g.n[ax + 1] + j] = lap == 0.0 ? 0.0 : 1.0 / lap;
        }
    for (std::size_t a = 0; a < nz; ++a)
        for (std::size_t b = 0; b < nw; ++b)
            tmp[a * nw + b] = s.coeffs()[a * nw + b] * (factor == Factor::z ? inv[a] : inv[b]);
    ComplexField out(g);
    fftw_execute_dft(plans_for(g).bwd, fc(tmp.data()), fc(out.data()));
    return real(out);
}

RealField spectral_filter(const RealField& f, double alpha, int order) {
    const TorusGrid& g = f.grid();
    Spectrum s(f);
    ComplexField::Storage tmp(g.size());
    std::array<std::vector<double>, 4> damp;
    for (int a = 0; a < 4; ++a) {
        damp[a].resize(g.n[a]);
        for (std::size_t i = 0; i < g.n[a]; ++i) {
            double r = std::fabs(double(signed_mode(i, g.n[a]))) / double(g.n[a] / 2);
            damp[a][i] = std::exp(-alpha * std::pow(r, order));
        }
    }
    for (std::size_t i1 = 0; i1 < g.n[0]; ++i1)
        for (std::size_t i2 = 0; i2 < g.n[1]; ++i2)
            for (std::size_t i3 = 0; i3 < g.n[2]; ++i3)
                for (std::size_t i4 = 0; i4 < g.n[3]; ++i4) {
                    std::size_t k = g.index(i1, i2, i3, i4);
                    tmp[k] = s.coeffs()[k] * (damp[0][i1] * damp[1][i2] * damp[2][i3] * damp[3][i4]);
                }
    ComplexField out(g);
    fftw_execute_dft(plans_for(g).bwd, fc(tmp.data()), fc(out.data()));
    return real(out);
}

double spectral_tail(const RealField& f, double frac) {
    const TorusGrid& g = f.grid();
    Spectrum s(f);
    double total = 0, tail = 0;
    for (std::size_t i1 = 0; i1 < g.n[0]; ++i1)
        for (std::size_t i2 = 0; i2 < g.n[1]; ++i2)
            for (std::size_t i3 = 0; i3 < g.n[2]; ++i3)
                for (std::size_t i4 = 0; i4 < g.n[3]; ++i4) {
                    double m = std::abs(s.coeffs()[g.index(i1, i2, i3, i4)]);
                    total += m;
                    std::array<std::size_t, 4> idx{i1, i2, i3, i4};
                    bool high = false;
                    for (int a = 0; a < 4; ++a)
                        high = high || std::fabs(double(signed_mode(idx[a], g.n[a]))) > frac * double(g.n[a] / 2);
                    if (high) tail += m;
                }
    return total > 0 ? tail / total : 0.0;
}

}  // namespace smaflow
