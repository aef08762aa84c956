#pragma once

#include "smaflow/grid.hpp"

namespace smaflow {

// Counts of dz, dzbar, dw, dwbar applied. Composition adds counts.
struct DerivOp {
    int z = 0, zb = 0, w = 0, wb = 0;
    bool operator==(const DerivOp&) const = default;
};

inline DerivOp operator*(DerivOp a, DerivOp b) { return {a.z + b.z, a.zb + b.zb, a.w + b.w, a.wb + b.wb}; }

namespace d {
inline constexpr DerivOp id{0, 0, 0, 0};
inline constexpr DerivOp z{1, 0, 0, 0};
inline constexpr DerivOp zb{0, 1, 0, 0};
inline constexpr DerivOp w{0, 0, 1, 0};
inline constexpr DerivOp wb{0, 0, 0, 1};
inline constexpr DerivOp zzb{1, 1, 0, 0};
inline constexpr DerivOp wwb{0, 0, 1, 1};
inline constexpr DerivOp zw{1, 0, 1, 0};
inline constexpr DerivOp zwb{1, 0, 0, 1};
inline constexpr DerivOp zbw{0, 1, 1, 0};
}  // namespace d

// Normalized Fourier coefficients of a field; derivatives are multipliers on them.
class Spectrum {
public:
    explicit Spectrum(const ComplexField& f);
    explicit Spectrum(const RealField& f);

    ComplexField apply(DerivOp op) const;
    // a * f_zzbar + b * f_wwbar with pointwise coefficient fields
    ComplexField apply_factor_laplacians(const RealField& a, const RealField& b) const;
    const TorusGrid& grid() const { return grid_; }
    const cplx* coeffs() const { return coef_.data(); }

private:
    TorusGrid grid_;
    ComplexField::Storage coef_;
};

ComplexField derivative(const RealField& f, DerivOp op);
ComplexField derivative(const ComplexField& f, DerivOp op);

// Real fields u -> u_zzbar, u_wwbar through the real-to-complex transform
void factor_laplacians(const RealField& u, RealField& u_zzb, RealField& u_wwb);

enum class Factor { z, w };

// solves u_zzbar = rhs (or u_wwbar = rhs) with zero slice means
RealField poisson_solve_factor(const RealField& rhs, Factor factor);

// exp(-alpha (|k|/k_max)^order) damping, applied per direction
RealField spectral_filter(const RealField& f, double alpha = 36.0, int order = 36);

// fraction of coefficient magnitude with some |k_i| above frac * n_i/2
double spectral_tail(const RealField& f, double frac = 2.0 / 3.0);

// first-derivative and full wavenumbers (2 pi m / L); Nyquist zeroed in the first
double wavenumber(const TorusGrid& g, int axis, std::size_t i, bool first_derivative);

}  // namespace smaflow
