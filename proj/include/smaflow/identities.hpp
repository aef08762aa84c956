#pragma once

#include "smaflow/flow.hpp"
#include "smaflow/geometry.hpp"
#include "smaflow/spectral.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace smaflow {

// value and time derivative, the latter obtained by substituting the flow speed
struct Jet {
    ComplexField v, d;
};

Jet jet_const(const RealField& f);
Jet jet_const(const ComplexField& f);
Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);
Jet operator+(const Jet& a, cplx s);
Jet operator+(cplx s, const Jet& a);
Jet operator-(const Jet& a, cplx s);
Jet operator-(cplx s, const Jet& a);
Jet operator*(const Jet& a, cplx s);
Jet operator*(cplx s, const Jet& a);
Jet operator/(const Jet& a, cplx s);
Jet operator/(cplx s, const Jet& a);
Jet log(const Jet& a);
Jet sqrt(const Jet& a);
Jet conj(const Jet& a);
Jet abs2(const Jet& a);
Jet re(const Jet& a);
Jet derivative(const Jet& a, DerivOp op);

// u-derivatives as jets, L = a d_z d_zbar + b d_w d_wbar, H = d_t - L
class JetCalculus {
public:
    JetCalculus(const RealField& u, const RealField& speed, RealField a, RealField b);

    Jet U(DerivOp op) const;
    ComplexField L(const ComplexField& f) const;
    ComplexField H(const Jet& e) const;
    const TorusGrid& grid() const { return a_.grid(); }

private:
    Spectrum su_, sf_;
    RealField a_, b_;
};

// manifold slice: lambda = 1 + u_zzbar/g, eta = 1 - u_wwbar/h, speed beta log lambda - log eta
JetCalculus manifold_calculus(const RealField& u, const Background& bg, double beta);

enum class Expr { u, u_t, lambda, eta, log_lambda, log_eta, inv_lambda, inv_eta, u_zw, abs2_u_zwbar, mixed_norm };

Expr parse_expr(const std::string& s);
std::string to_string(Expr e);

// d/dt of expr along the flow, purely spatial
RealField material_derivative(Expr e, const RealField& u, const Background& bg, double beta);

enum class IdentityKind { equality, inequality, informational };

struct IdentityResult {
    std::string name;
    std::string equation;
    IdentityKind kind = IdentityKind::equality;
    double residual = 0;   // equality: sup|lhs - rhs| / scale; inequality: max(lhs - rhs) / scale
    double tolerance = 1e-8;
    double scale = 0;
    bool pass = true;
    nlohmann::json inputs;
};

struct VerifyOptions {
    double tolerance = 1e-8;
    std::string tamper;  // identity whose right-hand side gets multiplied by 1 + 1e-3
    double epsilon = 0.5, delta = 0.5;  // B23
};

std::vector<IdentityResult> verify_A(const RealField& u, const Background& bg, double beta,
                                     const VerifyOptions& opt = {});
std::vector<IdentityResult> verify_B(const RealField& u, const Background& bg, double beta,
                                     const VerifyOptions& opt = {});

// u = a|z|^2 - b|w|^2 + p with p periodic
struct LocalFixture {
    double a = 1, b = 1;
    RealField p;
};

std::vector<IdentityResult> verify_C(const LocalFixture& fx, double beta, const VerifyOptions& opt = {});

struct Band {
    int lo = 1, hi = 1;
};

// sum of random cosines with integer wave vectors k, lo <= |k|^2 <= hi; sup|f| <= amplitude
RealField random_test_field(const TorusGrid& grid, std::uint64_t seed, double amplitude, Band band,
                            int modes = 12);
// same, then checks lambda, eta > 0 on bg
RealField random_test_field(const Background& bg, std::uint64_t seed, double amplitude, Band band,
                            int modes = 12);

struct IdentitySuiteOptions {
    std::vector<double> betas{0.3, 0.7, 1.0};
    std::vector<std::size_t> resolutions{16, 32};
    std::uint64_t seed = 7;
    double amplitude = 0.01;
    Band band{1, 4};
    double local_amplitude = 0.01;
    double tolerance = 1e-8;
    double convergence_ratio = 10.0;
    double floor = 1e-12;
    double tail_tolerance = 1e-8;
    std::string tamper;
    // background on each grid; defaults to the pluriclosed cosine background
    double c_g = 1, c_h = 1;
    std::vector<CosineMode> modes{{1, 1, 0.3}};
};

struct IdentityEntry {
    std::string name, equation, status;  // status: pass | fail | under_resolved | informational
    IdentityKind kind;
    double beta;
    std::size_t n;
    double residual, tolerance, coarse_residual, tail;
    bool pass;
};

struct IdentitySuiteReport {
    std::vector<IdentityEntry> entries;
    bool all_pass = true;
    double seconds = 0;
    nlohmann::json to_json(std::uint64_t seed) const;
};

IdentitySuiteReport run_identity_suite(const IdentitySuiteOptions& opt);

}  // namespace smaflow
