#pragma once

#include "smaflow/grid.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace smaflow {

enum class BackgroundKind { kahler_product, pluriclosed_general };

std::string to_string(BackgroundKind k);

struct Background {
    RealField g, h;
    BackgroundKind kind = BackgroundKind::kahler_product;
    nlohmann::json descriptor;

    const TorusGrid& grid() const { return g.grid(); }
};

struct CosineMode {
    int k = 1, m = 1;
    double amplitude = 0.0;
};

Background flat_background(const TorusGrid& grid);
// g_profile may only vary in (x1,x2) and h_profile only in (x3,x4)
Background kahler_product_background(const RealField& g_profile, const RealField& h_profile);
// g = c_g + sum a p_k Q_m, h = c_h - sum a P_k q_m
Background pluriclosed_background(const TorusGrid& grid, double c_g, double c_h,
                                  const std::vector<CosineMode>& modes);

// |g_wwbar + h_zzbar|_inf
double verify_pluriclosed(const Background& bg);
// |(g lambda)_wwbar + (h eta)_zzbar|_inf for the state with these lambda, eta
double verify_pluriclosed(const Background& bg, const RealField& lambda, const RealField& eta);

// true when g and h are constant fields (the local-form regime)
bool is_constant_background(const Background& bg, double tol = 1e-12);

struct TorsionReport {
    RealField norm2;  // |T0|^2 = (1/h)|g_w/g|^2 + (1/g)|h_z/h|^2
    RealField grad_norm2;
    double max_norm2 = 0;
    double max_grad = 0;  // max |nabla T0|
};

TorsionReport torsion(const Background& bg);

struct CurvatureReport {
    RealField log_g_zz, log_g_ww, log_h_zz, log_h_ww;
    bool cor8_holds = true;
};

CurvatureReport curvature(const Background& bg, double tol = 1e-10);

double beta0();
// B = 8(1+beta)/(beta(3beta^2+6beta-1))
double prop11_B(double beta);
// P(eps, delta) = -beta^2(1-delta) + beta(1-beta)^2/(4(1+beta-eps))
double prop11_P(double beta, double eps, double delta);
double prop11_P_target(double beta);

struct EpsDelta {
    double epsilon = 0, delta = 0;
    bool grid_hit = false;
};

// grid search, 200 points per axis, epsilon outer; hits satisfy target*1.01 <= P <= target
EpsDelta choose_eps_delta(double beta);

// Background-only maxima the constants are assembled from
struct BackgroundInvariants {
    double max_T2 = 0;        // max |T0|^2
    double max_gradT = 0;     // max |nabla T0|
    double max_inv_g = 0, max_inv_h = 0;
    double curv_C = 0;  // prop7 constant C
    RealField log_g_zz, log_g_ww, log_h_zz, log_h_ww, g, h;
};

BackgroundInvariants background_invariants(const Background& bg);

struct ConstantsOptions {
    double safety = 1.0;
    bool with_prop11 = true;
    // when set, the prop11 (epsilon, delta) are replaced by these
    double epsilon = 0, delta = 0;
};

struct ConstantsReport {
    double beta = 1, beta0 = 0;
    double C = 0, C0 = 0;
    std::array<double, 15> Ck{};  // Ck[1..14]
    double A_prop9 = 0, A_prop11 = 0, B = 0;
    double epsilon = 0, delta = 0;
    bool prop11_available = false;
    std::map<std::string, std::string> provenance;

    double c(int k) const { return Ck.at(std::size_t(k)); }
    nlohmann::json to_json() const;
};

ConstantsReport constants(const BackgroundInvariants& inv, double beta, double C0,
                          const ConstantsOptions& opt = {});
ConstantsReport constants(const Background& bg, double beta, double C0, const ConstantsOptions& opt = {});

struct BelowThreshold : ConfigError {
    using ConfigError::ConfigError;
};

}  // namespace smaflow
