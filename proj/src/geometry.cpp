#include "smaflow/geometry.hpp"
#include "smaflow/spectral.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace smaflow {

namespace {

constexpr double pi = std::numbers::pi;

void require_positive(const RealField& f, const char* name) {
    FieldStats s = stats(f);
    if (!(s.min > 0))
        throw ConfigError(std::string("background coefficient ") + name + " is not positive (min " +
                          std::to_string(s.min) + ")");
}

double max_of(const RealField& f) { return stats(f).max; }

}  // namespace

std::string to_string(BackgroundKind k) {
    return k == BackgroundKind::kahler_product ? "kahler_product" : "pluriclosed_general";
}

Background flat_background(const TorusGrid& grid) {
    Background bg{RealField(grid, 1.0), RealField(grid, 1.0), BackgroundKind::kahler_product, {}};
    bg.descriptor = {{"kind", "kahler_product"}, {"construction", "flat"}};
    return bg;
}

Background kahler_product_background(const RealField& gp, const RealField& hp) {
    gp.check_same(hp.grid());
    require_positive(gp, "g");
    require_positive(hp, "h");
    const TorusGrid& G = gp.grid();
    const double tg = 1e-12 * sup_norm(gp), th = 1e-12 * sup_norm(hp);
    for (std::size_t i1 = 0; i1 < G.n[0]; ++i1)
        for (std::size_t i2 = 0; i2 < G.n[1]; ++i2)
            for (std::size_t i3 = 0; i3 < G.n[2]; ++i3)
                for (std::size_t i4 = 0; i4 < G.n[3]; ++i4) {
                    std::size_t k = G.index(i1, i2, i3, i4);
                    if (std::fabs(gp[k] - gp[G.index(i1, i2, 0, 0)]) > tg)
                        throw ConfigError("Kahler product: g depends on (x3, x4)");
                    if (std::fabs(hp[k] - hp[G.index(0, 0, i3, i4)]) > th)
                        throw ConfigError("Kahler product: h depends on (x1, x2)");
                }
    Background bg{gp, hp, BackgroundKind::kahler_product, {}};
    bg.descriptor = {{"kind", "kahler_product"}, {"construction", "profiles"}};
    return bg;
}

Background pluriclosed_background(const TorusGrid& grid, double c_g, double c_h,
                                  const std::vector<CosineMode>& modes) {
    const double L1 = grid.L[0], L3 = grid.L[2];
    for (const auto& md : modes)
        if (md.k <= 0 || md.m <= 0) throw ConfigError("pluriclosed mode indices must be positive");
    RealField g = sample(grid, [&](double x1, double, double x3, double) {
        double v = c_g;
        for (const auto& md : modes) {
            double p = std::cos(2 * pi * md.k * x1 / L1);
            double Q = -L3 * L3 * std::cos(2 * pi * md.m * x3 / L3) / (pi * pi * md.m * md.m);
            v += md.amplitude * p * Q;
        }
        return v;
    });
    RealField h = sample(grid, [&](double x1, double, double x3, double) {
        double v = c_h;
        for (const auto& md : modes) {
            double P = -L1 * L1 * std::cos(2 * pi * md.k * x1 / L1) / (pi * pi * md.k * md.k);
            double q = std::cos(2 * pi * md.m * x3 / L3);
            v -= md.amplitude * P * q;
        }
        return v;
    });
    require_positive(g, "g");
    require_positive(h, "h");
    Background bg{std::move(g), std::move(h), BackgroundKind::pluriclosed_general, {}};
    nlohmann::json jm = nlohmann::json::array();
    for (const auto& md : modes) jm.push_back({{"k", md.k}, {"m", md.m}, {"a", md.amplitude}});
    bg.descriptor = {{"kind", "pluriclosed_general"}, {"c_g", c_g}, {"c_h", c_h}, {"modes", jm}};
    return bg;
}

double verify_pluriclosed(const Background& bg) {
    ComplexField r = derivative(bg.g, d::wwb) + derivative(bg.h, d::zzb);
    return sup_norm(r);
}

double verify_pluriclosed(const Background& bg, const RealField& lambda, const RealField& eta) {
    ComplexField r = derivative(bg.g * lambda, d::wwb) + derivative(bg.h * eta, d::zzb);
    return sup_norm(r);
}

bool is_constant_background(const Background& bg, double tol) {
    FieldStats sg = stats(bg.g), sh = stats(bg.h);
    return sg.max - sg.min <= tol * sg.sup_norm && sh.max - sh.min <= tol * sh.sup_norm;
}

TorsionReport torsion(const Background& bg) {
    const RealField& g = bg.g;
    const RealField& h = bg.h;
    Spectrum sg(g), sh(h);
    ComplexField gz = sg.apply(d::z), gw = sg.apply(d::w);
    ComplexField hz = sh.apply(d::z), hw = sh.apply(d::w);

    TorsionReport rep;
    rep.norm2 = abs2(gw / g) / h + abs2(hz / h) / g;

    // components T1 = -g_w (indices z w zbar), T2 = h_z (indices z w wbar)
    ComplexField T1 = -gw;
    const ComplexField& T2 = hz;
    Spectrum s1(T1), s2(T2);
    ComplexField trace_z = gz / g + hz / h;  // Gamma^z_zz + Gamma^w_zw
    ComplexField trace_w = gw / g + hw / h;  // Gamma^z_wz + Gamma^w_ww
    ComplexField gzg = gz / g, gwg = gw / g, hzh = hz / h, hwh = hw / h;

    ComplexField d1z = s1.apply(d::z) - trace_z * T1;
    ComplexField d1w = s1.apply(d::w) - trace_w * T1;
    ComplexField d1zb = s1.apply(d::zb) - conj(gzg) * T1;
    ComplexField d1wb = s1.apply(d::wb) - conj(gwg) * T1;
    ComplexField d2z = s2.apply(d::z) - trace_z * T2;
    ComplexField d2w = s2.apply(d::w) - trace_w * T2;
    ComplexField d2zb = s2.apply(d::zb) - conj(hzh) * T2;
    ComplexField d2wb = s2.apply(d::wb) - conj(hwh) * T2;

    RealField w1 = 1.0 / (g * h * g), w2 = 1.0 / (g * h * h);
    RealField ig = 1.0 / g, ih = 1.0 / h;
    rep.grad_norm2 = w1 * (ig * (abs2(d1z) + abs2(d1zb)) + ih * (abs2(d1w) + abs2(d1wb))) +
                     w2 * (ig * (abs2(d2z) + abs2(d2zb)) + ih * (abs2(d2w) + abs2(d2wb)));
    rep.max_norm2 = max_of(rep.norm2);
    rep.max_grad = std::sqrt(max_of(rep.grad_norm2));
    return rep;
}

CurvatureReport curvature(const Background& bg, double tol) {
    CurvatureReport c;
    Spectrum lg(log(bg.g)), lh(log(bg.h));
    c.log_g_zz = real(lg.apply(d::zzb));
    c.log_g_ww = real(lg.apply(d::wwb));
    c.log_h_zz = real(lh.apply(d::zzb));
    c.log_h_ww = real(lh.apply(d::wwb));
    c.cor8_holds = stats(c.log_h_zz).min >= -tol && stats(c.log_g_ww).min >= -tol;
    return c;
}

double beta0() { return (2.0 * std::sqrt(3.0) - 3.0) / 3.0; }

double prop11_B(double beta) { return 8.0 * (1.0 + beta) / (beta * (3.0 * beta * beta + 6.0 * beta - 1.0)); }

double prop11_P(double beta, double eps, double delta) {
    return -beta * beta * (1.0 - delta) + beta * (1.0 - beta) * (1.0 - beta) / (4.0 * (1.0 + beta - eps));
}

double prop11_P_target(double beta) {
    return beta * (1.0 - 6.0 * beta - 3.0 * beta * beta) / (8.0 * (1.0 + beta));
}

EpsDelta choose_eps_delta(double beta) {
    const double target = prop11_P_target(beta);
    // target < 0 above beta0; accept P in [1.01 target, target] so that 1 + B P <= 0
    const double lo = target * 1.01, hi = target;
    for (int i = 0; i < 200; ++i) {
        double eps = double(i + 1) / 201.0;
        for (int j = 0; j < 200; ++j) {
            double del = double(j + 1) / 201.0;
            double P = prop11_P(beta, eps, del);
            if (P >= lo && P <= hi) return {eps, del, true};
        }
    }
    // P is affine in delta: solve P = target exactly at the smallest eps that admits delta in (0,1)
    for (int i = 0; i < 200; ++i) {
        double eps = double(i + 1) / 201.0;
        double c = beta * (1.0 - beta) * (1.0 - beta) / (4.0 * (1.0 + beta - eps));
        double del = 1.0 + (target - c) / (beta * beta);
        if (del > 0 && del < 1) return {eps, del, false};
    }
    throw NumericalFailure("no (epsilon, delta) in (0,1)^2 reaches the required level");
}

BackgroundInvariants background_invariants(const Background& bg) {
    BackgroundInvariants inv;
    TorsionReport t = torsion(bg);
    inv.max_T2 = t.max_norm2;
    inv.max_gradT = t.max_grad;
    inv.max_inv_g = 1.0 / stats(bg.g).min;
    inv.max_inv_h = 1.0 / stats(bg.h).min;
    CurvatureReport c = curvature(bg);
    double C = 0;
    for (std::size_t i = 0; i < bg.g.size(); ++i) {
        double a = std::fabs(c.log_h_zz[i]), b = std::fabs(c.log_g_ww[i]);
        C = std::max({C, a, b, a / bg.g[i], b / bg.h[i]});
    }
    inv.curv_C = C;
    inv.log_g_zz = std::move(c.log_g_zz);
    inv.log_g_ww = std::move(c.log_g_ww);
    inv.log_h_zz = std::move(c.log_h_zz);
    inv.log_h_ww = std::move(c.log_h_ww);
    inv.g = bg.g;
    inv.h = bg.h;
    return inv;
}

nlohmann::json ConstantsReport::to_json() const {
    nlohmann::json j;
    j["beta"] = beta;
    j["beta0"] = beta0;
    j["C"] = C;
    j["C0"] = C0;
    for (int k = 1; k <= 14; ++k) j["C" + std::to_string(k)] = Ck[std::size_t(k)];
    j["A_prop9"] = A_prop9;
    j["A_prop11"] = A_prop11;
    j["B"] = prop11_available ? nlohmann::json(B) : nlohmann::json(nullptr);
    j["epsilon"] = epsilon;
    j["delta"] = delta;
    j["prop11_available"] = prop11_available;
    j["provenance"] = provenance;
    return j;
}

ConstantsReport constants(const BackgroundInvariants& inv, double beta, double C0, const ConstantsOptions& opt) {
    if (!(beta > 0 && beta <= 1)) throw ConfigError("beta must lie in (0, 1]");
    if (!(C0 > 0)) throw ConfigError("C0 must be positive");
    const double s = opt.safety;
    ConstantsReport r;
    r.beta = beta;
    r.beta0 = beta0();
    r.C0 = C0;
    const double T2 = s * inv.max_T2, dT = s * inv.max_gradT;
    r.C = s * inv.curv_C;

    double C4 = 0;
    for (std::size_t i = 0; i < inv.g.size(); ++i) {
        const double gzz = inv.log_g_zz[i], gww = inv.log_g_ww[i], hzz = inv.log_h_zz[i], hww = inv.log_h_ww[i];
        const double g = inv.g[i], h = inv.h[i];
        const double combos[4] = {std::fabs(-gww + beta * gzz), std::fabs(-beta * hzz + hww),
                                  std::fabs(hzz - beta * gzz), std::fabs(beta * gww - hww)};
        for (double v : combos) C4 = std::max({C4, v, v / g, v / h});
    }
    C4 *= s;

    auto& C = r.Ck;
    C[1] = C0 * dT;
    C[2] = C[1] + beta * (1 - beta) * C0 * T2;
    C[3] = C[2] + beta * C0 * C0 * C0 * T2;
    C[4] = C4;
    C[5] = C0 * C4;
    C[6] = C[5] + 2.0;
    C[7] = std::max(inv.max_inv_g, inv.max_inv_h) * C0 * C0 * T2;
    C[8] = C0 * C0 * C0 * T2;
    C[9] = C0 * C0 * r.C;
    C[10] = C[8] * (1.0 / beta + 2.0 - beta * beta);
    r.A_prop9 = C[7] / beta;
    C[11] = C[10] + C[9] * r.A_prop9 + C[3] + C[6];

    r.provenance = {
        {"C", "max over grid of |(log h)_zzbar|, |(log g)_wwbar| and their 1/g, 1/h normalizations"},
        {"C0", "supplied: running max of sup(1/lambda + 1/eta)"},
        {"C1", "C0 max|nabla T0|, Chern-covariant derivatives of g_w, h_z"},
        {"C2", "C1 + beta(1-beta) C0 max|T0|^2"},
        {"C3", "C2 + beta C0^3 max|T0|^2"},
        {"C4", "max over grid of four curvature combinations, raw and 1/g, 1/h normalized"},
        {"C5", "C0 C4"},
        {"C6", "C5 + 2"},
        {"C7", "max(max 1/g, max 1/h) C0^2 max|T0|^2"},
        {"C8", "C0^3 max|T0|^2"},
        {"C9", "C0^2 C"},
        {"C10", "C8 (1/beta + 2 - beta^2)"},
        {"C11", "C10 + C9 A + C3 + C6"},
        {"A_prop9", "C7 / beta"},
        {"safety", std::to_string(s)},
    };

    if (!opt.with_prop11) return r;
    if (beta <= r.beta0)
        throw BelowThreshold("below universal threshold: beta = " + std::to_string(beta) +
                             " <= beta0 = " + std::to_string(r.beta0));
    r.prop11_available = true;
    r.B = prop11_B(beta);
    if (opt.epsilon > 0 && opt.delta > 0) {
        r.epsilon = opt.epsilon;
        r.delta = opt.delta;
        r.provenance["epsilon_delta"] = "supplied";
    } else {
        EpsDelta ed = choose_eps_delta(beta);
        r.epsilon = ed.epsilon;
        r.delta = ed.delta;
        r.provenance["epsilon_delta"] = ed.grid_hit ? "grid search 200x200" : "closed-form delta";
    }
    r.A_prop11 = r.B * C[7] / beta;
    C[12] = C[8] * (1.0 / r.epsilon + 1.0 / r.delta - beta * beta);
    C[13] = C0 * C0 * r.C;
    C[14] = (C[12] * r.B + C[13] * r.A_prop11 + r.B * C[3] / 2.0) + r.B * (C[6] + C[3] / 2.0);
    r.provenance["B"] = "8(1+beta)/(beta(3beta^2+6beta-1))";
    r.provenance["A_prop11"] = "B C7 / beta";
    r.provenance["C12"] = "C8 (1/epsilon + 1/delta - beta^2)";
    r.provenance["C13"] = "C0^2 C";
    r.provenance["C14"] = "(C12 B + C13 A + B C3/2) + B (C6 + C3/2)";
    return r;
}

ConstantsReport constants(const Background& bg, double beta, double C0, const ConstantsOptions& opt) {
    return constants(background_invariants(bg), beta, C0, opt);
}

}  // namespace smaflow
