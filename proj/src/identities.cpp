#include "smaflow/identities.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <set>

namespace smaflow {

using CF = ComplexField;
using RF = RealField;

namespace {

template <class F>
Jet jet_map2(const Jet& a, const Jet& b, F f) {
    a.v.check_same(b.v.grid());
    Jet out{CF(a.v.grid()), CF(a.v.grid())};
    const std::size_t n = a.v.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) f(a.v[i], a.d[i], b.v[i], b.d[i], out.v[i], out.d[i]);
    return out;
}

template <class F>
Jet jet_map1(const Jet& a, F f) {
    Jet out{CF(a.v.grid()), CF(a.v.grid())};
    const std::size_t n = a.v.size();
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < n; ++i) f(a.v[i], a.d[i], out.v[i], out.d[i]);
    return out;
}

}  // namespace

Jet jet_const(const RF& f) { return {to_complex(f), CF(f.grid())}; }
Jet jet_const(const CF& f) { return {f, CF(f.grid())}; }

Jet operator+(const Jet& a, const Jet& b) {
    return jet_map2(a, b, [](cplx av, cplx ad, cplx bv, cplx bd, cplx& v, cplx& d) { v = av + bv; d = ad + bd; });
}
Jet operator-(const Jet& a, const Jet& b) {
    return jet_map2(a, b, [](cplx av, cplx ad, cplx bv, cplx bd, cplx& v, cplx& d) { v = av - bv; d = ad - bd; });
}
Jet operator*(const Jet& a, const Jet& b) {
    return jet_map2(a, b, [](cplx av, cplx ad, cplx bv, cplx bd, cplx& v, cplx& d) {
        v = av * bv;
        d = ad * bv + av * bd;
    });
}
Jet operator/(const Jet& a, const Jet& b) {
    return jet_map2(a, b, [](cplx av, cplx ad, cplx bv, cplx bd, cplx& v, cplx& d) {
        v = av / bv;
        d = (ad * bv - av * bd) / (bv * bv);
    });
}
Jet operator-(const Jet& a) {
    return jet_map1(a, [](cplx av, cplx ad, cplx& v, cplx& d) { v = -av; d = -ad; });
}
Jet operator+(const Jet& a, cplx s) {
    return jet_map1(a, [s](cplx av, cplx ad, cplx& v, cplx& d) { v = av + s; d = ad; });
}
Jet operator+(cplx s, const Jet& a) { return a + s; }
Jet operator-(const Jet& a, cplx s) { return a + (-s); }
Jet operator-(cplx s, const Jet& a) {
    return jet_map1(a, [s](cplx av, cplx ad, cplx& v, cplx& d) { v = s - av; d = -ad; });
}
Jet operator*(const Jet& a, cplx s) {
    return jet_map1(a, [s](cplx av, cplx ad, cplx& v, cplx& d) { v = av * s; d = ad * s; });
}
Jet operator*(cplx s, const Jet& a) { return a * s; }
Jet operator/(const Jet& a, cplx s) { return a * (1.0 / s); }
Jet operator/(cplx s, const Jet& a) {
    return jet_map1(a, [s](cplx av, cplx ad, cplx& v, cplx& d) {
        v = s / av;
        d = -s * ad / (av * av);
    });
}
Jet log(const Jet& a) {
    return jet_map1(a, [](cplx av, cplx ad, cplx& v, cplx& d) { v = std::log(av); d = ad / av; });
}
Jet sqrt(const Jet& a) {
    return jet_map1(a, [](cplx av, cplx ad, cplx& v, cplx& d) {
        v = std::sqrt(av);
        d = ad / (2.0 * v);
    });
}
Jet conj(const Jet& a) {
    return jet_map1(a, [](cplx av, cplx ad, cplx& v, cplx& d) { v = std::conj(av); d = std::conj(ad); });
}
Jet abs2(const Jet& a) {
    return jet_map1(a, [](cplx av, cplx ad, cplx& v, cplx& d) {
        v = std::norm(av);
        d = 2.0 * (ad * std::conj(av)).real();
    });
}
Jet re(const Jet& a) {
    return jet_map1(a, [](cplx av, cplx ad, cplx& v, cplx& d) { v = av.real(); d = ad.real(); });
}
Jet derivative(const Jet& a, DerivOp op) { return {derivative(a.v, op), derivative(a.d, op)}; }

JetCalculus::JetCalculus(const RF& u, const RF& speed, RF a, RF b)
    : su_(u), sf_(speed), a_(std::move(a)), b_(std::move(b)) {}

Jet JetCalculus::U(DerivOp op) const { return {su_.apply(op), sf_.apply(op)}; }

CF JetCalculus::L(const CF& f) const { return Spectrum(f).apply_factor_laplacians(a_, b_); }

CF JetCalculus::H(const Jet& e) const { return e.d - L(e.v); }

JetCalculus manifold_calculus(const RF& u, const Background& bg, double beta) {
    LambdaEta le = lambda_eta(u, bg, 0.0);
    RF speed = beta * log(le.lambda) - log(le.eta);
    return JetCalculus(u, speed, beta / (bg.g * le.lambda), 1.0 / (bg.h * le.eta));
}

namespace {

const std::map<std::string, Expr>& expr_names() {
    static const std::map<std::string, Expr> m{
        {"u", Expr::u},           {"u_t", Expr::u_t},
        {"lambda", Expr::lambda}, {"eta", Expr::eta},
        {"log_lambda", Expr::log_lambda}, {"log_eta", Expr::log_eta},
        {"inv_lambda", Expr::inv_lambda}, {"inv_eta", Expr::inv_eta},
        {"u_zw", Expr::u_zw},     {"abs2_u_zwbar", Expr::abs2_u_zwbar},
        {"mixed_norm", Expr::mixed_norm}};
    return m;
}

}  // namespace

Expr parse_expr(const std::string& s) {
    auto it = expr_names().find(s);
    if (it == expr_names().end()) throw std::invalid_argument("unsupported expression node '" + s + "'");
    return it->second;
}

std::string to_string(Expr e) {
    for (const auto& [k, v] : expr_names())
        if (v == e) return k;
    return "?";
}

RF material_derivative(Expr e, const RF& u, const Background& bg, double beta) {
    JetCalculus c = manifold_calculus(u, bg, beta);
    Jet G = jet_const(bg.g), H = jet_const(bg.h);
    auto lam = [&] { return 1.0 + c.U(d::zzb) / G; };
    auto eta = [&] { return 1.0 - c.U(d::wwb) / H; };
    Jet r;
    switch (e) {
        case Expr::u: r = c.U(d::id); break;
        case Expr::u_t: r = cplx(beta) * log(lam()) - log(eta()); break;
        case Expr::lambda: r = lam(); break;
        case Expr::eta: r = eta(); break;
        case Expr::log_lambda: r = log(lam()); break;
        case Expr::log_eta: r = log(eta()); break;
        case Expr::inv_lambda: r = 1.0 / lam(); break;
        case Expr::inv_eta: r = 1.0 / eta(); break;
        case Expr::u_zw: r = c.U(d::zw); break;
        case Expr::abs2_u_zwbar: r = abs2(c.U(d::zwb)); break;
        case Expr::mixed_norm: r = cplx(beta) * abs2(c.U(d::zw)) / (G * lam() * H * eta()); break;
    }
    return real(r.d);
}

namespace {

// below this the sides are roundoff of an identity whose terms all vanish
constexpr double kScaleFloor = 1e-3;

struct Recorder {
    const VerifyOptions& opt;
    const JetCalculus& calc;
    nlohmann::json inputs;
    std::vector<IdentityResult> out;

    CF tampered(const std::string& name, const CF& rhs, double scale) const {
        if (opt.tamper != name) return rhs;
        return rhs * (1.0 + 1e-3) + 1e-3 * scale;
    }

    void finish(IdentityResult r) {
        r.inputs = inputs;
        r.pass = std::isfinite(r.residual) && (r.kind == IdentityKind::informational || r.residual <= r.tolerance);
        out.push_back(std::move(r));
    }

    // H(e) = rhs
    void heat(const std::string& name, const std::string& eq, const Jet& e, const CF& rhs,
              IdentityKind kind = IdentityKind::equality, double tol = -1) {
        CF Le = calc.L(e.v);
        const double scale = std::max({sup_norm(e.d), sup_norm(Le), sup_norm(rhs), kScaleFloor});
        CF lhs = e.d - Le;
        compare(name, eq, lhs, tampered(name, rhs, scale), scale, kind, tol);
    }

    // lhs = rhs with a given scale (0: use the sides)
    void plain(const std::string& name, const std::string& eq, const CF& lhs, const CF& rhs, double scale = 0,
               IdentityKind kind = IdentityKind::equality, double tol = -1) {
        if (scale == 0) scale = std::max({sup_norm(lhs), sup_norm(rhs), kScaleFloor});
        compare(name, eq, lhs, tampered(name, rhs, scale), scale, kind, tol);
    }

    void compare(const std::string& name, const std::string& eq, const CF& lhs, const CF& rhs, double scale,
                 IdentityKind kind, double tol) {
        IdentityResult r;
        r.name = name;
        r.equation = eq;
        r.kind = kind;
        r.scale = scale;
        r.tolerance = tol > 0 ? tol : opt.tolerance;
        double num = 0;
        if (kind == IdentityKind::inequality) {
            num = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < lhs.size(); ++i) num = std::max(num, (lhs[i] - rhs[i]).real());
        } else {
            for (std::size_t i = 0; i < lhs.size(); ++i) num = std::max(num, std::abs(lhs[i] - rhs[i]));
        }
        r.residual = num / std::max(scale, kScaleFloor);
        finish(std::move(r));
    }
};

CF C(const RF& f) { return to_complex(f); }

}  // namespace

std::vector<IdentityResult> verify_A(const RF& u, const Background& bg, double beta, const VerifyOptions& opt) {
    JetCalculus calc = manifold_calculus(u, bg, beta);
    Recorder rec{opt, calc, {{"suite", "A"}, {"beta", beta}}, {}};
    const RF& g = bg.g;
    const RF& h = bg.h;
    Jet G = jet_const(g), Hh = jet_const(h);
    Jet lam = 1.0 + calc.U(d::zzb) / G;
    Jet eta = 1.0 - calc.U(d::wwb) / Hh;
    Jet speed = cplx(beta) * log(lam) - log(eta);
    const CF& l = lam.v;
    const CF& e = eta.v;

    rec.heat("lemma16", "H(du/dt) = 0", speed, CF(u.grid()), IdentityKind::equality, 1e-12);

    CF Lu = calc.L(C(u));
    rec.plain("A1", "Lu = 1/eta - beta/lambda + beta - 1", Lu, 1.0 / e - beta / l + (beta - 1.0));
    Jet uj = calc.U(d::id);
    rec.heat("A2", "Hu = u_t + beta/lambda - 1/eta + 1 - beta", uj, speed.v + beta / l - 1.0 / e + (1.0 - beta));

    CF A3a = derivative(C(g) * l, d::wwb), A3b = derivative(C(h) * e, d::zzb);
    rec.plain("A3", "(g lambda)_wwbar + (h eta)_zzbar = 0", A3a + A3b, CF(u.grid()),
              std::max(sup_norm(A3a), sup_norm(A3b)));

    CF lz = derivative(l, d::z), lw = derivative(l, d::w), lwb = derivative(l, d::wb);
    CF ez = derivative(e, d::z), ezb = derivative(e, d::zb), ew = derivative(e, d::w);
    CF gw = derivative(g, d::w), hz = derivative(h, d::z);
    RF gwwb = real(derivative(g, d::wwb)), hzzb = real(derivative(h, d::zzb));

    CF A4 = -beta / C(g) * abs2(lz / l) + 2.0 / (C(h) * e) * C(real(gw * lwb / C(g))) + 1.0 / C(g) * abs2(ez / e) +
            2.0 / C(g) * C(real(hz * ezb / (C(h) * e))) + C(gwwb / (g * h)) * l / e + C(hzzb / (g * h));
    rec.heat("A4", "H lambda = -beta/g|l_z/l|^2 + 2/(h eta)Re(g_w l_wbar/g) + ...", lam, A4);

    CF A5 = beta / C(h) * abs2(lw / l) + 2.0 * beta / C(h) * C(real(gw * lwb / (C(g) * l))) +
            2.0 * beta / (C(g) * l) * C(real(hz * ezb / C(h))) - 1.0 / C(h) * abs2(ew / e) +
            beta * C(hzzb / (g * h)) * e / l + C(beta * gwwb / (g * h));
    rec.heat("A5", "H eta = beta/h|l_w/l|^2 + ... - 1/h|eta_w/eta|^2 + ...", eta, A5);

    CF iz = 1.0 / (C(g) * l), iw = 1.0 / (C(h) * e);
    RF Tg = gwwb / g - abs2(gw / C(g)), Th = hzzb / h - abs2(hz / C(h));
    CF Xw = lw / l + gw / C(g), Xz = ez / e + hz / C(h);
    CF A6 = iw * abs2(Xw) + iz * abs2(Xz) + iz * Th + iw * Tg;
    Jet loglam = log(lam);
    rec.heat("A6", "H log lambda = 1/(h eta)|l_w/l + g_w/g|^2 + 1/(g l)|e_z/e + h_z/h|^2 + torsion terms", loglam, A6);
    rec.heat("A7", "H log eta = beta H log lambda", log(eta), beta * (calc.H(loglam)), IdentityKind::equality, 1e-10);

    CF A8 = -1.0 / l * A6 - beta / (C(g) * l * l) * abs2(lz / l) - 1.0 / (C(h) * l * e) * abs2(lw / l);
    rec.heat("A8", "H(1/lambda) = -(1/lambda) H log lambda - beta/(g l^2)|l_z/l|^2 - 1/(h l eta)|l_w/l|^2",
             1.0 / lam, A8);
    CF A8p = -beta / (C(g) * l * l) * abs2(lz / l) - 2.0 / (C(h) * l * e) * abs2(Xw) - 1.0 / (C(g) * l * l) * abs2(Xz) -
             1.0 / (C(g) * l * l) * Th - 1.0 / (C(h) * l * e) * Tg;
    rec.heat("A8_printed", "H(1/lambda), as printed", 1.0 / lam, A8p, IdentityKind::informational);

    CF A9 = -beta / e * A6 - beta / (C(g) * l * e) * abs2(ez / e) - 1.0 / (C(h) * e * e) * abs2(ew / e);
    rec.heat("A9", "H(1/eta) = -(beta/eta) H log lambda - beta/(g l eta)|e_z/e|^2 - 1/(h eta^2)|e_w/e|^2",
             1.0 / eta, A9);
    CF A9p = -beta / (C(h) * e * e) * abs2(Xw) - 2.0 * beta / (C(g) * l * e) * abs2(Xz) -
             1.0 / (C(h) * e * e) * abs2(ew / e) - beta / (C(g) * l * e) * Th - beta / (C(h) * e * e) * Tg;
    rec.heat("A9_printed", "H(1/eta), as printed", 1.0 / eta, A9p, IdentityKind::informational);

    if (curvature(bg).cor8_holds)
        rec.heat("A6_nonneg", "H log lambda >= 0", -loglam, CF(u.grid()), IdentityKind::inequality);
    return rec.out;
}

std::vector<IdentityResult> verify_B(const RF& u, const Background& bg, double beta, const VerifyOptions& opt) {
    JetCalculus calc = manifold_calculus(u, bg, beta);
    Recorder rec{opt, calc, {{"suite", "B"}, {"beta", beta}}, {}};
    const RF& g = bg.g;
    const RF& h = bg.h;
    Jet G = jet_const(g), Hh = jet_const(h);
    Jet lam = 1.0 + calc.U(d::zzb) / G;
    Jet eta = 1.0 - calc.U(d::wwb) / Hh;
    const CF& l = lam.v;
    const CF& e = eta.v;
    const CF cg = C(g), ch = C(h);

    CF lz = derivative(l, d::z), lw = derivative(l, d::w);
    CF ez = derivative(e, d::z), ew = derivative(e, d::w);
    CF gz = derivative(g, d::z), gw = derivative(g, d::w), gzw = derivative(g, d::zw);
    CF hz = derivative(h, d::z), hw = derivative(h, d::w), hzw = derivative(h, d::zw);

    Jet uzw = calc.U(d::zw);
    CF Gz = gz / cg + lz / l + hz / ch + ez / e;
    CF Gw = gw / cg + lw / l + hw / ch + ew / e;
    CF dwG = derivative(cg * (l - 1.0), d::w);   // (g(lambda-1))_w = u_zzbar w
    CF dzH = derivative(ch * (1.0 - e), d::z);   // (h(1-eta))_z = u_wwbar z

    CF Psi = (hzw - hz * hw / ch - hz * gw / cg) * (e - 1.0) / (ch * e) +
             beta * (-gzw + gz * gw / cg + hz * gw / ch) * (l - 1.0) / (cg * l) +
             ((beta - 1.0) * ez * gw / (cg * e) - beta * ez * gw / (cg * l * e) + hz * ew / (ch * e * e)) +
             ((beta - 1.0) * hz * lw / (ch * l) - beta * lz * gw / (cg * l * l) + hz * lw / (ch * l * e)) +
             (beta - 1.0) * ez * lw / (e * l);

    {
        CF Le = calc.L(uzw.v);
        CF T = beta / (cg * l) * Gz * dwG + 1.0 / (ch * e) * Gw * dzH;
        CF lhs = uzw.d - Le + T;
        const double scale = std::max({sup_norm(uzw.d), sup_norm(Le), sup_norm(T), sup_norm(Psi), kScaleFloor});
        rec.compare("B11", "(d/dt - rough Laplacian) u_zw = Psi", lhs, rec.tampered("B11", Psi, scale), scale,
                    IdentityKind::equality, -1);
    }

    Jet uzwzb = derivative(uzw, d::zb), uzwwb = derivative(uzw, d::wb);
    {
        CF r1 = uzwzb.v - dwG, r2 = uzwwb.v - dzH;
        const double scale = std::max({sup_norm(uzwzb.v), sup_norm(dwG), sup_norm(uzwwb.v), sup_norm(dzH)});
        CF lhs(u.grid());
        for (std::size_t i = 0; i < lhs.size(); ++i) lhs[i] = std::max(std::abs(r1[i]), std::abs(r2[i]));
        rec.plain("B12_consistency", "u_zw zbar = (g(lambda-1))_w, u_zw wbar = (h(1-eta))_z", lhs, CF(u.grid()),
                  scale);
    }
    {
        CF rhs = (ez * ew / (e * e) + (hz * ew + hw * ez + hzw * (e - 1.0)) / (ch * e)) -
                 beta * (lz * lw / (l * l) + (gz * lw + gw * lz + gzw * (l - 1.0)) / (cg * l));
        rec.heat("B17", "H u_zw = (e_z e_w/e^2 + ...) - beta(l_z l_w/l^2 + ...)", uzw, rhs);
    }

    Jet N = cplx(beta) / (G * lam * Hh * eta);
    Jet nu2 = N * abs2(uzw);
    CF dbar2 = N.v * (beta / (cg * l) * abs2(uzwzb.v) + 1.0 / (ch * e) * abs2(uzwwb.v));
    CF B25 = beta * beta / (ch * e) * abs2(lw / l + gw / cg - gw / (cg * l)) +
             beta / (cg * l) * abs2(ez / e + hz / ch - hz / (ch * e));
    rec.plain("B25", "|dbar nu|^2 = beta^2/(h eta)|...|^2 + beta/(g lambda)|...|^2", dbar2, B25);

    CF nz = derivative(uzw.v, d::z) - Gz * uzw.v;
    CF nw = derivative(uzw.v, d::w) - Gw * uzw.v;
    CF nab2 = N.v * (beta / (cg * l) * abs2(nz) + 1.0 / (ch * e) * abs2(nw));
    CF Hlog = calc.H(log(G * lam * Hh * eta));
    CF B18 = -dbar2 - nab2 - nu2.v * Hlog + C(2.0 * real(N.v * Psi * conj(uzw.v)));
    rec.heat("B18", "H|nu|^2 = -|dbar nu|^2 - |nabla nu|^2 - |nu|^2 H log(g l h e) + 2Re<Psi, nu>", nu2, B18);

    // B23 endpoint inequality with the module constants
    const double C0 = stats(real(1.0 / l + 1.0 / e)).max;
    ConstantsOptions co;
    co.with_prop11 = false;
    ConstantsReport K = constants(bg, beta, C0, co);
    const double eps = opt.epsilon, del = opt.delta;
    RF nu2r = real(nu2.v), nu = sqrt(nu2r);
    RF X = real(1.0 / (ch * e) * abs2(lw / l + gw / cg) + 1.0 / (cg * l) * abs2(ez / e + hz / ch));
    RF poly = -beta * beta * (1 - del) + std::sqrt(beta) * (1 - beta) * nu - (1 + beta - eps) * nu2r;
    RF extra = real(1.0 / (ch * e * e) * abs2(ew / e) + 1.0 / (cg * l * l) * abs2(lz / l));
    RF bound = K.c(8) * (1 / eps + 1 / del - beta * beta) + K.c(3) * nu + K.c(6) * nu2r + K.c(7) * extra + poly * X;
    rec.heat("B23", "H|nu|^2 <= C8(1/eps + 1/delta - beta^2) + C3|nu| + C6|nu|^2 + C7(...) + [poly](...)", nu2,
             C(bound), IdentityKind::inequality);
    return rec.out;
}

std::vector<IdentityResult> verify_C(const LocalFixture& fx, double beta, const VerifyOptions& opt) {
    const RF& p = fx.p;
    RF pzz, pww;
    factor_laplacians(p, pzz, pww);
    RF l0 = fx.a + pzz, e0 = fx.b - pww;
    if (!(stats(l0).min > 0 && stats(e0).min > 0))
        throw NumericalFailure("inadmissible local fixture: lambda or eta not positive");
    RF speed = beta * log(l0) - log(e0);
    JetCalculus calc(p, speed, beta / l0, 1.0 / e0);
    Recorder rec{opt, calc, {{"suite", "C"}, {"beta", beta}, {"a", fx.a}, {"b", fx.b}}, {}};

    Jet lam = calc.U(d::zzb) + cplx(fx.a);
    Jet eta = cplx(fx.b) - calc.U(d::wwb);
    const CF& l = lam.v;
    const CF& e = eta.v;

    rec.heat("lemma24_ut", "H(du/dt) = 0", cplx(beta) * log(lam) - log(eta), CF(p.grid()), IdentityKind::equality,
             1e-12);

    CF lz = derivative(l, d::z), lw = derivative(l, d::w), lwb = derivative(l, d::wb);
    CF ez = derivative(e, d::z), ezb = derivative(e, d::zb), ew = derivative(e, d::w), ewb = derivative(e, d::wb);

    rec.heat("C27_zw", "H u_zw = -beta l_z l_w/l^2 + e_z e_w/e^2", calc.U(d::zw),
             -beta * lz * lw / (l * l) + ez * ew / (e * e));
    rec.heat("C27_zz", "H u_zz = -beta l_z^2/l^2 + e_z^2/e^2", calc.U({2, 0, 0, 0}),
             -beta * lz * lz / (l * l) + ez * ez / (e * e));
    rec.heat("C28", "H lambda = -beta|l_z/l|^2 + |e_z/e|^2", lam, C(-beta * abs2(lz / l) + abs2(ez / e)));

    Jet q = calc.U(d::zwb);
    const CF& qv = q.v;
    CF qb = conj(qv);
    rec.heat("C29", "H u_zwbar = -beta l_z l_wbar/l^2 + e_z e_wbar/e^2", q,
             -beta * lz * lwb / (l * l) + ez * ewb / (e * e));
    rec.heat("C30", "H eta = beta|l_w/l|^2 - |e_w/e|^2", eta, C(beta * abs2(lw / l) - abs2(ew / e)));

    CF C31 = -beta / (e * e) * abs2(lw / l) - 2.0 * beta / (l * e) * abs2(ez / e) - 1.0 / (e * e) * abs2(ew / e);
    rec.heat("C31", "H(1/eta) = -beta/eta^2|l_w/l|^2 - 2beta/(l eta)|e_z/e|^2 - 1/eta^2|e_w/e|^2", 1.0 / eta, C31);

    CF uzzwb = calc.U({2, 0, 0, 1}).v, uwwzb = calc.U({0, 1, 2, 0}).v, uzwbwb = calc.U({1, 0, 0, 2}).v;
    Jet q2 = abs2(q);
    CF C32 = -2.0 * beta / (l * l) * C(real(qb * lz * lwb)) + 2.0 / (e * e) * C(real(qb * ez * ewb)) -
             beta / l * (abs2(lw) + abs2(uzzwb)) - 1.0 / e * (abs2(uwwzb) + abs2(ez));
    rec.heat("C32", "H|u_zwbar|^2 = ...", q2, C32);

    Jet E = q2 / eta;
    CF common = -beta / (l * e) * (abs2(lw) + abs2(uzzwb)) - 1.0 / (e * e) * (abs2(uwwzb) + abs2(ez)) + q2.v * C31 -
                2.0 * beta / (l * l * e) * C(real(qb * lz * lwb)) + 2.0 / (e * e * e) * C(real(qb * ez * ewb));
    CF q2z = derivative(q2.v, d::z), q2w = derivative(q2.v, d::w);
    CF inve = 1.0 / e;
    CF C33 = common - 2.0 * beta / l * C(real(q2z * derivative(inve, d::zb))) -
             2.0 / e * C(real(q2w * derivative(inve, d::wb)));
    rec.heat("C33", "H(|u_zwbar|^2/eta), product-rule form", E, C33);
    CF C34 = common + 2.0 * beta / l * C(real((qb * uzzwb + lw * qv) * ezb / (e * e))) +
             2.0 / e * C(real((qv * uwwzb - qb * ez) * ewb / (e * e)));
    rec.heat("C34", "H(|u_zwbar|^2/eta), expanded", E, C34);

    auto csqrt = [](cplx x) { return std::sqrt(x); };
    CF se = map(l * e, csqrt), se3 = map(l * e * e * e, csqrt);
    CF s1 = lz / l + qv * lw / (l * e);
    CF s2 = lw / se - qb * ez / se3;
    CF s3 = uzzwb / se - qv * ez / se3;
    CF s4 = uwwzb / e - qb * ew / (e * e);
    CF C35 = C(-beta * abs2(s1) - beta * abs2(s2) - beta * abs2(s3) - abs2(s4));
    Jet W11 = lam + E;
    rec.heat("C35", "H(lambda + |u_zwbar|^2/eta) = -beta|.|^2 - beta|.|^2 - beta|.|^2 - |.|^2", W11, C35);
    CF C35p = C(-beta * abs2(s1) - abs2(s2) - beta * abs2(s3) - abs2(s4));
    rec.heat("C35_printed", "H(lambda + |u_zwbar|^2/eta), as printed", W11, C35p, IdentityKind::informational);

    Jet W12 = q / eta;
    CF C36 = -beta * lz * lwb / (l * l * e) + ez * ewb / (e * e * e) + qv * C31 +
             beta / l * (lwb * ez / (e * e) + ezb / (e * e) * uzzwb) + 1.0 / e * (uzwbwb * ew / (e * e) - ez * ewb / (e * e));
    rec.heat("C36", "H(u_zwbar/eta) = ...", W12, C36);
    CF s3c = uzzwb / se - qv * ez / se3;
    CF C37 = beta * ezb / se3 * s3c + (uzwbwb / e - qv * ewb / (e * e)) * ew / (e * e) - beta * s1 * lwb / (l * e) +
             beta * (lwb / se - qv * ezb / se3) * ez / se3;
    rec.heat("C37", "H(u_zwbar/eta), regrouped", W12, C37);

    Jet W22 = 1.0 / eta;
    const std::array<std::array<cplx, 2>, 4> vs{{{1.0, 0.0}, {0.0, 1.0}, {M_SQRT1_2, M_SQRT1_2}, {0.6, cplx(0, 0.8)}}};
    const char* vnames[4] = {"(1,0)", "(0,1)", "(1,1)/sqrt2", "(0.6,0.8i)"};
    for (int k = 0; k < 4; ++k) {
        const cplx a = vs[k][0], b = vs[k][1];
        Jet Wv = std::norm(a) * W11 + re(cplx(2.0) * (a * std::conj(b)) * W12) + std::norm(b) * W22;
        CF expansion = std::norm(a) * C35 + C(2.0 * real((a * std::conj(b)) * C37)) + std::norm(b) * C31;
        rec.heat(std::string("HW") + vnames[k], "HW(v,vbar) = |a|^2 C35 + 2Re(a bbar C37) + |b|^2 C31", Wv,
                 expansion);
        rec.plain(std::string("HW_nonpos") + vnames[k], "completed-square HW(v,vbar) <= 0", expansion,
                  CF(p.grid()), std::max(1.0, sup_norm(expansion)), IdentityKind::inequality, 1e-10);
    }
    return rec.out;
}

RF random_test_field(const TorusGrid& grid, std::uint64_t seed, double amplitude, Band band, int modes) {
    if (band.lo < 0 || band.hi < std::max(1, band.lo)) throw ConfigError("band must satisfy 0 <= lo <= hi, hi >= 1");
    if (amplitude < 0) throw ConfigError("amplitude must be nonnegative");
    RF out(grid);
    if (amplitude == 0) return out;
    std::mt19937_64 rng(seed);
    const int kmax = int(std::floor(std::sqrt(double(band.hi)) + 1e-9));
    std::uniform_int_distribution<int> mdist(-kmax, kmax);
    std::uniform_real_distribution<double> adist(0.5, 1.0), pdist(0.0, 2.0 * M_PI);
    struct Mode {
        std::array<int, 4> m;
        double a, phase;
    };
    std::vector<Mode> ms;
    double total = 0;
    while (int(ms.size()) < modes) {
        std::array<int, 4> m{mdist(rng), mdist(rng), mdist(rng), mdist(rng)};
        int k2 = 0;
        for (int v : m) k2 += v * v;
        if (k2 == 0 || k2 < band.lo || k2 > band.hi) continue;
        Mode md{m, adist(rng), pdist(rng)};
        total += md.a;
        ms.push_back(md);
    }
    for (const auto& md : ms) {
        const double c = amplitude * md.a / total;
        RF f = sample(grid, [&](double x1, double x2, double x3, double x4) {
            const double th = 2 * M_PI *
                              (md.m[0] * x1 / grid.L[0] + md.m[1] * x2 / grid.L[1] + md.m[2] * x3 / grid.L[2] +
                               md.m[3] * x4 / grid.L[3]);
            return c * std::cos(th + md.phase);
        });
        out += f;
    }
    return out;
}

RF random_test_field(const Background& bg, std::uint64_t seed, double amplitude, Band band, int modes) {
    RF u = random_test_field(bg.grid(), seed, amplitude, band, modes);
    LambdaEta le = lambda_eta(u, bg, 0.0);
    if (!(stats(le.lambda).min > 0 && stats(le.eta).min > 0))
        throw NumericalFailure("admissibility failure: amplitude " + std::to_string(amplitude) +
                               " too large for this background");
    return u;
}

namespace {

std::string kind_string(IdentityKind k) {
    switch (k) {
        case IdentityKind::equality: return "equality";
        case IdentityKind::inequality: return "inequality";
        case IdentityKind::informational: return "informational";
    }
    return "?";
}

}  // namespace

IdentitySuiteReport run_identity_suite(const IdentitySuiteOptions& opt) {
    auto t0 = std::chrono::steady_clock::now();
    if (opt.resolutions.empty()) throw ConfigError("no resolutions given");
    for (double b : opt.betas)
        if (!(b > 0 && b <= 1)) throw ConfigError("identity betas must lie in (0, 1]");
    VerifyOptions vo;
    vo.tolerance = opt.tolerance;
    vo.tamper = opt.tamper;

    std::vector<std::size_t> ns = opt.resolutions;
    std::sort(ns.begin(), ns.end());
    // (beta index, name) -> residual per resolution
    std::map<std::pair<std::size_t, std::string>, std::vector<double>> hist;
    std::map<std::size_t, double> tails;
    std::vector<std::pair<std::size_t, IdentityResult>> finest;

    for (std::size_t n : ns) {
        TorusGrid grid = make_grid({n, n, n, n}, {1, 1, 1, 1});
        Background bg = pluriclosed_background(grid, opt.c_g, opt.c_h, opt.modes);
        RF u = random_test_field(bg, opt.seed, opt.amplitude, opt.band);
        LocalFixture fx{1.0, 1.0, random_test_field(grid, opt.seed + 1, opt.local_amplitude, opt.band)};
        LambdaEta le = lambda_eta(u, bg, 0.0);
        RF pzz, pww;
        factor_laplacians(fx.p, pzz, pww);
        tails[n] = std::max(spectral_tail(log(le.lambda)), spectral_tail(log(1.0 + pzz)));
        for (std::size_t bi = 0; bi < opt.betas.size(); ++bi) {
            const double beta = opt.betas[bi];
            std::vector<IdentityResult> rs = verify_A(u, bg, beta, vo);
            for (auto& r : verify_B(u, bg, beta, vo)) rs.push_back(std::move(r));
            for (auto& r : verify_C(fx, beta, vo)) rs.push_back(std::move(r));
            for (auto& r : rs) {
                hist[{bi, r.name}].push_back(r.residual);
                if (n == ns.back()) finest.push_back({bi, std::move(r)});
            }
        }
    }

    // these hold by construction of the discrete operators: residuals are roundoff at every n
    static const std::set<std::string> exact{"lemma16", "A1", "A2", "A3", "A7", "B12_consistency", "lemma24_ut"};
    IdentitySuiteReport rep;
    const std::size_t nf = ns.back();
    const double tail = tails[nf];
    for (auto& [bi, r] : finest) {
        IdentityEntry e;
        e.name = r.name;
        e.equation = r.equation;
        e.kind = r.kind;
        e.beta = opt.betas[bi];
        e.n = nf;
        e.residual = r.residual;
        e.tolerance = r.tolerance;
        e.tail = tail;
        const auto& h = hist[{bi, r.name}];
        e.coarse_residual = h.size() > 1 ? h[h.size() - 2] : std::numeric_limits<double>::quiet_NaN();
        if (r.kind == IdentityKind::informational) {
            e.status = "informational";
            e.pass = true;
        } else if (tail > opt.tail_tolerance) {
            e.status = "under_resolved";
            e.pass = false;
        } else {
            bool ok = r.pass;
            if (ok && r.kind == IdentityKind::equality && h.size() > 1 && !exact.count(r.name))
                ok = e.residual <= opt.floor || e.coarse_residual >= opt.convergence_ratio * e.residual;
            e.pass = ok;
            e.status = ok ? "pass" : "fail";
        }
        if (!e.pass) rep.all_pass = false;
        rep.entries.push_back(std::move(e));
    }
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

nlohmann::json IdentitySuiteReport::to_json(std::uint64_t seed) const {
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["all_pass"] = all_pass;
    j["seconds"] = seconds;
    j["results"] = nlohmann::json::array();
    for (const auto& e : entries)
        j["results"].push_back({{"identity", e.name},
                                {"equation", e.equation},
                                {"kind", kind_string(e.kind)},
                                {"residual", num(e.residual)},
                                {"coarse_residual", num(e.coarse_residual)},
                                {"tolerance", e.tolerance},
                                {"pass", e.pass},
                                {"status", e.status},
                                {"spectral_tail", e.tail},
                                {"grid", e.n},
                                {"seed", seed},
                                {"beta", e.beta}});
    return j;
}

}  // namespace smaflow
