#include "pfd/impedance.hpp"

#include "pfd/errors.hpp"

#include <cmath>
#include <sstream>

namespace pfd {

namespace {

constexpr cplx kI{0.0, 1.0};

struct Eval {
    cplx z;
    bool pole = false;
};

Eval clamp(cplx z, bool pole) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        return {cplx(kPoleCap, 0.0), true};
    }
    const double mag = std::abs(z);
    if (mag > kPoleCap) return {z * (kPoleCap / mag), true};
    return {z, pole};
}

cplx table_lookup(const ImpedanceTable& t, double omega) {
    const double f = omega / (2.0 * kPi);
    const auto& p = t.points;
    const double lo = p.front().f_hz;
    const double hi = p.back().f_hz;
    const double slack = 1e-12 * hi;
    if (f < lo - slack || f > hi + slack) {
        std::ostringstream msg;
        msg << "frequency " << f << " Hz outside tabulated range [" << lo << ", " << hi << "] Hz";
        throw RangeError(msg.str());
    }
    if (f <= lo) return p.front().z;
    if (f >= hi) return p.back().z;
    std::size_t k = 1;
    while (p[k].f_hz < f) ++k;
    const double w = (f - p[k - 1].f_hz) / (p[k].f_hz - p[k - 1].f_hz);
    return {p[k - 1].z.real() + w * (p[k].z.real() - p[k - 1].z.real()),
            p[k - 1].z.imag() + w * (p[k].z.imag() - p[k - 1].z.imag())};
}

Eval evaluate(const Network& n, double omega, double c_dc) {
    return std::visit(
        [&](const auto& node) -> Eval {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Element>) {
                return clamp(element_impedance(node, omega), false);
            } else if constexpr (std::is_same_v<T, VaractorStatic>) {
                return clamp(1.0 / (kI * omega * c_dc), false);
            } else if constexpr (std::is_same_v<T, ImpedanceTable>) {
                return clamp(table_lookup(node, omega), false);
            } else {
                if (node.kind == CombinatorKind::series) {
                    cplx sum{0.0, 0.0};
                    bool pole = false;
                    for (const auto& child : node.items) {
                        const auto e = evaluate(child, omega, c_dc);
                        sum += e.z;
                        pole = pole || e.pole;
                    }
                    return clamp(sum, pole);
                }
                cplx y{0.0, 0.0};
                for (const auto& child : node.items) {
                    const auto e = evaluate(child, omega, c_dc);
                    if (e.z == cplx(0.0, 0.0)) return {cplx(0.0, 0.0), false};
                    y += 1.0 / e.z;
                }
                if (std::abs(y) * kPoleCap < 1.0) {
                    const double mag = std::abs(y);
                    if (mag == 0.0) return {cplx(kPoleCap, 0.0), true};
                    return {std::conj(y) / mag * kPoleCap, true};
                }
                return {1.0 / y, false};
            }
        },
        n.node);
}

}  // namespace

cplx element_impedance(const Element& element, double omega) {
    switch (element.kind) {
        case ElementKind::resistor:
            return {element.value, 0.0};
        case ElementKind::capacitor:
            return 1.0 / (kI * omega * element.value);
        case ElementKind::inductor: {
            const double x = omega * element.value;
            return {element.q ? x / *element.q : 0.0, x};
        }
    }
    return {0.0, 0.0};
}

ImpedanceSample branch_impedance(const Network& network, double omega, double c_dc) {
    const auto e = evaluate(network, omega, c_dc);
    return {omega, e.z, e.pole};
}

cplx z_eq(cplx z1, cplx z2, cplx z3) { return z2 * z3 + z1 * (z2 + z3); }

double find_resonance(const Network& network, ResonanceMode mode, double omega_lo,
                      double omega_hi, double c_dc) {
    auto f = [&](double w) {
        const cplx z = branch_impedance(network, w, c_dc).z;
        if (mode == ResonanceMode::series) return z.imag();
        return (1.0 / z).imag();
    };
    double lo = omega_lo;
    double hi = omega_hi;
    double flo = f(lo);
    const double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw NotFoundError("no resonance: imaginary part does not change sign in bracket");
    }
    while (hi - lo > 1e-10 * hi) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

namespace {

bool contains_role(const Network& n, ElementRole role) { return find_role(n, role) != nullptr; }

}  // namespace

cplx role_current_ratio(const Network& network, ElementRole role, double omega, double c_dc) {
    if (const auto* e = std::get_if<Element>(&network.node)) {
        if (e->kind == ElementKind::resistor && e->role == role) return {1.0, 0.0};
        throw DesignError("branch has no resistor with the requested role");
    }
    const auto* c = std::get_if<Combinator>(&network.node);
    if (c == nullptr) throw DesignError("branch has no resistor with the requested role");

    for (const auto& child : c->items) {
        if (!contains_role(child, role)) continue;
        const cplx inner = role_current_ratio(child, role, omega, c_dc);
        if (c->kind == CombinatorKind::series) return inner;
        cplx y_total{0.0, 0.0};
        for (const auto& other : c->items) y_total += 1.0 / evaluate(other, omega, c_dc).z;
        const cplx y_child = 1.0 / evaluate(child, omega, c_dc).z;
        return inner * y_child / y_total;
    }
    throw DesignError("branch has no resistor with the requested role");
}

BranchTriple evaluate_branches(const PfdDesign& design, double omega) {
    const double c = design.varactor.c_dc;
    return {branch_impedance(design.z1, omega, c), branch_impedance(design.z2, omega, c),
            branch_impedance(design.z3, omega, c)};
}

cplx loop_impedance(const BranchTriple& b) {
    return b.z3.z + 1.0 / (1.0 / b.z1.z + 1.0 / b.z2.z);
}

cplx drive_division(const BranchTriple& b) {
    const cplx y1 = 1.0 / b.z1.z;
    const cplx y2 = 1.0 / b.z2.z;
    return y1 / (y1 + y2);
}

}  // namespace pfd
