#pragma once

// Data model for 2:1 parametric frequency divider designs: the three one-port
// branches seen from the varactor node, the varactor expansion, and the
// design-file reader/writer.

#include <complex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pfd {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Incremental capacitance-voltage law C(v) = dq/dv = C_DC (1 + C_d v + C_d2 v^2).
struct VaractorModel {
    double c_dc = 0.0;    // F
    double c_d = 0.0;     // 1/V
    double c_d2 = 0.0;    // 1/V^2
    double v_bias = 0.0;  // V, metadata only

    [[nodiscard]] double capacitance(double v) const {
        return c_dc * (1.0 + c_d * v + c_d2 * v * v);
    }

    /// Cubic charge-to-voltage inverse of the incremental law,
    /// v(q) = a1 q + a2 q^2 + a3 q^3, truncated at third order.
    struct ChargeVoltage {
        double a1;  // 1/F
        double a2;  // V/C^2
        double a3;  // V/C^3
    };

    [[nodiscard]] ChargeVoltage charge_voltage() const {
        const double c = c_dc;
        return {1.0 / c, -c_d / (2.0 * c * c),
                (0.5 * c_d * c_d - c_d2 / 3.0) / (c * c * c)};
    }

    [[nodiscard]] double voltage(double q) const {
        const auto k = charge_voltage();
        return q * (k.a1 + q * (k.a2 + q * k.a3));
    }

    /// dv/dq of the cubic inverse.
    [[nodiscard]] double elastance(double q) const {
        const auto k = charge_voltage();
        return k.a1 + q * (2.0 * k.a2 + 3.0 * q * k.a3);
    }
};

/// Half-width of the voltage window over which C(v) must stay positive.
inline constexpr double kVaractorWindowV = 2.0;

enum class ElementKind { resistor, inductor, capacitor };

/// Marks the resistors that stand for the source and load terminations.
enum class ElementRole { none, source, load };

struct Element {
    ElementKind kind = ElementKind::resistor;
    double value = 0.0;        // ohm, henry or farad
    std::optional<double> q;   // inductors only; absent means lossless
    ElementRole role = ElementRole::none;

    static Element resistor(double ohm, ElementRole role = ElementRole::none) {
        return {ElementKind::resistor, ohm, std::nullopt, role};
    }
    static Element inductor(double henry, std::optional<double> q = std::nullopt) {
        return {ElementKind::inductor, henry, q, ElementRole::none};
    }
    static Element capacitor(double farad) {
        return {ElementKind::capacitor, farad, std::nullopt, ElementRole::none};
    }
};

struct TablePoint {
    double f_hz;
    cplx z;
};

/// Measured or simulated impedance samples, linearly interpolated in frequency.
struct ImpedanceTable {
    std::vector<TablePoint> points;
};

/// Resolves to the static varactor capacitance C_DC.
struct VaractorStatic {};

struct Network;

enum class CombinatorKind { series, parallel };

struct Combinator {
    CombinatorKind kind = CombinatorKind::series;
    std::vector<Network> items;
};

/// One-port composition tree.
struct Network {
    std::variant<Element, Combinator, ImpedanceTable, VaractorStatic> node;

    static Network of(Element e) { return Network{std::move(e)}; }
    static Network varactor() { return Network{VaractorStatic{}}; }
    static Network table(std::vector<TablePoint> points) {
        return Network{ImpedanceTable{std::move(points)}};
    }
    static Network series(std::vector<Network> items) {
        return Network{Combinator{CombinatorKind::series, std::move(items)}};
    }
    static Network parallel(std::vector<Network> items) {
        return Network{Combinator{CombinatorKind::parallel, std::move(items)}};
    }
};

using OnePortNetwork = Network;

[[nodiscard]] int count_varactors(const Network& network);

/// True when the varactor placeholder is reached only through series combinators.
[[nodiscard]] bool varactor_in_series_path(const Network& network);

/// First resistor carrying `role`, if any.
[[nodiscard]] const Element* find_role(const Network& network, ElementRole role);

/// Lumped quarter-wave stage inserted between the output tank and R_L.
struct TransformerSpec {
    double c_match = 0.0;  // F
    double l_match = 0.0;  // H
};

/// Five-component topology: z1 = R_S + (L1 || C1), z2 = (L2 || C2) + R_L,
/// z3 = L3 + varactor.
struct CanonicalSpec {
    double l1 = 0.0;
    double c1 = 0.0;
    double l2 = 0.0;
    double c2 = 0.0;
    double l3 = 0.0;
    std::optional<double> inductor_q;
    std::optional<TransformerSpec> transformer;
};

struct PfdDesign {
    Network z1;  // input branch, contains R_S
    Network z2;  // output branch, contains R_L
    Network z3;  // shunt branch, contains the varactor
    VaractorModel varactor;
    double f_out = 0.0;          // Hz
    double r_source = 0.0;       // ohm
    double r_load = 0.0;         // ohm
    double noise_floor_dbm = -80.0;
    std::optional<CanonicalSpec> canonical;  // set when built from the shorthand
};

struct FrequencyPair {
    double omega_o;
    double omega_p;

    static FrequencyPair from_f_out(double f_out_hz) {
        const double w = 2.0 * kPi * f_out_hz;
        return {w, 2.0 * w};
    }
};

enum class Severity { error, warning };

struct Diagnostic {
    Severity severity;
    std::string where;
    std::string message;
};

/// Builds the three branches from the canonical shorthand.
[[nodiscard]] PfdDesign make_canonical_design(const CanonicalSpec& spec,
                                              const VaractorModel& varactor,
                                              double f_out, double r_source,
                                              double r_load);

/// Parses a design file. Throws ParseError on malformed JSON and DesignError
/// on schema or invariant violations (warnings are not fatal).
[[nodiscard]] PfdDesign parse_design(std::string_view document);

/// Schema-checked parse without the invariant pass, for reporting every
/// diagnostic through validate_design.
[[nodiscard]] PfdDesign parse_design_unchecked(std::string_view document);

/// Writes a design back in the design-file format. Canonical designs keep
/// the shorthand; everything else is written as explicit trees.
[[nodiscard]] std::string serialize_design(const PfdDesign& design);

[[nodiscard]] std::vector<Diagnostic> validate_design(const PfdDesign& design);

[[nodiscard]] bool has_errors(const std::vector<Diagnostic>& diagnostics);

}  // namespace pfd
