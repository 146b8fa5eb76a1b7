#pragma once

#include "pfd/circuit_model.hpp"

namespace pfd {

/// Impedance magnitudes are clamped here; a clamped value marks a pole.
inline constexpr double kPoleCap = 1e12;

struct ImpedanceSample {
    double omega = 0.0;
    cplx z;
    bool at_pole = false;
};

/// Phasor impedance of one element. Inductors with a Q use the constant-Q
/// series loss R = omega L / Q.
[[nodiscard]] cplx element_impedance(const Element& element, double omega);

/// Evaluates a branch tree. `c_dc` resolves the varactor placeholder.
/// Throws RangeError when omega falls outside a tabulated leaf.
[[nodiscard]] ImpedanceSample branch_impedance(const Network& network, double omega, double c_dc);

/// z2 z3 + z1 (z2 + z3).
[[nodiscard]] cplx z_eq(cplx z1, cplx z2, cplx z3);

enum class ResonanceMode { series, parallel };

/// Bisects the sign change of Im{Z} (series) or Im{1/Z} (parallel) inside
/// [omega_lo, omega_hi] to a relative tolerance of 1e-10.
/// Throws NotFoundError when the bracket has no sign change.
[[nodiscard]] double find_resonance(const Network& network, ResonanceMode mode, double omega_lo,
                                    double omega_hi, double c_dc);

/// Ratio of the current through the resistor tagged `role` to the current
/// entering the branch. Throws DesignError when no such resistor exists.
[[nodiscard]] cplx role_current_ratio(const Network& network, ElementRole role, double omega,
                                      double c_dc);

/// The three branch impedances of a design at one angular frequency.
struct BranchTriple {
    ImpedanceSample z1;
    ImpedanceSample z2;
    ImpedanceSample z3;

    [[nodiscard]] bool any_pole() const { return z1.at_pole || z2.at_pole || z3.at_pole; }
};

[[nodiscard]] BranchTriple evaluate_branches(const PfdDesign& design, double omega);

/// Impedance seen by the varactor loop: z3 + (z1 || z2), computed through
/// admittances so that a pole in either side branch stays finite.
[[nodiscard]] cplx loop_impedance(const BranchTriple& b);

/// Thevenin division of a source in z1 as seen by the varactor loop,
/// z2 / (z1 + z2), computed as y1 / (y1 + y2).
[[nodiscard]] cplx drive_division(const BranchTriple& b);

}  // namespace pfd
