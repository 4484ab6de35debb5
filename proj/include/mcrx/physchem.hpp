/**
 * @file physchem.hpp
 * @brief Closed-form fluidic and electrostatic parameters of the microfluidic
 *        graphene-FET receiver.
 *
 * Inputs and outputs are in laboratory units (see field names); conversion
 * to SI happens inside each function. Every function is pure.
 *
 * Note on probe_density(): substituting the published gate capacitance, CNP
 * shift and screened probe charge gives ~2.4e4 probes/µm², an order of
 * magnitude above the commonly quoted ~2e3 µm⁻². The formula value is
 * returned as-is.
 */
#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "errors.hpp"
#include "units.hpp"

namespace mcrx::physchem {

/// Rectangular microfluidic channel and the fluid flowing through it.
struct FluidicChannel {
    double width_um = 4000.0;
    double height_um = 1500.0;
    double density_kg_m3 = 1000.0;
    double viscosity_pa_s = 0.001002;
    double flow_ul_min = 80.0;

    void validate() const {
        if (!(width_um > 0.0) || !(height_um > 0.0))
            throw DomainError("channel width and height must be positive");
        if (!(density_kg_m3 > 0.0))
            throw DomainError("fluid density must be positive");
        if (!(viscosity_pa_s > 0.0))
            throw DomainError("fluid viscosity must be positive");
        if (!(flow_ul_min >= 0.0))
            throw DomainError("volumetric flow must be non-negative");
    }
};

/// Electrostatic stack of the receiver (graphene channel + Pt gate).
struct ReceiverElectro {
    double graphene_area_um2 = 4.0e3;
    double gate_electrode_area_um2 = 7.85e6;
    double relative_permittivity = 80.0;
    double quantum_capacitance_uF_cm2 = 2.0;
    double transconductance_uA_V = -28.0;
    /// Drop the Pt/electrolyte double layer from the series stack.
    bool neglect_gate_electrode = true;

    void validate() const {
        if (!(graphene_area_um2 > 0.0) || !(gate_electrode_area_um2 > 0.0))
            throw DomainError("receiver areas must be positive");
        if (!(relative_permittivity > 1.0))
            throw DomainError("relative permittivity must exceed 1");
        if (!(quantum_capacitance_uF_cm2 > 0.0))
            throw DomainError("quantum capacitance density must be positive");
    }
};

struct Electrolyte {
    double ionic_strength_M = 0.150;

    void validate() const {
        if (!(ionic_strength_M > 0.0))
            throw DomainError("ionic strength must be positive");
    }
};

/// Single-stranded DNA probe modelled as a rod of n_bases standing on the
/// surface; its charge centre sits at effective_length_fraction of the rod.
struct DnaProbe {
    int n_bases = 18;
    double base_rise_nm = 0.34;
    double effective_length_fraction = 0.5;

    void validate() const {
        if (n_bases < 1)
            throw DomainError("probe must have at least one base");
        if (!(base_rise_nm > 0.0))
            throw DomainError("base rise must be positive");
        if (!(effective_length_fraction > 0.0) || effective_length_fraction > 1.0)
            throw DomainError("effective length fraction must be in (0, 1]");
    }

    [[nodiscard]] double charge_distance_nm() const {
        return n_bases * base_rise_nm * effective_length_fraction;
    }
};

/// D_H = 4 A / P for a rectangular duct, in µm.
inline double hydraulic_diameter(const FluidicChannel& ch) {
    if (!(ch.width_um > 0.0) || !(ch.height_um > 0.0))
        throw DomainError("hydraulic_diameter: channel dimensions must be positive");
    const double area = ch.width_um * ch.height_um;
    const double perimeter = 2.0 * (ch.width_um + ch.height_um);
    return 4.0 * area / perimeter;
}

/// Mean linear velocity u = u_V / A_ch, in µm/s.
inline double linear_velocity(const FluidicChannel& ch) {
    ch.validate();
    const double flow_m3_s = ch.flow_ul_min * units::ul_per_min;
    const double area_m2 = ch.width_um * ch.height_um * units::um2;
    return flow_m3_s / area_m2 / units::um;
}

inline double reynolds_number(const FluidicChannel& ch) {
    ch.validate();
    const double u = linear_velocity(ch) * units::um;
    const double dh = hydraulic_diameter(ch) * units::um;
    return ch.density_kg_m3 * u * dh / ch.viscosity_pa_s;
}

/// λ_D ≈ 0.3 / sqrt(ionic strength in M), in nm (aqueous, room temperature).
inline double debye_length(const Electrolyte& e) {
    if (!(e.ionic_strength_M > 0.0))
        throw DomainError("debye_length: ionic strength must be positive");
    return 0.3 / std::sqrt(e.ionic_strength_M);
}

/// Parallel-plate double-layer capacitance A ε_r ε_0 / λ_D, in nF.
inline double edl_capacitance(double area_um2, double relative_permittivity, double debye_length_nm) {
    if (!(area_um2 > 0.0) || !(relative_permittivity > 0.0) || !(debye_length_nm > 0.0))
        throw DomainError("edl_capacitance: inputs must be positive");
    const double farad = area_um2 * units::um2 * relative_permittivity * units::vacuum_permittivity
                         / (debye_length_nm * units::nm);
    return farad / units::nF;
}

/// Quantum capacitance of the graphene sheet, c_q · A, in nF.
inline double quantum_capacitance(const ReceiverElectro& rx) {
    rx.validate();
    return rx.quantum_capacitance_uF_cm2 * units::uF_per_cm2 * rx.graphene_area_um2 * units::um2 / units::nF;
}

/// Series combination of the graphene EDL, quantum and (optionally) Pt EDL
/// capacitances, in nF. Pass std::nullopt for c_pt_nF to neglect the Pt term.
inline double gate_capacitance(double c_gr_nF, double c_q_nF, std::optional<double> c_pt_nF = std::nullopt) {
    if (!(c_gr_nF > 0.0) || !(c_q_nF > 0.0) || (c_pt_nF && !(*c_pt_nF > 0.0)))
        throw DomainError("gate_capacitance: capacitances must be positive");
    double inverse = 1.0 / c_gr_nF + 1.0 / c_q_nF;
    if (c_pt_nF)
        inverse += 1.0 / *c_pt_nF;
    return 1.0 / inverse;
}

/// Capacitance breakdown of a receiver in a given electrolyte, all in nF.
struct GateStack {
    double debye_length_nm;
    double graphene_edl_nF;
    double electrode_edl_nF;
    double quantum_nF;
    double gate_nF;
};

inline GateStack gate_stack(const ReceiverElectro& rx, const Electrolyte& e) {
    rx.validate();
    e.validate();
    GateStack s{};
    s.debye_length_nm = debye_length(e);
    s.graphene_edl_nF = edl_capacitance(rx.graphene_area_um2, rx.relative_permittivity, s.debye_length_nm);
    s.electrode_edl_nF = edl_capacitance(rx.gate_electrode_area_um2, rx.relative_permittivity, s.debye_length_nm);
    s.quantum_nF = quantum_capacitance(rx);
    s.gate_nF = gate_capacitance(s.graphene_edl_nF, s.quantum_nF,
                                 rx.neglect_gate_electrode ? std::nullopt : std::optional(s.electrode_edl_nF));
    return s;
}

/// Debye-screened charge of one DNA strand, n · q_e · exp(-r / λ_D), in C.
inline double effective_charge(const DnaProbe& probe, double debye_length_nm) {
    probe.validate();
    if (!(debye_length_nm > 0.0))
        throw DomainError("effective_charge: Debye length must be positive");
    return probe.n_bases * units::elementary_charge * std::exp(-probe.charge_distance_nm() / debye_length_nm);
}

/// Probe surface density n = ΔV_CNP · C_G / (q · A), in µm⁻².
inline double probe_density(double cnp_shift_mV, double gate_nF, double charge_C, double area_um2) {
    if (!(cnp_shift_mV >= 0.0) || !(gate_nF > 0.0) || !(charge_C > 0.0) || !(area_um2 > 0.0))
        throw DomainError("probe_density: inputs must be positive");
    return cnp_shift_mV * units::mV * gate_nF * units::nF / (charge_C * area_um2);
}

} // namespace mcrx::physchem
