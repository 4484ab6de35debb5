/**
 * @file kinetics.hpp
 * @brief Langmuir probe/target hybridisation: equilibrium isotherm, the
 *        association/dissociation time course, and the charge-to-current
 *        transduction constant that converts bound strands into ΔI_ds.
 *
 * Sign convention: target binding lowers I_ds, so ΔI values for tDNA are
 * negative. Functions are linear in the ΔI they receive and never flip sign.
 */
#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "errors.hpp"
#include "units.hpp"

namespace mcrx::kinetics {

struct BindingKinetics {
    double k_on_per_M_s;  ///< k⁺
    double k_off_per_s;   ///< k⁻
    std::string label = "custom";

    void validate() const {
        if (!(k_on_per_M_s > 0.0) || !(k_off_per_s > 0.0))
            throw DomainError("binding kinetics '" + label + "': rates must be positive");
    }

    /// K_D = k⁻ / k⁺, in M.
    [[nodiscard]] double dissociation_constant_M() const { return k_off_per_s / k_on_per_M_s; }
};

/// Measured hybridisation rates of the 18-mer probe against its complement
/// and two mismatched strands, together with the tabulated K_D (M).
struct KineticsFixture {
    BindingKinetics kinetics;
    double tabulated_kd_M;
};

inline const std::array<KineticsFixture, 3>& table_fixtures() {
    static const std::array<KineticsFixture, 3> rows{{
        {{1814.9, 13.538e-4, "tdna"}, 0.746e-6},
        {{355.3, 12.454e-4, "ntdna1"}, 3.506e-6},
        {{48.9, 13.110e-4, "ntdna2"}, 26.829e-6},
    }};
    return rows;
}

/// Look up a fixture by name (`tdna`, `ntdna1`, `ntdna2`).
inline std::optional<BindingKinetics> fixture(std::string_view name) {
    for (const auto& row : table_fixtures())
        if (row.kinetics.label == name)
            return row.kinetics;
    return std::nullopt;
}

/// Equilibrium plateau ΔI_sat / (1 + K_D / c). Units of ΔI pass through.
inline double isotherm_response(double concentration_M, double kd_M, double saturation_current) {
    if (!(concentration_M >= 0.0) || !(kd_M > 0.0))
        throw DomainError("isotherm_response: need c >= 0 and K_D > 0");
    if (concentration_M == 0.0)
        return 0.0;
    return saturation_current / (1.0 + kd_M / concentration_M);
}

/// Fraction of occupied probes at equilibrium, c / (c + K_D).
inline double equilibrium_occupancy(double concentration_M, const BindingKinetics& kin) {
    kin.validate();
    if (!(concentration_M >= 0.0))
        throw DomainError("equilibrium_occupancy: concentration must be non-negative");
    return concentration_M / (concentration_M + kin.dissociation_constant_M());
}

/// Observed association rate k⁺ c + k⁻, in 1/s.
inline double observed_rate(double concentration_M, const BindingKinetics& kin) {
    return kin.k_on_per_M_s * concentration_M + kin.k_off_per_s;
}

/// Association phase ΔI_eq (1 - exp(-(k⁺c + k⁻) t)), t measured from the
/// start of the exposure.
inline double association_trace(double t_s, double concentration_M, const BindingKinetics& kin,
                                double delta_i_eq) {
    if (!(t_s >= 0.0))
        throw DomainError("association_trace: time must be non-negative");
    kin.validate();
    return delta_i_eq * -std::expm1(-observed_rate(concentration_M, kin) * t_s);
}

/// Dissociation phase ΔI(t_d) exp(-k⁻ (t - t_d)) for t > t_d.
inline double dissociation_trace(double t_s, double t_d_s, double k_off_per_s, double delta_i_at_td) {
    if (!(t_s > t_d_s))
        throw DomainError("dissociation_trace: requires t > t_d");
    if (!(k_off_per_s > 0.0))
        throw DomainError("dissociation_trace: k_off must be positive");
    return delta_i_at_td * std::exp(-k_off_per_s * (t_s - t_d_s));
}

/// Full exposure/wash time course: association on [0, t_d], dissociation after.
inline double langmuir_trace(double t_s, double t_d_s, double concentration_M, const BindingKinetics& kin,
                             double delta_i_eq) {
    if (t_s <= t_d_s)
        return association_trace(t_s, concentration_M, kin, delta_i_eq);
    const double at_td = association_trace(t_d_s, concentration_M, kin, delta_i_eq);
    return dissociation_trace(t_s, t_d_s, kin.k_off_per_s, at_td);
}

/// Current change per bound target strand: Q = g_m q / C_G.
struct Transduction {
    double transconductance_uA_V;
    double target_charge_C;
    double gate_nF;

    void validate() const {
        if (!(gate_nF > 0.0))
            throw DomainError("transduction: gate capacitance must be positive");
        if (!(target_charge_C >= 0.0))
            throw DomainError("transduction: target charge must be non-negative");
    }
};

/// Q in ampere per bound molecule; carries the sign of g_m.
inline double transduction_constant(const Transduction& tr) {
    tr.validate();
    return tr.transconductance_uA_V * units::uA * tr.target_charge_C / (tr.gate_nF * units::nF);
}

struct ReceptorCount {
    double count;
    bool sign_consistent;
};

/// N_R = ΔI / Q with ΔI in µA and Q in A per molecule. A negative ratio means
/// ΔI and Q disagree in sign; the raw value is returned with the flag cleared.
inline ReceptorCount bound_receptors_from_current(double delta_i_uA, double q_A) {
    if (q_A == 0.0 || !std::isfinite(q_A))
        throw DomainError("bound_receptors_from_current: transduction constant must be non-zero");
    const double n = delta_i_uA * units::uA / q_A;
    return {n, n >= 0.0};
}

/// Receptor ceiling N_R,max = ((c + K_D) / c) N_R,eq.
inline double max_bound_receptors(double concentration_M, double kd_M, double n_eq) {
    if (!(concentration_M > 0.0))
        throw DomainError("max_bound_receptors: concentration must be positive");
    return (concentration_M + kd_M) / concentration_M * n_eq;
}

} // namespace mcrx::kinetics
