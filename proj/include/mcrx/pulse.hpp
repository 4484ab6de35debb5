/**
 * @file pulse.hpp
 * @brief Receiver response to a finite rectangular concentration pulse.
 *
 * Binding under convective-diffusive transport to a surface receiver admits an
 * approximate closed form in terms of the principal Lambert W branch. Written
 * in current (ΔI = Q · N_R) it reads, for τ = t - t_a,
 *
 *   association, t_a ≤ t ≤ t_d:
 *     ΔI(t) = ΔI_eq · (1 - W₀[α* exp(α* - β* τ)] / α*)
 *   dissociation, t > t_d, with N₀ = ΔI(t_d) / Q:
 *     ΔI(t) = -γ* Q · W₀[-(N₀/γ*) exp((-k⁺ N₀ - k_T* k⁻ (t - t_d)) / (k⁺ γ*))]
 *
 * with N_eq = ΔI_eq / Q and
 *   α* = k⁺ c N_eq / (k⁻ N_eq + k_T* c)
 *   β* = (k⁺ c + k⁻) / (1 + k⁻ N_eq / (k_T* c))
 *   γ* = (c + K_D) N_eq / c + k_T* / k⁺
 *
 * k_T* (M⁻¹s⁻¹, molecules delivered per second per molar of bulk target)
 * folds the channel transport into the kinetics. As k_T* → ∞ the response
 * reduces to the well-mixed Langmuir solution.
 */
#pragma once

#include <cmath>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "kinetics.hpp"
#include "lambert_w.hpp"
#include "physchem.hpp"
#include "trace.hpp"
#include "units.hpp"

namespace mcrx::pulse {

struct PulseModelParams {
    kinetics::BindingKinetics kinetics{1814.9, 13.538e-4, "tdna"};
    double delta_i_eq_uA = -0.805;  ///< equilibrium response at c_avg (signed)
    double q_A = -8.27e-13;         ///< current per bound molecule (signed)
    double c_avg_M = 1e-6;
    double k_t_star = 1e7;          ///< M⁻¹s⁻¹
    double t_a_s = 0.0;
    double t_d_s = 30.0;

    void validate() const {
        kinetics.validate();
        if (!(t_d_s > t_a_s))
            throw DomainError("pulse: t_d must exceed t_a");
        if (!(c_avg_M > 0.0))
            throw DomainError("pulse: c_avg must be positive");
        if (!(k_t_star > 0.0))
            throw DomainError("pulse: k_T* must be positive");
        if (q_A == 0.0 || delta_i_eq_uA == 0.0 || (q_A > 0.0) != (delta_i_eq_uA > 0.0))
            throw DomainError("pulse: ΔI_eq and Q must be non-zero with the same sign");
    }

    /// Bound receptors at equilibrium, N_eq = ΔI_eq / Q.
    [[nodiscard]] double n_eq() const { return delta_i_eq_uA * units::uA / q_A; }
};

inline double alpha_star(const PulseModelParams& p) {
    const double n = p.n_eq();
    const double denom = p.kinetics.k_off_per_s * n + p.k_t_star * p.c_avg_M;
    if (denom == 0.0)
        throw DomainError("alpha_star: zero denominator");
    return p.kinetics.k_on_per_M_s * p.c_avg_M * n / denom;
}

inline double beta_star(const PulseModelParams& p) {
    const double transport = p.k_t_star * p.c_avg_M;
    if (transport == 0.0)
        throw DomainError("beta_star: zero transport term");
    const double denom = 1.0 + p.kinetics.k_off_per_s * p.n_eq() / transport;
    if (denom == 0.0)
        throw DomainError("beta_star: zero denominator");
    return kinetics::observed_rate(p.c_avg_M, p.kinetics) / denom;
}

inline double gamma_star(const PulseModelParams& p) {
    return kinetics::max_bound_receptors(p.c_avg_M, p.kinetics.dissociation_constant_M(), p.n_eq())
           + p.k_t_star / p.kinetics.k_on_per_M_s;
}

/// Association branch, τ = t - t_a ≥ 0, in µA.
inline double association_response(double tau_s, const PulseModelParams& p) {
    const double a = alpha_star(p);
    const double b = beta_star(p);
    const double w = lambert_w0(a * std::exp(a - b * tau_s));
    return p.delta_i_eq_uA * (1.0 - w / a);
}

/// Dissociation branch starting from ΔI(t_d) = at_td_uA, τ = t - t_d > 0.
inline double dissociation_response(double tau_s, double at_td_uA, const PulseModelParams& p) {
    const double g = gamma_star(p);
    const double n0 = at_td_uA * units::uA / p.q_A;
    const double k_on = p.kinetics.k_on_per_M_s;
    if (n0 > g) {
        std::ostringstream msg;
        msg << "pulse dissociation: starting occupancy N0=" << n0 << " exceeds gamma*=" << g
            << "; check that |ΔI(t_d)| is below the receptor ceiling";
        throw ModelError(msg.str());
    }
    const double exponent = (-k_on * n0 - p.k_t_star * p.kinetics.k_off_per_s * tau_s) / (k_on * g);
    const double arg = -(n0 / g) * std::exp(exponent);
    if (arg < -detail::inv_e - detail::branch_clamp) {
        std::ostringstream msg;
        msg << "pulse dissociation: Lambert W argument " << arg << " below -1/e (N0=" << n0
            << ", gamma*=" << g << "); check that |ΔI_eq| and Q are consistent";
        throw ModelError(msg.str());
    }
    return -g * p.q_A * lambert_w0(arg) / units::uA;
}

/// ΔI_ds(t) in µA for one pulse: zero before t_a, association on [t_a, t_d],
/// dissociation on (t_d, ∞). ΔI(t_d) is recomputed from the association branch.
inline double pulse_response(double t_s, const PulseModelParams& p) {
    if (t_s < p.t_a_s)
        return 0.0;
    if (t_s <= p.t_d_s)
        return association_response(t_s - p.t_a_s, p);
    const double at_td = association_response(p.t_d_s - p.t_a_s, p);
    return dissociation_response(t_s - p.t_d_s, at_td, p);
}

/// Evaluate over arbitrary times; the result is order-independent.
inline std::vector<double> pulse_response(std::span<const double> times, const PulseModelParams& p) {
    p.validate();
    std::vector<double> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i)
        out[i] = pulse_response(times[i], p);
    return out;
}

struct PulseResponse {
    std::vector<double> times_s;
    std::vector<double> delta_i_uA;
    std::vector<double> normalized;
};

inline PulseResponse evaluate_pulse(const PulseModelParams& p, double t0, double dt, std::size_t n,
                                    double baseline_uA) {
    if (baseline_uA == 0.0)
        throw DomainError("evaluate_pulse: baseline must be non-zero");
    PulseResponse r;
    r.times_s.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        r.times_s[i] = t0 + static_cast<double>(i) * dt;
    r.delta_i_uA = pulse_response(r.times_s, p);
    r.normalized.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        r.normalized[i] = (baseline_uA + r.delta_i_uA[i]) / baseline_uA;
    return r;
}

inline Trace pulse_trace(const PulseModelParams& p, double t0, double dt, std::size_t n, double baseline_uA) {
    auto r = evaluate_pulse(p, t0, dt, n, baseline_uA);
    Trace tr{t0, dt, std::move(r.delta_i_uA), baseline_uA, TraceUnit::microampere};
    for (double& s : tr.samples)
        s += baseline_uA;
    return tr;
}

enum class TransportMode { direct, estimate };

/// How to obtain k_T*. Direct mode passes `value` through. Estimate mode uses
/// the Lévêque boundary-layer flux onto a sensor of length L (along the flow)
/// and width W in a channel of height H and width W_c:
///
///   Pe_H = Q / (W_c D),  Pe_s = 6 (L/H)² Pe_H,  J / c = 0.8075 D W Pe_s^{1/3}
///
/// converted from m³/s to molecules · s⁻¹ · M⁻¹. This is an order-of-magnitude
/// surrogate valid for Pe_s ≫ 1, not a fitted value.
struct TransportSpec {
    TransportMode mode = TransportMode::direct;
    double value = 1e7;
    double diffusivity_um2_s = 100.0;
    double sensor_length_um = 40.0;
    double sensor_width_um = 100.0;
};

inline double transport_parameter(const physchem::FluidicChannel& ch, const TransportSpec& spec) {
    if (spec.mode == TransportMode::direct) {
        if (!(spec.value > 0.0))
            throw DomainError("transport_parameter: direct value must be positive");
        return spec.value;
    }
    ch.validate();
    if (!(ch.flow_ul_min > 0.0))
        throw DomainError("transport_parameter: estimate mode requires non-zero flow");
    if (!(spec.diffusivity_um2_s > 0.0) || !(spec.sensor_length_um > 0.0) || !(spec.sensor_width_um > 0.0))
        throw DomainError("transport_parameter: diffusivity and sensor size must be positive");
    const double d = spec.diffusivity_um2_s * units::um2_per_s;
    const double q = ch.flow_ul_min * units::ul_per_min;
    const double pe_channel = q / (ch.width_um * units::um * d);
    const double ratio = spec.sensor_length_um / ch.height_um;
    const double pe_sensor = 6.0 * ratio * ratio * pe_channel;
    const double flux_per_conc = 0.8075 * d * spec.sensor_width_um * units::um * std::cbrt(pe_sensor);
    return flux_per_conc * units::liters_per_m3 * units::avogadro;
}

} // namespace mcrx::pulse
