/**
 * @file units.hpp
 * @brief Physical constants and the unit conversions used at the public API
 *        boundary. Public inputs use laboratory units (µm, µl/min, nM, nF, mV);
 *        computation happens in SI.
 */
#pragma once

namespace mcrx::units {

// CODATA 2018 exact / recommended values.
inline constexpr double vacuum_permittivity = 8.8541878128e-12; // F/m
inline constexpr double elementary_charge = 1.602176634e-19;    // C
inline constexpr double avogadro = 6.02214076e23;               // 1/mol

inline constexpr double um = 1e-6;  // m
inline constexpr double nm = 1e-9;  // m
inline constexpr double um2 = 1e-12; // m^2
inline constexpr double ul_per_min = 1e-9 / 60.0; // m^3/s
inline constexpr double nF = 1e-9;  // F
inline constexpr double uA = 1e-6;  // A
inline constexpr double mV = 1e-3;  // V
inline constexpr double uF_per_cm2 = 1e-6 / 1e-4; // F/m^2
inline constexpr double nM = 1e-9;  // mol/L
inline constexpr double uM = 1e-6;  // mol/L
inline constexpr double um2_per_s = 1e-12; // m^2/s
inline constexpr double liters_per_m3 = 1e3;

} // namespace mcrx::units
