// Synthetic data shared by the fitting tests and the acceptance runner.
#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "mcrx/kinetics.hpp"

namespace fixtures {

inline constexpr double isotherm_kd_nM = 730.0;
inline constexpr double isotherm_sat_uA = 1.393;

inline const std::vector<double>& isotherm_concentrations_nM() {
    static const std::vector<double> c{50, 100, 250, 500, 1000, 2500, 5000, 10000};
    return c;
}

/// Plateaus at the standard concentrations; noise sigma as a fraction of |ΔI_sat|.
inline std::vector<double> isotherm_plateaus(double noise_fraction, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    std::vector<double> y;
    for (double c : isotherm_concentrations_nM()) {
        const double clean = mcrx::kinetics::isotherm_response(c, isotherm_kd_nM, isotherm_sat_uA);
        y.push_back(clean + noise_fraction * isotherm_sat_uA * (noise_fraction > 0.0 ? n01(rng) : 0.0));
    }
    return y;
}

struct KineticsTrace {
    std::vector<double> t;
    std::vector<double> y;
    double delta_i_eq;
};

/// Exposure (1800 s) then wash (1200 s) at 1 uM, 1 s sampling. ΔI_eq follows
/// the isotherm with the row's own K_D; noise sigma is a fraction of |ΔI_eq|.
inline KineticsTrace kinetics_trace(const mcrx::kinetics::BindingKinetics& kin, double noise_fraction,
                                    std::uint64_t seed, double c_M = 1e-6, double t_d = 1800.0,
                                    double t_wash = 1200.0) {
    KineticsTrace tr;
    tr.delta_i_eq = -mcrx::kinetics::isotherm_response(c_M, kin.dissociation_constant_M(), isotherm_sat_uA);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    const int n = static_cast<int>(t_d + t_wash) + 1;
    for (int i = 0; i < n; ++i) {
        const double t = i;
        const double clean = mcrx::kinetics::langmuir_trace(t, t_d, c_M, kin, tr.delta_i_eq);
        tr.t.push_back(t);
        tr.y.push_back(clean + noise_fraction * std::abs(tr.delta_i_eq) * n01(rng));
    }
    return tr;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

} // namespace fixtures
