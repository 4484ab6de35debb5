/**
 * @file config.hpp
 * @brief Experiment configuration: a flat INI-style document with typed keys
 *        whose names carry their units, plus the derived model parameters.
 *
 *   # comment
 *   [channel]
 *   width_um = 4000
 *
 * Unknown sections or keys are rejected; every error names `section.key`
 * and, when parsing, the line number.
 */
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "errors.hpp"
#include "kinetics.hpp"
#include "physchem.hpp"
#include "pulse.hpp"
#include "trace.hpp"
#include "txrx.hpp"
#include "units.hpp"

namespace mcrx::config {

struct ExperimentConfig {
    physchem::FluidicChannel channel;
    physchem::Electrolyte electrolyte{0.150};
    physchem::Electrolyte sensing_electrolyte{0.0015};
    physchem::ReceiverElectro receiver;
    physchem::DnaProbe probe;
    double cnp_shift_mV = 66.0;
    double baseline_current_uA = 31.25;

    std::string kinetics_fixture = "tdna";
    double k_on_per_M_s = 1814.9;
    double k_off_per_s = 13.538e-4;
    double delta_i_eq_uA = -0.805;

    pulse::TransportSpec transport;
    double c_avg_scale = 1.0;

    txrx::TxConfig tx;
    std::string bits; ///< explicit pattern; empty means generated from tx.seed
    double grid_dt_s = 1.0;
    double duration_s = 0.0;
    double saturation_cap_uA = 0.0; ///< 0 disables the cap

    txrx::NoiseConfig noise;

    double filter_window_s = 21.0;
    double raw_sample_offset_s = 0.0;
    double filtered_sample_offset_s = -10.5;

    /// Sections that appeared in the parsed document.
    std::set<std::string> sections;

    [[nodiscard]] kinetics::BindingKinetics binding() const {
        if (kinetics_fixture == "custom")
            return {k_on_per_M_s, k_off_per_s, "custom"};
        auto fx = kinetics::fixture(kinetics_fixture);
        if (!fx)
            throw ConfigError("kinetics.fixture: unknown fixture '" + kinetics_fixture + "'");
        return *fx;
    }
};

namespace detail {

enum class Constraint { any, positive, non_negative };

struct Field {
    std::string section;
    std::string key;
    bool required;
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;

    [[nodiscard]] std::string name() const { return section + "." + key; }
};

inline void check(double v, Constraint c, const std::string& where) {
    if (c == Constraint::positive && !(v > 0.0))
        throw ConfigError(where + ": must be positive");
    if (c == Constraint::non_negative && !(v >= 0.0))
        throw ConfigError(where + ": must be non-negative");
}

template <class Acc>
Field number(std::string section, std::string key, bool required, Constraint c, Acc acc) {
    Field f{std::move(section), std::move(key), required, {}, {}};
    f.set = [acc, c](ExperimentConfig& cfg, const std::string& v, const std::string& where) {
        double x = 0.0;
        try {
            x = parse_double(v, where);
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
        if (!std::isfinite(x))
            throw ConfigError(where + ": must be finite");
        check(x, c, where);
        acc(cfg) = x;
    };
    f.get = [acc](const ExperimentConfig& cfg) { return format_double(acc(const_cast<ExperimentConfig&>(cfg))); };
    return f;
}

template <class T, class Acc>
Field integer(std::string section, std::string key, bool required, long long lo, Acc acc) {
    Field f{std::move(section), std::move(key), required, {}, {}};
    f.set = [acc, lo](ExperimentConfig& cfg, const std::string& v, const std::string& where) {
        long long x = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
            throw ConfigError(where + ": expected an integer, got '" + v + "'");
        if (x < lo)
            throw ConfigError(where + ": must be >= " + std::to_string(lo));
        acc(cfg) = static_cast<T>(x);
    };
    f.get = [acc](const ExperimentConfig& cfg) { return std::to_string(acc(const_cast<ExperimentConfig&>(cfg))); };
    return f;
}

template <class Acc>
Field boolean(std::string section, std::string key, bool required, Acc acc) {
    Field f{std::move(section), std::move(key), required, {}, {}};
    f.set = [acc](ExperimentConfig& cfg, const std::string& v, const std::string& where) {
        if (v == "true")
            acc(cfg) = true;
        else if (v == "false")
            acc(cfg) = false;
        else
            throw ConfigError(where + ": expected true or false, got '" + v + "'");
    };
    f.get = [acc](const ExperimentConfig& cfg) {
        return std::string(acc(const_cast<ExperimentConfig&>(cfg)) ? "true" : "false");
    };
    return f;
}

template <class Acc>
Field text(std::string section, std::string key, bool required, std::vector<std::string> allowed, Acc acc) {
    Field f{std::move(section), std::move(key), required, {}, {}};
    f.set = [acc, allowed](ExperimentConfig& cfg, const std::string& v, const std::string& where) {
        if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
            std::string opts;
            for (const auto& a : allowed)
                opts += (opts.empty() ? "" : "|") + a;
            throw ConfigError(where + ": expected one of " + opts + ", got '" + v + "'");
        }
        acc(cfg) = v;
    };
    f.get = [acc](const ExperimentConfig& cfg) { return acc(const_cast<ExperimentConfig&>(cfg)); };
    return f;
}

using C = ExperimentConfig;
using K = Constraint;

inline const std::vector<Field>& schema() {
    static const std::vector<Field> fields = [] {
        std::vector<Field> f;
        f.push_back(number("channel", "width_um", true, K::positive, [](C& c) -> double& { return c.channel.width_um; }));
        f.push_back(number("channel", "height_um", true, K::positive, [](C& c) -> double& { return c.channel.height_um; }));
        f.push_back(number("channel", "density_kg_m3", true, K::positive, [](C& c) -> double& { return c.channel.density_kg_m3; }));
        f.push_back(number("channel", "viscosity_pa_s", true, K::positive, [](C& c) -> double& { return c.channel.viscosity_pa_s; }));
        f.push_back(number("channel", "flow_ul_min", true, K::non_negative, [](C& c) -> double& { return c.channel.flow_ul_min; }));

        f.push_back(number("electrolyte", "ionic_strength_M", true, K::positive, [](C& c) -> double& { return c.electrolyte.ionic_strength_M; }));
        f.push_back(number("electrolyte", "sensing_ionic_strength_M", true, K::positive, [](C& c) -> double& { return c.sensing_electrolyte.ionic_strength_M; }));

        f.push_back(number("receiver", "graphene_area_um2", true, K::positive, [](C& c) -> double& { return c.receiver.graphene_area_um2; }));
        f.push_back(number("receiver", "gate_electrode_area_um2", true, K::positive, [](C& c) -> double& { return c.receiver.gate_electrode_area_um2; }));
        f.push_back(number("receiver", "relative_permittivity", true, K::positive, [](C& c) -> double& { return c.receiver.relative_permittivity; }));
        f.push_back(number("receiver", "quantum_capacitance_uF_cm2", true, K::positive, [](C& c) -> double& { return c.receiver.quantum_capacitance_uF_cm2; }));
        f.push_back(number("receiver", "transconductance_uA_V", true, K::any, [](C& c) -> double& { return c.receiver.transconductance_uA_V; }));
        f.push_back(boolean("receiver", "neglect_gate_electrode", false, [](C& c) -> bool& { return c.receiver.neglect_gate_electrode; }));
        f.push_back(number("receiver", "cnp_shift_mV", false, K::non_negative, [](C& c) -> double& { return c.cnp_shift_mV; }));
        f.push_back(number("receiver", "baseline_current_uA", false, K::any, [](C& c) -> double& { return c.baseline_current_uA; }));
        f.push_back(integer<int>("receiver", "probe_bases", true, 1, [](C& c) -> int& { return c.probe.n_bases; }));
        f.push_back(number("receiver", "base_rise_nm", false, K::positive, [](C& c) -> double& { return c.probe.base_rise_nm; }));
        f.push_back(number("receiver", "effective_length_fraction", false, K::positive, [](C& c) -> double& { return c.probe.effective_length_fraction; }));

        f.push_back(text("kinetics", "fixture", true, {"tdna", "ntdna1", "ntdna2", "custom"}, [](C& c) -> std::string& { return c.kinetics_fixture; }));
        f.push_back(number("kinetics", "k_on_per_M_s", false, K::positive, [](C& c) -> double& { return c.k_on_per_M_s; }));
        f.push_back(number("kinetics", "k_off_per_s", false, K::positive, [](C& c) -> double& { return c.k_off_per_s; }));
        f.push_back(number("kinetics", "delta_i_eq_uA", true, K::any, [](C& c) -> double& { return c.delta_i_eq_uA; }));

        f.push_back(Field{"pulse", "kt_mode", true,
                          [](C& c, const std::string& v, const std::string& where) {
                              if (v != "direct" && v != "estimate")
                                  throw ConfigError(where + ": expected one of direct|estimate, got '" + v + "'");
                              c.transport.mode = v == "direct" ? pulse::TransportMode::direct
                                                               : pulse::TransportMode::estimate;
                          },
                          [](const C& c) {
                              return std::string(c.transport.mode == pulse::TransportMode::direct ? "direct"
                                                                                                  : "estimate");
                          }});
        f.push_back(number("pulse", "kt_value_per_M_s", false, K::positive, [](C& c) -> double& { return c.transport.value; }));
        f.push_back(number("pulse", "diffusivity_um2_s", false, K::positive, [](C& c) -> double& { return c.transport.diffusivity_um2_s; }));
        f.push_back(number("pulse", "sensor_length_um", false, K::positive, [](C& c) -> double& { return c.transport.sensor_length_um; }));
        f.push_back(number("pulse", "sensor_width_um", false, K::positive, [](C& c) -> double& { return c.transport.sensor_width_um; }));
        f.push_back(number("pulse", "c_avg_scale", false, K::positive, [](C& c) -> double& { return c.c_avg_scale; }));

        f.push_back(integer<int>("tx", "n_bits", true, 1, [](C& c) -> int& { return c.tx.n_bits; }));
        f.push_back(number("tx", "bit_interval_s", true, K::positive, [](C& c) -> double& { return c.tx.bit_interval_s; }));
        f.push_back(number("tx", "pulse_length_s", true, K::positive, [](C& c) -> double& { return c.tx.pulse_length_s; }));
        f.push_back(Field{"tx", "concentration_uM", true,
                          [](C& c, const std::string& v, const std::string& where) {
                              double uM = 0.0;
                              try {
                                  uM = parse_double(v, where);
                              } catch (const DataError& e) {
                                  throw ConfigError(e.what());
                              }
                              check(uM, K::positive, where);
                              c.tx.concentration_M = uM * units::uM;
                          },
                          [](const C& c) { return format_double(c.tx.concentration_M / units::uM); }});
        f.push_back(number("tx", "transmit_time_s", true, K::non_negative, [](C& c) -> double& { return c.tx.transmit_time_s; }));
        f.push_back(integer<std::uint64_t>("tx", "seed", true, 0, [](C& c) -> std::uint64_t& { return c.tx.seed; }));
        f.push_back(number("tx", "delay_s", false, K::non_negative, [](C& c) -> double& { return c.tx.delay_s; }));
        f.push_back(text("tx", "bits", false, {}, [](C& c) -> std::string& { return c.bits; }));
        f.push_back(number("tx", "grid_dt_s", false, K::positive, [](C& c) -> double& { return c.grid_dt_s; }));
        f.push_back(number("tx", "duration_s", false, K::non_negative, [](C& c) -> double& { return c.duration_s; }));
        f.push_back(number("tx", "saturation_cap_uA", false, K::non_negative, [](C& c) -> double& { return c.saturation_cap_uA; }));

        f.push_back(number("noise", "gaussian_sigma_uA", false, K::non_negative, [](C& c) -> double& { return c.noise.gaussian_sigma_uA; }));
        f.push_back(number("noise", "drift_uA_per_s", false, K::any, [](C& c) -> double& { return c.noise.drift_uA_per_s; }));
        f.push_back(integer<std::uint64_t>("noise", "seed", false, 0, [](C& c) -> std::uint64_t& { return c.noise.seed; }));

        f.push_back(number("filter", "window_s", false, K::positive, [](C& c) -> double& { return c.filter_window_s; }));
        f.push_back(number("filter", "raw_sample_offset_s", false, K::any, [](C& c) -> double& { return c.raw_sample_offset_s; }));
        f.push_back(number("filter", "filtered_sample_offset_s", false, K::any, [](C& c) -> double& { return c.filtered_sample_offset_s; }));
        return f;
    }();
    return fields;
}

inline std::string trim(std::string s) {
    const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

} // namespace detail

/// Parse a configuration document. `source` labels error messages.
inline ExperimentConfig parse(std::istream& is, const std::string& source = "config") {
    using detail::Field;
    ExperimentConfig cfg;
    const auto& fields = detail::schema();
    std::set<std::string> known_sections;
    for (const auto& f : fields)
        known_sections.insert(f.section);

    std::set<std::string> seen;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string where = source + ":" + std::to_string(lineno);
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(where + ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (!known_sections.count(section))
                throw ConfigError(where + ": unknown section [" + section + "]");
            cfg.sections.insert(section);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected key = value");
        if (section.empty())
            throw ConfigError(where + ": key outside of any section");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string name = section + "." + key;
        auto it = std::find_if(fields.begin(), fields.end(),
                               [&](const Field& f) { return f.section == section && f.key == key; });
        if (it == fields.end())
            throw ConfigError(where + ": unknown key " + name);
        if (!seen.insert(name).second)
            throw ConfigError(where + ": duplicate key " + name);
        it->set(cfg, value, where + " (" + name + ")");
    }

    for (const auto& f : fields)
        if (f.required && cfg.sections.count(f.section) && !seen.count(f.name()))
            throw ConfigError(source + ": missing required key " + f.name());

    if (cfg.sections.count("kinetics")) {
        const bool custom = cfg.kinetics_fixture == "custom";
        const bool has_rates = seen.count("kinetics.k_on_per_M_s") || seen.count("kinetics.k_off_per_s");
        if (custom && !(seen.count("kinetics.k_on_per_M_s") && seen.count("kinetics.k_off_per_s")))
            throw ConfigError(source + ": kinetics.fixture = custom requires kinetics.k_on_per_M_s and kinetics.k_off_per_s");
        if (!custom && has_rates)
            throw ConfigError(source + ": kinetics.k_on_per_M_s / k_off_per_s only allowed with kinetics.fixture = custom");
        if (!custom) {
            auto kin = cfg.binding();
            cfg.k_on_per_M_s = kin.k_on_per_M_s;
            cfg.k_off_per_s = kin.k_off_per_s;
        }
    }
    if (cfg.sections.count("pulse") && cfg.transport.mode == pulse::TransportMode::direct
        && !seen.count("pulse.kt_value_per_M_s"))
        throw ConfigError(source + ": pulse.kt_mode = direct requires pulse.kt_value_per_M_s");
    if (cfg.sections.count("filter") && !seen.count("filter.filtered_sample_offset_s"))
        cfg.filtered_sample_offset_s = -0.5 * cfg.filter_window_s;
    if (cfg.sections.count("tx")) {
        if (cfg.tx.pulse_length_s > cfg.tx.bit_interval_s)
            throw ConfigError(source + ": tx.pulse_length_s must not exceed tx.bit_interval_s");
        if (!cfg.bits.empty()) {
            txrx::Bits b;
            try {
                b = txrx::parse_bits(cfg.bits, source + " (tx.bits)");
            } catch (const DataError& e) {
                throw ConfigError(e.what());
            }
            if (static_cast<int>(b.size()) != cfg.tx.n_bits)
                throw ConfigError(source + ": tx.bits has " + std::to_string(b.size()) + " bits but tx.n_bits = "
                                  + std::to_string(cfg.tx.n_bits));
        }
        if (cfg.grid_dt_s > 1.0)
            throw ConfigError(source + ": tx.grid_dt_s must not exceed 1 s");
    }
    if (cfg.sections.count("receiver") && cfg.probe.effective_length_fraction > 1.0)
        throw ConfigError(source + ": receiver.effective_length_fraction must be <= 1");
    if (cfg.sections.count("receiver") && cfg.receiver.relative_permittivity <= 1.0)
        throw ConfigError(source + ": receiver.relative_permittivity must exceed 1");
    return cfg;
}

inline ExperimentConfig parse_string(const std::string& text, const std::string& source = "config") {
    std::istringstream is(text);
    return parse(is, source);
}

inline ExperimentConfig load(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw ConfigError(path + ": cannot open config file");
    return parse(is, path);
}

/// Canonical text: the sections present in `cfg`, every key, schema order.
inline std::string serialize(const ExperimentConfig& cfg) {
    std::ostringstream os;
    std::string current;
    for (const auto& f : detail::schema()) {
        if (!cfg.sections.count(f.section))
            continue;
        if (f.section == "kinetics" && cfg.kinetics_fixture != "custom"
            && (f.key == "k_on_per_M_s" || f.key == "k_off_per_s"))
            continue;
        if (f.name() == "tx.bits" && cfg.bits.empty())
            continue;
        if (f.section != current) {
            if (!current.empty())
                os << '\n';
            os << '[' << f.section << "]\n";
            current = f.section;
        }
        os << f.key << " = " << f.get(cfg) << '\n';
    }
    return os.str();
}

/// Lower-case hex SHA-256 of arbitrary bytes.
inline std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

inline std::string config_hash(const ExperimentConfig& cfg) { return sha256_hex(serialize(cfg)); }

inline void require_sections(const ExperimentConfig& cfg, std::initializer_list<const char*> names) {
    for (const char* s : names) {
        if (cfg.sections.count(s))
            continue;
        for (const auto& f : detail::schema())
            if (f.section == s && f.required)
                throw ConfigError("missing required key " + f.name() + " (section [" + s + "] absent)");
        throw ConfigError(std::string("missing section [") + s + "]");
    }
}

// ---------------------------------------------------------------------------
// Derived model parameters
// ---------------------------------------------------------------------------

/// Current per bound target in the sensing buffer, Q = g_m q / C_G.
inline double transduction_constant(const ExperimentConfig& cfg) {
    const auto stack = physchem::gate_stack(cfg.receiver, cfg.sensing_electrolyte);
    const double q = physchem::effective_charge(cfg.probe, stack.debye_length_nm);
    return kinetics::transduction_constant({cfg.receiver.transconductance_uA_V, q, stack.gate_nF});
}

inline pulse::PulseModelParams pulse_params(const ExperimentConfig& cfg) {
    pulse::PulseModelParams p;
    p.kinetics = cfg.binding();
    p.delta_i_eq_uA = cfg.delta_i_eq_uA;
    p.q_A = transduction_constant(cfg);
    p.c_avg_M = cfg.tx.concentration_M * cfg.c_avg_scale;
    p.k_t_star = pulse::transport_parameter(cfg.channel, cfg.transport);
    p.t_a_s = cfg.tx.delay_s;
    p.t_d_s = cfg.tx.delay_s + cfg.tx.pulse_length_s;
    return p;
}

inline txrx::LinkSetup link_setup(const ExperimentConfig& cfg) {
    txrx::LinkSetup s;
    s.tx = cfg.tx;
    s.pulse = pulse_params(cfg);
    s.synthesis.grid_dt_s = cfg.grid_dt_s;
    s.synthesis.duration_s = cfg.duration_s;
    s.synthesis.baseline_uA = cfg.baseline_current_uA;
    if (cfg.saturation_cap_uA > 0.0)
        s.synthesis.saturation_cap_uA = cfg.saturation_cap_uA;
    s.noise = cfg.noise;
    s.filter_window_s = cfg.filter_window_s;
    s.raw_sample_offset_s = cfg.raw_sample_offset_s;
    s.filtered_sample_offset_s = cfg.filtered_sample_offset_s;
    if (!cfg.bits.empty())
        s.bits = txrx::parse_bits(cfg.bits);
    return s;
}

} // namespace mcrx::config
