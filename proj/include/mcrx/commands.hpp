/**
 * @file commands.hpp
 * @brief Implementations of the `mcrx` subcommands. Each command writes a
 *        `key = value` report to the given stream and its artifacts to disk,
 *        and signals failure by throwing one of the errors in errors.hpp.
 */
#pragma once

#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "fitting.hpp"
#include "physchem.hpp"
#include "pulse.hpp"
#include "trace.hpp"
#include "txrx.hpp"

namespace mcrx::commands {

inline constexpr const char* tool_version = "mcrx 1.0.0";
inline constexpr const char* config_env_var = "MCRX_CONFIG";

enum ExitCode : int { ok = 0, io_failure = 1, config_error = 2, data_error = 3, non_convergence = 4 };

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void kv(std::ostream& os, const std::string& key, double value) {
    os << key << " = " << format_double(value) << '\n';
}

inline void kv(std::ostream& os, const std::string& key, const std::string& value) {
    os << key << " = " << value << '\n';
}

inline std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw DataError(path + ": cannot open file");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot open '" + path.string() + "' for writing");
    os << bytes;
    if (!os)
        throw IoError("write failed for '" + path.string() + "'");
}

inline std::string trace_bytes(const Trace& tr) {
    std::ostringstream os;
    write_trace_csv(os, tr);
    return os.str();
}

inline void report_fit(std::ostream& os, const fitting::FitResult& fit) {
    for (std::size_t j = 0; j < fit.parameters.size(); ++j) {
        kv(os, fit.names[j], fit.parameters[j]);
        kv(os, fit.names[j] + "_stderr", std::sqrt(fit.covariance_diag[j]));
    }
    kv(os, "residual_norm", fit.residual_norm);
    kv(os, "gradient_norm", fit.gradient_norm);
    kv(os, "iterations", std::to_string(fit.iterations));
    kv(os, "converged", fit.converged ? "true" : "false");
    kv(os, "message", fit.message);
}

inline void write_residuals(const std::string& path, const std::string& x_name, const fitting::FitProblem& prob,
                            const fitting::FitResult& fit) {
    std::ostringstream os;
    os << x_name << ",observed_uA,predicted_uA,residual_uA\n";
    for (std::size_t i = 0; i < prob.x.size(); ++i) {
        const double pred = prob.predict(fit.parameters, prob.x[i]);
        os << format_double(prob.x[i]) << ',' << format_double(prob.y[i]) << ',' << format_double(pred) << ','
           << format_double(prob.y[i] - pred) << '\n';
    }
    write_file(path, os.str());
}

} // namespace detail

/// Path of the configuration to use: explicit flag first, then $MCRX_CONFIG.
inline std::string resolve_config_path(const std::string& flag) {
    if (!flag.empty())
        return flag;
    if (const char* env = std::getenv(config_env_var); env && *env)
        return env;
    throw ConfigError(std::string("no configuration given (use --config or set ") + config_env_var + ")");
}

// ---------------------------------------------------------------------------

inline void physchem_report(const config::ExperimentConfig& cfg, std::ostream& os) {
    config::require_sections(cfg, {"channel", "electrolyte", "receiver"});
    using namespace physchem;
    using detail::kv;
    kv(os, "hydraulic_diameter_um", hydraulic_diameter(cfg.channel));
    kv(os, "linear_velocity_um_s", linear_velocity(cfg.channel));
    kv(os, "reynolds_number", reynolds_number(cfg.channel));

    const auto stack = gate_stack(cfg.receiver, cfg.electrolyte);
    const auto sensing = gate_stack(cfg.receiver, cfg.sensing_electrolyte);
    kv(os, "debye_length_nm", stack.debye_length_nm);
    kv(os, "graphene_edl_nF", stack.graphene_edl_nF);
    kv(os, "electrode_edl_nF", stack.electrode_edl_nF);
    kv(os, "quantum_capacitance_nF", stack.quantum_nF);
    kv(os, "gate_capacitance_nF", stack.gate_nF);

    const double q_probe = effective_charge(cfg.probe, stack.debye_length_nm);
    kv(os, "probe_charge_C", q_probe);
    kv(os, "probe_density_per_um2",
       probe_density(cfg.cnp_shift_mV, stack.gate_nF, q_probe, cfg.receiver.graphene_area_um2));

    kv(os, "sensing_debye_length_nm", sensing.debye_length_nm);
    kv(os, "sensing_graphene_edl_nF", sensing.graphene_edl_nF);
    kv(os, "sensing_gate_capacitance_nF", sensing.gate_nF);
    const double q_target = effective_charge(cfg.probe, sensing.debye_length_nm);
    kv(os, "target_charge_C", q_target);
    kv(os, "transduction_A_per_molecule",
       kinetics::transduction_constant({cfg.receiver.transconductance_uA_V, q_target, sensing.gate_nF}));
}

// ---------------------------------------------------------------------------

struct SimulateArtifacts {
    std::vector<std::string> files;
    double ber_raw;
    double ber_filtered;
};

/// Run the configured transmission and write every artifact into `out_dir`.
/// `manifest.txt` lists the config hash, seeds and the SHA-256 of each file.
inline SimulateArtifacts simulate(const config::ExperimentConfig& cfg, const std::string& out_dir, std::ostream& os) {
    config::require_sections(cfg, {"channel", "electrolyte", "receiver", "kinetics", "pulse", "tx"});
    const txrx::LinkSetup setup = config::link_setup(cfg);
    const txrx::LinkRun run = txrx::run_link(setup);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir))
        throw IoError("cannot create output directory '" + out_dir + "'");
    const std::filesystem::path dir(out_dir);

    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back("config.ini", config::serialize(cfg));
    files.emplace_back("clean.csv", detail::trace_bytes(run.clean));
    files.emplace_back("noisy.csv", detail::trace_bytes(run.noisy));
    files.emplace_back("filtered.csv", detail::trace_bytes(run.filtered));
    files.emplace_back("clean_normalized.csv", detail::trace_bytes(txrx::normalize(run.clean)));
    files.emplace_back("noisy_normalized.csv", detail::trace_bytes(txrx::normalize(run.noisy)));
    files.emplace_back("filtered_normalized.csv", detail::trace_bytes(txrx::normalize(run.filtered)));
    files.emplace_back("bits_sent.txt", txrx::to_string(run.sent) + "\n");
    files.emplace_back("bits_decoded_raw.txt", txrx::to_string(run.decoded_raw) + "\n");
    files.emplace_back("bits_decoded_filtered.txt", txrx::to_string(run.decoded_filtered) + "\n");

    std::ostringstream dec;
    dec << "index,raw_time_s,raw_uA,filtered_time_s,filtered_uA\n";
    for (std::size_t k = 0; k < run.raw_decisions.values.size(); ++k)
        dec << k << ',' << format_double(run.raw_decisions.times_s[k]) << ','
            << format_double(run.raw_decisions.values[k]) << ',' << format_double(run.filtered_decisions.times_s[k])
            << ',' << format_double(run.filtered_decisions.values[k]) << '\n';
    files.emplace_back("decisions.csv", dec.str());

    std::ostringstream rep;
    detail::kv(rep, "n_bits", std::to_string(run.sent.size()));
    detail::kv(rep, "bit_interval_s", cfg.tx.bit_interval_s);
    detail::kv(rep, "ber_raw", run.ber_raw);
    detail::kv(rep, "ber_filtered", run.ber_filtered);
    detail::kv(rep, "bits_sent", txrx::to_string(run.sent));
    detail::kv(rep, "bits_decoded_raw", txrx::to_string(run.decoded_raw));
    detail::kv(rep, "bits_decoded_filtered", txrx::to_string(run.decoded_filtered));
    files.emplace_back("report.txt", rep.str());

    std::ostringstream man;
    detail::kv(man, "tool_version", tool_version);
    detail::kv(man, "config_sha256", config::config_hash(cfg));
    detail::kv(man, "tx_seed", std::to_string(cfg.tx.seed));
    detail::kv(man, "noise_seed", std::to_string(cfg.noise.seed));
    for (const auto& [name, bytes] : files)
        detail::kv(man, "file." + name, config::sha256_hex(bytes));
    files.emplace_back("manifest.txt", man.str());

    SimulateArtifacts out{{}, run.ber_raw, run.ber_filtered};
    for (const auto& [name, bytes] : files) {
        detail::write_file(dir / name, bytes);
        out.files.push_back((dir / name).string());
    }
    os << rep.str();
    return out;
}

// ---------------------------------------------------------------------------

/// Isotherm plateaus CSV: header `concentration_nM,delta_current_uA`.
inline fitting::FitResult fit_isotherm(const std::string& data_path, const std::string& residual_path,
                                       std::ostream& os) {
    std::ifstream is(data_path, std::ios::binary);
    if (!is)
        throw DataError(data_path + ": cannot open file");
    const Table2 table = read_two_column_csv(is, data_path);
    if (table.header != "concentration_nM,delta_current_uA")
        throw DataError(data_path + ":1: expected header 'concentration_nM,delta_current_uA'");
    for (std::size_t i = 0; i < table.x.size(); ++i)
        if (!(table.x[i] > 0.0))
            throw DataError(data_path + ":" + std::to_string(i + 2) + ": concentration must be positive");
    const auto prob = fitting::isotherm_problem(table.x, table.y);
    const auto fit = fitting::fit(prob);
    detail::kv(os, "model", "isotherm");
    detail::report_fit(os, fit);
    if (!residual_path.empty())
        detail::write_residuals(residual_path, "concentration_nM", prob, fit);
    if (!fit.converged)
        throw NonConvergence("fit-isotherm: " + fit.message);
    return fit;
}

struct KineticsFitOptions {
    double concentration_uM = 1.0;
    double t_d_s = 1800.0;
    double baseline_uA = 0.0;
    double association_weight = 1.0;
    double dissociation_weight = 1.0;
    /// "langmuir" (k_on, k_off, ΔI_eq) or "pulse-kt" (k_T* of the pulse model,
    /// remaining parameters from the configuration).
    std::string model = "langmuir";
    std::optional<config::ExperimentConfig> config;
};

/// Trace CSV with time measured from the start of the exposure. ΔI is the
/// sample minus `baseline_uA`.
inline fitting::FitResult fit_kinetics(const std::string& trace_path, const KineticsFitOptions& opt,
                                       const std::string& residual_path, std::ostream& os) {
    const Trace tr = read_trace_csv(trace_path);
    if (tr.unit != TraceUnit::microampere)
        throw DataError(trace_path + ": kinetics fit expects a time_s,current_uA trace");
    std::vector<double> t(tr.size()), y(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        t[i] = tr.time(i);
        y[i] = tr.samples[i] - opt.baseline_uA;
    }
    fitting::FitProblem prob;
    if (opt.model == "langmuir") {
        fitting::KineticsTraceSpec spec;
        spec.concentration_M = opt.concentration_uM * units::uM;
        spec.t_d_s = opt.t_d_s;
        spec.association_weight = opt.association_weight;
        spec.dissociation_weight = opt.dissociation_weight;
        prob = fitting::kinetics_problem(t, y, spec);
    } else if (opt.model == "pulse-kt") {
        if (!opt.config)
            throw ConfigError("fit-kinetics --model pulse-kt needs --config for the pulse parameters");
        config::require_sections(*opt.config, {"channel", "electrolyte", "receiver", "kinetics", "pulse", "tx"});
        const auto base = config::pulse_params(*opt.config);
        prob = fitting::pulse_kt_problem(t, y, base, base.k_t_star);
    } else {
        throw ConfigError("fit-kinetics: unknown model '" + opt.model + "' (expected langmuir or pulse-kt)");
    }
    const auto fit = fitting::fit(prob);
    detail::kv(os, "model", opt.model);
    detail::report_fit(os, fit);
    if (opt.model == "langmuir")
        detail::kv(os, "kd_M", fit.parameters[1] / fit.parameters[0]);
    else
        detail::kv(os, "k_t_star_per_M_s", std::pow(10.0, fit.parameters[0]));
    if (!residual_path.empty())
        detail::write_residuals(residual_path, "time_s", prob, fit);
    if (!fit.converged)
        throw NonConvergence("fit-kinetics: " + fit.message);
    return fit;
}

// ---------------------------------------------------------------------------

struct DetectOptions {
    std::optional<double> filter_window_s;
    double sample_offset_s = 0.0;
};

inline txrx::Bits detect(const std::string& trace_path, const config::ExperimentConfig& cfg,
                         const DetectOptions& opt, std::ostream& os) {
    config::require_sections(cfg, {"tx"});
    Trace tr = read_trace_csv(trace_path);
    if (opt.filter_window_s)
        tr = txrx::moving_mean(tr, *opt.filter_window_s);
    const auto samples = txrx::sample_decision_points(tr, cfg.tx, opt.sample_offset_s);
    const auto bits = txrx::difference_detect(samples.values);
    os << txrx::to_string(bits) << '\n';
    return bits;
}

inline txrx::Bits read_bits_file(const std::string& path) {
    return txrx::parse_bits(detail::read_file(path), path);
}

inline double ber(const std::string& sent_path, const std::string& decoded_path, std::ostream& os) {
    const auto sent = read_bits_file(sent_path);
    const auto decoded = read_bits_file(decoded_path);
    const double value = txrx::ber(sent, decoded);
    detail::kv(os, "bits", std::to_string(sent.size()));
    detail::kv(os, "errors", std::to_string(static_cast<long long>(std::llround(value * static_cast<double>(sent.size())))));
    detail::kv(os, "ber", value);
    return value;
}

// ---------------------------------------------------------------------------

struct PlotOptions {
    std::size_t downsample = 1;
    std::optional<double> filter_window_s;
    /// Divide samples by this baseline and emit a normalized trace.
    std::optional<double> normalize_baseline_uA;
};

/// Plot-ready copy of a trace: optional moving mean, optional normalisation,
/// then every `downsample`-th row (first row always kept).
inline std::size_t plotdata(const std::string& trace_path, const std::string& out_path, const PlotOptions& opt) {
    if (opt.downsample < 1)
        throw ConfigError("plotdata: --downsample must be >= 1");
    std::ifstream is(trace_path, std::ios::binary);
    if (!is)
        throw DataError(trace_path + ": cannot open file");
    const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::istringstream first(text), second(text);
    Trace tr = read_trace_csv(first, trace_path);
    const Table2 original = read_two_column_csv(second, trace_path); // keeps the time column verbatim
    if (opt.filter_window_s)
        tr = txrx::moving_mean(tr, *opt.filter_window_s);
    if (opt.normalize_baseline_uA) {
        if (tr.unit == TraceUnit::normalized)
            throw DataError(trace_path + ": trace is already normalized");
        tr.baseline = *opt.normalize_baseline_uA;
        tr = txrx::normalize(tr);
    }
    std::ostringstream os;
    os << trace_header(tr.unit) << '\n';
    std::size_t rows = 0;
    for (std::size_t i = 0; i < tr.size(); i += opt.downsample, ++rows)
        os << format_double(original.x[i]) << ',' << format_double(tr.samples[i]) << '\n';
    detail::write_file(out_path, os.str());
    return rows;
}

} // namespace mcrx::commands
