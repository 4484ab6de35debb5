// mcrx: command-line driver for the receiver models and the bit link.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mcrx/commands.hpp"

namespace {

using namespace mcrx;
namespace cmd = mcrx::commands;

config::ExperimentConfig load_config(const std::string& flag) {
    return config::load(cmd::resolve_config_path(flag));
}

int fail(int code, const std::string& kind, const std::string& what) {
    std::cerr << "mcrx: " << kind << ": " << what << '\n';
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Molecular communication receiver toolkit"};
    app.set_version_flag("--version", cmd::tool_version);
    app.require_subcommand(1);

    std::string config_path;
    auto add_config = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path,
                        std::string("configuration file (default: $") + cmd::config_env_var + ")");
    };

    auto* physchem = app.add_subcommand("physchem", "report channel and gate-stack quantities");
    add_config(physchem);

    std::string out_dir;
    auto* simulate = app.add_subcommand("simulate", "synthesize, filter and decode a transmission");
    add_config(simulate);
    simulate->add_option("-o,--out", out_dir, "output directory")->required();

    std::string data_path, residual_path;
    auto* fit_iso = app.add_subcommand("fit-isotherm", "fit K_D and saturation to equilibrium plateaus");
    fit_iso->add_option("data", data_path, "CSV with concentration_nM,delta_current_uA")->required();
    fit_iso->add_option("--residuals", residual_path, "write residual CSV here");

    cmd::KineticsFitOptions kin_opt;
    auto* fit_kin = app.add_subcommand("fit-kinetics", "fit a binding trace (Langmuir rates or pulse k_T*)");
    add_config(fit_kin);
    fit_kin->add_option("trace", data_path, "trace CSV (time_s,current_uA)")->required();
    fit_kin->add_option("--model", kin_opt.model, "langmuir | pulse-kt")->capture_default_str();
    fit_kin->add_option("--concentration-uM", kin_opt.concentration_uM)->capture_default_str();
    fit_kin->add_option("--t-d", kin_opt.t_d_s, "end of association (s)")->capture_default_str();
    fit_kin->add_option("--baseline-uA", kin_opt.baseline_uA)->capture_default_str();
    fit_kin->add_option("--association-weight", kin_opt.association_weight)->capture_default_str();
    fit_kin->add_option("--dissociation-weight", kin_opt.dissociation_weight)->capture_default_str();
    fit_kin->add_option("--residuals", residual_path, "write residual CSV here");

    double detect_window = 0.0;
    cmd::DetectOptions det_opt;
    auto* detect = app.add_subcommand("detect", "decode bits from a received trace");
    add_config(detect);
    detect->add_option("trace", data_path, "trace CSV")->required();
    auto* det_window = detect->add_option("--filter-window", detect_window, "moving-mean window (s)");
    detect->add_option("--sample-offset", det_opt.sample_offset_s, "shift of decision instants (s)");

    std::string sent_path, decoded_path;
    auto* ber = app.add_subcommand("ber", "bit error rate between two bit files");
    ber->add_option("sent", sent_path)->required();
    ber->add_option("decoded", decoded_path)->required();

    std::string plot_out;
    cmd::PlotOptions plot_opt;
    double plot_window = 0.0, plot_baseline = 0.0;
    auto* plot = app.add_subcommand("plotdata", "emit a downsampled, optionally filtered trace");
    plot->add_option("trace", data_path)->required();
    plot->add_option("-o,--out", plot_out)->required();
    plot->add_option("--downsample", plot_opt.downsample)->capture_default_str();
    auto* plot_window_opt = plot->add_option("--filter-window", plot_window, "moving-mean window (s)");
    auto* plot_norm_opt = plot->add_option("--normalize", plot_baseline, "baseline current (uA)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cmd::config_error;
    }

    try {
        if (*physchem) {
            cmd::physchem_report(load_config(config_path), std::cout);
        } else if (*simulate) {
            cmd::simulate(load_config(config_path), out_dir, std::cout);
        } else if (*fit_iso) {
            cmd::fit_isotherm(data_path, residual_path, std::cout);
        } else if (*fit_kin) {
            if (kin_opt.model == "pulse-kt")
                kin_opt.config = load_config(config_path);
            cmd::fit_kinetics(data_path, kin_opt, residual_path, std::cout);
        } else if (*detect) {
            if (*det_window)
                det_opt.filter_window_s = detect_window;
            cmd::detect(data_path, load_config(config_path), det_opt, std::cout);
        } else if (*ber) {
            cmd::ber(sent_path, decoded_path, std::cout);
        } else if (*plot) {
            if (*plot_window_opt)
                plot_opt.filter_window_s = plot_window;
            if (*plot_norm_opt)
                plot_opt.normalize_baseline_uA = plot_baseline;
            const auto rows = cmd::plotdata(data_path, plot_out, plot_opt);
            std::cout << "rows = " << rows << '\n';
        }
    } catch (const ConfigError& e) {
        return fail(cmd::config_error, "config error", e.what());
    } catch (const DataError& e) {
        return fail(cmd::data_error, "data error", e.what());
    } catch (const DomainError& e) {
        return fail(cmd::data_error, "domain error", e.what());
    } catch (const ModelError& e) {
        return fail(cmd::data_error, "model error", e.what());
    } catch (const NonConvergence& e) {
        return fail(cmd::non_convergence, "no convergence", e.what());
    } catch (const cmd::IoError& e) {
        return fail(cmd::io_failure, "i/o error", e.what());
    } catch (const std::exception& e) {
        return fail(cmd::io_failure, "error", e.what());
    }
    return cmd::ok;
}
