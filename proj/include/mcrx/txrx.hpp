/**
 * @file txrx.hpp
 * @brief On-off keyed transmission through the receiver: bit generation,
 *        superposition of pulse responses, baseline normalisation, noise and
 *        drift, moving-mean filtering, delay-synchronised sampling and
 *        difference detection.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "pulse.hpp"
#include "trace.hpp"

namespace mcrx::txrx {

using Bits = std::vector<std::uint8_t>;

inline std::string to_string(const Bits& bits) {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits)
        s.push_back(b ? '1' : '0');
    return s;
}

inline Bits parse_bits(std::string_view s, const std::string& where = "bits") {
    Bits out;
    for (char c : s) {
        if (c == '0' || c == '1')
            out.push_back(static_cast<std::uint8_t>(c - '0'));
        else if (c == '\n' || c == '\r' || c == ' ')
            continue;
        else
            throw DataError(where + ": invalid bit character '" + std::string(1, c) + "'");
    }
    return out;
}

struct TxConfig {
    int n_bits = 20;
    double bit_interval_s = 120.0;
    double pulse_length_s = 30.0;
    double concentration_M = 1e-6;
    double transmit_time_s = 60.0;
    std::uint64_t seed = 1;
    double delay_s = 55.0;

    void validate() const {
        if (n_bits < 1)
            throw DomainError("tx: need at least one bit");
        if (!(pulse_length_s > 0.0) || pulse_length_s > bit_interval_s)
            throw DomainError("tx: pulse length must be in (0, bit interval]");
        if (!(concentration_M > 0.0))
            throw DomainError("tx: concentration must be positive");
        if (!(delay_s >= 0.0) || !(transmit_time_s >= 0.0))
            throw DomainError("tx: delay and transmit time must be non-negative");
    }

    /// Time of decision instant k (k = 0..n_bits).
    [[nodiscard]] double decision_time(int k) const {
        return transmit_time_s + delay_s + static_cast<double>(k) * bit_interval_s;
    }
};

/// Pseudorandom bits from the 64-bit Mersenne Twister (a twisted generalised
/// feedback shift register, std::mt19937_64) seeded with `seed`; each bit is
/// the most significant bit of one output word.
inline Bits generate_bits(std::uint64_t seed, int n_bits) {
    if (n_bits < 1)
        throw DomainError("generate_bits: need at least one bit");
    std::mt19937_64 engine(seed);
    Bits bits(static_cast<std::size_t>(n_bits));
    for (auto& b : bits)
        b = static_cast<std::uint8_t>(engine() >> 63);
    return bits;
}

/// Pulse-model parameters for a bit-1 starting at t = 0: association begins
/// after the propagation delay and lasts one pulse length.
inline pulse::PulseModelParams bit_pulse(const pulse::PulseModelParams& base, const TxConfig& tx) {
    pulse::PulseModelParams p = base;
    p.t_a_s = tx.delay_s;
    p.t_d_s = tx.delay_s + tx.pulse_length_s;
    return p;
}

struct SynthesisOptions {
    double grid_dt_s = 1.0;
    double duration_s = 0.0;   ///< 0: last decision instant + 60 s
    double baseline_uA = 31.25;
    /// Clip |R(t)| at this magnitude to expose the error of linear
    /// superposition near saturation. Off when empty.
    std::optional<double> saturation_cap_uA;
};

inline double default_duration(const TxConfig& tx) { return tx.decision_time(tx.n_bits) + 60.0; }

/// Received current I_ds(t) = baseline + Σ s[i] ΔI(t - t_transmit - i T_b),
/// sampled on a uniform grid starting at t = 0.
inline Trace synthesize_signal(const Bits& bits, const TxConfig& tx, const pulse::PulseModelParams& base,
                               const SynthesisOptions& opt = {}) {
    tx.validate();
    if (!(opt.grid_dt_s > 0.0) || opt.grid_dt_s > 1.0)
        throw DomainError("synthesize_signal: grid step must be in (0, 1] s");
    const pulse::PulseModelParams p = bit_pulse(base, tx);
    p.validate();
    const double duration = opt.duration_s > 0.0 ? opt.duration_s : default_duration(tx);
    const auto n = static_cast<std::size_t>(std::floor(duration / opt.grid_dt_s)) + 1;

    Trace tr;
    tr.t0 = 0.0;
    tr.dt = opt.grid_dt_s;
    tr.baseline = opt.baseline_uA;
    tr.samples.assign(n, 0.0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (!bits[i])
            continue;
        const double shift = tx.transmit_time_s + static_cast<double>(i) * tx.bit_interval_s;
        for (std::size_t k = 0; k < n; ++k) {
            const double t = tr.time(k) - shift;
            if (t >= p.t_a_s)
                tr.samples[k] += pulse::pulse_response(t, p);
        }
    }
    for (double& s : tr.samples) {
        if (opt.saturation_cap_uA)
            s = std::clamp(s, -*opt.saturation_cap_uA, *opt.saturation_cap_uA);
        s += opt.baseline_uA;
    }
    return tr;
}

/// Î_ds = I_ds / I_ds,baseline. The baseline is kept on the result so the
/// transform can be undone.
inline Trace normalize(const Trace& tr) {
    if (tr.baseline == 0.0)
        throw DomainError("normalize: baseline current must be non-zero");
    if (tr.unit == TraceUnit::normalized)
        return tr;
    Trace out = tr;
    out.unit = TraceUnit::normalized;
    for (double& s : out.samples)
        s /= tr.baseline;
    return out;
}

inline Trace denormalize(const Trace& tr) {
    if (tr.unit == TraceUnit::microampere)
        return tr;
    Trace out = tr;
    out.unit = TraceUnit::microampere;
    for (double& s : out.samples)
        s *= tr.baseline;
    return out;
}

struct NoiseConfig {
    double gaussian_sigma_uA = 0.0;
    double drift_uA_per_s = 0.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(gaussian_sigma_uA >= 0.0))
            throw DomainError("noise: sigma must be non-negative");
    }
};

/// Additive white Gaussian noise plus linear drift drift·(t - t0). Applied in
/// µA; normalized traces are scaled by their baseline first.
inline Trace add_noise(const Trace& tr, const NoiseConfig& cfg) {
    cfg.validate();
    Trace out = tr;
    const double scale = tr.unit == TraceUnit::normalized ? 1.0 / tr.baseline : 1.0;
    std::mt19937_64 engine(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double delta = cfg.drift_uA_per_s * (tr.time(i) - tr.t0);
        if (cfg.gaussian_sigma_uA > 0.0)
            delta += cfg.gaussian_sigma_uA * gauss(engine);
        out.samples[i] += delta * scale;
    }
    return out;
}

/// Centered moving average over round(window / dt) samples, forced odd;
/// windows are truncated at the trace edges.
inline Trace moving_mean(const Trace& tr, double window_s) {
    if (!(window_s >= tr.dt))
        throw DomainError("moving_mean: window must be at least one sample period");
    auto width = static_cast<std::size_t>(std::llround(window_s / tr.dt));
    if (width % 2 == 0)
        ++width;
    const std::size_t half = width / 2;
    const std::size_t n = tr.size();
    Trace out = tr;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(n - 1, i + half);
        double sum = 0.0;
        for (std::size_t k = lo; k <= hi; ++k)
            sum += tr.samples[k];
        out.samples[i] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

struct DecisionSamples {
    std::vector<double> times_s;
    std::vector<std::size_t> indices;
    std::vector<double> values;
};

/// Samples at the L+1 delay-shifted bit boundaries t_transmit + t_delay + k T_b
/// (+ offset), k = 0..L, taking the nearest grid point.
inline DecisionSamples sample_decision_points(const Trace& tr, const TxConfig& tx, double offset_s = 0.0) {
    tx.validate();
    DecisionSamples out;
    std::string missing;
    for (int k = 0; k <= tx.n_bits; ++k) {
        const double t = tx.decision_time(k) + offset_s;
        const double pos = std::round((t - tr.t0) / tr.dt);
        if (pos < 0.0 || pos > static_cast<double>(tr.size()) - 1.0) {
            missing += (missing.empty() ? "" : ", ") + format_double(t);
            continue;
        }
        const auto idx = static_cast<std::size_t>(pos);
        out.times_s.push_back(t);
        out.indices.push_back(idx);
        out.values.push_back(tr.samples[idx]);
    }
    if (!missing.empty())
        throw DataError("sample_decision_points: trace [" + format_double(tr.t0) + ", " + format_double(tr.end_time())
                        + "] s does not cover decision instants " + missing);
    return out;
}

/// ŝ[i] = 1 when the current falls across interval i, r[i+1] - r[i] < 0.
inline Bits difference_detect(std::span<const double> r) {
    if (r.size() < 2)
        throw DataError("difference_detect: need at least two samples");
    Bits out(r.size() - 1);
    for (std::size_t i = 0; i + 1 < r.size(); ++i)
        out[i] = r[i + 1] - r[i] < 0.0 ? 1 : 0;
    return out;
}

inline double ber(const Bits& sent, const Bits& decoded) {
    if (sent.size() != decoded.size())
        throw DataError("ber: sequences differ in length (" + std::to_string(sent.size()) + " vs "
                        + std::to_string(decoded.size()) + ")");
    if (sent.empty())
        throw DataError("ber: empty bit sequences");
    std::size_t errors = 0;
    for (std::size_t i = 0; i < sent.size(); ++i)
        errors += (sent[i] != 0) != (decoded[i] != 0);
    return static_cast<double>(errors) / static_cast<double>(sent.size());
}

/// Everything needed to run one transmission end to end.
struct LinkSetup {
    TxConfig tx;
    pulse::PulseModelParams pulse;
    SynthesisOptions synthesis;
    NoiseConfig noise;
    double filter_window_s = 21.0;
    /// Decision-instant shifts for the raw and the filtered trace. The
    /// centered filter looks half a window ahead, so the filtered trace is
    /// sampled that much earlier by default.
    double raw_sample_offset_s = 0.0;
    std::optional<double> filtered_sample_offset_s;
    /// Explicit bit pattern; generated from tx.seed when empty.
    Bits bits;
};

struct LinkRun {
    Bits sent;
    Trace clean;
    Trace noisy;
    Trace filtered;
    DecisionSamples raw_decisions;
    DecisionSamples filtered_decisions;
    Bits decoded_raw;
    Bits decoded_filtered;
    double ber_raw = 0.0;
    double ber_filtered = 0.0;
};

inline LinkRun run_link(const LinkSetup& setup) {
    LinkRun run;
    run.sent = setup.bits.empty() ? generate_bits(setup.tx.seed, setup.tx.n_bits) : setup.bits;
    if (static_cast<int>(run.sent.size()) != setup.tx.n_bits)
        throw DataError("run_link: bit pattern length does not match n_bits");
    run.clean = synthesize_signal(run.sent, setup.tx, setup.pulse, setup.synthesis);
    run.noisy = add_noise(run.clean, setup.noise);
    run.filtered = moving_mean(run.noisy, setup.filter_window_s);
    run.raw_decisions = sample_decision_points(run.noisy, setup.tx, setup.raw_sample_offset_s);
    run.filtered_decisions = sample_decision_points(
        run.filtered, setup.tx, setup.filtered_sample_offset_s.value_or(-0.5 * setup.filter_window_s));
    run.decoded_raw = difference_detect(run.raw_decisions.values);
    run.decoded_filtered = difference_detect(run.filtered_decisions.values);
    run.ber_raw = ber(run.sent, run.decoded_raw);
    run.ber_filtered = ber(run.sent, run.decoded_filtered);
    return run;
}

} // namespace mcrx::txrx
