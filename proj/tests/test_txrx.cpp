#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "mcrx/txrx.hpp"

using namespace mcrx;
using namespace mcrx::txrx;

namespace {

pulse::PulseModelParams base_pulse() {
    pulse::PulseModelParams p;
    p.k_t_star = 1e10;
    return p;
}

Trace ramp(std::size_t n, double dt = 1.0) {
    Trace tr{0.0, dt, std::vector<double>(n), 10.0, TraceUnit::microampere};
    for (std::size_t i = 0; i < n; ++i)
        tr.samples[i] = static_cast<double>(i);
    return tr;
}

} // namespace

TEST(Bits, StringRoundTrip) {
    const Bits b{1, 0, 0, 1, 1};
    EXPECT_EQ(to_string(b), "10011");
    EXPECT_EQ(parse_bits("10011\n"), b);
    EXPECT_EQ(parse_bits("1 0 0 1 1\r\n"), b);
    EXPECT_THROW(parse_bits("10201"), DataError);
}

TEST(Bits, SeededGeneratorIsReproducible) {
    EXPECT_EQ(generate_bits(42, 64), generate_bits(42, 64));
    EXPECT_NE(generate_bits(42, 64), generate_bits(43, 64));
    EXPECT_THROW(generate_bits(1, 0), DomainError);
}

TEST(Bits, MostSignificantBitOfEachWord) {
    std::mt19937_64 ref(7);
    const auto bits = generate_bits(7, 32);
    for (auto b : bits)
        EXPECT_EQ(b, ref() >> 63);
}

TEST(Bits, RoughlyBalanced) {
    const auto bits = generate_bits(123, 100000);
    const double ones = std::accumulate(bits.begin(), bits.end(), 0.0);
    EXPECT_NEAR(ones / bits.size(), 0.5, 0.01);
    // Lag-1 agreement near one half as well.
    std::size_t same = 0;
    for (std::size_t i = 1; i < bits.size(); ++i)
        same += bits[i] == bits[i - 1];
    EXPECT_NEAR(static_cast<double>(same) / (bits.size() - 1), 0.5, 0.01);
}

TEST(Synthesis, AllZeroBitsIsFlatBaseline) {
    TxConfig tx;
    const Bits zeros(tx.n_bits, 0);
    const auto tr = synthesize_signal(zeros, tx, base_pulse());
    for (double s : tr.samples)
        EXPECT_EQ(s, 31.25);
    for (double s : normalize(tr).samples)
        EXPECT_EQ(s, 1.0);
}

TEST(Synthesis, SuperpositionOfSingleBits) {
    TxConfig tx;
    tx.n_bits = 6;
    const Bits bits{1, 0, 1, 1, 0, 1};
    SynthesisOptions opt;
    opt.baseline_uA = 0.0;
    const auto all = synthesize_signal(bits, tx, base_pulse(), opt);
    std::vector<double> sum(all.size(), 0.0);
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (!bits[i])
            continue;
        Bits one(bits.size(), 0);
        one[i] = 1;
        const auto part = synthesize_signal(one, tx, base_pulse(), opt);
        for (std::size_t k = 0; k < sum.size(); ++k)
            sum[k] += part.samples[k];
    }
    for (std::size_t k = 0; k < sum.size(); ++k)
        EXPECT_NEAR(all.samples[k], sum[k], 1e-12);
}

TEST(Synthesis, SingleBitMatchesShiftedPulse) {
    TxConfig tx;
    tx.n_bits = 3;
    const Bits bits{0, 1, 0};
    SynthesisOptions opt;
    opt.baseline_uA = 5.0;
    const auto tr = synthesize_signal(bits, tx, base_pulse(), opt);
    const auto p = bit_pulse(base_pulse(), tx);
    const double shift = tx.transmit_time_s + tx.bit_interval_s;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double t = tr.time(k) - shift;
        EXPECT_NEAR(tr.samples[k] - 5.0, pulse::pulse_response(t, p), 1e-15);
    }
    // Nothing arrives before transmit + delay.
    EXPECT_EQ(tr.samples[static_cast<std::size_t>(shift + tx.delay_s)], 5.0);
    EXPECT_LT(tr.samples[static_cast<std::size_t>(shift + tx.delay_s) + 1], 5.0);
}

TEST(Synthesis, DefaultDurationCoversAllDecisions) {
    TxConfig tx;
    const auto tr = synthesize_signal(Bits(tx.n_bits, 1), tx, base_pulse());
    EXPECT_GE(tr.end_time(), tx.decision_time(tx.n_bits));
    EXPECT_NO_THROW(sample_decision_points(tr, tx));
}

TEST(Synthesis, SaturationCapClipsResponse) {
    TxConfig tx;
    SynthesisOptions opt;
    opt.saturation_cap_uA = 0.01;
    const auto tr = synthesize_signal(Bits(tx.n_bits, 1), tx, base_pulse(), opt);
    for (double s : tr.samples)
        EXPECT_GE(s, 31.25 - 0.01 - 1e-12);
}

TEST(Synthesis, RejectsCoarseGrid) {
    TxConfig tx;
    SynthesisOptions opt;
    opt.grid_dt_s = 2.0;
    EXPECT_THROW(synthesize_signal(Bits(tx.n_bits, 1), tx, base_pulse(), opt), DomainError);
    tx.pulse_length_s = 200.0;
    EXPECT_THROW(synthesize_signal(Bits(tx.n_bits, 1), tx, base_pulse()), DomainError);
}

TEST(Synthesis, IsiGrowsAsIntervalShrinks) {
    // Residual current left at the next decision instant after a single bit.
    double prev = 0.0;
    for (double tb : {360.0, 120.0, 60.0}) {
        TxConfig tx;
        tx.n_bits = 2;
        tx.bit_interval_s = tb;
        SynthesisOptions opt;
        opt.baseline_uA = 0.0;
        const auto tr = synthesize_signal(Bits{1, 0}, tx, base_pulse(), opt);
        const auto d = sample_decision_points(tr, tx);
        const double residual = std::abs(d.values[2]);
        EXPECT_GT(residual, prev);
        prev = residual;
    }
}

TEST(Normalize, RoundTripAndBaseline) {
    auto tr = ramp(10);
    const auto n = normalize(tr);
    EXPECT_EQ(n.unit, TraceUnit::normalized);
    EXPECT_DOUBLE_EQ(n.samples[5], 0.5);
    const auto back = denormalize(n);
    for (std::size_t i = 0; i < tr.size(); ++i)
        EXPECT_DOUBLE_EQ(back.samples[i], tr.samples[i]);
    EXPECT_EQ(normalize(n).samples, n.samples);
    tr.baseline = 0.0;
    EXPECT_THROW(normalize(tr), DomainError);
}

TEST(Noise, ZeroConfigIsIdentity) {
    const auto tr = ramp(100);
    EXPECT_EQ(add_noise(tr, {}).samples, tr.samples);
}

TEST(Noise, GaussianMomentsAndDrift) {
    Trace flat{0.0, 1.0, std::vector<double>(200000, 0.0), 1.0, TraceUnit::microampere};
    const auto noisy = add_noise(flat, {0.01, 0.0, 3});
    const double mean = std::accumulate(noisy.samples.begin(), noisy.samples.end(), 0.0) / noisy.size();
    double var = 0.0;
    for (double s : noisy.samples)
        var += (s - mean) * (s - mean);
    var /= noisy.size() - 1;
    EXPECT_NEAR(mean, 0.0, 1e-4);
    EXPECT_NEAR(std::sqrt(var), 0.01, 1e-4);

    Trace short_flat{5.0, 0.5, std::vector<double>(11, 0.0), 1.0, TraceUnit::microampere};
    const auto drifted = add_noise(short_flat, {0.0, 2e-3, 1});
    EXPECT_NEAR(drifted.samples[10], 2e-3 * 5.0, 1e-15);
}

TEST(Noise, SeedsAreReproducible) {
    const auto tr = ramp(50);
    EXPECT_EQ(add_noise(tr, {0.1, 0.0, 9}).samples, add_noise(tr, {0.1, 0.0, 9}).samples);
    EXPECT_NE(add_noise(tr, {0.1, 0.0, 9}).samples, add_noise(tr, {0.1, 0.0, 10}).samples);
}

TEST(Noise, NormalizedTraceScaledByBaseline) {
    Trace flat{0.0, 1.0, std::vector<double>(10, 1.0), 20.0, TraceUnit::normalized};
    const auto out = add_noise(flat, {0.0, 1.0, 1});
    EXPECT_NEAR(out.samples[4], 1.0 + 4.0 / 20.0, 1e-15);
}

TEST(MovingMean, ImpulseResponse) {
    Trace tr{0.0, 1.0, std::vector<double>(41, 0.0), 1.0, TraceUnit::microampere};
    tr.samples[20] = 21.0;
    const auto f = moving_mean(tr, 21.0);
    for (std::size_t i = 0; i < f.size(); ++i)
        EXPECT_DOUBLE_EQ(f.samples[i], (i >= 10 && i <= 30) ? 1.0 : 0.0) << i;
}

TEST(MovingMean, EvenWindowRoundsUpToOdd) {
    Trace tr{0.0, 1.0, std::vector<double>(21, 0.0), 1.0, TraceUnit::microampere};
    tr.samples[10] = 1.0;
    const auto f = moving_mean(tr, 4.0);
    EXPECT_DOUBLE_EQ(f.samples[8], 0.2);
    EXPECT_DOUBLE_EQ(f.samples[7], 0.0);
}

TEST(MovingMean, PreservesLinearRampAwayFromEdges) {
    const auto f = moving_mean(ramp(100), 11.0);
    for (std::size_t i = 5; i < 95; ++i)
        EXPECT_NEAR(f.samples[i], static_cast<double>(i), 1e-12);
    EXPECT_DOUBLE_EQ(f.samples[0], 2.5); // truncated window 0..5
}

TEST(MovingMean, ReducesWhiteNoiseVariance) {
    Trace flat{0.0, 1.0, std::vector<double>(100000, 0.0), 1.0, TraceUnit::microampere};
    const auto noisy = add_noise(flat, {1.0, 0.0, 5});
    const auto f = moving_mean(noisy, 21.0);
    double var = 0.0;
    for (std::size_t i = 100; i < f.size() - 100; ++i)
        var += f.samples[i] * f.samples[i];
    var /= f.size() - 200;
    EXPECT_NEAR(var, 1.0 / 21.0, 0.005);
}

TEST(MovingMean, RejectsSubSampleWindow) {
    EXPECT_THROW(moving_mean(ramp(10, 1.0), 0.5), DomainError);
}

TEST(Sampling, NearestGridPointAtBoundaries) {
    TxConfig tx;
    tx.n_bits = 3;
    const auto tr = ramp(1000, 0.5);
    const auto d = sample_decision_points(tr, tx);
    ASSERT_EQ(d.values.size(), 4u);
    for (int k = 0; k <= 3; ++k) {
        EXPECT_DOUBLE_EQ(d.times_s[k], 115.0 + 120.0 * k);
        EXPECT_DOUBLE_EQ(d.values[k], (115.0 + 120.0 * k) / 0.5);
    }
    const auto shifted = sample_decision_points(tr, tx, -10.5);
    EXPECT_DOUBLE_EQ(shifted.values[0], 209.0);
}

TEST(Sampling, ShortTraceNamesMissingInstants) {
    TxConfig tx;
    tx.n_bits = 3;
    try {
        sample_decision_points(ramp(300), tx);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("355"), std::string::npos);
    }
}

TEST(Detect, Differences) {
    const std::vector<double> r{5.0, 4.0, 4.5, 4.5, 3.0};
    EXPECT_EQ(to_string(difference_detect(r)), "1001");
    EXPECT_THROW(difference_detect(std::vector<double>{1.0}), DataError);
}

TEST(Detect, InvariantUnderPositiveAffineMaps) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> scale(0.01, 100.0);
    for (int v = 0; v < 100; ++v) {
        std::vector<double> r(21);
        for (double& x : r)
            x = u(rng);
        const auto ref = difference_detect(r);
        for (int t = 0; t < 100; ++t) {
            const double a = scale(rng), b = 10.0 * u(rng);
            std::vector<double> s(r.size());
            for (std::size_t i = 0; i < r.size(); ++i)
                s[i] = a * r[i] + b;
            ASSERT_EQ(difference_detect(s), ref);
        }
    }
}

TEST(Ber, Counts) {
    EXPECT_DOUBLE_EQ(ber({1, 0, 1, 1}, {1, 1, 1, 0}), 0.5);
    EXPECT_DOUBLE_EQ(ber({1, 0}, {1, 0}), 0.0);
    EXPECT_THROW(ber({1, 0}, {1}), DataError);
    EXPECT_THROW(ber({}, {}), DataError);
}

TEST(Link, NoiselessLinkDecodesPerfectly) {
    LinkSetup s;
    s.pulse = base_pulse();
    s.noise = {0.0, 2e-5, 1};
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        s.tx.seed = seed;
        const auto run = run_link(s);
        EXPECT_EQ(run.ber_filtered, 0.0) << "seed=" << seed;
        EXPECT_EQ(run.ber_raw, 0.0) << "seed=" << seed;
    }
}

TEST(Link, NoiselessErrorsAtLongIntervalsComeFromLongRuns) {
    // At 360 s, recovery from a run of earlier pulses can outweigh a new
    // pulse, so the only noiseless errors are late 1s in a run of 1s.
    LinkSetup s;
    s.tx.bit_interval_s = 360.0;
    s.pulse = base_pulse();
    s.noise = {0.0, 2e-5, 1};
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        s.tx.seed = seed;
        const auto run = run_link(s);
        for (std::size_t i = 0; i < run.sent.size(); ++i) {
            if (run.sent[i] == run.decoded_raw[i])
                continue;
            EXPECT_EQ(run.sent[i], 1) << "seed=" << seed << " bit=" << i;
            ASSERT_GE(i, 3u);
            EXPECT_TRUE(run.sent[i - 1] && run.sent[i - 2] && run.sent[i - 3]) << "seed=" << seed << " bit=" << i;
        }
    }
}

TEST(Link, ExplicitBitsOverrideSeed) {
    LinkSetup s;
    s.pulse = base_pulse();
    s.tx.n_bits = 4;
    s.bits = {1, 1, 0, 1};
    EXPECT_EQ(run_link(s).sent, s.bits);
    s.bits = {1, 0};
    EXPECT_THROW(run_link(s), DataError);
}

TEST(Link, FilteringHelpsUnderNoise) {
    std::vector<double> raw, filt;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        LinkSetup s;
        s.pulse = base_pulse();
        s.tx.seed = seed;
        s.noise = {0.01, 2e-5, seed + 500};
        const auto run = run_link(s);
        raw.push_back(run.ber_raw);
        filt.push_back(run.ber_filtered);
    }
    EXPECT_LT(std::accumulate(filt.begin(), filt.end(), 0.0), std::accumulate(raw.begin(), raw.end(), 0.0));
}
