/**
 * @file fitting.hpp
 * @brief Bounded Levenberg-Marquardt least squares with a central-difference
 *        Jacobian, plus problem builders for the isotherm, the Langmuir
 *        exposure/wash trace and the pulse-model transport parameter.
 *
 * Damping follows Marquardt's diagonal scaling: each iteration solves
 *   (JᵀWJ + λ diag(JᵀWJ)) δ = JᵀW r
 * and accepts the step only if the weighted residual sum of squares drops.
 * Stopping: accepted relative step below step_tolerance, gradient ∞-norm
 * below gradient_tolerance, or damping at its ceiling (then the point is
 * reported converged only if it is stationary; see `stationarity`).
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "kinetics.hpp"
#include "pulse.hpp"

namespace mcrx::fitting {

enum class FitModel { isotherm, kinetics, pulse_kt, custom };

/// Model value at abscissa x for a parameter vector.
using Predictor = std::function<double(std::span<const double> params, double x)>;

struct ParameterBound {
    double lo;
    double hi;
};

struct FitProblem {
    FitModel model = FitModel::custom;
    std::vector<std::string> names;
    std::vector<double> x;
    std::vector<double> y;
    /// Per-point weights on the residual; empty means unit weights.
    std::vector<double> weights;
    Predictor predict;
    std::vector<double> initial_guess;
    std::vector<ParameterBound> bounds;

    void validate() const {
        const std::size_t p = initial_guess.size();
        if (p == 0)
            throw DataError("fit: no free parameters");
        if (!predict)
            throw DataError("fit: no model function");
        if (bounds.size() != p || (!names.empty() && names.size() != p))
            throw DataError("fit: parameter, bound and name counts differ");
        if (x.size() != y.size() || (!weights.empty() && weights.size() != y.size()))
            throw DataError("fit: data column lengths differ");
        if (y.size() < p + 2)
            throw DataError("fit: need at least " + std::to_string(p + 2) + " data points for "
                            + std::to_string(p) + " parameters, got " + std::to_string(y.size()));
        for (std::size_t j = 0; j < p; ++j) {
            if (!std::isfinite(bounds[j].lo) || !std::isfinite(bounds[j].hi) || !(bounds[j].lo < bounds[j].hi))
                throw DataError("fit: bounds for parameter " + name(j) + " must be finite with lo < hi");
        }
        for (std::size_t i = 0; i < y.size(); ++i)
            if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
                throw DataError("fit: non-finite data at row " + std::to_string(i));
    }

    [[nodiscard]] std::string name(std::size_t j) const {
        return j < names.size() ? names[j] : "p" + std::to_string(j);
    }
};

struct FitOptions {
    int max_iterations = 500;
    double step_tolerance = 1e-10;
    double gradient_tolerance = 1e-12;
    double initial_damping = 1e-3;
    double max_damping = 1e16;
    /// Largest cosine between the residual and any Jacobian column for a
    /// point to count as stationary when damping saturates.
    double stationarity = 1e-6;
};

struct FitResult {
    std::vector<std::string> names;
    std::vector<double> parameters;
    double residual_norm = 0.0;          ///< sqrt of weighted residual sum of squares
    std::vector<double> covariance_diag; ///< s² diag((JᵀWJ)⁻¹), s² = SSR / (n - p)
    int iterations = 0;
    bool converged = false;
    double gradient_norm = 0.0;
    std::string message;
    /// Weighted SSR after every accepted iteration (first entry: initial guess).
    std::vector<double> ssr_history;
};

/// Central-difference Jacobian of `predict` over the abscissae `x`; step per
/// parameter max(1e-8, 1e-6 |p|). Throws DataError naming the parameter whose
/// perturbation produced a non-finite model value.
inline Eigen::MatrixXd finite_difference_jacobian(const Predictor& predict, std::span<const double> params,
                                                  std::span<const double> x,
                                                  std::span<const std::string> names = {}) {
    const auto n = static_cast<Eigen::Index>(x.size());
    const auto p = static_cast<Eigen::Index>(params.size());
    Eigen::MatrixXd jac(n, p);
    if (n == 0)
        return jac;
    std::vector<double> work(params.begin(), params.end());
    for (Eigen::Index j = 0; j < p; ++j) {
        const double center = params[static_cast<std::size_t>(j)];
        const double h = std::max(1e-8, 1e-6 * std::abs(center));
        for (Eigen::Index i = 0; i < n; ++i) {
            work[static_cast<std::size_t>(j)] = center + h;
            const double up = predict(work, x[static_cast<std::size_t>(i)]);
            work[static_cast<std::size_t>(j)] = center - h;
            const double down = predict(work, x[static_cast<std::size_t>(i)]);
            if (!std::isfinite(up) || !std::isfinite(down)) {
                const std::string label = static_cast<std::size_t>(j) < names.size()
                                              ? names[static_cast<std::size_t>(j)]
                                              : "p" + std::to_string(j);
                throw DataError("finite_difference_jacobian: non-finite model output when perturbing parameter "
                                + label);
            }
            jac(i, j) = (up - down) / (2.0 * h);
        }
        work[static_cast<std::size_t>(j)] = center;
    }
    return jac;
}

namespace detail {

inline double weighted_ssr(const FitProblem& prob, std::span<const double> params, Eigen::VectorXd& resid) {
    const auto n = static_cast<Eigen::Index>(prob.y.size());
    resid.resize(n);
    double ssr = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double w = prob.weights.empty() ? 1.0 : prob.weights[k];
        const double r = w * (prob.y[k] - prob.predict(params, prob.x[k]));
        resid(i) = r;
        ssr += r * r;
    }
    return std::isfinite(ssr) ? ssr : std::numeric_limits<double>::infinity();
}

inline void clip(std::vector<double>& params, const std::vector<ParameterBound>& bounds) {
    for (std::size_t j = 0; j < params.size(); ++j)
        params[j] = std::clamp(params[j], bounds[j].lo, bounds[j].hi);
}

} // namespace detail

inline FitResult fit(const FitProblem& prob, const FitOptions& opt = {}) {
    prob.validate();
    const auto p = static_cast<Eigen::Index>(prob.initial_guess.size());
    const auto n = static_cast<Eigen::Index>(prob.y.size());

    FitResult res;
    for (std::size_t j = 0; j < prob.initial_guess.size(); ++j)
        res.names.push_back(prob.name(j));

    std::vector<double> params = prob.initial_guess;
    detail::clip(params, prob.bounds);

    Eigen::VectorXd resid;
    double ssr = detail::weighted_ssr(prob, params, resid);
    if (!std::isfinite(ssr))
        throw DataError("fit: model is not finite at the initial guess");
    res.ssr_history.push_back(ssr);

    Eigen::VectorXd wvec = Eigen::VectorXd::Ones(n);
    if (!prob.weights.empty())
        for (Eigen::Index i = 0; i < n; ++i)
            wvec(i) = prob.weights[static_cast<std::size_t>(i)];

    auto weighted_jacobian = [&](const std::vector<double>& at) {
        Eigen::MatrixXd jac = finite_difference_jacobian(prob.predict, at, prob.x, res.names);
        return Eigen::MatrixXd(wvec.asDiagonal() * jac);
    };

    double lambda = opt.initial_damping;
    Eigen::MatrixXd jac = weighted_jacobian(params);
    Eigen::MatrixXd normal = jac.transpose() * jac;
    Eigen::VectorXd grad = jac.transpose() * resid;

    int iter = 0;
    for (; iter < opt.max_iterations; ++iter) {
        res.gradient_norm = grad.lpNorm<Eigen::Infinity>();
        if (ssr == 0.0 || res.gradient_norm < opt.gradient_tolerance) {
            res.converged = true;
            res.message = ssr == 0.0 ? "exact fit" : "gradient below tolerance";
            break;
        }

        bool accepted = false;
        while (!accepted) {
            Eigen::MatrixXd damped = normal;
            for (Eigen::Index j = 0; j < p; ++j)
                damped(j, j) += lambda * std::max(normal(j, j), 1e-300);
            const Eigen::VectorXd delta = damped.ldlt().solve(grad);

            std::vector<double> trial = params;
            for (Eigen::Index j = 0; j < p; ++j)
                trial[static_cast<std::size_t>(j)] += delta(j);
            detail::clip(trial, prob.bounds);

            double rel_step = 0.0;
            for (Eigen::Index j = 0; j < p; ++j) {
                const auto k = static_cast<std::size_t>(j);
                const double scale = std::max(std::abs(params[k]), 1e-300);
                rel_step = std::max(rel_step, std::abs(trial[k] - params[k]) / scale);
            }

            Eigen::VectorXd trial_resid;
            const double trial_ssr = delta.allFinite() ? detail::weighted_ssr(prob, trial, trial_resid)
                                                       : std::numeric_limits<double>::infinity();
            if (trial_ssr < ssr) {
                accepted = true;
                params = std::move(trial);
                ssr = trial_ssr;
                resid = std::move(trial_resid);
                res.ssr_history.push_back(ssr);
                lambda = std::max(lambda / 3.0, 1e-15);
                if (rel_step < opt.step_tolerance) {
                    res.converged = true;
                    res.message = "relative step below tolerance";
                }
            } else {
                lambda *= 4.0;
                if (lambda > opt.max_damping)
                    break;
            }
        }
        if (!accepted) {
            // Damping saturated: accept the point only if no Jacobian column
            // still correlates with the residual.
            double worst = 0.0;
            const double rnorm = std::sqrt(ssr);
            for (Eigen::Index j = 0; j < p; ++j) {
                const double col = std::sqrt(normal(j, j));
                if (col > 0.0 && rnorm > 0.0)
                    worst = std::max(worst, std::abs(grad(j)) / (col * rnorm));
            }
            res.converged = worst < opt.stationarity;
            res.message = res.converged ? "stationary at maximum damping"
                                        : "no descent at maximum damping (singular or ill-posed problem)";
            ++iter;
            break;
        }
        try {
            jac = weighted_jacobian(params);
        } catch (const DataError& e) {
            res.converged = false;
            res.message = e.what();
            ++iter;
            break;
        }
        normal = jac.transpose() * jac;
        grad = jac.transpose() * resid;
        if (res.converged) {
            ++iter;
            break;
        }
    }
    if (iter >= opt.max_iterations && !res.converged)
        res.message = "iteration limit reached";

    res.iterations = iter;
    res.parameters = params;
    res.residual_norm = std::sqrt(ssr);
    res.gradient_norm = grad.lpNorm<Eigen::Infinity>();

    res.covariance_diag.assign(static_cast<std::size_t>(p), std::numeric_limits<double>::quiet_NaN());
    if (n > p) {
        const double s2 = ssr / static_cast<double>(n - p);
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(normal);
        if (cod.rank() == p) {
            const Eigen::MatrixXd inv = cod.pseudoInverse();
            for (Eigen::Index j = 0; j < p; ++j)
                res.covariance_diag[static_cast<std::size_t>(j)] = s2 * inv(j, j);
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Problem builders
// ---------------------------------------------------------------------------

/// Isotherm ΔI = ΔI_sat / (1 + K_D / c) over plateau points.
/// Parameters: [kd_nM, saturation]; x is concentration in nM, y the plateau ΔI.
/// Default guess: ΔI_sat = 1.2 × largest |ΔI| (signed), K_D = concentration
/// where the data cross half of that (log-linear interpolation).
inline FitProblem isotherm_problem(std::vector<double> concentration_nM, std::vector<double> delta_i) {
    if (concentration_nM.size() != delta_i.size())
        throw DataError("isotherm_problem: column lengths differ");
    if (concentration_nM.empty())
        throw DataError("isotherm_problem: no data");
    FitProblem prob;
    prob.model = FitModel::isotherm;
    prob.names = {"kd_nM", "saturation"};

    std::vector<std::size_t> order(concentration_nM.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return concentration_nM[a] < concentration_nM[b]; });
    std::size_t peak = 0;
    for (std::size_t i = 1; i < delta_i.size(); ++i)
        if (std::abs(delta_i[i]) > std::abs(delta_i[peak]))
            peak = i;
    const double sat = 1.2 * delta_i[peak];
    const double half = 0.5 * std::abs(sat);
    double kd = concentration_nM[order.back()];
    for (std::size_t k = 1; k < order.size(); ++k) {
        const double c0 = concentration_nM[order[k - 1]], c1 = concentration_nM[order[k]];
        const double y0 = std::abs(delta_i[order[k - 1]]), y1 = std::abs(delta_i[order[k]]);
        if (y0 <= half && y1 >= half && c0 > 0.0 && y1 > y0) {
            kd = std::exp(std::log(c0) + (half - y0) / (y1 - y0) * (std::log(c1) - std::log(c0)));
            break;
        }
    }
    if (half > 0.0 && std::abs(delta_i[order.front()]) > half)
        kd = concentration_nM[order.front()];
    if (!(kd > 0.0))
        kd = 1.0;

    const double span = std::max(std::abs(sat), 1e-12) * 100.0;
    prob.initial_guess = {kd, sat};
    prob.bounds = {{1e-6, 1e9}, {-span, span}};
    prob.x = std::move(concentration_nM);
    prob.y = std::move(delta_i);
    prob.predict = [](std::span<const double> q, double c_nM) {
        return kinetics::isotherm_response(c_nM, q[0], q[1]);
    };
    return prob;
}

/// Exposure/wash trace at a known concentration: association on [0, t_d],
/// dissociation afterwards. Parameters: [k_on_per_M_s, k_off_per_s, delta_i_eq].
/// The two segments are weighted by `association_weight` and
/// `dissociation_weight`.
struct KineticsTraceSpec {
    double concentration_M = 1e-6;
    double t_d_s = 1800.0;
    double association_weight = 1.0;
    double dissociation_weight = 1.0;
};

namespace detail {

/// Least-squares slope of y against x through the origin-free line.
inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    if (x.size() < 2)
        return 0.0;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

} // namespace detail

/// Initial guess for the exposure/wash model: ΔI_eq from the tail of the
/// association segment, k⁻ from a log-linear fit of the dissociation decay,
/// the observed rate from a log-linear fit of the early association.
inline std::vector<double> kinetics_initial_guess(std::span<const double> t, std::span<const double> y,
                                                  const KineticsTraceSpec& spec) {
    std::vector<double> assoc_t, assoc_y, dis_t, dis_y;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= spec.t_d_s) {
            assoc_t.push_back(t[i]);
            assoc_y.push_back(y[i]);
        } else {
            dis_t.push_back(t[i] - spec.t_d_s);
            dis_y.push_back(y[i]);
        }
    }
    if (assoc_t.size() < 4 || dis_t.size() < 4)
        throw DataError("kinetics fit: need at least 4 samples in each of the association and dissociation segments");

    const std::size_t tail = std::max<std::size_t>(assoc_y.size() / 20, 3);
    double eq = 0.0;
    for (std::size_t i = assoc_y.size() - tail; i < assoc_y.size(); ++i)
        eq += assoc_y[i];
    eq /= static_cast<double>(tail);
    const double sign = eq < 0.0 ? -1.0 : 1.0;

    double start = 0.0;
    const std::size_t head = std::min<std::size_t>(std::max<std::size_t>(dis_y.size() / 50, 3), dis_y.size());
    for (std::size_t i = 0; i < head; ++i)
        start += dis_y[i];
    start /= static_cast<double>(head);

    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < dis_t.size(); ++i) {
        const double ratio = dis_y[i] / start;
        if (ratio > 0.2) {
            lx.push_back(dis_t[i]);
            ly.push_back(std::log(ratio));
        }
    }
    double k_off = -detail::ols_slope(lx, ly);
    if (!(k_off > 0.0))
        k_off = 1e-3;

    lx.clear();
    ly.clear();
    for (std::size_t i = 0; i < assoc_t.size(); ++i) {
        const double remaining = 1.0 - assoc_y[i] / eq;
        if (remaining > 0.2 && sign * assoc_y[i] >= 0.0) {
            lx.push_back(assoc_t[i]);
            ly.push_back(std::log(remaining));
        }
    }
    double rate = -detail::ols_slope(lx, ly);
    if (!(rate > 0.0))
        rate = 2.0 * k_off;
    const double k_on = std::max(rate - k_off, 0.1 * rate) / spec.concentration_M;
    return {k_on, k_off, eq};
}

inline FitProblem kinetics_problem(std::vector<double> t_s, std::vector<double> delta_i, const KineticsTraceSpec& spec) {
    if (t_s.size() != delta_i.size())
        throw DataError("kinetics_problem: column lengths differ");
    if (!(spec.concentration_M > 0.0) || !(spec.t_d_s > 0.0))
        throw DataError("kinetics_problem: concentration and t_d must be positive");
    FitProblem prob;
    prob.model = FitModel::kinetics;
    prob.names = {"k_on_per_M_s", "k_off_per_s", "delta_i_eq"};
    prob.initial_guess = kinetics_initial_guess(t_s, delta_i, spec);
    const double span = std::max(std::abs(prob.initial_guess[2]), 1e-12) * 1e3;
    prob.bounds = {{1e-3, 1e9}, {1e-7, 10.0}, {-span, span}};
    prob.weights.resize(t_s.size());
    for (std::size_t i = 0; i < t_s.size(); ++i)
        prob.weights[i] = t_s[i] <= spec.t_d_s ? spec.association_weight : spec.dissociation_weight;
    prob.x = std::move(t_s);
    prob.y = std::move(delta_i);
    const double c = spec.concentration_M;
    const double td = spec.t_d_s;
    prob.predict = [c, td](std::span<const double> q, double t) {
        const kinetics::BindingKinetics kin{q[0], q[1]};
        return kinetics::langmuir_trace(std::max(t, 0.0), td, c, kin, q[2]);
    };
    return prob;
}

/// One-parameter fit of log10(k_T*) against a measured pulse response, all
/// other pulse-model parameters held at `base`. x is time (s), y is ΔI (µA).
inline FitProblem pulse_kt_problem(std::vector<double> t_s, std::vector<double> delta_i_uA,
                                   const pulse::PulseModelParams& base, double initial_k_t_star) {
    base.validate();
    if (!(initial_k_t_star > 0.0))
        throw DataError("pulse_kt_problem: initial k_T* must be positive");
    FitProblem prob;
    prob.model = FitModel::pulse_kt;
    prob.names = {"log10_k_t_star"};
    prob.initial_guess = {std::log10(initial_k_t_star)};
    prob.bounds = {{0.0, 20.0}};
    prob.x = std::move(t_s);
    prob.y = std::move(delta_i_uA);
    prob.predict = [base](std::span<const double> q, double t) {
        pulse::PulseModelParams p = base;
        p.k_t_star = std::pow(10.0, q[0]);
        return pulse::pulse_response(t, p);
    };
    return prob;
}

} // namespace mcrx::fitting
