#include "restore/samplers.hpp"

#include <cmath>

#include "restore/errors.hpp"
#include "restore/resample.hpp"

namespace restore {

double regularization_weight(const SamplerConfig& cfg, double noise_sigma,
                             double sigma_t) {
    double r = noise_sigma * noise_sigma * cfg.r_scale / (sigma_t * sigma_t);
    if (cfg.r_prior_variance > 0.0)
        r += noise_sigma * noise_sigma / cfg.r_prior_variance;
    return std::max(r, cfg.r_floor);
}

double langevin_step_size(const SamplerConfig& cfg, double r) {
    return cfg.eta0 / (r + cfg.operator_lipschitz);
}

namespace {

// Gradient of 1/2 ||y - A(U x)||^2 pulled back to the stage space, negated:
// U^T J_A(Ux)^T (y - A(Ux)).
ImageGrid data_term_pullback(const ForwardOperator& op, const ImageGrid& x_stage,
                             const Measurement& y, const Dims& full_dims,
                             Measurement* residual_out = nullptr) {
    const ImageGrid xf = cross_upsample(x_stage, dims_of(x_stage), full_dims);
    Measurement resid = op.apply(xf);
    for (std::size_t k = 0; k < resid.size(); ++k) resid[k] = y[k] - resid[k];
    if (residual_out) *residual_out = resid;
    return cross_downsample(op.vjp(xf, resid), dims_of(x_stage));
}

double loss_value(const ForwardOperator& op, const ImageGrid& x_stage,
                  const ImageGrid& x_tilde, const Measurement& y, double r,
                  const Dims& full_dims) {
    const ImageGrid xf = cross_upsample(x_stage, dims_of(x_stage), full_dims);
    const Measurement ax = op.apply(xf);
    double data = 0.0;
    for (std::size_t k = 0; k < ax.size(); ++k) {
        const double d = y[k] - ax[k];
        data += d * d;
    }
    double prox = 0.0;
    for (std::size_t k = 0; k < x_stage.data.size(); ++k) {
        const double d = x_stage.data[k] - x_tilde.data[k];
        prox += d * d;
    }
    return r * prox + data;
}

}  // namespace

ImageGrid cg_refine(const ImageGrid& x_tilde, const ForwardOperator& op,
                    const Measurement& y, double r, int iterations,
                    const Dims& full_dims) {
    if (iterations < 1) throw ConfigError("cg_refine: iterations must be >= 1");
    if (r < 0.0) throw ConfigError("cg_refine: r must be >= 0");
    if (y.size() != op.output_size())
        throw ConfigError("cg_refine: measurement length mismatch");

    ImageGrid x = x_tilde;
    // g = r (x_tilde - x) + U^T J_A^T (y - A(Ux)); at the start the proximal
    // part vanishes.
    ImageGrid g = data_term_pullback(op, x, y, full_dims);
    ImageGrid d = g;
    double gg = squared_norm(g);
    for (int j = 0; j < iterations; ++j) {
        if (gg == 0.0) return x;  // already optimal
        const ImageGrid xf = cross_upsample(x, dims_of(x), full_dims);
        const ImageGrid df = cross_upsample(d, dims_of(d), full_dims);
        const Measurement w = op.jvp(xf, df);
        const double denom = r * squared_norm(d) + dot(w, w);
        const double alpha = dot(g, d) / denom;
        if (!std::isfinite(alpha))
            throw NumericalError("cg_refine: non-finite step size at iteration " +
                                 std::to_string(j));
        for (std::size_t k = 0; k < x.data.size(); ++k) x.data[k] += alpha * d.data[k];

        ImageGrid g_next = data_term_pullback(op, x, y, full_dims);
        for (std::size_t k = 0; k < g_next.data.size(); ++k)
            g_next.data[k] += r * (x_tilde.data[k] - x.data[k]);
        const double gg_next = squared_norm(g_next);
        if (gg < 1e-30) return x;  // Fletcher-Reeves ratio would be meaningless
        const double beta = gg_next / gg;
        for (std::size_t k = 0; k < d.data.size(); ++k)
            d.data[k] = g_next.data[k] + beta * d.data[k];
        g = g_next;
        gg = gg_next;
    }
    return x;
}

ImageGrid langevin_refine(const ImageGrid& x_init, const ImageGrid& x_tilde,
                          const ForwardOperator& op, const Measurement& y, double r,
                          double eta, int iterations, Rng& rng, const Dims& full_dims,
                          bool noise_enabled) {
    if (!(eta > 0.0)) throw ConfigError("langevin_refine: eta must be > 0");
    if (!(r > 0.0)) throw ConfigError("langevin_refine: r must be > 0");
    if (!x_init.same_dims(x_tilde))
        throw ConfigError("langevin_refine: init/center dims differ");

    ImageGrid x = x_init;
    const double step_noise = std::sqrt(2.0 * eta);
    for (int j = 0; j < iterations; ++j) {
        // full gradient of r||x - x_tilde||^2 + ||y - A(Ux)||^2
        ImageGrid pull = data_term_pullback(op, x, y, full_dims);
        for (std::size_t k = 0; k < x.data.size(); ++k) {
            const double grad =
                2.0 * r * (x.data[k] - x_tilde.data[k]) - 2.0 * pull.data[k];
            x.data[k] -= eta * grad;
        }
        if (noise_enabled) {
            for (std::size_t k = 0; k < x.data.size(); ++k)
                x.data[k] += step_noise * rng.next_normal();
        }
        if (!all_finite(x))
            throw NumericalError(
                "langevin_refine: non-finite iterate at step " + std::to_string(j) +
                " (loss " +
                std::to_string(loss_value(op, x, x_tilde, y, r, full_dims)) + ")");
    }
    return x;
}

double corrector_integral(double lambda_prev, double lambda_cur) {
    const auto antiderivative = [lambda_cur](double l) {
        return std::exp(l) * (l - lambda_cur - 1.0);
    };
    return antiderivative(lambda_cur) - antiderivative(lambda_prev);
}

ImageGrid corrector_pass(const Trajectory& traj, const NoiseSchedule& schedule,
                         const TimeGrid& grid, const ResolutionPlan& plan) {
    const int N = grid.step_count();
    if (static_cast<int>(traj.states.size()) != N + 1 ||
        static_cast<int>(traj.estimates.size()) != N + 1)
        throw ConfigError("corrector_pass: incomplete trajectory");

    ImageGrid xc = traj.states[static_cast<std::size_t>(N)];
    for (int i = N; i >= 1; --i) {
        const double t_cur = grid.at(i);
        const double t_prev = grid.at(i - 1);
        const double l_cur = schedule.half_log_snr(t_cur);
        const double l_prev = schedule.half_log_snr(t_prev);
        if (!(l_prev > l_cur))
            throw NumericalError("corrector_pass: half log-SNR not decreasing in t");
        const double integral = corrector_integral(l_prev, l_cur);
        const double a_cur = schedule.alpha(t_cur);
        const double a_prev = schedule.alpha(t_prev);
        const double s_cur = schedule.sigma(t_cur);
        const double s_prev = schedule.sigma(t_prev);

        const ImageGrid& e_prev =
            (i == 1) ? traj.states[0] : traj.estimates[static_cast<std::size_t>(i - 1)];
        const ImageGrid e_cur = cross_upsample(
            traj.estimates[static_cast<std::size_t>(i)], plan.at(i), plan.at(i - 1));
        const ImageGrid xc_up = cross_upsample(xc, plan.at(i), plan.at(i - 1));

        const double ratio = s_prev / s_cur;
        const double est_coeff = s_prev * a_cur / s_cur - a_prev;
        const double slope_coeff = s_prev * integral / (l_prev - l_cur);
        ImageGrid next(e_prev.height, e_prev.width, e_prev.channels);
        for (std::size_t k = 0; k < next.data.size(); ++k) {
            const double slope = e_prev.data[k] - e_cur.data[k];
            next.data[k] = ratio * xc_up.data[k] - est_coeff * e_prev.data[k] -
                           slope_coeff * slope;
        }
        xc = std::move(next);
    }
    return xc;
}

namespace {

struct StepContext {
    const NoiseSchedule& schedule;
    const TimeGrid& grid;
    const ResolutionPlan& plan;

    double a(int i) const { return schedule.alpha(grid.at(i)); }
    double s(int i) const { return schedule.sigma(grid.at(i)); }
};

void check_inputs(const DataPredictor& pred, const ForwardOperator& op,
                  const Observation& obs, const TimeGrid& grid,
                  const ResolutionPlan& plan, const SamplerConfig& cfg) {
    if (static_cast<int>(plan.dims.size()) != grid.step_count() + 1)
        throw ConfigError("sampler: plan/grid length mismatch");
    if (!(plan.base() == op.input_dims()))
        throw ConfigError("sampler: operator input dims differ from plan base");
    if (obs.y.size() != op.output_size())
        throw ConfigError("sampler: observation length mismatch");
    if (cfg.inner_iterations < 1) throw ConfigError("sampler: J must be >= 1");
    if (!plan.constant() && plan.h_index <= 0)
        throw ConfigError("sampler: multi-stage plan must carry its h index");
    for (const Dims& d : plan.dims)
        if (!pred.supports(d))
            throw ConfigError("sampler: predictor does not support plan stage dims");
}

ImageGrid initial_state(const StepContext& ctx, Rng& rng) {
    const int N = ctx.grid.step_count();
    ImageGrid x = rng.normal_grid(ctx.plan.at(N));
    const double sN = ctx.s(N);
    for (double& v : x.data) v *= sN;
    return x;
}

}  // namespace

SampleResult subdps_sample(const DataPredictor& pred, const ForwardOperator& op,
                           const Observation& obs, const NoiseSchedule& schedule,
                           const TimeGrid& grid, const ResolutionPlan& plan,
                           const SamplerConfig& cfg, Rng& rng) {
    check_inputs(pred, op, obs, grid, plan, cfg);
    const StepContext ctx{schedule, grid, plan};
    const int N = grid.step_count();

    SampleResult res;
    res.trajectory.states.resize(static_cast<std::size_t>(N) + 1);
    res.trajectory.estimates.resize(static_cast<std::size_t>(N) + 1);
    res.trajectory.stochastic.assign(static_cast<std::size_t>(N) + 1, 1);

    ImageGrid x = initial_state(ctx, rng);
    res.trajectory.states[static_cast<std::size_t>(N)] = x;

    for (int i = N; i >= 1; --i) {
        const double t_cur = grid.at(i);
        const ImageGrid x0 = pred.predict(x, t_cur, schedule);
        res.predictor_pixels += plan.at(i).pixel_count();
        res.trajectory.estimates[static_cast<std::size_t>(i)] = x0;

        ImageGrid eps = rng.normal_grid(plan.at(i - 1));
        if (i == 1) {
            x = cross_upsample(x0, plan.at(1), plan.at(0));
        } else if (plan.at(i - 1) == plan.at(i)) {
            // DDPM posterior step q(x_{t_{i-1}} | x_{t_i}, x0) plus guidance.
            const double a_cur = ctx.a(i), a_prev = ctx.a(i - 1);
            const double s_cur = ctx.s(i), s_prev = ctx.s(i - 1);
            const double ar = a_cur / a_prev;
            const double s2_trans = s_cur * s_cur - ar * ar * s_prev * s_prev;
            const double c_state = ar * s_prev * s_prev / (s_cur * s_cur);
            const double c_clean = a_prev * s2_trans / (s_cur * s_cur);
            const double post_std = s_prev * std::sqrt(s2_trans) / s_cur;

            // guidance gradient wrt x_{t_i} of ||y - A(U x_theta)||^2
            const ImageGrid x0f = cross_upsample(x0, plan.at(i), plan.base());
            Measurement resid = op.apply(x0f);
            for (std::size_t k = 0; k < resid.size(); ++k)
                resid[k] = obs.y[k] - resid[k];
            const ImageGrid pull =
                cross_downsample(op.vjp(x0f, resid), plan.at(i));
            const ImageGrid guide = pred.predict_vjp(x, t_cur, schedule, pull);
            const double resid_norm = std::sqrt(dot(resid, resid));
            const double zeta = cfg.zeta0 / std::max(resid_norm, 1e-30);

            for (std::size_t k = 0; k < x.data.size(); ++k)
                x.data[k] = c_state * x.data[k] + c_clean * x0.data[k] +
                            post_std * eps.data[k] + 2.0 * zeta * guide.data[k];
        } else {
            const ImageGrid xs = cross_upsample(x0, plan.at(i), plan.at(i - 1));
            const double a_prev = ctx.a(i - 1);
            const double s_prev = ctx.s(i - 1);
            x = ImageGrid(xs.height, xs.width, xs.channels);
            for (std::size_t k = 0; k < x.data.size(); ++k)
                x.data[k] = a_prev * xs.data[k] + s_prev * eps.data[k];
        }
        res.trajectory.states[static_cast<std::size_t>(i - 1)] = x;
    }
    res.output = x;
    return res;
}

SampleResult subdaps_sample(const DataPredictor& pred, const ForwardOperator& op,
                            const Observation& obs, const NoiseSchedule& schedule,
                            const TimeGrid& grid, const ResolutionPlan& plan,
                            const SamplerConfig& cfg, Rng& rng) {
    check_inputs(pred, op, obs, grid, plan, cfg);
    const StepContext ctx{schedule, grid, plan};
    const int N = grid.step_count();

    SampleResult res;
    res.trajectory.states.resize(static_cast<std::size_t>(N) + 1);
    res.trajectory.estimates.resize(static_cast<std::size_t>(N) + 1);
    res.trajectory.stochastic.assign(static_cast<std::size_t>(N) + 1, 1);

    ImageGrid x = initial_state(ctx, rng);
    res.trajectory.states[static_cast<std::size_t>(N)] = x;

    for (int i = N; i >= 1; --i) {
        const double t_cur = grid.at(i);
        const ImageGrid x_tilde =
            solve_unconditional_ode(pred, x, t_cur, grid.at(0), cfg.ode_steps, schedule);
        res.predictor_pixels +=
            static_cast<long long>(cfg.ode_steps) * plan.at(i).pixel_count();

        const double r = regularization_weight(cfg, obs.noise_sigma, ctx.s(i));
        const double eta = langevin_step_size(cfg, r);
        const ImageGrid x_hat = langevin_refine(x_tilde, x_tilde, op, obs.y, r, eta,
                                                cfg.inner_iterations, rng, plan.base());
        res.trajectory.estimates[static_cast<std::size_t>(i)] = x_hat;

        ImageGrid eps = rng.normal_grid(plan.at(i - 1));
        if (i == 1) {
            x = cross_upsample(x_hat, plan.at(1), plan.at(0));
        } else {
            const ImageGrid xs = cross_upsample(x_hat, plan.at(i), plan.at(i - 1));
            const double a_prev = ctx.a(i - 1);
            const double s_prev = ctx.s(i - 1);
            x = ImageGrid(xs.height, xs.width, xs.channels);
            for (std::size_t k = 0; k < x.data.size(); ++k)
                x.data[k] = a_prev * xs.data[k] + s_prev * eps.data[k];
        }
        res.trajectory.states[static_cast<std::size_t>(i - 1)] = x;
    }
    res.output = x;
    return res;
}

SampleResult subdapspp_sample(const DataPredictor& pred, const ForwardOperator& op,
                              const Observation& obs, const NoiseSchedule& schedule,
                              const TimeGrid& grid, const ResolutionPlan& plan,
                              const SamplerConfig& cfg, Rng& rng) {
    check_inputs(pred, op, obs, grid, plan, cfg);
    const StepContext ctx{schedule, grid, plan};
    const int N = grid.step_count();

    SampleResult res;
    res.trajectory.states.resize(static_cast<std::size_t>(N) + 1);
    res.trajectory.estimates.resize(static_cast<std::size_t>(N) + 1);
    res.trajectory.stochastic.assign(static_cast<std::size_t>(N) + 1, 1);

    ImageGrid x = initial_state(ctx, rng);
    res.trajectory.states[static_cast<std::size_t>(N)] = x;

    for (int i = N; i >= 1; --i) {
        const double t_cur = grid.at(i);
        const ImageGrid x_tilde = pred.predict(x, t_cur, schedule);
        res.predictor_pixels += plan.at(i).pixel_count();

        const double r = regularization_weight(cfg, obs.noise_sigma, ctx.s(i));
        const ImageGrid x_hat =
            cg_refine(x_tilde, op, obs.y, r, cfg.inner_iterations, plan.base());
        res.trajectory.estimates[static_cast<std::size_t>(i)] = x_hat;

        double diff2 = 0.0;
        for (std::size_t k = 0; k < x_hat.data.size(); ++k) {
            const double d = x_hat.data[k] - x_tilde.data[k];
            diff2 += d * d;
        }
        const bool stochastic =
            diff2 >= cfg.tau || (plan.h_index > 0 && i >= plan.h_index);
        res.trajectory.stochastic[static_cast<std::size_t>(i)] = stochastic ? 1 : 0;

        ImageGrid eps = rng.normal_grid(plan.at(i - 1));  // consumed on every step
        if (i == 1) {
            x = cross_upsample(x_hat, plan.at(1), plan.at(0));
        } else if (stochastic) {
            const ImageGrid xs = cross_upsample(x_hat, plan.at(i), plan.at(i - 1));
            const double a_prev = ctx.a(i - 1);
            const double s_prev = ctx.s(i - 1);
            x = ImageGrid(xs.height, xs.width, xs.channels);
            for (std::size_t k = 0; k < x.data.size(); ++k)
                x.data[k] = a_prev * xs.data[k] + s_prev * eps.data[k];
        } else {
            // deterministic update; dims cannot change below the h index
            const double a_cur = ctx.a(i), a_prev = ctx.a(i - 1);
            const double ratio = ctx.s(i - 1) / ctx.s(i);
            for (std::size_t k = 0; k < x.data.size(); ++k)
                x.data[k] = a_prev * x_hat.data[k] +
                            ratio * (x.data[k] - a_cur * x_hat.data[k]);
        }
        res.trajectory.states[static_cast<std::size_t>(i - 1)] = x;
    }

    res.output = cfg.corrector_enabled ? corrector_pass(res.trajectory, schedule, grid, plan)
                                       : x;
    return res;
}

SampleResult subdaps_fpp_sample(const DataPredictor& pred, const ForwardOperator& op,
                                const Observation& obs, const NoiseSchedule& schedule,
                                const TimeGrid& grid, const ResolutionPlan& plan,
                                const SamplerConfig& cfg, Rng& rng) {
    return subdapspp_sample(pred, op, obs, schedule, grid,
                            constant_plan(grid, plan.base()), cfg, rng);
}

}  // namespace restore
