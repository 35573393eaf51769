#include "restore/schedule.hpp"

#include <algorithm>
#include <cmath>

#include "restore/errors.hpp"

namespace restore {

NoiseSchedule NoiseSchedule::ve(double sigma_max) {
    if (!(sigma_max > 0.0)) throw ConfigError("ve schedule: sigma_max must be > 0");
    NoiseSchedule s;
    s.kind_ = ScheduleKind::variance_exploding;
    s.T_ = sigma_max;
    return s;
}

NoiseSchedule NoiseSchedule::vp(double beta_min, double beta_max, double terminal_time) {
    if (!(beta_min > 0.0 && beta_max > beta_min))
        throw ConfigError("vp schedule: need 0 < beta_min < beta_max");
    if (!(terminal_time > 0.0)) throw ConfigError("vp schedule: T must be > 0");
    NoiseSchedule s;
    s.kind_ = ScheduleKind::variance_preserving;
    s.T_ = terminal_time;
    s.beta_min_ = beta_min;
    s.beta_max_ = beta_max;
    return s;
}

void NoiseSchedule::check_time(double t) const {
    if (!(t > 0.0) || t > T_ * (1.0 + 1e-12))
        throw ConfigError("schedule time out of range (0, T]: t=" + std::to_string(t));
}

double NoiseSchedule::alpha(double t) const {
    check_time(t);
    if (kind_ == ScheduleKind::variance_exploding) return 1.0;
    // log alpha_t = -1/2 (beta_min t + (beta_max - beta_min) t^2 / (2T))
    const double u = t / T_;
    const double integral = beta_min_ * t + (beta_max_ - beta_min_) * t * u / 2.0;
    return std::exp(-0.5 * integral);
}

double NoiseSchedule::sigma(double t) const {
    check_time(t);
    if (kind_ == ScheduleKind::variance_exploding) return t;
    const double a = alpha(t);
    return std::sqrt(std::max(0.0, 1.0 - a * a));
}

double NoiseSchedule::half_log_snr(double t) const {
    const double s = sigma(t);
    if (s <= 0.0)
        throw ConfigError("half_log_snr undefined where sigma_t = 0");
    return std::log(alpha(t) / s);
}

double NoiseSchedule::snr(double t) const {
    const double a = alpha(t);
    const double s = sigma(t);
    return a * a / (s * s);
}

NoiseSchedule::DriftDiffusion NoiseSchedule::drift_diffusion(double t) const {
    check_time(t);
    if (kind_ == ScheduleKind::variance_exploding) {
        return {0.0, 2.0 * t};  // alpha constant, d(sigma^2)/dt = 2t
    }
    const double beta = beta_min_ + (beta_max_ - beta_min_) * (t / T_);
    // f = -beta/2; g^2 = d sigma^2/dt - 2 f sigma^2 = beta (alpha^2 + sigma^2) / ... = beta
    return {-0.5 * beta, beta};
}

double NoiseSchedule::time_from_half_log_snr(double lambda) const {
    double lo = t_floor(), hi = T_;
    const double f_lo = half_log_snr(lo);
    const double f_hi = half_log_snr(hi);
    if (lambda >= f_lo) return lo;
    if (lambda <= f_hi) return hi;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (half_log_snr(mid) > lambda)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

TimeGrid make_time_grid(const NoiseSchedule& schedule, int steps, GridSpacing spacing,
                        double poly_exponent) {
    if (steps < 2) throw ConfigError("time grid needs N >= 2 steps");
    const double t0 = schedule.t_floor();
    const double t1 = schedule.terminal_time();
    TimeGrid grid;
    grid.times.resize(static_cast<std::size_t>(steps) + 1);
    switch (spacing) {
        case GridSpacing::linear:
            for (int i = 0; i <= steps; ++i) {
                const double u = static_cast<double>(i) / steps;
                grid.times[i] = t0 + u * (t1 - t0);
            }
            break;
        case GridSpacing::polynomial: {
            const double p = poly_exponent;
            const double a = std::pow(t0, 1.0 / p);
            const double b = std::pow(t1, 1.0 / p);
            for (int i = 0; i <= steps; ++i) {
                const double u = static_cast<double>(i) / steps;
                grid.times[i] = std::pow(a + u * (b - a), p);
            }
            break;
        }
        case GridSpacing::log_snr: {
            const double l0 = schedule.half_log_snr(t0);
            const double l1 = schedule.half_log_snr(t1);
            for (int i = 0; i <= steps; ++i) {
                const double u = static_cast<double>(i) / steps;
                grid.times[i] = schedule.time_from_half_log_snr(l0 + u * (l1 - l0));
            }
            break;
        }
    }
    grid.times.front() = t0;
    grid.times.back() = t1;
    for (std::size_t i = 1; i < grid.times.size(); ++i) {
        if (!(grid.times[i] > grid.times[i - 1]))
            throw NumericalError("time grid not strictly increasing");
    }
    return grid;
}

namespace {

Dims halved(const Dims& d, int times) {
    Dims out = d;
    for (int k = 0; k < times; ++k) {
        if (out.height % 2 != 0 || out.width % 2 != 0)
            throw ConfigError("resolution plan: base dims not divisible by 2^(stages-1)");
        out.height /= 2;
        out.width /= 2;
    }
    return out;
}

}  // namespace

ResolutionPlan make_resolution_plan(const TimeGrid& grid, const Dims& base, int stages) {
    if (stages < 1) throw ConfigError("resolution plan: stages must be >= 1");
    halved(base, stages - 1);  // validates divisibility up front
    const int N = grid.step_count();
    ResolutionPlan plan;
    plan.dims.resize(static_cast<std::size_t>(N) + 1);
    // Breakpoints floor(j*N/stages): dims halve per axis each time i crosses one.
    for (int i = 0; i <= N; ++i) {
        int level = 0;
        for (int j = 1; j < stages; ++j) {
            if (i > (static_cast<long long>(j) * N) / stages) ++level;
        }
        plan.dims[i] = halved(base, level);
    }
    for (int i = 1; i <= N; ++i) {
        if (!(plan.dims[i - 1] == plan.dims[i])) plan.switch_indices.push_back(i);
    }
    plan.h_index = stages > 1 ? static_cast<int>(N / stages) : 0;
    return plan;
}

ResolutionPlan constant_plan(const TimeGrid& grid, const Dims& base) {
    ResolutionPlan plan;
    plan.dims.assign(static_cast<std::size_t>(grid.step_count()) + 1, base);
    plan.h_index = 0;
    return plan;
}

}  // namespace restore
