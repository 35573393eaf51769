#pragma once

#include <vector>

#include "restore/image.hpp"

namespace restore {

enum class ScheduleKind { variance_exploding, variance_preserving };
enum class GridSpacing { linear, log_snr, polynomial };

/// Noise schedule of the forward process x_t | x_0 ~ N(alpha_t x_0, sigma_t^2 I).
///
/// Variance-exploding: alpha_t = 1, sigma_t = t, terminal time T = sigma_max.
/// Variance-preserving: alpha_t = exp(-1/2 int_0^t beta), sigma_t^2 = 1 - alpha_t^2,
/// with beta linear in t between beta_min and beta_max over [0, T].
///
/// All evaluations require t in (0, T]; t_floor() = 1e-3 * T is the grid floor
/// that keeps sigma_t and the half log-SNR finite at the low end.
class NoiseSchedule {
public:
    static NoiseSchedule ve(double sigma_max = 10.0);
    static NoiseSchedule vp(double beta_min = 0.1, double beta_max = 20.0,
                            double terminal_time = 1.0);

    ScheduleKind kind() const { return kind_; }
    double terminal_time() const { return T_; }
    double t_floor() const { return 1e-3 * T_; }

    double alpha(double t) const;
    double sigma(double t) const;
    /// lambda_t = log(alpha_t / sigma_t), strictly decreasing in t.
    double half_log_snr(double t) const;
    double snr(double t) const;

    /// f = d log alpha_t / dt and g^2 = d sigma_t^2/dt - 2 f sigma_t^2,
    /// for t interior to (0, T).
    struct DriftDiffusion {
        double f;
        double g2;
    };
    DriftDiffusion drift_diffusion(double t) const;

    /// Inverse of half_log_snr on [t_floor, T] (bisection; lambda is monotone).
    double time_from_half_log_snr(double lambda) const;

private:
    NoiseSchedule() = default;
    void check_time(double t) const;

    ScheduleKind kind_ = ScheduleKind::variance_exploding;
    double T_ = 10.0;
    double beta_min_ = 0.1;
    double beta_max_ = 20.0;
};

/// Strictly increasing times t_0 < t_1 < ... < t_N with t_0 = schedule floor
/// and t_N = T.
struct TimeGrid {
    std::vector<double> times;

    int step_count() const { return static_cast<int>(times.size()) - 1; }
    double at(int i) const { return times[static_cast<std::size_t>(i)]; }
};

TimeGrid make_time_grid(const NoiseSchedule& schedule, int steps,
                        GridSpacing spacing, double poly_exponent = 7.0);

/// Per-index dimensions d_i of the states x_{t_i}, non-increasing in i, plus
/// the switch bookkeeping the samplers need. For a 3-stage plan the dims halve
/// per axis above i = floor(N/3) and again above i = floor(2N/3); the state is
/// at full base dims for i <= floor(N/3).
struct ResolutionPlan {
    std::vector<Dims> dims;        // dims[i] = dims of x_{t_i}, i = 0..N
    std::vector<int> switch_indices;  // { i : dims[i-1] != dims[i] }
    int h_index = 0;  // smallest index at which full dims take effect; 0 when
                      // the plan is constant (no forced-stochastic region)

    const Dims& at(int i) const { return dims[static_cast<std::size_t>(i)]; }
    const Dims& base() const { return dims.front(); }
    bool constant() const { return switch_indices.empty(); }
};

ResolutionPlan make_resolution_plan(const TimeGrid& grid, const Dims& base, int stages);

/// A constant plan at the given base dims over the same grid (the
/// full-dimension reduction of any plan).
ResolutionPlan constant_plan(const TimeGrid& grid, const Dims& base);

}  // namespace restore
