#pragma once

#include <cstdint>
#include <vector>

#include "restore/image.hpp"
#include "restore/operators.hpp"
#include "restore/priors.hpp"
#include "restore/rng.hpp"
#include "restore/schedule.hpp"

namespace restore {

/// Shared knobs of the posterior samplers. The per-step regularization is
///   r_i = max(r_floor, noise_sigma^2 * (r_scale / sigma_i^2 + 1 / r_prior_variance))
/// where the prior-variance term is dropped when r_prior_variance <= 0
/// (the plain noise-annealed rule). Langevin steps use
/// eta_i = eta0 / (r_i + operator_lipschitz), and the guidance strength of the
/// DPS-style sampler is zeta0 / ||y - A(U x_theta)||.
struct SamplerConfig {
    int inner_iterations = 20;  // J
    double tau = 1e-4;
    bool corrector_enabled = true;
    int ode_steps = 5;

    double r_scale = 1.0;
    double r_prior_variance = 0.0;
    double r_floor = 1e-30;

    double eta0 = 0.5;
    double operator_lipschitz = 1.0;
    double zeta0 = 0.3;
};

double regularization_weight(const SamplerConfig& cfg, double noise_sigma,
                             double sigma_t);
double langevin_step_size(const SamplerConfig& cfg, double r);

/// Denoising chain bookkeeping. states[i] = x_{t_i} (i = 0..N) at the plan's
/// stage dims; estimates[i] = the refined clean estimate computed at step i
/// (i = 1..N; index 0 is filled by the corrector with the final state).
/// stochastic[i] records which branch produced x_{t_{i-1}}.
struct Trajectory {
    std::vector<ImageGrid> states;
    std::vector<ImageGrid> estimates;
    std::vector<std::uint8_t> stochastic;
};

struct SampleResult {
    ImageGrid output;
    Trajectory trajectory;
    long long predictor_pixels = 0;  // total pixels fed through the predictor
};

/// Inner solver of r ||x - x_tilde||^2 + ||y - A(U x)||^2 by conjugate
/// gradients with the closed-form line search (Fletcher-Reeves directions,
/// half-gradient convention so the line search is exact on quadratics).
/// Starts at x_tilde. full_dims names the space U maps into.
ImageGrid cg_refine(const ImageGrid& x_tilde, const ForwardOperator& op,
                    const Measurement& y, double r, int iterations,
                    const Dims& full_dims);

/// J unadjusted Langevin steps x <- x - eta grad L + sqrt(2 eta) z on
/// L(x) = r ||x - x_tilde||^2 + ||y - A(U x)||^2, started at x_init.
/// noise_enabled=false runs plain gradient descent (test hook).
ImageGrid langevin_refine(const ImageGrid& x_init, const ImageGrid& x_tilde,
                          const ForwardOperator& op, const Measurement& y, double r,
                          double eta, int iterations, Rng& rng, const Dims& full_dims,
                          bool noise_enabled = true);

/// Signed integral of e^lambda (lambda - lambda_cur) from lambda_prev to
/// lambda_cur, via the antiderivative e^lambda (lambda - lambda_cur - 1).
/// Negative whenever lambda_prev > lambda_cur.
double corrector_integral(double lambda_prev, double lambda_cur);

/// Second-order trajectory replay: rebuilds the final state from the stored
/// clean estimates without further predictor calls and returns the corrected
/// x_{t_0}. Requires a complete trajectory; the estimate at index 0 is taken
/// to be the final state itself.
ImageGrid corrector_pass(const Trajectory& traj, const NoiseSchedule& schedule,
                         const TimeGrid& grid, const ResolutionPlan& plan);

// The three posterior samplers. All of them draw the initial state as
// sigma_{t_N} * eps at the coarsest stage dims, then consume exactly one
// noise grid per outer step at the dims of x_{t_{i-1}} (drawn before the
// branch decision and discarded when unused), so that seeds line up across
// variants; the Langevin sampler additionally consumes J draws per step
// inside langevin_refine. The last step (i = 1) writes the upsampled clean
// estimate directly: the recursions treat the endpoint as t = 0 even though
// the grid keeps a small positive floor there for log-SNR purposes.

SampleResult subdps_sample(const DataPredictor& pred, const ForwardOperator& op,
                           const Observation& obs, const NoiseSchedule& schedule,
                           const TimeGrid& grid, const ResolutionPlan& plan,
                           const SamplerConfig& cfg, Rng& rng);

SampleResult subdaps_sample(const DataPredictor& pred, const ForwardOperator& op,
                            const Observation& obs, const NoiseSchedule& schedule,
                            const TimeGrid& grid, const ResolutionPlan& plan,
                            const SamplerConfig& cfg, Rng& rng);

SampleResult subdapspp_sample(const DataPredictor& pred, const ForwardOperator& op,
                              const Observation& obs, const NoiseSchedule& schedule,
                              const TimeGrid& grid, const ResolutionPlan& plan,
                              const SamplerConfig& cfg, Rng& rng);

/// Full-dimensionality variant: subdapspp on the constant plan at the given
/// plan's base dims.
SampleResult subdaps_fpp_sample(const DataPredictor& pred, const ForwardOperator& op,
                                const Observation& obs, const NoiseSchedule& schedule,
                                const TimeGrid& grid, const ResolutionPlan& plan,
                                const SamplerConfig& cfg, Rng& rng);

}  // namespace restore
