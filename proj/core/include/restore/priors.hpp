#pragma once

#include <memory>
#include <vector>

#include "restore/image.hpp"
#include "restore/resample.hpp"
#include "restore/rng.hpp"
#include "restore/schedule.hpp"

namespace restore {

/// Data-prediction model x_theta(x_t, t) estimating the clean signal.
/// Implementations must accept any dims reachable by repeated factor-2
/// downsampling of their base dims (one per resolution stage).
class DataPredictor {
public:
    virtual ~DataPredictor() = default;

    virtual Dims base_dims() const = 0;
    virtual bool supports(const Dims& d) const;

    virtual ImageGrid predict(const ImageGrid& x, double t,
                              const NoiseSchedule& schedule) const = 0;

    /// Transpose-Jacobian of predict at (x, t) applied to v; used by the
    /// guidance gradient. The default passes v through unchanged (the common
    /// frozen-predictor simplification); analytic priors override it exactly.
    virtual ImageGrid predict_vjp(const ImageGrid& x, double t,
                                  const NoiseSchedule& schedule,
                                  const ImageGrid& v) const;
};

/// Isotropic Gaussian prior N(mean, gamma^2 I) with the exact posterior mean
///   E[x0 | x_t] = (gamma^2 alpha_t x + sigma_t^2 mu) / (alpha_t^2 gamma^2 + sigma_t^2).
/// Coarse-stage means are downsampled from the finest stage; gamma is shared
/// across stages (orthonormal projections preserve isotropic variance).
class GaussianPrior final : public DataPredictor {
public:
    GaussianPrior(ImageGrid mean, double gamma);

    Dims base_dims() const override { return dims_of(mean_); }
    ImageGrid predict(const ImageGrid& x, double t,
                      const NoiseSchedule& schedule) const override;
    ImageGrid predict_vjp(const ImageGrid& x, double t, const NoiseSchedule& schedule,
                          const ImageGrid& v) const override;

    const ImageGrid& mean() const { return mean_; }
    ImageGrid mean_at(const Dims& d) const { return cross_downsample(mean_, d); }
    double gamma() const { return gamma_; }

    /// Draw x0 ~ N(mean, gamma^2 I) at base dims.
    ImageGrid sample(Rng& rng) const;

private:
    ImageGrid mean_;
    double gamma_;
};

/// Finite mixture of isotropic Gaussians; exact responsibility-weighted
/// posterior mean with log-space responsibilities.
class MixturePrior final : public DataPredictor {
public:
    struct Component {
        double weight;
        ImageGrid mean;
        double gamma;
    };

    explicit MixturePrior(std::vector<Component> components);

    Dims base_dims() const override { return dims_of(components_[0].mean); }
    ImageGrid predict(const ImageGrid& x, double t,
                      const NoiseSchedule& schedule) const override;
    ImageGrid predict_vjp(const ImageGrid& x, double t, const NoiseSchedule& schedule,
                          const ImageGrid& v) const override;

    const std::vector<Component>& components() const { return components_; }
    ImageGrid sample(Rng& rng) const;

    /// log p_t(x) of the noisy marginal at time t (used by score tests).
    double log_density(const ImageGrid& x, double t, const NoiseSchedule& schedule) const;

private:
    std::vector<double> responsibilities(const ImageGrid& x, double t,
                                         const NoiseSchedule& schedule) const;
    std::vector<Component> components_;
};

/// Affine-in-x predictor tabulated over time knots, loadable from raw tensor
/// files: predict = scale(t) * x + offset(t) with piecewise-linear
/// interpolation of the stored grids in t. Lets externally fitted denoisers
/// plug into the samplers.
class TabulatedPredictor final : public DataPredictor {
public:
    TabulatedPredictor(std::vector<double> times, std::vector<ImageGrid> scales,
                       std::vector<ImageGrid> offsets);

    Dims base_dims() const override { return dims_of(scales_[0]); }
    ImageGrid predict(const ImageGrid& x, double t,
                      const NoiseSchedule& schedule) const override;

private:
    std::vector<double> times_;
    std::vector<ImageGrid> scales_;
    std::vector<ImageGrid> offsets_;
};

/// Score parameterization (alpha_t x_theta(x, t) - x) / sigma_t^2.
ImageGrid score_from_predictor(const DataPredictor& pred, const ImageGrid& x, double t,
                               const NoiseSchedule& schedule);

/// Probability-flow integration in data-prediction form (first-order, DDIM
/// style) over `steps` substeps linear in t. t_end <= t_start; equal times
/// return x_start unchanged. The canonical per-substep update is
///   x <- alpha_next * x0 + (sigma_next / sigma_cur) * (x - alpha_cur * x0).
ImageGrid solve_unconditional_ode(const DataPredictor& pred, const ImageGrid& x_start,
                                  double t_start, double t_end, int steps,
                                  const NoiseSchedule& schedule);

/// One-sample estimate of the multi-resolution denoising objective at time t:
/// the squared prediction error of x0 under fresh noise, summed over every
/// distinct plan stage (finest first, independent noise per stage).
double finetune_objective(const DataPredictor& pred, const ImageGrid& x0, double t,
                          Rng& rng, const NoiseSchedule& schedule,
                          const ResolutionPlan& plan);

}  // namespace restore
