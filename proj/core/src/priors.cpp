#include "restore/priors.hpp"

#include <algorithm>
#include <cmath>

#include "restore/errors.hpp"

namespace restore {

bool DataPredictor::supports(const Dims& d) const {
    Dims b = base_dims();
    if (d.channels != b.channels) return false;
    while (b.height > d.height && b.height % 2 == 0 && b.width % 2 == 0) {
        b.height /= 2;
        b.width /= 2;
    }
    return b == d;
}

ImageGrid DataPredictor::predict_vjp(const ImageGrid&, double, const NoiseSchedule&,
                                     const ImageGrid& v) const {
    return v;
}

// ---------------- GaussianPrior ----------------

GaussianPrior::GaussianPrior(ImageGrid mean, double gamma)
    : mean_(std::move(mean)), gamma_(gamma) {
    if (!(gamma > 0.0)) throw ConfigError("gaussian prior: gamma must be > 0");
    if (!all_finite(mean_)) throw ConfigError("gaussian prior: non-finite mean");
}

ImageGrid GaussianPrior::predict(const ImageGrid& x, double t,
                                 const NoiseSchedule& schedule) const {
    if (!supports(dims_of(x)))
        throw ConfigError("gaussian prior: unsupported dims " + x.dims_str());
    const double a = schedule.alpha(t);
    const double s = schedule.sigma(t);
    const double g2 = gamma_ * gamma_;
    const double s2 = s * s;
    const double denom = a * a * g2 + s2;
    const ImageGrid mu = mean_at(dims_of(x));
    ImageGrid out(x.height, x.width, x.channels);
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = (g2 * a * x.data[k] + s2 * mu.data[k]) / denom;
    return out;
}

ImageGrid GaussianPrior::predict_vjp(const ImageGrid& x, double t,
                                     const NoiseSchedule& schedule,
                                     const ImageGrid& v) const {
    const double a = schedule.alpha(t);
    const double s = schedule.sigma(t);
    const double g2 = gamma_ * gamma_;
    const double shrink = g2 * a / (a * a * g2 + s * s);
    ImageGrid out = v;
    (void)x;
    for (double& w : out.data) w *= shrink;
    return out;
}

ImageGrid GaussianPrior::sample(Rng& rng) const {
    ImageGrid out = rng.normal_grid(dims_of(mean_));
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = mean_.data[k] + gamma_ * out.data[k];
    return out;
}

// ---------------- MixturePrior ----------------

MixturePrior::MixturePrior(std::vector<Component> components)
    : components_(std::move(components)) {
    if (components_.empty()) throw ConfigError("mixture prior: no components");
    double wsum = 0.0;
    for (const auto& c : components_) {
        if (!(c.weight > 0.0)) throw ConfigError("mixture prior: weights must be > 0");
        if (!(c.gamma > 0.0)) throw ConfigError("mixture prior: gammas must be > 0");
        if (!(dims_of(c.mean) == dims_of(components_[0].mean)))
            throw ConfigError("mixture prior: component dims differ");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
        throw ConfigError("mixture prior: weights must sum to 1");
}

std::vector<double> MixturePrior::responsibilities(const ImageGrid& x, double t,
                                                   const NoiseSchedule& schedule) const {
    const double a = schedule.alpha(t);
    const double s2 = schedule.sigma(t) * schedule.sigma(t);
    const double n = static_cast<double>(x.size());
    std::vector<double> logr(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        const double v = a * a * c.gamma * c.gamma + s2;
        const ImageGrid mu = cross_downsample(c.mean, dims_of(x));
        double q = 0.0;
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double d = x.data[i] - a * mu.data[i];
            q += d * d;
        }
        logr[k] = std::log(c.weight) - 0.5 * q / v - 0.5 * n * std::log(v);
    }
    const double m = *std::max_element(logr.begin(), logr.end());
    double sum = 0.0;
    for (double& l : logr) {
        l = std::exp(l - m);
        sum += l;
    }
    for (double& l : logr) l /= sum;
    return logr;
}

ImageGrid MixturePrior::predict(const ImageGrid& x, double t,
                                const NoiseSchedule& schedule) const {
    if (!supports(dims_of(x)))
        throw ConfigError("mixture prior: unsupported dims " + x.dims_str());
    const double a = schedule.alpha(t);
    const double s2 = schedule.sigma(t) * schedule.sigma(t);
    const std::vector<double> r = responsibilities(x, t, schedule);
    ImageGrid out(x.height, x.width, x.channels);
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        const double g2 = c.gamma * c.gamma;
        const double v = a * a * g2 + s2;
        const ImageGrid mu = cross_downsample(c.mean, dims_of(x));
        for (std::size_t i = 0; i < out.data.size(); ++i)
            out.data[i] += r[k] * (g2 * a * x.data[i] + s2 * mu.data[i]) / v;
    }
    return out;
}

ImageGrid MixturePrior::predict_vjp(const ImageGrid& x, double t,
                                    const NoiseSchedule& schedule,
                                    const ImageGrid& v) const {
    // J = sum_k r_k (s_k I + m_k c_k^T) with c_k the centered score of
    // component k, so J^T u = (sum r_k s_k) u + sum_k r_k (m_k . u) c_k.
    const double a = schedule.alpha(t);
    const double s2 = schedule.sigma(t) * schedule.sigma(t);
    const std::vector<double> r = responsibilities(x, t, schedule);
    const std::size_t K = components_.size();

    std::vector<ImageGrid> means(K);
    std::vector<double> vark(K);
    for (std::size_t k = 0; k < K; ++k) {
        means[k] = cross_downsample(components_[k].mean, dims_of(x));
        vark[k] = a * a * components_[k].gamma * components_[k].gamma + s2;
    }

    ImageGrid out(x.height, x.width, x.channels);
    double shrink = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        shrink += r[k] * components_[k].gamma * components_[k].gamma * a / vark[k];
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = shrink * v.data[i];

    // component scores and their responsibility-weighted average
    std::vector<double> mdotv(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const double g2 = components_[k].gamma * components_[k].gamma;
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double mk = (g2 * a * x.data[i] + s2 * means[k].data[i]) / vark[k];
            mdotv[k] += mk * v.data[i];
        }
    }
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        double avg_score = 0.0;
        for (std::size_t k = 0; k < K; ++k)
            avg_score += r[k] * (-(x.data[i] - a * means[k].data[i]) / vark[k]);
        for (std::size_t k = 0; k < K; ++k) {
            const double ck = -(x.data[i] - a * means[k].data[i]) / vark[k] - avg_score;
            out.data[i] += r[k] * mdotv[k] * ck;
        }
    }
    return out;
}

ImageGrid MixturePrior::sample(Rng& rng) const {
    const double u = rng.next_unit();
    double acc = 0.0;
    std::size_t pick = components_.size() - 1;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        acc += components_[k].weight;
        if (u <= acc) {
            pick = k;
            break;
        }
    }
    const auto& c = components_[pick];
    ImageGrid out = rng.normal_grid(dims_of(c.mean));
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = c.mean.data[k] + c.gamma * out.data[k];
    return out;
}

double MixturePrior::log_density(const ImageGrid& x, double t,
                                 const NoiseSchedule& schedule) const {
    const double a = schedule.alpha(t);
    const double s2 = schedule.sigma(t) * schedule.sigma(t);
    const double n = static_cast<double>(x.size());
    std::vector<double> logp(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        const double v = a * a * c.gamma * c.gamma + s2;
        const ImageGrid mu = cross_downsample(c.mean, dims_of(x));
        double q = 0.0;
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            const double d = x.data[i] - a * mu.data[i];
            q += d * d;
        }
        logp[k] = std::log(c.weight) - 0.5 * q / v -
                  0.5 * n * std::log(2.0 * 3.141592653589793238462643383279502884 * v);
    }
    const double m = *std::max_element(logp.begin(), logp.end());
    double sum = 0.0;
    for (double l : logp) sum += std::exp(l - m);
    return m + std::log(sum);
}

// ---------------- TabulatedPredictor ----------------

TabulatedPredictor::TabulatedPredictor(std::vector<double> times,
                                       std::vector<ImageGrid> scales,
                                       std::vector<ImageGrid> offsets)
    : times_(std::move(times)), scales_(std::move(scales)), offsets_(std::move(offsets)) {
    if (times_.empty() || times_.size() != scales_.size() ||
        times_.size() != offsets_.size())
        throw ConfigError("tabulated predictor: knot count mismatch");
    for (std::size_t k = 1; k < times_.size(); ++k)
        if (!(times_[k] > times_[k - 1]))
            throw ConfigError("tabulated predictor: knot times must increase");
}

ImageGrid TabulatedPredictor::predict(const ImageGrid& x, double t,
                                      const NoiseSchedule&) const {
    const Dims d = dims_of(x);
    std::size_t hi = 0;
    while (hi + 1 < times_.size() && times_[hi] < t) ++hi;
    const std::size_t lo = hi > 0 ? hi - 1 : 0;
    double w = 0.0;
    if (hi != lo && times_[hi] > times_[lo])
        w = std::clamp((t - times_[lo]) / (times_[hi] - times_[lo]), 0.0, 1.0);
    const ImageGrid s_lo = cross_downsample(scales_[lo], d);
    const ImageGrid s_hi = cross_downsample(scales_[hi], d);
    const ImageGrid b_lo = cross_downsample(offsets_[lo], d);
    const ImageGrid b_hi = cross_downsample(offsets_[hi], d);
    ImageGrid out(x.height, x.width, x.channels);
    for (std::size_t k = 0; k < out.data.size(); ++k) {
        const double sc = (1.0 - w) * s_lo.data[k] + w * s_hi.data[k];
        const double of = (1.0 - w) * b_lo.data[k] + w * b_hi.data[k];
        out.data[k] = sc * x.data[k] + of;
    }
    return out;
}

// ---------------- free functions ----------------

ImageGrid score_from_predictor(const DataPredictor& pred, const ImageGrid& x, double t,
                               const NoiseSchedule& schedule) {
    const double s = schedule.sigma(t);
    if (!(s > 0.0)) throw ConfigError("score undefined where sigma_t = 0");
    const double a = schedule.alpha(t);
    const ImageGrid x0 = pred.predict(x, t, schedule);
    ImageGrid out(x.height, x.width, x.channels);
    for (std::size_t k = 0; k < out.data.size(); ++k)
        out.data[k] = (a * x0.data[k] - x.data[k]) / (s * s);
    return out;
}

ImageGrid solve_unconditional_ode(const DataPredictor& pred, const ImageGrid& x_start,
                                  double t_start, double t_end, int steps,
                                  const NoiseSchedule& schedule) {
    if (steps < 1) throw ConfigError("ode solver: steps must be >= 1");
    if (t_end > t_start) throw ConfigError("ode solver: t_end must be <= t_start");
    if (t_end == t_start) return x_start;
    ImageGrid x = x_start;
    for (int k = 0; k < steps; ++k) {
        const double t_cur = t_start + (t_end - t_start) * k / steps;
        const double t_next = t_start + (t_end - t_start) * (k + 1) / steps;
        const ImageGrid x0 = pred.predict(x, t_cur, schedule);
        const double a_cur = schedule.alpha(t_cur);
        const double a_next = schedule.alpha(t_next);
        const double ratio = schedule.sigma(t_next) / schedule.sigma(t_cur);
        for (std::size_t i = 0; i < x.data.size(); ++i)
            x.data[i] = a_next * x0.data[i] + ratio * (x.data[i] - a_cur * x0.data[i]);
    }
    return x;
}

double finetune_objective(const DataPredictor& pred, const ImageGrid& x0, double t,
                          Rng& rng, const NoiseSchedule& schedule,
                          const ResolutionPlan& plan) {
    require_dims(x0, plan.base(), "finetune_objective");
    const double a = schedule.alpha(t);
    const double s = schedule.sigma(t);
    double total = 0.0;
    Dims prev{-1, -1, -1};
    for (const Dims& d : plan.dims) {
        if (d == prev) continue;  // plan dims are sorted fine -> coarse
        prev = d;
        const ImageGrid target = cross_downsample(x0, d);
        ImageGrid noisy = rng.normal_grid(d);
        for (std::size_t k = 0; k < noisy.data.size(); ++k)
            noisy.data[k] = a * target.data[k] + s * noisy.data[k];
        const ImageGrid est = pred.predict(noisy, t, schedule);
        for (std::size_t k = 0; k < est.data.size(); ++k) {
            const double dlt = target.data[k] - est.data[k];
            total += dlt * dlt;
        }
    }
    return total;
}

}  // namespace restore
