#include "restore/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "restore/errors.hpp"

namespace restore {

Measurement ForwardOperator::jvp(const ImageGrid& x, const ImageGrid& d) const {
    require_dims(d, input_dims(), "jvp direction");
    if (linear()) return apply(d);
    throw ConfigError("jvp not implemented for operator " + id());
}

ImageGrid ForwardOperator::adjoint(const Measurement& v) const {
    if (!linear())
        throw ConfigError("adjoint requires a linear operator; " + id() +
                          " exposes vjp at a point instead");
    return vjp(ImageGrid(input_dims().height, input_dims().width, input_dims().channels), v);
}

Observation degrade(const ForwardOperator& op, const ImageGrid& x, double sigma,
                    Rng& rng) {
    if (sigma < 0.0) throw ConfigError("degrade: sigma must be >= 0");
    Observation obs;
    obs.y = op.apply(x);
    obs.noise_sigma = sigma;
    obs.operator_id = op.id();
    for (double& v : obs.y) v += sigma * rng.next_normal();
    return obs;
}

namespace {

void check_output(const Measurement& v, std::size_t m, const char* who) {
    if (v.size() != m)
        throw ConfigError(std::string(who) + ": measurement length " +
                          std::to_string(v.size()) + " != " + std::to_string(m));
}

class InpaintOp final : public ForwardOperator {
public:
    InpaintOp(const Dims& dims, double keep_ratio, Rng rng) : dims_(dims) {
        if (keep_ratio <= 0.0 || keep_ratio > 1.0)
            throw ConfigError("inpaint: keep_ratio must be in (0, 1]");
        const int n_pix = dims.height * dims.width;
        const int keep = static_cast<int>(std::ceil(keep_ratio * n_pix));
        std::vector<int> perm(n_pix);
        std::iota(perm.begin(), perm.end(), 0);
        // Fisher-Yates prefix shuffle from the seeded stream.
        for (int i = 0; i < keep; ++i) {
            const int j = i + static_cast<int>(rng.next_u64() % (n_pix - i));
            std::swap(perm[i], perm[j]);
        }
        kept_.assign(perm.begin(), perm.begin() + keep);
        std::sort(kept_.begin(), kept_.end());
    }

    std::string id() const override {
        return "inpaint(keep=" + std::to_string(kept_.size()) + ")";
    }
    Dims input_dims() const override { return dims_; }
    std::size_t output_size() const override { return kept_.size() * dims_.channels; }
    bool linear() const override { return true; }

    Measurement apply(const ImageGrid& x) const override {
        require_dims(x, dims_, "inpaint apply");
        Measurement y(output_size());
        std::size_t r = 0;
        for (int p : kept_)
            for (int ch = 0; ch < dims_.channels; ++ch)
                y[r++] = x.data[static_cast<std::size_t>(p) * dims_.channels + ch];
        return y;
    }

    ImageGrid vjp(const ImageGrid&, const Measurement& v) const override {
        check_output(v, output_size(), "inpaint vjp");
        ImageGrid out(dims_.height, dims_.width, dims_.channels);
        std::size_t r = 0;
        for (int p : kept_)
            for (int ch = 0; ch < dims_.channels; ++ch)
                out.data[static_cast<std::size_t>(p) * dims_.channels + ch] = v[r++];
        return out;
    }

    ImageGrid measurement_as_image(const Measurement& y) const override {
        return vjp(ImageGrid(), y);  // scatter; zeros at missing pixels
    }

    std::vector<std::pair<std::string, ImageGrid>> debug_grids() const override {
        ImageGrid mask(dims_.height, dims_.width, 1);
        for (int p : kept_) mask.data[static_cast<std::size_t>(p)] = 1.0;
        return {{"mask", mask}};
    }

    const std::vector<int>& kept() const { return kept_; }

private:
    Dims dims_;
    std::vector<int> kept_;
};

class SuperResolutionOp final : public ForwardOperator {
public:
    SuperResolutionOp(const Dims& dims, int factor) : dims_(dims), f_(factor) {
        if (factor < 1) throw ConfigError("super_resolution: factor must be >= 1");
        if (dims.height % factor != 0 || dims.width % factor != 0)
            throw ConfigError("super_resolution: dims not divisible by factor");
    }

    std::string id() const override { return "super_resolution(x" + std::to_string(f_) + ")"; }
    Dims input_dims() const override { return dims_; }
    std::size_t output_size() const override {
        return static_cast<std::size_t>(out_dims().pixel_count());
    }
    bool linear() const override { return true; }

    Dims out_dims() const { return {dims_.height / f_, dims_.width / f_, dims_.channels}; }

    Measurement apply(const ImageGrid& x) const override {
        require_dims(x, dims_, "super_resolution apply");
        const Dims od = out_dims();
        Measurement y(output_size());
        const double inv = 1.0 / (f_ * f_);
        std::size_t r = 0;
        for (int i = 0; i < od.height; ++i)
            for (int j = 0; j < od.width; ++j)
                for (int ch = 0; ch < od.channels; ++ch) {
                    double s = 0.0;
                    for (int a = 0; a < f_; ++a)
                        for (int b = 0; b < f_; ++b)
                            s += x.at(i * f_ + a, j * f_ + b, ch);
                    y[r++] = s * inv;
                }
        return y;
    }

    ImageGrid vjp(const ImageGrid&, const Measurement& v) const override {
        check_output(v, output_size(), "super_resolution vjp");
        const Dims od = out_dims();
        ImageGrid out(dims_.height, dims_.width, dims_.channels);
        const double inv = 1.0 / (f_ * f_);
        std::size_t r = 0;
        for (int i = 0; i < od.height; ++i)
            for (int j = 0; j < od.width; ++j)
                for (int ch = 0; ch < od.channels; ++ch) {
                    const double s = v[r++] * inv;
                    for (int a = 0; a < f_; ++a)
                        for (int b = 0; b < f_; ++b)
                            out.at(i * f_ + a, j * f_ + b, ch) = s;
                }
        return out;
    }

    ImageGrid measurement_as_image(const Measurement& y) const override {
        check_output(y, output_size(), "super_resolution measurement_as_image");
        const Dims od = out_dims();
        ImageGrid out(dims_.height, dims_.width, dims_.channels);
        std::size_t r = 0;
        for (int i = 0; i < od.height; ++i)
            for (int j = 0; j < od.width; ++j)
                for (int ch = 0; ch < od.channels; ++ch) {
                    const double v = y[r++];
                    for (int a = 0; a < f_; ++a)
                        for (int b = 0; b < f_; ++b)
                            out.at(i * f_ + a, j * f_ + b, ch) = v;
                }
        return out;
    }

private:
    Dims dims_;
    int f_;
};

// Periodic separable convolution along one spatial axis.
ImageGrid convolve_axis(const ImageGrid& x, const std::vector<double>& kernel,
                        bool along_height, bool flipped) {
    const int rad = static_cast<int>(kernel.size()) / 2;
    ImageGrid out(x.height, x.width, x.channels);
    for (int i = 0; i < x.height; ++i)
        for (int j = 0; j < x.width; ++j)
            for (int ch = 0; ch < x.channels; ++ch) {
                double s = 0.0;
                for (int k = -rad; k <= rad; ++k) {
                    const double w = flipped ? kernel[static_cast<std::size_t>(rad - k)]
                                             : kernel[static_cast<std::size_t>(rad + k)];
                    int ii = i, jj = j;
                    if (along_height)
                        ii = ((i + k) % x.height + x.height) % x.height;
                    else
                        jj = ((j + k) % x.width + x.width) % x.width;
                    s += w * x.at(ii, jj, ch);
                }
                out.at(i, j, ch) = s;
            }
    return out;
}

class BlurOp final : public ForwardOperator {
public:
    BlurOp(const Dims& dims, std::vector<double> kernel, bool separable_2d,
           std::string name)
        : dims_(dims), kernel_(std::move(kernel)), separable_2d_(separable_2d),
          name_(std::move(name)) {
        if (kernel_.size() % 2 == 0 || kernel_.empty())
            throw ConfigError(name_ + ": kernel size must be odd");
        if (static_cast<int>(kernel_.size()) > std::min(dims.height, dims.width))
            throw ConfigError(name_ + ": kernel larger than image");
    }

    std::string id() const override {
        return name_ + "(size=" + std::to_string(kernel_.size()) + ")";
    }
    Dims input_dims() const override { return dims_; }
    std::size_t output_size() const override {
        return static_cast<std::size_t>(dims_.pixel_count());
    }
    bool linear() const override { return true; }

    Measurement apply(const ImageGrid& x) const override {
        require_dims(x, dims_, "blur apply");
        ImageGrid g = convolve_axis(x, kernel_, false, false);
        if (separable_2d_) g = convolve_axis(g, kernel_, true, false);
        return g.data;
    }

    ImageGrid vjp(const ImageGrid&, const Measurement& v) const override {
        check_output(v, output_size(), "blur vjp");
        ImageGrid g(dims_.height, dims_.width, dims_.channels);
        g.data = v;
        if (separable_2d_) g = convolve_axis(g, kernel_, true, true);
        return convolve_axis(g, kernel_, false, true);
    }

    ImageGrid measurement_as_image(const Measurement& y) const override {
        check_output(y, output_size(), "blur measurement_as_image");
        ImageGrid g(dims_.height, dims_.width, dims_.channels);
        g.data = y;
        return g;
    }

    std::vector<std::pair<std::string, ImageGrid>> debug_grids() const override {
        ImageGrid k(1, static_cast<int>(kernel_.size()), 1);
        k.data = kernel_;
        return {{"kernel", k}};
    }

private:
    Dims dims_;
    std::vector<double> kernel_;
    bool separable_2d_;
    std::string name_;
};

class HdrClipOp final : public ForwardOperator {
public:
    HdrClipOp(const Dims& dims, double gain) : dims_(dims), gain_(gain) {
        if (!(gain > 0.0)) throw ConfigError("hdr_clip: gain must be > 0");
    }

    std::string id() const override { return "hdr_clip(gain=" + std::to_string(gain_) + ")"; }
    Dims input_dims() const override { return dims_; }
    std::size_t output_size() const override {
        return static_cast<std::size_t>(dims_.pixel_count());
    }
    bool linear() const override { return false; }

    Measurement apply(const ImageGrid& x) const override {
        require_dims(x, dims_, "hdr_clip apply");
        Measurement y(x.data.size());
        for (std::size_t k = 0; k < y.size(); ++k)
            y[k] = std::clamp(gain_ * x.data[k], -1.0, 1.0);
        return y;
    }

    Measurement jvp(const ImageGrid& x, const ImageGrid& d) const override {
        require_dims(x, dims_, "hdr_clip jvp");
        require_dims(d, dims_, "hdr_clip jvp direction");
        Measurement y(x.data.size());
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double g = gain_ * x.data[k];
            y[k] = std::abs(g) < 1.0 ? gain_ * d.data[k] : 0.0;
        }
        return y;
    }

    ImageGrid vjp(const ImageGrid& x, const Measurement& v) const override {
        require_dims(x, dims_, "hdr_clip vjp");
        check_output(v, output_size(), "hdr_clip vjp");
        ImageGrid out(dims_.height, dims_.width, dims_.channels);
        for (std::size_t k = 0; k < v.size(); ++k) {
            const double g = gain_ * x.data[k];
            out.data[k] = std::abs(g) < 1.0 ? gain_ * v[k] : 0.0;
        }
        return out;
    }

    ImageGrid measurement_as_image(const Measurement& y) const override {
        check_output(y, output_size(), "hdr_clip measurement_as_image");
        ImageGrid g(dims_.height, dims_.width, dims_.channels);
        g.data = y;
        return g;
    }

private:
    Dims dims_;
    double gain_;
};

std::vector<double> gaussian_kernel(double std_dev, int size) {
    if (!(std_dev > 0.0)) throw ConfigError("gaussian kernel: std must be > 0");
    // truncate at +-4 std if the requested size is wider
    const int max_rad = static_cast<int>(std::ceil(4.0 * std_dev));
    int rad = size / 2;
    if (rad > max_rad) rad = max_rad;
    std::vector<double> k(static_cast<std::size_t>(2 * rad + 1));
    double sum = 0.0;
    for (int i = -rad; i <= rad; ++i) {
        k[static_cast<std::size_t>(i + rad)] = std::exp(-0.5 * i * i / (std_dev * std_dev));
        sum += k[static_cast<std::size_t>(i + rad)];
    }
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace

std::unique_ptr<ForwardOperator> make_inpaint(const Dims& dims, double keep_ratio,
                                              Rng mask_rng) {
    return std::make_unique<InpaintOp>(dims, keep_ratio, mask_rng);
}

std::unique_ptr<ForwardOperator> make_super_resolution(const Dims& dims, int factor) {
    return std::make_unique<SuperResolutionOp>(dims, factor);
}

std::unique_ptr<ForwardOperator> make_gaussian_blur(const Dims& dims, double std_dev,
                                                    int size) {
    return std::make_unique<BlurOp>(dims, gaussian_kernel(std_dev, size), true,
                                    "gaussian_blur");
}

std::unique_ptr<ForwardOperator> make_motion_blur(const Dims& dims, int size,
                                                  double perturb_std, Rng kernel_rng) {
    if (size < 1 || size % 2 == 0) throw ConfigError("motion_blur: size must be odd");
    std::vector<double> k(static_cast<std::size_t>(size));
    const double base = 1.0 / size;
    double sum = 0.0;
    for (double& v : k) {
        v = std::max(0.0, base * (1.0 + perturb_std * kernel_rng.next_normal()));
        sum += v;
    }
    if (sum <= 0.0) throw NumericalError("motion_blur kernel degenerated to zero");
    for (double& v : k) v /= sum;
    return std::make_unique<BlurOp>(dims, std::move(k), false, "motion_blur");
}

std::unique_ptr<ForwardOperator> make_hdr_clip(const Dims& dims, double gain) {
    return std::make_unique<HdrClipOp>(dims, gain);
}

int scaled_kernel_size(int image_side) {
    int size = static_cast<int>(std::lround(61.0 * image_side / 256.0));
    if (size % 2 == 0) ++size;
    return std::max(size, 3);
}

}  // namespace restore
