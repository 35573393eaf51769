#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "restore/image.hpp"
#include "restore/rng.hpp"

namespace restore {

using Measurement = std::vector<double>;

/// Degraded observation y = A(x*) + nu with nu ~ N(0, sigma^2 I_m).
struct Observation {
    Measurement y;
    double noise_sigma = 0.0;
    std::string operator_id;
};

/// Forward measurement map A: R^d -> R^m with the derivative machinery the
/// samplers need. Linear kinds implement the exact adjoint; nonlinear kinds
/// expose the Jacobian transpose at a point (vjp) instead.
class ForwardOperator {
public:
    virtual ~ForwardOperator() = default;

    virtual std::string id() const = 0;
    virtual Dims input_dims() const = 0;
    virtual std::size_t output_size() const = 0;
    virtual bool linear() const = 0;

    virtual Measurement apply(const ImageGrid& x) const = 0;

    /// Directional derivative of A at x along d. Linear kinds return apply(d).
    virtual Measurement jvp(const ImageGrid& x, const ImageGrid& d) const;

    /// Jacobian-transpose at x applied to v. Linear kinds ignore x.
    virtual ImageGrid vjp(const ImageGrid& x, const Measurement& v) const = 0;

    /// Exact adjoint; only meaningful for linear kinds (throws otherwise).
    virtual ImageGrid adjoint(const Measurement& v) const;

    /// Embed a measurement back into image coordinates for inspection and
    /// baseline metrics: inpainting scatters (zeros off the mask),
    /// super-resolution replicates values over blocks, image-shaped
    /// measurements reshape directly.
    virtual ImageGrid measurement_as_image(const Measurement& y) const = 0;

    /// Named internal grids (masks, kernels) worth exporting for inspection.
    virtual std::vector<std::pair<std::string, ImageGrid>> debug_grids() const {
        return {};
    }
};

Observation degrade(const ForwardOperator& op, const ImageGrid& x, double sigma,
                    Rng& rng);

// --- constructors for the task operators ---

/// Keeps ceil(keep_ratio * H * W) pixel positions (mask shared across
/// channels), chosen uniformly without replacement from the given stream.
std::unique_ptr<ForwardOperator> make_inpaint(const Dims& dims, double keep_ratio,
                                              Rng mask_rng);

/// Block-mean decimation by an integer factor.
std::unique_ptr<ForwardOperator> make_super_resolution(const Dims& dims, int factor);

/// Separable periodic Gaussian blur; kernel truncated at +-4 std and
/// renormalized. size must be odd.
std::unique_ptr<ForwardOperator> make_gaussian_blur(const Dims& dims, double std_dev,
                                                    int size);

/// Horizontal 1-D blur kernel of odd length `size`: uniform weights with a
/// seeded Gaussian perturbation of relative scale `perturb_std`, clamped
/// non-negative and renormalized. Periodic boundary.
std::unique_ptr<ForwardOperator> make_motion_blur(const Dims& dims, int size,
                                                  double perturb_std, Rng kernel_rng);

/// y = clip(gain * x, [-1, 1]); the Jacobian uses subgradient value 0 at the
/// clip kinks.
std::unique_ptr<ForwardOperator> make_hdr_clip(const Dims& dims, double gain);

/// Kernel-size rule for the blur tasks: scales the reference length 61 (for a
/// 256-wide image) proportionally to the image side, rounded to odd, at least 3.
int scaled_kernel_size(int image_side);

}  // namespace restore
