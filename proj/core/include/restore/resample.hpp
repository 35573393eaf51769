#pragma once

#include "restore/image.hpp"

namespace restore {

// Orthonormal resolution changes. Upsampling by factor f replicates each
// source value over an f x f block scaled by 1/f, so the columns of the
// implied matrix are orthonormal with disjoint support: downsample(upsample(x))
// recovers x exactly and the Euclidean norm is preserved. Downsampling is the
// exact adjoint (block sum divided by f). Channels never mix.

ImageGrid upsample(const ImageGrid& x, int factor);

/// Requires height and width divisible by factor.
ImageGrid downsample(const ImageGrid& x, int factor);

/// Composition of factor-2 upsamples realizing the map between two plan
/// stages; identity when the dims match.
ImageGrid cross_upsample(const ImageGrid& x, const Dims& from_dims, const Dims& to_dims);

/// Repeated factor-2 downsampling until the grid reaches `to_dims`.
ImageGrid cross_downsample(const ImageGrid& x, const Dims& to_dims);

}  // namespace restore
