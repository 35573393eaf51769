#include "restore/resample.hpp"

#include "restore/errors.hpp"

namespace restore {

ImageGrid upsample(const ImageGrid& x, int factor) {
    if (factor < 1) throw ConfigError("upsample: factor must be >= 1");
    if (factor == 1) return x;
    ImageGrid out(x.height * factor, x.width * factor, x.channels);
    const double scale = 1.0 / factor;
    for (int i = 0; i < x.height; ++i)
        for (int j = 0; j < x.width; ++j)
            for (int ch = 0; ch < x.channels; ++ch) {
                const double v = x.at(i, j, ch) * scale;
                for (int a = 0; a < factor; ++a)
                    for (int b = 0; b < factor; ++b)
                        out.at(i * factor + a, j * factor + b, ch) = v;
            }
    return out;
}

ImageGrid downsample(const ImageGrid& x, int factor) {
    if (factor < 1) throw ConfigError("downsample: factor must be >= 1");
    if (factor == 1) return x;
    if (x.height % factor != 0 || x.width % factor != 0)
        throw ConfigError("downsample: dims " + x.dims_str() +
                          " not divisible by factor " + std::to_string(factor));
    ImageGrid out(x.height / factor, x.width / factor, x.channels);
    const double scale = 1.0 / factor;
    for (int i = 0; i < out.height; ++i)
        for (int j = 0; j < out.width; ++j)
            for (int ch = 0; ch < out.channels; ++ch) {
                double s = 0.0;
                for (int a = 0; a < factor; ++a)
                    for (int b = 0; b < factor; ++b)
                        s += x.at(i * factor + a, j * factor + b, ch);
                out.at(i, j, ch) = s * scale;
            }
    return out;
}

ImageGrid cross_upsample(const ImageGrid& x, const Dims& from_dims, const Dims& to_dims) {
    require_dims(x, from_dims, "cross_upsample");
    if (from_dims == to_dims) return x;
    if (to_dims.channels != from_dims.channels ||
        to_dims.height % from_dims.height != 0 ||
        to_dims.width % from_dims.width != 0 ||
        to_dims.height / from_dims.height != to_dims.width / from_dims.width)
        throw ConfigError("cross_upsample: incompatible dims");
    ImageGrid cur = x;
    while (cur.height < to_dims.height) cur = upsample(cur, 2);
    if (dims_of(cur) != to_dims) throw ConfigError("cross_upsample: non power-of-two ratio");
    return cur;
}

ImageGrid cross_downsample(const ImageGrid& x, const Dims& to_dims) {
    if (dims_of(x) == to_dims) return x;
    ImageGrid cur = x;
    while (cur.height > to_dims.height) cur = downsample(cur, 2);
    if (dims_of(cur) != to_dims) throw ConfigError("cross_downsample: incompatible dims");
    return cur;
}

}  // namespace restore
