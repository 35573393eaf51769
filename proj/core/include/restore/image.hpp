#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "restore/errors.hpp"

namespace restore {

/// Dense H x W x C grid of real values, row-major with interleaved channels:
/// index(i, j, ch) = (i * width + j) * channels + ch.
struct ImageGrid {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<double> data;

    ImageGrid() = default;
    ImageGrid(int h, int w, int c, double fill = 0.0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    std::size_t size() const { return data.size(); }
    bool same_dims(const ImageGrid& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
    std::string dims_str() const {
        return std::to_string(height) + "x" + std::to_string(width) + "x" +
               std::to_string(channels);
    }

    double& at(int i, int j, int ch) {
        return data[(static_cast<std::size_t>(i) * width + j) * channels + ch];
    }
    double at(int i, int j, int ch) const {
        return data[(static_cast<std::size_t>(i) * width + j) * channels + ch];
    }
};

struct Dims {
    int height = 0;
    int width = 0;
    int channels = 0;
    friend bool operator==(const Dims&, const Dims&) = default;
    long long pixel_count() const {
        return static_cast<long long>(height) * width * channels;
    }
};

inline Dims dims_of(const ImageGrid& g) { return {g.height, g.width, g.channels}; }

inline void require_dims(const ImageGrid& g, const Dims& d, const char* who) {
    if (dims_of(g) != d) {
        throw ConfigError(std::string(who) + ": expected " +
                          std::to_string(d.height) + "x" + std::to_string(d.width) +
                          "x" + std::to_string(d.channels) + ", got " + g.dims_str());
    }
}

// Elementwise helpers used throughout the samplers; plain sequential loops so
// results are reproducible bit-for-bit across runs.
inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

inline double dot(const ImageGrid& a, const ImageGrid& b) { return dot(a.data, b.data); }

inline double squared_norm(const ImageGrid& a) { return dot(a.data, a.data); }
inline double norm(const ImageGrid& a) { return std::sqrt(squared_norm(a)); }

inline bool all_finite(const ImageGrid& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace restore
