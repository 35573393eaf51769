#include "restore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "restore/errors.hpp"

namespace restore {

double mse(const ImageGrid& x, const ImageGrid& ref) {
    if (!x.same_dims(ref)) throw ConfigError("mse: dims differ");
    double s = 0.0;
    for (std::size_t k = 0; k < x.data.size(); ++k) {
        const double d = x.data[k] - ref.data[k];
        s += d * d;
    }
    return s / static_cast<double>(x.data.size());
}

double psnr(const ImageGrid& x, const ImageGrid& ref, double peak) {
    if (!(peak > 0.0)) throw ConfigError("psnr: peak must be > 0");
    const double e = mse(x, ref);
    constexpr double sentinel = 300.0;
    if (e == 0.0) return sentinel;
    return std::min(10.0 * std::log10(peak * peak / e), sentinel);
}

namespace {

constexpr int kWindow = 11;

const std::vector<double>& ssim_window() {
    static const std::vector<double> w = [] {
        std::vector<double> v(kWindow);
        const double std_dev = 1.5;
        const int rad = kWindow / 2;
        double sum = 0.0;
        for (int i = -rad; i <= rad; ++i) {
            v[static_cast<std::size_t>(i + rad)] =
                std::exp(-0.5 * i * i / (std_dev * std_dev));
            sum += v[static_cast<std::size_t>(i + rad)];
        }
        for (double& e : v) e /= sum;
        return v;
    }();
    return w;
}

}  // namespace

double ssim(const ImageGrid& x, const ImageGrid& ref, double peak) {
    if (!x.same_dims(ref)) throw ConfigError("ssim: dims differ");
    if (x.height < kWindow || x.width < kWindow)
        throw ConfigError("ssim: image smaller than the 11x11 window");
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const auto& w = ssim_window();
    const int rad = kWindow / 2;

    double total = 0.0;
    long long count = 0;
    for (int ch = 0; ch < x.channels; ++ch) {
        for (int i = rad; i < x.height - rad; ++i) {
            for (int j = rad; j < x.width - rad; ++j) {
                double mx = 0.0, my = 0.0, mxx = 0.0, myy = 0.0, mxy = 0.0;
                for (int a = -rad; a <= rad; ++a) {
                    for (int b = -rad; b <= rad; ++b) {
                        const double ww = w[static_cast<std::size_t>(a + rad)] *
                                          w[static_cast<std::size_t>(b + rad)];
                        const double u = x.at(i + a, j + b, ch);
                        const double v = ref.at(i + a, j + b, ch);
                        mx += ww * u;
                        my += ww * v;
                        mxx += ww * u * u;
                        myy += ww * v * v;
                        mxy += ww * u * v;
                    }
                }
                const double vx = mxx - mx * mx;
                const double vy = myy - my * my;
                const double cxy = mxy - mx * my;
                total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
                         ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
        }
    }
    return total / static_cast<double>(count);
}

long long pixel_step_ledger(const ResolutionPlan& plan, const TimeGrid& grid) {
    long long total = 0;
    for (int i = 1; i <= grid.step_count(); ++i) total += plan.at(i).pixel_count();
    return total;
}

}  // namespace restore
