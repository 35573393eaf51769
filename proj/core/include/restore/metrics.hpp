#pragma once

#include "restore/image.hpp"
#include "restore/schedule.hpp"

namespace restore {

/// Distortion report for one reconstruction. runtime_ms is wall clock and is
/// excluded from reproducibility guarantees; pixel_steps is the deterministic
/// cost proxy (total pixels fed through the predictor).
struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double mse = 0.0;
    double runtime_ms = 0.0;
    long long pixel_steps = 0;
};

double mse(const ImageGrid& x, const ImageGrid& ref);

/// 10 log10(peak^2 / mse), capped at the 300 dB sentinel; identical grids
/// (mse = 0) report exactly the sentinel.
double psnr(const ImageGrid& x, const ImageGrid& ref, double peak = 2.0);

/// Mean windowed SSIM: 11x11 Gaussian window (std 1.5), valid positions only,
/// C1 = (0.01 peak)^2, C2 = (0.03 peak)^2, computed per channel and averaged.
/// Requires both spatial dims >= 11.
double ssim(const ImageGrid& x, const ImageGrid& ref, double peak = 2.0);

/// Total pixels processed by predictor calls over a run at one invocation per
/// outer step: sum over i = 1..N of the pixel count at stage dims d_i.
long long pixel_step_ledger(const ResolutionPlan& plan, const TimeGrid& grid);

}  // namespace restore
