#include "motiondiff/diffusion.hpp"

#include "motiondiff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace motiondiff {

NoiseSchedule build_schedule(int T, double beta_min, double beta_max) {
    if (T < 2) throw ConfigError("schedule needs T >= 2, got " + std::to_string(T));
    if (!(beta_min > 0.0) || !(beta_max >= beta_min))
        throw ConfigError("schedule needs 0 < beta_min <= beta_max");

    NoiseSchedule s;
    s.T = T;
    s.beta_min = beta_min;
    s.beta_max = beta_max;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);

    const double lo = std::sqrt(beta_min);
    const double hi = std::sqrt(beta_max);
    double prod = 1.0;
    for (int i = 0; i < T; ++i) {
        const double frac = static_cast<double>(i) / (T - 1);
        const double root = (1.0 - frac) * lo + frac * hi;
        s.beta[i] = std::clamp(root * root / T, kBetaFloor, kBetaCeil);
        s.alpha[i] = 1.0 - s.beta[i];
        prod *= s.alpha[i];
        s.alpha_bar[i] = prod;
    }
    return s;
}

MotionSequence forward_sample(const MotionSequence& x0, int t, const MotionSequence& noise,
                              const NoiseSchedule& sched) {
    if (t < 0 || t >= sched.T) throw InputError("timestep " + std::to_string(t) + " outside [0, T)");
    if (x0.frames() != noise.frames() || x0.dims() != noise.dims())
        throw DimensionError("noise shape does not match x0 shape");
    const double ab = sched.alpha_bar[t];
    return MotionSequence(std::sqrt(ab) * x0.data() + std::sqrt(1.0 - ab) * noise.data(), x0.frame_rate());
}

MotionSequence ddim_step(const MotionSequence& x_t, const MotionSequence& x0_hat, int t, int t_prev,
                         const NoiseSchedule& sched) {
    if (t_prev >= t)
        throw OrderingError("ddim step needs t > t_prev, got t=" + std::to_string(t) +
                            " t_prev=" + std::to_string(t_prev));
    if (t_prev < -1 || t >= sched.T) throw InputError("ddim timestep out of range");
    if (x_t.frames() != x0_hat.frames() || x_t.dims() != x0_hat.dims())
        throw DimensionError("x0 prediction shape does not match x_t shape");

    const double ab_t = sched.alpha_bar_at(t);
    const double ab_prev = sched.alpha_bar_at(t_prev);
    if (t_prev == -1) return x0_hat;

    const Matrix eps = (x_t.data() - std::sqrt(ab_t) * x0_hat.data()) / std::sqrt(1.0 - ab_t);
    return MotionSequence(std::sqrt(ab_prev) * x0_hat.data() + std::sqrt(1.0 - ab_prev) * eps,
                          x_t.frame_rate());
}

std::vector<int> ddim_timesteps(int T, int steps) {
    if (steps < 1 || steps > T)
        throw ConfigError("sampling steps must lie in [1, T], got " + std::to_string(steps));
    std::vector<int> ts(steps);
    if (steps == 1) {
        ts[0] = T - 1;
        return ts;
    }
    for (int i = 0; i < steps; ++i) {
        const long long idx = static_cast<long long>(i) * (T - 1) / (steps - 1);
        ts[steps - 1 - i] = static_cast<int>(idx);
    }
    return ts;
}

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = normal(rng);
    return m;
}

MotionSequence sample(const X0Predictor& predict_x0, Eigen::Index frames, Eigen::Index dims, int steps,
                      std::uint64_t seed, const NoiseSchedule& sched, double frame_rate) {
    if (frames < 1 || dims < 1) throw DimensionError("sample needs a positive shape");
    const auto ts = ddim_timesteps(sched.T, steps);

    MotionSequence x(standard_normal(frames, dims, seed), frame_rate);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const int t = ts[i];
        const int t_prev = i + 1 < ts.size() ? ts[i + 1] : -1;
        MotionSequence x0_hat = predict_x0(x, t);
        if (x0_hat.frames() != frames || x0_hat.dims() != dims)
            throw DimensionError("denoiser returned shape " + std::to_string(x0_hat.frames()) + "x" +
                                 std::to_string(x0_hat.dims()) + ", expected " +
                                 std::to_string(frames) + "x" + std::to_string(dims));
        x = ddim_step(x, x0_hat, t, t_prev, sched);
    }
    return x;
}

}  // namespace motiondiff
