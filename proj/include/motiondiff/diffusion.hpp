#pragma once

#include "motiondiff/core.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace motiondiff {

// Discrete noise schedule. Timesteps are 0-based: alpha_bar[t] is the
// cumulative product of alpha[0..t]. Index -1 denotes clean data.
struct NoiseSchedule {
    int T = 0;
    double beta_min = 0.0;
    double beta_max = 0.0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    double alpha_bar_at(int t) const { return t < 0 ? 1.0 : alpha_bar.at(static_cast<std::size_t>(t)); }
};

inline constexpr double kBetaFloor = 1e-6;
inline constexpr double kBetaCeil = 0.999;

// Quadratic schedule between continuous-time rates beta_min and beta_max:
// beta_i = clamp(((1-s)*sqrt(beta_min) + s*sqrt(beta_max))^2 / T), s = i/(T-1).
NoiseSchedule build_schedule(int T, double beta_min = 0.05, double beta_max = 20.0);

// x_t = sqrt(alpha_bar_t) * x0 + sqrt(1 - alpha_bar_t) * noise
MotionSequence forward_sample(const MotionSequence& x0, int t, const MotionSequence& noise,
                              const NoiseSchedule& sched);

// Deterministic (eta = 0) DDIM update from t to t_prev under x0-parameterization.
MotionSequence ddim_step(const MotionSequence& x_t, const MotionSequence& x0_hat, int t, int t_prev,
                         const NoiseSchedule& sched);

// Evenly spaced timesteps in descending order, starting at T-1 and ending at 0.
std::vector<int> ddim_timesteps(int T, int steps);

// Predicts x0 from a noisy sequence at timestep t; conditioning is bound by the caller.
using X0Predictor = std::function<MotionSequence(const MotionSequence& x_t, int t)>;

// Draws x_T ~ N(0, I) from `seed` and runs `steps` DDIM updates to the data
// endpoint. Throws DimensionError if the predictor changes the shape.
MotionSequence sample(const X0Predictor& predict_x0, Eigen::Index frames, Eigen::Index dims, int steps,
                      std::uint64_t seed, const NoiseSchedule& sched,
                      double frame_rate = kDefaultFrameRate);

Matrix standard_normal(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

}  // namespace motiondiff
