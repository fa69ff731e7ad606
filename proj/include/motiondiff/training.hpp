#pragma once

#include "motiondiff/autograd.hpp"
#include "motiondiff/conditioning.hpp"
#include "motiondiff/core.hpp"
#include "motiondiff/denoiser.hpp"
#include "motiondiff/diffusion.hpp"
#include "motiondiff/manifest.hpp"
#include "motiondiff/params.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace motiondiff {

struct LossWeights {
    double lambda_pose = 1.0;
    double lambda_au = 0.1;
    double lambda_inten = 0.1;

    void validate() const;
};

struct LossBreakdown {
    double mse = 0.0;
    double pose = 0.0;
    double au = 0.0;
    double inten = 0.0;
    double total = 0.0;
};

double combine_losses(double mse, double pose, double au, double inten, const LossWeights& w);

// mse and pose are mean squared errors, au the mean binary cross-entropy of
// the logits, inten the negative log-probability of the true level. Without
// AU or intensity targets (motion_control clips) those terms are 0.
LossBreakdown compute_losses(const PredictionBundle& pred, const MotionSequence& target_m0,
                             const PoseSequence& target_pose, const std::optional<AUVector>& target_au,
                             const std::optional<Intensity>& target_inten, const LossWeights& w);

struct OptimizerConfig {
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-8;
    double peak_lr = 1e-5;
    int warmup_steps = 8000;
    double clip_norm = 1.0;  // <= 0 disables clipping

    void validate() const;
};

// Linear warmup to peak_lr, then peak_lr * sqrt(warmup / step).
double lr_at(int step, const OptimizerConfig& cfg = {});

// Loads and caches the motion, pose and raw audio arrays of manifest
// entries. Safe for concurrent readers.
class ClipStore {
public:
    ClipStore(std::filesystem::path base_dir, std::shared_ptr<const AudioFeatureProvider> audio,
              double frame_rate = kDefaultFrameRate);

    const MotionSequence& motion(const ManifestEntry& entry) const;
    const PoseSequence& pose(const ManifestEntry& entry) const;
    // Provider features (silence for motion_control) resampled to the clip length.
    const Matrix& aligned_audio(const ManifestEntry& entry) const;

    const std::filesystem::path& base_dir() const { return base_dir_; }
    const AudioFeatureProvider& audio_provider() const { return *audio_; }

private:
    std::filesystem::path base_dir_;
    std::shared_ptr<const AudioFeatureProvider> audio_;
    double frame_rate_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, std::unique_ptr<MotionSequence>> motion_;
    mutable std::unordered_map<std::string, std::unique_ptr<PoseSequence>> pose_;
    mutable std::unordered_map<std::string, std::unique_ptr<Matrix>> audio_cache_;
};

struct KeyframeChoice {
    std::string donor_id;
    Eigen::Index frame = 0;
    MotionSequence keyframe;  // [1 x d_mot]
};

// emotion_talk: a uniform frame of a uniform same-person clip whose emotion
// differs from the entry's. motion_control: a uniform frame of the entry's
// own clip. Throws DataError naming the person when no donor exists.
KeyframeChoice select_keyframe(const ManifestEntry& entry, std::span<const ManifestEntry> manifest,
                               const ClipStore& clips, std::mt19937_64& rng);

// Donor candidates only, no file access.
std::vector<const ManifestEntry*> keyframe_donors(const ManifestEntry& entry, std::span<const ManifestEntry> manifest);

struct AdamState {
    std::map<std::string, Matrix> m;
    std::map<std::string, Matrix> v;
    int step = 0;
};

struct TrainState {
    ParameterSet params;
    AdamState adam;
};

// Everything a step needs besides the parameters.
struct TrainContext {
    DenoiserConfig config;
    NoiseSchedule schedule;
    LossWeights weights;
    OptimizerConfig optimizer;
    std::span<const ManifestEntry> manifest;
    const ClipStore* clips = nullptr;
    const TextEmbeddingProvider* text = nullptr;
};

struct StepReport {
    LossBreakdown loss;  // batch mean
    double lr = 0.0;
    double grad_norm = 0.0;  // before clipping
    std::vector<int> timesteps;
};

// One Adam step on a batch. Timesteps are uniform over [0, T), noise is
// drawn from `rng`, and the instruction adapters and audio projection are
// trained through the same tape. Throws NumericalError listing batch ids
// and timesteps on a non-finite loss.
StepReport train_step(TrainState& state, const TrainContext& ctx, std::span<const ManifestEntry* const> batch,
                      std::mt19937_64& rng);

// Batch-mean loss and gradients without an update. `timesteps`, when given,
// fixes t per item.
struct LossAndGrad {
    LossBreakdown loss;
    std::map<std::string, Matrix> grads;
    std::vector<int> timesteps;
};
LossAndGrad loss_and_gradients(const ParameterSet& params, const TrainContext& ctx,
                               std::span<const ManifestEntry* const> batch, std::mt19937_64& rng,
                               const std::vector<int>* timesteps = nullptr);

// Applies one clipped Adam update from precomputed gradients; returns the
// pre-clip global norm.
double adam_update(TrainState& state, const std::map<std::string, Matrix>& grads, const OptimizerConfig& cfg,
                   double lr);

// Mean loss over `entries` with `draws` timesteps each from a generator
// seeded with `seed`; used to track overfitting.
LossBreakdown evaluate_loss(const ParameterSet& params, const TrainContext& ctx,
                            std::span<const ManifestEntry> entries, std::uint64_t seed, int draws = 4);

struct TrainOptions {
    int steps = 1000;
    int batch_size = 8;
    std::uint64_t seed = 0;
    int log_every = 10;
    int checkpoint_every = 0;            // 0: only the final checkpoint
    std::filesystem::path out_dir;       // empty: nothing written
};

// CSV columns of the metrics log.
inline constexpr const char* kMetricsHeader = "step,lr,mse,pose,au,inten,total,grad_norm";

struct TrainResult {
    TrainState state;
    LossBreakdown last;
};

// Runs `options.steps` steps from `init`. With an output directory the
// metrics log goes to metrics.csv and checkpoints to checkpoint.bin
// (plus checkpoint_<step>.bin at the requested interval).
TrainResult train(const ParameterSet& init, const TrainContext& ctx, const TrainOptions& options,
                  const std::map<std::string, std::string>& meta = {},
                  const std::function<void(int, const StepReport&)>& on_step = {});

}  // namespace motiondiff
