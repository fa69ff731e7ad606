#pragma once

#include "motiondiff/autograd.hpp"
#include "motiondiff/core.hpp"
#include "motiondiff/manifest.hpp"
#include "motiondiff/model_config.hpp"
#include "motiondiff/params.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace motiondiff {

struct TextEmbedding {
    RowVector summary;  // [1 x d_txt]
    Matrix tokens;      // [n_tokens x d_txt]
};

class TextEmbeddingProvider {
public:
    virtual ~TextEmbeddingProvider() = default;
    virtual TextEmbedding embed(std::string_view text) const = 0;
    virtual int width() const = 0;
};

// Deterministic stand-in for a frozen text encoder. Each token maps to a
// unit vector drawn from a generator seeded by (seed, token hash); a
// sinusoidal position code is added per token so order matters to the
// token matrix. The summary vector is the mean of the token rows.
class HashTextEmbedder final : public TextEmbeddingProvider {
public:
    explicit HashTextEmbedder(int width, std::uint64_t seed = 0x5eed, double position_scale = 0.3);

    TextEmbedding embed(std::string_view text) const override;
    int width() const override { return width_; }

    static std::vector<std::string> tokenize(std::string_view text);
    RowVector token_vector(std::string_view token) const;

private:
    int width_;
    std::uint64_t seed_;
    double position_scale_;
};

class AudioFeatureProvider {
public:
    virtual ~AudioFeatureProvider() = default;
    virtual Matrix features(const std::string& clip_ref) const = 0;
    // Features of zero-amplitude audio lasting `duration_seconds`.
    virtual Matrix silence(double duration_seconds) const = 0;
    virtual int width() const = 0;
};

// Reads pre-extracted feature matrices stored as .npy files. Silence maps
// to all-zero features at the provider's frame rate.
class NpyAudioFeatureProvider final : public AudioFeatureProvider {
public:
    NpyAudioFeatureProvider(std::filesystem::path base_dir, int width, double feature_rate = 50.0);

    Matrix features(const std::string& clip_ref) const override;
    Matrix silence(double duration_seconds) const override;
    int width() const override { return width_; }
    double feature_rate() const { return feature_rate_; }

private:
    std::filesystem::path base_dir_;
    int width_;
    double feature_rate_;
};

// Adapted instruction representation routed to one cross-attention branch.
struct InstructionRep {
    Task branch = Task::emotion_talk;
    Matrix vectors;  // [k x d_txt]; k == 1 for emotion_talk
};

// Frame-aligned inputs for one generation.
struct ConditioningBundle {
    Matrix audio;            // projected audio features [l x d_mot]
    InstructionRep rep;
    MotionSequence keyframe; // [1 x d_mot]
    Task task = Task::emotion_talk;
};

// Adds audio projection and both adapters to `params`.
void init_conditioning_params(ParameterSet& params, const DenoiserConfig& cfg, std::mt19937_64& rng);

inline const std::string kEmotionAdapter = "adapter.emotion";
inline const std::string kMotionAdapter = "adapter.motion";

// Two-layer bottleneck MLP with a skip connection: x + fc2(silu(fc1(x))).
ag::Var adapter_graph(ag::Binder& bind, const std::string& prefix, ag::Var x);

// Emotion instructions use the summary vector through the emotion adapter;
// motion instructions use every token row through the motion adapter.
ag::Var instruction_graph(ag::Binder& bind, const TextEmbedding& text, Task task);

InstructionRep encode_instruction(std::string_view text, Task task, const TextEmbeddingProvider& provider,
                                  const ParameterSet& params);
InstructionRep encode_instruction(const TextEmbedding& text, Task task, const ParameterSet& params);

// Linear time interpolation to `frames` rows: output row i samples the
// input at position i * n / frames.
Matrix resample_linear(const Matrix& features, Eigen::Index frames);

// Provider features (or silence for motion_control) resampled to `frames`,
// before the learned projection.
Matrix aligned_audio(const ManifestEntry& entry, const AudioFeatureProvider& provider, Eigen::Index frames,
                     double frame_rate = kDefaultFrameRate);

ag::Var audio_projection_graph(ag::Binder& bind, const Matrix& aligned);

// Resampled and projected to [frames x d_mot].
Matrix audio_features(const ManifestEntry& entry, const AudioFeatureProvider& provider, Eigen::Index frames,
                      const ParameterSet& params, double frame_rate = kDefaultFrameRate);
Matrix project_audio(const Matrix& aligned, const ParameterSet& params);

}  // namespace motiondiff
