#pragma once

#include "motiondiff/autograd.hpp"
#include "motiondiff/conditioning.hpp"
#include "motiondiff/core.hpp"
#include "motiondiff/diffusion.hpp"
#include "motiondiff/model_config.hpp"
#include "motiondiff/params.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace motiondiff {

struct PredictionBundle {
    MotionSequence m0_hat;
    RowVector au_logits;         // [1 x 41]
    RowVector intensity_logits;  // [1 x 3]
    PoseSequence pose_hat;
};

// Graph-level outputs of one denoiser pass.
struct PredictionVars {
    ag::Var m0_hat;
    ag::Var au_logits;
    ag::Var intensity_logits;
    ag::Var pose_hat;
};

// Parameter-name prefixes of the two text branches in block `block`.
std::string emotion_branch_prefix(int block);
std::string motion_branch_prefix(int block);
std::string gate_prefix(int block, Task branch);

// Full parameter set: conditioning (audio projection, adapters) plus the
// denoiser. Gate weights and biases start at exactly zero; everything else
// is drawn from a generator seeded with `seed`.
ParameterSet init_params(const DenoiserConfig& config, std::uint64_t seed);

bool is_gate_param(const std::string& name);

// h + Z(CrossAttn(LN(h), rep)) where Z is the zero-initialised convolution
// that slides along the hidden dimension. `attn_prefix`/`gate_prefix` name
// the parameters of one branch in one block.
ag::Var gated_text_attention(ag::Binder& bind, const std::string& attn_prefix, const std::string& gate_prefix,
                             ag::Var h, ag::Var rep, int heads);

Matrix gated_text_attention(const Matrix& h, const InstructionRep& rep, const ParameterSet& params,
                            const DenoiserConfig& config, int block);

// One denoiser pass on the tape. With rep == nullopt both text branches are
// skipped (the text-free network). Throws RoutingError if rep_branch != task.
PredictionVars denoise_graph(ag::Binder& bind, const DenoiserConfig& config, ag::Var m_t_a, int t,
                             std::optional<ag::Var> rep, Task rep_branch, ag::Var keyframe, Task task);

// Value-level wrapper. m_t_a must already contain the audio addition.
PredictionBundle denoise(const MotionSequence& m_t_a, int t, const std::optional<InstructionRep>& rep,
                         const MotionSequence& keyframe, Task task, const ParameterSet& params,
                         const DenoiserConfig& config);

// Conditioning, parameters and schedule needed to generate motion.
struct MotionModel {
    DenoiserConfig config;
    ParameterSet params;
    NoiseSchedule schedule;
    std::uint64_t text_seed = 0x5eed;
};

// DDIM generation: audio features in the bundle are added to every noisy
// latent before each denoiser call.
MotionSequence generate(const MotionModel& model, const ConditioningBundle& cond, Eigen::Index frames,
                        int steps, std::uint64_t seed);

// Checkpoint layout: "MDCKPT1\n", an 8-byte little-endian header length, a
// JSON header {config, meta, params:[{name, rows, cols}]}, then every
// parameter as row-major little-endian float64 in header order.
struct Checkpoint {
    DenoiserConfig config;
    std::map<std::string, std::string> meta;
    ParameterSet params;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace motiondiff
