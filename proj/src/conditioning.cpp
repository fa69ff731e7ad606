#include "motiondiff/conditioning.hpp"

#include "init_util.hpp"
#include "motiondiff/errors.hpp"
#include "motiondiff/npy.hpp"

#include <cctype>
#include <cmath>

namespace motiondiff {

HashTextEmbedder::HashTextEmbedder(int width, std::uint64_t seed, double position_scale)
    : width_(width), seed_(seed), position_scale_(position_scale) {
    if (width < 2) throw ConfigError("text embedding width must be >= 2");
}

std::vector<std::string> HashTextEmbedder::tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '\'') {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

RowVector HashTextEmbedder::token_vector(std::string_view token) const {
    std::uint64_t state = detail::fnv1a(token) ^ (seed_ * 0x9e3779b97f4a7c15ull);
    RowVector v(width_);
    for (int i = 0; i < width_; ++i) v(i) = detail::portable_normal(state);
    return v / v.norm();
}

TextEmbedding HashTextEmbedder::embed(std::string_view text) const {
    const auto tokens = tokenize(text);
    if (tokens.empty()) throw InputError("instruction text has no tokens");
    TextEmbedding out;
    out.tokens.resize(static_cast<Eigen::Index>(tokens.size()), width_);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        out.tokens.row(static_cast<Eigen::Index>(i)) =
            token_vector(tokens[i]) + position_scale_ * detail::sinusoid(static_cast<double>(i), width_);
    out.summary = out.tokens.colwise().mean();
    return out;
}

NpyAudioFeatureProvider::NpyAudioFeatureProvider(std::filesystem::path base_dir, int width, double feature_rate)
    : base_dir_(std::move(base_dir)), width_(width), feature_rate_(feature_rate) {
    if (width < 1 || !(feature_rate > 0)) throw ConfigError("invalid audio provider configuration");
}

Matrix NpyAudioFeatureProvider::features(const std::string& clip_ref) const {
    Matrix m = npy::read(resolve_ref(base_dir_, clip_ref));
    if (m.cols() != width_)
        throw DimensionError("audio features in " + clip_ref + " have width " + std::to_string(m.cols()) +
                             ", expected " + std::to_string(width_));
    if (m.rows() < 1) throw DataError("audio features in " + clip_ref + " are empty");
    return m;
}

Matrix NpyAudioFeatureProvider::silence(double duration_seconds) const {
    const auto rows = std::max<Eigen::Index>(1, std::llround(duration_seconds * feature_rate_));
    return Matrix::Zero(rows, width_);
}

void init_conditioning_params(ParameterSet& params, const DenoiserConfig& cfg, std::mt19937_64& rng) {
    params.add("audio.proj.weight", detail::normal_weight(cfg.d_aud, cfg.d_mot, rng));
    params.add("audio.proj.bias", detail::zeros(1, cfg.d_mot));
    const int bottleneck = cfg.d_txt - 4;
    for (const auto* prefix : {&kEmotionAdapter, &kMotionAdapter}) {
        params.add(*prefix + ".fc1.weight", detail::normal_weight(cfg.d_txt, bottleneck, rng));
        params.add(*prefix + ".fc1.bias", detail::zeros(1, bottleneck));
        params.add(*prefix + ".fc2.weight", detail::normal_weight(bottleneck, cfg.d_txt, rng, 0.5));
        params.add(*prefix + ".fc2.bias", detail::zeros(1, cfg.d_txt));
    }
}

ag::Var adapter_graph(ag::Binder& bind, const std::string& prefix, ag::Var x) {
    ag::Var inner = ag::silu(ag::linear(x, bind(prefix + ".fc1.weight"), bind(prefix + ".fc1.bias")));
    return ag::add(x, ag::linear(inner, bind(prefix + ".fc2.weight"), bind(prefix + ".fc2.bias")));
}

ag::Var instruction_graph(ag::Binder& bind, const TextEmbedding& text, Task task) {
    if (task == Task::emotion_talk)
        return adapter_graph(bind, kEmotionAdapter, bind.tape().constant(text.summary));
    return adapter_graph(bind, kMotionAdapter, bind.tape().constant(text.tokens));
}

InstructionRep encode_instruction(const TextEmbedding& text, Task task, const ParameterSet& params) {
    ag::Tape tape(false);
    ag::Binder bind(tape, params);
    return InstructionRep{task, instruction_graph(bind, text, task).value()};
}

InstructionRep encode_instruction(std::string_view text, Task task, const TextEmbeddingProvider& provider,
                                  const ParameterSet& params) {
    if (text.empty()) throw InputError("instruction text is empty");
    return encode_instruction(provider.embed(text), task, params);
}

Matrix resample_linear(const Matrix& features, Eigen::Index frames) {
    if (frames < 1) throw InputError("frame count must be >= 1");
    const Eigen::Index n = features.rows();
    if (n < 1) throw DataError("cannot resample an empty feature matrix");
    Matrix out(frames, features.cols());
    for (Eigen::Index i = 0; i < frames; ++i) {
        const double pos = static_cast<double>(i) * static_cast<double>(n) / static_cast<double>(frames);
        const auto i0 = std::min<Eigen::Index>(static_cast<Eigen::Index>(std::floor(pos)), n - 1);
        const auto i1 = std::min<Eigen::Index>(i0 + 1, n - 1);
        const double frac = std::clamp(pos - static_cast<double>(i0), 0.0, 1.0);
        out.row(i) = (1.0 - frac) * features.row(i0) + frac * features.row(i1);
    }
    return out;
}

Matrix aligned_audio(const ManifestEntry& entry, const AudioFeatureProvider& provider, Eigen::Index frames,
                     double frame_rate) {
    if (frames < 1) throw InputError("frame count must be >= 1");
    if (entry.task == Task::emotion_talk) {
        if (!entry.audio_path)
            throw ValidationError("entry '" + entry.id + "': field 'audio_path' is required for emotion_talk");
        return resample_linear(provider.features(*entry.audio_path), frames);
    }
    return resample_linear(provider.silence(static_cast<double>(frames) / frame_rate), frames);
}

ag::Var audio_projection_graph(ag::Binder& bind, const Matrix& aligned) {
    return ag::linear(bind.tape().constant(aligned), bind("audio.proj.weight"), bind("audio.proj.bias"));
}

Matrix project_audio(const Matrix& aligned, const ParameterSet& params) {
    ag::Tape tape(false);
    ag::Binder bind(tape, params);
    return audio_projection_graph(bind, aligned).value();
}

Matrix audio_features(const ManifestEntry& entry, const AudioFeatureProvider& provider, Eigen::Index frames,
                      const ParameterSet& params, double frame_rate) {
    return project_audio(aligned_audio(entry, provider, frames, frame_rate), params);
}

}  // namespace motiondiff
