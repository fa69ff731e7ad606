#pragma once

#include "motiondiff/core.hpp"
#include "motiondiff/instructions.hpp"
#include "motiondiff/manifest.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace motiondiff {

// Linear invertible stand-in for the video decoder: frames = M * mix^T + appearance.
class LinearCodec {
public:
    LinearCodec() = default;
    explicit LinearCodec(Matrix mix);

    // Well-conditioned random mix of size d x d.
    static LinearCodec random(int d, std::uint64_t seed);

    Matrix decode(const MotionSequence& motion, const AppearanceLatent& appearance) const;
    MotionSequence encode(const Matrix& frames, const AppearanceLatent& appearance,
                          double frame_rate = kDefaultFrameRate) const;

    const Matrix& mix() const { return mix_; }
    Eigen::Index width() const { return mix_.rows(); }

    void save(const std::filesystem::path& path) const;
    static LinearCodec load(const std::filesystem::path& path);

private:
    Matrix mix_;
    Matrix inverse_t_;
};

// Nearest-centroid classifier on the temporal mean latent, built from the
// clean clips at construction time. Each class maps to a fixed AU vector.
class OracleClassifier {
public:
    void add_class(Emotion emotion, RowVector centroid, AUVector au);

    Emotion classify(const MotionSequence& motion) const;
    AUVector predict_au(const MotionSequence& motion) const;

    const std::map<Emotion, RowVector>& centroids() const { return centroids_; }
    const std::map<Emotion, AUVector>& aus() const { return aus_; }

    void save(const std::filesystem::path& path) const;
    static OracleClassifier load(const std::filesystem::path& path);

private:
    std::map<Emotion, RowVector> centroids_;
    std::map<Emotion, AUVector> aus_;
};

struct SynthOptions {
    std::vector<Emotion> emotions = {Emotion::angry, Emotion::happy, Emotion::sad, Emotion::surprised};
    int clips_per_emotion = 50;
    int heldout_per_emotion = 40;
    int motion_clips_per_kind = 0;
    int n_persons = 4;
    int frames = 16;
    int d_mot = 16;
    int d_aud = 8;
    int d_pose = 6;
    double audio_rate = 50.0;
    double frame_rate = kDefaultFrameRate;
    std::uint64_t seed = 0;
    int heldout_template_stride = 5;  // every stride-th template is held out

    double emotion_scale = 3.0;
    double person_scale = 0.5;
    double audio_scale = 0.3;
    double noise_scale = 0.1;
    double motion_scale = 2.0;

    void validate() const;
};

// Intensity level l scales the emotion offset by these factors.
inline constexpr double kIntensityScale[3] = {0.6, 1.0, 1.4};

struct SynthCorpus {
    std::vector<ManifestEntry> train;
    std::vector<ManifestEntry> heldout;  // unseen templates, fresh clips
    LinearCodec codec;
    OracleClassifier oracle;
    std::map<std::string, AppearanceLatent> appearance;  // by person id
    std::map<std::string, RowVector> portrait;           // by person id, one motion frame
};

// Training clips use templates outside the held-out stride; held-out clips
// draw their instructions from the remaining templates.
std::vector<std::size_t> training_template_indices(std::size_t n_templates, int stride);
std::vector<std::size_t> heldout_template_indices(std::size_t n_templates, int stride);

// AU vector of a synthetic clip: the emotion's typical units plus lips_part.
AUVector synthetic_au(Emotion emotion);

// Writes manifest.jsonl, heldout.jsonl, motion/, pose/, audio/, persons/,
// codec.npy, oracle.json and synth.json under `out_dir`. Byte-identical for
// identical options.
SynthCorpus synth_corpus(const SynthOptions& options, const std::filesystem::path& out_dir,
                         const TemplateBank& bank = TemplateBank::builtin());

// Kinds and phrasings of the synthetic motion-control clips.
std::map<std::string, std::vector<std::string>> motion_instruction_table();

}  // namespace motiondiff
