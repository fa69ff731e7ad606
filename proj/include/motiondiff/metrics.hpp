#pragma once

#include "motiondiff/au_registry.hpp"
#include "motiondiff/conditioning.hpp"
#include "motiondiff/core.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace motiondiff {

// Four typical action units per non-neutral emotion.
class TypicalAUTable {
public:
    static TypicalAUTable parse(std::string_view text, const AuRegistry& registry = AuRegistry::builtin());
    static const TypicalAUTable& builtin();

    bool has(Emotion e) const { return rows_.count(e) > 0; }
    // Throws InputError for emotions without a row (neutral).
    const std::array<std::string, 4>& names(Emotion e) const;
    AUVector vector_for(Emotion e) const;

private:
    std::map<Emotion, std::array<std::string, 4>> rows_;
    std::map<Emotion, AUVector> vectors_;
};

// Mean over samples of 2|y ∩ ŷ| / (|y| + |ŷ|). A sample with both vectors
// empty scores 1.0 and appends a warning when `warnings` is given.
double au_f1(std::span<const AUVector> preds, std::span<const AUVector> gts,
             std::vector<std::string>* warnings = nullptr);

// Mean over samples of 2|y_emo ∩ ŷ| / |y_emo|, factor 2 included (range [0, 2]).
double au_emo(std::span<const AUVector> preds, std::span<const Emotion> emotions, const TypicalAUTable& table);

class FrameEmbeddingProvider {
public:
    virtual ~FrameEmbeddingProvider() = default;
    virtual RowVector embed_text(std::string_view text) const = 0;
    virtual RowVector embed_frame(const RowVector& frame) const = 0;
};

// Stand-in: text through HashTextEmbedder's summary vector, frames through a
// fixed seeded projection to the same width.
class HashFrameEmbedder final : public FrameEmbeddingProvider {
public:
    HashFrameEmbedder(int frame_width, int embed_width, std::uint64_t seed = 0xc11b);

    RowVector embed_text(std::string_view text) const override;
    RowVector embed_frame(const RowVector& frame) const override;

private:
    HashTextEmbedder text_;
    Matrix projection_;  // [frame_width x embed_width]
};

// 100 * max_i cos(E_t(text), E_v(frame_i)). Throws NumericalError on a
// zero-norm embedding and InputError on an empty frame list.
double clip_s(std::string_view text, std::span<const RowVector> frames, const FrameEmbeddingProvider& provider);

class ExternalScoreAdapter {
public:
    virtual ~ExternalScoreAdapter() = default;
    virtual double score(const std::string& generated_ref, const std::string& reference_ref) = 0;
};

struct EvalSample {
    std::string id;
    Task task = Task::emotion_talk;
    std::optional<AUVector> pred_au;
    std::optional<AUVector> gt_au;
    std::optional<Emotion> emotion;
    std::string instruction;
    std::vector<RowVector> frames;  // decoded frames, used by CLIP_S
    std::string generated_ref;
    std::string reference_ref;
};

struct MetricValue {
    std::optional<double> value;
    std::size_t n_samples = 0;
    std::string notes;
};

struct Report {
    std::map<std::string, MetricValue> metrics;
};

// AU_F1 over samples carrying both AU vectors, AU_Emo over emotion_talk
// samples with a typical-AU row, CLIP_S over motion_control samples with
// frames, and one entry per external adapter. A failing adapter is marked
// unavailable without aborting the run.
Report evaluate_run(std::span<const EvalSample> samples, const FrameEmbeddingProvider* frame_provider,
                    const std::map<std::string, ExternalScoreAdapter*>& adapters, const TypicalAUTable& table);

std::string report_to_json(const Report& report);
std::string report_table(const Report& report);

}  // namespace motiondiff
