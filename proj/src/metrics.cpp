#include "motiondiff/metrics.hpp"

#include "motiondiff/embedded_data.hpp"
#include "motiondiff/errors.hpp"
#include "motiondiff/instructions.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <random>
#include <sstream>

namespace motiondiff {

TypicalAUTable TypicalAUTable::parse(std::string_view text, const AuRegistry& registry) {
    TypicalAUTable table;
    for (const auto& [key, names] : parse_keyed_lists(text)) {
        const auto emotion = try_parse_emotion(key);
        if (!emotion) throw ParseError("typical AU table: unknown emotion '" + key + "'");
        if (*emotion == Emotion::neutral) throw ParseError("typical AU table: neutral has no typical units");
        if (names.size() != 4) throw ParseError("typical AU table: '" + key + "' needs exactly 4 units");
        std::array<std::string, 4> row;
        std::copy(names.begin(), names.end(), row.begin());
        table.vectors_[*emotion] = registry.from_names(names);
        table.rows_[*emotion] = row;
    }
    return table;
}

const TypicalAUTable& TypicalAUTable::builtin() {
    static const TypicalAUTable table = parse(embedded::typical_aus);
    return table;
}

const std::array<std::string, 4>& TypicalAUTable::names(Emotion e) const {
    const auto it = rows_.find(e);
    if (it == rows_.end()) throw InputError("no typical action units for emotion '" + std::string(to_string(e)) + "'");
    return it->second;
}

AUVector TypicalAUTable::vector_for(Emotion e) const {
    const auto it = vectors_.find(e);
    if (it == vectors_.end()) throw InputError("no typical action units for emotion '" + std::string(to_string(e)) + "'");
    return it->second;
}

double au_f1(std::span<const AUVector> preds, std::span<const AUVector> gts, std::vector<std::string>* warnings) {
    if (preds.size() != gts.size()) throw InputError("au_f1: prediction and ground-truth counts differ");
    if (preds.empty()) throw InputError("au_f1: no samples");
    double total = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const std::size_t denom = preds[i].count() + gts[i].count();
        if (denom == 0) {
            total += 1.0;
            if (warnings) warnings->push_back("au_f1: sample " + std::to_string(i) + " has no active units on either side");
            continue;
        }
        total += 2.0 * static_cast<double>((preds[i] & gts[i]).count()) / static_cast<double>(denom);
    }
    return total / static_cast<double>(preds.size());
}

double au_emo(std::span<const AUVector> preds, std::span<const Emotion> emotions, const TypicalAUTable& table) {
    if (preds.size() != emotions.size()) throw InputError("au_emo: prediction and emotion counts differ");
    if (preds.empty()) throw InputError("au_emo: no samples");
    double total = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const AUVector typical = table.vector_for(emotions[i]);
        total += 2.0 * static_cast<double>((preds[i] & typical).count()) / static_cast<double>(typical.count());
    }
    return total / static_cast<double>(preds.size());
}

HashFrameEmbedder::HashFrameEmbedder(int frame_width, int embed_width, std::uint64_t seed)
    : text_(embed_width, seed), projection_(frame_width, embed_width) {
    if (frame_width < 1 || embed_width < 1) throw ConfigError("HashFrameEmbedder: widths must be positive");
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(frame_width)));
    for (Eigen::Index r = 0; r < projection_.rows(); ++r)
        for (Eigen::Index c = 0; c < projection_.cols(); ++c) projection_(r, c) = normal(rng);
}

RowVector HashFrameEmbedder::embed_text(std::string_view text) const { return text_.embed(text).summary; }

RowVector HashFrameEmbedder::embed_frame(const RowVector& frame) const {
    if (frame.size() != projection_.rows())
        throw DimensionError("HashFrameEmbedder: frame width " + std::to_string(frame.size()) + ", expected " +
                             std::to_string(projection_.rows()));
    return frame * projection_;
}

double clip_s(std::string_view text, std::span<const RowVector> frames, const FrameEmbeddingProvider& provider) {
    if (frames.empty()) throw InputError("clip_s: no frames");
    const RowVector t = provider.embed_text(text);
    const double tn = t.norm();
    if (!(tn > 0.0) || !std::isfinite(tn)) throw NumericalError("clip_s: text embedding has zero norm");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& frame : frames) {
        const RowVector v = provider.embed_frame(frame);
        if (v.size() != t.size()) throw DimensionError("clip_s: text and frame embedding widths differ");
        const double vn = v.norm();
        if (!(vn > 0.0) || !std::isfinite(vn)) throw NumericalError("clip_s: frame embedding has zero norm");
        best = std::max(best, t.dot(v) / (tn * vn));
    }
    return 100.0 * best;
}

namespace {

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

Report evaluate_run(std::span<const EvalSample> samples, const FrameEmbeddingProvider* frame_provider,
                    const std::map<std::string, ExternalScoreAdapter*>& adapters, const TypicalAUTable& table) {
    Report report;

    std::vector<AUVector> preds, gts;
    for (const auto& s : samples)
        if (s.pred_au && s.gt_au) {
            preds.push_back(*s.pred_au);
            gts.push_back(*s.gt_au);
        }
    MetricValue f1;
    f1.n_samples = preds.size();
    if (!preds.empty()) {
        std::vector<std::string> warnings;
        f1.value = au_f1(preds, gts, &warnings);
        if (!warnings.empty()) f1.notes = std::to_string(warnings.size()) + " sample(s) with no active units scored 1.0";
    } else {
        f1.notes = "no samples with both generated and reference AU vectors";
    }
    report.metrics["AU_F1"] = f1;

    std::vector<AUVector> emo_preds;
    std::vector<Emotion> emotions;
    for (const auto& s : samples)
        if (s.task == Task::emotion_talk && s.pred_au && s.emotion && table.has(*s.emotion)) {
            emo_preds.push_back(*s.pred_au);
            emotions.push_back(*s.emotion);
        }
    MetricValue emo;
    emo.n_samples = emo_preds.size();
    if (!emo_preds.empty()) {
        emo.value = au_emo(emo_preds, emotions, table);
        emo.notes = "factor 2 kept, range [0, 2]; halved value " + format_value(*emo.value / 2.0);
    } else {
        emo.notes = "no emotion_talk samples with a typical-AU row";
    }
    report.metrics["AU_Emo"] = emo;

    MetricValue clip;
    if (frame_provider) {
        double total = 0.0;
        for (const auto& s : samples) {
            if (s.task != Task::motion_control || s.frames.empty()) continue;
            total += clip_s(s.instruction, s.frames, *frame_provider);
            ++clip.n_samples;
        }
        if (clip.n_samples > 0)
            clip.value = total / static_cast<double>(clip.n_samples);
        else
            clip.notes = "no motion_control samples with frames";
    } else {
        clip.notes = "no frame embedding provider";
    }
    report.metrics["CLIP_S"] = clip;

    for (const auto& [name, adapter] : adapters) {
        MetricValue m;
        try {
            double total = 0.0;
            for (const auto& s : samples) {
                const double v = adapter->score(s.generated_ref, s.reference_ref);
                if (!std::isfinite(v)) throw NumericalError("non-finite score for sample '" + s.id + "'");
                total += v;
                ++m.n_samples;
            }
            if (m.n_samples > 0) m.value = total / static_cast<double>(m.n_samples);
        } catch (const std::exception& e) {
            m.value.reset();
            m.n_samples = 0;
            m.notes = std::string("unavailable: ") + e.what();
        }
        report.metrics[name] = m;
    }
    return report;
}

std::string report_to_json(const Report& report) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [name, m] : report.metrics) {
        nlohmann::ordered_json entry;
        entry["value"] = m.value ? nlohmann::ordered_json(*m.value) : nlohmann::ordered_json(nullptr);
        entry["n_samples"] = m.n_samples;
        entry["notes"] = m.notes;
        j[name] = entry;
    }
    return j.dump(2) + "\n";
}

std::string report_table(const Report& report) {
    std::ostringstream out;
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %14s %10s  %s\n", "metric", "value", "samples", "notes");
    out << line;
    for (const auto& [name, m] : report.metrics) {
        const std::string value = m.value ? format_value(*m.value) : std::string("n/a");
        std::snprintf(line, sizeof line, "%-10s %14s %10zu  ", name.c_str(), value.c_str(), m.n_samples);
        out << line << m.notes << "\n";
    }
    return out.str();
}

}  // namespace motiondiff
