#include "motiondiff/synth.hpp"

#include "motiondiff/au_registry.hpp"
#include "motiondiff/conditioning.hpp"
#include "motiondiff/embedded_data.hpp"
#include "motiondiff/errors.hpp"
#include "motiondiff/metrics.hpp"
#include "motiondiff/npy.hpp"

#include "init_util.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

namespace motiondiff {

LinearCodec::LinearCodec(Matrix mix) : mix_(std::move(mix)) {
    if (mix_.rows() != mix_.cols() || mix_.rows() < 1) throw DimensionError("codec mix must be square");
    Eigen::FullPivLU<Matrix> lu(mix_);
    if (!lu.isInvertible()) throw NumericalError("codec mix is singular");
    inverse_t_ = lu.inverse().transpose();
}

LinearCodec LinearCodec::random(int d, std::uint64_t seed) {
    std::uint64_t state = seed ^ 0xc0dec0dec0dec0deULL;
    Matrix g(d, d);
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = detail::portable_normal(state);
    Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
    RowVector scales(d);
    for (int i = 0; i < d; ++i) scales(i) = 0.5 + static_cast<double>(i) / std::max(1, d - 1);
    return LinearCodec(q * scales.asDiagonal());
}

Matrix LinearCodec::decode(const MotionSequence& motion, const AppearanceLatent& appearance) const {
    if (motion.dims() != width() || appearance.data.size() != width())
        throw DimensionError("codec width " + std::to_string(width()) + " does not match the inputs");
    Matrix frames = motion.data() * mix_.transpose();
    frames.rowwise() += appearance.data;
    return frames;
}

MotionSequence LinearCodec::encode(const Matrix& frames, const AppearanceLatent& appearance, double frame_rate) const {
    if (frames.cols() != width() || appearance.data.size() != width())
        throw DimensionError("codec width " + std::to_string(width()) + " does not match the inputs");
    Matrix centered = frames;
    centered.rowwise() -= appearance.data;
    return MotionSequence(centered * inverse_t_, frame_rate);
}

void LinearCodec::save(const std::filesystem::path& path) const { npy::write(path, mix_); }

LinearCodec LinearCodec::load(const std::filesystem::path& path) { return LinearCodec(npy::read(path)); }

void OracleClassifier::add_class(Emotion emotion, RowVector centroid, AUVector au) {
    if (!centroids_.empty() && centroid.size() != centroids_.begin()->second.size())
        throw DimensionError("oracle centroids must share one width");
    centroids_[emotion] = std::move(centroid);
    aus_[emotion] = au;
}

Emotion OracleClassifier::classify(const MotionSequence& motion) const {
    if (centroids_.empty()) throw ContractError("oracle classifier has no classes");
    const RowVector mean = motion.data().colwise().mean();
    if (mean.size() != centroids_.begin()->second.size())
        throw DimensionError("motion width does not match the oracle centroids");
    Emotion best = centroids_.begin()->first;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [emotion, c] : centroids_) {
        const double d = (mean - c).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = emotion;
        }
    }
    return best;
}

AUVector OracleClassifier::predict_au(const MotionSequence& motion) const { return aus_.at(classify(motion)); }

void OracleClassifier::save(const std::filesystem::path& path) const {
    nlohmann::ordered_json j;
    j["classes"] = nlohmann::ordered_json::array();
    for (const auto& [emotion, c] : centroids_) {
        nlohmann::ordered_json cls;
        cls["emotion"] = std::string(to_string(emotion));
        cls["centroid"] = std::vector<double>(c.data(), c.data() + c.size());
        cls["au"] = AuRegistry::builtin().names_of(aus_.at(emotion));
        j["classes"].push_back(cls);
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

OracleClassifier OracleClassifier::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    OracleClassifier oracle;
    try {
        const auto j = nlohmann::json::parse(in);
        for (const auto& cls : j.at("classes")) {
            const auto values = cls.at("centroid").get<std::vector<double>>();
            RowVector c = Eigen::Map<const RowVector>(values.data(), static_cast<Eigen::Index>(values.size()));
            const auto names = cls.at("au").get<std::vector<std::string>>();
            oracle.add_class(parse_emotion(cls.at("emotion").get<std::string>()), c,
                             AuRegistry::builtin().from_names(names));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return oracle;
}

void SynthOptions::validate() const {
    if (clips_per_emotion < 0 || heldout_per_emotion < 0 || motion_clips_per_kind < 0)
        throw ConfigError("synth clip counts must be nonnegative");
    if (n_persons < 1 || frames < 1 || d_mot < 1 || d_aud < 1 || d_pose < 1)
        throw ConfigError("synth sizes must be positive");
    if (!(audio_rate > 0.0) || !(frame_rate > 0.0)) throw ConfigError("synth rates must be positive");
    if (heldout_template_stride < 2) throw ConfigError("heldout_template_stride must be >= 2");
    for (std::size_t i = 0; i < emotions.size(); ++i)
        for (std::size_t j = i + 1; j < emotions.size(); ++j)
            if (emotions[i] == emotions[j]) throw ConfigError("synth emotions must be distinct");
    if (clips_per_emotion > 0) {
        if (emotions.size() < 2) throw ConfigError("keyframe donors need at least two emotions");
        if (clips_per_emotion < n_persons)
            throw ConfigError("clips_per_emotion must be >= n_persons so every person has every emotion");
    }
    if (static_cast<int>(emotions.size()) + 4 > d_mot)
        throw ConfigError("d_mot must hold one direction per emotion plus four motion directions");
}

std::vector<std::size_t> training_template_indices(std::size_t n_templates, int stride) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_templates; ++i)
        if (i % static_cast<std::size_t>(stride) != static_cast<std::size_t>(stride - 1)) out.push_back(i);
    return out;
}

std::vector<std::size_t> heldout_template_indices(std::size_t n_templates, int stride) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_templates; ++i)
        if (i % static_cast<std::size_t>(stride) == static_cast<std::size_t>(stride - 1)) out.push_back(i);
    return out;
}

AUVector synthetic_au(Emotion emotion) {
    AUVector au;
    const auto& table = TypicalAUTable::builtin();
    if (table.has(emotion)) au = table.vector_for(emotion);
    au.set(AuRegistry::builtin().index_of("lips_part"));
    return au;
}

std::map<std::string, std::vector<std::string>> motion_instruction_table() {
    return parse_keyed_lists(embedded::motion_instructions);
}

namespace {

class Gauss {
public:
    explicit Gauss(std::uint64_t seed) : state_(seed) {}
    double operator()() { return detail::portable_normal(state_); }
    Matrix matrix(Eigen::Index r, Eigen::Index c) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = (*this)();
        return m;
    }
    std::uint64_t uniform(std::uint64_t n) { return detail::splitmix64(state_) % n; }

private:
    std::uint64_t state_;
};

RowVector scaled_direction(Gauss& g, Eigen::Index d, double norm) {
    RowVector v = g.matrix(1, d);
    return v * (norm / v.norm());
}

// Smooth temporal noise: squared-exponential covariance across frames.
Matrix smooth_noise(Gauss& g, const Eigen::LLT<Matrix>& chol, Eigen::Index dims, double scale) {
    Matrix out = chol.matrixL() * g.matrix(chol.rows(), dims);
    return scale * out;
}

Matrix catmull_rom(const Matrix& knots, Eigen::Index frames) {
    const Eigen::Index k = knots.rows();
    Matrix out(frames, knots.cols());
    for (Eigen::Index i = 0; i < frames; ++i) {
        const double pos = frames == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(k - 1) / (frames - 1);
        const auto seg = std::min<Eigen::Index>(static_cast<Eigen::Index>(pos), k - 2);
        const double u = pos - static_cast<double>(seg);
        const auto p0 = knots.row(std::max<Eigen::Index>(seg - 1, 0));
        const auto p1 = knots.row(seg);
        const auto p2 = knots.row(seg + 1);
        const auto p3 = knots.row(std::min<Eigen::Index>(seg + 2, k - 1));
        out.row(i) = 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                            (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
    }
    return out;
}

Matrix spline_pose(Gauss& g, Eigen::Index frames, Eigen::Index dims) {
    const Eigen::Index n_knots = std::max<Eigen::Index>(2, frames / 4 + 2);
    return catmull_rom(0.5 * g.matrix(n_knots, dims), frames);
}

std::string numbered(const std::string& prefix, int k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03d", k);
    return prefix + "_" + buf;
}

// Per-frame trajectory weight for each motion kind.
double trajectory(const std::string& kind, double s) {
    if (kind == "turn_left") return s;
    if (kind == "turn_right") return -s;
    if (kind == "nod") return std::sin(2.0 * std::numbers::pi * 2.0 * s);
    return std::min(1.0, 4.0 * s);  // raise_brows, open_mouth: ramp then hold
}

int direction_slot(const std::string& kind) {
    if (kind == "turn_left" || kind == "turn_right") return 0;
    if (kind == "nod") return 1;
    if (kind == "raise_brows") return 2;
    return 3;
}

nlohmann::ordered_json options_json(const SynthOptions& o) {
    nlohmann::ordered_json j;
    std::vector<std::string> emotions;
    for (Emotion e : o.emotions) emotions.emplace_back(to_string(e));
    j["emotions"] = emotions;
    j["clips_per_emotion"] = o.clips_per_emotion;
    j["heldout_per_emotion"] = o.heldout_per_emotion;
    j["motion_clips_per_kind"] = o.motion_clips_per_kind;
    j["n_persons"] = o.n_persons;
    j["frames"] = o.frames;
    j["d_mot"] = o.d_mot;
    j["d_aud"] = o.d_aud;
    j["d_pose"] = o.d_pose;
    j["audio_rate"] = o.audio_rate;
    j["frame_rate"] = o.frame_rate;
    j["seed"] = o.seed;
    j["heldout_template_stride"] = o.heldout_template_stride;
    j["emotion_scale"] = o.emotion_scale;
    j["person_scale"] = o.person_scale;
    j["audio_scale"] = o.audio_scale;
    j["noise_scale"] = o.noise_scale;
    j["motion_scale"] = o.motion_scale;
    return j;
}

}  // namespace

SynthCorpus synth_corpus(const SynthOptions& o, const std::filesystem::path& out_dir, const TemplateBank& bank) {
    o.validate();
    namespace fs = std::filesystem;
    for (const char* sub : {"motion", "pose", "audio", "persons"}) fs::create_directories(out_dir / sub);

    Gauss g(o.seed * 0x9e3779b97f4a7c15ULL + 0x51a7);
    std::mt19937_64 text_rng(o.seed ^ 0x7e47ULL);
    const Eigen::Index d = o.d_mot;
    const Eigen::Index l = o.frames;

    const Matrix basis = Eigen::HouseholderQR<Matrix>(g.matrix(d, d)).householderQ();
    std::map<Emotion, RowVector> emotion_offset;
    for (std::size_t i = 0; i < o.emotions.size(); ++i)
        emotion_offset[o.emotions[i]] = o.emotions[i] == Emotion::neutral
                                            ? RowVector(RowVector::Zero(d))
                                            : RowVector(o.emotion_scale * basis.col(static_cast<Eigen::Index>(i)).transpose());
    auto motion_direction = [&](int slot) -> RowVector {
        return o.motion_scale * basis.col(static_cast<Eigen::Index>(o.emotions.size()) + slot).transpose();
    };
    const Matrix audio_mix = g.matrix(o.d_aud, d) * (o.audio_scale / std::sqrt(static_cast<double>(o.d_aud)));

    Matrix kernel(l, l);
    for (Eigen::Index i = 0; i < l; ++i)
        for (Eigen::Index j = 0; j < l; ++j) {
            const double diff = static_cast<double>(i - j) / 3.0;
            kernel(i, j) = std::exp(-0.5 * diff * diff) + (i == j ? 1e-6 : 0.0);
        }
    const Eigen::LLT<Matrix> chol(kernel);

    SynthCorpus corpus;
    corpus.codec = LinearCodec::random(o.d_mot, o.seed);
    std::vector<std::string> persons;
    for (int p = 0; p < o.n_persons; ++p) {
        const std::string pid = numbered("p", p);
        persons.push_back(pid);
        corpus.portrait[pid] = scaled_direction(g, d, o.person_scale);
        corpus.appearance[pid] = AppearanceLatent{g.matrix(1, d)};
        npy::write(out_dir / "persons" / (pid + "_portrait.npy"), corpus.portrait[pid]);
        npy::write(out_dir / "persons" / (pid + "_appearance.npy"), corpus.appearance[pid].data);
    }

    const auto audio_rows = std::max<Eigen::Index>(
        1, std::llround(static_cast<double>(l) / o.frame_rate * o.audio_rate));

    auto write_clip = [&](ManifestEntry& e, const Matrix& motion, const std::optional<Matrix>& audio) {
        e.motion_path = "motion/" + e.id + ".npy";
        e.pose_path = "pose/" + e.id + ".npy";
        e.n_frames = static_cast<int>(l);
        npy::write(out_dir / e.motion_path, motion);
        npy::write(out_dir / *e.pose_path, spline_pose(g, l, o.d_pose));
        if (audio) {
            e.audio_path = "audio/" + e.id + ".npy";
            npy::write(out_dir / *e.audio_path, *audio);
        }
        validate(e);
    };

    const auto train_bank = bank.with_templates(training_template_indices(bank.templates.size(), o.heldout_template_stride));
    const auto heldout_bank = bank.with_templates(heldout_template_indices(bank.templates.size(), o.heldout_template_stride));

    auto emotion_clip = [&](const std::string& id, Emotion emotion, int k, const TemplateBank& b) {
        ManifestEntry e;
        e.id = id;
        e.person_id = persons[static_cast<std::size_t>(k % o.n_persons)];
        e.task = Task::emotion_talk;
        e.emotion = emotion;
        const int level = 1 + static_cast<int>(g.uniform(3));
        e.intensity = Intensity(level);
        e.au = synthetic_au(emotion);
        e.instruction = expand_emotion_label(emotion, *e.intensity, b, text_rng);
        const Matrix audio = g.matrix(audio_rows, o.d_aud);
        Matrix m = resample_linear(audio, l) * audio_mix + smooth_noise(g, chol, d, o.noise_scale);
        m.rowwise() += corpus.portrait[e.person_id] + kIntensityScale[level - 1] * emotion_offset[emotion];
        write_clip(e, m, audio);
        return std::pair<ManifestEntry, Matrix>(e, m);
    };

    std::map<Emotion, RowVector> sums;
    std::map<Emotion, int> counts;
    for (Emotion emotion : o.emotions)
        for (int k = 0; k < o.clips_per_emotion; ++k) {
            auto [e, m] = emotion_clip(numbered("emo_" + std::string(to_string(emotion)), k), emotion, k, train_bank);
            const RowVector mean = m.colwise().mean();
            sums[emotion] = counts[emotion] ? RowVector(sums[emotion] + mean) : mean;
            ++counts[emotion];
            corpus.train.push_back(std::move(e));
        }

    const auto kinds = motion_instruction_table();
    for (const auto& [kind, phrasings] : kinds)
        for (int k = 0; k < o.motion_clips_per_kind; ++k) {
            ManifestEntry e;
            e.id = numbered("motion_" + kind, k);
            e.person_id = persons[static_cast<std::size_t>(k % o.n_persons)];
            e.task = Task::motion_control;
            e.instruction = phrasings.at(g.uniform(phrasings.size()));
            Matrix m = smooth_noise(g, chol, d, o.noise_scale);
            const RowVector dir = motion_direction(direction_slot(kind));
            for (Eigen::Index i = 0; i < l; ++i) {
                const double s = l == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(l - 1);
                m.row(i) += corpus.portrait[e.person_id] + trajectory(kind, s) * dir;
            }
            write_clip(e, m, std::nullopt);
            corpus.train.push_back(std::move(e));
        }

    for (Emotion emotion : o.emotions)
        for (int k = 0; k < o.heldout_per_emotion; ++k)
            corpus.heldout.push_back(
                emotion_clip(numbered("heldout_" + std::string(to_string(emotion)), k), emotion, k, heldout_bank).first);

    for (Emotion emotion : o.emotions) {
        if (!counts[emotion]) continue;
        corpus.oracle.add_class(emotion, sums[emotion] / counts[emotion], synthetic_au(emotion));
    }

    write_manifest(out_dir / "manifest.jsonl", corpus.train);
    write_manifest(out_dir / "heldout.jsonl", corpus.heldout);
    corpus.codec.save(out_dir / "codec.npy");
    corpus.oracle.save(out_dir / "oracle.json");
    std::ofstream opts(out_dir / "synth.json");
    if (!opts) throw IoError("cannot write " + (out_dir / "synth.json").string());
    opts << options_json(o).dump(2) << "\n";
    return corpus;
}

}  // namespace motiondiff
