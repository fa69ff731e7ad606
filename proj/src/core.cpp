#include "motiondiff/core.hpp"

#include "motiondiff/errors.hpp"

#include <array>

namespace motiondiff {

bool all_finite(const Matrix& m) { return m.allFinite(); }

MotionSequence::MotionSequence(Matrix data, double frame_rate)
    : data_(std::move(data)), frame_rate_(frame_rate) {
    if (data_.rows() < 1) throw ValidationError("motion sequence needs at least one frame");
    if (!all_finite(data_)) throw ValidationError("motion sequence has non-finite entries");
    if (!(frame_rate_ > 0)) throw ValidationError("frame_rate must be positive");
}

MotionSequence MotionSequence::frame(Eigen::Index index) const {
    if (index < 0 || index >= frames())
        throw DimensionError("frame index " + std::to_string(index) + " out of range");
    return MotionSequence(data_.row(index), frame_rate_);
}

PoseSequence::PoseSequence(Matrix data) : data_(std::move(data)) {
    if (data_.rows() < 1) throw ValidationError("pose sequence needs at least one frame");
    if (!all_finite(data_)) throw ValidationError("pose sequence has non-finite entries");
}

AUVector AUVector::from_bits(std::span<const int> bits) {
    if (bits.size() != kSize)
        throw ValidationError("AU vector must have length 41, got " + std::to_string(bits.size()));
    AUVector out;
    for (std::size_t i = 0; i < kSize; ++i) {
        if (bits[i] != 0 && bits[i] != 1)
            throw ValidationError("AU vector entry " + std::to_string(i) + " is not 0/1");
        out.bits_.set(i, bits[i] == 1);
    }
    return out;
}

std::vector<int> AUVector::to_bits() const {
    std::vector<int> out(kSize);
    for (std::size_t i = 0; i < kSize; ++i) out[i] = bits_.test(i) ? 1 : 0;
    return out;
}

AUVector AUVector::operator&(const AUVector& other) const {
    AUVector out;
    out.bits_ = bits_ & other.bits_;
    return out;
}

namespace {

constexpr std::array<std::string_view, 8> kEmotionNames = {
    "angry", "fear", "happy", "contempt", "disgusted", "sad", "surprised", "neutral"};

}  // namespace

std::string_view to_string(Emotion e) { return kEmotionNames.at(static_cast<std::size_t>(e)); }

std::optional<Emotion> try_parse_emotion(std::string_view name) {
    for (std::size_t i = 0; i < kEmotionNames.size(); ++i)
        if (kEmotionNames[i] == name) return static_cast<Emotion>(i);
    return std::nullopt;
}

Emotion parse_emotion(std::string_view name) {
    if (auto e = try_parse_emotion(name)) return *e;
    throw ValidationError("unknown emotion '" + std::string(name) + "'");
}

Intensity::Intensity(int level) : level_(level) {
    if (level < 1 || level > 3)
        throw ValidationError("intensity must be 1, 2 or 3, got " + std::to_string(level));
}

std::string_view to_string(Task t) {
    return t == Task::emotion_talk ? "emotion_talk" : "motion_control";
}

Task parse_task(std::string_view name) {
    if (name == "emotion_talk") return Task::emotion_talk;
    if (name == "motion_control") return Task::motion_control;
    throw ValidationError("unknown task '" + std::string(name) + "'");
}

}  // namespace motiondiff
