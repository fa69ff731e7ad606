#pragma once

#include <Eigen/Dense>

#include <bitset>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace motiondiff {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

inline constexpr double kDefaultFrameRate = 25.0;

bool all_finite(const Matrix& m);

// Per-frame motion latent, one row per frame.
class MotionSequence {
public:
    MotionSequence() = default;
    explicit MotionSequence(Matrix data, double frame_rate = kDefaultFrameRate);

    const Matrix& data() const { return data_; }
    Matrix& data() { return data_; }
    Eigen::Index frames() const { return data_.rows(); }
    Eigen::Index dims() const { return data_.cols(); }
    double frame_rate() const { return frame_rate_; }

    // One-row sequence holding frame `index`.
    MotionSequence frame(Eigen::Index index) const;

private:
    Matrix data_;
    double frame_rate_ = kDefaultFrameRate;
};

// Head pose per frame; rotation then translation in the default 6-d layout.
class PoseSequence {
public:
    static constexpr int kDefaultDims = 6;

    PoseSequence() = default;
    explicit PoseSequence(Matrix data);

    const Matrix& data() const { return data_; }
    Eigen::Index frames() const { return data_.rows(); }
    Eigen::Index dims() const { return data_.cols(); }

private:
    Matrix data_;
};

struct AppearanceLatent {
    RowVector data;
};

// Binary activation vector over the 41 registry action units.
class AUVector {
public:
    static constexpr std::size_t kSize = 41;

    AUVector() = default;

    // Throws ValidationError unless bits has exactly kSize entries in {0,1}.
    static AUVector from_bits(std::span<const int> bits);

    bool test(std::size_t i) const { return bits_.test(i); }
    void set(std::size_t i, bool on = true) { bits_.set(i, on); }
    std::size_t count() const { return bits_.count(); }
    bool none() const { return bits_.none(); }
    std::vector<int> to_bits() const;

    AUVector operator&(const AUVector& other) const;
    bool operator==(const AUVector& other) const = default;

private:
    std::bitset<kSize> bits_;
};

enum class Emotion { angry, fear, happy, contempt, disgusted, sad, surprised, neutral };

inline constexpr Emotion kAllEmotions[] = {Emotion::angry,   Emotion::fear,      Emotion::happy,
                                           Emotion::contempt, Emotion::disgusted, Emotion::sad,
                                           Emotion::surprised, Emotion::neutral};

std::string_view to_string(Emotion e);
Emotion parse_emotion(std::string_view name);
std::optional<Emotion> try_parse_emotion(std::string_view name);

// Emotion intensity: 1 low, 2 medium, 3 high.
class Intensity {
public:
    explicit Intensity(int level);
    int level() const { return level_; }
    bool operator==(const Intensity&) const = default;

private:
    int level_;
};

enum class Task { emotion_talk, motion_control };

std::string_view to_string(Task t);
Task parse_task(std::string_view name);

}  // namespace motiondiff
