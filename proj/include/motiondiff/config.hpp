#pragma once

#include "motiondiff/denoiser.hpp"
#include "motiondiff/diffusion.hpp"
#include "motiondiff/synth.hpp"
#include "motiondiff/training.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace motiondiff {

enum class ConfigType { integer, real, string };

struct ConfigKey {
    std::string name;
    ConfigType type;
    std::string default_value;
    std::string help;
};

// Declared keys with their built-in defaults.
const std::vector<ConfigKey>& config_schema();

inline constexpr std::string_view kEnvPrefix = "MOTIONDIFF_";

// Layered key=value configuration: built-in defaults, then a config file,
// then MOTIONDIFF_* environment variables, then explicit overrides. Every
// value is checked against the schema; unknown keys throw ConfigError.
class RunConfig {
public:
    RunConfig();

    // "key = value" lines; '#' starts a comment.
    void merge_file(const std::filesystem::path& path);
    void merge_text(std::string_view text, const std::string& origin);
    // Variable MOTIONDIFF_OPTIM_PEAK_LR overrides key optim.peak_lr.
    void merge_environment(char** envp);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    long long get_int(const std::string& key) const;
    double get_real(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }
    // Sorted "key = value" lines.
    std::string snapshot() const;

    DenoiserConfig model() const;
    NoiseSchedule schedule() const;
    LossWeights loss_weights() const;
    OptimizerConfig optimizer() const;
    SynthOptions synth() const;

    static std::string env_name(const std::string& key);

private:
    std::map<std::string, std::string> values_;
};

}  // namespace motiondiff
