#pragma once

#include <string>

namespace motiondiff {

// Widths and depth of the denoiser and its conditioning inputs. Defaults
// are the full-size values; desk runs override them from a config file.
struct DenoiserConfig {
    int n_blocks = 12;
    int d_hidden = 768;
    int n_heads = 12;
    int conv_kernel = 31;
    int d_pose = 6;
    int n_aus = 41;
    int n_intensity = 3;
    int d_mot = 768;
    int d_txt = 768;
    int d_aud = 768;
    int gate_kernel = 3;
    int ffn_mult = 4;

    // Throws ConfigError on non-positive sizes, even kernels, a hidden width
    // not divisible by the head count, or d_txt <= 4 (adapter bottleneck).
    void validate() const;
    bool operator==(const DenoiserConfig&) const = default;
};

}  // namespace motiondiff
