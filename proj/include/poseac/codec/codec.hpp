#pragma once

#include <cstdint>
#include <string>

#include "poseac/core/image.hpp"
#include "poseac/synthwalk/synthwalk.hpp"

namespace poseac::codec {

// Built-in quality level standing in for H.264 crf 45: heavy enough to
// produce visible blocking and a measurable pose-model drop.
inline constexpr int CRF45_ANALOG_QUALITY = 10;

enum class CodecKind { builtin_dct, external };

struct DegradationConfig {
    CodecKind codec = CodecKind::builtin_dct;
    // builtin: 1..100 (higher is better). external: crf 0..51.
    int quality = CRF45_ANALOG_QUALITY;
    // external only; must contain {in} and {out} placeholders.
    std::string external_command_template;
    uint64_t seed = 0;

    void validate() const;
};

// Quantization step scale: 50/q below 50, (100-q)/50 above, floored at 0.02
// so quality 100 stays near-lossless instead of dividing by zero.
float quality_scale_factor(int quality);

// JPEG-style intra coding of one frame: per channel 8x8 block DCT,
// quantize with the base luminance matrix times the quality scale, round,
// dequantize, inverse DCT. Frames whose sides are not multiples of 8 are
// reflect-padded and cropped back.
Image degrade_frame(const Image& frame, int quality);

// Builtin path adds temporal residual coding: frame i>0 is reconstructed
// as previous degraded frame plus the DCT-quantized residual.
synthwalk::VideoSample degrade_video(const synthwalk::VideoSample& sample,
                                     const DegradationConfig& cfg);

double psnr(const Image& a, const Image& b);

}  // namespace poseac::codec
