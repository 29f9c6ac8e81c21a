#pragma once

#include "nml/dataset.hpp"

namespace nml {

// Synthetic handwritten-digit stand-in: 5x7 glyphs for 0-9 rendered into
// image_size^2 grayscale images with random shift, scale, rotation, stroke
// intensity and pixel noise, quantized to 8-bit like an IDX source. Ten
// classes named "0".."9"; deterministic under seed.
struct DigitsSpec {
    index_t per_class = 400;
    index_t image_size = 16;
    double noise = 0.08;
    std::uint64_t seed = 0;
};

LabeledDataset make_digits(const DigitsSpec& spec);

} // namespace nml
