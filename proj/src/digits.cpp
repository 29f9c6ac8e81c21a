#include "nml/digits.hpp"

#include <array>
#include <cmath>

namespace nml {
namespace {

constexpr int kGlyphW = 5;
constexpr int kGlyphH = 7;

constexpr std::array<std::array<const char*, kGlyphH>, 10> kGlyphs{{
    {"01110", "10001", "10011", "10101", "11001", "10001", "01110"}, // 0
    {"00100", "01100", "00100", "00100", "00100", "00100", "01110"}, // 1
    {"01110", "10001", "00001", "00010", "00100", "01000", "11111"}, // 2
    {"11111", "00010", "00100", "00010", "00001", "10001", "01110"}, // 3
    {"00010", "00110", "01010", "10010", "11111", "00010", "00010"}, // 4
    {"11111", "10000", "11110", "00001", "00001", "10001", "01110"}, // 5
    {"00110", "01000", "10000", "11110", "10001", "10001", "01110"}, // 6
    {"11111", "00001", "00010", "00100", "01000", "01000", "01000"}, // 7
    {"01110", "10001", "10001", "01110", "10001", "10001", "01110"}, // 8
    {"01110", "10001", "10001", "01111", "00001", "00010", "01100"}, // 9
}};

double glyph_at(int digit, int x, int y) {
    if (x < 0 || x >= kGlyphW || y < 0 || y >= kGlyphH) return 0.0;
    return kGlyphs[static_cast<index_t>(digit)][static_cast<index_t>(y)][x] == '1' ? 1.0 : 0.0;
}

// Bilinear sample of the glyph bitmap at continuous cell coordinates.
double glyph_sample(int digit, double gx, double gy) {
    const double fx = gx - 0.5;
    const double fy = gy - 0.5;
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const double ax = fx - x0;
    const double ay = fy - y0;
    const double v00 = glyph_at(digit, x0, y0);
    const double v10 = glyph_at(digit, x0 + 1, y0);
    const double v01 = glyph_at(digit, x0, y0 + 1);
    const double v11 = glyph_at(digit, x0 + 1, y0 + 1);
    return (1 - ax) * (1 - ay) * v00 + ax * (1 - ay) * v10 + (1 - ax) * ay * v01 + ax * ay * v11;
}

} // namespace

LabeledDataset make_digits(const DigitsSpec& spec) {
    NML_REQUIRE(spec.per_class >= 1, "make_digits: per_class must be >= 1");
    NML_REQUIRE(spec.image_size >= 8, "make_digits: image_size must be >= 8");
    NML_REQUIRE(spec.noise >= 0.0, "make_digits: noise must be >= 0");

    const index_t s = spec.image_size;
    const Rng root = Rng(spec.seed).child("digits");

    LabeledDataset ds;
    ds.features = Matrix(10 * spec.per_class, s * s);
    ds.labels.reserve(ds.features.rows());
    for (int digit = 0; digit < 10; ++digit) {
        ds.class_names.push_back(std::to_string(digit));
        const Rng class_rng = root.child(static_cast<std::uint64_t>(digit));
        for (index_t k = 0; k < spec.per_class; ++k) {
            Rng rng = class_rng.child(k);
            const double shift_x = rng.uniform(-1.5, 1.5);
            const double shift_y = rng.uniform(-1.5, 1.5);
            const double rot = rng.uniform(-0.18, 0.18);
            const double scale_x = rng.uniform(0.9, 1.12);
            const double scale_y = rng.uniform(0.9, 1.12);
            const double intensity = rng.uniform(0.72, 1.0);
            const double cr = std::cos(rot);
            const double sr = std::sin(rot);
            const double cx = static_cast<double>(s) / 2.0;

            double* row = ds.features.row(static_cast<index_t>(digit) * spec.per_class + k);
            for (index_t py = 0; py < s; ++py) {
                for (index_t px = 0; px < s; ++px) {
                    // inverse map: output pixel -> glyph cell
                    const double dx = (static_cast<double>(px) + 0.5 - cx - shift_x);
                    const double dy = (static_cast<double>(py) + 0.5 - cx - shift_y);
                    const double ux = (cr * dx + sr * dy) / scale_x;
                    const double uy = (-sr * dx + cr * dy) / scale_y;
                    // glyph box spans ~70% of the image, centered
                    const double gx = ux / (0.7 * static_cast<double>(s) / kGlyphH) +
                                      static_cast<double>(kGlyphW) / 2.0;
                    const double gy = uy / (0.7 * static_cast<double>(s) / kGlyphH) +
                                      static_cast<double>(kGlyphH) / 2.0;
                    double v = intensity * glyph_sample(digit, gx, gy);
                    if (spec.noise > 0.0) v += spec.noise * rng.normal();
                    v = std::min(1.0, std::max(0.0, v));
                    row[py * s + px] = std::llround(v * 255.0) / 255.0;
                }
            }
            ds.labels.push_back(digit);
        }
    }
    ds.validate();
    return ds;
}

} // namespace nml
