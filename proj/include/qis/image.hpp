#pragma once

#include <string>
#include <vector>

namespace qis {

/// Row-major grayscale image. Pixel range depends on context: intensity
/// images live in [0,1], radiance maps are any nonnegative value.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    int size() const { return width * height; }
    double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

/// Throws std::invalid_argument unless every pixel is finite and in [0,1].
void validate_intensity(const Image& img);

/// Throws std::invalid_argument unless every pixel is finite and >= 0.
void validate_radiance(const Image& img);

/// 8-bit binary PGM (P5, maxval 255); pixels are value/255.
Image load_pgm(const std::string& path);

/// Writes clipped-to-[0,1] pixels as 8-bit P5. `comment` becomes a '#' header
/// line when nonempty.
void save_pgm(const Image& img, const std::string& path, const std::string& comment = "");

/// CSV of floats, one image row per line. Lines starting with '#' are skipped.
Image load_csv_image(const std::string& path);
void save_csv_image(const Image& img, const std::string& path, const std::string& comment = "");

double mean(const Image& img);

}  // namespace qis
