#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace simseg {

/// Grayscale raster, row-major, intensities in [0, 1].
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(std::size_t h, std::size_t w, double fill = 0.0)
        : height(h), width(w), pixels(h * w, fill) {}

    double at(std::size_t y, std::size_t x) const { return pixels[y * width + x]; }
    double& at(std::size_t y, std::size_t x) { return pixels[y * width + x]; }
};

/// Binary mask, row-major, one byte per pixel (0 or 1).
struct BitMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> bits;

    BitMask() = default;
    BitMask(std::size_t h, std::size_t w, std::uint8_t fill = 0)
        : height(h), width(w), bits(h * w, fill) {}

    std::uint8_t at(std::size_t y, std::size_t x) const { return bits[y * width + x]; }
    std::uint8_t& at(std::size_t y, std::size_t x) { return bits[y * width + x]; }

    std::size_t popcount() const {
        std::size_t c = 0;
        for (std::uint8_t b : bits) c += b;
        return c;
    }

    bool operator==(const BitMask&) const = default;
};

// 8-bit binary PGM (P5); intensities quantized to round(v * 255).
void save_pgm(const Image& image, const std::filesystem::path& path);
Image load_pgm(const std::filesystem::path& path);

// Binary PBM (P4); mask bit 1 maps to PBM black.
void save_pbm(const BitMask& mask, const std::filesystem::path& path);
BitMask load_pbm(const std::filesystem::path& path);

/// P4 encoding as an in-memory byte string (also used by save_pbm).
std::string pbm_bytes(const BitMask& mask);

}  // namespace simseg
