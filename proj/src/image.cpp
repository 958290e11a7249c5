#include "simseg/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "simseg/errors.hpp"

namespace simseg {

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    while (in >> tok) {
        if (tok[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        return tok;
    }
    throw IoError("truncated netpbm header");
}

std::size_t parse_dim(const std::string& tok) {
    std::size_t v = 0;
    for (char c : tok) {
        if (c < '0' || c > '9') throw IoError("bad netpbm header field: " + tok);
        v = v * 10 + static_cast<std::size_t>(c - '0');
    }
    return v;
}

}  // namespace

void save_pgm(const Image& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    std::string data;
    data.reserve(image.pixels.size());
    for (double v : image.pixels) {
        const double c = std::clamp(v, 0.0, 1.0);
        data.push_back(static_cast<char>(static_cast<int>(std::lround(c * 255.0))));
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("short write: " + path.string());
}

Image load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    if (next_token(in) != "P5") throw IoError("not a binary PGM: " + path.string());
    const std::size_t w = parse_dim(next_token(in));
    const std::size_t h = parse_dim(next_token(in));
    const std::size_t maxval = parse_dim(next_token(in));
    if (maxval == 0 || maxval > 255) throw IoError("unsupported PGM maxval");
    in.get();  // single whitespace after maxval
    Image img(h, w);
    std::vector<char> raw(h * w);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!in) throw IoError("truncated PGM data: " + path.string());
    for (std::size_t i = 0; i < raw.size(); ++i)
        img.pixels[i] = static_cast<double>(static_cast<unsigned char>(raw[i])) /
                        static_cast<double>(maxval);
    return img;
}

std::string pbm_bytes(const BitMask& mask) {
    std::ostringstream out;
    out << "P4\n" << mask.width << " " << mask.height << "\n";
    const std::size_t row_bytes = (mask.width + 7) / 8;
    for (std::size_t y = 0; y < mask.height; ++y) {
        for (std::size_t b = 0; b < row_bytes; ++b) {
            unsigned byte = 0;
            for (std::size_t k = 0; k < 8; ++k) {
                const std::size_t x = b * 8 + k;
                if (x < mask.width && mask.at(y, x)) byte |= 0x80u >> k;
            }
            out.put(static_cast<char>(byte));
        }
    }
    return out.str();
}

void save_pbm(const BitMask& mask, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    const std::string data = pbm_bytes(mask);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("short write: " + path.string());
}

BitMask load_pbm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    if (next_token(in) != "P4") throw IoError("not a binary PBM: " + path.string());
    const std::size_t w = parse_dim(next_token(in));
    const std::size_t h = parse_dim(next_token(in));
    in.get();
    BitMask mask(h, w);
    const std::size_t row_bytes = (w + 7) / 8;
    std::vector<char> raw(row_bytes * h);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!in) throw IoError("truncated PBM data: " + path.string());
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const unsigned byte =
                static_cast<unsigned char>(raw[y * row_bytes + x / 8]);
            mask.at(y, x) = (byte >> (7 - x % 8)) & 1u;
        }
    return mask;
}

}  // namespace simseg
