#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "simseg/image.hpp"

namespace simseg {

enum class LesionShape { Ellipse, Polygon };

/// Scene recipe for the synthetic benchmark. Per-sample draws: the
/// irregularity parameter q ~ U[0,1] (label = malignant iff q > cutoff),
/// the lesion area fraction, orientation/phase, and placement. The
/// irregularity strength scales how strongly q deforms the boundary.
struct SceneSpec {
    std::size_t height = 64;
    std::size_t width = 64;
    LesionShape shape = LesionShape::Polygon;
    double min_area_fraction = 0.10;  // of h*w, in (0, 0.5]
    double max_area_fraction = 0.18;
    double irregularity_strength = 0.35;  // boundary deformation at q = 1
    double texture_noise = 0.04;
    double speckle_density = 0.012;  // bright 2x2 distractor blobs per pixel
    double malignant_cutoff = 0.5;    // in (0, 1)
    std::uint64_t seed = 0;
    std::string tag = "synthetic";
};

struct LesionGeometry {
    double area = 0.0;       // analytic area of the generating shape
    double perimeter = 0.0;  // analytic (Ramanujan / polygonal) perimeter
};

struct Sample {
    Image image;
    BitMask mask;
    std::string label;
    std::string query;
    std::string subset;
    double irregularity = 0.0;  // generating parameter q
    LesionGeometry geometry;
};

/// Deterministic given (spec, count); sample i draws from a stream derived
/// from (spec.seed, i). The mask is the exact rasterization of the
/// generating shape (pixel centers inside the implicit boundary).
std::vector<Sample> generate(const SceneSpec& spec, std::size_t count);

/// Pixel (y, x) is set iff the pixel center (x+0.5, y+0.5) lies inside the
/// rotated ellipse.
BitMask rasterize_ellipse(std::size_t height, std::size_t width, double cy, double cx,
                          double semi_a, double semi_b, double angle);

/// Even-odd rasterization of a closed polygon given as (x, y) vertices.
BitMask rasterize_polygon(std::size_t height, std::size_t width,
                          const std::vector<std::pair<double, double>>& vertices);

// Dataset directory layout: images/NNNNN.pgm, masks/NNNNN.pbm, manifest.json.
void save_dataset(const std::vector<Sample>& samples, const std::filesystem::path& dir);
std::vector<Sample> load_dataset(const std::filesystem::path& dir);

}  // namespace simseg
