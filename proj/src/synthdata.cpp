#include "simseg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "simseg/errors.hpp"
#include "simseg/rng.hpp"

namespace simseg {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;
constexpr std::size_t kStarVertices = 14;
constexpr double kBackgroundLevel = 0.25;
constexpr double kLesionLevel = 0.78;
constexpr double kSpeckleLevel = 0.9;

void validate(const SceneSpec& spec) {
    if (spec.height < 8 || spec.width < 8) throw InvalidInput("scene smaller than 8x8");
    if (!(spec.min_area_fraction > 0.0 && spec.max_area_fraction <= 0.5 &&
          spec.min_area_fraction <= spec.max_area_fraction))
        throw InvalidInput("area fractions must satisfy 0 < min <= max <= 0.5");
    if (!(spec.malignant_cutoff > 0.0 && spec.malignant_cutoff < 1.0))
        throw InvalidInput("malignant cutoff must lie in (0, 1)");
    if (spec.irregularity_strength < 0.0 || spec.irregularity_strength > 0.9)
        throw InvalidInput("irregularity strength must lie in [0, 0.9]");
    if (spec.texture_noise < 0.0 || spec.texture_noise > 0.2)
        throw InvalidInput("texture noise must lie in [0, 0.2]");
    if (spec.speckle_density < 0.0 || spec.speckle_density > 0.05)
        throw InvalidInput("speckle density must lie in [0, 0.05]");

    // Worst-case bounding radius must leave room for placement.
    const double area_max =
        spec.max_area_fraction * static_cast<double>(spec.height * spec.width);
    const double r0_max = std::sqrt(area_max / std::acos(-1.0));
    const double bound = r0_max * (1.0 + spec.irregularity_strength) + 2.0;
    if (2.0 * bound >= static_cast<double>(std::min(spec.height, spec.width)))
        throw InvalidInput("lesion larger than image: shrink the area fraction");
}

}  // namespace

BitMask rasterize_ellipse(std::size_t height, std::size_t width, double cy, double cx,
                          double semi_a, double semi_b, double angle) {
    if (semi_a <= 0.0 || semi_b <= 0.0) throw InvalidInput("ellipse axes must be positive");
    BitMask mask(height, width);
    const double ca = std::cos(angle), sa = std::sin(angle);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            const double px = static_cast<double>(x) + 0.5 - cx;
            const double py = static_cast<double>(y) + 0.5 - cy;
            const double u = (px * ca + py * sa) / semi_a;
            const double v = (-px * sa + py * ca) / semi_b;
            mask.at(y, x) = (u * u + v * v <= 1.0) ? 1 : 0;
        }
    return mask;
}

BitMask rasterize_polygon(std::size_t height, std::size_t width,
                          const std::vector<std::pair<double, double>>& vertices) {
    if (vertices.size() < 3) throw InvalidInput("polygon needs at least 3 vertices");
    BitMask mask(height, width);
    const std::size_t n = vertices.size();
    for (std::size_t y = 0; y < height; ++y) {
        const double py = static_cast<double>(y) + 0.5;
        for (std::size_t x = 0; x < width; ++x) {
            const double px = static_cast<double>(x) + 0.5;
            bool inside = false;
            for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
                const auto [xi, yi] = vertices[i];
                const auto [xj, yj] = vertices[j];
                const bool crosses = (yi > py) != (yj > py);
                if (crosses && px < (xj - xi) * (py - yi) / (yj - yi) + xi)
                    inside = !inside;
            }
            mask.at(y, x) = inside ? 1 : 0;
        }
    }
    return mask;
}

std::vector<Sample> generate(const SceneSpec& spec, std::size_t count) {
    if (count == 0) throw InvalidInput("sample count must be >= 1");
    validate(spec);

    const double pi = std::acos(-1.0);
    std::vector<Sample> samples;
    samples.reserve(count);

    for (std::size_t index = 0; index < count; ++index) {
        Rng rng(seed_mix(spec.seed, index));

        const double q = rng.next_double();
        const double area_frac = rng.uniform(spec.min_area_fraction, spec.max_area_fraction);
        const double area = area_frac * static_cast<double>(spec.height * spec.width);
        const double r0 = std::sqrt(area / pi);

        Sample s;
        s.irregularity = q;
        s.label = q > spec.malignant_cutoff ? "malignant" : "benign";
        s.query = "Can you segment the lesion and give the diagnosis?";
        s.subset = spec.tag;

        double bound_radius = r0;
        std::vector<std::pair<double, double>> verts;
        double semi_a = r0, semi_b = r0, angle = 0.0;
        if (spec.shape == LesionShape::Ellipse) {
            const double e = q * spec.irregularity_strength;
            semi_a = r0 * (1.0 + e);
            semi_b = r0 / (1.0 + e);  // area preserved: pi * a * b = pi * r0^2
            angle = rng.uniform(0.0, pi);
            bound_radius = semi_a;
        } else {
            const double phase = rng.uniform(0.0, kTau);
            verts.resize(kStarVertices);
            for (std::size_t v = 0; v < kStarVertices; ++v) {
                const double amp = rng.uniform(-1.0, 1.0);
                const double r = r0 * (1.0 + q * spec.irregularity_strength * amp);
                const double theta = phase + kTau * static_cast<double>(v) /
                                                 static_cast<double>(kStarVertices);
                verts[v] = {r * std::cos(theta), r * std::sin(theta)};
                bound_radius = std::max(bound_radius, r);
            }
        }

        // Centers snap to pixel centers so symmetric shapes rasterize
        // symmetrically.
        const auto margin = static_cast<std::size_t>(std::ceil(bound_radius + 1.0));
        if (2 * margin >= std::min(spec.height, spec.width))
            throw InvalidInput("lesion larger than image");
        const std::size_t iy = margin + rng.below(spec.height - 2 * margin);
        const std::size_t ix = margin + rng.below(spec.width - 2 * margin);
        const double cy = static_cast<double>(iy) + 0.5;
        const double cx = static_cast<double>(ix) + 0.5;

        if (spec.shape == LesionShape::Ellipse) {
            s.mask = rasterize_ellipse(spec.height, spec.width, cy, cx, semi_a, semi_b, angle);
            s.geometry.area = pi * semi_a * semi_b;
            // Ramanujan's perimeter approximation.
            s.geometry.perimeter =
                pi * (3.0 * (semi_a + semi_b) -
                      std::sqrt((3.0 * semi_a + semi_b) * (semi_a + 3.0 * semi_b)));
        } else {
            for (auto& [vx, vy] : verts) {
                vx += cx;
                vy += cy;
            }
            s.mask = rasterize_polygon(spec.height, spec.width, verts);
            double shoelace = 0.0, perim = 0.0;
            for (std::size_t i = 0, j = verts.size() - 1; i < verts.size(); j = i++) {
                shoelace += verts[j].first * verts[i].second -
                            verts[i].first * verts[j].second;
                perim += std::hypot(verts[i].first - verts[j].first,
                                    verts[i].second - verts[j].second);
            }
            s.geometry.area = std::fabs(shoelace) / 2.0;
            s.geometry.perimeter = perim;
        }

        s.image = Image(spec.height, spec.width);
        for (std::size_t p = 0; p < s.image.pixels.size(); ++p) {
            const double base = s.mask.bits[p] ? kLesionLevel : kBackgroundLevel;
            const double noise = spec.texture_noise * rng.uniform(-1.0, 1.0);
            s.image.pixels[p] = std::clamp(base + noise, 0.0, 1.0);
        }

        // Bright 2x2 distractor blobs: point artifacts whose intensity rivals
        // the lesion but whose support is far too small to pool well.
        const auto speckles = static_cast<std::size_t>(std::llround(
            spec.speckle_density * static_cast<double>(spec.height * spec.width)));
        for (std::size_t b = 0; b < speckles; ++b) {
            const std::size_t sy = rng.below(spec.height - 1);
            const std::size_t sx = rng.below(spec.width - 1);
            for (std::size_t dy = 0; dy < 2; ++dy)
                for (std::size_t dx = 0; dx < 2; ++dx) {
                    const double noise = spec.texture_noise * rng.uniform(-1.0, 1.0);
                    s.image.at(sy + dy, sx + dx) =
                        std::clamp(kSpeckleLevel + noise, 0.0, 1.0);
                }
        }

        samples.push_back(std::move(s));
    }
    return samples;
}

namespace {

std::string numbered(const char* stem, std::size_t i, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s/%05zu.%s", stem, i, ext);
    return buf;
}

}  // namespace

void save_dataset(const std::vector<Sample>& samples, const std::filesystem::path& dir) {
    if (samples.empty()) throw InvalidInput("nothing to save");
    std::filesystem::create_directories(dir / "images");
    std::filesystem::create_directories(dir / "masks");

    nlohmann::json manifest;
    manifest["samples"] = nlohmann::json::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        const std::string image_rel = numbered("images", i, "pgm");
        const std::string mask_rel = numbered("masks", i, "pbm");
        save_pgm(s.image, dir / image_rel);
        save_pbm(s.mask, dir / mask_rel);
        manifest["samples"].push_back({{"image", image_rel},
                                       {"mask", mask_rel},
                                       {"label", s.label},
                                       {"query", s.query},
                                       {"subset", s.subset},
                                       {"irregularity", s.irregularity}});
    }
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest under " + dir.string());
    out << manifest.dump(2) << '\n';
}

std::vector<Sample> load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("cannot open manifest under " + dir.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("bad manifest: ") + e.what());
    }
    std::vector<Sample> samples;
    for (const auto& entry : manifest.at("samples")) {
        Sample s;
        s.image = load_pgm(dir / entry.at("image").get<std::string>());
        s.mask = load_pbm(dir / entry.at("mask").get<std::string>());
        s.label = entry.at("label").get<std::string>();
        s.query = entry.at("query").get<std::string>();
        s.subset = entry.at("subset").get<std::string>();
        s.irregularity = entry.value("irregularity", 0.0);
        samples.push_back(std::move(s));
    }
    if (samples.empty()) throw IoError("manifest lists no samples");
    return samples;
}

}  // namespace simseg
