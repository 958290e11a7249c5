#include "simseg/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "simseg/errors.hpp"
#include "simseg/rng.hpp"

namespace simseg {

namespace {

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw InvalidInput(std::string(what) + " contains a non-finite value");
}

std::vector<double> seeded_matrix(std::size_t rows, std::size_t cols, double scale,
                                  std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> m(rows * cols);
    for (double& v : m) v = rng.normal() * scale;
    return m;
}

}  // namespace

ProjectionHead::ProjectionHead(std::size_t in_dim, std::size_t mid_dim,
                               std::size_t out_dim, Nonlinearity nl,
                               std::uint64_t seed)
    : in_(in_dim), mid_(mid_dim), out_(out_dim), nl_(nl) {
    if (in_ == 0 || mid_ == 0 || out_ == 0)
        throw InvalidInput("projection head widths must be >= 1");
    w1_ = seeded_matrix(mid_, in_, 1.0 / std::sqrt(static_cast<double>(in_)),
                        seed_mix(seed, 1));
    b1_ = seeded_matrix(mid_, 1, 0.1, seed_mix(seed, 2));
    w2_ = seeded_matrix(out_, mid_, 1.0 / std::sqrt(static_cast<double>(mid_)),
                        seed_mix(seed, 3));
    b2_ = seeded_matrix(out_, 1, 0.1, seed_mix(seed, 4));
}

ProjectionHead ProjectionHead::with_defaults(std::uint64_t seed) {
    return ProjectionHead(32, 64, 16, Nonlinearity::Relu, seed);
}

ProjectionHead ProjectionHead::identity(std::size_t width, Nonlinearity nl) {
    if (width == 0) throw InvalidInput("projection head widths must be >= 1");
    ProjectionHead h;
    h.in_ = h.mid_ = h.out_ = width;
    h.nl_ = nl;
    h.w1_.assign(width * width, 0.0);
    h.w2_.assign(width * width, 0.0);
    for (std::size_t i = 0; i < width; ++i) {
        h.w1_[i * width + i] = 1.0;
        h.w2_[i * width + i] = 1.0;
    }
    h.b1_.assign(width, 0.0);
    h.b2_.assign(width, 0.0);
    return h;
}

SegEmbedding ProjectionHead::apply(const SegTokenRaw& raw) const {
    if (raw.values.size() != in_)
        throw InvalidInput("projection input width " + std::to_string(raw.values.size()) +
                           " does not match head input width " + std::to_string(in_));
    check_finite(raw.values, "seg token");
    std::vector<double> mid(mid_);
    for (std::size_t r = 0; r < mid_; ++r) {
        double acc = 0.0;
        const double* wrow = w1_.data() + r * in_;
        for (std::size_t c = 0; c < in_; ++c) acc += wrow[c] * raw.values[c];
        acc += b1_[r];
        mid[r] = nl_ == Nonlinearity::Relu ? (acc > 0.0 ? acc : 0.0) : std::tanh(acc);
    }
    SegEmbedding out;
    out.values.resize(out_);
    for (std::size_t r = 0; r < out_; ++r) {
        double acc = 0.0;
        const double* wrow = w2_.data() + r * mid_;
        for (std::size_t c = 0; c < mid_; ++c) acc += wrow[c] * mid[c];
        out.values[r] = acc + b2_[r];
    }
    return out;
}

double ProjectionHead::lipschitz_bound() const {
    auto frob = [](const std::vector<double>& m) {
        double s = 0.0;
        for (double v : m) s += v * v;
        return std::sqrt(s);
    };
    return frob(w1_) * frob(w2_);
}

EmbeddingMatrix toy_encode(const Image& image, std::size_t patch, std::size_t dim,
                           std::uint64_t seed) {
    if (patch == 0 || dim == 0) throw InvalidInput("patch and dim must be >= 1");
    if (image.height < patch || image.width < patch)
        throw InvalidInput("image smaller than one patch");
    const std::size_t ph = image.height / patch;
    const std::size_t pw = image.width / patch;
    const std::size_t n = ph * pw;

    // One fixed map for every tile: identical tiles give identical rows.
    const std::vector<double> map = seeded_matrix(dim, 4, 0.5, seed);

    EmbeddingMatrix out;
    out.rows = n;
    out.dim = dim;
    out.values.resize(n * dim);

    const double center = (static_cast<double>(patch) - 1.0) / 2.0;
    const double inv_count = 1.0 / static_cast<double>(patch * patch);
    for (std::size_t pr = 0; pr < ph; ++pr) {
        for (std::size_t pc = 0; pc < pw; ++pc) {
            double sum = 0.0;
            for (std::size_t i = 0; i < patch; ++i)
                for (std::size_t j = 0; j < patch; ++j)
                    sum += image.at(pr * patch + i, pc * patch + j);
            const double mean = sum * inv_count;

            double var = 0.0;
            double wy = 0.0, wx = 0.0;
            for (std::size_t i = 0; i < patch; ++i)
                for (std::size_t j = 0; j < patch; ++j) {
                    const double px = image.at(pr * patch + i, pc * patch + j);
                    const double d = px - mean;
                    var += d * d;
                    wy += static_cast<double>(i) * px;
                    wx += static_cast<double>(j) * px;
                }
            var *= inv_count;
            double oy = 0.0, ox = 0.0;
            if (sum > 0.0) {
                oy = (wy / sum - center) / static_cast<double>(patch);
                ox = (wx / sum - center) / static_cast<double>(patch);
            }
            const double stats[4] = {mean, var, oy, ox};

            double* row = out.values.data() + (pr * pw + pc) * dim;
            for (std::size_t r = 0; r < dim; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < 4; ++c) acc += map[r * 4 + c] * stats[c];
                row[r] = acc;
            }
        }
    }
    return out;
}

SegTokenRaw extract_seg_token(const std::vector<std::vector<double>>& hidden_states,
                              const std::vector<int>& token_ids, int seg_id) {
    if (hidden_states.size() != token_ids.size())
        throw InvalidInput("hidden state count does not match token id count");
    for (std::size_t i = token_ids.size(); i-- > 0;) {
        if (token_ids[i] == seg_id) return SegTokenRaw{hidden_states[i]};
    }
    throw NoSegToken("no segmentation token in the generated sequence");
}

SegEmbedding project(const SegTokenRaw& raw, const ProjectionHead& head) {
    return head.apply(raw);
}

SegTokenRaw toy_seg_state(const Image& image, std::size_t patch,
                          const EmbeddingMatrix& tokens, double attention_gain,
                          double state_scale) {
    if (patch == 0) throw InvalidInput("patch must be >= 1");
    const std::size_t ph = image.height / patch;
    const std::size_t pw = image.width / patch;
    if (ph * pw != tokens.rows)
        throw InvalidInput("token count does not match the image patch grid");

    // Saliency weights over patch mean intensity, max-subtracted softmax.
    std::vector<double> saliency(tokens.rows);
    const double inv_count = 1.0 / static_cast<double>(patch * patch);
    for (std::size_t pr = 0; pr < ph; ++pr)
        for (std::size_t pc = 0; pc < pw; ++pc) {
            double sum = 0.0;
            for (std::size_t i = 0; i < patch; ++i)
                for (std::size_t j = 0; j < patch; ++j)
                    sum += image.at(pr * patch + i, pc * patch + j);
            saliency[pr * pw + pc] = attention_gain * sum * inv_count;
        }
    double mx = saliency[0];
    for (double s : saliency) mx = std::max(mx, s);
    double total = 0.0;
    for (double& s : saliency) {
        s = std::exp(s - mx);
        total += s;
    }

    SegTokenRaw raw;
    raw.values.assign(tokens.dim, 0.0);
    for (std::size_t r = 0; r < tokens.rows; ++r) {
        const double w = saliency[r] / total;
        const double* row = tokens.row(r);
        for (std::size_t c = 0; c < tokens.dim; ++c) raw.values[c] += w * row[c];
    }

    double amax = 0.0;
    for (double v : raw.values) amax = std::max(amax, std::fabs(v));
    if (amax > 0.0) {
        const double k = state_scale / amax;
        for (double& v : raw.values) v *= k;
    }
    return raw;
}

void save_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    auto put_u32 = [&](std::uint32_t v) {
        char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
        out.write(b, 4);
    };
    put_u32(static_cast<std::uint32_t>(m.rows));
    put_u32(static_cast<std::uint32_t>(m.dim));
    for (double v : m.values) {
        const float f = static_cast<float>(v);
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        put_u32(u);
    }
    if (!out) throw IoError("short write: " + path.string());
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    auto get_u32 = [&]() {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        if (!in) throw IoError("truncated embedding file: " + path.string());
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) |
               (static_cast<std::uint32_t>(b[3]) << 24);
    };
    EmbeddingMatrix m;
    m.rows = get_u32();
    m.dim = get_u32();
    if (m.rows == 0 || m.dim == 0) throw IoError("embedding file with empty shape");
    m.values.resize(m.rows * m.dim);
    for (double& v : m.values) {
        const std::uint32_t u = get_u32();
        float f;
        std::memcpy(&f, &u, 4);
        v = static_cast<double>(f);
    }
    return m;
}

void save_embeddings_csv(const EmbeddingMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.precision(17);
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.dim; ++c) {
            if (c) out << ',';
            out << m.at(r, c);
        }
        out << '\n';
    }
}

}  // namespace simseg
