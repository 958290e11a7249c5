// pybind11 bindings: the main library operations with numpy-friendly
// conversions (images and masks cross as 2D arrays, embeddings as n x d).

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "simseg/cotgen.hpp"
#include "simseg/decoder.hpp"
#include "simseg/embeddings.hpp"
#include "simseg/errors.hpp"
#include "simseg/harness.hpp"
#include "simseg/losses.hpp"
#include "simseg/metrics.hpp"
#include "simseg/rvls2m.hpp"
#include "simseg/synthdata.hpp"
#include "simseg/tts.hpp"

namespace py = pybind11;
using namespace simseg;

namespace {

Image image_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw InvalidInput("image array must be 2D");
    Image img(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
    return img;
}

py::array_t<double> array_from_image(const Image& img) {
    py::array_t<double> a({img.height, img.width});
    std::copy(img.pixels.begin(), img.pixels.end(), a.mutable_data());
    return a;
}

BitMask mask_from_array(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw InvalidInput("mask array must be 2D");
    BitMask m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    for (py::ssize_t i = 0; i < a.size(); ++i) m.bits[static_cast<std::size_t>(i)] = a.data()[i] ? 1 : 0;
    return m;
}

py::array_t<std::uint8_t> array_from_mask(const BitMask& m) {
    py::array_t<std::uint8_t> a({m.height, m.width});
    std::copy(m.bits.begin(), m.bits.end(), a.mutable_data());
    return a;
}

EmbeddingMatrix embeddings_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw InvalidInput("embedding array must be 2D");
    EmbeddingMatrix m;
    m.rows = static_cast<std::size_t>(a.shape(0));
    m.dim = static_cast<std::size_t>(a.shape(1));
    m.values.assign(a.data(), a.data() + a.size());
    return m;
}

py::array_t<double> array_from_embeddings(const EmbeddingMatrix& m) {
    py::array_t<double> a({m.rows, m.dim});
    std::copy(m.values.begin(), m.values.end(), a.mutable_data());
    return a;
}

RegionMask region_from_array(
    const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1))
        throw InvalidInput("region mask array must be square");
    RegionMask m(static_cast<std::size_t>(a.shape(0)));
    for (py::ssize_t i = 0; i < a.size(); ++i) m.bits[static_cast<std::size_t>(i)] = a.data()[i] ? 1 : 0;
    return m;
}

py::array_t<std::uint8_t> array_from_region(const RegionMask& m) {
    py::array_t<std::uint8_t> a({m.grid, m.grid});
    std::copy(m.bits.begin(), m.bits.end(), a.mutable_data());
    return a;
}

TauStrategy tau_from_string(const std::string& s) { return parse_tau(s); }

py::dict row_dict(const EvalRow& row) {
    py::dict d;
    d["subset"] = row.subset;
    d["giou"] = row.giou;
    d["ciou"] = row.ciou;
    d["acc"] = row.acc;
    d["n"] = row.count;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "similarity-prompted segmentation and diagnosis toolkit";

    py::register_exception<InvalidInput>(m, "InvalidInputError", PyExc_ValueError);
    py::register_exception<NoSegToken>(m, "NoSegTokenError", PyExc_ValueError);
    py::register_exception<UnparseableVerdict>(m, "UnparseableVerdictError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    py::enum_<Nonlinearity>(m, "Nonlinearity")
        .value("RELU", Nonlinearity::Relu)
        .value("TANH", Nonlinearity::Tanh);

    py::class_<ProjectionHead>(m, "ProjectionHead")
        .def(py::init<std::size_t, std::size_t, std::size_t, Nonlinearity, std::uint64_t>(),
             py::arg("in_dim"), py::arg("mid_dim"), py::arg("out_dim"),
             py::arg("nonlinearity"), py::arg("seed"))
        .def_static("with_defaults", &ProjectionHead::with_defaults, py::arg("seed"))
        .def_static("identity", &ProjectionHead::identity, py::arg("width"),
                    py::arg("nonlinearity"))
        .def_property_readonly("in_dim", &ProjectionHead::in_dim)
        .def_property_readonly("mid_dim", &ProjectionHead::mid_dim)
        .def_property_readonly("out_dim", &ProjectionHead::out_dim)
        .def("lipschitz_bound", &ProjectionHead::lipschitz_bound);

    m.def(
        "toy_encode",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& image,
           std::size_t patch, std::size_t dim, std::uint64_t seed) {
            return array_from_embeddings(toy_encode(image_from_array(image), patch, dim, seed));
        },
        py::arg("image"), py::arg("patch"), py::arg("dim"), py::arg("seed"));

    m.def(
        "extract_seg_token",
        [](const std::vector<std::vector<double>>& hidden, const std::vector<int>& ids,
           int seg_id) { return extract_seg_token(hidden, ids, seg_id).values; },
        py::arg("hidden_states"), py::arg("token_ids"), py::arg("seg_id"));

    m.def(
        "project",
        [](const std::vector<double>& raw, const ProjectionHead& head) {
            return project(SegTokenRaw{raw}, head).values;
        },
        py::arg("raw"), py::arg("head"));

    m.def(
        "similarity",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& tokens,
           const std::vector<double>& seg) {
            return similarity(embeddings_from_array(tokens), SegEmbedding{seg}).values;
        },
        py::arg("tokens"), py::arg("seg"));

    m.def(
        "softmax_normalize",
        [](const std::vector<double>& values) {
            SimilarityVector sim{values, false};
            return normalize(sim).values;
        },
        py::arg("values"));

    m.def(
        "to_map",
        [](const std::vector<double>& values) {
            SimilarityVector sim{values, true};
            const SimilarityMap map = to_map(sim);
            py::array_t<double> a({map.height, map.width});
            std::copy(map.values.begin(), map.values.end(), a.mutable_data());
            return a;
        },
        py::arg("normalized_values"));

    m.def(
        "pool_regions",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& map,
           std::size_t grid) {
            if (map.ndim() != 2) throw InvalidInput("map array must be 2D");
            SimilarityMap sm;
            sm.height = static_cast<std::size_t>(map.shape(0));
            sm.width = static_cast<std::size_t>(map.shape(1));
            sm.values.assign(map.data(), map.data() + map.size());
            const RegionMatrix r = pool_regions(sm, grid);
            py::array_t<double> a({r.grid, r.grid});
            std::copy(r.values.begin(), r.values.end(), a.mutable_data());
            return a;
        },
        py::arg("map"), py::arg("grid"));

    m.def(
        "apply_tau",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& regions,
           const std::string& tau) {
            if (regions.ndim() != 2 || regions.shape(0) != regions.shape(1))
                throw InvalidInput("region matrix must be square");
            RegionMatrix r;
            r.grid = static_cast<std::size_t>(regions.shape(0));
            r.block = 1;
            r.values.assign(regions.data(), regions.data() + regions.size());
            return array_from_region(apply_tau(r, tau_from_string(tau)));
        },
        py::arg("regions"), py::arg("tau"));

    m.def(
        "rvls2m",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& tokens,
           const std::vector<double>& raw, const ProjectionHead& head, std::size_t grid,
           const std::string& tau) {
            return array_from_region(rvls2m(embeddings_from_array(tokens), SegTokenRaw{raw},
                                            head, grid, tau_from_string(tau)));
        },
        py::arg("tokens"), py::arg("raw"), py::arg("head"), py::arg("grid"), py::arg("tau"));

    m.def(
        "extract_features",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& image,
           std::size_t dim, std::uint64_t seed) {
            const VisualFeatures f = extract_features(image_from_array(image), dim, seed);
            py::array_t<double> a({f.height, f.width, f.dim});
            std::copy(f.values.begin(), f.values.end(), a.mutable_data());
            return a;
        },
        py::arg("image"), py::arg("dim"), py::arg("seed"));

    m.def(
        "decode",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& feats,
           const std::vector<double>& seg,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& region,
           double prompt_gain, double threshold) {
            if (feats.ndim() != 3) throw InvalidInput("features array must be 3D");
            VisualFeatures f;
            f.height = static_cast<std::size_t>(feats.shape(0));
            f.width = static_cast<std::size_t>(feats.shape(1));
            f.dim = static_cast<std::size_t>(feats.shape(2));
            f.values.assign(feats.data(), feats.data() + feats.size());
            const PredictedMask out = decode(f, SegEmbedding{seg}, region_from_array(region),
                                             DecoderConfig{prompt_gain, threshold});
            py::array_t<double> scores({out.height, out.width});
            std::copy(out.scores.begin(), out.scores.end(), scores.mutable_data());
            return py::make_tuple(array_from_mask(out.bits), scores);
        },
        py::arg("features"), py::arg("seg"), py::arg("region"), py::arg("prompt_gain") = 4.0,
        py::arg("threshold") = 0.6);

    m.def(
        "bce_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& truth) {
            if (logits.ndim() != 2) throw InvalidInput("logits array must be 2D");
            SoftMask pred(static_cast<std::size_t>(logits.shape(0)),
                          static_cast<std::size_t>(logits.shape(1)),
                          std::vector<double>(logits.data(), logits.data() + logits.size()));
            const LossResult r = bce_loss(pred, mask_from_array(truth));
            return py::make_tuple(r.value, r.grad);
        },
        py::arg("logits"), py::arg("truth"));

    m.def(
        "dice_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& truth,
           double smoothing) {
            if (logits.ndim() != 2) throw InvalidInput("logits array must be 2D");
            SoftMask pred(static_cast<std::size_t>(logits.shape(0)),
                          static_cast<std::size_t>(logits.shape(1)),
                          std::vector<double>(logits.data(), logits.data() + logits.size()));
            const LossResult r = dice_loss(pred, mask_from_array(truth), smoothing);
            return py::make_tuple(r.value, r.grad);
        },
        py::arg("logits"), py::arg("truth"), py::arg("smoothing") = 1.0);

    m.def(
        "text_ce_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& logits,
           const std::vector<std::size_t>& targets) {
            if (logits.ndim() != 2) throw InvalidInput("logits array must be 2D");
            TokenLogits tl;
            tl.steps = static_cast<std::size_t>(logits.shape(0));
            tl.vocab = static_cast<std::size_t>(logits.shape(1));
            tl.values.assign(logits.data(), logits.data() + logits.size());
            return text_ce_loss(tl, targets);
        },
        py::arg("logits"), py::arg("targets"));

    m.def(
        "mask_loss",
        [](double bce, double dice, double lambda_bce, double lambda_dice) {
            LossWeights w;
            w.bce = lambda_bce;
            w.dice = lambda_dice;
            return mask_loss(bce, dice, w);
        },
        py::arg("bce"), py::arg("dice"), py::arg("lambda_bce") = 2.0,
        py::arg("lambda_dice") = 0.5);

    m.def(
        "total_loss",
        [](double txt, double mask, double lambda_txt, double lambda_mask) {
            LossWeights w;
            w.txt = lambda_txt;
            w.mask = lambda_mask;
            return total_loss(txt, mask, w);
        },
        py::arg("txt"), py::arg("mask"), py::arg("lambda_txt") = 1.0,
        py::arg("lambda_mask") = 1.0);

    m.def(
        "iou",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& pred,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& truth) {
            return iou(MaskPair(mask_from_array(pred), mask_from_array(truth)));
        },
        py::arg("pred"), py::arg("truth"));

    m.def(
        "quality",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& pred,
           const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& truth) {
            return quality(MaskPair(mask_from_array(pred), mask_from_array(truth)));
        },
        py::arg("pred"), py::arg("truth"));

    m.def("extract_diagnosis", &extract_diagnosis, py::arg("text"), py::arg("vocabulary"));
    m.def("vote_diagnosis", &vote_diagnosis, py::arg("votes"));
    m.def("accuracy", &accuracy, py::arg("predictions"), py::arg("truths"));

    m.def(
        "perturb_region",
        [](const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& region,
           std::size_t flip_budget, int dilation_radius, std::uint64_t seed) {
            return array_from_region(perturb(region_from_array(region),
                                             PerturbationParams{flip_budget, dilation_radius, seed}));
        },
        py::arg("region"), py::arg("flip_budget"), py::arg("dilation_radius"), py::arg("seed"));

    m.def(
        "estimate_irregularity",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& image,
           double threshold) { return estimate_irregularity(image_from_array(image), threshold); },
        py::arg("image"), py::arg("threshold") = 0.5);

    m.def(
        "generate_dataset",
        [](std::size_t count, std::size_t height, std::size_t width, const std::string& shape,
           double min_area, double max_area, double irregularity_strength, double texture_noise,
           double speckle_density, double cutoff, std::uint64_t seed, const std::string& tag) {
            SceneSpec spec;
            spec.height = height;
            spec.width = width;
            if (shape == "ellipse") spec.shape = LesionShape::Ellipse;
            else if (shape == "polygon") spec.shape = LesionShape::Polygon;
            else throw InvalidInput("shape must be ellipse or polygon");
            spec.min_area_fraction = min_area;
            spec.max_area_fraction = max_area;
            spec.irregularity_strength = irregularity_strength;
            spec.texture_noise = texture_noise;
            spec.speckle_density = speckle_density;
            spec.malignant_cutoff = cutoff;
            spec.seed = seed;
            spec.tag = tag;
            py::list out;
            for (const Sample& s : generate(spec, count)) {
                py::dict d;
                d["image"] = array_from_image(s.image);
                d["mask"] = array_from_mask(s.mask);
                d["label"] = s.label;
                d["query"] = s.query;
                d["subset"] = s.subset;
                d["irregularity"] = s.irregularity;
                out.append(d);
            }
            return out;
        },
        py::arg("count"), py::arg("height") = 64, py::arg("width") = 64,
        py::arg("shape") = "polygon", py::arg("min_area") = 0.10, py::arg("max_area") = 0.18,
        py::arg("irregularity_strength") = 0.35, py::arg("texture_noise") = 0.04,
        py::arg("speckle_density") = 0.012, py::arg("cutoff") = 0.5, py::arg("seed") = 0,
        py::arg("tag") = "synthetic");

    m.def(
        "run_pipeline_mock",
        [](const std::string& image_id, const std::string& question, const std::string& modality,
           const std::string& diagnosis, const std::vector<std::string>& medical_script,
           const std::vector<std::string>& critic_script, std::size_t max_rounds) {
            SampleInput sample{image_id, question, modality, diagnosis};
            auto medical = AssistantEndpoint::mock(AssistantEndpoint::Role::Medical, medical_script);
            auto critic = AssistantEndpoint::mock(AssistantEndpoint::Role::Critic, critic_script);
            const CoTRecord rec = run_pipeline(sample, medical, critic, max_rounds);
            py::dict d;
            d["sample_id"] = rec.sample_id;
            d["status"] = rec.status == RecordStatus::Approved ? "approved" : "human_review";
            d["rounds"] = rec.rounds;
            d["cot"] = rec.cot;
            py::list history;
            for (const ReviewVerdict& v : rec.history) {
                py::dict h;
                h["decision"] = v.decision == Decision::Pass      ? "pass"
                                : v.decision == Decision::Reject ? "reject"
                                                                 : "unparseable";
                h["failure"] = v.failure ? py::cast(std::string(failure_class_name(*v.failure)))
                                         : py::none();
                history.append(h);
            }
            d["history"] = history;
            return d;
        },
        py::arg("image_id"), py::arg("question"), py::arg("modality"), py::arg("diagnosis"),
        py::arg("medical_script"), py::arg("critic_script"), py::arg("max_rounds") = 3);

    m.def("build_generation_prompt",
          [](const std::string& image_id, const std::string& question,
             const std::string& modality, const std::string& diagnosis,
             const std::optional<std::string>& feedback) {
              std::optional<FailureClass> fc;
              if (feedback) {
                  fc = failure_class_from_name(*feedback);
                  if (!fc) throw InvalidInput("unknown failure class: " + *feedback);
              }
              return build_generation_prompt({image_id, question, modality, diagnosis}, fc);
          },
          py::arg("image_id"), py::arg("question"), py::arg("modality"), py::arg("diagnosis"),
          py::arg("feedback") = py::none());

    m.def("parse_verdict", [](const std::string& text) {
        const ReviewVerdict v = parse_verdict(text);
        py::dict d;
        d["decision"] = v.decision == Decision::Pass ? "pass" : "reject";
        d["failure"] =
            v.failure ? py::cast(std::string(failure_class_name(*v.failure))) : py::none();
        return d;
    });

    m.def(
        "run_eval",
        [](std::size_t samples, std::uint64_t seed, std::size_t m, std::size_t n, double noise,
           const std::string& tau, std::size_t grid, const std::string& output_dir,
           std::size_t threads) {
            RunConfig cfg;
            cfg.samples = samples;
            cfg.master_seed = seed;
            cfg.tts.paths = m;
            cfg.tts.masks = n;
            cfg.tts.noise = noise;
            cfg.tau = parse_tau(tau);
            cfg.grid = grid;
            cfg.output_dir = output_dir;
            cfg.threads = threads;
            const EvalReport report = run_eval(cfg);
            py::dict d;
            py::list subs;
            for (const EvalRow& row : report.subsets) subs.append(row_dict(row));
            d["subsets"] = subs;
            d["overall"] = row_dict(report.overall);
            return d;
        },
        py::arg("samples") = 50, py::arg("seed") = 42, py::arg("m") = 1, py::arg("n") = 1,
        py::arg("noise") = 0.0, py::arg("tau") = "topk:36", py::arg("grid") = 16,
        py::arg("output_dir") = "", py::arg("threads") = 0);
}
