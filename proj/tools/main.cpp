// simseg command line: dataset generation, evaluation, tau/TTS sweeps,
// the CoT generation pipeline and heatmap export.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "simseg/cotgen.hpp"
#include "simseg/errors.hpp"
#include "simseg/harness.hpp"
#include "simseg/rng.hpp"

namespace {

using simseg::RunConfig;

struct ConfigCli {
    std::string config_file;
    std::vector<std::string> overrides;  // raw key=value pairs
};

void add_config_options(CLI::App* cmd, ConfigCli& cli) {
    cmd->add_option("--config", cli.config_file, "key = value config file");
    cmd->add_option("--set", cli.overrides,
                    "override a config key, e.g. --set grid=16 (repeatable)");
}

void add_common_shortcuts(CLI::App* cmd, ConfigCli& cli) {
    auto shortcut = [&cli, cmd](const std::string& flag, const std::string& key,
                                const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [&cli, key](const std::string& v) { cli.overrides.push_back(key + "=" + v); },
            help);
    };
    shortcut("--dataset", "dataset", "dataset directory (omit to synthesize)");
    shortcut("--samples", "samples", "synthetic sample count");
    shortcut("--seed", "seed", "master seed");
    shortcut("--output", "output", "output directory");
    shortcut("--grid", "grid", "region grid size g");
    shortcut("--tau", "tau", "tau strategy (topk:36, abs:0.25, frac:0.14)");
    shortcut("--m", "m", "reasoning paths m");
    shortcut("--n", "n", "perturbed masks n");
    shortcut("--noise", "noise", "path noise scale");
    shortcut("--threads", "threads", "worker threads (0 = hardware)");
}

RunConfig resolve_config(const ConfigCli& cli) {
    RunConfig cfg;
    if (!cli.config_file.empty()) cfg = simseg::load_run_config(cli.config_file);
    for (const std::string& kv : cli.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw simseg::InvalidInput("--set expects key=value, got: " + kv);
        simseg::set_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw simseg::IoError("cannot open for writing: " + path);
    out << text;
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
    std::vector<std::size_t> out;
    std::istringstream in(csv);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        out.push_back(static_cast<std::size_t>(std::stoull(item)));
    }
    return out;
}

void print_report(const simseg::EvalReport& report) {
    auto line = [](const simseg::EvalRow& row) {
        std::printf("%-12s gIoU %6.2f  cIoU %6.2f  Acc %6.2f  (n=%zu)\n",
                    row.subset.c_str(), row.giou * 100.0, row.ciou * 100.0, row.acc * 100.0,
                    row.count);
    };
    for (const auto& row : report.subsets) line(row);
    line(report.overall);
}

int run_gen(const ConfigCli& cli) {
    RunConfig cfg = resolve_config(cli);
    if (cfg.output_dir.empty()) throw simseg::InvalidInput("gen needs --output");
    const auto samples = simseg::generate(cfg.scene, cfg.samples);
    simseg::save_dataset(samples, cfg.output_dir);
    std::printf("wrote %zu samples to %s\n", samples.size(), cfg.output_dir.c_str());
    return 0;
}

int run_eval_cmd(const ConfigCli& cli) {
    const RunConfig cfg = resolve_config(cli);
    const auto report = simseg::run_eval(cfg);
    print_report(report);
    return 0;
}

int run_sweep_tau(const ConfigCli& cli, const std::string& ks, const std::string& gs) {
    const RunConfig cfg = resolve_config(cli);
    const auto results = simseg::sweep_tau(cfg, parse_size_list(ks), parse_size_list(gs));
    for (const auto& res : results) {
        const std::string csv = simseg::tau_sweep_csv(res);
        if (!cfg.output_dir.empty()) {
            std::filesystem::create_directories(cfg.output_dir);
            write_file(cfg.output_dir + "/tau_" + res.axis + ".csv", csv);
        }
        std::fputs(csv.c_str(), stdout);
    }
    return 0;
}

int run_sweep_tts(const ConfigCli& cli, const std::string& ms, const std::string& ns,
                  std::size_t trials) {
    const RunConfig cfg = resolve_config(cli);
    const auto result =
        simseg::sweep_tts(cfg, parse_size_list(ms), parse_size_list(ns), trials);
    const std::string csv = simseg::tts_sweep_csv(result);
    if (!cfg.output_dir.empty()) {
        std::filesystem::create_directories(cfg.output_dir);
        write_file(cfg.output_dir + "/tts_sweep.csv", csv);
    }
    std::fputs(csv.c_str(), stdout);
    return 0;
}

struct CotCli {
    std::string samples_path;
    std::string medical_script;
    std::string critic_script;
    std::string medical_url;
    std::string critic_url;
    std::size_t max_rounds = 3;
    std::string ratios = "0.8,0.1,0.1";
    std::uint64_t seed = 42;
    std::string output = "cot_out";
};

int run_cot(const CotCli& cli) {
    using simseg::AssistantEndpoint;
    const auto samples = simseg::load_sample_inputs(cli.samples_path);

    auto make_endpoint = [](AssistantEndpoint::Role role, const std::string& script,
                            const std::string& url) {
        if (!script.empty()) return AssistantEndpoint::mock_from_file(role, script);
        if (!url.empty()) return AssistantEndpoint::external(role, url);
        throw simseg::InvalidInput("each assistant needs a --*-script or --*-url");
    };
    AssistantEndpoint medical =
        make_endpoint(AssistantEndpoint::Role::Medical, cli.medical_script, cli.medical_url);
    AssistantEndpoint critic =
        make_endpoint(AssistantEndpoint::Role::Critic, cli.critic_script, cli.critic_url);

    std::vector<simseg::CoTRecord> records;
    records.reserve(samples.size());
    for (const auto& sample : samples)
        records.push_back(simseg::run_pipeline(sample, medical, critic, cli.max_rounds));

    std::filesystem::create_directories(cli.output);
    simseg::save_records(records, cli.output + "/records.ndjson");

    std::vector<simseg::CoTRecord> queue;
    for (const auto& r : records)
        if (r.status == simseg::RecordStatus::HumanReview) queue.push_back(r);
    simseg::save_records(queue, cli.output + "/human_review.ndjson");

    std::size_t approved = records.size() - queue.size();
    if (approved > 0) {
        std::array<double, 3> ratios{};
        std::istringstream in(cli.ratios);
        std::string item;
        std::size_t i = 0;
        while (std::getline(in, item, ',') && i < 3) ratios[i++] = std::stod(item);
        if (i != 3) throw simseg::InvalidInput("--ratios expects three comma-separated values");
        const auto manifest = simseg::package_dataset(records, ratios, cli.seed);
        write_file(cli.output + "/manifest.json", simseg::manifest_to_json(manifest) + "\n");
    }
    std::printf("processed %zu samples: %zu approved, %zu for human review\n",
                records.size(), approved, queue.size());
    return 0;
}

struct HeatmapCli {
    std::string out_path;
    std::string from_csv;
    std::string stage = "map";
    std::size_t index = 0;
};

int run_heatmap(const ConfigCli& cli, const HeatmapCli& hm) {
    if (hm.out_path.empty()) throw simseg::InvalidInput("heatmap needs --out");
    if (!hm.from_csv.empty()) {
        std::ifstream in(hm.from_csv);
        if (!in) throw simseg::IoError("cannot open: " + hm.from_csv);
        std::vector<double> values;
        std::size_t width = 0, height = 0;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string cell;
            std::size_t count = 0;
            while (std::getline(row, cell, ',')) {
                values.push_back(std::stod(cell));
                ++count;
            }
            if (width == 0) width = count;
            if (count != width) throw simseg::InvalidInput("ragged CSV rows");
            ++height;
        }
        simseg::SimilarityMap map;
        map.height = height;
        map.width = width;
        map.values = std::move(values);
        simseg::emit_heatmap(map, hm.out_path);
        return 0;
    }

    // Compute the requested pipeline intermediate for one sample.
    const RunConfig cfg = resolve_config(cli);
    const auto samples = cfg.dataset_dir.empty()
                             ? simseg::generate(cfg.scene, cfg.samples)
                             : simseg::load_dataset(cfg.dataset_dir);
    if (hm.index >= samples.size())
        throw simseg::InvalidInput("sample index out of range");
    const auto& sample = samples[hm.index];
    const auto tokens = simseg::toy_encode(sample.image, cfg.patch, cfg.dim,
                                           simseg::seed_mix(cfg.master_seed, 0xe0c0de));
    const auto raw = simseg::toy_seg_state(sample.image, cfg.patch, tokens,
                                           cfg.attention_gain, cfg.state_scale);
    const auto head = simseg::ProjectionHead::identity(cfg.dim, simseg::Nonlinearity::Tanh);
    const auto map =
        simseg::to_map(simseg::normalize(simseg::similarity(tokens, simseg::project(raw, head))));
    if (hm.stage == "map") {
        simseg::emit_heatmap(map, hm.out_path);
    } else if (hm.stage == "regions") {
        simseg::emit_heatmap(simseg::pool_regions(map, cfg.grid), hm.out_path);
    } else {
        throw simseg::InvalidInput("--stage must be map or regions");
    }
    return 0;
}

int fail_json(const char* type, const std::string& message) {
    const nlohmann::json doc = {{"error", {{"type", type}, {"message", message}}}};
    std::fprintf(stderr, "%s\n", doc.dump().c_str());
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"similarity-prompted segmentation and diagnosis toolkit"};
    app.require_subcommand(1);

    ConfigCli gen_cli, eval_cli, tau_cli, tts_cli, heat_cli;
    CotCli cot_cli;
    HeatmapCli hm_cli;
    std::string tau_ks = "12,24,36,48", tau_gs;
    std::string tts_ms = "1,2,4,8", tts_ns = "1";
    std::size_t tts_trials = 10;

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    add_config_options(gen, gen_cli);
    add_common_shortcuts(gen, gen_cli);

    CLI::App* eval = app.add_subcommand("eval", "run the pipeline and report metrics");
    add_config_options(eval, eval_cli);
    add_common_shortcuts(eval, eval_cli);

    CLI::App* tau = app.add_subcommand("sweep-tau", "sweep tau settings");
    add_config_options(tau, tau_cli);
    add_common_shortcuts(tau, tau_cli);
    tau->add_option("--k-values", tau_ks, "comma-separated top-k values");
    tau->add_option("--g-values", tau_gs, "comma-separated grid sizes");

    CLI::App* tts = app.add_subcommand("sweep-tts", "sweep test-time scaling settings");
    add_config_options(tts, tts_cli);
    add_common_shortcuts(tts, tts_cli);
    tts->add_option("--m-values", tts_ms, "comma-separated path counts");
    tts->add_option("--n-values", tts_ns, "comma-separated mask counts");
    tts->add_option("--trials", tts_trials, "seeded trials per setting");

    CLI::App* cot = app.add_subcommand("cot", "run the CoT generation pipeline");
    cot->add_option("--samples", cot_cli.samples_path, "NDJSON sample inputs")->required();
    cot->add_option("--medical-script", cot_cli.medical_script, "mock medical NDJSON script");
    cot->add_option("--critic-script", cot_cli.critic_script, "mock critic NDJSON script");
    cot->add_option("--medical-url", cot_cli.medical_url, "external medical endpoint URL");
    cot->add_option("--critic-url", cot_cli.critic_url, "external critic endpoint URL");
    cot->add_option("--max-rounds", cot_cli.max_rounds, "review round cap");
    cot->add_option("--ratios", cot_cli.ratios, "train,val,test ratios");
    cot->add_option("--seed", cot_cli.seed, "shuffle seed");
    cot->add_option("--output", cot_cli.output, "output directory");

    CLI::App* heat = app.add_subcommand("heatmap", "export an SVG heatmap");
    add_config_options(heat, heat_cli);
    add_common_shortcuts(heat, heat_cli);
    heat->add_option("--out", hm_cli.out_path, "output SVG path")->required();
    heat->add_option("--from-csv", hm_cli.from_csv, "render a numeric CSV grid instead");
    heat->add_option("--stage", hm_cli.stage, "map or regions");
    heat->add_option("--index", hm_cli.index, "sample index");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::stringstream ss;
        ss << e.what();
        return fail_json("cli", ss.str());
    }

    try {
        if (gen->parsed()) return run_gen(gen_cli);
        if (eval->parsed()) return run_eval_cmd(eval_cli);
        if (tau->parsed()) return run_sweep_tau(tau_cli, tau_ks, tau_gs);
        if (tts->parsed()) return run_sweep_tts(tts_cli, tts_ms, tts_ns, tts_trials);
        if (cot->parsed()) return run_cot(cot_cli);
        if (heat->parsed()) return run_heatmap(heat_cli, hm_cli);
    } catch (const simseg::InvalidInput& e) {
        return fail_json("invalid-input", e.what());
    } catch (const simseg::IoError& e) {
        return fail_json("io", e.what());
    } catch (const simseg::PipelineIo& e) {
        return fail_json("pipeline-io", e.what());
    } catch (const simseg::EmptyDataset& e) {
        return fail_json("empty-dataset", e.what());
    } catch (const simseg::Error& e) {
        return fail_json("error", e.what());
    } catch (const std::exception& e) {
        return fail_json("internal", e.what());
    }
    return 0;
}
