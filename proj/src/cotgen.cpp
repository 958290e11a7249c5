#include "simseg/cotgen.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "simseg/errors.hpp"
#include "simseg/rng.hpp"

namespace simseg {

namespace {

std::string lowered(const std::string& s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string utc_now_iso() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

void validate_sample(const SampleInput& sample) {
    if (sample.image_id.empty() || sample.question.empty() || sample.diagnosis.empty())
        throw InvalidInput("sample fields must be nonempty");
    const bool known = std::any_of(kModalities.begin(), kModalities.end(),
                                   [&](const char* m) { return sample.modality == m; });
    if (!known) throw InvalidInput("unknown modality: " + sample.modality);
}

const char* failure_class_name(FailureClass c) {
    switch (c) {
        case FailureClass::MissingStep: return "Missing Step";
        case FailureClass::LogicalFlaw: return "Logical Flaw";
        case FailureClass::FactualError: return "Factual Error";
        case FailureClass::NonstandardTerminology: return "Non-standard Terminology";
    }
    return "Logical Flaw";
}

std::optional<FailureClass> failure_class_from_name(const std::string& name) {
    const std::string low = lowered(name);
    for (FailureClass c : {FailureClass::MissingStep, FailureClass::LogicalFlaw,
                           FailureClass::FactualError, FailureClass::NonstandardTerminology})
        if (low == lowered(failure_class_name(c))) return c;
    return std::nullopt;
}

AssistantEndpoint AssistantEndpoint::mock(Role role, std::vector<std::string> script) {
    AssistantEndpoint e;
    e.role_ = role;
    e.is_mock_ = true;
    e.script_ = std::move(script);
    return e;
}

AssistantEndpoint AssistantEndpoint::mock_from_file(Role role,
                                                    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mock script: " + path.string());
    std::vector<std::string> script;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            script.push_back(nlohmann::json::parse(line).at("text").get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw IoError("bad mock script line in " + path.string() + ": " + e.what());
        }
    }
    return mock(role, std::move(script));
}

AssistantEndpoint AssistantEndpoint::external(Role role, std::string url,
                                              int timeout_seconds, int retries) {
    if (url.find("://") == std::string::npos)
        throw InvalidInput("endpoint URL must include a scheme, e.g. http://host:8080");
    AssistantEndpoint e;
    e.role_ = role;
    e.is_mock_ = false;
    e.url_ = std::move(url);
    e.timeout_seconds_ = timeout_seconds;
    e.retries_ = retries;
    return e;
}

std::string AssistantEndpoint::call(const std::string& prompt, const std::string& sample_id) {
    prompts_.push_back(prompt);
    if (is_mock_) {
        if (cursor_ >= script_.size())
            throw PipelineIo("mock script exhausted while processing sample " + sample_id);
        return script_[cursor_++];
    }

    const auto scheme = url_.find("://");
    const auto path_pos = url_.find('/', scheme + 3);
    const std::string base = path_pos == std::string::npos ? url_ : url_.substr(0, path_pos);
    const std::string path = path_pos == std::string::npos ? "/" : url_.substr(path_pos);

    const nlohmann::json req = {
        {"role", role_ == Role::Medical ? "medical" : "critic"},
        {"prompt", prompt},
        {"sample_id", sample_id},
    };
    const std::string body = req.dump();

    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= retries_; ++attempt) {
        httplib::Client client(base);
        client.set_connection_timeout(timeout_seconds_, 0);
        client.set_read_timeout(timeout_seconds_, 0);
        auto res = client.Post(path, body, "application/json");
        if (!res) {
            last_error = "transport error " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP status " + std::to_string(res->status);
            continue;
        }
        try {
            return nlohmann::json::parse(res->body).at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            last_error = std::string("bad response body: ") + e.what();
        }
    }
    throw PipelineIo("assistant endpoint failed for sample " + sample_id + ": " + last_error);
}

std::string build_generation_prompt(const SampleInput& sample,
                                    const std::optional<FailureClass>& feedback) {
    validate_sample(sample);
    std::ostringstream out;
    out << "Question: " << sample.question << "\n\n";
    out << "Query: You're a medical assistant. Please generate Chain-of-Thought answer "
           "in the following format by thinking step by step...\n\n";
    out << "Firstly, the modality of the image is " << sample.modality << "\n\n";
    out << "Secondly, I will start to analyze the image ...\n\n";
    out << "Then, ...\n\n";
    out << "...\n\n";
    out << "Finally, " << sample.diagnosis << "\n";
    if (feedback) {
        out << "\nCorrection: the previous answer was rejected. Failure type: "
            << failure_class_name(*feedback)
            << ". Please regenerate the Chain-of-Thought and fix this issue.\n";
    }
    return out.str();
}

std::string build_review_prompt(const std::string& cot) {
    std::ostringstream out;
    out << "Input: " << cot << "\n\n";
    out << "As a rigorous critical assistant, evaluate whether the diagnostic "
           "Chain-of-Thought generated by the Medical Assistant is valid. Assess "
           "strictly against these criteria:\n\n";
    out << "Review Dimensions:\n\n";
    out << "1. **Step Completeness**\n\n";
    out << "- Explicitly identifies imaging modality.\n";
    out << "- Progressively analyzes key image features.\n";
    out << "- Derives final diagnosis through medical reasoning.\n\n";
    out << "2. **Logical Rigor**\n\n";
    out << "- No contradictions/jumps in reasoning.\n";
    out << "- Image features substantiate the diagnosis.\n";
    out << "- Rules out differential diagnoses (when applicable).\n\n";
    out << "3. **Medical Reliability**\n\n";
    out << "- Terminology conforms to medical standards.\n";
    out << "- Diagnosis aligns with current medical consensus.\n";
    out << "- No unverifiable/fabricated medical claims.\n\n";
    out << "Output Specifications:\n\n";
    out << "1. **APPROVED** (if all pass):\n\n- Please output [pass]\n\n";
    out << "2. **REJECTED** (if any failure):\n\n- Please output [reject]\n\n";
    out << "Classify failure type:\n\n";
    out << "`Missing Step` | `Logical Flaw` | `Factual Error` | `Non-standard "
           "Terminology`\n\n";
    out << "Final decision: [pass]/[reject]\n";
    return out.str();
}

ReviewVerdict parse_verdict(const std::string& critic_text) {
    if (critic_text.empty()) throw UnparseableVerdict("empty critic reply");
    const std::string low = lowered(critic_text);
    const auto marker = low.rfind("final decision:");
    if (marker == std::string::npos)
        throw UnparseableVerdict("critic reply has no final-decision marker");

    const auto pass_pos = low.find("[pass]", marker);
    const auto reject_pos = low.find("[reject]", marker);
    if (pass_pos == std::string::npos && reject_pos == std::string::npos)
        throw UnparseableVerdict("final-decision marker without [pass] or [reject]");

    ReviewVerdict verdict;
    verdict.raw = critic_text;
    if (pass_pos != std::string::npos &&
        (reject_pos == std::string::npos || pass_pos < reject_pos)) {
        verdict.decision = Decision::Pass;
        return verdict;
    }

    verdict.decision = Decision::Reject;
    std::size_t best_pos = std::string::npos;
    FailureClass best = FailureClass::LogicalFlaw;
    for (FailureClass c : {FailureClass::MissingStep, FailureClass::LogicalFlaw,
                           FailureClass::FactualError, FailureClass::NonstandardTerminology}) {
        const auto pos = low.find(lowered(failure_class_name(c)));
        if (pos != std::string::npos && pos < best_pos) {
            best_pos = pos;
            best = c;
        }
    }
    verdict.failure = best;
    return verdict;
}

CoTRecord run_pipeline(const SampleInput& sample, AssistantEndpoint& medical,
                       AssistantEndpoint& critic, std::size_t max_rounds,
                       const std::function<std::string()>& clock) {
    validate_sample(sample);
    if (max_rounds == 0) throw InvalidInput("max_rounds must be >= 1");
    const auto now = clock ? clock : utc_now_iso;

    CoTRecord record;
    record.sample_id = sample.image_id;
    record.modality = sample.modality;
    record.started_at = now();

    std::optional<FailureClass> feedback;
    for (std::size_t round = 1; round <= max_rounds; ++round) {
        const std::string prompt = build_generation_prompt(sample, feedback);
        record.cot = medical.call(prompt, sample.image_id);
        const std::string reply = critic.call(build_review_prompt(record.cot), sample.image_id);
        record.rounds = round;

        ReviewVerdict verdict;
        try {
            verdict = parse_verdict(reply);
        } catch (const UnparseableVerdict&) {
            record.history.push_back({Decision::Unparseable, std::nullopt, reply});
            record.status = RecordStatus::HumanReview;
            record.finished_at = now();
            return record;
        }
        record.history.push_back(verdict);
        if (verdict.decision == Decision::Pass) {
            record.status = RecordStatus::Approved;
            record.finished_at = now();
            return record;
        }
        feedback = verdict.failure;
    }
    record.status = RecordStatus::HumanReview;
    record.finished_at = now();
    return record;
}

DatasetManifest package_dataset(const std::vector<CoTRecord>& records,
                                const std::array<double, 3>& ratios, std::uint64_t seed) {
    double total = 0.0;
    for (double r : ratios) {
        if (r < 0.0) throw InvalidInput("split ratios must be nonnegative");
        total += r;
    }
    if (std::fabs(total - 1.0) > 1e-9) throw InvalidInput("split ratios must sum to 1");

    std::vector<const CoTRecord*> approved;
    for (const CoTRecord& r : records)
        if (r.status == RecordStatus::Approved) approved.push_back(&r);
    if (approved.empty()) throw EmptyDataset("no approved records to package");

    Rng rng(seed);
    for (std::size_t i = approved.size(); i > 1; --i)
        std::swap(approved[i - 1], approved[rng.below(i)]);

    const auto n = static_cast<double>(approved.size());
    const auto b1 = static_cast<std::size_t>(std::floor(n * ratios[0] + 1e-9));
    const auto b2 = static_cast<std::size_t>(std::floor(n * (ratios[0] + ratios[1]) + 1e-9));

    DatasetManifest manifest;
    std::vector<std::pair<std::string, std::vector<const CoTRecord*>>> splits = {
        {"train", {approved.begin(), approved.begin() + static_cast<long>(b1)}},
        {"val", {approved.begin() + static_cast<long>(b1),
                 approved.begin() + static_cast<long>(b2)}},
        {"test", {approved.begin() + static_cast<long>(b2), approved.end()}},
    };
    for (auto& [name, recs] : splits) {
        std::vector<std::string>& ids = name == "train" ? manifest.train
                                        : name == "val" ? manifest.val
                                                        : manifest.test;
        std::vector<std::pair<std::string, std::size_t>> counts;
        for (const char* m : kModalities) counts.emplace_back(m, 0);
        for (const CoTRecord* r : recs) {
            ids.push_back(r->sample_id);
            for (auto& [modality, count] : counts)
                if (modality == r->modality) ++count;
        }
        manifest.modality_counts.emplace_back(name, std::move(counts));
    }
    return manifest;
}

std::string manifest_to_json(const DatasetManifest& manifest) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [split, rows] : manifest.modality_counts) {
        nlohmann::json per = nlohmann::json::object();
        for (const auto& [modality, count] : rows) per[modality] = count;
        counts[split] = per;
    }
    const nlohmann::json doc = {
        {"splits",
         {{"train", manifest.train}, {"val", manifest.val}, {"test", manifest.test}}},
        {"modality_counts", counts},
        {"totals",
         {{"train", manifest.train.size()},
          {"val", manifest.val.size()},
          {"test", manifest.test.size()}}},
    };
    return doc.dump(2);
}

namespace {

const char* decision_name(Decision d) {
    switch (d) {
        case Decision::Pass: return "pass";
        case Decision::Reject: return "reject";
        case Decision::Unparseable: return "unparseable";
    }
    return "unparseable";
}

Decision decision_from_name(const std::string& name) {
    if (name == "pass") return Decision::Pass;
    if (name == "reject") return Decision::Reject;
    if (name == "unparseable") return Decision::Unparseable;
    throw IoError("unknown decision: " + name);
}

}  // namespace

std::string record_to_json(const CoTRecord& record) {
    nlohmann::json history = nlohmann::json::array();
    for (const ReviewVerdict& v : record.history) {
        nlohmann::json entry = {{"decision", decision_name(v.decision)}, {"raw", v.raw}};
        if (v.failure)
            entry["failure"] = failure_class_name(*v.failure);
        else
            entry["failure"] = nullptr;
        history.push_back(entry);
    }
    const nlohmann::json doc = {
        {"sample_id", record.sample_id},
        {"modality", record.modality},
        {"cot", record.cot},
        {"status", record.status == RecordStatus::Approved ? "approved" : "human_review"},
        {"rounds", record.rounds},
        {"history", history},
        {"started_at", record.started_at},
        {"finished_at", record.finished_at},
    };
    return doc.dump();
}

CoTRecord record_from_json(const std::string& line) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(std::string("bad record line: ") + e.what());
    }
    CoTRecord record;
    record.sample_id = doc.at("sample_id").get<std::string>();
    record.modality = doc.value("modality", "");
    record.cot = doc.at("cot").get<std::string>();
    const std::string status = doc.at("status").get<std::string>();
    if (status != "approved" && status != "human_review")
        throw IoError("unknown record status: " + status);
    record.status = status == "approved" ? RecordStatus::Approved : RecordStatus::HumanReview;
    record.rounds = doc.at("rounds").get<std::size_t>();
    for (const auto& entry : doc.at("history")) {
        ReviewVerdict v;
        v.decision = decision_from_name(entry.at("decision").get<std::string>());
        if (!entry.at("failure").is_null()) {
            const auto failure =
                failure_class_from_name(entry.at("failure").get<std::string>());
            if (!failure) throw IoError("unknown failure class in record");
            v.failure = failure;
        }
        v.raw = entry.value("raw", "");
        record.history.push_back(std::move(v));
    }
    record.started_at = doc.value("started_at", "");
    record.finished_at = doc.value("finished_at", "");
    return record;
}

void save_records(const std::vector<CoTRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    for (const CoTRecord& r : records) out << record_to_json(r) << '\n';
}

std::vector<CoTRecord> load_records(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<CoTRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(record_from_json(line));
    }
    return records;
}

std::vector<SampleInput> load_sample_inputs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path.string());
    std::vector<SampleInput> samples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            const nlohmann::json doc = nlohmann::json::parse(line);
            SampleInput s;
            s.image_id = doc.at("image_id").get<std::string>();
            s.question = doc.at("question").get<std::string>();
            s.modality = doc.at("modality").get<std::string>();
            s.diagnosis = doc.at("diagnosis").get<std::string>();
            validate_sample(s);
            samples.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("bad sample line in " + path.string() + ": " + e.what());
        }
    }
    if (samples.empty()) throw IoError("no samples in " + path.string());
    return samples;
}

}  // namespace simseg
