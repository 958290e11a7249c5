#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace simseg {

inline constexpr std::array<const char*, 5> kModalities = {
    "X-Ray", "Dermoscopy", "Endoscopy", "Ultrasound", "Fundus Photography"};

/// One raw dataset sample entering the generation pipeline.
struct SampleInput {
    std::string image_id;
    std::string question;
    std::string modality;   // one of kModalities
    std::string diagnosis;  // ground-truth answer rendered into the prompt
};

void validate_sample(const SampleInput& sample);

enum class FailureClass { MissingStep, LogicalFlaw, FactualError, NonstandardTerminology };

const char* failure_class_name(FailureClass c);
std::optional<FailureClass> failure_class_from_name(const std::string& name);

enum class Decision { Pass, Reject, Unparseable };

/// Critic outcome. parse_verdict only ever produces Pass or Reject
/// (an unreadable reply throws); Unparseable appears in record histories
/// when the pipeline routed a sample to human review.
struct ReviewVerdict {
    Decision decision = Decision::Reject;
    std::optional<FailureClass> failure;  // set exactly when decision == Reject
    std::string raw;
};

enum class RecordStatus { Approved, HumanReview };

struct CoTRecord {
    std::string sample_id;
    std::string modality;
    std::string cot;  // last generated chain of thought
    RecordStatus status = RecordStatus::HumanReview;
    std::size_t rounds = 0;
    std::vector<ReviewVerdict> history;  // one entry per round
    std::string started_at;
    std::string finished_at;
};

/// Generation or review backend. Mock scripts are consumed in order;
/// the external backend POSTs {role, prompt, sample_id} as JSON and
/// expects {text} back.
class AssistantEndpoint {
  public:
    enum class Role { Medical, Critic };

    static AssistantEndpoint mock(Role role, std::vector<std::string> script);
    /// Newline-delimited JSON, one {"text": ...} document per line.
    static AssistantEndpoint mock_from_file(Role role, const std::filesystem::path& path);
    static AssistantEndpoint external(Role role, std::string url, int timeout_seconds = 10,
                                      int retries = 2);

    /// Next reply. Throws PipelineIo (carrying the sample id) on transport
    /// failure after retries or an exhausted mock script.
    std::string call(const std::string& prompt, const std::string& sample_id);

    Role role() const { return role_; }
    /// Every prompt this endpoint has been asked, in order.
    const std::vector<std::string>& prompts_seen() const { return prompts_; }

  private:
    AssistantEndpoint() = default;

    Role role_ = Role::Medical;
    bool is_mock_ = true;
    std::vector<std::string> script_;
    std::size_t cursor_ = 0;
    std::string url_;
    int timeout_seconds_ = 10;
    int retries_ = 2;
    std::vector<std::string> prompts_;
};

/// Step-by-step generation prompt; names the prior failure class verbatim
/// in a correction section when feedback is present.
std::string build_generation_prompt(const SampleInput& sample,
                                    const std::optional<FailureClass>& feedback);

/// Review prompt handed to the critic for a generated chain of thought.
std::string build_review_prompt(const std::string& cot);

/// Scans for the last "Final decision:" marker and the [pass]/[reject]
/// token after it; a rejection picks the first failure-class token present
/// anywhere in the reply, defaulting to Logical Flaw. Throws
/// UnparseableVerdict when no decision can be extracted.
ReviewVerdict parse_verdict(const std::string& critic_text);

/// generate -> review loop with failure feedback, at most max_rounds
/// rounds; rejects through every round (or an unreadable verdict) route
/// the sample to human review. `clock` overrides the timestamp source.
CoTRecord run_pipeline(const SampleInput& sample, AssistantEndpoint& medical,
                       AssistantEndpoint& critic, std::size_t max_rounds,
                       const std::function<std::string()>& clock = {});

struct DatasetManifest {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
    // split name -> modality -> count
    std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::size_t>>>>
        modality_counts;
};

/// Seeded shuffle then contiguous split of the approved records.
DatasetManifest package_dataset(const std::vector<CoTRecord>& records,
                                const std::array<double, 3>& ratios, std::uint64_t seed);

std::string manifest_to_json(const DatasetManifest& manifest);

// Newline-delimited JSON persistence for records.
std::string record_to_json(const CoTRecord& record);
CoTRecord record_from_json(const std::string& line);
void save_records(const std::vector<CoTRecord>& records, const std::filesystem::path& path);
std::vector<CoTRecord> load_records(const std::filesystem::path& path);

// Sample inputs as NDJSON {image_id, question, modality, diagnosis}.
std::vector<SampleInput> load_sample_inputs(const std::filesystem::path& path);

}  // namespace simseg
