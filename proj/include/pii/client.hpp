// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "json.hpp"
#include "pii/conditioner.hpp"
#include "pii/corpus.hpp"
#include "pii/transcript.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pii {

enum class InstructionMode { None, AnswerInImage, PlainQuestion, DescribeImage };

std::string_view to_string(InstructionMode m);
InstructionMode parse_instruction_mode(std::string_view s);

inline constexpr std::string_view kAnswerInImageText = "Answer the questions in the image.";

struct RetryPolicy {
    int max_attempts = 3;
    /// Delay before retry k (1-based) is min(max_delay_ms, base_delay_ms * 2^(k-1)), scaled by 1 +/- jitter.
    int base_delay_ms = 1000;
    int max_delay_ms = 30000;
    double jitter = 0.25;
};

struct RunConfig {
    std::string endpoint_url;
    std::string model_name;
    Condition condition = Condition::Baseline;
    InstructionMode instruction_mode = InstructionMode::PlainQuestion;
    double temperature = 0.7;
    int max_tokens = 512;
    std::optional<std::int64_t> seed;
    int parallelism = 4;
    RetryPolicy retry;
    double timeout_s = 120.0;
    std::optional<std::string> system_message;
    /// Environment variable holding the bearer token. Unset or empty means no Authorization header.
    std::string api_key_env = "OPENAI_API_KEY";
    /// The run stops with EndpointUnreachable after this many consecutive items that never connected.
    int abort_after_unreachable = 5;
    RenderSpec render;

    /// Throws ConfigConflict when the condition, instruction mode and limits do not fit together.
    void validate() const;
    /// Also rejects combinations that make no sense for the item's task.
    void validate_for(TaskKind task) const;
};

nlohmann::json to_json(const RenderSpec& spec);
RenderSpec render_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& cfg);
/// Strict: unknown keys raise UsageError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

/// SHA-256 over every field that changes what is sent to the model. Parallelism, retry,
/// timeout and credentials are excluded.
std::string config_digest(const RunConfig& cfg);

/// User text the instruction mode puts next to the image, or nullopt for None.
std::optional<std::string> user_text_for(const EvalItem& item, const RunConfig& cfg);

struct ChatRequest {
    nlohmann::json body;
    std::string serialized;  // body.dump()
    std::string digest;  // SHA-256 of `serialized`
    std::optional<std::string> user_text;
    std::string image_hash;
};

/// Pure function of its inputs. The image travels as a data:image/png;base64 URL.
ChatRequest build_request(const EvalItem& item, const ConditionedImage& img, const RunConfig& cfg);

/// Text of the first choice. Content given as a list of parts is concatenated.
std::string response_text(const nlohmann::json& response);

struct RunLog {
    std::size_t ok = 0;
    std::size_t failed = 0;
    /// Items already present in the log before this call.
    std::size_t skipped = 0;
    /// HTTP attempts made, retries included.
    std::size_t requests_issued = 0;
    std::filesystem::path transcripts_path;
};

struct RunOptions {
    /// Produces the conditioned image for an item. Defaults to loading item.image_path and
    /// rendering cfg.condition.
    std::function<ConditionedImage(const EvalItem&, const RunConfig&)> image_provider;
    /// Called from the writer thread after each transcript is persisted.
    std::function<void(const Transcript&)> on_transcript;
};

inline constexpr std::string_view kTranscriptsFile = "transcripts.jsonl";
inline constexpr std::string_view kRunFile = "run.json";

/// Starts a campaign in `run_dir`, which must not hold a previous run.
RunLog execute_run(const std::vector<EvalItem>& items, const RunConfig& cfg, const std::filesystem::path& run_dir,
                   const RunOptions& options = {});

/// Continues the campaign in `run_dir`. Only items without a transcript are sent; failed
/// transcripts are terminal. Throws ConfigMismatch when the config digest differs.
RunLog resume_run(const std::filesystem::path& run_dir, const std::vector<EvalItem>& items, const RunConfig& cfg,
                  const RunOptions& options = {});

/// Digest recorded in run_dir/run.json.
std::string recorded_config_digest(const std::filesystem::path& run_dir);

ConditionedImage default_image_provider(const EvalItem& item, const RunConfig& cfg);

}  // namespace pii
