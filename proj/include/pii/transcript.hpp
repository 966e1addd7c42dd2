// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pii/conditioner.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace pii {

enum class TranscriptStatus { Ok, Failed };

/// Persisted record of one model call. One JSON object per line in a run's transcripts file.
struct Transcript {
    std::string item_id;
    Condition condition = Condition::Baseline;
    std::string request_digest;
    std::optional<std::string> user_text_sent;
    std::string image_hash;
    std::string raw_response;
    double latency_ms = 0.0;
    int attempt_count = 0;
    TranscriptStatus status = TranscriptStatus::Ok;

    friend bool operator==(const Transcript&, const Transcript&) = default;
};

std::string transcript_to_jsonl(const Transcript& t);
Transcript transcript_from_jsonl(const std::string& line);

/// Reads every complete line. A trailing line without '\n' (interrupted write) is ignored.
std::vector<Transcript> read_transcripts(const std::filesystem::path& path);

}  // namespace pii
