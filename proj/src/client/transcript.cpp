// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/transcript.hpp"

#include "pii/errors.hpp"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace pii {

using nlohmann::json;

std::string transcript_to_jsonl(const Transcript& t) {
    json j;
    j["item_id"] = t.item_id;
    j["condition"] = to_string(t.condition);
    j["request_digest"] = t.request_digest;
    j["user_text_sent"] = t.user_text_sent ? json(*t.user_text_sent) : json(nullptr);
    j["image_hash"] = t.image_hash;
    j["raw_response"] = t.raw_response;
    j["latency_ms"] = t.latency_ms;
    j["attempt_count"] = t.attempt_count;
    j["status"] = t.status == TranscriptStatus::Ok ? "ok" : "failed";
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

Transcript transcript_from_jsonl(const std::string& line) {
    const json j = json::parse(line);
    Transcript t;
    t.item_id = j.at("item_id").get<std::string>();
    t.condition = parse_condition(j.at("condition").get<std::string>());
    t.request_digest = j.at("request_digest").get<std::string>();
    if (!j.at("user_text_sent").is_null()) t.user_text_sent = j["user_text_sent"].get<std::string>();
    t.image_hash = j.at("image_hash").get<std::string>();
    t.raw_response = j.at("raw_response").get<std::string>();
    t.latency_ms = j.at("latency_ms").get<double>();
    t.attempt_count = j.at("attempt_count").get<int>();
    const auto status = j.at("status").get<std::string>();
    if (status == "ok") {
        t.status = TranscriptStatus::Ok;
    } else if (status == "failed") {
        t.status = TranscriptStatus::Failed;
    } else {
        throw DataError("unknown transcript status '" + status + "'");
    }
    return t;
}

std::vector<Transcript> read_transcripts(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open transcripts " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string content = buf.str();

    std::vector<Transcript> out;
    std::vector<std::string> malformed;
    std::size_t start = 0;
    for (std::size_t lineno = 1;; ++lineno) {
        const std::size_t nl = content.find('\n', start);
        if (nl == std::string::npos) break;  // missing newline: incomplete trailing record
        const std::string line = content.substr(start, nl - start);
        start = nl + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(transcript_from_jsonl(line));
        } catch (const std::exception& e) {
            malformed.push_back(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!malformed.empty()) throw MalformedRecord(std::move(malformed));
    return out;
}

}  // namespace pii
