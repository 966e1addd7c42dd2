// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "mock_server.hpp"
#include "pii/client.hpp"
#include "pii/digest.hpp"
#include "pii/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

namespace fs = std::filesystem;
using nlohmann::json;

namespace pii {
namespace {

using testing::MockReply;
using testing::MockServer;

std::vector<EvalItem> polar_items(std::size_t n) {
    std::vector<EvalItem> items;
    for (std::size_t i = 0; i < n; ++i) {
        EvalItem it;
        it.item_id = "q" + std::to_string(i);
        it.image_path = "img.png";
        it.question = "Is there a dog in the image? #" + std::to_string(i);
        it.gold_polar = i % 2 ? Polar::No : Polar::Yes;
        items.push_back(it);
    }
    return items;
}

RunOptions tiny_images() {
    RunOptions o;
    o.image_provider = [](const EvalItem&, const RunConfig& cfg) {
        return render_condition(RgbImage(8, 8, Rgb{10, 20, 30}), "", cfg.condition, cfg.render);
    };
    return o;
}

RunConfig config_for(const std::string& url) {
    RunConfig c;
    c.endpoint_url = url;
    c.model_name = "mock-vlm";
    c.temperature = 0.0;
    c.seed = 1;
    c.parallelism = 4;
    c.retry.base_delay_ms = 1;
    c.retry.max_delay_ms = 4;
    c.timeout_s = 10;
    c.api_key_env = "PII_TEST_NO_SUCH_KEY";
    return c;
}

MockServer::Behavior echo() {
    return [](const json& body, int) { return MockReply{200, MockServer::deterministic_answer(body.dump())}; };
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("pii_client_" + name)) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::map<std::string, Transcript> by_id(const fs::path& run_dir) {
    std::map<std::string, Transcript> out;
    for (auto& t : read_transcripts(run_dir / kTranscriptsFile)) out.emplace(t.item_id, t);
    return out;
}

TEST(Config, ConditionModeRules) {
    RunConfig c = config_for("http://x/v1");
    EXPECT_NO_THROW(c.validate());
    c.condition = Condition::PromptInImage;
    EXPECT_THROW(c.validate(), ConfigConflict);
    c.instruction_mode = InstructionMode::AnswerInImage;
    EXPECT_NO_THROW(c.validate());
    c.instruction_mode = InstructionMode::None;
    EXPECT_NO_THROW(c.validate());
    c.condition = Condition::Hybrid;
    EXPECT_THROW(c.validate(), ConfigConflict);
    c.instruction_mode = InstructionMode::DescribeImage;
    EXPECT_NO_THROW(c.validate());
    EXPECT_THROW(c.validate_for(TaskKind::PolarQuestion), ConfigConflict);
    EXPECT_NO_THROW(c.validate_for(TaskKind::Caption));
    c = config_for("http://x/v1");
    c.parallelism = 0;
    EXPECT_THROW(c.validate(), ConfigConflict);
    c = config_for("http://x/v1");
    c.retry.max_attempts = 0;
    EXPECT_THROW(c.validate(), ConfigConflict);
}

TEST(Config, JsonIsStrictAndRoundTrips) {
    RunConfig c = config_for("http://x/v1");
    c.system_message = "be brief";
    c.render.font_px = 30;
    const auto back = run_config_from_json(to_json(c));
    EXPECT_EQ(config_digest(back), config_digest(c));
    EXPECT_EQ(back.system_message, c.system_message);
    EXPECT_EQ(back.render.font_px, 30);
    auto j = to_json(c);
    j["temprature"] = 0.1;
    EXPECT_THROW(run_config_from_json(j), UsageError);
    j = to_json(c);
    j["retry"]["tries"] = 1;
    EXPECT_THROW(run_config_from_json(j), UsageError);
    j = to_json(c);
    j["condition"] = "grayscale";
    EXPECT_THROW(run_config_from_json(j), UsageError);
}

TEST(Config, DigestCoversRequestFieldsOnly) {
    const RunConfig c = config_for("http://x/v1");
    const auto d = config_digest(c);
    EXPECT_EQ(d.size(), 64u);
    RunConfig other = c;
    other.parallelism = 16;
    other.retry.max_attempts = 9;
    other.timeout_s = 3;
    EXPECT_EQ(config_digest(other), d);
    other = c;
    other.temperature = 0.2;
    EXPECT_NE(config_digest(other), d);
    other = c;
    other.seed.reset();
    EXPECT_NE(config_digest(other), d);
    other = c;
    other.render.font_px = 40;
    EXPECT_EQ(config_digest(other), d);
    other.condition = Condition::Control;
    RunConfig control = c;
    control.condition = Condition::Control;
    EXPECT_NE(config_digest(other), config_digest(control));
}

TEST(Request, PlainQuestionCarriesImageAndText) {
    const auto cfg = config_for("http://x/v1");
    const auto item = polar_items(1)[0];
    const auto img = tiny_images().image_provider(item, cfg);
    const auto r = build_request(item, img, cfg);
    EXPECT_EQ(r.body["model"], "mock-vlm");
    const auto& content = r.body["messages"][0]["content"];
    ASSERT_EQ(content.size(), 2u);
    EXPECT_EQ(content[0]["type"], "image_url");
    const std::string url = content[0]["image_url"]["url"];
    EXPECT_EQ(url.rfind("data:image/png;base64,", 0), 0u);
    EXPECT_EQ(content[1]["text"], *item.question);
    EXPECT_EQ(r.user_text, item.question);
    EXPECT_EQ(r.image_hash, img.content_hash);
    EXPECT_EQ(r.serialized, r.body.dump());
    EXPECT_EQ(r.digest, sha256_hex(r.serialized));
    EXPECT_EQ(build_request(item, img, cfg).serialized, r.serialized);
    EXPECT_EQ(r.body["temperature"], 0.0);
    EXPECT_EQ(r.body["seed"], 1);
}

TEST(Request, PromptInImageModes) {
    auto cfg = config_for("http://x/v1");
    cfg.condition = Condition::PromptInImage;
    cfg.instruction_mode = InstructionMode::None;
    const auto item = polar_items(1)[0];
    const auto img = render_condition(RgbImage(320, 240, Rgb{90, 160, 220}), *item.question, cfg.condition, cfg.render);
    auto r = build_request(item, img, cfg);
    EXPECT_EQ(r.body["messages"][0]["content"].size(), 1u);
    EXPECT_FALSE(r.user_text);
    cfg.instruction_mode = InstructionMode::AnswerInImage;
    cfg.system_message = "sys";
    r = build_request(item, img, cfg);
    EXPECT_EQ(r.body["messages"][0]["role"], "system");
    EXPECT_EQ(r.body["messages"][1]["content"][1]["text"], std::string(kAnswerInImageText));
    const auto baseline_img = render_condition(RgbImage(8, 8), "", Condition::Baseline, cfg.render);
    EXPECT_THROW(build_request(item, baseline_img, cfg), ConfigConflict);
}

TEST(Response, TextExtraction) {
    EXPECT_EQ(response_text(json::parse(R"({"choices":[{"message":{"content":"Yes."}}]})")), "Yes.");
    EXPECT_EQ(response_text(json::parse(R"({"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]})")),
              "ab");
    EXPECT_THROW(response_text(json::parse(R"({"choices":[]})")), DataError);
}

TEST(Harness, ConcurrencyCapHolds) {
    MockServer server(echo(), 3);
    auto cfg = config_for(server.url());
    cfg.parallelism = 6;
    TempDir dir("cap");
    const auto log = execute_run(polar_items(500), cfg, dir.path, tiny_images());
    EXPECT_EQ(log.ok, 500u);
    EXPECT_EQ(server.requests(), 500u);
    EXPECT_LE(server.max_in_flight(), 6);
    EXPECT_GE(server.max_in_flight(), 1);
}

TEST(Harness, RetryThenSucceed) {
    MockServer server([](const json& body, int attempt) {
        return attempt < 3 ? MockReply{503, "busy"} : MockReply{200, MockServer::deterministic_answer(body.dump())};
    });
    TempDir dir("retry");
    const auto log = execute_run(polar_items(1), config_for(server.url()), dir.path, tiny_images());
    EXPECT_EQ(log.ok, 1u);
    EXPECT_EQ(log.requests_issued, 3u);
    const auto t = by_id(dir.path).at("q0");
    EXPECT_EQ(t.attempt_count, 3);
    EXPECT_EQ(t.status, TranscriptStatus::Ok);
}

TEST(Harness, PersistentFailureIsRecordedAndRunContinues) {
    MockServer server([](const json& body, int) {
        const std::string text = body["messages"][0]["content"][1]["text"];
        return text.ends_with("#1") ? MockReply{500, "boom"} : MockReply{200, "Yes"};
    });
    auto cfg = config_for(server.url());
    cfg.retry.max_attempts = 2;
    TempDir dir("fail");
    const auto log = execute_run(polar_items(3), cfg, dir.path, tiny_images());
    EXPECT_EQ(log.ok, 2u);
    EXPECT_EQ(log.failed, 1u);
    const auto all = by_id(dir.path);
    EXPECT_EQ(all.at("q1").status, TranscriptStatus::Failed);
    EXPECT_EQ(all.at("q1").attempt_count, 2);
    EXPECT_EQ(all.at("q2").status, TranscriptStatus::Ok);
}

TEST(Harness, ClientErrorIsNotRetried) {
    MockServer server([](const json&, int) { return MockReply{400, "bad request"}; });
    TempDir dir("400");
    const auto log = execute_run(polar_items(2), config_for(server.url()), dir.path, tiny_images());
    EXPECT_EQ(log.failed, 2u);
    EXPECT_EQ(server.requests(), 2u);
}

TEST(Harness, EmptyItemList) {
    MockServer server(echo());
    TempDir dir("empty");
    const auto log = execute_run({}, config_for(server.url()), dir.path, tiny_images());
    EXPECT_EQ(log.ok + log.failed, 0u);
    EXPECT_EQ(server.requests(), 0u);
    EXPECT_TRUE(fs::exists(dir.path / kTranscriptsFile));
    EXPECT_TRUE(read_transcripts(dir.path / kTranscriptsFile).empty());
}

TEST(Harness, RejectsDuplicateIdsAndExistingRun) {
    MockServer server(echo());
    TempDir dir("dup");
    auto items = polar_items(2);
    items[1].item_id = items[0].item_id;
    EXPECT_THROW(execute_run(items, config_for(server.url()), dir.path, tiny_images()), MalformedRecord);
    execute_run(polar_items(1), config_for(server.url()), dir.path, tiny_images());
    EXPECT_THROW(execute_run(polar_items(1), config_for(server.url()), dir.path, tiny_images()), UsageError);
}

TEST(Harness, ResumeSendsOnlyMissingItems) {
    MockServer server(echo());
    const auto cfg = config_for(server.url());
    const auto items = polar_items(1000);

    TempDir full("full");
    execute_run(items, cfg, full.path, tiny_images());
    const auto reference = by_id(full.path);
    ASSERT_EQ(reference.size(), 1000u);

    // Simulate a crash after 600 transcripts, mid-way through writing the 601st.
    TempDir cut("cut");
    fs::create_directories(cut.path);
    fs::copy_file(full.path / kRunFile, cut.path / kRunFile);
    {
        std::ifstream in(full.path / kTranscriptsFile);
        std::ofstream out(cut.path / kTranscriptsFile, std::ios::binary);
        std::string line;
        for (int i = 0; i < 600 && std::getline(in, line); ++i) out << line << '\n';
        std::getline(in, line);
        out << line.substr(0, line.size() / 2);
    }
    server.reset_counters();
    const auto log = resume_run(cut.path, items, cfg, tiny_images());
    EXPECT_EQ(server.requests(), 400u);
    EXPECT_EQ(log.skipped, 600u);
    EXPECT_EQ(log.ok, 400u);

    const auto resumed = by_id(cut.path);
    ASSERT_EQ(resumed.size(), 1000u);
    for (const auto& [id, t] : reference) {
        const auto& r = resumed.at(id);
        EXPECT_EQ(r.request_digest, t.request_digest);
        EXPECT_EQ(r.raw_response, t.raw_response);
        EXPECT_EQ(r.status, t.status);
    }

    server.reset_counters();
    const auto again = resume_run(cut.path, items, cfg, tiny_images());
    EXPECT_EQ(server.requests(), 0u);
    EXPECT_EQ(again.skipped, 1000u);
}

TEST(Harness, ResumeRejectsChangedConfig) {
    MockServer server(echo());
    auto cfg = config_for(server.url());
    TempDir dir("mismatch");
    execute_run(polar_items(3), cfg, dir.path, tiny_images());
    EXPECT_EQ(recorded_config_digest(dir.path), config_digest(cfg));
    cfg.temperature = 0.9;
    EXPECT_THROW(resume_run(dir.path, polar_items(3), cfg, tiny_images()), ConfigMismatch);
}

TEST(Harness, AuthRejectionStopsTheRun) {
    MockServer server([](const json&, int) { return MockReply{401, "no"}; });
    TempDir dir("auth");
    EXPECT_THROW(execute_run(polar_items(5), config_for(server.url()), dir.path, tiny_images()), AuthRejected);
}

TEST(Harness, UnreachableEndpoint) {
    int port = 0;
    {
        MockServer probe(echo());
        const auto url = probe.url();
        port = std::stoi(url.substr(url.rfind(':') + 1));
    }
    auto cfg = config_for("http://127.0.0.1:" + std::to_string(port) + "/v1");
    cfg.retry.max_attempts = 2;
    cfg.abort_after_unreachable = 3;
    TempDir dir("unreachable");
    EXPECT_THROW(execute_run(polar_items(10), cfg, dir.path, tiny_images()), EndpointUnreachable);
}

}  // namespace
}  // namespace pii
