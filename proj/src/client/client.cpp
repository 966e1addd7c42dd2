// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/client.hpp"

#include "pii/digest.hpp"
#include "pii/errors.hpp"
#include "pii/image.hpp"

#include "httplib.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <exception>
#include <fstream>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace pii {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(InstructionMode m) {
    switch (m) {
        case InstructionMode::None: return "none";
        case InstructionMode::AnswerInImage: return "answer_in_image";
        case InstructionMode::PlainQuestion: return "plain_question";
        case InstructionMode::DescribeImage: return "describe_image";
    }
    return "unknown";
}

InstructionMode parse_instruction_mode(std::string_view s) {
    if (s == "none") return InstructionMode::None;
    if (s == "answer_in_image") return InstructionMode::AnswerInImage;
    if (s == "plain_question") return InstructionMode::PlainQuestion;
    if (s == "describe_image") return InstructionMode::DescribeImage;
    throw UsageError("unknown instruction_mode '" + std::string(s) + "'");
}

void RunConfig::validate() const {
    const auto mode_is = [&](std::initializer_list<InstructionMode> allowed) {
        return std::find(allowed.begin(), allowed.end(), instruction_mode) != allowed.end();
    };
    bool ok = true;
    switch (condition) {
        case Condition::PromptInImage:
            ok = mode_is({InstructionMode::None, InstructionMode::AnswerInImage});
            break;
        case Condition::Baseline:
        case Condition::Control:
        case Condition::Hybrid:
            ok = mode_is({InstructionMode::PlainQuestion, InstructionMode::DescribeImage});
            break;
    }
    if (!ok) {
        throw ConfigConflict("instruction_mode " + std::string(to_string(instruction_mode)) +
                             " cannot be used with condition " + std::string(to_string(condition)));
    }
    if (parallelism < 1) throw ConfigConflict("parallelism must be at least 1");
    if (retry.max_attempts < 1) throw ConfigConflict("retry.max_attempts must be at least 1");
    if (retry.base_delay_ms < 0 || retry.max_delay_ms < 0) throw ConfigConflict("retry delays must be non-negative");
    if (retry.jitter < 0.0 || retry.jitter > 1.0) throw ConfigConflict("retry.jitter must lie in [0, 1]");
    if (max_tokens < 1) throw ConfigConflict("max_tokens must be at least 1");
    if (!(timeout_s > 0.0)) throw ConfigConflict("timeout_s must be positive");
    if (abort_after_unreachable < 1) throw ConfigConflict("abort_after_unreachable must be at least 1");
    if (endpoint_url.empty()) throw ConfigConflict("endpoint_url is required");
    if (model_name.empty()) throw ConfigConflict("model_name is required");
}

void RunConfig::validate_for(TaskKind task) const {
    validate();
    if (task == TaskKind::PolarQuestion && instruction_mode == InstructionMode::DescribeImage) {
        throw ConfigConflict("describe_image does not apply to polar-question items");
    }
}

// config documents

namespace {

json rgb_json(Rgb c) { return json::array({c.r, c.g, c.b}); }

Rgb rgb_from(const json& j, const char* key) {
    if (!j.is_array() || j.size() != 3) throw UsageError(std::string(key) + " must be [r, g, b]");
    Rgb c;
    c.r = j[0].get<std::uint8_t>();
    c.g = j[1].get<std::uint8_t>();
    c.b = j[2].get<std::uint8_t>();
    return c;
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& where) {
    if (!j.is_object()) throw UsageError(where + " must be an object");
    for (const auto& [k, _] : j.items()) {
        if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; })) {
            throw UsageError("unknown key '" + k + "' in " + where);
        }
    }
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

json to_json(const RenderSpec& s) {
    return {{"font", s.font_identifier},
            {"font_px", s.font_px},
            {"text_color", rgb_json(s.text_color)},
            {"strip_color", rgb_json(s.strip_color)},
            {"target_strip_fraction", s.target_strip_fraction},
            {"padding_px", s.padding_px},
            {"line_gap_px", s.line_gap_px}};
}

RenderSpec render_spec_from_json(const json& j) {
    reject_unknown(j,
                   {"font", "font_px", "text_color", "strip_color", "target_strip_fraction", "padding_px",
                    "line_gap_px"},
                   "render");
    RenderSpec s;
    try {
        read_opt(j, "font", s.font_identifier);
        read_opt(j, "font_px", s.font_px);
        if (j.contains("text_color")) s.text_color = rgb_from(j["text_color"], "text_color");
        if (j.contains("strip_color")) s.strip_color = rgb_from(j["strip_color"], "strip_color");
        read_opt(j, "target_strip_fraction", s.target_strip_fraction);
        read_opt(j, "padding_px", s.padding_px);
        read_opt(j, "line_gap_px", s.line_gap_px);
    } catch (const json::exception& e) {
        throw UsageError(std::string("render: ") + e.what());
    }
    return s;
}

json to_json(const RunConfig& c) {
    json j = {{"endpoint_url", c.endpoint_url},
              {"model_name", c.model_name},
              {"condition", to_string(c.condition)},
              {"instruction_mode", to_string(c.instruction_mode)},
              {"temperature", c.temperature},
              {"max_tokens", c.max_tokens},
              {"seed", c.seed ? json(*c.seed) : json(nullptr)},
              {"parallelism", c.parallelism},
              {"retry",
               {{"max_attempts", c.retry.max_attempts},
                {"base_delay_ms", c.retry.base_delay_ms},
                {"max_delay_ms", c.retry.max_delay_ms},
                {"jitter", c.retry.jitter}}},
              {"timeout_s", c.timeout_s},
              {"system_message", c.system_message ? json(*c.system_message) : json(nullptr)},
              {"api_key_env", c.api_key_env},
              {"abort_after_unreachable", c.abort_after_unreachable},
              {"render", to_json(c.render)}};
    return j;
}

RunConfig run_config_from_json(const json& j) {
    reject_unknown(j,
                   {"endpoint_url", "model_name", "condition", "instruction_mode", "temperature", "max_tokens", "seed",
                    "parallelism", "retry", "timeout_s", "system_message", "api_key_env", "abort_after_unreachable",
                    "render"},
                   "run config");
    RunConfig c;
    try {
        read_opt(j, "endpoint_url", c.endpoint_url);
        read_opt(j, "model_name", c.model_name);
        if (j.contains("condition")) c.condition = parse_condition(j["condition"].get<std::string>());
        if (j.contains("instruction_mode")) {
            c.instruction_mode = parse_instruction_mode(j["instruction_mode"].get<std::string>());
        }
        read_opt(j, "temperature", c.temperature);
        read_opt(j, "max_tokens", c.max_tokens);
        if (j.contains("seed") && !j["seed"].is_null()) c.seed = j["seed"].get<std::int64_t>();
        read_opt(j, "parallelism", c.parallelism);
        if (j.contains("retry")) {
            const auto& r = j["retry"];
            reject_unknown(r, {"max_attempts", "base_delay_ms", "max_delay_ms", "jitter"}, "retry");
            read_opt(r, "max_attempts", c.retry.max_attempts);
            read_opt(r, "base_delay_ms", c.retry.base_delay_ms);
            read_opt(r, "max_delay_ms", c.retry.max_delay_ms);
            read_opt(r, "jitter", c.retry.jitter);
        }
        read_opt(j, "timeout_s", c.timeout_s);
        if (j.contains("system_message") && !j["system_message"].is_null()) {
            c.system_message = j["system_message"].get<std::string>();
        }
        read_opt(j, "api_key_env", c.api_key_env);
        read_opt(j, "abort_after_unreachable", c.abort_after_unreachable);
        if (j.contains("render")) c.render = render_spec_from_json(j["render"]);
    } catch (const json::exception& e) {
        throw UsageError(std::string("run config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError(path.string() + ": " + e.what());
    }
    return run_config_from_json(j);
}

std::string config_digest(const RunConfig& c) {
    json j = {{"endpoint_url", c.endpoint_url},
              {"model_name", c.model_name},
              {"condition", to_string(c.condition)},
              {"instruction_mode", to_string(c.instruction_mode)},
              {"temperature", c.temperature},
              {"max_tokens", c.max_tokens},
              {"seed", c.seed ? json(*c.seed) : json(nullptr)},
              {"system_message", c.system_message ? json(*c.system_message) : json(nullptr)}};
    if (c.condition != Condition::Baseline) {
        j["render"] = to_json(c.render);
        j["render"]["font_digest"] = Font::resolve(c.render.font_identifier)->digest();
    }
    return sha256_hex(j.dump());
}

// requests

std::optional<std::string> user_text_for(const EvalItem& item, const RunConfig& cfg) {
    switch (cfg.instruction_mode) {
        case InstructionMode::None: return std::nullopt;
        case InstructionMode::AnswerInImage: return std::string(kAnswerInImageText);
        case InstructionMode::PlainQuestion:
            if (!item.question) throw ConfigConflict("item " + item.item_id + " has no question for plain_question");
            return *item.question;
        case InstructionMode::DescribeImage: return std::string(kCaptionPrompt);
    }
    return std::nullopt;
}

ChatRequest build_request(const EvalItem& item, const ConditionedImage& img, const RunConfig& cfg) {
    cfg.validate_for(item.task);
    if (img.condition != cfg.condition) {
        throw ConfigConflict("image was conditioned as " + std::string(to_string(img.condition)) + ", run expects " +
                             std::string(to_string(cfg.condition)));
    }
    ChatRequest req;
    req.user_text = user_text_for(item, cfg);
    req.image_hash = img.content_hash;

    const auto png = encode_png(img.pixels);
    json content = json::array();
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
    if (req.user_text) content.push_back({{"type", "text"}, {"text", *req.user_text}});

    json messages = json::array();
    if (cfg.system_message) messages.push_back({{"role", "system"}, {"content", *cfg.system_message}});
    messages.push_back({{"role", "user"}, {"content", std::move(content)}});

    req.body = {{"model", cfg.model_name},
                {"messages", std::move(messages)},
                {"temperature", cfg.temperature},
                {"max_tokens", cfg.max_tokens}};
    if (cfg.seed) req.body["seed"] = *cfg.seed;
    req.serialized = req.body.dump();
    req.digest = sha256_hex(req.serialized);
    return req;
}

std::string response_text(const json& response) try {
    const auto& message = response.at("choices").at(0).at("message");
    const auto& content = message.at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_null()) return {};
    std::string out;
    for (const auto& part : content) {
        if (part.value("type", "") == "text") out += part.value("text", "");
    }
    return out;
} catch (const json::exception& e) {
    throw DataError(std::string("malformed chat completion: ") + e.what());
}

ConditionedImage default_image_provider(const EvalItem& item, const RunConfig& cfg) {
    return render_condition(load_image(item.image_path), item.question.value_or(""), cfg.condition, cfg.render);
}

// campaign runner

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw UsageError("endpoint_url must be an http(s) URL: " + url);
    Endpoint e{m[1].str(), m[2].matched ? m[2].str() : ""};
    while (!e.path.empty() && e.path.back() == '/') e.path.pop_back();
    if (e.path.empty()) e.path = "/v1";
    constexpr std::string_view kSuffix = "/chat/completions";
    if (e.path.size() < kSuffix.size() || e.path.compare(e.path.size() - kSuffix.size(), kSuffix.size(), kSuffix) != 0) {
        e.path += kSuffix;
    }
    return e;
}

struct Outcome {
    Transcript transcript;
    bool unreachable = false;
    bool auth_rejected = false;
    std::string auth_message;
};

int backoff_ms(const RetryPolicy& p, int retry, SplitMix64& rng) {
    const double base = std::min(static_cast<double>(p.max_delay_ms),
                                 static_cast<double>(p.base_delay_ms) * std::ldexp(1.0, retry - 1));
    const double u = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;  // [0, 1)
    return static_cast<int>(std::lround(base * (1.0 + p.jitter * (2.0 * u - 1.0))));
}

std::uint64_t seed_from(const std::string& id) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : id) h = (h ^ c) * 1099511628211ULL;
    return h;
}

class Runner {
public:
    Runner(const std::vector<const EvalItem*>& work, const RunConfig& cfg, const RunOptions& opts, fs::path log)
        : work_(work), cfg_(cfg), opts_(opts), log_path_(std::move(log)), endpoint_(parse_endpoint(cfg.endpoint_url)) {
        if (!opts_.image_provider) opts_.image_provider = default_image_provider;
        if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key) api_key_ = key;
    }

    RunLog run() {
        RunLog log;
        log.transcripts_path = log_path_;
        std::ofstream out(log_path_, std::ios::binary | std::ios::app);
        if (!out) throw IoError("cannot open " + log_path_.string() + " for appending");

        const int n_workers = static_cast<int>(std::min<std::size_t>(cfg_.parallelism, std::max<std::size_t>(work_.size(), 1)));
        active_ = n_workers;
        std::vector<std::thread> workers;
        for (int i = 0; i < n_workers; ++i) workers.emplace_back([this] { worker(); });

        std::vector<Transcript> pending_unreachable;
        std::exception_ptr failure;
        const auto persist = [&](const Transcript& t) {
            out << transcript_to_jsonl(t) << '\n';
            out.flush();
            if (!out) throw IoError("write failed for " + log_path_.string());
            (t.status == TranscriptStatus::Ok ? log.ok : log.failed) += 1;
            if (opts_.on_transcript) opts_.on_transcript(t);
        };

        try {
            for (;;) {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [&] { return !queue_.empty() || active_ == 0; });
                if (queue_.empty()) break;
                Outcome o = std::move(queue_.front());
                queue_.pop_front();
                lock.unlock();

                if (o.auth_rejected) throw AuthRejected(o.auth_message);
                if (o.unreachable) {
                    pending_unreachable.push_back(std::move(o.transcript));
                    if (static_cast<int>(pending_unreachable.size()) >= cfg_.abort_after_unreachable) {
                        // these items stay unrecorded so that a resume sends them again
                        throw EndpointUnreachable("no connection to " + cfg_.endpoint_url + " for " +
                                                  std::to_string(pending_unreachable.size()) +
                                                  " consecutive items: " + pending_unreachable.back().raw_response);
                    }
                    continue;
                }
                for (const auto& t : pending_unreachable) persist(t);
                pending_unreachable.clear();
                persist(o.transcript);
            }
            if (worker_error_) std::rethrow_exception(worker_error_);
            for (const auto& t : pending_unreachable) persist(t);
        } catch (...) {
            failure = std::current_exception();
        }
        stop_ = true;
        for (auto& w : workers) w.join();
        if (!failure && worker_error_) failure = worker_error_;
        log.requests_issued = requests_.load();
        if (failure) std::rethrow_exception(failure);
        return log;
    }

private:
    void worker() {
        httplib::Client client(endpoint_.origin);
        const auto secs = static_cast<time_t>(cfg_.timeout_s);
        const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        client.set_keep_alive(true);
        if (!api_key_.empty()) client.set_bearer_token_auth(api_key_);

        for (;;) {
            if (stop_) break;
            const std::size_t i = next_.fetch_add(1);
            if (i >= work_.size()) break;
            Outcome o;
            try {
                o = process(client, *work_[i]);
            } catch (...) {
                std::lock_guard lock(mu_);
                if (!worker_error_) worker_error_ = std::current_exception();
                stop_ = true;
                break;
            }
            std::lock_guard lock(mu_);
            queue_.push_back(std::move(o));
            cv_.notify_one();
        }
        std::lock_guard lock(mu_);
        --active_;
        cv_.notify_one();
    }

    bool sleep_unless_stopped(int ms) {
        const auto until = std::chrono::steady_clock::now() + std::chrono::milliseconds(ms);
        while (std::chrono::steady_clock::now() < until) {
            if (stop_) return false;
            std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(
                std::chrono::milliseconds(20), until - std::chrono::steady_clock::now()));
        }
        return !stop_;
    }

    Outcome process(httplib::Client& client, const EvalItem& item) {
        const ConditionedImage img = opts_.image_provider(item, cfg_);
        const ChatRequest req = build_request(item, img, cfg_);

        Outcome o;
        Transcript& t = o.transcript;
        t.item_id = item.item_id;
        t.condition = cfg_.condition;
        t.request_digest = req.digest;
        t.user_text_sent = req.user_text;
        t.image_hash = req.image_hash;
        t.status = TranscriptStatus::Failed;

        SplitMix64 rng(seed_from(item.item_id));
        bool every_attempt_unreachable = true;
        for (int attempt = 1; attempt <= cfg_.retry.max_attempts; ++attempt) {
            if (attempt > 1 && !sleep_unless_stopped(backoff_ms(cfg_.retry, attempt - 1, rng))) break;
            t.attempt_count = attempt;
            const auto t0 = std::chrono::steady_clock::now();
            ++requests_;
            auto res = client.Post(endpoint_.path, req.serialized, "application/json");
            t.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

            if (!res) {
                const auto err = res.error();
                if (err != httplib::Error::Connection) every_attempt_unreachable = false;
                t.raw_response = "transport error: " + httplib::to_string(err);
                continue;
            }
            every_attempt_unreachable = false;
            const int status = res->status;
            if (status == 401 || status == 403) {
                o.auth_rejected = true;
                o.auth_message = "endpoint rejected credentials (HTTP " + std::to_string(status) + ")";
                return o;
            }
            if (status >= 200 && status < 300) {
                try {
                    t.raw_response = response_text(json::parse(res->body));
                    t.status = TranscriptStatus::Ok;
                } catch (const std::exception& e) {
                    t.raw_response = std::string("unreadable response: ") + e.what();
                }
                return o;
            }
            t.raw_response = "HTTP " + std::to_string(status) + ": " + res->body.substr(0, 512);
            if (status != 429 && status < 500) return o;
        }
        o.unreachable = every_attempt_unreachable && t.attempt_count > 0;
        return o;
    }

    const std::vector<const EvalItem*>& work_;
    const RunConfig& cfg_;
    RunOptions opts_;
    fs::path log_path_;
    Endpoint endpoint_;
    std::string api_key_;

    std::atomic<std::size_t> next_{0};
    std::atomic<std::size_t> requests_{0};
    std::atomic<bool> stop_{false};
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Outcome> queue_;
    int active_ = 0;
    std::exception_ptr worker_error_;
};

void check_items(const std::vector<EvalItem>& items, const RunConfig& cfg) {
    cfg.validate();
    std::unordered_set<std::string> seen;
    std::vector<std::string> dups;
    for (const auto& it : items) {
        cfg.validate_for(it.task);
        if (!seen.insert(it.item_id).second) dups.push_back(it.item_id);
    }
    if (!dups.empty()) throw MalformedRecord({"duplicate item_id values: " + dups.front() + (dups.size() > 1 ? ", ..." : "")});
}

void write_run_file(const fs::path& run_dir, const RunConfig& cfg) {
    const json j = {{"config", to_json(cfg)}, {"config_digest", config_digest(cfg)}};
    const fs::path tmp = run_dir / (std::string(kRunFile) + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << j.dump(2) << '\n';
    }
    fs::rename(tmp, run_dir / kRunFile);
}

// Drops an interrupted final record so new lines start on a fresh line.
void truncate_partial_line(const fs::path& log) {
    if (!fs::exists(log)) return;
    std::ifstream in(log, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const std::size_t keep = content.empty() ? 0 : content.rfind('\n') == std::string::npos ? 0 : content.rfind('\n') + 1;
    if (keep != content.size()) fs::resize_file(log, keep);
}

}  // namespace

std::string recorded_config_digest(const fs::path& run_dir) {
    std::ifstream in(run_dir / kRunFile);
    if (!in) throw DataError("no " + std::string(kRunFile) + " in " + run_dir.string());
    try {
        return json::parse(in).at("config_digest").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError((run_dir / kRunFile).string() + ": " + e.what());
    }
}

RunLog execute_run(const std::vector<EvalItem>& items, const RunConfig& cfg, const fs::path& run_dir,
                   const RunOptions& options) {
    check_items(items, cfg);
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec) throw IoError("cannot create " + run_dir.string() + ": " + ec.message());
    if (fs::exists(run_dir / kRunFile) || fs::exists(run_dir / kTranscriptsFile)) {
        throw UsageError(run_dir.string() + " already holds a run; resume it instead");
    }
    write_run_file(run_dir, cfg);
    std::ofstream(run_dir / kTranscriptsFile, std::ios::binary).close();

    std::vector<const EvalItem*> work;
    for (const auto& it : items) work.push_back(&it);
    Runner runner(work, cfg, options, run_dir / kTranscriptsFile);
    return runner.run();
}

RunLog resume_run(const fs::path& run_dir, const std::vector<EvalItem>& items, const RunConfig& cfg,
                  const RunOptions& options) {
    check_items(items, cfg);
    const std::string recorded = recorded_config_digest(run_dir);
    if (recorded != config_digest(cfg)) {
        throw ConfigMismatch("config digest " + config_digest(cfg).substr(0, 12) + " differs from the run's " +
                             recorded.substr(0, 12));
    }
    const fs::path log_path = run_dir / kTranscriptsFile;
    truncate_partial_line(log_path);

    std::set<std::string> done;
    if (fs::exists(log_path)) {
        for (const auto& t : read_transcripts(log_path)) done.insert(t.item_id);
    }
    std::vector<const EvalItem*> work;
    std::size_t skipped = 0;
    for (const auto& it : items) {
        if (done.count(it.item_id)) {
            ++skipped;
        } else {
            work.push_back(&it);
        }
    }
    Runner runner(work, cfg, options, log_path);
    RunLog log = runner.run();
    log.skipped = skipped;
    return log;
}

}  // namespace pii
