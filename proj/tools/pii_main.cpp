// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

// pii: condition images, build corpora, run campaigns, score, diagnose and report.

#include "CLI11.hpp"
#include "json.hpp"
#include "pii/client.hpp"
#include "pii/conditioner.hpp"
#include "pii/corpus.hpp"
#include "pii/diagnostics.hpp"
#include "pii/errors.hpp"
#include "pii/image.hpp"
#include "pii/metrics.hpp"
#include "pii/report.hpp"
#include "pii/svg.hpp"
#include "pii/tensor_io.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw pii::UsageError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw pii::UsageError(path.string() + ": " + e.what());
    }
}

std::vector<std::string> split_csv_arg(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

std::vector<std::size_t> parse_layers(const std::string& s) {
    std::vector<std::size_t> out;
    for (const auto& p : split_csv_arg(s)) {
        try {
            const long v = std::stol(p);
            if (v < 1) throw std::out_of_range("layer");
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw pii::UsageError("bad layer number '" + p + "' (layers are 1-based)");
        }
    }
    return out;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw pii::IoError("cannot create " + dir.string() + ": " + ec.message());
}

// condition

struct QuestionRecord {
    std::string item_id;
    fs::path image;
    std::optional<std::string> question;
};

std::vector<QuestionRecord> read_questions(const fs::path& file, const fs::path& image_dir) {
    std::ifstream in(file);
    if (!in) throw pii::UsageError("cannot open questions file " + file.string());
    std::vector<QuestionRecord> out;
    std::vector<std::string> bad;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const json j = json::parse(line);
            QuestionRecord r;
            std::string img;
            for (const char* k : {"image_path", "image", "image_file"}) {
                if (j.contains(k)) {
                    img = j[k].get<std::string>();
                    break;
                }
            }
            if (img.empty()) throw std::runtime_error("no image field");
            r.image = fs::path(img).is_absolute() ? fs::path(img) : image_dir / fs::path(img).filename();
            for (const char* k : {"question", "text"}) {
                if (j.contains(k) && !j[k].is_null()) {
                    r.question = j[k].get<std::string>();
                    break;
                }
            }
            for (const char* k : {"item_id", "question_id", "id"}) {
                if (j.contains(k)) {
                    r.item_id = j[k].is_string() ? j[k].get<std::string>() : j[k].dump();
                    break;
                }
            }
            if (r.item_id.empty()) r.item_id = "line-" + std::to_string(lineno);
            out.push_back(std::move(r));
        } catch (const std::exception& e) {
            bad.push_back(file.string() + " line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!bad.empty()) throw pii::MalformedRecord(std::move(bad));
    return out;
}

struct ConditionJob {
    const QuestionRecord* record;
    pii::Condition mode;
    fs::path output;
};

int cmd_condition(const std::string& images_dir, const std::string& questions, const std::string& mode_arg,
                  const std::string& out_dir, pii::RenderSpec spec) {
    spec.validate();
    std::vector<pii::Condition> modes;
    if (mode_arg == "all") {
        modes = {pii::Condition::Baseline, pii::Condition::Control, pii::Condition::PromptInImage,
                 pii::Condition::Hybrid};
    } else {
        modes = {pii::parse_condition(mode_arg)};
    }

    std::vector<QuestionRecord> records;
    if (!questions.empty()) {
        records = read_questions(questions, images_dir);
    } else {
        for (const auto& e : fs::directory_iterator(images_dir)) {
            const auto ext = e.path().extension().string();
            if (e.is_regular_file() && (ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".PNG" ||
                                        ext == ".JPG" || ext == ".JPEG")) {
                records.push_back({e.path().stem().string(), e.path(), std::nullopt});
            }
        }
        std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.image < b.image; });
    }
    std::vector<std::string> missing;
    for (const auto& r : records) {
        if (!fs::exists(r.image)) missing.push_back(r.image.string());
    }
    if (!missing.empty()) throw pii::MissingImage(std::move(missing));

    std::map<fs::path, std::size_t> per_image;
    for (const auto& r : records) ++per_image[r.image];
    std::map<fs::path, std::size_t> seen;
    std::set<fs::path> baseline_done;
    std::vector<ConditionJob> jobs;
    for (const auto& r : records) {
        const std::size_t k = ++seen[r.image];
        const std::string stem = r.image.stem().string();
        for (auto m : modes) {
            if (pii::carries_text(m) && !r.question) {
                throw pii::UsageError("mode " + std::string(pii::to_string(m)) + " needs a question for " +
                                      r.image.string());
            }
            std::string name = stem;
            if (m == pii::Condition::Baseline) {
                if (!baseline_done.insert(r.image).second) continue;
            } else if (per_image[r.image] > 1) {
                name += "_q" + std::to_string(k);
            }
            jobs.push_back({&r, m, fs::path(out_dir) / (name + "." + std::string(pii::to_string(m)) + ".png")});
        }
    }

    ensure_dir(out_dir);
    std::vector<json> manifest(jobs.size());
    std::vector<std::string> errors(jobs.size());
    const long n = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        const auto& job = jobs[static_cast<std::size_t>(i)];
        try {
            const auto src = pii::load_image(job.record->image);
            const auto img = pii::render_condition(src, job.record->question.value_or(""), job.mode, spec);
            pii::write_png(img.pixels, job.output);
            json rec = {{"source", job.record->image.string()},
                        {"mode", pii::to_string(job.mode)},
                        {"output", job.output.string()},
                        {"item_id", job.record->item_id},
                        {"question", job.record->question ? json(*job.record->question) : json(nullptr)},
                        {"width", img.pixels.width()},
                        {"height", img.pixels.height()},
                        {"strip_h", img.geometry.strip_h},
                        {"achieved_fraction", img.geometry.achieved_fraction},
                        {"exceeds_target", img.geometry.exceeds_target},
                        {"lines", img.geometry.lines},
                        {"content_hash", img.content_hash},
                        {"font", img.geometry.font_name},
                        {"font_digest", img.geometry.font_digest}};
            manifest[static_cast<std::size_t>(i)] = std::move(rec);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = job.output.string() + ": " + e.what();
        }
    }
    std::vector<std::string> failures;
    for (auto& e : errors) {
        if (!e.empty()) failures.push_back(std::move(e));
    }
    if (!failures.empty()) throw pii::MultiDataError("render failures", std::move(failures));

    std::string text;
    std::size_t exceeded = 0;
    for (const auto& rec : manifest) {
        text += rec.dump() + "\n";
        exceeded += rec["exceeds_target"].get<bool>() ? 1 : 0;
    }
    pii::write_text_file(fs::path(out_dir) / "manifest.jsonl", text);
    std::printf("wrote %zu images to %s (%zu exceeded the target strip fraction)\n", manifest.size(),
                out_dir.c_str(), exceeded);
    return 0;
}

// corpus

int cmd_corpus_pope(const std::string& annotations, const std::string& images, std::size_t n, std::uint64_t seed,
                    const std::string& manifest) {
    auto items = pii::load_pope(annotations, images);
    const std::size_t total = items.size();
    if (n > 0) items = pii::sample_items(items, n, seed);
    pii::write_manifest(items, manifest);
    std::printf("%zu of %zu POPE items -> %s\n", items.size(), total, manifest.c_str());
    return 0;
}

int cmd_corpus_coco(const std::string& instances, const std::string& images, std::size_t n, std::uint64_t seed,
                    const std::string& manifest) {
    const auto items = pii::load_coco_caption_task(images, instances, n, seed);
    std::size_t empty = 0;
    for (const auto& it : items) empty += it.gold_categories && it.gold_categories->empty() ? 1 : 0;
    pii::write_manifest(items, manifest);
    std::printf("%zu caption items -> %s (%zu without annotated objects)\n", items.size(), manifest.c_str(), empty);
    return 0;
}

// run

int cmd_run(const std::string& config_path, const std::string& items_path, const std::string& out_dir) {
    if (config_path.empty()) throw pii::UsageError("run needs --config");
    const auto cfg = pii::load_run_config(config_path);
    const auto items = pii::read_manifest(items_path);
    pii::RunOptions opts;
    std::size_t done = 0;
    opts.on_transcript = [&](const pii::Transcript&) {
        if (++done % 50 == 0) std::fprintf(stderr, "  %zu transcripts\n", done);
    };
    pii::RunLog log;
    if (fs::exists(fs::path(out_dir) / pii::kRunFile)) {
        std::fprintf(stderr, "resuming run in %s\n", out_dir.c_str());
        log = pii::resume_run(out_dir, items, cfg, opts);
    } else {
        log = pii::execute_run(items, cfg, out_dir, opts);
    }
    std::printf("ok %zu, failed %zu, already done %zu, requests %zu -> %s\n", log.ok, log.failed, log.skipped,
                log.requests_issued, log.transcripts_path.c_str());
    return 0;
}

// score

struct RunInfo {
    std::string condition;
    std::string digest;
};

RunInfo read_run_info(const fs::path& run_dir) {
    const json j = read_json_file(run_dir / pii::kRunFile);
    return {j.at("config").at("condition").get<std::string>(), j.at("config_digest").get<std::string>()};
}

int cmd_score(const std::string& kind, const std::string& run_dir, const std::string& items_path,
              const std::string& lexicon, const std::string& setting, const std::string& out) {
    const auto info = read_run_info(run_dir);
    const auto transcripts = pii::read_transcripts(fs::path(run_dir) / pii::kTranscriptsFile);
    const auto items = pii::read_manifest(items_path);
    const std::string name = setting.empty() ? info.condition : setting;
    pii::MetricReport report;
    if (kind == "pope") {
        const auto m = pii::score_pope(transcripts, items);
        report = pii::make_report(m, name, info.digest);
        std::printf("accuracy %.4f precision %.4f recall %.4f f1 %.4f yes_ratio %.4f (n=%zu, abstain=%zu, failed=%zu)\n",
                    m.accuracy, m.precision, m.recall, m.f1, m.yes_ratio, m.n_total, m.n_abstain, m.n_failed);
    } else {
        const auto lex = lexicon.empty() ? pii::builtin_coco_lexicon() : pii::load_synonym_lexicon(lexicon);
        const auto m = pii::score_chair(transcripts, items, lex);
        report = pii::make_report(m, name, info.digest);
        std::printf("chair_s %.4f chair_i %.4f (captions=%zu, excluded=%zu, failed=%zu)\n", m.chair_s, m.chair_i,
                    m.n_captions, m.n_excluded, m.n_failed);
    }
    pii::write_metric_report(report, out);
    return 0;
}

// diag

std::vector<std::pair<fs::path, pii::TensorDump>> load_dumps(const fs::path& dir) {
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".piid") paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw pii::DataError("no .piid files in " + dir.string());
    std::vector<std::pair<fs::path, pii::TensorDump>> out(paths.size());
    std::vector<std::string> errors(paths.size());
    const long n = static_cast<long>(paths.size());
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            out[k] = {paths[k], pii::read_dump(paths[k])};
        } catch (const std::exception& e) {
            errors[k] = paths[k].string() + ": " + e.what();
        }
    }
    std::vector<std::string> bad;
    for (auto& e : errors) {
        if (!e.empty()) bad.push_back(std::move(e));
    }
    if (!bad.empty()) throw pii::MultiDataError("unreadable dumps", std::move(bad));
    return out;
}

std::string sample_name(const fs::path& p, const pii::TensorDump& d) {
    return d.header.sample_id.empty() ? p.stem().string() : d.header.sample_id;
}

std::size_t attention_layers(const pii::TensorDump& d) {
    const auto* a = d.find("attn");
    if (!a || a->dims.empty()) throw pii::SchemaViolation({"dump has no attn array"});
    return a->dims[0];
}

std::vector<std::size_t> pick_layers(const std::vector<std::size_t>& requested, std::size_t total) {
    if (!requested.empty()) return requested;
    std::vector<std::size_t> out;
    for (std::size_t l : {4u, 12u, 24u}) {
        if (l <= total) out.push_back(l);
    }
    if (out.empty()) out.push_back(total);
    return out;
}

int diag_attn(const std::vector<std::pair<fs::path, pii::TensorDump>>& dumps, const std::vector<std::size_t>& req,
              const fs::path& out) {
    pii::CsvWriter csv({"sample_id", "layer", "patch", "row", "col", "received"});
    std::size_t figures = 0;
    for (const auto& [path, d] : dumps) {
        pii::validate_schema(d, pii::SchemaExpectation::VisionAttention);
        const std::string sid = sample_name(path, d);
        std::vector<pii::svg::HeatmapPanel> panels;
        for (std::size_t layer : pick_layers(req, attention_layers(d))) {
            const auto g = pii::attention_received(d, layer);
            for (std::size_t p = 0; p < g.values.size(); ++p) {
                csv.add_row({sid, static_cast<long long>(layer), static_cast<long long>(p),
                             static_cast<long long>(p / g.cols), static_cast<long long>(p % g.cols), g.values[p]});
            }
            panels.push_back({"layer " + std::to_string(layer), g.rows, g.cols, g.values});
        }
        pii::write_text_file(out / (sid + ".attn.svg"), pii::svg::heatmap_grid(sid + ": attention received", panels));
        ++figures;
    }
    csv.write(out / "attention_received.csv");
    std::printf("%zu heatmaps, attention_received.csv -> %s\n", figures, out.c_str());
    return 0;
}

int diag_bias(const std::vector<std::pair<fs::path, pii::TensorDump>>& dumps, const std::vector<std::size_t>& req,
              const fs::path& out) {
    pii::CsvWriter layer_csv({"sample_id", "layer", "text_diag_mean", "nontext_diag_mean", "bias_ratio",
                              "n_text_patches"});
    pii::CsvWriter patch_csv({"sample_id", "layer", "patch", "diag", "in_text_region"});
    std::map<std::size_t, std::vector<pii::BiasReport>> by_layer_reports;
    std::map<std::size_t, pii::svg::LinePlot> plots;
    std::map<std::size_t, std::vector<double>> sums;
    std::map<std::size_t, std::size_t> counts;
    for (const auto& [path, d] : dumps) {
        pii::validate_schema(d, pii::SchemaExpectation::VisionAttention);
        const auto layers = pick_layers(req, attention_layers(d));
        auto r = pii::bias_report(d, layers);
        r.sample_id = sample_name(path, d);
        for (std::size_t li = 0; li < r.per_layer.size(); ++li) {
            const auto& L = r.per_layer[li];
            layer_csv.add_row({r.sample_id, static_cast<long long>(L.layer), L.text_diag_mean, L.nontext_diag_mean,
                               L.bias_ratio, static_cast<long long>(r.n_text_patches)});
            const auto& diag = r.per_patch_diag[li];
            std::vector<double> xs(diag.size());
            for (std::size_t p = 0; p < diag.size(); ++p) {
                xs[p] = static_cast<double>(p);
                patch_csv.add_row({r.sample_id, static_cast<long long>(L.layer), static_cast<long long>(p), diag[p],
                                   static_cast<long long>(r.text_span.contains(p))});
            }
            auto& plot = plots[L.layer];
            plot.title = "Self-attention diagonal, layer " + std::to_string(L.layer);
            plot.x_label = "patch index";
            plot.y_label = "attn[i, i] (head mean)";
            plot.series.push_back({r.sample_id, xs, diag, pii::svg::SeriesStyle::Trace});
            plot.highlight = {{static_cast<double>(r.text_span.start), static_cast<double>(r.text_span.end) - 1.0}};
            auto& s = sums[L.layer];
            if (s.empty()) s.assign(diag.size(), 0.0);
            if (s.size() == diag.size()) {
                for (std::size_t p = 0; p < diag.size(); ++p) s[p] += diag[p];
                ++counts[L.layer];
            }
        }
    }
    for (auto& [layer, plot] : plots) {
        auto mean = sums[layer];
        std::vector<double> xs(mean.size());
        for (std::size_t p = 0; p < mean.size(); ++p) {
            mean[p] /= static_cast<double>(counts[layer]);
            xs[p] = static_cast<double>(p);
        }
        plot.series.push_back({"mean of " + std::to_string(counts[layer]), xs, mean, pii::svg::SeriesStyle::Mean});
        pii::write_text_file(out / ("diagonal_layer" + std::to_string(layer) + ".svg"), pii::svg::line_plot(plot));
    }
    layer_csv.write(out / "bias_per_layer.csv");
    patch_csv.write(out / "bias_per_patch.csv");
    std::printf("%zu samples, %zu diagonal plots -> %s\n", dumps.size(), plots.size(), out.c_str());
    return 0;
}

int diag_sim(const std::vector<std::pair<fs::path, pii::TensorDump>>& dumps, const std::vector<std::size_t>& req,
             const fs::path& out) {
    // Pairs share a sample_id; the header condition tells the control apart from the conditioned dump.
    std::map<std::string, std::pair<const pii::TensorDump*, const pii::TensorDump*>> pairs;
    for (const auto& [path, d] : dumps) {
        auto& slot = pairs[sample_name(path, d)];
        if (d.header.condition == std::optional<std::string>("control")) {
            slot.second = &d;
        } else {
            slot.first = &d;
        }
    }
    pii::CsvWriter csv({"sample_id", "layer", "mean_cosine"});
    pii::svg::LinePlot plot{"Conditioned vs control similarity", "layer", "mean cosine", {}, std::nullopt};
    std::vector<double> sum;
    std::vector<double> xs;
    std::size_t n = 0;
    std::vector<std::string> unpaired;
    for (const auto& [sid, pr] : pairs) {
        if (!pr.first || !pr.second) {
            unpaired.push_back(sid);
            continue;
        }
        const auto* h = pr.first->find("hidden");
        if (!h || h->dims.size() != 3) throw pii::SchemaViolation({sid + ": similarity needs hidden[L,T,D]"});
        const auto layers = req.empty() ? pii::final_layers(h->dims[0], 12) : req;
        const auto prof = pii::layerwise_similarity(*pr.first, *pr.second, layers);
        std::vector<double> ys;
        std::vector<double> lx;
        for (const auto& L : prof.per_layer) {
            csv.add_row({sid, static_cast<long long>(L.layer), L.mean_cosine});
            lx.push_back(static_cast<double>(L.layer));
            ys.push_back(L.mean_cosine);
        }
        plot.series.push_back({sid, lx, ys, pii::svg::SeriesStyle::Trace});
        if (sum.empty()) {
            sum.assign(ys.size(), 0.0);
            xs = lx;
        }
        if (sum.size() == ys.size()) {
            for (std::size_t i = 0; i < ys.size(); ++i) sum[i] += ys[i];
            ++n;
        }
    }
    if (!unpaired.empty()) std::fprintf(stderr, "warning: %zu samples lack a control/conditioned pair\n", unpaired.size());
    if (n == 0) throw pii::DataError("no conditioned/control dump pairs in the input");
    for (auto& v : sum) v /= static_cast<double>(n);
    plot.series.push_back({"mean of " + std::to_string(n), xs, sum, pii::svg::SeriesStyle::Mean});
    csv.write(out / "similarity.csv");
    pii::write_text_file(out / "similarity.svg", pii::svg::line_plot(plot));
    std::printf("%zu pairs -> %s\n", n, out.c_str());
    return 0;
}

int diag_gap(const std::vector<std::pair<fs::path, pii::TensorDump>>& dumps, const fs::path& out) {
    std::vector<pii::TensorDump> ds;
    for (const auto& [path, d] : dumps) {
        pii::validate_schema(d, pii::SchemaExpectation::DecoderHidden);
        ds.push_back(d);
        if (ds.back().header.sample_id.empty()) ds.back().header.sample_id = path.stem().string();
    }
    const auto rep = pii::gap_report(ds);
    pii::CsvWriter csv({"sample_id", "condition", "mean_pairwise_cosine_distance", "centroid_cosine_distance"});
    std::map<std::string, std::pair<double, std::size_t>> groups;
    for (const auto& s : rep.per_sample) {
        csv.add_row({s.sample_id, s.condition, s.mean_pairwise_cosine_distance, s.centroid_cosine_distance});
        auto& g = groups[s.condition];
        g.first += s.mean_pairwise_cosine_distance;
        ++g.second;
    }
    csv.write(out / "modality_gap.csv");
    pii::CsvWriter summary({"condition", "n", "mean_pairwise_cosine_distance"});
    for (const auto& [cond, g] : groups) {
        summary.add_row({cond, static_cast<long long>(g.second), g.first / static_cast<double>(g.second)});
        std::printf("%-10s n=%zu gap=%.6f\n", cond.c_str(), g.second, g.first / static_cast<double>(g.second));
    }
    summary.write(out / "modality_gap_groups.csv");
    return 0;
}

int diag_pca(const std::vector<std::pair<fs::path, pii::TensorDump>>& dumps, const fs::path& out) {
    pii::CsvWriter csv({"sample_id", "token_role", "x", "y"});
    for (const auto& [path, d] : dumps) {
        pii::validate_schema(d, pii::SchemaExpectation::DecoderHidden);
        const std::string sid = sample_name(path, d);
        const auto pts = pii::pca_project(d);
        pii::svg::ScatterGroup img{"image tokens", "#1f77b4", {}};
        pii::svg::ScatterGroup txt{"text tokens", "#8e44ad", {}};
        for (const auto& p : pts) {
            csv.add_row({sid, std::string(pii::to_string(p.role)), p.x, p.y});
            (p.role == pii::TokenRole::Image ? img : txt).points.emplace_back(p.x, p.y);
        }
        pii::write_text_file(out / (sid + ".pca.svg"), pii::svg::scatter_plot(sid + ": PCA of token embeddings", {img, txt}));
    }
    csv.write(out / "pca_points.csv");
    std::printf("%zu scatter plots -> %s\n", dumps.size(), out.c_str());
    return 0;
}

int cmd_diag(const std::string& kind, const std::string& dumps_dir, const std::string& layers_arg,
             const std::string& out_dir) {
    const auto layers = parse_layers(layers_arg);
    const auto dumps = load_dumps(dumps_dir);
    ensure_dir(out_dir);
    if (kind == "attn") return diag_attn(dumps, layers, out_dir);
    if (kind == "bias") return diag_bias(dumps, layers, out_dir);
    if (kind == "sim") return diag_sim(dumps, layers, out_dir);
    if (kind == "gap") return diag_gap(dumps, out_dir);
    return diag_pca(dumps, out_dir);
}

// report

int cmd_report(const std::vector<std::string>& inputs, const std::string& baseline, const std::string& out,
               const std::string& format) {
    std::vector<pii::MetricReport> reports;
    for (const auto& p : inputs) reports.push_back(pii::read_metric_report(p));
    const auto table = pii::aggregate(reports, baseline);
    pii::EmitFormat fmt = pii::EmitFormat::Csv;
    if (format == "markdown" || (format.empty() && fs::path(out).extension() == ".md")) fmt = pii::EmitFormat::Markdown;
    pii::emit(table, fmt, out);
    std::fputs(pii::table_to_markdown(table).c_str(), stdout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prompt-in-image evaluation toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "Configuration file (JSON)")->check(CLI::ExistingFile);
    app.fallthrough();

    // condition
    auto* cond = app.add_subcommand("condition", "Render the experimental conditions of source images");
    std::string c_images, c_questions, c_mode = "all", c_out;
    double c_fraction = -1.0;
    int c_font_px = -1;
    cond->add_option("--images", c_images, "Directory of source images")->required()->check(CLI::ExistingDirectory);
    cond->add_option("--questions", c_questions, "Line-delimited question records")->check(CLI::ExistingFile);
    cond->add_option("--mode", c_mode, "baseline|control|pii|hybrid|all")
        ->check(CLI::IsMember({"baseline", "control", "pii", "hybrid", "all"}));
    cond->add_option("--out", c_out, "Output directory")->required();
    cond->add_option("--fraction", c_fraction, "Target strip fraction");
    cond->add_option("--font-px", c_font_px, "Font em size in pixels");

    // corpus
    auto* corpus = app.add_subcommand("corpus", "Build an item manifest");
    corpus->require_subcommand(1);
    std::size_t k_n = 0;
    std::uint64_t k_seed = 0;
    std::string k_manifest, k_images, k_annotations, k_instances;
    auto* pope = corpus->add_subcommand("pope", "POPE annotation file");
    pope->add_option("--annotations", k_annotations, "POPE question file (JSON lines)")->required()->check(CLI::ExistingFile);
    pope->add_option("--images", k_images, "Image directory")->required()->check(CLI::ExistingDirectory);
    pope->add_option("--n", k_n, "Sample size (0 keeps every item)");
    pope->add_option("--seed", k_seed, "Sampling seed");
    pope->add_option("--manifest", k_manifest, "Output item manifest")->required();
    auto* coco = corpus->add_subcommand("coco", "COCO caption task");
    coco->add_option("--instances", k_instances, "COCO instances annotation file")->required()->check(CLI::ExistingFile);
    coco->add_option("--images", k_images, "Image directory")->required()->check(CLI::ExistingDirectory);
    coco->add_option("--n", k_n, "Number of images to sample")->required();
    coco->add_option("--seed", k_seed, "Sampling seed");
    coco->add_option("--manifest", k_manifest, "Output item manifest")->required();

    // run
    auto* run = app.add_subcommand("run", "Execute or resume a campaign against a chat-completions endpoint");
    std::string r_items, r_out;
    run->add_option("--items", r_items, "Item manifest")->required()->check(CLI::ExistingFile);
    run->add_option("--out", r_out, "Run directory")->required();

    // score
    auto* score = app.add_subcommand("score", "Score a run");
    std::string s_kind, s_run, s_items, s_lexicon, s_setting, s_out;
    score->add_option("kind", s_kind, "pope|chair")->required()->check(CLI::IsMember({"pope", "chair"}));
    score->add_option("--run", s_run, "Run directory")->required()->check(CLI::ExistingDirectory);
    score->add_option("--items", s_items, "Item manifest of the run")->required()->check(CLI::ExistingFile);
    score->add_option("--lexicon", s_lexicon, "phrase<TAB>category file (default: built-in COCO lexicon)")
        ->check(CLI::ExistingFile);
    score->add_option("--setting", s_setting, "Setting name in the report (default: the run's condition)");
    score->add_option("--out", s_out, "Metric report (JSON)")->required();

    // diag
    auto* diag = app.add_subcommand("diag", "Analyse tensor dumps");
    std::string d_kind, d_dumps, d_layers, d_out;
    diag->add_option("kind", d_kind, "attn|bias|sim|gap|pca")
        ->required()
        ->check(CLI::IsMember({"attn", "bias", "sim", "gap", "pca"}));
    diag->add_option("--dumps", d_dumps, "Directory of .piid files")->required()->check(CLI::ExistingDirectory);
    diag->add_option("--layers", d_layers, "Comma-separated 1-based layer numbers");
    diag->add_option("--out", d_out, "Output directory")->required();

    // report
    auto* report = app.add_subcommand("report", "Aggregate metric reports into a comparison table");
    std::vector<std::string> p_inputs;
    std::string p_baseline = "baseline", p_out, p_format;
    report->add_option("reports", p_inputs, "Metric report files")->required()->check(CLI::ExistingFile);
    report->add_option("--baseline", p_baseline, "Baseline setting (default: baseline)");
    report->add_option("--out", p_out, "Output file (.csv or .md)")->required();
    report->add_option("--format", p_format, "csv|markdown (default from the extension)")
        ->check(CLI::IsMember({"csv", "markdown"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*cond) {
            pii::RenderSpec spec;
            if (!config_path.empty()) {
                const json j = read_json_file(config_path);
                if (j.contains("render")) spec = pii::render_spec_from_json(j["render"]);
            }
            if (c_fraction > 0) spec.target_strip_fraction = c_fraction;
            if (c_font_px > 0) spec.font_px = c_font_px;
            return cmd_condition(c_images, c_questions, c_mode, c_out, spec);
        }
        if (*pope) return cmd_corpus_pope(k_annotations, k_images, k_n, k_seed, k_manifest);
        if (*coco) return cmd_corpus_coco(k_instances, k_images, k_n, k_seed, k_manifest);
        if (*run) return cmd_run(config_path, r_items, r_out);
        if (*score) return cmd_score(s_kind, s_run, s_items, s_lexicon, s_setting, s_out);
        if (*diag) return cmd_diag(d_kind, d_dumps, d_layers, d_out);
        if (*report) return cmd_report(p_inputs, p_baseline, p_out, p_format);
    } catch (const pii::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.error_class());
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
