/*
 * Copyright 2026 The AMODS Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. cli_main is kept free of process globals so tests
// can drive it in-process.

#ifndef AMODS_CLI_HPP
#define AMODS_CLI_HPP

#include "amods/adaptive_loop.hpp"
#include "amods/corpus.hpp"
#include "amods/service.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <thread>

#ifndef AMODS_DATA_DIR
#define AMODS_DATA_DIR "data"
#endif

namespace amods {

namespace fs = std::filesystem;

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitRuntime = 3 };

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("'" + path + "': " + e.what());
    }
}

inline void write_json_file(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

// A config file holds run keys at the top level, an optional "corpus"
// object for gen-corpus and an optional "templates" path.
struct CliConfig {
    nlohmann::json raw = nlohmann::json::object();
    RunConfig run;
    CorpusConfig corpus;
    std::string templates = std::string(AMODS_DATA_DIR) + "/templates.json";
};

inline CliConfig load_cli_config(const std::string& path) {
    CliConfig c;
    if (!path.empty()) c.raw = read_json_file(path);
    try {
        c.run = run_config_from_json(c.raw);
        if (c.raw.contains("corpus")) c.corpus = corpus_config_from_json(c.raw["corpus"]);
        if (c.raw.contains("templates")) {
            fs::path t = c.raw["templates"].get<std::string>();
            if (t.is_relative() && !path.empty()) t = fs::path(path).parent_path() / t;
            c.templates = t.string();
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    return c;
}

inline std::string log_line(const BatchReport& r) {
    std::ostringstream s;
    s << "batch " << r.batch << " day " << r.day << " f_value " << r.metrics.f_value << " precision "
      << r.metrics.precision << " recall " << r.metrics.recall << " fp_rate ";
    if (r.fp_rate) s << *r.fp_rate;
    else s << "na";
    s << " selected " << r.selection.size() << " suspicions " << r.suspicions << " exemplars " << r.exemplars
      << " malicious_obtained " << r.malicious_obtained << " pool " << r.pool_size;
    return s.str();
}

// Writes report-<b>.json, snapshot-<b+1>.json and a run.log line after every batch.
class RunDirectory {
public:
    explicit RunDirectory(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void record(const AdaptiveRun& run, const BatchReport& r, double drift_factor) {
        write_json_file(dir_ / ("report-" + std::to_string(r.batch) + ".json"), to_json(r));
        write_json_file(dir_ / ("snapshot-" + std::to_string(r.batch + 1) + ".json"), run.snapshot());
        std::ofstream log(dir_ / "run.log", std::ios::app);
        log << log_line(r) << '\n';
        const auto flags = drift_monitor(run.reports(), drift_factor);
        if (flags.back().second) log << "drift batch " << r.batch << " fp_rate above " << drift_factor << "x prior median\n";
    }

    // Highest-numbered snapshot, if any.
    std::optional<fs::path> latest_snapshot() const {
        std::optional<fs::path> best;
        long best_n = -1;
        const std::regex pat(R"(snapshot-(\d+)\.json)");
        for (const auto& e : fs::directory_iterator(dir_)) {
            std::smatch m;
            const std::string name = e.path().filename().string();
            if (std::regex_match(name, m, pat) && std::stol(m[1].str()) > best_n) {
                best_n = std::stol(m[1].str());
                best = e.path();
            }
        }
        return best;
    }

    const fs::path& path() const noexcept { return dir_; }

private:
    fs::path dir_;
};

inline Corpus load_corpus(const std::string& path) { return split_by_day(read_corpus_file(path)); }

inline AdaptiveRun start_or_resume(const RunConfig& cfg, const Corpus& corpus, const RunDirectory* dir, bool resume,
                                   std::ostream& out) {
    if (resume && dir) {
        if (auto snap = dir->latest_snapshot()) {
            out << "resuming from " << snap->filename().string() << '\n';
            return AdaptiveRun::resume(cfg, corpus, read_json_file(snap->string()));
        }
    }
    return AdaptiveRun(cfg, corpus);
}

// Serves `run` over HTTP until it finishes (or forever when `linger`).
inline void serve_run(AdaptiveRun run, RunDirectory* dir, double drift_factor, int port, bool linger, std::ostream& out) {
    std::atomic<bool> finished = run.state() == RunState::Finished;
    LabelService service(std::move(run), "session-" + std::to_string(port),
                         [&](const AdaptiveRun& r, const BatchReport& rep) {
                             if (dir) dir->record(r, rep, drift_factor);
                             if (r.state() == RunState::Finished) finished = true;
                         });
    httplib::Server server;
    service.mount(server);
    if (!server.bind_to_port("127.0.0.1", port)) throw Error("cannot bind port " + std::to_string(port));
    out << "listening on 127.0.0.1:" << port << std::endl;
    std::thread t([&] { server.listen_after_bind(); });
    while (linger || !finished) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    t.join();
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Adaptive malicious query detection"};
    app.require_subcommand(1);

    std::string log_path, out_path, config_path, corpus_path, snapshot_path, labeler = "oracle", flagged_path;
    std::string strategies = "hybrid,al,random";
    int day = 0, port = 8080;
    bool resume = false;

    auto* ingest_cmd = app.add_subcommand("ingest", "Turn a CLF access log into a corpus");
    ingest_cmd->add_option("log", log_path, "access log")->required();
    ingest_cmd->add_option("-o,--output", out_path, "corpus output")->required();
    ingest_cmd->add_option("--day", day, "day tag for every query");
    ingest_cmd->add_option("--flagged", flagged_path, "write character-filter hits here");

    auto* gen_cmd = app.add_subcommand("gen-corpus", "Generate a synthetic labeled corpus");
    gen_cmd->add_option("-c,--config", config_path, "config file")->required();
    gen_cmd->add_option("-o,--output", out_path, "corpus output")->required();

    auto* train_cmd = app.add_subcommand("train", "Fit a model on the initial set");
    train_cmd->add_option("-c,--config", config_path, "config file")->required();
    train_cmd->add_option("corpus", corpus_path)->required();
    train_cmd->add_option("-o,--output", out_path, "snapshot output")->required();

    auto* run_cmd = app.add_subcommand("run", "Run the adaptive loop over every batch");
    run_cmd->add_option("-c,--config", config_path, "config file")->required();
    run_cmd->add_option("corpus", corpus_path)->required();
    run_cmd->add_option("--labeler", labeler, "oracle or service")->check(CLI::IsMember({"oracle", "service"}));
    run_cmd->add_option("-o,--output", out_path, "run directory")->required();
    run_cmd->add_option("--port", port, "port for the service labeler");
    run_cmd->add_flag("--resume", resume, "continue from the latest snapshot in the run directory");

    auto* compare_cmd = app.add_subcommand("compare", "Run several strategies on one corpus");
    compare_cmd->add_option("-c,--config", config_path, "config file")->required();
    compare_cmd->add_option("corpus", corpus_path)->required();
    compare_cmd->add_option("--strategies", strategies, "comma-separated strategy names");
    compare_cmd->add_option("-o,--output", out_path, "comparison report")->required();

    auto* eval_cmd = app.add_subcommand("eval", "Score a snapshot's model on a corpus");
    eval_cmd->add_option("snapshot", snapshot_path)->required();
    eval_cmd->add_option("corpus", corpus_path)->required();

    auto* serve_cmd = app.add_subcommand("serve", "Expose the labeling loop over HTTP");
    serve_cmd->add_option("-c,--config", config_path, "config file")->required();
    serve_cmd->add_option("corpus", corpus_path)->required();
    serve_cmd->add_option("--port", port, "listen port");
    serve_cmd->add_option("-o,--output", out_path, "optional run directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    try {
        if (*ingest_cmd) {
            std::ifstream in(log_path);
            if (!in) throw DataError("cannot open log '" + log_path + "'");
            auto r = ingest(in, day);
            std::ofstream o(out_path);
            write_corpus(o, r.queries);
            if (!flagged_path.empty()) {
                std::ofstream f(flagged_path);
                write_corpus(f, r.flagged);
            }
            out << "lines " << r.stats.lines << " parse_errors " << r.stats.parse_errors << " requests "
                << r.stats.original_requests << " cleaned " << r.stats.cleaned << " normalized " << r.stats.normalized
                << " filtered " << r.stats.filtered << " flagged " << r.flagged.size() << '\n';
        } else if (*gen_cmd) {
            auto c = load_cli_config(config_path);
            auto records = gen_corpus(c.corpus, load_templates(c.templates));
            std::ofstream o(out_path);
            write_corpus(o, records);
            out << "wrote " << records.size() << " queries\n";
        } else if (*train_cmd) {
            auto c = load_cli_config(config_path);
            auto corpus = load_corpus(corpus_path);
            const auto& cfg = c.run;
            std::vector<std::string> texts;
            std::vector<Label> labels;
            nlohmann::json pool = nlohmann::json::array();
            for (const auto& q : corpus.initial) {
                if (!q.label) throw DataError("initial set entries must be labeled");
                texts.push_back(q.text);
                labels.push_back(*q.label);
                pool.push_back(to_json(q));
            }
            auto model = fit_detection_model(texts, labels, cfg.effective_model());
            write_json_file(out_path, {{"version", kSnapshotVersion}, {"model", to_json(model)}, {"pool", pool}});
            out << "trained on " << texts.size() << " queries\n";
        } else if (*run_cmd) {
            auto c = load_cli_config(config_path);
            auto corpus = load_corpus(corpus_path);
            const auto& cfg = c.run;
            RunDirectory dir(out_path);
            auto run = start_or_resume(cfg, corpus, &dir, resume, out);
            if (labeler == "oracle") {
                std::vector<NormalizedQuery> all;
                for (const auto& b : corpus.batches) all.insert(all.end(), b.begin(), b.end());
                run_loop(run, oracle_labeler(all), [&](const AdaptiveRun& r, const BatchReport& rep) {
                    dir.record(r, rep, cfg.drift_factor);
                    out << log_line(rep) << '\n';
                });
            } else {
                serve_run(std::move(run), &dir, cfg.drift_factor, port, false, out);
            }
        } else if (*compare_cmd) {
            auto c = load_cli_config(config_path);
            auto corpus = load_corpus(corpus_path);
            std::vector<NormalizedQuery> all;
            for (const auto& b : corpus.batches) all.insert(all.end(), b.begin(), b.end());
            const auto labeler_fn = oracle_labeler(all);
            nlohmann::json report{{"seed", c.run.seed}, {"strategies", nlohmann::json::object()}};
            std::stringstream names(strategies);
            std::string name;
            while (std::getline(names, name, ',')) {
                auto cfg = c.run;
                cfg.strategy = parse_strategy(name);
                auto reports = run_loop(cfg, corpus, labeler_fn);
                nlohmann::json rs = nlohmann::json::array();
                std::size_t obtained = 0;
                for (const auto& r : reports) {
                    rs.push_back(to_json(r));
                    obtained += r.malicious_obtained;
                }
                const double final_f = reports.empty() ? 0.0 : reports.back().metrics.f_value;
                report["strategies"][name] = {{"final_f_value", final_f}, {"malicious_obtained", obtained}, {"reports", rs}};
                out << name << " final_f_value " << final_f << " malicious_obtained " << obtained << '\n';
            }
            write_json_file(out_path, report);
        } else if (*eval_cmd) {
            auto model = stack_from_json(read_json_file(snapshot_path).at("model"));
            auto corpus = load_corpus(corpus_path);
            std::vector<Label> all_pred, all_truth;
            nlohmann::json days = nlohmann::json::array();
            for (std::size_t b = 0; b < corpus.batches.size(); ++b) {
                std::vector<Label> pred, truth;
                for (const auto& q : corpus.batches[b]) {
                    if (!q.label) continue;
                    pred.push_back(stack_predict(model, q.text).label);
                    truth.push_back(*q.label);
                }
                days.push_back({{"day", corpus.batch_days[b]}, {"metrics", to_json(compute_metrics(pred, truth))}});
                all_pred.insert(all_pred.end(), pred.begin(), pred.end());
                all_truth.insert(all_truth.end(), truth.begin(), truth.end());
            }
            out << nlohmann::json{{"days", days}, {"overall", to_json(compute_metrics(all_pred, all_truth))}}.dump(2) << '\n';
        } else if (*serve_cmd) {
            auto c = load_cli_config(config_path);
            auto corpus = load_corpus(corpus_path);
            const auto& cfg = c.run;
            std::optional<RunDirectory> dir;
            if (!out_path.empty()) dir.emplace(out_path);
            serve_run(AdaptiveRun(cfg, corpus), dir ? &*dir : nullptr, cfg.drift_factor, port, true, out);
        }
    } catch (const MissingTruth& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

} // namespace amods

#endif
