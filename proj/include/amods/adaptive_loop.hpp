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

/*
  The adaptive detection loop.

  Train on the initial labeled pool, then for every unknown batch:
    classify the batch (metrics against held ground truth),
    select queries for labeling according to the strategy,
    obtain their labels,
    add them to the pool and refit the model from scratch.

  AdaptiveRun is a single-writer state machine over (pool, model). The CLI
  drives it with an oracle labeler; the HTTP service drives it with labels
  posted by a person. Both paths go through the same transitions.
*/

#ifndef AMODS_ADAPTIVE_LOOP_HPP
#define AMODS_ADAPTIVE_LOOP_HPP

#include "amods/common.hpp"
#include "amods/corpus.hpp"
#include "amods/ensemble.hpp"
#include "amods/metrics.hpp"
#include "amods/selection.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace amods {

enum class Strategy { Hybrid, SS_Only, ES_Only, SVM_AL, Random, ConstantStack, ConstantSvm, AdaptiveSvm };

inline std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::Hybrid: return "hybrid";
    case Strategy::SS_Only: return "ss";
    case Strategy::ES_Only: return "es";
    case Strategy::SVM_AL: return "al";
    case Strategy::Random: return "random";
    case Strategy::ConstantStack: return "constant";
    case Strategy::ConstantSvm: return "constant-svm";
    case Strategy::AdaptiveSvm: return "adaptive-svm";
    }
    return "hybrid";
}

inline Strategy parse_strategy(std::string_view s) {
    for (auto st : {Strategy::Hybrid, Strategy::SS_Only, Strategy::ES_Only, Strategy::SVM_AL, Strategy::Random,
                    Strategy::ConstantStack, Strategy::ConstantSvm, Strategy::AdaptiveSvm})
        if (to_string(st) == s) return st;
    if (s == "ss-only" || s == "ss_only") return Strategy::SS_Only;
    if (s == "es-only" || s == "es_only") return Strategy::ES_Only;
    if (s == "svm-al" || s == "svm_al") return Strategy::SVM_AL;
    if (s == "constant-stack") return Strategy::ConstantStack;
    throw DataError("unknown strategy '" + std::string(s) + "'");
}

inline bool is_constant(Strategy s) { return s == Strategy::ConstantStack || s == Strategy::ConstantSvm; }
inline bool uses_stacking(Strategy s) { return s != Strategy::ConstantSvm && s != Strategy::AdaptiveSvm; }

struct GridSearchConfig {
    bool enabled = false;
    std::vector<double> C{0.01, 0.05, 0.1, 0.5, 1, 5};
    std::vector<double> gamma{0.5, 1, 2, 4};
};

struct RunConfig {
    Strategy strategy = Strategy::Hybrid;
    SelectionBudget budget;
    StackConfig model;
    KMedoidsOptions::Init kmedoids_init = KMedoidsOptions::Init::FarthestPoint;
    double beta = 1.0;
    double drift_factor = 3.0;
    GridSearchConfig grid;
    std::uint64_t seed = 7;
    std::vector<int> batches; // corpus days to process; empty: all, in order

    StackConfig effective_model() const {
        StackConfig m = model;
        m.stacked = uses_stacking(strategy);
        return m;
    }
};

struct LabelAnswer {
    Label label = Label::Benign;
    std::optional<AttackClass> attack_class;
};

using Labeler = std::function<LabelAnswer(const std::string& text)>;

// Answers from ground truth. Unknown text raises MissingTruth.
inline Labeler oracle_labeler(std::unordered_map<std::string, LabelAnswer> truth) {
    return [truth = std::move(truth)](const std::string& text) -> LabelAnswer {
        auto it = truth.find(text);
        if (it == truth.end()) throw MissingTruth("no ground truth for query '" + text + "'");
        return it->second;
    };
}

inline Labeler oracle_labeler(const std::vector<NormalizedQuery>& records) {
    std::unordered_map<std::string, LabelAnswer> truth;
    for (const auto& q : records)
        if (q.label) truth.emplace(q.text, LabelAnswer{*q.label, q.attack_class});
    return oracle_labeler(std::move(truth));
}

class TrainingPool {
public:
    // Appends a labeled query; false when the text is already pooled.
    bool add(NormalizedQuery q) {
        if (!q.label) throw DataError("pool entries must be labeled");
        if (!texts_.insert(q.text).second) return false;
        queries_.push_back(std::move(q));
        return true;
    }
    bool contains(const std::string& text) const { return texts_.contains(text); }
    std::size_t size() const noexcept { return queries_.size(); }
    const std::vector<NormalizedQuery>& queries() const noexcept { return queries_; }

    std::uint64_t digest() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (const auto& q : queries_) {
            h = fnv1a(q.text, h);
            h = fnv1a(to_string(*q.label), h);
        }
        return h;
    }

private:
    std::vector<NormalizedQuery> queries_;
    std::unordered_set<std::string> texts_;
};

enum class Origin { Suspicion, Exemplar, Uncertain, Random };

inline std::string_view to_string(Origin o) {
    switch (o) {
    case Origin::Suspicion: return "suspicion";
    case Origin::Exemplar: return "exemplar";
    case Origin::Uncertain: return "uncertain";
    case Origin::Random: return "random";
    }
    return "suspicion";
}

inline Origin parse_origin(std::string_view s) {
    for (auto o : {Origin::Suspicion, Origin::Exemplar, Origin::Uncertain, Origin::Random})
        if (to_string(o) == s) return o;
    throw DataError("unknown origin");
}

struct SelectedQuery {
    std::size_t query_id = 0; // position in the batch
    std::string text;
    double f = 0;
    Origin origin = Origin::Suspicion;
    std::optional<LabelAnswer> answer;
};

struct BatchReport {
    std::size_t batch = 0; // position in the run
    int day = 0;           // corpus day
    Metrics metrics;
    double coverage = 1.0; // fraction of batch queries with ground truth
    std::size_t margin_count = 0;
    std::size_t confusing_count = 0;
    std::optional<ConfusingRegion> region;
    std::size_t suspicions = 0;
    std::size_t exemplars = 0;
    std::vector<SelectedQuery> selection;
    std::size_t malicious_obtained = 0;
    std::size_t pool_size = 0;
    std::optional<double> fp_rate;
};

inline nlohmann::json to_json(const BatchReport& r) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& s : r.selection) {
        nlohmann::json it{{"query_id", s.query_id}, {"text", s.text}, {"f_value", s.f}, {"origin", to_string(s.origin)}};
        if (s.answer) {
            it["label"] = to_string(s.answer->label);
            if (s.answer->attack_class) it["attack_class"] = to_string(*s.answer->attack_class);
        }
        items.push_back(std::move(it));
    }
    nlohmann::json j{{"batch", r.batch},
                     {"day", r.day},
                     {"metrics", to_json(r.metrics)},
                     {"coverage", r.coverage},
                     {"selection",
                      {{"margin", r.margin_count},
                       {"confusing", r.confusing_count},
                       {"suspicions", r.suspicions},
                       {"exemplars", r.exemplars},
                       {"items", std::move(items)}}},
                     {"malicious_obtained", r.malicious_obtained},
                     {"pool_size", r.pool_size}};
    j["selection"]["region"] =
        r.region ? nlohmann::json{r.region->f_lower, r.region->f_upper} : nlohmann::json(nullptr);
    j["fp_rate"] = r.fp_rate ? nlohmann::json(*r.fp_rate) : nlohmann::json(nullptr);
    return j;
}

inline BatchReport report_from_json(const nlohmann::json& j) {
    BatchReport r;
    r.batch = j.at("batch").get<std::size_t>();
    r.day = j.at("day").get<int>();
    r.metrics = metrics_from_json(j.at("metrics"));
    r.coverage = j.at("coverage").get<double>();
    const auto& s = j.at("selection");
    r.margin_count = s.at("margin").get<std::size_t>();
    r.confusing_count = s.at("confusing").get<std::size_t>();
    r.suspicions = s.at("suspicions").get<std::size_t>();
    r.exemplars = s.at("exemplars").get<std::size_t>();
    if (!s.at("region").is_null()) r.region = ConfusingRegion{s["region"][0].get<double>(), s["region"][1].get<double>()};
    for (const auto& it : s.at("items")) {
        SelectedQuery q{it.at("query_id").get<std::size_t>(), it.at("text").get<std::string>(),
                        it.at("f_value").get<double>(), parse_origin(it.at("origin").get<std::string>()), std::nullopt};
        if (it.contains("label")) {
            LabelAnswer a{parse_label(it["label"].get<std::string>()), std::nullopt};
            if (it.contains("attack_class")) a.attack_class = parse_attack_class(it["attack_class"].get<std::string>());
            q.answer = a;
        }
        r.selection.push_back(std::move(q));
    }
    r.malicious_obtained = j.at("malicious_obtained").get<std::size_t>();
    r.pool_size = j.at("pool_size").get<std::size_t>();
    if (!j.at("fp_rate").is_null()) r.fp_rate = j.at("fp_rate").get<double>();
    return r;
}

// Scores every query once: meta-input vector and decision value.
inline ScoredSet score_queries(const StackModel& m, const std::vector<NormalizedQuery>& qs) {
    ScoredSet s;
    s.f.reserve(qs.size());
    s.z.reserve(qs.size());
    for (const auto& q : qs) {
        s.z.push_back(m.embed(q.text));
        s.f.push_back(decision_value(m.meta, s.z.back()));
    }
    return s;
}

// The confusing region of a fitted model: misclassified training vectors of
// the meta SVM that lie inside its margin.
inline std::optional<ConfusingRegion> confusing_region(const StackModel& m) {
    return confusing_region(m.train_f, m.train_y);
}

// Flags batch b when its FP rate exceeds factor x the median of the earlier
// batches. With a zero median, a positive FP rate is flagged only once the
// zero median has held for at least three earlier batches.
inline std::vector<std::pair<std::size_t, bool>> drift_monitor(const std::vector<BatchReport>& reports,
                                                               double factor = 3.0) {
    std::vector<std::pair<std::size_t, bool>> out;
    std::vector<double> history;
    for (const auto& r : reports) {
        bool flag = false;
        if (r.fp_rate && !history.empty()) {
            auto sorted = history;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t n = sorted.size();
            const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
            if (median > 0) flag = *r.fp_rate > factor * median;
            else flag = *r.fp_rate > 0 && n >= 3;
        }
        out.emplace_back(r.batch, flag);
        if (r.fp_rate) history.push_back(*r.fp_rate);
    }
    return out;
}

// --- meta grid search ------------------------------------------------------

// Picks (C, gamma) for the meta SVM by k-fold cross-validated F-value on the
// pool's out-of-fold meta features. Ties go to smaller C, then smaller gamma.
inline std::pair<double, double> grid_search_meta(const std::vector<NormalizedQuery>& pool_records,
                                                  std::vector<double> grid_C, std::vector<double> grid_gamma,
                                                  StackConfig cfg, std::size_t k_folds, std::uint64_t seed) {
    if (grid_C.empty() || grid_gamma.empty()) throw Error("grid search needs a non-empty grid");
    std::sort(grid_C.begin(), grid_C.end());
    std::sort(grid_gamma.begin(), grid_gamma.end());
    std::vector<std::string> texts;
    std::vector<Label> labels;
    for (const auto& q : pool_records) {
        if (!q.label) continue;
        texts.push_back(q.text);
        labels.push_back(*q.label);
    }
    cfg.k_folds = k_folds;
    cfg.seed = seed;
    auto pipeline = fit_pipeline(texts, labels, cfg.pipeline);
    std::vector<LabeledVector> pool;
    for (std::size_t i = 0; i < texts.size(); ++i) pool.push_back({texts[i], pipeline.transform(texts[i]), to_sign(labels[i])});
    pool = canonical_order(pool);
    std::vector<Vector> X = cfg.stacked ? out_of_fold_scores(pool, cfg) : std::vector<Vector>{};
    if (!cfg.stacked)
        for (const auto& s : pool) X.push_back(s.x);
    const auto fold = stratified_folds(pool, k_folds, mix_seed(seed, 17));

    double best_f = -1, best_C = grid_C.front(), best_g = grid_gamma.front();
    for (double C : grid_C) {
        for (double g : grid_gamma) {
            double sum_f = 0;
            for (std::size_t f = 0; f < k_folds; ++f) {
                std::vector<Vector> trX;
                std::vector<int> trY;
                for (std::size_t i = 0; i < pool.size(); ++i)
                    if (fold[i] != f) {
                        trX.push_back(X[i]);
                        trY.push_back(pool[i].y);
                    }
                auto m = train_svm(trX, trY, C, KernelSpec::rbf(g), cfg.svm);
                std::vector<Label> pred, truth;
                for (std::size_t i = 0; i < pool.size(); ++i)
                    if (fold[i] == f) {
                        pred.push_back(label_for(decision_value(m, X[i])));
                        truth.push_back(pool[i].y > 0 ? Label::Malicious : Label::Benign);
                    }
                sum_f += compute_metrics(pred, truth).f_value;
            }
            const double mean_f = sum_f / static_cast<double>(k_folds);
            if (mean_f > best_f) {
                best_f = mean_f;
                best_C = C;
                best_g = g;
            }
        }
    }
    return {best_C, best_g};
}

inline constexpr int kSnapshotVersion = 1;

enum class RunState { AwaitingLabels, ReadyToAdvance, Finished };

inline std::string_view to_string(RunState s) {
    switch (s) {
    case RunState::AwaitingLabels: return "AwaitingLabels";
    case RunState::ReadyToAdvance: return "ReadyToAdvance";
    case RunState::Finished: return "Finished";
    }
    return "Finished";
}

class AdaptiveRun {
public:
    AdaptiveRun(RunConfig cfg, Corpus corpus) : cfg_(std::move(cfg)), corpus_(std::move(corpus)) {
        cfg_.budget.validate();
        resolve_batches();
        for (const auto& q : corpus_.initial) {
            if (!q.label) throw DataError("initial set entries must be labeled");
            pool_.add(q);
        }
        refit();
        begin_batch();
    }

    // Restores a run from a snapshot taken between batches.
    static AdaptiveRun resume(RunConfig cfg, Corpus corpus, const nlohmann::json& snapshot) {
        if (snapshot.at("version").get<int>() != kSnapshotVersion) throw DataError("unsupported snapshot version");
        AdaptiveRun run(std::move(cfg), std::move(corpus), Restore{});
        for (const auto& q : snapshot.at("pool")) run.pool_.add(query_from_json(q));
        if (snapshot.at("pool_digest").get<std::string>() != hex(run.pool_.digest()))
            throw DataError("snapshot pool digest mismatch");
        run.model_ = stack_from_json(snapshot.at("model"));
        run.next_ = snapshot.at("next_batch").get<std::size_t>();
        for (const auto& r : snapshot.at("reports")) run.reports_.push_back(report_from_json(r));
        run.begin_batch();
        return run;
    }

    RunState state() const noexcept { return state_; }
    const RunConfig& config() const noexcept { return cfg_; }
    const StackModel& model() const noexcept { return model_; }
    const TrainingPool& pool() const noexcept { return pool_; }
    const std::vector<BatchReport>& reports() const noexcept { return reports_; }
    std::size_t current_batch() const noexcept { return next_; }
    std::size_t batch_count() const noexcept { return order_.size(); }
    const std::vector<SelectedQuery>& pending() const noexcept { return pending_; }
    // Metrics of the batch under labeling, computed before any of its labels exist.
    const std::optional<Metrics>& current_metrics() const noexcept { return current_metrics_; }

    std::size_t unlabeled_count() const {
        return static_cast<std::size_t>(std::count_if(pending_.begin(), pending_.end(), [](const auto& p) { return !p.answer; }));
    }

    // Records a label for a pending query. Re-labeling before advance overwrites.
    void submit_label(std::size_t query_id, LabelAnswer answer) {
        if (state_ == RunState::Finished) throw Error("run is finished");
        if (answer.attack_class && answer.label != Label::Malicious)
            throw DataError("attack_class requires a malicious label");
        auto it = std::find_if(pending_.begin(), pending_.end(), [&](const auto& p) { return p.query_id == query_id; });
        if (it == pending_.end()) throw MissingTruth("unknown query_id " + std::to_string(query_id));
        it->answer = answer;
        if (unlabeled_count() == 0) state_ = RunState::ReadyToAdvance;
    }

    // Labels every pending query with `labeler`. Nothing is recorded if the
    // labeler fails part way.
    void label_with(const Labeler& labeler) {
        std::vector<LabelAnswer> answers;
        answers.reserve(pending_.size());
        for (const auto& p : pending_) {
            try {
                answers.push_back(labeler(p.text));
            } catch (const MissingTruth&) {
                throw;
            } catch (const std::exception& e) {
                throw LabelerUnavailable(e.what());
            }
        }
        for (std::size_t i = 0; i < pending_.size(); ++i) submit_label(pending_[i].query_id, answers[i]);
    }

    // Pool update, refit, then the next batch's classification and selection.
    const BatchReport& advance() {
        if (state_ != RunState::ReadyToAdvance) throw Error("advance requires every pending query to be labeled");
        BatchReport r = std::move(draft_);
        const auto& batch = corpus_.batches[order_[next_]];
        for (auto& p : pending_) {
            const auto& truth = batch[p.query_id];
            const Label effective = truth.label ? *truth.label : p.answer->label;
            r.malicious_obtained += effective == Label::Malicious;
            NormalizedQuery q{p.text, p.answer->label, p.answer->attack_class, truth.day};
            pool_.add(std::move(q));
        }
        r.selection = pending_;
        if (!is_constant(cfg_.strategy) && !pending_.empty()) refit();
        r.pool_size = pool_.size();
        reports_.push_back(std::move(r));
        ++next_;
        begin_batch();
        return reports_.back();
    }

    nlohmann::json snapshot() const {
        if (state_ != RunState::AwaitingLabels && state_ != RunState::ReadyToAdvance && state_ != RunState::Finished)
            throw Error("no snapshot in this state");
        nlohmann::json pool = nlohmann::json::array();
        for (const auto& q : pool_.queries()) pool.push_back(to_json(q));
        nlohmann::json reports = nlohmann::json::array();
        for (const auto& r : reports_) reports.push_back(to_json(r));
        return {{"version", kSnapshotVersion},
                {"strategy", to_string(cfg_.strategy)},
                {"seed", cfg_.seed},
                {"next_batch", next_},
                {"model", to_json(model_)},
                {"pool_digest", hex(pool_.digest())},
                {"pool", std::move(pool)},
                {"reports", std::move(reports)}};
    }

    static std::string hex(std::uint64_t v) {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
        return buf;
    }

private:
    struct Restore {};
    AdaptiveRun(RunConfig cfg, Corpus corpus, Restore) : cfg_(std::move(cfg)), corpus_(std::move(corpus)) {
        cfg_.budget.validate();
        resolve_batches();
    }

    void resolve_batches() {
        if (cfg_.batches.empty()) {
            for (std::size_t i = 0; i < corpus_.batches.size(); ++i) order_.push_back(i);
        } else {
            for (int day : cfg_.batches) {
                auto it = std::find(corpus_.batch_days.begin(), corpus_.batch_days.end(), day);
                if (it == corpus_.batch_days.end()) throw DataError("batch day " + std::to_string(day) + " not in corpus");
                order_.push_back(static_cast<std::size_t>(it - corpus_.batch_days.begin()));
            }
        }
        if (order_.empty()) throw DataError("corpus has no unknown batches");
    }

    void refit() {
        std::vector<std::string> texts;
        std::vector<Label> labels;
        for (const auto& q : pool_.queries()) {
            texts.push_back(q.text);
            labels.push_back(*q.label);
        }
        auto m = cfg_.effective_model();
        if (cfg_.grid.enabled) {
            auto [C, g] = grid_search_meta(pool_.queries(), cfg_.grid.C, cfg_.grid.gamma, m, m.k_folds, m.seed);
            m.meta_C = C;
            m.meta_kernel = KernelSpec::rbf(g);
        }
        model_ = fit_detection_model(texts, labels, m);
    }

    std::vector<Vector> malicious_refs() const {
        std::vector<Vector> refs;
        for (const auto& q : pool_.queries())
            if (q.label == Label::Malicious) refs.push_back(model_.embed(q.text));
        return refs;
    }

    void begin_batch() {
        pending_.clear();
        current_metrics_.reset();
        if (next_ >= order_.size()) {
            state_ = RunState::Finished;
            return;
        }
        const auto& batch = corpus_.batches[order_[next_]];
        const std::uint64_t seed = mix_seed(cfg_.seed, 1000 + next_);
        const ScoredSet U = score_queries(model_, batch);

        draft_ = BatchReport{};
        draft_.batch = next_;
        draft_.day = corpus_.batch_days[order_[next_]];
        std::vector<Label> pred, truth;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            if (!batch[i].label) continue;
            pred.push_back(label_for(U.f[i]));
            truth.push_back(*batch[i].label);
        }
        draft_.metrics = compute_metrics(pred, truth, cfg_.beta);
        draft_.coverage = batch.empty() ? 1.0 : static_cast<double>(truth.size()) / static_cast<double>(batch.size());
        draft_.fp_rate = draft_.metrics.fp_rate;
        current_metrics_ = draft_.metrics;

        const auto& kernel = model_.meta.kernel;
        std::vector<std::pair<std::size_t, Origin>> picks;
        SelectionResult sel;
        switch (cfg_.strategy) {
        case Strategy::Hybrid:
        case Strategy::AdaptiveSvm:
            sel = hybrid_select(U, confusing_region(model_), malicious_refs(), cfg_.budget, kernel, seed, cfg_.kmedoids_init);
            break;
        case Strategy::SS_Only:
            sel = ss_only_select(U, confusing_region(model_), cfg_.budget, kernel, seed, cfg_.kmedoids_init);
            break;
        case Strategy::ES_Only:
            sel = es_only_select(U, malicious_refs(), cfg_.budget, kernel);
            sel.region = confusing_region(model_); // reported only
            break;
        case Strategy::SVM_AL:
            for (auto i : al_select(U.f, cfg_.budget.M)) picks.emplace_back(i, Origin::Uncertain);
            break;
        case Strategy::Random:
            for (auto i : random_select(U.size(), cfg_.budget.M, seed)) picks.emplace_back(i, Origin::Random);
            break;
        case Strategy::ConstantStack:
        case Strategy::ConstantSvm: break;
        }
        for (auto i : sel.suspicions) picks.emplace_back(i, Origin::Suspicion);
        for (auto i : sel.exemplars) picks.emplace_back(i, Origin::Exemplar);
        draft_.margin_count = sel.margin_count;
        draft_.confusing_count = sel.confusing_count;
        draft_.region = sel.region;
        draft_.suspicions = sel.suspicions.size();
        draft_.exemplars = sel.exemplars.size();
        if (cfg_.strategy == Strategy::SVM_AL || cfg_.strategy == Strategy::Random) {
            draft_.margin_count = count_in_margin(U, all_indices(U.size()));
        }

        for (auto [i, origin] : picks) pending_.push_back({i, batch[i].text, U.f[i], origin, std::nullopt});
        state_ = pending_.empty() ? RunState::ReadyToAdvance : RunState::AwaitingLabels;
    }

    RunConfig cfg_;
    Corpus corpus_;
    std::vector<std::size_t> order_;
    TrainingPool pool_;
    StackModel model_;
    std::size_t next_ = 0;
    std::vector<BatchReport> reports_;
    std::vector<SelectedQuery> pending_;
    BatchReport draft_;
    std::optional<Metrics> current_metrics_;
    RunState state_ = RunState::Finished;
};

using BatchCallback = std::function<void(const AdaptiveRun&, const BatchReport&)>;

// Drives a run to completion with an automated labeler. The callback runs
// after every batch (the CLI writes the run log and snapshots there).
inline std::vector<BatchReport> run_loop(AdaptiveRun& run, const Labeler& labeler, const BatchCallback& on_batch = {}) {
    while (run.state() != RunState::Finished) {
        if (run.state() == RunState::AwaitingLabels) run.label_with(labeler);
        const auto& r = run.advance();
        if (on_batch) on_batch(run, r);
    }
    return run.reports();
}

inline std::vector<BatchReport> run_loop(const RunConfig& cfg, const Corpus& corpus, const Labeler& labeler) {
    AdaptiveRun run(cfg, corpus);
    return run_loop(run, labeler);
}

// --- configuration file ----------------------------------------------------

inline RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.strategy = parse_strategy(j.value("strategy", std::string(to_string(c.strategy))));
    c.seed = j.value("seed", c.seed);
    c.model.seed = c.seed;
    if (j.contains("budget")) {
        const auto& b = j["budget"];
        c.budget.M = b.value("M", c.budget.M);
        c.budget.R = b.value("R", c.budget.R);
        if (b.contains("theta")) {
            auto t = b["theta"].get<std::vector<double>>();
            if (t.size() != 2) throw DataError("budget.theta needs two shares");
            c.budget.ss_share = t[0];
            c.budget.es_share = t[1];
        }
    }
    if (j.contains("pipeline")) {
        const auto& p = j["pipeline"];
        c.model.pipeline.method = parse_scoring_method(p.value("method", std::string("IG")));
        c.model.pipeline.top_k = p.value("top_k", c.model.pipeline.top_k);
        c.model.pipeline.reduction = parse_reduction_kind(p.value("reduction", std::string("pca")));
        c.model.pipeline.dim = p.value("dim", c.model.pipeline.dim);
        c.model.pipeline.seed = p.value("seed", c.seed);
    }
    if (j.contains("meta")) {
        const auto& m = j["meta"];
        c.model.meta_C = m.value("C", c.model.meta_C);
        if (m.contains("kernel")) c.model.meta_kernel = kernel_from_json(m["kernel"]);
        c.model.svm.tol = m.value("tol", c.model.svm.tol);
        c.model.svm.max_iterations = m.value("max_iterations", c.model.svm.max_iterations);
    }
    if (j.contains("bases")) {
        c.model.bases.clear();
        for (const auto& b : j["bases"]) c.model.bases.push_back(base_spec_from_json(b));
        if (c.model.bases.empty()) throw DataError("bases must not be empty");
    }
    c.model.k_folds = j.value("k_folds", c.model.k_folds);
    if (j.contains("kmedoids_init")) {
        auto s = j["kmedoids_init"].get<std::string>();
        if (s == "farthest") c.kmedoids_init = KMedoidsOptions::Init::FarthestPoint;
        else if (s == "random") c.kmedoids_init = KMedoidsOptions::Init::Random;
        else throw DataError("kmedoids_init must be 'farthest' or 'random'");
    }
    c.beta = j.value("beta", c.beta);
    c.drift_factor = j.value("drift_factor", c.drift_factor);
    if (j.contains("grid_search")) {
        const auto& g = j["grid_search"];
        c.grid.enabled = g.value("enabled", c.grid.enabled);
        c.grid.C = g.value("C", c.grid.C);
        c.grid.gamma = g.value("gamma", c.grid.gamma);
    }
    c.batches = j.value("batches", c.batches);
    return c;
}

} // namespace amods

#endif
