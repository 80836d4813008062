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
  Corpus files and the synthetic corpus generator.

  A corpus file is JSON Lines, one query per line:

    {"text": "postid=123", "label": "benign", "day": 3}
    {"text": "id=../../etc/passwd", "label": "malicious", "attack_class": "DT", "day": 3}

  "label" and "attack_class" are optional. Day 0 is the initial labeled set;
  days 1..N are the unknown batches in order.

  The generator instantiates queries from a template file (see
  data/templates.json). Template strings may reference:

    {pool}        a uniform choice from pools[pool] (expanded recursively)
    {int:a:b}     a uniform integer in [a, b]
    {updirs}      pools["updir"] repeated {int:updir_min:updir_max} times
*/

#ifndef AMODS_CORPUS_HPP
#define AMODS_CORPUS_HPP

#include "amods/common.hpp"
#include "amods/log_ingest.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace amods {

// --- corpus I/O ------------------------------------------------------------

inline nlohmann::json to_json(const NormalizedQuery& q) {
    nlohmann::json j{{"text", q.text}};
    if (q.label) j["label"] = to_string(*q.label);
    if (q.attack_class) j["attack_class"] = to_string(*q.attack_class);
    j["day"] = q.day;
    return j;
}

inline NormalizedQuery query_from_json(const nlohmann::json& j) {
    NormalizedQuery q;
    q.text = j.at("text").get<std::string>();
    if (j.contains("label") && !j["label"].is_null()) q.label = parse_label(j["label"].get<std::string>());
    if (j.contains("attack_class") && !j["attack_class"].is_null())
        q.attack_class = parse_attack_class(j["attack_class"].get<std::string>());
    q.day = j.value("day", 0);
    if (q.attack_class && q.label != Label::Malicious) throw DataError("attack_class on a non-malicious record");
    return q;
}

inline void write_corpus(std::ostream& out, const std::vector<NormalizedQuery>& qs) {
    for (const auto& q : qs) out << to_json(q).dump() << '\n';
}

inline std::vector<NormalizedQuery> read_corpus(std::istream& in) {
    std::vector<NormalizedQuery> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(query_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("corpus line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<NormalizedQuery> read_corpus_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus '" + path + "'");
    return read_corpus(in);
}

struct Corpus {
    std::vector<NormalizedQuery> initial;
    std::vector<std::vector<NormalizedQuery>> batches;
    std::vector<int> batch_days;
};

inline Corpus split_by_day(const std::vector<NormalizedQuery>& records) {
    Corpus c;
    std::map<int, std::vector<NormalizedQuery>> days;
    for (const auto& q : records) {
        if (q.day < 0) throw DataError("negative day in corpus");
        if (q.day == 0) c.initial.push_back(q);
        else days[q.day].push_back(q);
    }
    for (auto& [day, qs] : days) {
        c.batch_days.push_back(day);
        c.batches.push_back(std::move(qs));
    }
    return c;
}

// --- templates -------------------------------------------------------------

struct WeightedParam {
    std::string name;
    std::string value;
    double weight = 1;
};

struct TemplatePool {
    std::unordered_map<std::string, std::vector<std::string>> pools;
    std::vector<WeightedParam> benign_params;
    std::size_t benign_pairs_min = 1, benign_pairs_max = 4;
    std::vector<std::string> carrier_params;
    std::size_t shell_pairs_min = 0, shell_pairs_max = 2;
    std::array<std::vector<std::string>, 4> attack_templates; // indexed by AttackClass
    std::size_t updir_min = 2, updir_max = 8;
    double case_variation = 0.3;
};

inline TemplatePool templates_from_json(const nlohmann::json& j) {
    TemplatePool t;
    for (auto& [k, v] : j.at("pools").items()) t.pools[k] = v.get<std::vector<std::string>>();
    const auto& b = j.at("benign");
    t.benign_pairs_min = b.at("pairs").at("min").get<std::size_t>();
    t.benign_pairs_max = b.at("pairs").at("max").get<std::size_t>();
    for (const auto& p : b.at("params"))
        t.benign_params.push_back({p.at("name").get<std::string>(), p.at("value").get<std::string>(),
                                   p.value("weight", 1.0)});
    const auto& m = j.at("malicious");
    t.carrier_params = m.at("carrier_params").get<std::vector<std::string>>();
    t.shell_pairs_min = m.at("shell_pairs").at("min").get<std::size_t>();
    t.shell_pairs_max = m.at("shell_pairs").at("max").get<std::size_t>();
    t.updir_min = m.value("updir_min", t.updir_min);
    t.updir_max = m.value("updir_max", t.updir_max);
    t.case_variation = m.value("case_variation", t.case_variation);
    for (auto& [k, v] : m.at("classes").items())
        t.attack_templates[static_cast<std::size_t>(parse_attack_class(k))] = v.get<std::vector<std::string>>();
    if (t.benign_params.empty() || t.carrier_params.empty()) throw DataError("template file lacks params");
    if (t.benign_pairs_min < 1 || t.benign_pairs_max < t.benign_pairs_min || t.shell_pairs_max < t.shell_pairs_min ||
        t.updir_max < t.updir_min)
        throw DataError("template file has an inverted range");
    return t;
}

inline TemplatePool load_templates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open template file '" + path + "'");
    try {
        return templates_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("template file '" + path + "': " + e.what());
    }
}

namespace detail {

inline std::size_t uniform_between(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + uniform_index(rng, hi - lo + 1);
}

inline std::string expand(std::string_view tpl, const TemplatePool& t, Rng& rng, int depth = 0) {
    if (depth > 6) throw DataError("template expansion too deep");
    std::string out;
    for (std::size_t i = 0; i < tpl.size(); ++i) {
        if (tpl[i] != '{') {
            out.push_back(tpl[i]);
            continue;
        }
        auto close = tpl.find('}', i);
        if (close == std::string_view::npos) throw DataError("unterminated placeholder in template");
        std::string key(tpl.substr(i + 1, close - i - 1));
        i = close;
        if (key.rfind("int:", 0) == 0) {
            auto colon = key.find(':', 4);
            auto lo = std::stoull(key.substr(4, colon - 4));
            auto hi = std::stoull(key.substr(colon + 1));
            out += std::to_string(uniform_between(rng, lo, hi));
        } else if (key == "updirs") {
            const auto& unit = t.pools.at("updir");
            const auto& u = unit[uniform_index(rng, unit.size())];
            const auto reps = uniform_between(rng, t.updir_min, t.updir_max);
            for (std::size_t r = 0; r < reps; ++r) out += u;
        } else {
            auto it = t.pools.find(key);
            if (it == t.pools.end() || it->second.empty()) throw DataError("unknown template pool '" + key + "'");
            out += expand(it->second[uniform_index(rng, it->second.size())], t, rng, depth + 1);
        }
    }
    return out;
}

inline std::string benign_pair(const TemplatePool& t, Rng& rng) {
    double total = 0;
    for (const auto& p : t.benign_params) total += p.weight;
    double x = uniform_real(rng) * total;
    const WeightedParam* pick = &t.benign_params.back();
    for (const auto& p : t.benign_params) {
        if (x < p.weight) {
            pick = &p;
            break;
        }
        x -= p.weight;
    }
    return pick->name + "=" + expand(pick->value, t, rng);
}

inline std::string benign_query(const TemplatePool& t, Rng& rng, std::size_t lo, std::size_t hi) {
    const auto pairs = uniform_between(rng, lo, hi);
    std::string q;
    for (std::size_t i = 0; i < pairs; ++i) {
        if (i) q.push_back('&');
        q += benign_pair(t, rng);
    }
    return q;
}

// Runs a candidate through the ingest normalizer; empty when it would not
// survive normalization and the character filter.
inline std::optional<std::string> admissible(const std::string& raw) {
    auto o = normalize(RawQuery{raw, 0, 0});
    if (o.status != NormalizeStatus::Ok || char_filter(o.query) != FilterVerdict::Keep) return std::nullopt;
    return o.query.text;
}

} // namespace detail

inline std::string expand_template(std::string_view tpl, const TemplatePool& t, Rng& rng) {
    return detail::expand(tpl, t, rng);
}

// --- generators ------------------------------------------------------------

// Proportions over SQLI, XSS, DT, RFI.
using ClassMix = std::array<double, 4>;

inline ClassMix default_class_mix() {
    ClassMix m{0.4909, 0.2832, 0.0982, 0.0892};
    double s = m[0] + m[1] + m[2] + m[3];
    for (auto& v : m) v /= s;
    return m;
}

inline std::vector<NormalizedQuery> gen_benign(std::size_t n, std::uint64_t seed, const TemplatePool& t,
                                               std::unordered_set<std::string>* taken = nullptr) {
    Rng rng(seed);
    std::unordered_set<std::string> local;
    auto& seen = taken ? *taken : local;
    std::vector<NormalizedQuery> out;
    std::size_t attempts = 0;
    while (out.size() < n) {
        if (++attempts > 50 * n + 1000) throw Error("benign templates cannot produce enough distinct queries");
        auto text = detail::admissible(detail::benign_query(t, rng, t.benign_pairs_min, t.benign_pairs_max));
        if (!text || !seen.insert(*text).second) continue;
        out.push_back({*text, Label::Benign, std::nullopt, 0});
    }
    return out;
}

inline AttackClass draw_class(const ClassMix& mix, Rng& rng) {
    double total = mix[0] + mix[1] + mix[2] + mix[3];
    double x = uniform_real(rng) * total;
    for (std::size_t c = 0; c < 4; ++c) {
        if (x < mix[c]) return static_cast<AttackClass>(c);
        x -= mix[c];
    }
    return AttackClass::RFI;
}

inline std::string vary_case(std::string s, double p, Rng& rng) {
    for (auto& c : s)
        if (std::isalpha(static_cast<unsigned char>(c)) && uniform_real(rng) < p)
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

inline std::vector<NormalizedQuery> gen_malicious(std::size_t n, const ClassMix& mix, std::uint64_t seed,
                                                  const TemplatePool& t,
                                                  std::unordered_set<std::string>* taken = nullptr) {
    for (double v : mix)
        if (v < 0) throw Error("class mix proportions must be non-negative");
    Rng rng(seed);
    std::unordered_set<std::string> local;
    auto& seen = taken ? *taken : local;
    std::vector<NormalizedQuery> out;
    std::size_t attempts = 0;
    // The class is drawn once per query; rejected payloads are redrawn within
    // it so filtering and dedup do not skew the mix.
    std::optional<AttackClass> slot;
    while (out.size() < n) {
        if (++attempts > 50 * n + 1000) throw Error("attack templates cannot produce enough distinct queries");
        if (!slot) slot = draw_class(mix, rng);
        const auto cls = *slot;
        const auto& tpls = t.attack_templates[static_cast<std::size_t>(cls)];
        if (tpls.empty()) throw DataError("no templates for attack class " + std::string(to_string(cls)));
        std::string payload = expand_template(tpls[uniform_index(rng, tpls.size())], t, rng);
        const auto& carrier = t.carrier_params[uniform_index(rng, t.carrier_params.size())];
        std::vector<std::string> pairs;
        const auto shell = detail::uniform_between(rng, t.shell_pairs_min, t.shell_pairs_max);
        for (std::size_t i = 0; i < shell; ++i) pairs.push_back(detail::benign_pair(t, rng));
        pairs.insert(pairs.begin() + static_cast<std::ptrdiff_t>(uniform_index(rng, pairs.size() + 1)),
                     carrier + "=" + vary_case(payload, t.case_variation, rng));
        std::string raw;
        for (std::size_t i = 0; i < pairs.size(); ++i) raw += (i ? "&" : "") + pairs[i];
        auto text = detail::admissible(raw);
        if (!text || !seen.insert(*text).second) continue;
        out.push_back({*text, Label::Malicious, cls, 0});
        slot.reset();
    }
    return out;
}

struct CorpusConfig {
    std::size_t batches = 10;
    std::size_t batch_size = 10000;
    std::size_t malicious_per_batch = 92;
    std::size_t initial_benign = 80;
    std::size_t initial_malicious = 20;
    ClassMix class_mix = default_class_mix();
    bool mix_benign_across_batches = true;
    std::uint64_t seed = 1;

    void validate() const {
        if (malicious_per_batch > batch_size) throw DataError("malicious_per_batch exceeds batch_size");
        double s = class_mix[0] + class_mix[1] + class_mix[2] + class_mix[3];
        if (std::abs(s - 1.0) > 1e-6) throw DataError("class_mix proportions must sum to 1");
    }
};

inline std::vector<NormalizedQuery> gen_corpus(const CorpusConfig& cfg, const TemplatePool& t) {
    cfg.validate();
    std::unordered_set<std::string> taken;
    std::vector<NormalizedQuery> out;

    auto init_b = gen_benign(cfg.initial_benign, mix_seed(cfg.seed, 1), t, &taken);
    auto init_m = gen_malicious(cfg.initial_malicious, cfg.class_mix, mix_seed(cfg.seed, 2), t, &taken);
    std::vector<NormalizedQuery> initial = init_b;
    initial.insert(initial.end(), init_m.begin(), init_m.end());
    Rng order(mix_seed(cfg.seed, 3));
    shuffle(initial, order);
    out.insert(out.end(), initial.begin(), initial.end());

    const std::size_t benign_per_batch = cfg.batch_size - cfg.malicious_per_batch;
    // Benign traffic for every batch is drawn as one pool and mixed before it
    // is dealt out, so batches do not differ in benign structure.
    auto benign = gen_benign(benign_per_batch * cfg.batches, mix_seed(cfg.seed, 4), t, &taken);
    if (cfg.mix_benign_across_batches) {
        Rng mixer(mix_seed(cfg.seed, 5));
        shuffle(benign, mixer);
    }
    for (std::size_t b = 0; b < cfg.batches; ++b) {
        std::vector<NormalizedQuery> batch(benign.begin() + static_cast<std::ptrdiff_t>(b * benign_per_batch),
                                           benign.begin() + static_cast<std::ptrdiff_t>((b + 1) * benign_per_batch));
        auto mal = gen_malicious(cfg.malicious_per_batch, cfg.class_mix, mix_seed(cfg.seed, 100 + b), t, &taken);
        batch.insert(batch.end(), mal.begin(), mal.end());
        Rng shuffler(mix_seed(cfg.seed, 200 + b));
        shuffle(batch, shuffler);
        for (auto& q : batch) q.day = static_cast<int>(b + 1);
        out.insert(out.end(), batch.begin(), batch.end());
    }
    return out;
}

inline nlohmann::json to_json(const CorpusConfig& c) {
    return {{"batches", c.batches},
            {"batch_size", c.batch_size},
            {"malicious_per_batch", c.malicious_per_batch},
            {"initial_benign", c.initial_benign},
            {"initial_malicious", c.initial_malicious},
            {"class_mix", c.class_mix},
            {"mix_benign_across_batches", c.mix_benign_across_batches},
            {"seed", c.seed}};
}

inline CorpusConfig corpus_config_from_json(const nlohmann::json& j) {
    CorpusConfig c;
    c.batches = j.value("batches", c.batches);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.malicious_per_batch = j.value("malicious_per_batch", c.malicious_per_batch);
    c.initial_benign = j.value("initial_benign", c.initial_benign);
    c.initial_malicious = j.value("initial_malicious", c.initial_malicious);
    if (j.contains("class_mix")) {
        auto m = j.at("class_mix").get<std::vector<double>>();
        if (m.size() != 4) throw DataError("class_mix needs four proportions (SQLI, XSS, DT, RFI)");
        double s = m[0] + m[1] + m[2] + m[3];
        if (!(s > 0)) throw DataError("class_mix must have a positive sum");
        for (std::size_t i = 0; i < 4; ++i) c.class_mix[i] = m[i] / s;
    }
    c.mix_benign_across_batches = j.value("mix_benign_across_batches", c.mix_benign_across_batches);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

} // namespace amods

#endif
