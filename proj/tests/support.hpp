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
// Shared fixtures for the test binaries.

#ifndef AMODS_TESTS_SUPPORT_HPP
#define AMODS_TESTS_SUPPORT_HPP

#include "amods/adaptive_loop.hpp"
#include "amods/corpus.hpp"

#include <filesystem>
#include <string>

namespace amods::testing {

inline const TemplatePool& templates() {
    static const TemplatePool t = load_templates(std::string(AMODS_DATA_DIR) + "/templates.json");
    return t;
}

// Desk-scale corpus: 1000 queries per batch, 20 of them malicious.
inline CorpusConfig fixture_config(std::uint64_t seed, std::size_t batches = 10, std::size_t batch_size = 1000,
                                   std::size_t malicious = 20) {
    CorpusConfig c;
    c.batches = batches;
    c.batch_size = batch_size;
    c.malicious_per_batch = malicious;
    c.seed = seed;
    return c;
}

inline Corpus fixture_corpus(std::uint64_t seed, std::size_t batches = 10, std::size_t batch_size = 1000,
                             std::size_t malicious = 20) {
    return split_by_day(gen_corpus(fixture_config(seed, batches, batch_size, malicious), templates()));
}

inline std::vector<NormalizedQuery> all_batches(const Corpus& c) {
    std::vector<NormalizedQuery> v;
    for (const auto& b : c.batches) v.insert(v.end(), b.begin(), b.end());
    return v;
}

// Budget scaled to a 1000-query batch.
inline RunConfig fixture_run(Strategy s, std::uint64_t seed) {
    RunConfig c;
    c.strategy = s;
    c.seed = seed;
    c.model.seed = seed;
    c.budget.M = 15;
    return c;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("amods-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace amods::testing

#endif
