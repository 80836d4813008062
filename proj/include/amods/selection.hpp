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
  Query selection for labeling.

  SVM HYBRID splits an unknown batch into two disjoint subsets. On the first
  it runs Suspicion Selection: unknown queries whose decision value falls in
  the confusing region (the f-band spanned by misclassified training queries
  inside the margin) are clustered with K-medoids and the medoids are
  selected. On the second it runs Exemplar Selection: kernel farthest-first
  traversal over the malicious side, measured against the known malicious
  queries. Distances are feature-space distances under the meta SVM kernel,
  computed on the meta SVM's input vectors.

  Uncertainty sampling (closest to the hyperplane) and uniform random
  selection are provided as baselines.
*/

#ifndef AMODS_SELECTION_HPP
#define AMODS_SELECTION_HPP

#include "amods/common.hpp"
#include "amods/kmedoids.hpp"
#include "amods/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace amods {

struct SelectionBudget {
    std::size_t M = 150;
    double ss_share = 7;
    double es_share = 3;
    std::size_t R = 5;

    void validate() const {
        if (M < 1) throw Error("selection budget M must be >= 1");
        if (ss_share < 0 || es_share < 0 || ss_share + es_share <= 0) throw Error("theta shares must be >= 0 with a positive sum");
        if (R < 1) throw Error("average cluster size R must be >= 1");
    }

    double ss_fraction() const { return ss_share / (ss_share + es_share); }
    std::size_t suspicion_cap() const {
        return static_cast<std::size_t>(std::ceil(ss_fraction() * static_cast<double>(M) - 1e-9));
    }
};

struct ConfusingRegion {
    double f_lower = 0;
    double f_upper = 0;

    bool contains(double f) const noexcept { return f_lower <= f && f <= f_upper; }
    friend bool operator==(const ConfusingRegion&, const ConfusingRegion&) = default;
};

// Decision values and meta-input vectors of a set of queries, computed once.
struct ScoredSet {
    std::vector<double> f;
    std::vector<Vector> z;

    std::size_t size() const noexcept { return f.size(); }
};

// Q = training queries with y * f < 0 inside the margin; the region is the
// f-range of Q.
inline std::optional<ConfusingRegion> confusing_region(std::span<const double> f, std::span<const int> y) {
    if (f.size() != y.size()) throw LengthMismatch("decision values and labels differ in length");
    std::optional<ConfusingRegion> region;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(y[i] * f[i] < 0 && std::abs(f[i]) <= 1.0)) continue;
        if (!region) region = ConfusingRegion{f[i], f[i]};
        region->f_lower = std::min(region->f_lower, f[i]);
        region->f_upper = std::max(region->f_upper, f[i]);
    }
    return region;
}

struct SuspicionOutcome {
    std::vector<std::size_t> suspicions; // indices into the scored set, ascending
    std::size_t candidates = 0;          // unknown queries inside the confusing region
    std::size_t clusters = 0;            // K used for K-medoids (0: candidates returned verbatim)
    KMedoidsResult clustering;
};

// Suspicion Selection over the members of `subset`. K = floor(candidates / R),
// capped at `cap`; with K = 0 the candidates themselves are returned.
inline SuspicionOutcome suspicion_selection(const ScoredSet& U, std::span<const std::size_t> subset,
                                            const ConfusingRegion& region, std::size_t R, std::size_t cap,
                                            const KernelSpec& kernel, const KMedoidsOptions& km = {}) {
    SuspicionOutcome out;
    std::vector<std::size_t> cand;
    for (auto i : subset)
        if (region.contains(U.f[i])) cand.push_back(i);
    out.candidates = cand.size();
    if (cand.empty() || cap == 0) return out;

    const std::size_t k = std::min(cand.size() / std::max<std::size_t>(R, 1), cap);
    if (k == 0) {
        out.suspicions.assign(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(std::min(cand.size(), cap)));
        return out;
    }
    std::vector<Vector> pts;
    pts.reserve(cand.size());
    for (auto i : cand) pts.push_back(U.z[i]);
    DistanceMatrix d(pts, [&](const Vector& a, const Vector& b) { return kernel_distance(kernel, a, b); });
    out.clustering = k_medoids(d, k, km);
    out.clusters = k;
    for (auto m : out.clustering.medoids) out.suspicions.push_back(cand[m]);
    std::sort(out.suspicions.begin(), out.suspicions.end());
    return out;
}

// Exemplar Selection by kernel farthest-first traversal. Candidates are the
// members of `subset` on the malicious side (f > 0). Each step picks the
// candidate with the largest summed kernel distance to the malicious
// reference set; the pick then joins that set for later steps only. Ties go
// to the earlier candidate.
inline std::vector<std::size_t> exemplar_selection(const ScoredSet& U, std::span<const std::size_t> subset,
                                                   std::span<const Vector> malicious_refs, std::size_t count,
                                                   const KernelSpec& kernel) {
    std::vector<std::size_t> cand;
    for (auto i : subset)
        if (U.f[i] > 0) cand.push_back(i);
    std::vector<std::size_t> picks;
    if (count == 0 || cand.empty()) return picks;

    std::vector<double> sums(cand.size(), 0.0);
    for (std::size_t c = 0; c < cand.size(); ++c)
        for (const auto& ref : malicious_refs) sums[c] += kernel_distance(kernel, U.z[cand[c]], ref);
    std::vector<char> taken(cand.size(), 0);
    while (picks.size() < count && picks.size() < cand.size()) {
        std::size_t best = cand.size();
        double best_sum = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < cand.size(); ++c) {
            if (!taken[c] && sums[c] > best_sum) {
                best_sum = sums[c];
                best = c;
            }
        }
        taken[best] = 1;
        picks.push_back(cand[best]);
        for (std::size_t c = 0; c < cand.size(); ++c)
            if (!taken[c]) sums[c] += kernel_distance(kernel, U.z[cand[c]], U.z[cand[best]]);
    }
    return picks;
}

struct SelectionResult {
    std::vector<std::size_t> suspicions; // indices into the batch
    std::vector<std::size_t> exemplars;
    std::size_t margin_count = 0;    // SS subset members with |f| <= 1
    std::size_t confusing_count = 0; // SS subset members inside the confusing region
    std::optional<ConfusingRegion> region;

    std::size_t total() const noexcept { return suspicions.size() + exemplars.size(); }
    std::vector<std::size_t> all() const {
        std::vector<std::size_t> v = suspicions;
        v.insert(v.end(), exemplars.begin(), exemplars.end());
        return v;
    }
};

// Disjoint SS/ES subsets sized by theta. Membership comes from a seeded
// shuffle; each subset keeps the batch order.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_batch(std::size_t n,
                                                                                 const SelectionBudget& b,
                                                                                 std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    Rng rng(seed);
    shuffle(idx, rng);
    const auto n_ss = static_cast<std::size_t>(std::llround(b.ss_fraction() * static_cast<double>(n)));
    std::vector<std::size_t> ss(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_ss));
    std::vector<std::size_t> es(idx.begin() + static_cast<std::ptrdiff_t>(n_ss), idx.end());
    std::sort(ss.begin(), ss.end());
    std::sort(es.begin(), es.end());
    return {std::move(ss), std::move(es)};
}

inline std::size_t count_in_margin(const ScoredSet& U, std::span<const std::size_t> subset) {
    std::size_t c = 0;
    for (auto i : subset) c += std::abs(U.f[i]) <= 1.0;
    return c;
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = i;
    return v;
}

inline SelectionResult hybrid_select(const ScoredSet& U, const std::optional<ConfusingRegion>& region,
                                     std::span<const Vector> malicious_refs, const SelectionBudget& budget,
                                     const KernelSpec& kernel, std::uint64_t seed,
                                     KMedoidsOptions::Init init = KMedoidsOptions::Init::FarthestPoint) {
    budget.validate();
    SelectionResult r;
    r.region = region;
    auto [ss, es] = split_batch(U.size(), budget, seed);
    r.margin_count = count_in_margin(U, ss);
    if (region) {
        KMedoidsOptions km;
        km.init = init;
        km.seed = mix_seed(seed, 1);
        auto s = suspicion_selection(U, ss, *region, budget.R, budget.suspicion_cap(), kernel, km);
        r.suspicions = std::move(s.suspicions);
        r.confusing_count = s.candidates;
    }
    r.exemplars = exemplar_selection(U, es, malicious_refs, budget.M - r.suspicions.size(), kernel);
    return r;
}

// Suspicion Selection alone over the whole batch.
inline SelectionResult ss_only_select(const ScoredSet& U, const std::optional<ConfusingRegion>& region,
                                      const SelectionBudget& budget, const KernelSpec& kernel, std::uint64_t seed,
                                      KMedoidsOptions::Init init = KMedoidsOptions::Init::FarthestPoint) {
    SelectionResult r;
    r.region = region;
    const auto all = all_indices(U.size());
    r.margin_count = count_in_margin(U, all);
    if (region) {
        KMedoidsOptions km;
        km.init = init;
        km.seed = mix_seed(seed, 1);
        auto s = suspicion_selection(U, all, *region, budget.R, budget.M, kernel, km);
        r.suspicions = std::move(s.suspicions);
        r.confusing_count = s.candidates;
    }
    return r;
}

// Exemplar Selection alone over the whole batch.
inline SelectionResult es_only_select(const ScoredSet& U, std::span<const Vector> malicious_refs,
                                      const SelectionBudget& budget, const KernelSpec& kernel) {
    SelectionResult r;
    r.exemplars = exemplar_selection(U, all_indices(U.size()), malicious_refs, budget.M, kernel);
    return r;
}

// Uncertainty sampling: margin members ordered by |f|, at most M.
inline std::vector<std::size_t> al_select(std::span<const double> f, std::size_t M) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (std::abs(f[i]) <= 1.0) in.push_back(i);
    std::stable_sort(in.begin(), in.end(), [&](auto a, auto b) { return std::abs(f[a]) < std::abs(f[b]); });
    if (in.size() > M) in.resize(M);
    return in;
}

inline std::vector<std::size_t> random_select(std::size_t n, std::size_t M, std::uint64_t seed) {
    auto idx = all_indices(n);
    Rng rng(seed);
    shuffle(idx, rng);
    idx.resize(std::min(M, n));
    return idx;
}

} // namespace amods

#endif
