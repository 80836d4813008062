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
#include "amods/kmedoids.hpp"
#include "amods/selection.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <limits>
#include <set>

namespace amods {
namespace {

const KernelSpec kRbf = KernelSpec::rbf(2.0);

Vector random_point(Rng& rng, std::size_t d = 3) {
    Vector v(d);
    for (auto& x : v) x = 2 * uniform_real(rng) - 1;
    return v;
}

// Scored set with the given decision values and random meta vectors.
ScoredSet scored(const std::vector<double>& f, std::uint64_t seed) {
    Rng rng(seed);
    ScoredSet s;
    s.f = f;
    for (std::size_t i = 0; i < f.size(); ++i) s.z.push_back(random_point(rng));
    return s;
}

TEST(ConfusingRegion, Examples) {
    EXPECT_FALSE(confusing_region(std::vector<double>{0.5, -2.0}, std::vector<int>{1, 1}));
    auto r = confusing_region(std::vector<double>{-0.3, 0.7, 0.9, -1.5}, std::vector<int>{1, -1, 1, 1});
    ASSERT_TRUE(r);
    EXPECT_EQ(*r, (ConfusingRegion{-0.3, 0.7}));
    auto single = confusing_region(std::vector<double>{-0.2}, std::vector<int>{1});
    EXPECT_EQ(*single, (ConfusingRegion{-0.2, -0.2}));
}

double brute_objective(const DistanceMatrix& d, const std::vector<std::size_t>& med) {
    double e = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (auto m : med) best = std::min(best, d(i, m));
        e += best;
    }
    return e;
}

double exhaustive_optimum(const DistanceMatrix& d, std::size_t k) {
    const std::size_t n = d.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<bool> pick(n, false);
    std::fill(pick.end() - static_cast<std::ptrdiff_t>(k), pick.end(), true);
    do {
        std::vector<std::size_t> med;
        for (std::size_t i = 0; i < n; ++i)
            if (pick[i]) med.push_back(i);
        best = std::min(best, brute_objective(d, med));
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

TEST(KMedoids, ThreeSeparatedPairs) {
    std::vector<Vector> pts{{0, 0}, {0.1, 0}, {5, 5}, {5.1, 5}, {-5, 5}, {-5, 5.1}};
    DistanceMatrix d(pts, [](const Vector& a, const Vector& b) { return std::sqrt(squared_distance(a, b)); });
    auto r = k_medoids(d, 3);
    std::set<std::size_t> pairs;
    for (auto m : r.medoids) pairs.insert(m / 2);
    EXPECT_EQ(pairs.size(), 3u);
    EXPECT_NEAR(r.objective, exhaustive_optimum(d, 3), 1e-12);
}

// Up to three tight, well-separated groups: the optimum puts one medoid in each.
TEST(KMedoids, MatchesExhaustiveOptimumOnSeparatedGroups) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed);
        const std::size_t groups = 1 + uniform_index(rng, 3);
        std::vector<Vector> pts;
        for (std::size_t g = 0; g < groups; ++g) {
            const Vector centre{10.0 * static_cast<double>(g), 3.0 * uniform_real(rng)};
            const std::size_t size = 1 + uniform_index(rng, 4);
            for (std::size_t i = 0; i < size; ++i)
                pts.push_back({centre[0] + 0.05 * standard_normal(rng), centre[1] + 0.05 * standard_normal(rng)});
        }
        DistanceMatrix d(pts, [](const Vector& a, const Vector& b) { return kernel_distance(kRbf, a, b); });
        for (auto init : {KMedoidsOptions::Init::FarthestPoint, KMedoidsOptions::Init::Random}) {
            KMedoidsOptions o;
            o.init = init;
            o.seed = seed;
            auto r = k_medoids(d, groups, o);
            EXPECT_NEAR(r.objective, brute_objective(d, r.medoids), 1e-12);
            EXPECT_NEAR(r.objective, exhaustive_optimum(d, groups), 1e-9) << "seed " << seed;
        }
    }
}

// On arbitrary sets the swap search stops at a local optimum: no single
// medoid/non-medoid exchange lowers the objective.
TEST(KMedoids, NoSingleSwapImprovesTheResult) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed);
        const std::size_t n = 4 + uniform_index(rng, 9);
        std::vector<Vector> pts;
        for (std::size_t i = 0; i < n; ++i) pts.push_back(random_point(rng, 2));
        DistanceMatrix d(pts, [](const Vector& a, const Vector& b) { return kernel_distance(kRbf, a, b); });
        for (std::size_t k = 1; k <= 3; ++k) {
            KMedoidsOptions o;
            o.seed = seed;
            auto r = k_medoids(d, k, o);
            EXPECT_GE(r.objective, exhaustive_optimum(d, k) - 1e-9);
            for (std::size_t s = 0; s < k; ++s)
                for (std::size_t h = 0; h < n; ++h) {
                    if (std::find(r.medoids.begin(), r.medoids.end(), h) != r.medoids.end()) continue;
                    auto swapped = r.medoids;
                    swapped[s] = h;
                    EXPECT_GE(brute_objective(d, swapped), r.objective - 1e-9) << "seed " << seed << " k " << k;
                }
        }
    }
}

// The swap search is local. On random sets it now and then stops above the
// exhaustive optimum.
TEST(KMedoids, LocalOptimumCanMissTheGlobalOne) {
    std::size_t misses = 0, cases = 0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        const std::size_t n = 4 + uniform_index(rng, 9);
        std::vector<Vector> pts;
        for (std::size_t i = 0; i < n; ++i) pts.push_back(random_point(rng, 2));
        DistanceMatrix d(pts, [](const Vector& a, const Vector& b) { return kernel_distance(kRbf, a, b); });
        KMedoidsOptions o;
        o.seed = seed;
        auto r = k_medoids(d, 3, o);
        misses += r.objective > exhaustive_optimum(d, 3) + 1e-9;
        ++cases;
    }
    // rare but real; recorded so a change in the search shows up here
    EXPECT_LT(misses * 10, cases);
}

TEST(KMedoids, ObjectiveNeverIncreases) {
    Rng rng(21);
    std::vector<Vector> pts;
    for (int i = 0; i < 120; ++i) pts.push_back(random_point(rng));
    DistanceMatrix d(pts, [](const Vector& a, const Vector& b) { return kernel_distance(kRbf, a, b); });
    for (auto init : {KMedoidsOptions::Init::FarthestPoint, KMedoidsOptions::Init::Random}) {
        KMedoidsOptions o;
        o.init = init;
        o.seed = 4;
        auto r = k_medoids(d, 12, o);
        ASSERT_GE(r.history.size(), 2u);
        for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_LE(r.history[i], r.history[i - 1] + 1e-12);
        std::set<std::size_t> distinct(r.medoids.begin(), r.medoids.end());
        EXPECT_EQ(distinct.size(), 12u);
    }
}

TEST(Suspicion, TableShapedCount) {
    // 351 candidates inside the region, plus 400 outside it
    std::vector<double> f;
    for (int i = 0; i < 351; ++i) f.push_back(-0.5 + i / 351.0);
    for (int i = 0; i < 400; ++i) f.push_back(i % 2 ? 1.2 : -1.3);
    auto U = scored(f, 7);
    SelectionBudget b; // M = 150, 7:3 -> cap 105
    auto out = suspicion_selection(U, all_indices(U.size()), ConfusingRegion{-0.5, 0.5}, b.R, b.suspicion_cap(), kRbf);
    EXPECT_EQ(out.candidates, 351u);
    EXPECT_EQ(out.suspicions.size(), 70u);
    for (auto i : out.suspicions) EXPECT_LE(std::abs(U.f[i]), 0.5);
}

TEST(Suspicion, FewCandidatesReturnedVerbatim) {
    auto U = scored({0.1, 2.0, -0.2, 0.0, -3.0}, 1);
    auto out = suspicion_selection(U, all_indices(5), ConfusingRegion{-0.2, 0.1}, 5, 105, kRbf);
    EXPECT_EQ(out.suspicions, (std::vector<std::size_t>{0, 2, 3}));
    EXPECT_EQ(out.clusters, 0u);
}

TEST(Suspicion, EmptyCandidates) {
    auto U = scored({2.0, -3.0}, 1);
    EXPECT_TRUE(suspicion_selection(U, all_indices(2), ConfusingRegion{-0.2, 0.1}, 5, 105, kRbf).suspicions.empty());
}

// Recomputes every candidate's distance sum from scratch at each step.
std::vector<std::size_t> brute_kff(const ScoredSet& U, std::vector<Vector> refs, std::size_t count) {
    std::vector<std::size_t> cand, picks;
    for (std::size_t i = 0; i < U.size(); ++i)
        if (U.f[i] > 0) cand.push_back(i);
    std::vector<bool> used(U.size(), false);
    while (picks.size() < count && picks.size() < cand.size()) {
        std::size_t best = 0;
        double best_sum = -1;
        for (auto c : cand) {
            if (used[c]) continue;
            double s = 0;
            for (const auto& r : refs) s += kernel_distance(kRbf, U.z[c], r);
            if (s > best_sum) {
                best_sum = s;
                best = c;
            }
        }
        used[best] = true;
        picks.push_back(best);
        refs.push_back(U.z[best]);
    }
    return picks;
}

TEST(Exemplar, MatchesBruteForceGreedy) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        const std::size_t n = 20 + uniform_index(rng, 300);
        std::vector<double> f;
        for (std::size_t i = 0; i < n; ++i) f.push_back(2 * uniform_real(rng) - 0.8);
        auto U = scored(f, seed + 100);
        std::vector<Vector> refs;
        for (int i = 0; i < 15; ++i) refs.push_back(random_point(rng));
        for (std::size_t count : {1, 3, 5}) {
            EXPECT_EQ(exemplar_selection(U, all_indices(n), refs, count, kRbf), brute_kff(U, refs, count));
        }
    }
}

TEST(Exemplar, FirstPickIsGlobalArgmax) {
    Rng rng(3);
    std::vector<double> f(500, 0.5);
    auto U = scored(f, 4);
    std::vector<Vector> refs{random_point(rng), random_point(rng)};
    auto picks = exemplar_selection(U, all_indices(500), refs, 1, kRbf);
    double best = -1;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < 500; ++i) {
        double s = kernel_distance(kRbf, U.z[i], refs[0]) + kernel_distance(kRbf, U.z[i], refs[1]);
        if (s > best) {
            best = s;
            arg = i;
        }
    }
    EXPECT_EQ(picks, std::vector<std::size_t>{arg});
}

TEST(Exemplar, EdgeCases) {
    auto U = scored({-0.5, 0.3, -1.0}, 2);
    std::vector<Vector> refs{{0, 0, 0}};
    EXPECT_EQ(exemplar_selection(U, all_indices(3), refs, 3, kRbf), std::vector<std::size_t>{1});
    EXPECT_TRUE(exemplar_selection(U, all_indices(3), refs, 0, kRbf).empty());
    // identical candidates tie: the earlier one wins
    ScoredSet tie{{0.4, 0.4}, {{0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}}};
    EXPECT_EQ(exemplar_selection(tie, all_indices(2), refs, 1, kRbf), std::vector<std::size_t>{0});
}

// A batch where both sides have plenty of candidates.
ScoredSet rich_batch(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> f;
    for (std::size_t i = 0; i < n; ++i) f.push_back(3 * uniform_real(rng) - 1.2);
    return scored(f, seed + 1);
}

std::vector<Vector> refs_for(std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vector> refs;
    for (int i = 0; i < 10; ++i) refs.push_back(random_point(rng));
    return refs;
}

TEST(Hybrid, SpendsWholeBudgetWhenCandidatesSuffice) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        auto U = rich_batch(2000, seed);
        for (auto region : {ConfusingRegion{-0.6, 0.2}, ConfusingRegion{-0.05, 0.0}}) {
            auto r = hybrid_select(U, region, refs_for(seed), SelectionBudget{}, kRbf, seed);
            EXPECT_EQ(r.total(), 150u);
            EXPECT_LE(r.suspicions.size(), 105u);
            for (auto i : r.suspicions) EXPECT_TRUE(region.contains(U.f[i]));
            for (auto i : r.exemplars) EXPECT_GT(U.f[i], 0.0);
            std::set<std::size_t> all(r.suspicions.begin(), r.suspicions.end());
            all.insert(r.exemplars.begin(), r.exemplars.end());
            EXPECT_EQ(all.size(), 150u);
        }
    }
}

TEST(Hybrid, ExemplarsMakeUpForFewSuspicions) {
    auto U = rich_batch(2000, 9);
    // exactly one query of the SS subset falls inside the region
    auto [ss, es] = split_batch(U.size(), SelectionBudget{}, 5);
    const std::size_t lone = ss[3];
    U.f[lone] = -0.0123;
    auto r = hybrid_select(U, ConfusingRegion{-0.0123, -0.0123}, refs_for(9), SelectionBudget{}, kRbf, 5);
    EXPECT_EQ(r.confusing_count, 1u);
    EXPECT_EQ(r.suspicions, std::vector<std::size_t>{lone});
    EXPECT_EQ(r.exemplars.size(), 149u);
}

TEST(Hybrid, NoRegionMeansAllExemplars) {
    auto U = rich_batch(2000, 2);
    auto r = hybrid_select(U, std::nullopt, refs_for(2), SelectionBudget{}, kRbf, 3);
    EXPECT_TRUE(r.suspicions.empty());
    EXPECT_EQ(r.exemplars.size(), 150u);
}

TEST(Hybrid, DegenerateThetaEqualsSingleStrategies) {
    auto U = rich_batch(1500, 6);
    const ConfusingRegion region{-0.4, 0.3};
    SelectionBudget ss_only{150, 1, 0, 5}, es_only{150, 0, 1, 5};
    auto h1 = hybrid_select(U, region, refs_for(6), ss_only, kRbf, 11);
    auto s1 = ss_only_select(U, region, ss_only, kRbf, 11);
    EXPECT_EQ(h1.suspicions, s1.suspicions);
    EXPECT_EQ(h1.exemplars, s1.exemplars);
    EXPECT_EQ(h1.confusing_count, s1.confusing_count);
    auto h2 = hybrid_select(U, region, refs_for(6), es_only, kRbf, 11);
    auto e2 = es_only_select(U, refs_for(6), es_only, kRbf);
    EXPECT_EQ(h2.suspicions, e2.suspicions);
    EXPECT_EQ(h2.exemplars, e2.exemplars);
    EXPECT_EQ(h2.exemplars.size(), 150u);
}

TEST(Split, DisjointAndProportional) {
    auto [ss, es] = split_batch(1000, SelectionBudget{}, 1);
    EXPECT_EQ(ss.size(), 700u);
    EXPECT_EQ(es.size(), 300u);
    std::vector<std::size_t> all;
    std::merge(ss.begin(), ss.end(), es.begin(), es.end(), std::back_inserter(all));
    EXPECT_EQ(all, all_indices(1000));
    EXPECT_EQ(split_batch(1000, SelectionBudget{}, 1).first, ss);
}

TEST(Budget, Validation) {
    EXPECT_THROW((SelectionBudget{0, 7, 3, 5}.validate()), Error);
    EXPECT_THROW((SelectionBudget{150, 0, 0, 5}.validate()), Error);
    EXPECT_THROW((SelectionBudget{150, 7, 3, 0}.validate()), Error);
    EXPECT_EQ((SelectionBudget{150, 7, 3, 5}.suspicion_cap()), 105u);
    EXPECT_EQ((SelectionBudget{15, 7, 3, 5}.suspicion_cap()), 11u);
}

TEST(Uncertainty, Examples) {
    std::vector<double> f{1.5, -0.9, 0.1};
    EXPECT_EQ(al_select(f, 2), (std::vector<std::size_t>{2, 1}));
    EXPECT_TRUE(al_select(f, 0).empty());
    std::vector<double> wide;
    for (int i = 0; i < 40; ++i) wide.push_back(-1 + i / 20.0);
    for (int i = 0; i < 400; ++i) wide.push_back(i % 2 ? 3.0 : -2.5);
    EXPECT_EQ(al_select(wide, 150).size(), 40u);
}

TEST(Random, Basics) {
    auto a = random_select(10, 10, 4);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(sorted, all_indices(10));
    EXPECT_EQ(random_select(100, 7, 9), random_select(100, 7, 9));
    EXPECT_EQ(random_select(3, 7, 9).size(), 3u);
}

TEST(Random, UniformFrequencies) {
    std::array<int, 4> counts{};
    for (std::uint64_t s = 0; s < 10000; ++s) ++counts[random_select(4, 1, mix_seed(123, s))[0]];
    const double sigma = std::sqrt(10000 * 0.25 * 0.75);
    for (int c : counts) EXPECT_LE(std::abs(c - 2500), 3 * sigma);
}

} // namespace
} // namespace amods
