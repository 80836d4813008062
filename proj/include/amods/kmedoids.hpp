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

#ifndef AMODS_KMEDOIDS_HPP
#define AMODS_KMEDOIDS_HPP

#include "amods/common.hpp"

#include <algorithm>
#include <iterator>
#include <limits>
#include <vector>

namespace amods {

// Dense symmetric dissimilarity matrix.
class DistanceMatrix {
public:
    DistanceMatrix() = default;

    template <typename Points, typename Distance>
    DistanceMatrix(const Points& points, Distance&& distance) : n_(std::size(points)), d_(n_ * n_, 0.0) {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) d_[i * n_ + j] = d_[j * n_ + i] = distance(points[i], points[j]);
    }

    std::size_t size() const noexcept { return n_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * n_ + j]; }

private:
    std::size_t n_ = 0;
    std::vector<double> d_;
};

struct KMedoidsOptions {
    enum class Init { FarthestPoint, Random };
    Init init = Init::FarthestPoint;
    std::size_t max_sweeps = 100;
    std::uint64_t seed = 0;
};

struct KMedoidsResult {
    std::vector<std::size_t> medoids;    // indices into the point set
    std::vector<std::size_t> assignment; // cluster slot per point
    double objective = 0;                // sum of distances to the assigned medoid
    std::vector<double> history;         // objective after init and after each sweep
    std::size_t sweeps = 0;
};

inline double medoid_objective(const DistanceMatrix& d, const std::vector<std::size_t>& medoids) {
    double e = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
        double best = std::numeric_limits<double>::infinity();
        for (auto m : medoids) best = std::min(best, d(j, m));
        e += best;
    }
    return e;
}

namespace detail {

inline std::vector<std::size_t> initial_medoids(const DistanceMatrix& d, std::size_t k, const KMedoidsOptions& opts) {
    const std::size_t n = d.size();
    Rng rng(opts.seed);
    std::vector<std::size_t> medoids;
    if (opts.init == KMedoidsOptions::Init::Random) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        shuffle(idx, rng);
        medoids.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
        return medoids;
    }
    medoids.push_back(uniform_index(rng, n));
    std::vector<double> nearest(n);
    for (std::size_t j = 0; j < n; ++j) nearest[j] = d(j, medoids[0]);
    while (medoids.size() < k) {
        std::size_t pick = n;
        double far = -1;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::find(medoids.begin(), medoids.end(), j) != medoids.end()) continue;
            if (nearest[j] > far) {
                far = nearest[j];
                pick = j;
            }
        }
        medoids.push_back(pick);
        for (std::size_t j = 0; j < n; ++j) nearest[j] = std::min(nearest[j], d(j, pick));
    }
    return medoids;
}

} // namespace detail

// PAM: seeded initial medoids, then repeated best-improvement swaps of one
// medoid for one non-medoid until no swap lowers the objective.
inline KMedoidsResult k_medoids(const DistanceMatrix& d, std::size_t k, const KMedoidsOptions& opts = {}) {
    const std::size_t n = d.size();
    KMedoidsResult r;
    if (k == 0 || n == 0) return r;
    k = std::min(k, n);
    r.medoids = detail::initial_medoids(d, k, opts);

    std::vector<double> d1(n), d2(n);
    std::vector<std::size_t> slot1(n);
    auto refresh = [&] {
        for (std::size_t j = 0; j < n; ++j) {
            d1[j] = d2[j] = std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < r.medoids.size(); ++s) {
                double v = d(j, r.medoids[s]);
                if (v < d1[j]) {
                    d2[j] = d1[j];
                    d1[j] = v;
                    slot1[j] = s;
                } else if (v < d2[j]) {
                    d2[j] = v;
                }
            }
        }
    };
    refresh();
    auto current = [&] {
        double e = 0;
        for (double v : d1) e += v;
        return e;
    };
    r.history.push_back(current());

    std::vector<char> is_medoid(n, 0);
    for (auto m : r.medoids) is_medoid[m] = 1;

    for (std::size_t sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        double best_delta = 0;
        std::size_t best_slot = k, best_h = n;
        for (std::size_t s = 0; s < k; ++s) {
            for (std::size_t h = 0; h < n; ++h) {
                if (is_medoid[h]) continue;
                double delta = 0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double dh = d(j, h);
                    const double now = slot1[j] == s ? std::min(d2[j], dh) : std::min(d1[j], dh);
                    delta += now - d1[j];
                }
                if (delta < best_delta - 1e-12 * (1.0 + r.history.back())) {
                    best_delta = delta;
                    best_slot = s;
                    best_h = h;
                }
            }
        }
        if (best_h == n) break;
        is_medoid[r.medoids[best_slot]] = 0;
        r.medoids[best_slot] = best_h;
        is_medoid[best_h] = 1;
        refresh();
        r.history.push_back(current());
        r.sweeps = sweep + 1;
    }
    r.assignment = slot1;
    r.objective = r.history.back();
    return r;
}

} // namespace amods

#endif
