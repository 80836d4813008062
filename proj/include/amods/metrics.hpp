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

#ifndef AMODS_METRICS_HPP
#define AMODS_METRICS_HPP

#include "amods/common.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>

namespace amods {

struct Metrics {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double precision = 0;
    double recall = 0;
    double f_value = 0;
    std::optional<double> tp_rate; // absent when there are no positives
    std::optional<double> fp_rate; // absent when there are no negatives

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

// F_beta = (1 + b^2) P R / (b^2 P + R). Zero divisions resolve to 0.
inline double f_beta(double precision, double recall, double beta = 1.0) {
    const double b2 = beta * beta;
    const double denom = b2 * precision + recall;
    return denom > 0 ? (1 + b2) * precision * recall / denom : 0.0;
}

inline Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn, double beta = 1.0) {
    Metrics m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    if (tp + fn) m.tp_rate = m.recall;
    if (fp + tn) m.fp_rate = static_cast<double>(fp) / static_cast<double>(fp + tn);
    m.f_value = f_beta(m.precision, m.recall, beta);
    return m;
}

inline Metrics compute_metrics(std::span<const Label> predictions, std::span<const Label> truths, double beta = 1.0) {
    if (predictions.size() != truths.size()) throw LengthMismatch("predictions and truths differ in length");
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const bool p = predictions[i] == Label::Malicious, t = truths[i] == Label::Malicious;
        if (p && t) ++tp;
        else if (p) ++fp;
        else if (t) ++fn;
        else ++tn;
    }
    return metrics_from_counts(tp, fp, tn, fn, beta);
}

inline nlohmann::json to_json(const Metrics& m) {
    nlohmann::json j{{"tp", m.tp},
                     {"fp", m.fp},
                     {"tn", m.tn},
                     {"fn", m.fn},
                     {"precision", m.precision},
                     {"recall", m.recall},
                     {"f_value", m.f_value}};
    j["tp_rate"] = m.tp_rate ? nlohmann::json(*m.tp_rate) : nlohmann::json(nullptr);
    j["fp_rate"] = m.fp_rate ? nlohmann::json(*m.fp_rate) : nlohmann::json(nullptr);
    return j;
}

inline Metrics metrics_from_json(const nlohmann::json& j) {
    Metrics m;
    m.tp = j.at("tp").get<std::size_t>();
    m.fp = j.at("fp").get<std::size_t>();
    m.tn = j.at("tn").get<std::size_t>();
    m.fn = j.at("fn").get<std::size_t>();
    m.precision = j.at("precision").get<double>();
    m.recall = j.at("recall").get<double>();
    m.f_value = j.at("f_value").get<double>();
    if (!j.at("tp_rate").is_null()) m.tp_rate = j.at("tp_rate").get<double>();
    if (!j.at("fp_rate").is_null()) m.fp_rate = j.at("fp_rate").get<double>();
    return m;
}

} // namespace amods

#endif
