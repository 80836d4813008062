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

#ifndef AMODS_FEATURE_PIPELINE_HPP
#define AMODS_FEATURE_PIPELINE_HPP

#include "amods/common.hpp"
#include "amods/log_ingest.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace amods {

// The 63 symbols a normalized, filtered query may contain: printable ASCII
// 33..126 with upper case folded away and " # % < > removed.
class Alphabet {
public:
    static constexpr std::size_t kSize = 63;
    static constexpr std::size_t kBigrams = kSize * kSize;

    explicit Alphabet(std::string symbols) : symbols_(std::move(symbols)) {
        index_.fill(-1);
        if (symbols_.size() != kSize)
            throw DataError("alphabet must have 63 symbols, got " + std::to_string(symbols_.size()));
        for (std::size_t i = 0; i < symbols_.size(); ++i) {
            auto c = static_cast<unsigned char>(symbols_[i]);
            if (std::isupper(c) || is_unsafe_char(c)) throw DataError("alphabet symbol not allowed");
            if (index_[c] >= 0) throw DataError("duplicate alphabet symbol");
            index_[c] = static_cast<int>(i);
        }
    }

    static const Alphabet& standard() {
        static const Alphabet a = [] {
            std::string s;
            for (int c = 33; c <= 126; ++c) {
                if (std::isupper(c) || is_unsafe_char(static_cast<unsigned char>(c))) continue;
                s.push_back(static_cast<char>(c));
            }
            return Alphabet(std::move(s));
        }();
        return a;
    }

    const std::string& symbols() const noexcept { return symbols_; }
    int index_of(char c) const noexcept { return index_[static_cast<unsigned char>(c)]; }
    bool contains(char c) const noexcept { return index_of(c) >= 0; }

    std::size_t bigram_index(char a, char b) const {
        int i = index_of(a), j = index_of(b);
        if (i < 0 || j < 0) throw UnknownCharacter("character outside the query alphabet");
        return static_cast<std::size_t>(i) * kSize + static_cast<std::size_t>(j);
    }

    std::string bigram_name(std::size_t idx) const {
        return {symbols_[idx / kSize], symbols_[idx % kSize]};
    }

    friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.symbols_ == b.symbols_; }

private:
    std::string symbols_;
    std::array<int, 256> index_{};
};

struct RawFeatureVector {
    std::vector<double> values = std::vector<double>(Alphabet::kBigrams, 0.0);
};

// Nonzero entries of a raw vector, ascending by index.
using SparseBigrams = std::vector<std::pair<std::size_t, double>>;

inline SparseBigrams bigram_sparse(std::string_view text, const Alphabet& alphabet = Alphabet::standard()) {
    std::vector<std::size_t> ids;
    ids.reserve(text.size());
    for (std::size_t i = 0; i + 1 < text.size(); ++i) ids.push_back(alphabet.bigram_index(text[i], text[i + 1]));
    if (text.size() == 1 && !alphabet.contains(text[0]))
        throw UnknownCharacter("character outside the query alphabet");
    std::sort(ids.begin(), ids.end());
    SparseBigrams out;
    double max_count = 0;
    for (std::size_t i = 0; i < ids.size();) {
        std::size_t j = i;
        while (j < ids.size() && ids[j] == ids[i]) ++j;
        out.emplace_back(ids[i], static_cast<double>(j - i));
        max_count = std::max(max_count, static_cast<double>(j - i));
        i = j;
    }
    for (auto& [_, v] : out) v /= max_count;
    return out;
}

inline RawFeatureVector bigram_vector(std::string_view text, const Alphabet& alphabet = Alphabet::standard()) {
    RawFeatureVector v;
    for (auto [i, x] : bigram_sparse(text, alphabet)) v.values[i] = x;
    return v;
}

enum class ScoringMethod { IG, ChiSquare, DF };

inline std::string_view to_string(ScoringMethod m) {
    switch (m) {
    case ScoringMethod::IG: return "IG";
    case ScoringMethod::ChiSquare: return "ChiSquare";
    case ScoringMethod::DF: return "DF";
    }
    return "IG";
}

inline ScoringMethod parse_scoring_method(std::string_view s) {
    if (s == "IG" || s == "ig") return ScoringMethod::IG;
    if (s == "ChiSquare" || s == "chi2" || s == "chisquare") return ScoringMethod::ChiSquare;
    if (s == "DF" || s == "df") return ScoringMethod::DF;
    throw DataError("unknown scoring method '" + std::string(s) + "'");
}

namespace detail {

inline double entropy2(double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -(p * std::log2(p) + (1 - p) * std::log2(1 - p));
}

} // namespace detail

// Scores one dimension from its presence/class contingency counts:
//   pos_present, neg_present  samples of each class where the feature is > 0
//   pos, neg                  class totals
inline double score_from_counts(ScoringMethod method, double pos_present, double neg_present, double pos,
                                double neg) {
    const double n = pos + neg;
    const double present = pos_present + neg_present;
    if (present == 0 || n == 0) return 0.0;
    switch (method) {
    case ScoringMethod::DF: return present / n;
    case ScoringMethod::IG: {
        const double absent = n - present;
        double cond = (present / n) * detail::entropy2(pos_present / present);
        if (absent > 0) cond += (absent / n) * detail::entropy2((pos - pos_present) / absent);
        return std::max(0.0, detail::entropy2(pos / n) - cond);
    }
    case ScoringMethod::ChiSquare: {
        const double a = pos_present, b = neg_present, c = pos - pos_present, d = neg - neg_present;
        const double denom = (a + b) * (c + d) * (a + c) * (b + d);
        if (denom == 0) return 0.0;
        const double diff = a * d - b * c;
        return n * diff * diff / denom;
    }
    }
    return 0.0;
}

inline std::vector<double> score_presence(std::span<const SparseBigrams> X, std::span<const Label> y,
                                          ScoringMethod method) {
    if (X.size() != y.size()) throw LengthMismatch("feature and label counts differ");
    std::vector<double> pos_present(Alphabet::kBigrams, 0.0), neg_present(Alphabet::kBigrams, 0.0);
    double pos = 0, neg = 0;
    for (std::size_t s = 0; s < X.size(); ++s) {
        auto& counter = y[s] == Label::Malicious ? pos_present : neg_present;
        (y[s] == Label::Malicious ? pos : neg) += 1;
        for (auto [i, v] : X[s])
            if (v > 0) counter[i] += 1;
    }
    if (method != ScoringMethod::DF && (pos == 0 || neg == 0))
        throw DegenerateLabels("feature scoring needs samples of both classes");
    std::vector<double> scores(Alphabet::kBigrams);
    for (std::size_t i = 0; i < scores.size(); ++i)
        scores[i] = score_from_counts(method, pos_present[i], neg_present[i], pos, neg);
    return scores;
}

inline std::vector<double> score_features(std::span<const RawFeatureVector> X, std::span<const Label> y,
                                          ScoringMethod method) {
    std::vector<SparseBigrams> sparse;
    sparse.reserve(X.size());
    for (const auto& v : X) {
        SparseBigrams s;
        for (std::size_t i = 0; i < v.values.size(); ++i)
            if (v.values[i] != 0) s.emplace_back(i, v.values[i]);
        sparse.push_back(std::move(s));
    }
    return score_presence(sparse, y, method);
}

// Indices of the k highest nonzero scores (ties to the lower index), returned
// in increasing order.
inline std::vector<std::size_t> select_top_k(std::span<const double> scores, std::size_t k) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i] > 0) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    if (idx.size() > k) idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

enum class ReductionKind { None, PCA, RandomProjection };

inline std::string_view to_string(ReductionKind k) {
    switch (k) {
    case ReductionKind::None: return "none";
    case ReductionKind::PCA: return "pca";
    case ReductionKind::RandomProjection: return "rp";
    }
    return "none";
}

inline ReductionKind parse_reduction_kind(std::string_view s) {
    if (s == "none") return ReductionKind::None;
    if (s == "pca" || s == "PCA") return ReductionKind::PCA;
    if (s == "rp" || s == "RP" || s == "random_projection") return ReductionKind::RandomProjection;
    throw DataError("unknown reduction '" + std::string(s) + "'");
}

// Linear map x -> matrix^T (x - center). matrix is rows x cols (K_sel x d).
struct Reduction {
    ReductionKind kind = ReductionKind::PCA;
    Eigen::MatrixXd matrix;
    Eigen::VectorXd center;
    Eigen::VectorXd variances; // PCA only: eigenvalues of the kept components
    bool rank_deficient = false;

    std::size_t input_dim() const { return static_cast<std::size_t>(matrix.rows()); }
    std::size_t output_dim() const { return static_cast<std::size_t>(matrix.cols()); }
};

inline Reduction fit_pca(const Eigen::MatrixXd& X, std::size_t d) {
    const auto n = X.rows();
    const auto k = X.cols();
    if (n < 2) throw TooFewSamples("PCA needs at least two samples");
    if (d > static_cast<std::size_t>(k)) throw DimensionMismatch("PCA target dimension exceeds input dimension");

    Reduction r;
    r.kind = ReductionKind::PCA;
    r.center = X.colwise().mean().transpose();
    Eigen::MatrixXd centered = X.rowwise() - r.center.transpose();
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error("covariance eigendecomposition failed");
    const auto& values = solver.eigenvalues();   // ascending
    const auto& vectors = solver.eigenvectors();

    r.matrix.resize(k, static_cast<Eigen::Index>(d));
    r.variances.resize(static_cast<Eigen::Index>(d));
    const double scale = std::max(1.0, std::abs(values(k - 1)));
    std::size_t positive = 0;
    for (std::size_t j = 0; j < d; ++j) {
        const auto src = k - 1 - static_cast<Eigen::Index>(j);
        Eigen::VectorXd col = vectors.col(src);
        Eigen::Index arg = 0;
        col.cwiseAbs().maxCoeff(&arg);
        if (col(arg) < 0) col = -col;
        r.matrix.col(static_cast<Eigen::Index>(j)) = col;
        r.variances(static_cast<Eigen::Index>(j)) = std::max(0.0, values(src));
        if (values(src) > 1e-12 * scale) ++positive;
    }
    r.rank_deficient = positive < d;
    return r;
}

inline Reduction fit_random_projection(std::size_t k_sel, std::size_t d, std::uint64_t seed) {
    if (d > k_sel) throw DimensionMismatch("projection dimension exceeds input dimension");
    Reduction r;
    r.kind = ReductionKind::RandomProjection;
    r.matrix.resize(static_cast<Eigen::Index>(k_sel), static_cast<Eigen::Index>(d));
    r.center = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k_sel));
    Rng rng(seed);
    const double v = 1.0 / std::sqrt(static_cast<double>(d));
    for (Eigen::Index i = 0; i < r.matrix.rows(); ++i)
        for (Eigen::Index j = 0; j < r.matrix.cols(); ++j) r.matrix(i, j) = (rng() & 1ULL) ? v : -v;
    return r;
}

struct PipelineConfig {
    ScoringMethod method = ScoringMethod::IG;
    std::size_t top_k = 800;
    ReductionKind reduction = ReductionKind::PCA;
    std::size_t dim = 80;
    std::uint64_t seed = 0; // random projection only
};

class FeaturePipeline {
public:
    FeaturePipeline() : FeaturePipeline(Alphabet::standard(), all_dimensions(), std::nullopt, ScoringMethod::IG) {}

    FeaturePipeline(Alphabet alphabet, std::vector<std::size_t> selected, std::optional<Reduction> reduction,
                    ScoringMethod method)
        : alphabet_(std::move(alphabet)), selected_(std::move(selected)), reduction_(std::move(reduction)),
          method_(method) {
        for (std::size_t i = 0; i < selected_.size(); ++i) {
            if (selected_[i] >= Alphabet::kBigrams || (i > 0 && selected_[i] <= selected_[i - 1]))
                throw DataError("selected feature indices must be strictly increasing and < 3969");
        }
        if (reduction_ && reduction_->input_dim() != selected_.size())
            throw DimensionMismatch("reduction input does not match the selected feature count");
        position_.assign(Alphabet::kBigrams, -1);
        for (std::size_t i = 0; i < selected_.size(); ++i) position_[selected_[i]] = static_cast<int>(i);
    }

    static std::vector<std::size_t> all_dimensions() {
        std::vector<std::size_t> v(Alphabet::kBigrams);
        std::iota(v.begin(), v.end(), std::size_t{0});
        return v;
    }

    const Alphabet& alphabet() const noexcept { return alphabet_; }
    const std::vector<std::size_t>& selected() const noexcept { return selected_; }
    const std::optional<Reduction>& reduction() const noexcept { return reduction_; }
    ScoringMethod method() const noexcept { return method_; }
    std::size_t dim() const noexcept { return reduction_ ? reduction_->output_dim() : selected_.size(); }

    Vector gather(std::string_view text) const {
        Vector x(selected_.size(), 0.0);
        for (auto [i, v] : bigram_sparse(text, alphabet_))
            if (position_[i] >= 0) x[static_cast<std::size_t>(position_[i])] = v;
        return x;
    }

    Vector transform(std::string_view text) const {
        Vector x = gather(text);
        if (!reduction_) return x;
        const auto& r = *reduction_;
        const auto k = r.matrix.rows();
        for (Eigen::Index i = 0; i < k; ++i) x[static_cast<std::size_t>(i)] -= r.center(i);
        Vector out(static_cast<std::size_t>(r.matrix.cols()), 0.0);
        for (Eigen::Index j = 0; j < r.matrix.cols(); ++j) {
            double s = 0;
            for (Eigen::Index i = 0; i < k; ++i) s += r.matrix(i, j) * x[static_cast<std::size_t>(i)];
            out[static_cast<std::size_t>(j)] = s;
        }
        return out;
    }

private:
    Alphabet alphabet_;
    std::vector<std::size_t> selected_;
    std::optional<Reduction> reduction_;
    ScoringMethod method_;
    std::vector<int> position_;
};

inline FeaturePipeline fit_pipeline(std::span<const std::string> texts, std::span<const Label> labels,
                                    const PipelineConfig& cfg) {
    if (texts.size() != labels.size()) throw LengthMismatch("text and label counts differ");
    const auto& alphabet = Alphabet::standard();
    std::vector<SparseBigrams> raw;
    raw.reserve(texts.size());
    for (const auto& t : texts) raw.push_back(bigram_sparse(t, alphabet));

    auto scores = score_presence(raw, labels, cfg.method);
    auto selected = select_top_k(scores, cfg.top_k);
    if (selected.empty()) throw DegenerateLabels("no feature has a nonzero score");

    std::optional<Reduction> reduction;
    const std::size_t d = std::min(cfg.dim, selected.size());
    if (cfg.reduction == ReductionKind::PCA) {
        FeaturePipeline gatherer(alphabet, selected, std::nullopt, cfg.method);
        Eigen::MatrixXd X(static_cast<Eigen::Index>(texts.size()), static_cast<Eigen::Index>(selected.size()));
        for (std::size_t s = 0; s < texts.size(); ++s) {
            auto row = gatherer.gather(texts[s]);
            for (std::size_t j = 0; j < row.size(); ++j)
                X(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = row[j];
        }
        reduction = fit_pca(X, d);
    } else if (cfg.reduction == ReductionKind::RandomProjection) {
        reduction = fit_random_projection(selected.size(), d, cfg.seed);
    }
    return FeaturePipeline(alphabet, std::move(selected), std::move(reduction), cfg.method);
}

// --- serialization -------------------------------------------------------

inline constexpr int kPipelineFormatVersion = 1;

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    auto rows = j.at("rows").get<Eigen::Index>();
    auto cols = j.at("cols").get<Eigen::Index>();
    auto flat = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols) throw DataError("matrix payload size mismatch");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = flat[static_cast<std::size_t>(i * cols + j2)];
    return m;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
    auto v = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline nlohmann::json to_json(const FeaturePipeline& p) {
    nlohmann::json j{{"version", kPipelineFormatVersion},
                     {"alphabet", p.alphabet().symbols()},
                     {"method", to_string(p.method())},
                     {"selected", p.selected()}};
    if (const auto& r = p.reduction()) {
        j["reduction"] = {{"kind", to_string(r->kind)},
                          {"center", vector_to_json(r->center)},
                          {"matrix", matrix_to_json(r->matrix)},
                          {"variances", vector_to_json(r->variances)},
                          {"rank_deficient", r->rank_deficient}};
    } else {
        j["reduction"] = nullptr;
    }
    return j;
}

inline FeaturePipeline pipeline_from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != kPipelineFormatVersion) throw DataError("unsupported pipeline version");
    std::optional<Reduction> reduction;
    if (!j.at("reduction").is_null()) {
        const auto& rj = j.at("reduction");
        Reduction r;
        r.kind = parse_reduction_kind(rj.at("kind").get<std::string>());
        r.center = vector_from_json(rj.at("center"));
        r.matrix = matrix_from_json(rj.at("matrix"));
        r.variances = vector_from_json(rj.at("variances"));
        r.rank_deficient = rj.at("rank_deficient").get<bool>();
        reduction = std::move(r);
    }
    return FeaturePipeline(Alphabet(j.at("alphabet").get<std::string>()),
                           j.at("selected").get<std::vector<std::size_t>>(), std::move(reduction),
                           parse_scoring_method(j.at("method").get<std::string>()));
}

} // namespace amods

#endif
