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
  Stacked detection model: three base learners from different families
  (tree ensemble, regression, neural) feed a kernel SVM meta classifier.
  Every base learner is a scorer g(x) in [-1, +1]; the meta SVM sees the
  3-vector of base scores. Meta training vectors are out-of-fold scores.
*/

#ifndef AMODS_ENSEMBLE_HPP
#define AMODS_ENSEMBLE_HPP

#include "amods/common.hpp"
#include "amods/feature_pipeline.hpp"
#include "amods/svm.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace amods {

struct RandomForestSpec {
    std::size_t trees = 50;
    std::size_t max_depth = 8;
    std::size_t features_per_split = 0; // 0: floor(sqrt(d))
    std::uint64_t seed = 1;
};

struct LogisticSpec {
    double l2 = 1e-2;
    std::size_t max_iter = 50;
};

struct MlpSpec {
    std::vector<std::size_t> hidden{16};
    double learning_rate = 0.5;
    std::size_t epochs = 150;
    std::uint64_t seed = 2;
};

using BaseLearnerSpec = std::variant<RandomForestSpec, LogisticSpec, MlpSpec>;

inline std::vector<BaseLearnerSpec> default_base_specs() {
    return {RandomForestSpec{}, LogisticSpec{}, MlpSpec{}};
}

namespace detail {

inline void check_training_data(std::span<const Vector> X, std::span<const int> y) {
    if (X.size() != y.size()) throw LengthMismatch("sample and label counts differ");
    bool pos = false, neg = false;
    for (int v : y) (v > 0 ? pos : neg) = true;
    if (!pos || !neg) throw DegenerateLabels("base learner needs both classes");
}

inline Eigen::MatrixXd to_matrix(std::span<const Vector> X) {
    const auto n = static_cast<Eigen::Index>(X.size());
    const auto d = X.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(X[0].size());
    Eigen::MatrixXd M(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<Eigen::Index>(X[static_cast<std::size_t>(i)].size()) != d)
            throw DimensionMismatch("training vectors differ in dimension");
        for (Eigen::Index j = 0; j < d; ++j) M(i, j) = X[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return M;
}

} // namespace detail

// --- random forest ---------------------------------------------------------

struct TreeNode {
    int feature = -1; // -1: leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    int vote = -1; // leaf class, +1 or -1
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    int vote(std::span<const double> x) const {
        std::size_t at = 0;
        while (nodes[at].feature >= 0) {
            const auto& n = nodes[at];
            at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
        }
        return nodes[at].vote;
    }
};

struct RandomForest {
    std::vector<DecisionTree> trees;
    std::size_t dim = 0;

    double score(std::span<const double> x) const {
        if (x.size() != dim) throw DimensionMismatch("random forest input dimension");
        std::size_t pos = 0;
        for (const auto& t : trees) pos += t.vote(x) > 0;
        return 2.0 * static_cast<double>(pos) / static_cast<double>(trees.size()) - 1.0;
    }
};

namespace detail {

class TreeBuilder {
public:
    TreeBuilder(std::span<const Vector> X, std::span<const int> y, std::size_t max_depth, std::size_t mtry, Rng& rng)
        : X_(X), y_(y), max_depth_(max_depth), mtry_(mtry), rng_(rng) {}

    DecisionTree build(std::vector<std::size_t> samples) {
        DecisionTree t;
        grow(t, samples, 0);
        return t;
    }

private:
    static int majority(std::size_t pos, std::size_t neg) { return pos > neg ? +1 : -1; }

    int grow(DecisionTree& t, std::vector<std::size_t>& samples, std::size_t depth) {
        std::size_t pos = 0;
        for (auto s : samples) pos += y_[s] > 0;
        const std::size_t neg = samples.size() - pos;
        const int id = static_cast<int>(t.nodes.size());
        t.nodes.push_back(TreeNode{-1, 0, -1, -1, majority(pos, neg)});
        if (pos == 0 || neg == 0 || depth >= max_depth_ || samples.size() < 2) return id;

        const std::size_t d = X_[0].size();
        std::vector<std::size_t> features(d);
        std::iota(features.begin(), features.end(), std::size_t{0});
        for (std::size_t i = 0; i < std::min(mtry_, d); ++i)
            std::swap(features[i], features[i + uniform_index(rng_, d - i)]);
        features.resize(std::min(mtry_, d));

        const double total = static_cast<double>(samples.size());
        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0;
        const double parent = gini(static_cast<double>(pos), total);
        std::vector<std::pair<double, int>> column(samples.size());
        for (auto f : features) {
            for (std::size_t i = 0; i < samples.size(); ++i) column[i] = {X_[samples[i]][f], y_[samples[i]]};
            std::sort(column.begin(), column.end());
            double left_pos = 0;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                left_pos += column[i].second > 0;
                if (column[i].first == column[i + 1].first) continue;
                const double nl = static_cast<double>(i + 1), nr = total - nl;
                const double child = (nl * gini(left_pos, nl) + nr * gini(static_cast<double>(pos) - left_pos, nr)) / total;
                const double gain = parent - child;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = 0.5 * (column[i].first + column[i + 1].first);
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (auto s : samples)
            (X_[s][static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right).push_back(s);
        samples.clear();
        samples.shrink_to_fit();
        const int l = grow(t, left, depth + 1);
        const int r = grow(t, right, depth + 1);
        t.nodes[static_cast<std::size_t>(id)].feature = best_feature;
        t.nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
        t.nodes[static_cast<std::size_t>(id)].left = l;
        t.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    static double gini(double pos, double n) {
        if (n <= 0) return 0;
        const double p = pos / n;
        return 2.0 * p * (1.0 - p);
    }

    std::span<const Vector> X_;
    std::span<const int> y_;
    std::size_t max_depth_;
    std::size_t mtry_;
    Rng& rng_;
};

} // namespace detail

inline RandomForest fit_random_forest(const RandomForestSpec& spec, std::span<const Vector> X, std::span<const int> y) {
    detail::check_training_data(X, y);
    if (spec.trees < 1) throw Error("random forest needs at least one tree");
    RandomForest rf;
    rf.dim = X[0].size();
    const std::size_t mtry =
        spec.features_per_split ? spec.features_per_split
                                : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(rf.dim))));
    Rng rng(spec.seed);
    detail::TreeBuilder builder(X, y, spec.max_depth, mtry, rng);
    for (std::size_t t = 0; t < spec.trees; ++t) {
        std::vector<std::size_t> bag(X.size());
        for (auto& s : bag) s = uniform_index(rng, X.size());
        rf.trees.push_back(builder.build(std::move(bag)));
    }
    return rf;
}

// --- logistic regression ---------------------------------------------------

struct LogisticModel {
    Vector weights;
    double bias = 0;

    double margin(std::span<const double> x) const { return dot(weights, x) + bias; }
    // 2 sigma(z) - 1 == tanh(z / 2)
    double score(std::span<const double> x) const { return std::tanh(0.5 * margin(x)); }
};

// L2-regularized logistic regression by Newton iterations (bias unpenalized).
inline LogisticModel fit_logistic(const LogisticSpec& spec, std::span<const Vector> X, std::span<const int> y) {
    detail::check_training_data(X, y);
    const Eigen::MatrixXd A = detail::to_matrix(X);
    const auto n = A.rows(), d = A.cols();
    Eigen::MatrixXd Z(n, d + 1);
    Z.leftCols(d) = A;
    Z.col(d).setOnes();
    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) t(i) = y[static_cast<std::size_t>(i)] > 0 ? 1.0 : 0.0;

    Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(d + 1, spec.l2 * static_cast<double>(n));
    penalty(d) = 1e-9;
    for (std::size_t it = 0; it < spec.max_iter; ++it) {
        Eigen::VectorXd p = (1.0 + (-(Z * w)).array().exp()).inverse().matrix();
        Eigen::VectorXd grad = Z.transpose() * (p - t) + penalty.cwiseProduct(w);
        Eigen::VectorXd s = (p.array() * (1.0 - p.array())).max(1e-10).matrix();
        Eigen::MatrixXd H = Z.transpose() * s.asDiagonal() * Z;
        H.diagonal() += penalty;
        Eigen::VectorXd step = H.ldlt().solve(grad);
        w -= step;
        if (step.norm() < 1e-10 * (1.0 + w.norm())) break;
    }
    LogisticModel m;
    m.weights.assign(w.data(), w.data() + d);
    m.bias = w(d);
    return m;
}

// --- multilayer perceptron -------------------------------------------------

struct MlpLayer {
    Eigen::MatrixXd W; // out x in
    Eigen::VectorXd b;
};

// tanh hidden layers; single tanh-squashed output.
struct Mlp {
    std::vector<MlpLayer> layers;

    double raw_output(std::span<const double> x) const {
        Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
        if (layers.empty() || a.size() != layers.front().W.cols()) throw DimensionMismatch("MLP input dimension");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            a = layers[l].W * a + layers[l].b;
            if (l + 1 < layers.size()) a = a.array().tanh().matrix();
        }
        return a(0);
    }
    double score(std::span<const double> x) const { return std::tanh(raw_output(x)); }
};

// Full-batch gradient descent on the logistic loss of 2z, so that
// (score + 1) / 2 = sigma(2z) is the modeled probability of "malicious".
inline Mlp fit_mlp(const MlpSpec& spec, std::span<const Vector> X, std::span<const int> y) {
    detail::check_training_data(X, y);
    for (auto h : spec.hidden)
        if (h < 1) throw Error("hidden layer sizes must be >= 1");
    const Eigen::MatrixXd A = detail::to_matrix(X).transpose(); // d x n
    const auto n = A.cols();
    Eigen::RowVectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i) t(i) = y[static_cast<std::size_t>(i)] > 0 ? 1.0 : 0.0;

    Mlp net;
    Rng rng(spec.seed);
    std::vector<std::size_t> sizes{static_cast<std::size_t>(A.rows())};
    sizes.insert(sizes.end(), spec.hidden.begin(), spec.hidden.end());
    sizes.push_back(1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        MlpLayer layer;
        const auto in = static_cast<Eigen::Index>(sizes[l]), out = static_cast<Eigen::Index>(sizes[l + 1]);
        const double scale = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(1, sizes[l])));
        layer.W.resize(out, in);
        for (Eigen::Index i = 0; i < out; ++i)
            for (Eigen::Index j = 0; j < in; ++j) layer.W(i, j) = scale * standard_normal(rng);
        layer.b = Eigen::VectorXd::Zero(out);
        net.layers.push_back(std::move(layer));
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<Eigen::MatrixXd> acts(net.layers.size() + 1);
    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        acts[0] = A;
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            Eigen::MatrixXd z = (net.layers[l].W * acts[l]).colwise() + net.layers[l].b;
            acts[l + 1] = l + 1 < net.layers.size() ? Eigen::MatrixXd(z.array().tanh()) : z;
        }
        // dL/dz at the output for L = logloss(sigma(2z), t)
        Eigen::MatrixXd delta =
            (2.0 * ((1.0 + (-2.0 * acts.back().array()).exp()).inverse() - t.array()) * inv_n).matrix();
        for (std::size_t l = net.layers.size(); l-- > 0;) {
            Eigen::MatrixXd gW = delta * acts[l].transpose();
            Eigen::VectorXd gb = delta.rowwise().sum();
            if (l > 0) {
                Eigen::MatrixXd back = net.layers[l].W.transpose() * delta;
                delta = (back.array() * (1.0 - acts[l].array().square())).matrix();
            }
            net.layers[l].W -= spec.learning_rate * gW;
            net.layers[l].b -= spec.learning_rate * gb;
        }
    }
    return net;
}

// --- fitted base learner -------------------------------------------------

class BaseLearner {
public:
    using Model = std::variant<RandomForest, LogisticModel, Mlp>;

    explicit BaseLearner(Model m) : model_(std::move(m)) {}

    double score(std::span<const double> x) const {
        return std::visit([&](const auto& m) { return std::clamp(m.score(x), -1.0, 1.0); }, model_);
    }
    const Model& model() const noexcept { return model_; }

private:
    Model model_;
};

inline BaseLearner fit_base(const BaseLearnerSpec& spec, std::span<const Vector> X, std::span<const int> y) {
    return std::visit(
        [&](const auto& s) -> BaseLearner {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, RandomForestSpec>) return BaseLearner(fit_random_forest(s, X, y));
            else if constexpr (std::is_same_v<S, LogisticSpec>) return BaseLearner(fit_logistic(s, X, y));
            else return BaseLearner(fit_mlp(s, X, y));
        },
        spec);
}

// Same spec with its seed (if any) replaced, so fold models draw distinct streams.
inline BaseLearnerSpec reseeded(BaseLearnerSpec spec, std::uint64_t seed) {
    std::visit(
        [&](auto& s) {
            if constexpr (requires { s.seed; }) s.seed = seed;
        },
        spec);
    return spec;
}

// --- stacking --------------------------------------------------------------

struct StackConfig {
    PipelineConfig pipeline;
    std::vector<BaseLearnerSpec> bases = default_base_specs();
    bool stacked = true; // false: a bare SVM on pipeline vectors
    double meta_C = 0.05;
    KernelSpec meta_kernel = KernelSpec::rbf(2.0);
    std::size_t k_folds = 5;
    std::uint64_t seed = 7;
    SvmOptions svm;
};

struct LabeledVector {
    std::string id; // the query text; orders and keys the sample
    Vector x;
    int y = 0; // +1 malicious, -1 benign
};

// Which fold each sample was held out in and the ids every fold model saw.
struct StackTrace {
    std::vector<std::string> ids;
    std::vector<std::size_t> fold_of;
    std::vector<std::vector<std::string>> fold_training_ids;
    std::vector<Vector> meta_features;
};

struct StackCore {
    std::vector<BaseLearner> bases;
    SvmModel meta;
    std::vector<double> train_f; // meta decision value on each meta training vector
    std::vector<int> train_y;
};

inline Vector base_scores(std::span<const BaseLearner> bases, std::span<const double> x) {
    Vector v;
    v.reserve(bases.size());
    for (const auto& b : bases) v.push_back(b.score(x));
    return v;
}

// Stratified fold assignment keyed by sample id, so it does not depend on
// the order samples arrive in.
inline std::vector<std::size_t> stratified_folds(std::span<const LabeledVector> pool, std::size_t k,
                                                 std::uint64_t seed) {
    std::vector<std::size_t> fold(pool.size(), 0);
    for (int cls : {-1, +1}) {
        std::vector<std::pair<std::uint64_t, std::size_t>> members;
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (pool[i].y == cls) members.emplace_back(mix_seed(seed, fnv1a(pool[i].id)), i);
        std::sort(members.begin(), members.end());
        for (std::size_t r = 0; r < members.size(); ++r) fold[members[r].second] = r % k;
    }
    return fold;
}

inline std::vector<LabeledVector> canonical_order(std::span<const LabeledVector> pool) {
    std::vector<LabeledVector> v(pool.begin(), pool.end());
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return v;
}

inline std::vector<BaseLearner> fit_bases(std::span<const BaseLearnerSpec> specs, std::span<const Vector> X,
                                          std::span<const int> y, std::uint64_t seed) {
    std::vector<BaseLearner> out;
    for (std::size_t b = 0; b < specs.size(); ++b) out.push_back(fit_base(reseeded(specs[b], mix_seed(seed, b)), X, y));
    return out;
}

// Out-of-fold meta features for a canonicalized pool.
inline std::vector<Vector> out_of_fold_scores(std::span<const LabeledVector> pool, const StackConfig& cfg,
                                              StackTrace* trace = nullptr) {
    const std::size_t k = cfg.k_folds;
    if (k < 2) throw Error("stacking needs at least two folds");
    std::size_t pos = 0;
    for (const auto& s : pool) pos += s.y > 0;
    if (pool.size() < k || pos < k || pool.size() - pos < k)
        throw TooFewSamples("every stratified fold needs samples of both classes");

    auto fold = stratified_folds(pool, k, cfg.seed);
    std::vector<Vector> meta(pool.size());
    if (trace) {
        trace->ids.clear();
        for (const auto& s : pool) trace->ids.push_back(s.id);
        trace->fold_of = fold;
        trace->fold_training_ids.assign(k, {});
    }
    for (std::size_t f = 0; f < k; ++f) {
        std::vector<Vector> X;
        std::vector<int> y;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (fold[i] == f) continue;
            X.push_back(pool[i].x);
            y.push_back(pool[i].y);
            if (trace) trace->fold_training_ids[f].push_back(pool[i].id);
        }
        auto bases = fit_bases(cfg.bases, X, y, mix_seed(cfg.seed, 100 + f));
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (fold[i] == f) meta[i] = base_scores(bases, pool[i].x);
    }
    if (trace) trace->meta_features = meta;
    return meta;
}

inline StackCore stack_fit(std::span<const LabeledVector> pool_in, const StackConfig& cfg,
                           StackTrace* trace = nullptr) {
    const auto pool = canonical_order(pool_in);
    std::vector<Vector> X;
    std::vector<int> y;
    for (const auto& s : pool) {
        X.push_back(s.x);
        y.push_back(s.y);
    }
    StackCore core;
    core.train_y = y;
    if (!cfg.stacked) {
        core.meta = train_svm(X, y, cfg.meta_C, cfg.meta_kernel, cfg.svm);
        for (const auto& x : X) core.train_f.push_back(decision_value(core.meta, x));
        return core;
    }
    auto meta_X = out_of_fold_scores(pool, cfg, trace);
    core.meta = train_svm(meta_X, y, cfg.meta_C, cfg.meta_kernel, cfg.svm);
    for (const auto& x : meta_X) core.train_f.push_back(decision_value(core.meta, x));
    core.bases = fit_bases(cfg.bases, X, y, mix_seed(cfg.seed, 99));
    return core;
}

// The detection model: feature pipeline, base learners, meta SVM. With no
// base learners it degenerates to a single SVM over pipeline vectors.
struct StackModel {
    FeaturePipeline pipeline;
    std::vector<BaseLearner> bases;
    SvmModel meta;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    // Decision values of the meta SVM on its own training vectors, with labels.
    std::vector<double> train_f;
    std::vector<int> train_y;

    bool stacked() const noexcept { return !bases.empty(); }

    // The vector the meta SVM consumes: base scores, or pipeline features.
    Vector embed(std::string_view text) const {
        auto x = pipeline.transform(text);
        return stacked() ? base_scores(bases, x) : x;
    }
    double decision(std::string_view text) const { return decision_value(meta, embed(text)); }
};

struct Prediction {
    Label label = Label::Benign;
    double f = 0;
};

// f == 0 is benign.
inline Label label_for(double f) noexcept { return f > 0 ? Label::Malicious : Label::Benign; }

inline Prediction stack_predict(const StackModel& m, std::string_view text) {
    const double f = m.decision(text);
    return {label_for(f), f};
}

inline StackModel fit_detection_model(std::span<const std::string> texts, std::span<const Label> labels,
                                      const StackConfig& cfg, StackTrace* trace = nullptr) {
    auto pipeline = fit_pipeline(texts, labels, cfg.pipeline);
    std::vector<LabeledVector> pool;
    pool.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i)
        pool.push_back({texts[i], pipeline.transform(texts[i]), to_sign(labels[i])});
    auto core = stack_fit(pool, cfg, trace);
    return StackModel{std::move(pipeline), std::move(core.bases), std::move(core.meta), cfg.k_folds, cfg.seed,
                      std::move(core.train_f), std::move(core.train_y)};
}

// --- serialization -------------------------------------------------------

inline nlohmann::json to_json(const BaseLearnerSpec& spec) {
    return std::visit(
        [](const auto& s) -> nlohmann::json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, RandomForestSpec>)
                return {{"kind", "random_forest"},
                        {"trees", s.trees},
                        {"max_depth", s.max_depth},
                        {"features_per_split", s.features_per_split},
                        {"seed", s.seed}};
            else if constexpr (std::is_same_v<S, LogisticSpec>)
                return {{"kind", "logistic"}, {"l2", s.l2}, {"max_iter", s.max_iter}};
            else
                return {{"kind", "mlp"},
                        {"hidden", s.hidden},
                        {"learning_rate", s.learning_rate},
                        {"epochs", s.epochs},
                        {"seed", s.seed}};
        },
        spec);
}

inline BaseLearnerSpec base_spec_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "random_forest") {
        RandomForestSpec s;
        s.trees = j.value("trees", s.trees);
        s.max_depth = j.value("max_depth", s.max_depth);
        s.features_per_split = j.value("features_per_split", s.features_per_split);
        s.seed = j.value("seed", s.seed);
        if (s.trees < 1) throw DataError("random_forest.trees must be >= 1");
        return s;
    }
    if (kind == "logistic") {
        LogisticSpec s;
        s.l2 = j.value("l2", s.l2);
        s.max_iter = j.value("max_iter", s.max_iter);
        return s;
    }
    if (kind == "mlp") {
        MlpSpec s;
        s.hidden = j.value("hidden", s.hidden);
        s.learning_rate = j.value("learning_rate", s.learning_rate);
        s.epochs = j.value("epochs", s.epochs);
        s.seed = j.value("seed", s.seed);
        for (auto h : s.hidden)
            if (h < 1) throw DataError("mlp.hidden sizes must be >= 1");
        return s;
    }
    throw DataError("unknown base learner kind '" + kind + "'");
}

inline nlohmann::json to_json(const BaseLearner& b) {
    return std::visit(
        [](const auto& m) -> nlohmann::json {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, RandomForest>) {
                nlohmann::json trees = nlohmann::json::array();
                for (const auto& t : m.trees) {
                    nlohmann::json nodes = nlohmann::json::array();
                    for (const auto& n : t.nodes)
                        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.vote});
                    trees.push_back(std::move(nodes));
                }
                return {{"kind", "random_forest"}, {"dim", m.dim}, {"trees", std::move(trees)}};
            } else if constexpr (std::is_same_v<M, LogisticModel>) {
                return {{"kind", "logistic"}, {"weights", m.weights}, {"bias", m.bias}};
            } else {
                nlohmann::json layers = nlohmann::json::array();
                for (const auto& l : m.layers)
                    layers.push_back({{"W", matrix_to_json(l.W)}, {"b", vector_to_json(l.b)}});
                return {{"kind", "mlp"}, {"layers", std::move(layers)}};
            }
        },
        b.model());
}

inline BaseLearner base_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "random_forest") {
        RandomForest rf;
        rf.dim = j.at("dim").get<std::size_t>();
        for (const auto& tj : j.at("trees")) {
            DecisionTree t;
            for (const auto& nj : tj)
                t.nodes.push_back({nj[0].get<int>(), nj[1].get<double>(), nj[2].get<int>(), nj[3].get<int>(),
                                   nj[4].get<int>()});
            rf.trees.push_back(std::move(t));
        }
        return BaseLearner(std::move(rf));
    }
    if (kind == "logistic")
        return BaseLearner(LogisticModel{j.at("weights").get<Vector>(), j.at("bias").get<double>()});
    if (kind == "mlp") {
        Mlp net;
        for (const auto& lj : j.at("layers")) net.layers.push_back({matrix_from_json(lj.at("W")), vector_from_json(lj.at("b"))});
        return BaseLearner(std::move(net));
    }
    throw DataError("unknown base learner kind '" + kind + "'");
}

inline nlohmann::json to_json(const StackModel& m) {
    nlohmann::json bases = nlohmann::json::array();
    for (const auto& b : m.bases) bases.push_back(to_json(b));
    return {{"pipeline", to_json(m.pipeline)},
            {"bases", std::move(bases)},
            {"meta", to_json(m.meta)},
            {"folds", m.folds},
            {"seed", m.seed},
            {"train_f", m.train_f},
            {"train_y", m.train_y}};
}

inline StackModel stack_from_json(const nlohmann::json& j) {
    StackModel m{pipeline_from_json(j.at("pipeline")),
                 {},
                 svm_from_json(j.at("meta")),
                 j.at("folds").get<std::size_t>(),
                 j.at("seed").get<std::uint64_t>(),
                 j.at("train_f").get<std::vector<double>>(),
                 j.at("train_y").get<std::vector<int>>()};
    for (const auto& b : j.at("bases")) m.bases.push_back(base_from_json(b));
    return m;
}

} // namespace amods

#endif
