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
  Soft-margin binary SVM.

  The dual

      min_a  1/2 a^T Q a - e^T a,   Q_ij = y_i y_j K(x_i, x_j)
      s.t.   0 <= a_i <= C,  y^T a = 0

  is solved by sequential two-variable updates. The working pair is the
  maximal violating index i plus the j that maximizes the second-order
  decrease of the objective, the same selection rule LIBSVM uses.
*/

#ifndef AMODS_SVM_HPP
#define AMODS_SVM_HPP

#include "amods/common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace amods {

struct KernelSpec {
    enum class Kind { RBF, Polynomial, Linear };

    Kind kind = Kind::RBF;
    double gamma = 1.0;  // RBF
    double offset = 0.0; // Polynomial
    int degree = 1;      // Polynomial

    static KernelSpec rbf(double gamma) {
        if (!(gamma > 0)) throw Error("RBF gamma must be positive");
        return {Kind::RBF, gamma, 0.0, 1};
    }
    static KernelSpec polynomial(double offset, int degree) {
        if (degree < 1) throw Error("polynomial degree must be >= 1");
        return {Kind::Polynomial, 1.0, offset, degree};
    }
    static KernelSpec linear() { return {Kind::Linear, 1.0, 0.0, 1}; }

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

inline double dot(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionMismatch("vector dimensions differ");
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double squared_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DimensionMismatch("vector dimensions differ");
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

inline double kernel_eval(const KernelSpec& k, std::span<const double> x, std::span<const double> y) {
    switch (k.kind) {
    case KernelSpec::Kind::RBF: return std::exp(-k.gamma * squared_distance(x, y));
    case KernelSpec::Kind::Polynomial: return std::pow(dot(x, y) + k.offset, k.degree);
    case KernelSpec::Kind::Linear: return dot(x, y);
    }
    return 0.0;
}

// Distance between phi(x) and phi(y) in the kernel-induced feature space.
inline double kernel_distance(const KernelSpec& k, std::span<const double> x, std::span<const double> y) {
    double r = kernel_eval(k, x, x) + kernel_eval(k, y, y) - 2.0 * kernel_eval(k, x, y);
    if (r < 0) {
        if (r < -1e-12) throw Error("kernel distance radicand is negative; kernel is not PSD here");
        r = 0;
    }
    return std::sqrt(r);
}

struct SvmModel {
    std::vector<Vector> support_vectors;
    std::vector<double> coeffs; // alpha_i * y_i
    double bias = 0.0;
    KernelSpec kernel;
    double C = 1.0;
    bool converged = true;

    std::size_t dim() const { return support_vectors.empty() ? 0 : support_vectors.front().size(); }
};

inline double decision_value(const SvmModel& m, std::span<const double> x) {
    double f = m.bias;
    for (std::size_t i = 0; i < m.support_vectors.size(); ++i)
        f += m.coeffs[i] * kernel_eval(m.kernel, m.support_vectors[i], x);
    return f;
}

inline int predict_sign(const SvmModel& m, std::span<const double> x) { return decision_value(m, x) > 0 ? +1 : -1; }

// Members of U inside the margin band |f| <= 1, in input order.
inline std::vector<std::size_t> margin_members(const SvmModel& m, std::span<const Vector> U) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < U.size(); ++i)
        if (std::abs(decision_value(m, U[i])) <= 1.0) out.push_back(i);
    return out;
}

struct SvmOptions {
    double tol = 1e-3;
    std::size_t max_iterations = 0; // 0: max(10 * |T|, 100000)
    std::uint64_t seed = 0;         // the solver is deterministic; kept for interface stability
};

struct SvmFit {
    SvmModel model;
    std::vector<double> alpha; // one per training sample
    std::size_t iterations = 0;
    double gap = 0; // final maximal KKT violation (m(a) - M(a))
};

inline SvmFit solve_svm_dual(std::span<const Vector> X, std::span<const int> y, double C, const KernelSpec& kernel,
                             const SvmOptions& opts = {}) {
    const std::size_t n = X.size();
    if (n != y.size()) throw LengthMismatch("sample and label counts differ");
    if (!(C > 0)) throw Error("C must be positive");
    if (!(opts.tol > 0)) throw Error("tolerance must be positive");
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] != 1 && y[i] != -1) throw DataError("labels must be +1 or -1");
        (y[i] > 0 ? has_pos : has_neg) = true;
        if (X[i].size() != X[0].size()) throw DimensionMismatch("training vectors differ in dimension");
    }
    if (!has_pos || !has_neg) throw DegenerateLabels("SVM training needs both classes");

    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) K[i * n + j] = K[j * n + i] = kernel_eval(kernel, X[i], X[j]);
    auto Q = [&](std::size_t i, std::size_t j) { return static_cast<double>(y[i] * y[j]) * K[i * n + j]; };

    std::vector<double> alpha(n, 0.0), G(n, -1.0);
    const double tau = 1e-12;
    const std::size_t max_iter = opts.max_iterations ? opts.max_iterations : std::max<std::size_t>(10 * n, 100000);
    auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
    auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C); };

    SvmFit fit;
    bool converged = false;
    std::size_t iter = 0;
    double gap = 0;
    for (; iter < max_iter; ++iter) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (in_up(t) && -y[t] * G[t] > gmax) {
                gmax = -y[t] * G[t];
                i = t;
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        std::size_t j = n;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            gmax2 = std::max(gmax2, y[t] * G[t]);
            if (i == n) continue;
            double b = gmax + y[t] * G[t];
            if (b > 0) {
                double a = K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t];
                if (a <= 0) a = tau;
                if (-(b * b) / a < best) {
                    best = -(b * b) / a;
                    j = t;
                }
            }
        }
        gap = gmax + gmax2;
        if (i == n || j == n || gap < opts.tol) {
            converged = true;
            break;
        }

        const double old_i = alpha[i], old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = K[i * n + i] + K[j * n + j] - 2.0 * K[i * n + j];
            if (quad <= 0) quad = tau;
            double delta = (-G[i] - G[j]) / quad;
            double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
            } else {
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
            }
            if (diff > 0) {
                if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
            } else {
                if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
            }
        } else {
            double quad = K[i * n + i] + K[j * n + j] - 2.0 * K[i * n + j];
            if (quad <= 0) quad = tau;
            double delta = (G[i] - G[j]) / quad;
            double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
            } else {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
            }
            if (sum > C) {
                if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
            } else {
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
            }
        }

        const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
        for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
    }

    // Bias from free vectors, else the midpoint of the bound-implied interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * G[t];
        if (alpha[t] >= C) {
            if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0) {
            if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            sum_free += yg;
            ++n_free;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

    fit.model.kernel = kernel;
    fit.model.C = C;
    fit.model.bias = -rho;
    fit.model.converged = converged;
    for (std::size_t t = 0; t < n; ++t) {
        if (std::abs(alpha[t]) > 1e-12) {
            fit.model.support_vectors.push_back(X[t]);
            fit.model.coeffs.push_back(alpha[t] * y[t]);
        }
    }
    fit.alpha = std::move(alpha);
    fit.iterations = iter;
    fit.gap = gap;
    return fit;
}

inline SvmModel train_svm(std::span<const Vector> X, std::span<const int> y, double C, const KernelSpec& kernel,
                          const SvmOptions& opts = {}) {
    return solve_svm_dual(X, y, C, kernel, opts).model;
}

// --- serialization -------------------------------------------------------

inline nlohmann::json to_json(const KernelSpec& k) {
    switch (k.kind) {
    case KernelSpec::Kind::RBF: return {{"kind", "rbf"}, {"gamma", k.gamma}};
    case KernelSpec::Kind::Polynomial: return {{"kind", "polynomial"}, {"offset", k.offset}, {"degree", k.degree}};
    case KernelSpec::Kind::Linear: return {{"kind", "linear"}};
    }
    return {};
}

inline KernelSpec kernel_from_json(const nlohmann::json& j) {
    auto kind = j.at("kind").get<std::string>();
    if (kind == "rbf") return KernelSpec::rbf(j.at("gamma").get<double>());
    if (kind == "polynomial") return KernelSpec::polynomial(j.at("offset").get<double>(), j.at("degree").get<int>());
    if (kind == "linear") return KernelSpec::linear();
    throw DataError("unknown kernel kind '" + kind + "'");
}

inline nlohmann::json to_json(const SvmModel& m) {
    return {{"kernel", to_json(m.kernel)},
            {"C", m.C},
            {"bias", m.bias},
            {"converged", m.converged},
            {"coeffs", m.coeffs},
            {"support_vectors", m.support_vectors}};
}

inline SvmModel svm_from_json(const nlohmann::json& j) {
    SvmModel m;
    m.kernel = kernel_from_json(j.at("kernel"));
    m.C = j.at("C").get<double>();
    m.bias = j.at("bias").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.coeffs = j.at("coeffs").get<std::vector<double>>();
    m.support_vectors = j.at("support_vectors").get<std::vector<Vector>>();
    if (m.coeffs.size() != m.support_vectors.size()) throw DataError("SVM coefficient count mismatch");
    return m;
}

} // namespace amods

#endif
