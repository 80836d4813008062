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

#ifndef AMODS_COMMON_HPP
#define AMODS_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace amods {

// Error hierarchy. Every failure the library reports derives from Error so
// callers (the CLI in particular) can map families onto exit codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input data that cannot be interpreted (bad log line, bad corpus record).
struct DataError : Error {
    using Error::Error;
};

struct ParseError : DataError {
    using DataError::DataError;
};

struct UnknownCharacter : DataError {
    using DataError::DataError;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct DegenerateLabels : DataError {
    using DataError::DataError;
};

struct TooFewSamples : DataError {
    using DataError::DataError;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct MissingTruth : Error {
    using Error::Error;
};

struct LabelerUnavailable : Error {
    using Error::Error;
};

enum class Label { Benign, Malicious };

enum class AttackClass { SQLI, XSS, DT, RFI };

inline constexpr int to_sign(Label l) noexcept { return l == Label::Malicious ? +1 : -1; }

inline std::string_view to_string(Label l) noexcept {
    return l == Label::Malicious ? "malicious" : "benign";
}

inline std::string_view to_string(AttackClass c) noexcept {
    switch (c) {
    case AttackClass::SQLI: return "SQLI";
    case AttackClass::XSS: return "XSS";
    case AttackClass::DT: return "DT";
    case AttackClass::RFI: return "RFI";
    }
    return "SQLI";
}

inline Label parse_label(std::string_view s) {
    if (s == "malicious" || s == "Malicious" || s == "MALICIOUS") return Label::Malicious;
    if (s == "benign" || s == "Benign" || s == "BENIGN") return Label::Benign;
    throw DataError("unknown label '" + std::string(s) + "'");
}

inline AttackClass parse_attack_class(std::string_view s) {
    std::string u;
    for (char c : s) u.push_back(static_cast<char>(c >= 'a' && c <= 'z' ? c - 32 : c));
    if (u == "SQLI") return AttackClass::SQLI;
    if (u == "XSS") return AttackClass::XSS;
    if (u == "DT") return AttackClass::DT;
    if (u == "RFI") return AttackClass::RFI;
    throw DataError("unknown attack class '" + std::string(s) + "'");
}

using Vector = std::vector<double>;

// splitmix64 finalizer; used to derive independent sub-seeds from a run seed.
inline constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a, stable across platforms; used for content keys and digests.
inline constexpr std::uint64_t fnv1a(std::string_view s,
                                     std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

using Rng = std::mt19937_64;

// Uniform integer in [0, n) without relying on the library's distribution
// implementation, so sequences are identical across standard libraries.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = Rng::max() - (Rng::max() % n);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

inline double uniform_real(Rng& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = uniform_index(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

inline double standard_normal(Rng& rng) {
    // Box-Muller; one draw per call keeps the stream position simple.
    double u1 = uniform_real(rng);
    double u2 = uniform_real(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

} // namespace amods

#endif
