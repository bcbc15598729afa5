/*
 * Copyright 2026 The cstrain Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cstrain/error.hpp"

namespace cstrain {

/// Norm order for the constraint-violation metric; infinity selects the max norm.
struct CvConfig {
    double p = 2.0;

    static CvConfig inf() { return {std::numeric_limits<double>::infinity()}; }
    bool is_inf() const { return std::isinf(p); }
    void validate() const { require(p >= 1.0, ErrorCode::InvalidOrder, "CV order p must be >= 1 or INF"); }
};

/// (sum |c_i|^p)^(1/p), or max |c_i| for p = INF.
inline double cv(std::span<const double> entries, CvConfig cfg = {}) {
    cfg.validate();
    if (entries.empty()) return 0.0;
    if (cfg.is_inf()) {
        double m = 0.0;
        for (double e : entries) m = std::max(m, std::abs(e));
        return m;
    }
    // scale by the max entry so large violations do not overflow |c|^p
    double scale = 0.0;
    for (double e : entries) scale = std::max(scale, std::abs(e));
    if (scale == 0.0) return 0.0;
    if (cfg.p == 1.0) {
        double s = 0.0;
        for (double e : entries) s += std::abs(e);
        return s;
    }
    if (cfg.p == 2.0) {
        double s = 0.0;
        for (double e : entries) s += (e / scale) * (e / scale);
        return scale * std::sqrt(s);
    }
    double s = 0.0;
    for (double e : entries) s += std::pow(std::abs(e) / scale, cfg.p);
    return scale * std::pow(s, 1.0 / cfg.p);
}

inline double cv(std::span<const double> entries, double p) { return cv(entries, CvConfig{p}); }

struct CvHistory {
    double cv0 = 0.0;
    std::vector<double> per_epoch;
};

/// CV_e / CV_0; nullopt stands for ZeroInitialViolation.
inline std::optional<double> cv_rel(double cv_e, double cv0) {
    if (cv0 == 0.0) return std::nullopt;
    return cv_e / cv0;
}

inline std::optional<double> cv_rel(const CvHistory& h, std::size_t epoch) {
    return cv_rel(h.per_epoch.at(epoch), h.cv0);
}

inline double accuracy(std::span<const int> preds, std::span<const int> labels) {
    require(!labels.empty(), ErrorCode::EmptyInput, "accuracy of an empty set");
    require(preds.size() == labels.size(), ErrorCode::LengthMismatch, "predictions and labels differ in length");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += preds[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace cstrain
