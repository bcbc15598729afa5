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

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cstrain/constraints.hpp"
#include "cstrain/data.hpp"
#include "cstrain/metrics.hpp"
#include "cstrain/objectives.hpp"
#include "cstrain/params.hpp"

namespace cstrain {

enum class Termination { Completed, Converged, NonFinite };

constexpr std::string_view to_string(Termination t) noexcept {
    switch (t) {
        case Termination::Completed: return "completed";
        case Termination::Converged: return "converged";
        case Termination::NonFinite: return "non-finite";
    }
    return "?";
}

struct EpochRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double cv_p = 0.0;
    std::optional<double> cv_rel;  // nullopt: zero initial violation
    double cv_p2 = 0.0;
    double accuracy = 0.0;
    double lambda_inf = 0.0;
    double penalty = 0.0;
    double lr = 0.0;
};

/// One outer decision of the stochastic augmented Lagrangian loop.
struct SalEvent {
    std::size_t shuffle = 0;
    std::size_t iteration = 0;
    double violation_sq = 0.0;
    double best_before = 0.0;
    bool accepted = false;
    bool terminated = false;
    double penalty_before = 0.0;
    double penalty_after = 0.0;
    double lambda_change_inf = 0.0;
};

struct TrainingRecord {
    std::vector<EpochRow> rows;
    std::vector<SalEvent> sal_events;
    ParamVector theta;
    Termination termination = Termination::Completed;
    std::string message;
    double cv0 = 0.0;
};

struct TrainOptions {
    std::size_t batch_size = 128;
    std::size_t epochs = 10;
    CvConfig cv{};
    std::uint64_t seed = 0;
    const Dataset* eval = nullptr;  // accuracy split; training data when null
};

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// Builds per-epoch rows; the first row fixes CV_0.
template <Objective O>
class EpochRecorder {
public:
    EpochRecorder(const O& obj, const ConstraintSet& set, const Dataset& train, const TrainOptions& opt)
        : obj_(obj), set_(set), train_(train), opt_(opt) {}

    EpochRow row(std::size_t epoch, const ParamVector& theta, double lambda_inf, double penalty, double lr) {
        EpochRow r;
        r.epoch = epoch;
        r.train_loss = obj_.value(theta, train_.samples);
        const ConstraintValue c = set_.evaluate(theta);
        r.cv_p = cv(c.entries, opt_.cv);
        r.cv_p2 = cv(c.entries, CvConfig{2.0});
        if (!have_cv0_) {
            cv0_ = r.cv_p;
            have_cv0_ = true;
        }
        r.cv_rel = cv_rel(r.cv_p, cv0_);
        const Dataset& acc_set = opt_.eval != nullptr ? *opt_.eval : train_;
        const auto preds = obj_.predict(theta, acc_set.samples);
        r.accuracy = accuracy(preds, acc_set.samples.labels);
        r.lambda_inf = lambda_inf;
        r.penalty = penalty;
        r.lr = lr;
        return r;
    }

    double cv0() const { return cv0_; }

private:
    const O& obj_;
    const ConstraintSet& set_;
    const Dataset& train_;
    const TrainOptions& opt_;
    bool have_cv0_ = false;
    double cv0_ = 0.0;
};

}  // namespace cstrain
