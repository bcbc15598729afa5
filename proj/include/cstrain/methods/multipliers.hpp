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
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "cstrain/constraints.hpp"
#include "cstrain/error.hpp"
#include "cstrain/objectives.hpp"
#include "cstrain/params.hpp"
#include "cstrain/methods/record.hpp"

namespace cstrain {

/// Multipliers lambda (length m), the shared penalty rho / mu, and ||C_best||^2.
struct MultiplierState {
    std::vector<double> lambda;
    double penalty = 1.0;
    double best_violation = 0.0;
};

/**
 * L(theta, lambda) = F(theta; batch) + <lambda, C(theta)> + (penalty / 2) ||C(theta)||^2
 * with gradient grad F + J^T (lambda + penalty C).
 */
template <Objective O>
double aug_lagrangian_value_grad(const O& obj, const ConstraintSet& set, const ParamVector& theta, const Batch& batch,
                                 const MultiplierState& ms, std::span<double> grad) {
    const double f = obj.value_and_grad(theta, batch, grad);
    const ConstraintValue c = set.evaluate(theta);
    require(ms.lambda.size() == c.size(), ErrorCode::LengthMismatch, "lambda length must equal m");
    std::vector<double> weights(c.size());
    double lin = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        lin += ms.lambda[i] * c.entries[i];
        quad += c.entries[i] * c.entries[i];
        weights[i] = ms.lambda[i] + ms.penalty * c.entries[i];
    }
    c.add_jacobian_transpose(weights, grad);
    return f + lin + 0.5 * ms.penalty * quad;
}

template <Objective O>
std::pair<double, std::vector<double>> aug_lagrangian_value_grad(const O& obj, const ConstraintSet& set,
                                                                 const ParamVector& theta, const Batch& batch,
                                                                 const MultiplierState& ms) {
    std::vector<double> grad(theta.size());
    const double v = aug_lagrangian_value_grad(obj, set, theta, batch, ms, grad);
    return {v, std::move(grad)};
}

/// lambda <- lambda + penalty * C
inline void multiplier_update(MultiplierState& ms, std::span<const double> c) {
    require(c.size() == ms.lambda.size(), ErrorCode::LengthMismatch, "constraint vector length must equal m");
    for (std::size_t i = 0; i < c.size(); ++i) ms.lambda[i] += ms.penalty * c[i];
}

inline void multiplier_update(MultiplierState& ms, const ConstraintValue& c) { multiplier_update(ms, c.entries); }

inline double squared_norm(std::span<const double> c) {
    double s = 0.0;
    for (double x : c) s += x * x;
    return s;
}

/// ||c||^2 <= eta * ||C_best||^2, boundary inclusive.
inline bool sufficient_decrease(const MultiplierState& ms, std::span<const double> c, double eta) {
    return squared_norm(c) <= eta * ms.best_violation;
}

inline bool sufficient_decrease(const MultiplierState& ms, const ConstraintValue& c, double eta) {
    return sufficient_decrease(ms, c.entries, eta);
}

inline void penalty_update(MultiplierState& ms, double sigma, double mu_max) {
    ms.penalty = std::min(sigma * ms.penalty, mu_max);
}

struct SalConfig {
    double eta = 0.9;      // update tolerance
    double eps_f = 0.0;    // fidelity tolerance (full training set)
    double eps_c = 1e-4;   // violation tolerance on ||C||^2
    double mu_init = 1e-3;
    double sigma = 2.0;
    double mu_max = 1.0;
    std::size_t n_batch = 128;
    std::size_t n_shuffle = 10;
    std::size_t n_aug_lag = 4;
    /// When false, lambda and the penalty never move (pure quadratic penalty at mu_init).
    bool adapt = true;

    void validate() const {
        require(eta > 0.0 && eta < 1.0, ErrorCode::ValidationError, "eta must be in (0,1)");
        require(sigma > 1.0, ErrorCode::ValidationError, "sigma must be > 1");
        require(mu_init > 0.0, ErrorCode::ValidationError, "mu_init must be positive");
        require(mu_init <= mu_max, ErrorCode::ValidationError, "mu_init must not exceed mu_max");
        require(n_batch > 0 && n_shuffle > 0 && n_aug_lag > 0, ErrorCode::ValidationError,
                "n_batch, n_shuffle and n_aug_lag must be positive");
    }
};

enum class SalDecision { Accepted, Rejected, Terminated };

/**
 * Outer-loop state machine of the stochastic augmented Lagrangian method.
 *
 * Holds lambda, the penalty and ||C_best||^2. observe() applies one
 * acceptance test: on sufficient decrease it either terminates (both
 * tolerances met) or updates lambda and C_best; otherwise it escalates the
 * penalty and leaves lambda alone.
 */
class SalController {
public:
    SalController(SalConfig cfg, std::span<const double> initial_violation) : cfg_(cfg) {
        cfg_.validate();
        ms_.lambda.assign(initial_violation.size(), 0.0);
        ms_.best_violation = squared_norm(initial_violation);
        ms_.penalty = cfg_.mu_init;
    }

    const MultiplierState& state() const { return ms_; }
    const SalConfig& config() const { return cfg_; }

    /// mu_0 <- (shuffle + 1) mu_init, held under mu_max. Lambda carries over.
    void begin_shuffle(std::size_t shuffle) {
        if (!cfg_.adapt) return;
        ms_.penalty = std::min(static_cast<double>(shuffle + 1) * cfg_.mu_init, cfg_.mu_max);
    }

    /// `fidelity` is evaluated only when the violation tolerance already holds.
    SalDecision observe(std::span<const double> c, const std::function<double()>& fidelity,
                        SalEvent* event = nullptr) {
        const double v2 = squared_norm(c);
        if (event != nullptr) {
            event->violation_sq = v2;
            event->best_before = ms_.best_violation;
            event->penalty_before = ms_.penalty;
        }
        SalDecision d;
        if (!cfg_.adapt) {
            d = SalDecision::Rejected;
        } else if (sufficient_decrease(ms_, c, cfg_.eta)) {
            if (v2 <= cfg_.eps_c && fidelity() <= cfg_.eps_f) {
                d = SalDecision::Terminated;
            } else {
                double change = 0.0;
                for (std::size_t i = 0; i < c.size(); ++i) change = std::max(change, std::abs(ms_.penalty * c[i]));
                multiplier_update(ms_, c);
                ms_.best_violation = v2;
                if (event != nullptr) event->lambda_change_inf = change;
                d = SalDecision::Accepted;
            }
        } else {
            penalty_update(ms_, cfg_.sigma, cfg_.mu_max);
            d = SalDecision::Rejected;
        }
        if (event != nullptr) {
            event->accepted = d == SalDecision::Accepted;
            event->terminated = d == SalDecision::Terminated;
            event->penalty_after = ms_.penalty;
        }
        return d;
    }

private:
    SalConfig cfg_;
    MultiplierState ms_;
};

}  // namespace cstrain
