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
#include <vector>

#include "cstrain/constraints.hpp"
#include "cstrain/methods/multipliers.hpp"
#include "cstrain/objectives.hpp"
#include "cstrain/solvers.hpp"

namespace cstrain {

struct AlmConfig {
    double rho = 10.0;
    std::size_t outer_iters = 100;
    MinimizeOptions inner{};
    double feasibility_tol = 1e-8;
    double stationarity_tol = 1e-7;
};

struct AlmResult {
    ParamVector theta;
    std::vector<double> lambda;
    std::size_t outer_iterations = 0;
    bool converged = false;
    double stationarity = 0.0;  // ||grad F + J^T lambda||
    double violation = 0.0;     // ||C||
};

/// ||grad F(theta) + J(theta)^T lambda||
template <Objective O>
double kkt_stationarity(const O& obj, const ConstraintSet& set, const ParamVector& theta, const Batch& batch,
                        std::span<const double> lambda) {
    std::vector<double> g(theta.size());
    obj.value_and_grad(theta, batch, g);
    set.evaluate(theta).add_jacobian_transpose(lambda, g);
    return std::sqrt(squared_norm(g));
}

/**
 * Deterministic augmented Lagrangian method: full inner minimization of
 * L_rho(., lambda) followed by lambda <- lambda + rho C(theta). Stops early
 * once C(theta) and the KKT stationarity residual are both below tolerance.
 */
template <Objective O>
AlmResult alm_solve(const O& obj, const Batch& full, const ConstraintSet& set, ParamVector theta0,
                    const AlmConfig& cfg = {}) {
    require(cfg.rho > 0.0, ErrorCode::NonPositiveRho, "ALM requires rho > 0");
    AlmResult res;
    res.theta = std::move(theta0);
    MultiplierState ms;
    ms.lambda.assign(set.entry_count(res.theta), 0.0);
    ms.penalty = cfg.rho;

    ParamVector work = res.theta;
    const SmoothFunction lagrangian = [&](std::span<const double> x, std::span<double> g) {
        std::copy(x.begin(), x.end(), work.values().begin());
        return aug_lagrangian_value_grad(obj, set, work, full, ms, g);
    };

    for (std::size_t k = 0;; ++k) {
        const ConstraintValue c = set.evaluate(res.theta);
        res.violation = std::sqrt(c.squared_norm());
        res.stationarity = kkt_stationarity(obj, set, res.theta, full, ms.lambda);
        res.outer_iterations = k;
        if (res.violation <= cfg.feasibility_tol && res.stationarity <= cfg.stationarity_tol) {
            res.converged = true;
            break;
        }
        if (k == cfg.outer_iters) break;
        minimize(lagrangian, res.theta.values(), cfg.inner);
        multiplier_update(ms, set.evaluate(res.theta));
    }
    res.lambda = ms.lambda;
    return res;
}

}  // namespace cstrain
