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
#include <random>
#include <vector>

#include "cstrain/constraints.hpp"
#include "cstrain/data.hpp"
#include "cstrain/methods/record.hpp"
#include "cstrain/objectives.hpp"
#include "cstrain/solvers.hpp"

namespace cstrain {

struct FpConfig {
    std::vector<double> rho_per_constraint;  // one per ConstraintSpec
};

/**
 * Fixed penalty training of F(theta) + sum_i rho_i c_i(theta)^2 with mini-batch
 * SGD/Adam. Entry i takes the rho of the spec that produced it.
 */
template <Objective O>
TrainingRecord fp_train(const O& obj, const ConstraintSet& set, const FpConfig& fp, const SolverConfig& solver_cfg,
                        const Dataset& train, ParamVector theta, const TrainOptions& opt) {
    require(fp.rho_per_constraint.size() == set.specs().size(), ErrorCode::LengthMismatch,
            "need one rho per constraint spec");
    TrainingRecord rec;
    EpochRecorder<O> recorder(obj, set, train, opt);
    SolverState solver(solver_cfg, theta.size());
    std::mt19937_64 rng(opt.seed);
    std::vector<double> grad(theta.size());
    const double rho_max =
        fp.rho_per_constraint.empty() ? 0.0 : *std::max_element(fp.rho_per_constraint.begin(), fp.rho_per_constraint.end());

    try {
        rec.rows.push_back(recorder.row(0, theta, 0.0, rho_max, solver.lr()));
        for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
            const EpochPlan plan = epoch_plan(train.size(), opt.batch_size, rng);
            for (std::size_t b = 0; b < plan.batches.size(); ++b) {
                const Batch batch = gather(train, plan.batch(b));
                obj.value_and_grad(theta, batch, grad);
                if (!set.empty()) {
                    const ConstraintValue c = set.evaluate(theta);
                    std::vector<double> w(c.size());
                    for (std::size_t s = 0; s < c.spec_ranges.size(); ++s)
                        for (std::size_t i = c.spec_ranges[s].first; i < c.spec_ranges[s].second; ++i)
                            w[i] = 2.0 * fp.rho_per_constraint[s] * c.entries[i];
                    c.add_jacobian_transpose(w, grad);
                }
                if (!all_finite(grad)) throw Error(ErrorCode::NonFiniteLoss, "non-finite gradient");
                solver.step(theta, grad);
            }
            solver.end_epoch();
            rec.rows.push_back(recorder.row(epoch, theta, 0.0, rho_max, solver.lr()));
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLoss) throw;
        rec.termination = Termination::NonFinite;
        rec.message = e.what();
    }
    rec.cv0 = recorder.cv0();
    rec.theta = std::move(theta);
    return rec;
}

}  // namespace cstrain
