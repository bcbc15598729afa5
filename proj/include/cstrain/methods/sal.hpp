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

#include <random>
#include <vector>

#include "cstrain/constraints.hpp"
#include "cstrain/data.hpp"
#include "cstrain/methods/multipliers.hpp"
#include "cstrain/methods/record.hpp"
#include "cstrain/objectives.hpp"
#include "cstrain/solvers.hpp"

namespace cstrain {

/**
 * Stochastic augmented Lagrangian training.
 *
 * Each shuffle is one pass over the data. The shuffled batches are cut into
 * n_aug_lag contiguous shares; share k is one inner SGD/Adam pass on
 * L(theta, lambda_k) with penalty mu_k, after which C(theta) is tested
 * against C_best on the full parameters. The learning rate decays once per
 * share and is restored at the start of every shuffle.
 *
 * opt.epochs and opt.batch_size are ignored; cfg.n_shuffle and cfg.n_batch
 * govern the loop.
 */
template <Objective O>
TrainingRecord sal_train(const O& obj, const ConstraintSet& set, const SalConfig& cfg, const SolverConfig& solver_cfg,
                         const Dataset& train, ParamVector theta, const TrainOptions& opt) {
    cfg.validate();
    TrainingRecord rec;
    EpochRecorder<O> recorder(obj, set, train, opt);
    SolverState solver(solver_cfg, theta.size());
    SalController ctrl(cfg, set.evaluate(theta).entries);
    std::mt19937_64 rng(opt.seed);
    std::vector<double> grad(theta.size());

    auto lambda_inf = [&] { return inf_norm(ctrl.state().lambda); };
    try {
        rec.rows.push_back(recorder.row(0, theta, 0.0, ctrl.state().penalty, solver.lr()));
        for (std::size_t s = 0; s < cfg.n_shuffle; ++s) {
            const EpochPlan plan = epoch_plan(train.size(), cfg.n_batch, rng);
            ctrl.begin_shuffle(s);
            solver.reset_lr();
            const std::size_t n_batches = plan.batches.size();
            bool stop = false;
            for (std::size_t k = 0; k < cfg.n_aug_lag && !stop; ++k) {
                const std::size_t lo = k * n_batches / cfg.n_aug_lag;
                const std::size_t hi = (k + 1) * n_batches / cfg.n_aug_lag;
                for (std::size_t b = lo; b < hi; ++b) {
                    const Batch batch = gather(train, plan.batch(b));
                    aug_lagrangian_value_grad(obj, set, theta, batch, ctrl.state(), grad);
                    if (!all_finite(grad)) throw Error(ErrorCode::NonFiniteLoss, "non-finite gradient");
                    solver.step(theta, grad);
                }
                solver.end_epoch();
                const ConstraintValue c = set.evaluate(theta);
                if (!all_finite(c.entries)) throw Error(ErrorCode::NonFiniteLoss, "non-finite constraint value");
                SalEvent ev;
                ev.shuffle = s;
                ev.iteration = k;
                const SalDecision d = ctrl.observe(c.entries, [&] { return obj.value(theta, train.samples); }, &ev);
                rec.sal_events.push_back(ev);
                if (d == SalDecision::Terminated) {
                    rec.termination = Termination::Converged;
                    rec.message = "fidelity and violation tolerances met";
                    stop = true;
                }
            }
            rec.rows.push_back(recorder.row(s + 1, theta, lambda_inf(), ctrl.state().penalty, solver.lr()));
            if (stop) break;
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
