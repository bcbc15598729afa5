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
#include <random>
#include <vector>

#include "cstrain/constraints.hpp"
#include "cstrain/data.hpp"
#include "cstrain/methods/record.hpp"
#include "cstrain/objectives.hpp"
#include "cstrain/solvers.hpp"

namespace cstrain {

/// Dual step for the scaled multiplier u = lambda / rho.
enum class DualRule {
    AsPrinted,  // u <- u + rho (theta - mu)
    Scaled,     // u <- u + (theta - mu)
};

/**
 * Split variable mu and scaled multiplier u over the constrained groups.
 * Unconstrained groups are not duplicated.
 */
struct AdmmState {
    ParamVector theta;
    std::vector<std::size_t> groups;               // indices into theta.groups()
    std::vector<std::vector<std::size_t>> specs;   // spec indices per group, declaration order
    std::vector<std::vector<double>> mu, u;
    double rho = 1.0;

    static AdmmState init(const ConstraintSet& set, ParamVector theta, double rho) {
        require(rho > 0.0, ErrorCode::NonPositiveRho, "ADMM requires rho > 0");
        set.validate(theta);
        AdmmState s;
        s.rho = rho;
        for (const GroupDesc* g : set.constrained_groups(theta)) {
            const auto gi = static_cast<std::size_t>(g - theta.groups().data());
            s.groups.push_back(gi);
            std::vector<std::size_t> on_group;
            for (std::size_t si = 0; si < set.specs().size(); ++si)
                for (const GroupDesc* t : ConstraintSet::targets(set.specs()[si], theta))
                    if (t == g) on_group.push_back(si);
            s.specs.push_back(std::move(on_group));
            const auto view = theta.view_group(*g).flat();
            s.mu.emplace_back(view.begin(), view.end());
            s.u.emplace_back(g->size(), 0.0);
        }
        s.theta = std::move(theta);
        return s;
    }

    const GroupDesc& group(std::size_t j) const { return theta.groups()[groups[j]]; }

    /// mu <- prox_C(theta + u); stacked specs on one group are applied in sequence.
    void mu_step(const ConstraintSet& set, const OrthProxOptions& orth = {}) {
        for (std::size_t j = 0; j < groups.size(); ++j) {
            const GroupDesc& g = group(j);
            const auto th = theta.view_group(g).flat();
            std::vector<double> v(g.size());
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = th[i] + u[j][i];
            for (std::size_t si : specs[j]) v = prox(set.specs()[si], g, v, rho, orth);
            mu[j] = std::move(v);
        }
    }

    void u_step(DualRule rule) {
        const double scale = rule == DualRule::AsPrinted ? rho : 1.0;
        for (std::size_t j = 0; j < groups.size(); ++j) {
            const auto th = theta.view_group(group(j)).flat();
            for (std::size_t i = 0; i < u[j].size(); ++i) u[j][i] += scale * (th[i] - mu[j][i]);
        }
    }

    double primal_residual() const {
        double s = 0.0;
        for (std::size_t j = 0; j < groups.size(); ++j) {
            const auto th = theta.view_group(group(j)).flat();
            for (std::size_t i = 0; i < mu[j].size(); ++i) s += (th[i] - mu[j][i]) * (th[i] - mu[j][i]);
        }
        return std::sqrt(s);
    }

    double lambda_inf() const {
        double m = 0.0;
        for (const auto& uj : u)
            for (double x : uj) m = std::max(m, std::abs(rho * x));
        return m;
    }
};

struct AdmmConfig {
    double rho = 1.0;
    std::size_t outer_iters = 1000;
    MinimizeOptions inner{};
    double tolerance = 1e-9;  // primal and dual residual stop
    DualRule dual_rule = DualRule::AsPrinted;
    OrthProxOptions orth{};
};

struct AdmmResult {
    ParamVector theta;
    AdmmState state;
    std::size_t iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    bool converged = false;
};

/**
 * Deterministic ADMM over theta = mu: the theta-step minimizes
 * F(theta) + (rho/2) ||theta - mu + u||^2, the mu-step is the constraint prox,
 * then the dual step.
 */
template <Objective O>
AdmmResult admm_solve(const O& obj, const Batch& full, const ConstraintSet& set, ParamVector theta0,
                      const AdmmConfig& cfg = {}) {
    AdmmResult res;
    res.state = AdmmState::init(set, std::move(theta0), cfg.rho);
    AdmmState& st = res.state;

    ParamVector work = st.theta;
    const SmoothFunction theta_obj = [&](std::span<const double> x, std::span<double> g) {
        std::copy(x.begin(), x.end(), work.values().begin());
        double f = obj.value_and_grad(work, full, g);
        for (std::size_t j = 0; j < st.groups.size(); ++j) {
            const GroupDesc& gd = st.group(j);
            for (std::size_t i = 0; i < gd.size(); ++i) {
                const double r = x[gd.offset + i] - st.mu[j][i] + st.u[j][i];
                f += 0.5 * st.rho * r * r;
                g[gd.offset + i] += st.rho * r;
            }
        }
        return f;
    };

    for (std::size_t k = 0; k < cfg.outer_iters; ++k) {
        minimize(theta_obj, st.theta.values(), cfg.inner);
        const auto mu_prev = st.mu;
        st.mu_step(set, cfg.orth);
        st.u_step(cfg.dual_rule);
        double dual = 0.0;
        for (std::size_t j = 0; j < st.mu.size(); ++j)
            for (std::size_t i = 0; i < st.mu[j].size(); ++i) {
                const double d = st.mu[j][i] - mu_prev[j][i];
                dual += d * d;
            }
        res.dual_residual = st.rho * std::sqrt(dual);
        res.primal_residual = st.primal_residual();
        res.iterations = k + 1;
        if (res.primal_residual < cfg.tolerance && res.dual_residual < cfg.tolerance) {
            res.converged = true;
            break;
        }
    }
    res.theta = st.theta;
    return res;
}

// ---------------------------------------------------------------------------
// stochastic ADMM

struct SadmmConfig {
    double rho = 1.0;
    double eta0 = 1e-2;  // step schedule eta^k = eta0 / sqrt(k + 1)
    DualRule dual_rule = DualRule::AsPrinted;
    OrthProxOptions orth{};

    void validate() const {
        require(rho > 0.0, ErrorCode::NonPositiveRho, "S-ADMM requires rho > 0");
        require(eta0 > 0.0, ErrorCode::InvalidArgument, "S-ADMM requires eta0 > 0");
    }

    double step_size(std::size_t k) const { return eta0 / std::sqrt(static_cast<double>(k) + 1.0); }
};

/// Linearized theta-step for one constrained coordinate.
inline double sadmm_theta_step(double theta, double mu, double u, double grad, double eta, double rho) {
    return (theta / eta + rho * (mu - u) - grad) / (1.0 / eta + rho);
}

/**
 * Stochastic ADMM with the linearized augmented Lagrangian: one closed-form
 * theta-step per mini-batch (plain SGD with eta^k on unconstrained groups),
 * then the prox mu-step and the dual step.
 */
template <Objective O>
TrainingRecord sadmm_train(const O& obj, const ConstraintSet& set, const SadmmConfig& cfg, const Dataset& train,
                           ParamVector theta, const TrainOptions& opt) {
    cfg.validate();
    TrainingRecord rec;
    EpochRecorder<O> recorder(obj, set, train, opt);
    AdmmState st = AdmmState::init(set, std::move(theta), cfg.rho);

    std::vector<int> constrained(st.theta.size(), -1);  // owning split index per coordinate
    for (std::size_t j = 0; j < st.groups.size(); ++j) {
        const GroupDesc& g = st.group(j);
        for (std::size_t i = 0; i < g.size(); ++i) constrained[g.offset + i] = static_cast<int>(j);
    }
    std::vector<std::size_t> local(st.theta.size(), 0);
    for (std::size_t j = 0; j < st.groups.size(); ++j) {
        const GroupDesc& g = st.group(j);
        for (std::size_t i = 0; i < g.size(); ++i) local[g.offset + i] = i;
    }

    std::mt19937_64 rng(opt.seed);
    std::vector<double> grad(st.theta.size());
    std::size_t k = 0;
    try {
        rec.rows.push_back(recorder.row(0, st.theta, st.lambda_inf(), cfg.rho, cfg.step_size(0)));
        for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
            const EpochPlan plan = epoch_plan(train.size(), opt.batch_size, rng);
            for (std::size_t b = 0; b < plan.batches.size(); ++b, ++k) {
                const Batch batch = gather(train, plan.batch(b));
                obj.value_and_grad(st.theta, batch, grad);
                if (!all_finite(grad)) throw Error(ErrorCode::NonFiniteLoss, "non-finite gradient");
                const double eta = cfg.step_size(k);
                auto th = st.theta.values();
                for (std::size_t i = 0; i < th.size(); ++i) {
                    const int j = constrained[i];
                    if (j < 0) {
                        th[i] -= eta * grad[i];
                    } else {
                        const auto sj = static_cast<std::size_t>(j);
                        th[i] = sadmm_theta_step(th[i], st.mu[sj][local[i]], st.u[sj][local[i]], grad[i], eta, cfg.rho);
                    }
                }
                st.mu_step(set, cfg.orth);
                st.u_step(cfg.dual_rule);
            }
            rec.rows.push_back(recorder.row(epoch, st.theta, st.lambda_inf(), cfg.rho, cfg.step_size(k)));
        }
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NonFiniteLoss) throw;
        rec.termination = Termination::NonFinite;
        rec.message = e.what();
    }
    rec.cv0 = recorder.cv0();
    rec.theta = std::move(st.theta);
    return rec;
}

}  // namespace cstrain
