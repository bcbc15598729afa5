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

#include <gtest/gtest.h>

#include <random>

#include "cstrain/methods/multipliers.hpp"
#include "gradcheck.hpp"

using namespace cstrain;
using cstrain::testing::central_differences;
using cstrain::testing::max_relative_error;

namespace {

MultiplierState state(std::vector<double> lambda, double penalty, double best = 0.0) {
    return MultiplierState{std::move(lambda), penalty, best};
}

}  // namespace

TEST(AugLagrangian, ReducesToObjective) {
    const MlpSpec spec{{3, 4, 2}};
    const MlpObjective obj(spec);
    std::mt19937_64 rng(1);
    ParamVector p = obj.make_params();
    init_glorot_uniform(spec, p, rng);
    Batch b;
    b.inputs = RowMatrix::Random(5, 3);
    b.labels = {0, 1, 1, 0, 1};
    const ConstraintSet set{ConstraintSpec::l2(), ConstraintSpec::nonnegativity("W1")};
    const std::size_t m = set.entry_count(p);
    const auto [v, g] = aug_lagrangian_value_grad(obj, set, p, b, state(std::vector<double>(m, 0.0), 0.0));
    std::vector<double> gf(p.size());
    EXPECT_EQ(v, obj.value_and_grad(p, b, gf));
    EXPECT_EQ(g, gf);
}

TEST(AugLagrangian, FeasiblePointLeavesLinearTerm) {
    // nonnegativity is satisfied at positive weights, so C = 0
    const QuadraticObjective obj(RowMatrix::Identity(3, 3), Eigen::Vector3d(1, -1, 2));
    ParamVector p;
    p.add_group("w", {3});
    p.values()[0] = 0.5;
    p.values()[1] = 2.0;
    p.values()[2] = 0.1;
    const ConstraintSet set{ConstraintSpec::nonnegativity("w")};
    const std::vector<double> lambda{1.5, -2.0, 0.25};
    const auto [v, g] = aug_lagrangian_value_grad(obj, set, p, Batch{}, state(lambda, 7.0));
    std::vector<double> gf(3);
    const double f = obj.value_and_grad(p, Batch{}, gf);
    EXPECT_EQ(v, f);
    const auto jt = evaluate(set, p).jacobian_transpose_apply(lambda);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g[i], gf[i] + jt[i]);
}

TEST(AugLagrangian, FiniteDifferences) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    const MlpSpec spec{{3, 4, 3}};
    const MlpObjective obj(spec);
    const ConstraintSet set{ConstraintSpec::l2(), ConstraintSpec::orthogonality("W1"), ConstraintSpec::l1("b2")};
    for (int trial = 0; trial < 20; ++trial) {
        ParamVector p = obj.make_params();
        for (double& x : p.values()) x = nd(rng);
        // keep the L1 terms away from their kink
        for (double& x : p.view_group("b2").flat())
            if (std::abs(x) < 0.05) x = 0.1;
        Batch b;
        b.inputs.resize(6, 3);
        for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = nd(rng);
        b.labels = {0, 1, 2, 0, 1, 2};
        const std::size_t m = set.entry_count(p);
        std::vector<double> lambda(m);
        for (double& l : lambda) l = nd(rng);
        const MultiplierState ms = state(lambda, 0.3);
        const auto [v, g] = aug_lagrangian_value_grad(obj, set, p, b, ms);
        const auto fd = central_differences(
            [&](std::span<const double> x) {
                ParamVector q = p;
                std::copy(x.begin(), x.end(), q.values().begin());
                return aug_lagrangian_value_grad(obj, set, q, b, ms).first;
            },
            p.storage(), 1e-6);
        EXPECT_LT(max_relative_error(g, fd, 1e-7), 1e-5) << "trial " << trial;
    }
}

TEST(MultiplierUpdate, Examples) {
    auto a = state({0}, 2.0);
    multiplier_update(a, std::vector<double>{3});
    EXPECT_EQ(a.lambda, (std::vector<double>{6}));
    EXPECT_EQ(a.penalty, 2.0);

    auto b = state({1, -1}, 0.5, 9.0);
    multiplier_update(b, std::vector<double>{0, 0});
    EXPECT_EQ(b.lambda, (std::vector<double>{1, -1}));
    multiplier_update(b, std::vector<double>{2, 4});
    EXPECT_EQ(b.lambda, (std::vector<double>{2, 1}));
    EXPECT_EQ(b.best_violation, 9.0);

    EXPECT_THROW(multiplier_update(b, std::vector<double>{1}), Error);
}

TEST(SufficientDecrease, Boundary) {
    const auto ms = state({0}, 1.0, 100.0);
    EXPECT_TRUE(sufficient_decrease(ms, std::vector<double>{std::sqrt(89.0)}, 0.9));
    // exact squares so the boundary is not blurred by rounding
    EXPECT_TRUE(sufficient_decrease(ms, std::vector<double>{9.0, 3.0}, 0.9));
    EXPECT_FALSE(sufficient_decrease(ms, std::vector<double>{9.0, 3.0, 1.0}, 0.9));
}

TEST(PenaltyUpdate, Examples) {
    auto ms = state({}, 1.0);
    penalty_update(ms, 10.0, 100.0);
    EXPECT_EQ(ms.penalty, 10.0);
    ms.penalty = 50.0;
    penalty_update(ms, 10.0, 100.0);
    EXPECT_EQ(ms.penalty, 100.0);
    penalty_update(ms, 10.0, 100.0);
    EXPECT_EQ(ms.penalty, 100.0);
}

TEST(SalConfig, Validation) {
    SalConfig c;
    EXPECT_NO_THROW(c.validate());
    c.eta = 1.5;
    EXPECT_THROW(c.validate(), Error);
    c = SalConfig{};
    c.sigma = 1.0;
    EXPECT_THROW(c.validate(), Error);
    c = SalConfig{};
    c.mu_init = 2.0;
    c.mu_max = 1.0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(SalController, PenaltyPathOnRepeatedFailure) {
    SalConfig cfg;
    cfg.mu_init = 0.01;
    cfg.sigma = 3.0;
    cfg.mu_max = 5.0;
    const std::vector<double> c0{1.0};
    for (std::size_t shuffle = 0; shuffle < 4; ++shuffle) {
        SalController ctl(cfg, c0);
        ctl.begin_shuffle(shuffle);
        for (int j = 1; j <= 8; ++j) {
            const auto d = ctl.observe(std::vector<double>{2.0}, [] { return 0.0; });
            EXPECT_EQ(d, SalDecision::Rejected);
            const double expected = std::min(std::pow(3.0, j) * 0.01 * static_cast<double>(shuffle + 1), 5.0);
            EXPECT_NEAR(ctl.state().penalty, expected, 1e-12 * expected);
            EXPECT_EQ(ctl.state().lambda, (std::vector<double>{0.0}));
        }
    }
}

TEST(SalController, AcceptUpdatesLambdaAndBest) {
    SalConfig cfg;
    cfg.mu_init = 0.5;
    cfg.eps_c = 0.0;
    SalController ctl(cfg, std::vector<double>{4.0});
    SalEvent ev;
    const auto d = ctl.observe(std::vector<double>{1.0}, [] { return 1.0; }, &ev);
    EXPECT_EQ(d, SalDecision::Accepted);
    EXPECT_EQ(ctl.state().lambda, (std::vector<double>{0.5}));
    EXPECT_EQ(ctl.state().best_violation, 1.0);
    EXPECT_EQ(ctl.state().penalty, 0.5);
    EXPECT_TRUE(ev.accepted);
    EXPECT_EQ(ev.lambda_change_inf, 0.5);
    EXPECT_EQ(ev.best_before, 16.0);
}

TEST(SalController, TerminatesWhenBothTolerancesHold) {
    SalConfig cfg;
    cfg.eps_f = 1e9;
    SalController ctl(cfg, std::vector<double>{0.0, 0.0});
    int fidelity_calls = 0;
    const auto d = ctl.observe(std::vector<double>{0.0, 0.0}, [&] {
        ++fidelity_calls;
        return 3.0;
    });
    EXPECT_EQ(d, SalDecision::Terminated);
    EXPECT_EQ(fidelity_calls, 1);

    // violation tolerance unmet: fidelity is never evaluated
    SalController other(cfg, std::vector<double>{10.0});
    other.observe(std::vector<double>{1.0}, [&] {
        ++fidelity_calls;
        return 0.0;
    });
    EXPECT_EQ(fidelity_calls, 1);
}

TEST(SalController, ScriptedSequenceInvariants) {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    SalConfig cfg;
    cfg.mu_init = 0.01;
    cfg.mu_max = 0.3;
    cfg.eps_c = 0.0;
    SalController ctl(cfg, std::vector<double>{1.0, 1.0});
    for (std::size_t s = 0; s < 20; ++s) {
        ctl.begin_shuffle(s);
        for (int k = 0; k < 10; ++k) {
            const auto lambda_before = ctl.state().lambda;
            const double pen_before = ctl.state().penalty;
            const std::vector<double> c{u(rng), u(rng)};
            const auto d = ctl.observe(c, [] { return 1.0; });
            const bool lambda_moved = ctl.state().lambda != lambda_before;
            const bool pen_up = ctl.state().penalty > pen_before;
            EXPECT_FALSE(lambda_moved && pen_up);
            if (lambda_moved) {
                EXPECT_EQ(d, SalDecision::Accepted);
            }
            if (pen_up) {
                EXPECT_EQ(d, SalDecision::Rejected);
            }
            EXPECT_LE(ctl.state().penalty, cfg.mu_max);
        }
    }
}
