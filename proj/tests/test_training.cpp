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

#include <cmath>

#include "cstrain/data.hpp"
#include "cstrain/methods/admm.hpp"
#include "cstrain/methods/alm.hpp"
#include "cstrain/methods/fp.hpp"
#include "cstrain/methods/sal.hpp"

using namespace cstrain;

namespace {

ParamVector vec(const std::vector<double>& v) {
    ParamVector p;
    p.add_group("theta", {v.size()});
    std::copy(v.begin(), v.end(), p.values().begin());
    return p;
}

// Quadratic objectives ignore the data; n dummy rows fix the number of batches.
Dataset dummy(std::size_t n) {
    Dataset d;
    d.n_classes = 1;
    d.samples.inputs = RowMatrix::Zero(static_cast<Eigen::Index>(n), 1);
    d.samples.labels.assign(n, 0);
    return d;
}

SolverConfig sgd(double lr, double decay = 1.0) {
    SolverConfig c;
    c.kind = SolverKind::SGD;
    c.lr0 = lr;
    c.decay = decay;
    return c;
}

struct MlpFixture {
    MlpSpec spec{{4, 6, 3}};
    MlpObjective obj{spec};
    Dataset train = [] {
        Dataset d = synth_gaussians(40, 3, 4, 2.0, 3);
        standardize(d);
        return d;
    }();
    ParamVector theta0 = [this] {
        ParamVector p = obj.make_params();
        std::mt19937_64 rng(7);
        init_glorot_uniform(spec, p, rng);
        return p;
    }();
};

void expect_same_rows(const TrainingRecord& a, const TrainingRecord& b, bool same_constraints = true) {
    ASSERT_EQ(a.rows.size(), b.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        EXPECT_EQ(a.rows[i].train_loss, b.rows[i].train_loss) << "row " << i;
        if (same_constraints) {
            EXPECT_EQ(a.rows[i].cv_p, b.rows[i].cv_p) << "row " << i;
        }
        EXPECT_EQ(a.rows[i].accuracy, b.rows[i].accuracy) << "row " << i;
    }
}

}  // namespace

TEST(Fp, ZeroRhoMatchesUnconstrainedTraining) {
    MlpFixture f;
    TrainOptions opt;
    opt.batch_size = 16;
    opt.epochs = 4;
    opt.seed = 99;
    const ConstraintSet l2{ConstraintSpec::l2(), ConstraintSpec::nonnegativity("W2")};
    const auto constrained = fp_train(f.obj, l2, FpConfig{{0.0, 0.0}}, SolverConfig{}, f.train, f.theta0, opt);
    const auto plain = fp_train(f.obj, ConstraintSet{}, FpConfig{}, SolverConfig{}, f.train, f.theta0, opt);
    EXPECT_EQ(constrained.theta.storage(), plain.theta.storage());
    expect_same_rows(constrained, plain, /*same_constraints=*/false);
}

TEST(Fp, StationaryPointOfQuarticPenalty) {
    // F = 1/2 ||theta - b||^2 with L2 constraint: F + rho (||theta||^2)^2
    const Eigen::Vector3d b(1.0, 2.0, -1.0);
    const double rho = 0.1;
    const QuadraticObjective obj(RowMatrix::Identity(3, 3), b);
    TrainOptions opt;
    opt.batch_size = 1;
    opt.epochs = 4000;
    const auto rec =
        fp_train(obj, ConstraintSet{ConstraintSpec::l2("theta")}, FpConfig{{rho}}, sgd(0.05), dummy(1), vec({0, 0, 0}), opt);
    const Eigen::Map<const Eigen::Vector3d> t(rec.theta.values().data());
    const Eigen::Vector3d grad = (t - b) + 4.0 * rho * t.squaredNorm() * t;
    EXPECT_LT(grad.norm(), 1e-6);
}

TEST(Fp, HugePenaltyEnforcesNonNegativity) {
    const QuadraticObjective obj(RowMatrix::Identity(3, 3), Eigen::Vector3d(-1.0, 0.5, -2.0));
    SolverConfig adam;
    adam.lr0 = 1e-2;
    adam.decay = 0.99;
    TrainOptions opt;
    opt.batch_size = 1;
    opt.epochs = 1500;
    const auto rec = fp_train(obj, ConstraintSet{ConstraintSpec::nonnegativity("theta")}, FpConfig{{1e6}}, adam,
                              dummy(1), vec({0.3, 0.3, 0.3}), opt);
    EXPECT_EQ(rec.termination, Termination::Completed);
    for (double x : rec.theta.values()) EXPECT_GE(x, -1e-3);
}

TEST(Fp, DivergenceIsRecorded) {
    const QuadraticObjective obj(RowMatrix::Identity(2, 2), Eigen::Vector2d(-1.0, 1.0));
    TrainOptions opt;
    opt.batch_size = 1;
    opt.epochs = 200;
    const auto rec = fp_train(obj, ConstraintSet{ConstraintSpec::l2("theta")}, FpConfig{{1e9}}, sgd(0.1), dummy(1),
                              vec({0.5, 0.5}), opt);
    EXPECT_EQ(rec.termination, Termination::NonFinite);
    EXPECT_FALSE(rec.message.empty());
}

TEST(Sal, EpochZeroRowIsRelativeOne) {
    MlpFixture f;
    SalConfig cfg;
    cfg.n_batch = 16;
    cfg.n_shuffle = 2;
    const ConstraintSet set{ConstraintSpec::l2()};
    const auto rec = sal_train(f.obj, set, cfg, SolverConfig{}, f.train, f.theta0, TrainOptions{});
    ASSERT_EQ(rec.rows.size(), 3u);
    EXPECT_EQ(rec.rows[0].cv_rel.value(), 1.0);
    EXPECT_EQ(rec.rows[0].epoch, 0u);
    EXPECT_EQ(rec.sal_events.size(), 2u * cfg.n_aug_lag);
}

TEST(Sal, PenaltyPathUnderPersistentFailure) {
    // a vanishing learning rate keeps C essentially fixed, so no test ever passes
    const QuadraticObjective obj(RowMatrix::Identity(2, 2), Eigen::Vector2d(3.0, 4.0));
    SalConfig cfg;
    cfg.eta = 0.5;
    cfg.mu_init = 0.01;
    cfg.sigma = 2.0;
    cfg.mu_max = 0.5;
    cfg.n_batch = 1;
    cfg.n_shuffle = 3;
    cfg.n_aug_lag = 8;
    const auto rec = sal_train(obj, ConstraintSet{ConstraintSpec::l2("theta")}, cfg, sgd(1e-12), dummy(16),
                               vec({1.0, 1.0}), TrainOptions{});
    ASSERT_EQ(rec.sal_events.size(), 24u);
    for (const SalEvent& ev : rec.sal_events) {
        EXPECT_FALSE(ev.accepted);
        const double j = static_cast<double>(ev.iteration + 1);
        const double expected =
            std::min(std::pow(cfg.sigma, j) * cfg.mu_init * static_cast<double>(ev.shuffle + 1), cfg.mu_max);
        EXPECT_NEAR(ev.penalty_after, expected, 1e-12);
    }
}

TEST(Sal, TerminatesAtFirstCheckWhenAlwaysFeasible) {
    const QuadraticObjective obj(RowMatrix::Identity(2, 2), Eigen::Vector2d(5.0, 6.0));
    SalConfig cfg;
    cfg.eps_f = 1e9;
    cfg.n_batch = 1;
    const auto rec = sal_train(obj, ConstraintSet{ConstraintSpec::nonnegativity("theta")}, cfg, sgd(0.01), dummy(8),
                               vec({1.0, 2.0}), TrainOptions{});
    EXPECT_EQ(rec.termination, Termination::Converged);
    ASSERT_EQ(rec.sal_events.size(), 1u);
    EXPECT_TRUE(rec.sal_events[0].terminated);
    EXPECT_EQ(rec.rows.size(), 2u);
}

TEST(Sal, DeterministicLimitMatchesAlm) {
    const Eigen::Vector3d a(1.0, 2.0, 3.0);
    const QuadraticObjective obj(RowMatrix::Identity(3, 3), a);
    const ConstraintSet set{ConstraintSpec::affine("theta", {1, 1, 1}, 1.0)};
    const auto alm = alm_solve(obj, Batch{}, set, vec({0, 0, 0}));

    SalConfig cfg;
    cfg.eta = 0.5;
    cfg.eps_c = 0.0;
    cfg.mu_init = 1.0;
    cfg.mu_max = 10.0;
    cfg.n_batch = 1;
    cfg.n_shuffle = 100;
    cfg.n_aug_lag = 4;
    const auto rec = sal_train(obj, set, cfg, sgd(0.03), dummy(256), vec({0, 0, 0}), TrainOptions{});
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(rec.theta.values()[i], alm.theta.values()[i], 1e-3);
}

TEST(Sal, FrozenMultipliersEqualFixedPenalty) {
    MlpFixture f;
    SalConfig cfg;
    cfg.adapt = false;
    cfg.mu_init = 0.04;
    cfg.n_batch = 16;
    cfg.n_shuffle = 3;
    const ConstraintSet set{ConstraintSpec::l2(), ConstraintSpec::orthogonality("W1")};
    TrainOptions opt;
    opt.batch_size = cfg.n_batch;
    opt.epochs = cfg.n_shuffle;
    opt.seed = 5;
    const auto sal = sal_train(f.obj, set, cfg, SolverConfig{}, f.train, f.theta0, opt);
    const auto fp = fp_train(f.obj, set, FpConfig{{cfg.mu_init / 2, cfg.mu_init / 2}}, SolverConfig{}, f.train,
                             f.theta0, opt);
    EXPECT_EQ(sal.theta.storage(), fp.theta.storage());
    expect_same_rows(sal, fp);
}

TEST(Sal, EventInvariants) {
    MlpFixture f;
    SalConfig cfg;
    cfg.n_batch = 8;
    cfg.n_shuffle = 6;
    cfg.mu_init = 0.05;
    cfg.mu_max = 0.4;
    cfg.eta = 0.95;
    const ConstraintSet set{ConstraintSpec::l2(), ConstraintSpec::nonnegativity("W2")};
    const auto rec = sal_train(f.obj, set, cfg, SolverConfig{}, f.train, f.theta0, TrainOptions{});
    std::size_t accepted = 0, rejected = 0;
    for (const SalEvent& ev : rec.sal_events) {
        const bool lambda_moved = ev.lambda_change_inf > 0.0;
        const bool penalty_up = ev.penalty_after > ev.penalty_before;
        EXPECT_FALSE(lambda_moved && penalty_up);
        if (lambda_moved) {
            EXPECT_TRUE(ev.accepted);
        }
        if (penalty_up) {
            EXPECT_FALSE(ev.accepted);
        }
        EXPECT_LE(ev.penalty_after, cfg.mu_max);
        accepted += ev.accepted ? 1 : 0;
        rejected += ev.accepted ? 0 : 1;
    }
    EXPECT_GT(accepted, 0u);
    EXPECT_GT(rejected, 0u);
    for (const EpochRow& r : rec.rows) EXPECT_LE(r.penalty, cfg.mu_max);
}

TEST(Methods, RunToRunDeterminism) {
    MlpFixture f;
    const ConstraintSet set{ConstraintSpec::l1(), ConstraintSpec::orthogonality("W1")};
    TrainOptions opt;
    opt.batch_size = 16;
    opt.epochs = 3;
    opt.seed = 1234;
    SalConfig sal;
    sal.n_batch = 16;
    sal.n_shuffle = 3;
    const auto s1 = sal_train(f.obj, set, sal, SolverConfig{}, f.train, f.theta0, opt);
    const auto s2 = sal_train(f.obj, set, sal, SolverConfig{}, f.train, f.theta0, opt);
    EXPECT_EQ(s1.theta.storage(), s2.theta.storage());
    expect_same_rows(s1, s2);
    const auto a1 = sadmm_train(f.obj, set, SadmmConfig{}, f.train, f.theta0, opt);
    const auto a2 = sadmm_train(f.obj, set, SadmmConfig{}, f.train, f.theta0, opt);
    EXPECT_EQ(a1.theta.storage(), a2.theta.storage());
    const auto p1 = fp_train(f.obj, set, FpConfig{{0.01, 0.01}}, SolverConfig{}, f.train, f.theta0, opt);
    const auto p2 = fp_train(f.obj, set, FpConfig{{0.01, 0.01}}, SolverConfig{}, f.train, f.theta0, opt);
    EXPECT_EQ(p1.theta.storage(), p2.theta.storage());
}

TEST(Methods, ZeroGradientAndZeroViolationLeaveThetaUnchanged) {
    const QuadraticObjective obj(RowMatrix::Zero(3, 3), Eigen::Vector3d::Zero());
    const ConstraintSet set{ConstraintSpec::nonnegativity("theta")};
    const std::vector<double> start{1.0, 2.0, 3.0};
    const Dataset data = dummy(4);
    TrainOptions opt;
    opt.batch_size = 2;
    opt.epochs = 3;

    EXPECT_EQ(fp_train(obj, set, FpConfig{{0.1}}, SolverConfig{}, data, vec(start), opt).theta.storage(), start);
    SalConfig sal;
    sal.n_batch = 2;
    sal.n_shuffle = 3;
    EXPECT_EQ(sal_train(obj, set, sal, SolverConfig{}, data, vec(start), opt).theta.storage(), start);
    EXPECT_EQ(sadmm_train(obj, set, SadmmConfig{}, data, vec(start), opt).theta.storage(), start);
    EXPECT_EQ(alm_solve(obj, data.samples, set, vec(start)).theta.storage(), start);
    EXPECT_EQ(admm_solve(obj, data.samples, set, vec(start)).theta.storage(), start);
}
