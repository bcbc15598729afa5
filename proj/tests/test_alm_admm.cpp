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

using namespace cstrain;

namespace {

ParamVector vec(const std::vector<double>& v) {
    ParamVector p;
    p.add_group("theta", {v.size()});
    std::copy(v.begin(), v.end(), p.values().begin());
    return p;
}

Eigen::VectorXd eig(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }

// min 1/2 ||theta - a||^2 s.t. sum(theta) = 1 has theta* = a - ((sum a - 1) / n) 1
std::vector<double> projection_oracle(const std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s += x;
    std::vector<double> out(a);
    for (double& x : out) x -= (s - 1.0) / static_cast<double>(a.size());
    return out;
}

const ConstraintSet kSumToOne{ConstraintSpec::affine("theta", {1, 1, 1}, 1.0)};

}  // namespace

TEST(Alm, EqualityConstrainedProjection) {
    const std::vector<double> a{1, 2, 3};
    const QuadraticObjective obj(RowMatrix::Identity(3, 3), eig(a));
    const auto res = alm_solve(obj, Batch{}, kSumToOne, vec({0, 0, 0}));
    const auto oracle = projection_oracle(a);
    EXPECT_NEAR(oracle[0], -2.0 / 3.0, 1e-15);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(res.theta.values()[i], oracle[i], 1e-6);
    EXPECT_LT(kkt_stationarity(obj, kSumToOne, res.theta, Batch{}, res.lambda), 1e-4);
    EXPECT_TRUE(res.converged);
    // lambda* = (sum a - 1) / n with this sign convention
    EXPECT_NEAR(res.lambda[0], 5.0 / 3.0, 1e-5);
}

TEST(Alm, FeasibleUnconstrainedMinimizerIsIterationZero) {
    const std::vector<double> a{0.2, 0.3, 0.5};
    const QuadraticObjective obj(RowMatrix::Identity(3, 3), eig(a));
    const auto res = alm_solve(obj, Batch{}, kSumToOne, vec(a));
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.outer_iterations, 0u);
    EXPECT_EQ(res.lambda, (std::vector<double>{0.0}));
    EXPECT_EQ(res.theta.storage(), a);
}

TEST(Alm, RandomProjectionsMatchClosedForm) {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> nd(0.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> a{nd(rng), nd(rng), nd(rng)};
        const QuadraticObjective obj(RowMatrix::Identity(3, 3), eig(a));
        AlmConfig cfg;
        cfg.rho = 0.5 + trial;
        const auto res = alm_solve(obj, Batch{}, kSumToOne, vec({nd(rng), nd(rng), nd(rng)}), cfg);
        const auto oracle = projection_oracle(a);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(res.theta.values()[i], oracle[i], 1e-6);
    }
}

TEST(Admm, LassoSoftThreshold) {
    const QuadraticObjective obj(RowMatrix::Identity(2, 2), Eigen::Vector2d(2.0, -0.1));
    const ConstraintSet set{ConstraintSpec::l1("theta")};
    const auto res = admm_solve(obj, Batch{}, set, vec({0, 0}));
    EXPECT_NEAR(res.theta.values()[0], 1.0, 1e-4);
    EXPECT_NEAR(res.theta.values()[1], 0.0, 1e-4);
    EXPECT_LT(res.primal_residual, 1e-4);
}

TEST(Admm, ScaledDualRuleAlsoSolvesLasso) {
    const QuadraticObjective obj(RowMatrix::Identity(2, 2), Eigen::Vector2d(2.0, -0.1));
    const ConstraintSet set{ConstraintSpec::l1("theta")};
    AdmmConfig cfg;
    cfg.rho = 3.0;
    cfg.dual_rule = DualRule::Scaled;
    const auto res = admm_solve(obj, Batch{}, set, vec({0, 0}), cfg);
    EXPECT_NEAR(res.theta.values()[0], 1.0, 1e-4);
    EXPECT_NEAR(res.theta.values()[1], 0.0, 1e-4);
}

TEST(Admm, FixedPointWhenAlreadyOptimal) {
    const QuadraticObjective obj(RowMatrix::Identity(2, 2), Eigen::Vector2d(0.5, 2.0));
    const ConstraintSet set{ConstraintSpec::nonnegativity("theta")};
    AdmmConfig cfg;
    cfg.outer_iters = 5;
    const auto res = admm_solve(obj, Batch{}, set, vec({0.5, 2.0}), cfg);
    EXPECT_EQ(res.theta.storage(), (std::vector<double>{0.5, 2.0}));
    EXPECT_EQ(res.state.u[0], (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(res.iterations, 1u);
}

TEST(Admm, AgreesWithAlmOnEqualityQuadratic) {
    const std::vector<double> a{1, 2, 3};
    const QuadraticObjective obj(RowMatrix::Identity(3, 3), eig(a));
    const auto alm = alm_solve(obj, Batch{}, kSumToOne, vec({0, 0, 0}));
    const auto admm = admm_solve(obj, Batch{}, kSumToOne, vec({0, 0, 0}));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(admm.theta.values()[i], alm.theta.values()[i], 1e-4);
}

TEST(Sadmm, ThetaStepFormula) {
    EXPECT_DOUBLE_EQ(sadmm_theta_step(1.0, 0.0, 0.0, 0.0, 1.0, 1.0), 0.5);
    // stationary when grad F = 0, u = 0, mu = theta
    for (double t : {-3.0, 0.0, 0.7})
        for (double eta : {1e-3, 0.5, 4.0}) EXPECT_NEAR(sadmm_theta_step(t, t, 0.0, 0.0, eta, 2.0), t, 1e-15);
}

TEST(Sadmm, StepSchedule) {
    SadmmConfig cfg;
    cfg.eta0 = 0.3;
    EXPECT_DOUBLE_EQ(cfg.step_size(0), 0.3);
    EXPECT_DOUBLE_EQ(cfg.step_size(3), 0.15);
}

TEST(Sadmm, LassoWithFullBatchGradients) {
    const QuadraticObjective obj(RowMatrix::Identity(2, 2), Eigen::Vector2d(2.0, -0.1));
    const ConstraintSet set{ConstraintSpec::l1("theta")};
    Dataset one;
    one.n_classes = 1;
    one.samples.inputs = RowMatrix::Zero(1, 1);
    one.samples.labels = {0};
    SadmmConfig cfg;
    cfg.rho = 1.0;
    cfg.eta0 = 1.0;
    TrainOptions opt;
    opt.batch_size = 1;
    opt.epochs = 5000;
    const auto rec = sadmm_train(obj, set, cfg, one, vec({0, 0}), opt);
    EXPECT_NEAR(rec.theta.values()[0], 1.0, 1e-2);
    EXPECT_NEAR(rec.theta.values()[1], 0.0, 1e-2);
}
