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
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "cstrain/error.hpp"
#include "cstrain/params.hpp"

namespace cstrain {

enum class SolverKind { SGD, Adam };

struct SolverConfig {
    SolverKind kind = SolverKind::Adam;
    double lr0 = 1e-3;
    double decay = 1.0;  // multiplicative, applied once per epoch
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        require(lr0 > 0.0, ErrorCode::InvalidArgument, "lr0 must be positive");
        require(decay > 0.0 && decay <= 1.0, ErrorCode::InvalidArgument, "decay must be in (0, 1]");
        require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, ErrorCode::InvalidArgument,
                "Adam betas must be in [0, 1)");
    }
};

/// Inner stochastic optimizer. Learning-rate decay can be reset without
/// touching the Adam moments.
class SolverState {
public:
    SolverState(SolverConfig cfg, std::size_t n_params) : cfg_(cfg), lr_(cfg.lr0) {
        cfg_.validate();
        if (cfg_.kind == SolverKind::Adam) {
            m_.assign(n_params, 0.0);
            v_.assign(n_params, 0.0);
        }
    }

    const SolverConfig& config() const { return cfg_; }
    double lr() const { return lr_; }
    std::size_t steps() const { return steps_; }
    std::size_t epochs_since_reset() const { return epochs_since_reset_; }
    const std::vector<double>& first_moment() const { return m_; }
    const std::vector<double>& second_moment() const { return v_; }

    void step(std::span<double> theta, std::span<const double> grad) {
        require(grad.size() == theta.size(), ErrorCode::LengthMismatch, "gradient length must match theta");
        ++steps_;
        if (cfg_.kind == SolverKind::SGD) {
            for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr_ * grad[i];
            return;
        }
        require(m_.size() == theta.size(), ErrorCode::LengthMismatch, "Adam moments do not match theta");
        const double t = static_cast<double>(steps_);
        const double c1 = 1.0 - std::pow(cfg_.beta1, t);
        const double c2 = 1.0 - std::pow(cfg_.beta2, t);
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
            v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
            const double mh = m_[i] / c1;
            const double vh = v_[i] / c2;
            theta[i] -= lr_ * mh / (std::sqrt(vh) + cfg_.epsilon);
        }
    }

    void step(ParamVector& theta, std::span<const double> grad) { step(theta.values(), grad); }

    void end_epoch() {
        ++epochs_since_reset_;
        lr_ = cfg_.lr0 * std::pow(cfg_.decay, static_cast<double>(epochs_since_reset_));
    }

    void reset_lr() {
        lr_ = cfg_.lr0;
        epochs_since_reset_ = 0;
    }

private:
    SolverConfig cfg_;
    double lr_;
    std::size_t steps_ = 0;
    std::size_t epochs_since_reset_ = 0;
    std::vector<double> m_, v_;
};

inline void step(SolverState& s, ParamVector& theta, std::span<const double> grad) { s.step(theta, grad); }
inline void reset_lr(SolverState& s) { s.reset_lr(); }

// ---------------------------------------------------------------------------
// deterministic inner minimization

struct MinimizeOptions {
    double grad_tolerance = 1e-8;
    std::size_t max_iters = 20000;
};

struct MinimizeResult {
    std::size_t iterations = 0;
    double grad_norm = 0.0;
    double value = 0.0;
    bool converged = false;
};

/// value_and_grad(x, grad) -> f(x), writing grad.
using SmoothFunction = std::function<double(std::span<const double>, std::span<double>)>;

/**
 * Full-batch gradient descent with Barzilai-Borwein trial steps and Armijo
 * backtracking. Throws InnerSolveDiverged on a non-finite value.
 */
inline MinimizeResult minimize(const SmoothFunction& f, std::span<double> x, const MinimizeOptions& opt = {}) {
    const std::size_t n = x.size();
    std::vector<double> g(n), g_new(n), x_new(n);
    MinimizeResult res;
    double fx = f(x, g);
    auto norm = [](std::span<const double> v) {
        double s = 0.0;
        for (double e : v) s += e * e;
        return std::sqrt(s);
    };
    auto check_finite = [](double v) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InnerSolveDiverged, "objective became non-finite");
    };
    check_finite(fx);
    double step = 1.0;
    for (; res.iterations < opt.max_iters; ++res.iterations) {
        const double gn = norm(g);
        if (gn < opt.grad_tolerance) {
            res.converged = true;
            break;
        }
        double f_new = 0.0;
        bool accepted = false;
        for (int bt = 0; bt < 80; ++bt) {
            for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] - step * g[i];
            f_new = f(x_new, g_new);
            if (!std::isfinite(f_new)) {
                step *= 0.5;
                continue;
            }
            // near the optimum the Armijo decrease drops below rounding; fall back to gradient decrease
            const bool armijo = f_new <= fx - 1e-4 * step * gn * gn;
            const bool flat = std::abs(f_new - fx) <= 1e-13 * std::max(1.0, std::abs(fx)) && norm(g_new) < gn;
            if (armijo || flat) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        // Barzilai-Borwein step for the next iteration
        double sy = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = x_new[i] - x[i];
            const double y = g_new[i] - g[i];
            sy += s * y;
            ss += s * s;
        }
        std::copy(x_new.begin(), x_new.end(), x.begin());
        std::swap(g, g_new);
        fx = f_new;
        check_finite(fx);
        step = sy > 0.0 ? ss / sy : step * 2.0;
    }
    res.grad_norm = norm(g);
    res.value = fx;
    if (!res.converged) res.converged = res.grad_norm < opt.grad_tolerance;
    return res;
}

}  // namespace cstrain
