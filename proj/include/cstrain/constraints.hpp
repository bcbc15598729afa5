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
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cstrain/error.hpp"
#include "cstrain/linalg.hpp"
#include "cstrain/params.hpp"

namespace cstrain {

enum class ConstraintKind { L1, L2, Orthogonality, NonNegativity, Affine };

enum class Reduction { Scalar, Elementwise };

inline constexpr const char* kAllGroups = "ALL";

constexpr std::string_view to_string(ConstraintKind k) noexcept {
    switch (k) {
        case ConstraintKind::L1: return "L1";
        case ConstraintKind::L2: return "L2";
        case ConstraintKind::Orthogonality: return "Orthogonality";
        case ConstraintKind::NonNegativity: return "NonNegativity";
        case ConstraintKind::Affine: return "Affine";
    }
    return "?";
}

/**
 * One declarative constraint c(theta) = 0 on a parameter group (or on every
 * group when target is "ALL").
 *
 * The four regularizer kinds are nonnegative penalty forms. Affine, a^T w - b,
 * is kept for equality-constrained test problems and may be negative.
 */
struct ConstraintSpec {
    ConstraintKind kind = ConstraintKind::L2;
    std::string target = kAllGroups;
    std::vector<double> coeffs;  // Affine only, one per element of the target group
    double offset = 0.0;         // Affine only

    Reduction reduction() const {
        return kind == ConstraintKind::NonNegativity ? Reduction::Elementwise : Reduction::Scalar;
    }

    static ConstraintSpec l1(std::string target = kAllGroups) { return {ConstraintKind::L1, std::move(target), {}, 0.0}; }
    static ConstraintSpec l2(std::string target = kAllGroups) { return {ConstraintKind::L2, std::move(target), {}, 0.0}; }
    static ConstraintSpec orthogonality(std::string target) {
        return {ConstraintKind::Orthogonality, std::move(target), {}, 0.0};
    }
    static ConstraintSpec nonnegativity(std::string target = kAllGroups) {
        return {ConstraintKind::NonNegativity, std::move(target), {}, 0.0};
    }
    static ConstraintSpec affine(std::string target, std::vector<double> a, double b) {
        return {ConstraintKind::Affine, std::move(target), std::move(a), b};
    }
};

// ---------------------------------------------------------------------------
// catalog

/// (sum |w_i|, sign(w)) with subgradient 0 at w_i = 0.
inline std::pair<double, std::vector<double>> l1_value_grad(std::span<const double> w) {
    double v = 0.0;
    std::vector<double> g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        v += std::abs(w[i]);
        g[i] = w[i] > 0.0 ? 1.0 : (w[i] < 0.0 ? -1.0 : 0.0);
    }
    return {v, std::move(g)};
}

inline std::pair<double, std::vector<double>> l2_value_grad(std::span<const double> w) {
    double v = 0.0;
    std::vector<double> g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        v += w[i] * w[i];
        g[i] = 2.0 * w[i];
    }
    return {v, std::move(g)};
}

/// (||W^T W - I||_F^2, 4 W (W^T W - I)). The Gram matrix is formed on the smaller side.
inline std::pair<double, RowMatrix> orth_value_grad(const Eigen::Ref<const RowMatrix>& w) {
    const auto r = w.rows();
    const auto c = w.cols();
    if (r < c) {
        const RowMatrix gram = w * w.transpose();  // W W^T, r x r
        const double value = gram.squaredNorm() - 2.0 * w.squaredNorm() + static_cast<double>(c);
        RowMatrix grad = 4.0 * (gram * w - w);
        return {value, std::move(grad)};
    }
    RowMatrix gram = w.transpose() * w;  // W^T W, c x c
    gram.diagonal().array() -= 1.0;
    const double value = gram.squaredNorm();
    RowMatrix grad = 4.0 * (w * gram);
    return {value, std::move(grad)};
}

/// Entries max(0, -w_i); gradient -1 where w_i < 0, else 0.
inline std::pair<std::vector<double>, std::vector<double>> nonneg_value_grad(std::span<const double> w) {
    std::vector<double> e(w.size()), g(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        e[i] = w[i] < 0.0 ? -w[i] : 0.0;
        g[i] = w[i] < 0.0 ? -1.0 : 0.0;
    }
    return {std::move(e), std::move(g)};
}

// ---------------------------------------------------------------------------
// evaluated constraint vector

/**
 * C(theta) with enough gradient information to apply J^T to any vector of
 * multipliers. Scalar blocks hold one dense gradient for one entry;
 * elementwise blocks hold a diagonal Jacobian (one derivative per entry).
 */
class ConstraintValue {
public:
    struct Block {
        std::size_t entry_offset = 0;
        std::size_t param_offset = 0;
        Reduction reduction = Reduction::Scalar;
        std::vector<double> grad;
    };

    std::vector<double> entries;
    std::vector<Block> blocks;
    /// [begin, end) entry range produced by each spec, in declaration order.
    std::vector<std::pair<std::size_t, std::size_t>> spec_ranges;
    std::size_t param_size = 0;

    std::size_t size() const { return entries.size(); }

    double squared_norm() const {
        double s = 0.0;
        for (double e : entries) s += e * e;
        return s;
    }

    std::span<const double> spec_entries(std::size_t spec_index) const {
        const auto [b, e] = spec_ranges.at(spec_index);
        return std::span<const double>(entries).subspan(b, e - b);
    }

    /// out += sum_i v_i * grad c_i(theta)
    void add_jacobian_transpose(std::span<const double> v, std::span<double> out) const {
        require(v.size() == entries.size(), ErrorCode::LengthMismatch, "multiplier vector length must equal m");
        require(out.size() == param_size, ErrorCode::LengthMismatch, "output length must equal parameter count");
        for (const Block& b : blocks) {
            if (b.reduction == Reduction::Scalar) {
                const double s = v[b.entry_offset];
                if (s == 0.0) continue;
                for (std::size_t j = 0; j < b.grad.size(); ++j) out[b.param_offset + j] += s * b.grad[j];
            } else {
                for (std::size_t j = 0; j < b.grad.size(); ++j)
                    out[b.param_offset + j] += v[b.entry_offset + j] * b.grad[j];
            }
        }
    }

    std::vector<double> jacobian_transpose_apply(std::span<const double> v) const {
        std::vector<double> out(param_size, 0.0);
        add_jacobian_transpose(v, out);
        return out;
    }
};

// ---------------------------------------------------------------------------
// constraint set

class ConstraintSet {
public:
    ConstraintSet() = default;
    ConstraintSet(std::initializer_list<ConstraintSpec> specs) : specs_(specs) {}
    explicit ConstraintSet(std::vector<ConstraintSpec> specs) : specs_(std::move(specs)) {}

    const std::vector<ConstraintSpec>& specs() const { return specs_; }
    bool empty() const { return specs_.empty(); }
    void add(ConstraintSpec s) { specs_.push_back(std::move(s)); }

    /// Groups a spec applies to, in parameter order.
    static std::vector<const GroupDesc*> targets(const ConstraintSpec& spec, const ParamVector& theta) {
        std::vector<const GroupDesc*> out;
        if (spec.target == kAllGroups) {
            for (const auto& g : theta.groups()) out.push_back(&g);
        } else {
            out.push_back(&theta.group(spec.target));
        }
        return out;
    }

    /// Distinct groups touched by any spec, in parameter order.
    std::vector<const GroupDesc*> constrained_groups(const ParamVector& theta) const {
        std::vector<bool> hit(theta.groups().size(), false);
        for (const auto& s : specs_)
            for (const GroupDesc* g : targets(s, theta)) hit[static_cast<std::size_t>(g - theta.groups().data())] = true;
        std::vector<const GroupDesc*> out;
        for (std::size_t i = 0; i < hit.size(); ++i)
            if (hit[i]) out.push_back(&theta.groups()[i]);
        return out;
    }

    void validate(const ParamVector& theta) const {
        for (const auto& s : specs_) {
            for (const GroupDesc* g : targets(s, theta)) {
                if (s.kind == ConstraintKind::Orthogonality)
                    require(g->is_matrix(), ErrorCode::ShapeError,
                            "Orthogonality target '" + g->name + "' is not a 2-D group");
                if (s.kind == ConstraintKind::Affine)
                    require(s.coeffs.size() == g->size(), ErrorCode::LengthMismatch,
                            "Affine coefficients do not match group '" + g->name + "'");
            }
        }
    }

    ConstraintValue evaluate(const ParamVector& theta) const {
        validate(theta);
        ConstraintValue out;
        out.param_size = theta.size();
        for (const auto& s : specs_) {
            const std::size_t begin = out.entries.size();
            for (const GroupDesc* g : targets(s, theta)) {
                const auto w = theta.view_group(*g);
                ConstraintValue::Block block;
                block.entry_offset = out.entries.size();
                block.param_offset = g->offset;
                block.reduction = s.reduction();
                switch (s.kind) {
                    case ConstraintKind::L1: {
                        auto [v, grad] = l1_value_grad(w.flat());
                        out.entries.push_back(v);
                        block.grad = std::move(grad);
                        break;
                    }
                    case ConstraintKind::L2: {
                        auto [v, grad] = l2_value_grad(w.flat());
                        out.entries.push_back(v);
                        block.grad = std::move(grad);
                        break;
                    }
                    case ConstraintKind::Orthogonality: {
                        auto [v, grad] = orth_value_grad(w.matrix());
                        out.entries.push_back(v);
                        block.grad.assign(grad.data(), grad.data() + grad.size());
                        break;
                    }
                    case ConstraintKind::NonNegativity: {
                        auto [e, grad] = nonneg_value_grad(w.flat());
                        out.entries.insert(out.entries.end(), e.begin(), e.end());
                        block.grad = std::move(grad);
                        break;
                    }
                    case ConstraintKind::Affine: {
                        double v = -s.offset;
                        for (std::size_t j = 0; j < w.flat().size(); ++j) v += s.coeffs[j] * w.flat()[j];
                        out.entries.push_back(v);
                        block.grad = s.coeffs;
                        break;
                    }
                }
                out.blocks.push_back(std::move(block));
            }
            out.spec_ranges.emplace_back(begin, out.entries.size());
        }
        return out;
    }

    std::size_t entry_count(const ParamVector& theta) const {
        std::size_t m = 0;
        for (const auto& s : specs_)
            for (const GroupDesc* g : targets(s, theta)) m += s.reduction() == Reduction::Scalar ? 1 : g->size();
        return m;
    }

private:
    std::vector<ConstraintSpec> specs_;
};

inline ConstraintValue evaluate(const ConstraintSet& set, const ParamVector& theta) { return set.evaluate(theta); }

// ---------------------------------------------------------------------------
// proximal operators: argmin_mu c(mu) + (rho/2) ||v - mu||^2

struct OrthProxOptions {
    double tolerance = 1e-10;
    std::size_t max_iters = 500;
};

inline double orth_prox_objective(const Eigen::Ref<const RowMatrix>& m, const Eigen::Ref<const RowMatrix>& v,
                                  double rho) {
    return orth_value_grad(m).first + 0.5 * rho * (v - m).squaredNorm();
}

/// Gradient descent with Armijo backtracking from mu = v. `history`, when
/// given, receives the objective before the first step and after every step.
inline RowMatrix orth_prox(const Eigen::Ref<const RowMatrix>& v, double rho, const OrthProxOptions& opt = {},
                           std::vector<double>* history = nullptr) {
    RowMatrix m = v;
    double f = orth_prox_objective(m, v, rho);
    if (history != nullptr) history->push_back(f);
    double step = 1.0 / (rho + 1.0);
    for (std::size_t it = 0; it < opt.max_iters; ++it) {
        RowMatrix grad = orth_value_grad(m).second + rho * (m - v);
        const double gg = grad.squaredNorm();
        if (gg == 0.0) break;
        double f_new = f;
        RowMatrix trial;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            trial = m - step * grad;
            f_new = orth_prox_objective(trial, v, rho);
            if (f_new <= f - 0.5 * step * gg) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        m = std::move(trial);
        const double change = f - f_new;
        f = f_new;
        if (history != nullptr) history->push_back(f);
        if (change < opt.tolerance) break;
        step *= 2.0;
    }
    return m;
}

inline std::vector<double> prox(const ConstraintSpec& spec, const GroupDesc& group, std::span<const double> v,
                                double rho, const OrthProxOptions& orth_opt = {}) {
    require(rho > 0.0, ErrorCode::NonPositiveRho, "prox requires rho > 0");
    require(v.size() == group.size(), ErrorCode::LengthMismatch, "prox input does not match the group size");
    std::vector<double> out(v.begin(), v.end());
    const double t = 1.0 / rho;
    switch (spec.kind) {
        case ConstraintKind::L1:
            for (double& x : out) x = x > t ? x - t : (x < -t ? x + t : 0.0);
            break;
        case ConstraintKind::L2:
            for (double& x : out) x = x / (1.0 + 2.0 / rho);
            break;
        case ConstraintKind::NonNegativity:
            for (double& x : out) {
                if (x >= 0.0) continue;
                x = x < -t ? x + t : 0.0;
            }
            break;
        case ConstraintKind::Orthogonality: {
            require(group.is_matrix(), ErrorCode::ShapeError, "Orthogonality prox needs a 2-D group");
            ConstMatrixMap vm(v.data(), static_cast<Eigen::Index>(group.rows()), static_cast<Eigen::Index>(group.cols()));
            const RowMatrix m = orth_prox(vm, rho, orth_opt);
            out.assign(m.data(), m.data() + m.size());
            break;
        }
        case ConstraintKind::Affine: {
            // hard equality: Euclidean projection onto a^T mu = b
            require(spec.coeffs.size() == v.size(), ErrorCode::LengthMismatch, "Affine coefficients length mismatch");
            double dot = 0.0, aa = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) {
                dot += spec.coeffs[i] * v[i];
                aa += spec.coeffs[i] * spec.coeffs[i];
            }
            if (aa > 0.0) {
                const double s = (dot - spec.offset) / aa;
                for (std::size_t i = 0; i < v.size(); ++i) out[i] -= s * spec.coeffs[i];
            }
            break;
        }
    }
    return out;
}

}  // namespace cstrain
