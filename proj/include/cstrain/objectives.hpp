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
#include <concepts>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cstrain/error.hpp"
#include "cstrain/linalg.hpp"
#include "cstrain/params.hpp"

namespace cstrain {

/// Rows of normalized features with one class label per row.
struct Batch {
    RowMatrix inputs;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
};

/**
 * Differentiable data-fidelity term F(theta; batch).
 *
 * value_and_grad writes the gradient into `grad` (overwriting it) and returns
 * the loss. predict returns one class index per batch row.
 */
template <typename O>
concept Objective = requires(const O& o, const ParamVector& p, const Batch& b, std::span<double> g) {
    { o.value_and_grad(p, b, g) } -> std::convertible_to<double>;
    { o.value(p, b) } -> std::convertible_to<double>;
    { o.predict(p, b) } -> std::convertible_to<std::vector<int>>;
};

/// F(theta) = 1/2 ||A theta - b||^2. Ignores batch contents.
class QuadraticObjective {
public:
    QuadraticObjective(RowMatrix a, Eigen::VectorXd b) : a_(std::move(a)), b_(std::move(b)) {
        require(a_.rows() == b_.size(), ErrorCode::DimensionMismatch, "A rows must match b length");
    }

    static QuadraticObjective identity_shift(std::span<const double> target) {
        const auto n = static_cast<Eigen::Index>(target.size());
        return {RowMatrix::Identity(n, n), ConstVectorMap(target.data(), n)};
    }

    std::size_t dim() const { return static_cast<std::size_t>(a_.cols()); }

    double value_and_grad(const ParamVector& theta, const Batch&, std::span<double> grad) const {
        check(theta, grad.size());
        ConstVectorMap t(theta.values().data(), a_.cols());
        const Eigen::VectorXd r = a_ * t - b_;
        VectorMap(grad.data(), a_.cols()) = a_.transpose() * r;
        return 0.5 * r.squaredNorm();
    }

    double value(const ParamVector& theta, const Batch&) const {
        check(theta, theta.size());
        ConstVectorMap t(theta.values().data(), a_.cols());
        return 0.5 * (a_ * t - b_).squaredNorm();
    }

    std::vector<int> predict(const ParamVector&, const Batch& batch) const {
        return std::vector<int>(batch.size(), 0);
    }

private:
    void check(const ParamVector& theta, std::size_t grad_len) const {
        require(a_.rows() == a_.cols(), ErrorCode::DimensionMismatch, "A must be square");
        require(theta.size() == static_cast<std::size_t>(a_.cols()), ErrorCode::DimensionMismatch,
                "theta length does not match A");
        require(grad_len == theta.size(), ErrorCode::DimensionMismatch, "gradient buffer length mismatch");
    }

    RowMatrix a_;
    Eigen::VectorXd b_;
};

/// Free-function form: (1/2 ||A theta - b||^2, A^T (A theta - b)).
inline std::pair<double, std::vector<double>> quadratic_value_grad(const ParamVector& theta, const RowMatrix& a,
                                                                   const Eigen::VectorXd& b) {
    require(a.rows() == a.cols() && a.rows() == b.size(), ErrorCode::DimensionMismatch, "A must be n x n, b length n");
    std::vector<double> grad(theta.size());
    const double v = QuadraticObjective(a, b).value_and_grad(theta, Batch{}, grad);
    return {v, std::move(grad)};
}

struct MlpSpec {
    std::vector<std::size_t> layer_widths;  // d_in, hidden..., K

    std::size_t layers() const { return layer_widths.size() - 1; }
    std::size_t classes() const { return layer_widths.back(); }

    void validate() const {
        require(layer_widths.size() >= 2, ErrorCode::InvalidArgument, "MLP needs at least input and output widths");
        for (auto w : layer_widths) require(w > 0, ErrorCode::InvalidArgument, "MLP widths must be positive");
    }
};

inline std::string weight_group_name(std::size_t layer) { return "W" + std::to_string(layer + 1); }
inline std::string bias_group_name(std::size_t layer) { return "b" + std::to_string(layer + 1); }

/// Parameter layout W1, b1, W2, b2, ... with W_l stored as [fan_out, fan_in].
inline ParamVector make_mlp_params(const MlpSpec& spec) {
    spec.validate();
    ParamVector p;
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        p.add_group(weight_group_name(l), {spec.layer_widths[l + 1], spec.layer_widths[l]});
        p.add_group(bias_group_name(l), {spec.layer_widths[l + 1]});
    }
    return p;
}

/// Glorot-uniform weights, zero biases.
inline void init_glorot_uniform(const MlpSpec& spec, ParamVector& p, std::mt19937_64& rng) {
    for (std::size_t l = 0; l < spec.layers(); ++l) {
        const double fan_in = static_cast<double>(spec.layer_widths[l]);
        const double fan_out = static_cast<double>(spec.layer_widths[l + 1]);
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (double& w : p.view_group(weight_group_name(l)).flat()) w = dist(rng);
        for (double& b : p.view_group(bias_group_name(l)).flat()) b = 0.0;
    }
}

/// ReLU multilayer perceptron with softmax cross-entropy output.
class MlpObjective {
public:
    explicit MlpObjective(MlpSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

    const MlpSpec& spec() const { return spec_; }

    ParamVector make_params() const { return make_mlp_params(spec_); }

    double value_and_grad(const ParamVector& theta, const Batch& batch, std::span<double> grad) const {
        require(grad.size() == theta.size(), ErrorCode::ShapeMismatch, "gradient buffer length mismatch");
        const std::size_t n_layers = spec_.layers();
        std::vector<RowMatrix> acts;  // acts[l] is the input to layer l
        acts.reserve(n_layers + 1);
        const double loss = forward(theta, batch, &acts);

        const auto n = static_cast<Eigen::Index>(batch.size());
        RowMatrix delta = softmax(acts.back());
        for (Eigen::Index i = 0; i < n; ++i) delta(i, batch.labels[static_cast<std::size_t>(i)]) -= 1.0;
        delta /= static_cast<double>(n);

        for (std::size_t l = n_layers; l-- > 0;) {
            const GroupDesc& wg = theta.group(weight_group_name(l));
            const GroupDesc& bg = theta.group(bias_group_name(l));
            MatrixMap gw(grad.data() + wg.offset, static_cast<Eigen::Index>(wg.rows()), static_cast<Eigen::Index>(wg.cols()));
            VectorMap gb(grad.data() + bg.offset, static_cast<Eigen::Index>(bg.size()));
            gw.noalias() = delta.transpose() * acts[l];
            gb = delta.colwise().sum().transpose();
            if (l > 0) {
                RowMatrix back = delta * theta.view_group(wg).matrix();
                // acts[l] holds relu(z); its positive entries mark the active units
                delta = back.cwiseProduct((acts[l].array() > 0.0).cast<double>().matrix());
            }
        }
        return loss;
    }

    double value(const ParamVector& theta, const Batch& batch) const { return forward(theta, batch, nullptr); }

    RowMatrix logits(const ParamVector& theta, const Batch& batch) const {
        std::vector<RowMatrix> acts;
        forward(theta, batch, &acts, /*with_loss=*/false);
        return std::move(acts.back());
    }

    std::vector<int> predict(const ParamVector& theta, const Batch& batch) const {
        const RowMatrix z = logits(theta, batch);
        std::vector<int> out(batch.size());
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            Eigen::Index arg = 0;
            z.row(i).maxCoeff(&arg);
            out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
        }
        return out;
    }

    static RowMatrix softmax(const RowMatrix& z) {
        RowMatrix p = z;
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            p.row(i).array() -= p.row(i).maxCoeff();
            p.row(i) = p.row(i).array().exp().matrix();
            p.row(i) /= p.row(i).sum();
        }
        return p;
    }

private:
    // Fills acts with the input of every layer followed by the final logits.
    double forward(const ParamVector& theta, const Batch& batch, std::vector<RowMatrix>* acts,
                   bool with_loss = true) const {
        const std::size_t n_layers = spec_.layers();
        require(batch.inputs.rows() == static_cast<Eigen::Index>(batch.size()), ErrorCode::ShapeMismatch,
                "batch inputs and labels disagree in length");
        require(batch.inputs.cols() == static_cast<Eigen::Index>(spec_.layer_widths.front()), ErrorCode::ShapeMismatch,
                "batch feature width does not match the MLP input width");
        require(batch.size() > 0, ErrorCode::EmptyInput, "empty batch");
        for (std::size_t l = 0; l < n_layers; ++l) {
            const GroupDesc& wg = theta.group(weight_group_name(l));
            const GroupDesc& bg = theta.group(bias_group_name(l));
            require(wg.rows() == spec_.layer_widths[l + 1] && wg.cols() == spec_.layer_widths[l] && wg.is_matrix() &&
                        bg.size() == spec_.layer_widths[l + 1],
                    ErrorCode::ShapeMismatch, "parameter groups do not match the MLP layer shapes");
        }
        for (int y : batch.labels)
            require(y >= 0 && static_cast<std::size_t>(y) < spec_.classes(), ErrorCode::InvalidArgument,
                    "label " + std::to_string(y) + " outside [0, K)");

        RowMatrix a = batch.inputs;
        for (std::size_t l = 0; l < n_layers; ++l) {
            const auto w = theta.view_group(weight_group_name(l)).matrix();
            const auto b = theta.view_group(bias_group_name(l)).vector();
            RowMatrix z = a * w.transpose();
            z.rowwise() += b.transpose();
            if (l + 1 < n_layers) z = z.cwiseMax(0.0);
            if (acts != nullptr) acts->push_back(std::move(a));
            a = std::move(z);
        }
        double loss = 0.0;
        if (with_loss) {
            for (Eigen::Index i = 0; i < a.rows(); ++i) {
                const double m = a.row(i).maxCoeff();
                const double lse = m + std::log((a.row(i).array() - m).exp().sum());
                loss += lse - a(i, batch.labels[static_cast<std::size_t>(i)]);
            }
            loss /= static_cast<double>(batch.size());
            if (!std::isfinite(loss)) throw Error(ErrorCode::NonFiniteLoss, "cross-entropy is not finite");
        }
        if (acts != nullptr) acts->push_back(std::move(a));
        return loss;
    }

    MlpSpec spec_;
};

inline std::pair<double, std::vector<double>> mlp_value_grad(const MlpSpec& spec, const ParamVector& theta,
                                                             const Batch& batch) {
    std::vector<double> grad(theta.size());
    const double v = MlpObjective(spec).value_and_grad(theta, batch, grad);
    return {v, std::move(grad)};
}

}  // namespace cstrain
