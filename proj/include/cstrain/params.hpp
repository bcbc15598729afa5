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

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cstrain/error.hpp"
#include "cstrain/linalg.hpp"

namespace cstrain {

struct GroupDesc {
    std::string name;
    std::size_t offset = 0;
    std::vector<std::size_t> shape;

    std::size_t size() const {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
    }
    bool is_matrix() const { return shape.size() == 2; }
    std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
    std::size_t cols() const { return shape.size() == 2 ? shape[1] : 1; }
};

/**
 * Shaped window onto a slice of a ParamVector. Matrix groups are row-major;
 * writes through the view land in the owning flat store.
 */
template <typename T>
class BasicGroupView {
public:
    BasicGroupView(std::span<T> data, const GroupDesc& desc) : data_(data), desc_(&desc) {}

    std::span<T> flat() const { return data_; }
    const GroupDesc& desc() const { return *desc_; }
    std::size_t rows() const { return desc_->rows(); }
    std::size_t cols() const { return desc_->cols(); }
    bool is_matrix() const { return desc_->is_matrix(); }

    T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }
    T& operator[](std::size_t i) const { return data_[i]; }

    auto matrix() const {
        using Map = std::conditional_t<std::is_const_v<T>, ConstMatrixMap, MatrixMap>;
        return Map(data_.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols()));
    }
    auto vector() const {
        using Map = std::conditional_t<std::is_const_v<T>, ConstVectorMap, VectorMap>;
        return Map(data_.data(), static_cast<Eigen::Index>(data_.size()));
    }

private:
    std::span<T> data_;
    const GroupDesc* desc_;
};

using GroupView = BasicGroupView<double>;
using ConstGroupView = BasicGroupView<const double>;

/// Flat parameter store with named, contiguous, shaped groups.
class ParamVector {
public:
    ParamVector() = default;

    /// Appends a zero-initialized group after the existing ones.
    ParamVector& add_group(std::string name, std::vector<std::size_t> shape) {
        require(!shape.empty(), ErrorCode::ShapeError, "group '" + name + "' has empty shape");
        require(shape.size() <= 2, ErrorCode::ShapeError, "group '" + name + "' has rank > 2");
        for (auto d : shape) require(d > 0, ErrorCode::ShapeError, "group '" + name + "' has a zero dimension");
        require(find(name) == nullptr, ErrorCode::InvalidArgument, "duplicate group name '" + name + "'");
        GroupDesc desc{std::move(name), values_.size(), std::move(shape)};
        values_.resize(values_.size() + desc.size(), 0.0);
        groups_.push_back(std::move(desc));
        return *this;
    }

    std::size_t size() const { return values_.size(); }
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& storage() { return values_; }
    const std::vector<double>& storage() const { return values_; }
    const std::vector<GroupDesc>& groups() const { return groups_; }

    const GroupDesc* find(std::string_view name) const {
        for (const auto& g : groups_)
            if (g.name == name) return &g;
        return nullptr;
    }

    const GroupDesc& group(std::string_view name) const {
        const GroupDesc* g = find(name);
        if (g == nullptr) throw Error(ErrorCode::UnknownGroup, "no parameter group named '" + std::string(name) + "'");
        return *g;
    }

    GroupView view_group(std::string_view name) {
        const GroupDesc& g = group(name);
        return GroupView(std::span<double>(values_).subspan(g.offset, g.size()), g);
    }
    ConstGroupView view_group(std::string_view name) const {
        const GroupDesc& g = group(name);
        return ConstGroupView(std::span<const double>(values_).subspan(g.offset, g.size()), g);
    }
    GroupView view_group(const GroupDesc& g) {
        return GroupView(std::span<double>(values_).subspan(g.offset, g.size()), g);
    }
    ConstGroupView view_group(const GroupDesc& g) const {
        return ConstGroupView(std::span<const double>(values_).subspan(g.offset, g.size()), g);
    }

    /// values <- values + alpha * d
    void axpy(double alpha, std::span<const double> d) {
        require(d.size() == values_.size(), ErrorCode::LengthMismatch,
                "axpy direction has length " + std::to_string(d.size()) + ", expected " +
                    std::to_string(values_.size()));
        for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += alpha * d[i];
    }

    /// True when group names and shapes match in order.
    bool same_layout(const ParamVector& other) const {
        if (groups_.size() != other.groups_.size()) return false;
        for (std::size_t i = 0; i < groups_.size(); ++i)
            if (groups_[i].name != other.groups_[i].name || groups_[i].shape != other.groups_[i].shape) return false;
        return true;
    }

private:
    std::vector<double> values_;
    std::vector<GroupDesc> groups_;
};

inline void axpy(ParamVector& p, double alpha, std::span<const double> d) { p.axpy(alpha, d); }

}  // namespace cstrain
