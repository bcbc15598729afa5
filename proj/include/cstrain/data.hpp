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
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cstrain/error.hpp"
#include "cstrain/linalg.hpp"
#include "cstrain/objectives.hpp"

namespace cstrain {

struct Dataset {
    Batch samples;  // features n x d, labels in [0, n_classes)
    int n_classes = 0;

    std::size_t size() const { return samples.size(); }
    std::size_t dims() const { return static_cast<std::size_t>(samples.inputs.cols()); }

    void validate() const {
        require(samples.inputs.rows() == static_cast<Eigen::Index>(samples.labels.size()), ErrorCode::CountMismatch,
                "feature rows and labels differ in count");
        for (int y : samples.labels)
            require(y >= 0 && y < n_classes, ErrorCode::InvalidArgument, "label outside [0, K)");
        require(samples.inputs.allFinite(), ErrorCode::InvalidArgument, "features must be finite");
    }

    Dataset head(std::size_t n) const {
        n = std::min(n, size());
        Dataset out;
        out.n_classes = n_classes;
        out.samples.inputs = samples.inputs.topRows(static_cast<Eigen::Index>(n));
        out.samples.labels.assign(samples.labels.begin(), samples.labels.begin() + static_cast<std::ptrdiff_t>(n));
        return out;
    }
};

// ---------------------------------------------------------------------------
// normalization

/// Per-feature standardization; fit on training data, apply to any split.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd stdev;
    double floor = 1e-8;

    static Standardizer fit(const RowMatrix& x, double floor = 1e-8) {
        Standardizer s;
        s.floor = floor;
        const double n = static_cast<double>(x.rows());
        s.mean = x.colwise().sum() / n;
        s.stdev = ((x.rowwise() - s.mean).array().square().colwise().sum() / n).sqrt().matrix();
        s.stdev = s.stdev.cwiseMax(floor);
        return s;
    }

    void apply(RowMatrix& x) const {
        x.rowwise() -= mean;
        x.array().rowwise() /= stdev.array();
    }
};

inline void standardize(Dataset& d) { Standardizer::fit(d.samples.inputs).apply(d.samples.inputs); }

// ---------------------------------------------------------------------------
// IDX files

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t at, const std::string& path) {
    if (buf.size() < at + 4) throw Error(ErrorCode::TruncatedFile, "'" + path + "' ends inside the header");
    return (std::uint32_t{buf[at]} << 24) | (std::uint32_t{buf[at + 1]} << 16) | (std::uint32_t{buf[at + 2]} << 8) |
           std::uint32_t{buf[at + 3]};
}

inline void write_be32(std::ofstream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16), static_cast<char>(v >> 8),
                       static_cast<char>(v)};
    out.write(b, 4);
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxImages {
    std::size_t count = 0, rows = 0, cols = 0;
    std::vector<unsigned char> pixels;
};

inline IdxImages read_idx_images(const std::string& path) {
    const auto buf = detail::read_file(path);
    const auto magic = detail::read_be32(buf, 0, path);
    if (magic != kIdxImagesMagic) throw Error(ErrorCode::BadMagic, "'" + path + "' is not an IDX image file");
    IdxImages img;
    img.count = detail::read_be32(buf, 4, path);
    img.rows = detail::read_be32(buf, 8, path);
    img.cols = detail::read_be32(buf, 12, path);
    const std::size_t need = img.count * img.rows * img.cols;
    if (buf.size() < 16 + need) throw Error(ErrorCode::TruncatedFile, "'" + path + "' has fewer pixels than declared");
    img.pixels.assign(buf.begin() + 16, buf.begin() + 16 + static_cast<std::ptrdiff_t>(need));
    return img;
}

inline std::vector<unsigned char> read_idx_labels(const std::string& path) {
    const auto buf = detail::read_file(path);
    const auto magic = detail::read_be32(buf, 0, path);
    if (magic != kIdxLabelsMagic) throw Error(ErrorCode::BadMagic, "'" + path + "' is not an IDX label file");
    const std::size_t n = detail::read_be32(buf, 4, path);
    if (buf.size() < 8 + n) throw Error(ErrorCode::TruncatedFile, "'" + path + "' has fewer labels than declared");
    return {buf.begin() + 8, buf.begin() + 8 + static_cast<std::ptrdiff_t>(n)};
}

inline void write_idx_images(const std::string& path, const IdxImages& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    detail::write_be32(out, kIdxImagesMagic);
    detail::write_be32(out, static_cast<std::uint32_t>(img.count));
    detail::write_be32(out, static_cast<std::uint32_t>(img.rows));
    detail::write_be32(out, static_cast<std::uint32_t>(img.cols));
    out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

inline void write_idx_labels(const std::string& path, std::span<const unsigned char> labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    detail::write_be32(out, kIdxLabelsMagic);
    detail::write_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

/// Pixels scaled to [0, 1], not standardized. Labels define K as max + 1 unless given.
inline Dataset load_idx_raw(const std::string& images_path, const std::string& labels_path, int n_classes = 0) {
    const IdxImages img = read_idx_images(images_path);
    const auto labels = read_idx_labels(labels_path);
    if (img.count != labels.size())
        throw Error(ErrorCode::CountMismatch, std::to_string(img.count) + " images but " +
                                                  std::to_string(labels.size()) + " labels");
    Dataset d;
    const std::size_t dims = img.rows * img.cols;
    d.samples.inputs.resize(static_cast<Eigen::Index>(img.count), static_cast<Eigen::Index>(dims));
    for (std::size_t i = 0; i < img.pixels.size(); ++i) d.samples.inputs.data()[i] = img.pixels[i] / 255.0;
    d.samples.labels.assign(labels.begin(), labels.end());
    int max_label = 0;
    for (int y : d.samples.labels) max_label = std::max(max_label, y);
    d.n_classes = n_classes > 0 ? n_classes : max_label + 1;
    d.validate();
    return d;
}

/// Pixels scaled to [0, 1] then standardized per feature.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path, int n_classes = 0) {
    Dataset d = load_idx_raw(images_path, labels_path, n_classes);
    standardize(d);
    return d;
}

// ---------------------------------------------------------------------------
// synthetic data

/**
 * K isotropic unit-variance Gaussian clusters; cluster k is centred at
 * +separation on axis k (or -separation on axis k - d once the axes run out).
 */
inline Dataset synth_gaussians(std::size_t n_per_class, int k_classes, std::size_t d, double separation,
                               std::uint64_t seed) {
    require(n_per_class > 0 && k_classes > 0 && d > 0, ErrorCode::InvalidArgument, "counts must be positive");
    require(static_cast<std::size_t>(k_classes) <= 2 * d, ErrorCode::InvalidArgument, "need K <= 2 d");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    Dataset out;
    out.n_classes = k_classes;
    const std::size_t n = n_per_class * static_cast<std::size_t>(k_classes);
    out.samples.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    out.samples.labels.resize(n);
    std::size_t row = 0;
    for (int k = 0; k < k_classes; ++k) {
        const std::size_t axis = static_cast<std::size_t>(k) % d;
        const double sign = static_cast<std::size_t>(k) < d ? 1.0 : -1.0;
        for (std::size_t i = 0; i < n_per_class; ++i, ++row) {
            for (std::size_t j = 0; j < d; ++j)
                out.samples.inputs(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)) = noise(rng);
            out.samples.inputs(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(axis)) += sign * separation;
            out.samples.labels[row] = k;
        }
    }
    return out;
}

/// CSV with header label,f0,f1,...
inline void write_csv(const std::string& path, const Dataset& d) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
    out.precision(17);
    out << "label";
    for (std::size_t j = 0; j < d.dims(); ++j) out << ",f" << j;
    out << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        out << d.samples.labels[i];
        for (std::size_t j = 0; j < d.dims(); ++j)
            out << ',' << d.samples.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// epoch planning

struct EpochPlan {
    std::vector<std::size_t> permutation;
    std::size_t batch_size = 1;
    std::vector<std::pair<std::size_t, std::size_t>> batches;  // [begin, end) into permutation

    std::span<const std::size_t> batch(std::size_t b) const {
        const auto [lo, hi] = batches.at(b);
        return std::span<const std::size_t>(permutation).subspan(lo, hi - lo);
    }
};

inline EpochPlan epoch_plan(std::size_t n, std::size_t batch_size, std::mt19937_64& rng) {
    require(n >= 1 && batch_size >= 1, ErrorCode::InvalidArgument, "epoch plan needs n >= 1 and batch size >= 1");
    EpochPlan plan;
    plan.batch_size = batch_size;
    plan.permutation.resize(n);
    std::iota(plan.permutation.begin(), plan.permutation.end(), std::size_t{0});
    std::shuffle(plan.permutation.begin(), plan.permutation.end(), rng);
    for (std::size_t lo = 0; lo < n; lo += batch_size) plan.batches.emplace_back(lo, std::min(n, lo + batch_size));
    return plan;
}

inline Batch gather(const Dataset& d, std::span<const std::size_t> rows) {
    Batch b;
    b.inputs.resize(static_cast<Eigen::Index>(rows.size()), d.samples.inputs.cols());
    b.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        b.inputs.row(static_cast<Eigen::Index>(i)) = d.samples.inputs.row(static_cast<Eigen::Index>(rows[i]));
        b.labels[i] = d.samples.labels[rows[i]];
    }
    return b;
}

}  // namespace cstrain
