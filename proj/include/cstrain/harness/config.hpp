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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cstrain/constraints.hpp"
#include "cstrain/error.hpp"
#include "cstrain/harness/csv.hpp"
#include "cstrain/metrics.hpp"
#include "cstrain/objectives.hpp"
#include "cstrain/solvers.hpp"

namespace cstrain::harness {

using json = nlohmann::json;

enum class Method { FP, SAL, SADMM, ALM, ADMM };

inline constexpr Method kAllMethods[] = {Method::FP, Method::SAL, Method::SADMM, Method::ALM, Method::ADMM};

constexpr std::string_view to_string(Method m) noexcept {
    switch (m) {
        case Method::FP: return "FP";
        case Method::SAL: return "SAL";
        case Method::SADMM: return "SADMM";
        case Method::ALM: return "ALM";
        case Method::ADMM: return "ADMM";
    }
    return "?";
}

/// ParseError or ValidationError carrying every problem found.
class ConfigError : public Error {
public:
    ConfigError(ErrorCode code, std::vector<std::string> problems)
        : Error(code, join(problems)), problems_(std::move(problems)) {}

    const std::vector<std::string>& problems() const { return problems_; }

private:
    static std::string join(const std::vector<std::string>& p) {
        std::string s;
        for (const auto& x : p) s += (s.empty() ? "" : "; ") + x;
        return s;
    }
    std::vector<std::string> problems_;
};

struct DatasetSpec {
    enum class Kind { Synthetic, Idx } kind = Kind::Synthetic;
    // synthetic
    std::size_t n_per_class = 1000;
    int classes = 3;
    std::size_t dims = 20;
    double separation = 2.0;
    std::size_t test_per_class = 500;
    std::uint64_t seed = 1;
    // idx, relative paths resolve against the config file directory
    std::string train_images, train_labels, test_images, test_labels;
    std::size_t train_limit = 0;  // 0: all
    std::size_t test_limit = 0;
};

/// One concrete hyperparameter assignment for one method.
struct HyperPoint {
    Method method = Method::FP;
    std::map<std::string, json> values;

    double num(const std::string& key) const { return values.at(key).get<double>(); }
    std::string str(const std::string& key) const { return values.at(key).get<std::string>(); }

    /// key=value pairs joined by ';', keys sorted; arrays as [a|b].
    std::string label() const {
        std::string s;
        for (const auto& [k, v] : values) {
            if (!s.empty()) s += ';';
            s += k + '=' + render(v);
        }
        return s;
    }

private:
    static std::string render(const json& v) {
        if (v.is_array()) {
            std::string s = "[";
            for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "|" : "") + render(v[i]);
            return s + "]";
        }
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        return csv::num(v.get<double>());
    }
};

struct MethodGrid {
    Method method = Method::FP;
    std::map<std::string, std::vector<json>> grid;  // every key holds >= 1 candidate
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::vector<std::size_t> hidden{32};
    std::vector<ConstraintSpec> constraints;
    SolverKind solver_kind = SolverKind::Adam;
    std::vector<double> lr{1e-3};
    double decay = 1.0;
    std::vector<MethodGrid> methods;
    std::size_t epochs = 10;
    std::size_t batch_size = 128;
    std::vector<std::uint64_t> seeds;
    CvConfig cv{};
    std::string output_dir = "results";
    bool summary_includes_aborted = false;
    std::filesystem::path base_dir = ".";

    bool uses_solver(Method m) const { return m == Method::FP || m == Method::SAL; }

    /// Cartesian product of every grid, methods in FP, SAL, SADMM, ALM, ADMM order.
    std::vector<HyperPoint> points() const {
        std::vector<HyperPoint> out;
        for (const auto& mg : methods) {
            std::vector<std::pair<std::string, std::vector<json>>> axes(mg.grid.begin(), mg.grid.end());
            if (uses_solver(mg.method)) {
                std::vector<json> lrs(lr.begin(), lr.end());
                axes.emplace_back("lr", lrs);
            }
            std::sort(axes.begin(), axes.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
            std::vector<std::size_t> idx(axes.size(), 0);
            for (bool done = false; !done;) {
                HyperPoint p;
                p.method = mg.method;
                for (std::size_t a = 0; a < axes.size(); ++a) p.values[axes[a].first] = axes[a].second[idx[a]];
                out.push_back(std::move(p));
                // odometer, last axis fastest
                done = true;
                for (std::size_t a = axes.size(); a-- > 0;) {
                    if (++idx[a] < axes[a].second.size()) {
                        done = false;
                        break;
                    }
                    idx[a] = 0;
                }
            }
        }
        return out;
    }

    MlpSpec model_for(std::size_t d_in, std::size_t classes) const {
        MlpSpec s;
        s.layer_widths.push_back(d_in);
        for (auto h : hidden) s.layer_widths.push_back(h);
        s.layer_widths.push_back(classes);
        return s;
    }
};

namespace detail {

struct MethodSchema {
    std::map<std::string, json> defaults;
};

inline const MethodSchema& schema(Method m) {
    static const std::map<Method, MethodSchema> table = {
        {Method::FP, {{{"rho", json(1e-3)}}}},
        {Method::SAL,
         {{{"mu_init", json(1e-3)},
           {"eta", json(0.9)},
           {"sigma", json(2.0)},
           {"mu_max", json(1.0)},
           {"eps_f", json(0.0)},
           {"eps_c", json(1e-4)},
           {"n_aug_lag", json(4)}}}},
        {Method::SADMM, {{{"rho", json(1e-2)}, {"eta0", json(1e-2)}, {"dual_rule", json("as-printed")}}}},
        {Method::ALM, {{{"rho", json(10.0)}, {"inner_max_iters", json(200)}}}},
        {Method::ADMM, {{{"rho", json(1.0)}, {"inner_max_iters", json(200)}, {"dual_rule", json("as-printed")}}}},
    };
    return table.at(m);
}

inline std::optional<Method> method_from(const std::string& s) {
    for (Method m : kAllMethods)
        if (to_string(m) == s) return m;
    return std::nullopt;
}

inline std::optional<ConstraintKind> constraint_from(const std::string& s) {
    for (ConstraintKind k : {ConstraintKind::L1, ConstraintKind::L2, ConstraintKind::Orthogonality,
                             ConstraintKind::NonNegativity, ConstraintKind::Affine})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

/// Collects problems instead of stopping at the first one.
class Checker {
public:
    std::vector<std::string> problems;

    void fail(const std::string& msg) { problems.push_back(msg); }

    void keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
        if (!obj.is_object()) {
            fail(where + " must be an object");
            return;
        }
        std::set<std::string> ok(allowed.begin(), allowed.end());
        for (const auto& [k, v] : obj.items())
            if (!ok.count(k)) fail("unknown key '" + (where.empty() ? k : where + "." + k) + "'");
    }

    template <typename T>
    void get(const json& obj, const char* key, T& out, const std::string& where) {
        if (!obj.is_object() || !obj.contains(key)) return;
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            fail("field '" + where + key + "' has the wrong type");
        }
    }
};

}  // namespace detail

/// Parses and validates JSON text. `base_dir` anchors relative dataset paths.
inline ExperimentConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir = ".") {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(ErrorCode::ParseError, {"line " + std::to_string(line) + ", column " + std::to_string(col) +
                                                  ": " + e.what()});
    }

    detail::Checker ck;
    ExperimentConfig cfg;
    cfg.base_dir = base_dir;
    ck.keys(root, "", {"dataset", "model", "constraints", "solver", "methods", "epochs", "batch_size", "seeds",
                       "cv_order", "output_dir", "summary_includes_aborted"});
    if (!root.is_object()) throw ConfigError(ErrorCode::ValidationError, ck.problems);

    // dataset
    if (!root.contains("dataset")) {
        ck.fail("missing 'dataset'");
    } else {
        const json& d = root["dataset"];
        std::string kind = "synthetic";
        ck.get(d, "kind", kind, "dataset.");
        auto& ds = cfg.dataset;
        if (kind == "synthetic") {
            ds.kind = DatasetSpec::Kind::Synthetic;
            ck.keys(d, "dataset", {"kind", "n_per_class", "classes", "dims", "separation", "test_per_class", "seed"});
            ck.get(d, "n_per_class", ds.n_per_class, "dataset.");
            ck.get(d, "classes", ds.classes, "dataset.");
            ck.get(d, "dims", ds.dims, "dataset.");
            ck.get(d, "separation", ds.separation, "dataset.");
            ck.get(d, "test_per_class", ds.test_per_class, "dataset.");
            ck.get(d, "seed", ds.seed, "dataset.");
            if (ds.n_per_class == 0 || ds.dims == 0 || ds.classes <= 0 || ds.test_per_class == 0)
                ck.fail("dataset counts must be positive");
            if (ds.classes > 0 && static_cast<std::size_t>(ds.classes) > 2 * ds.dims)
                ck.fail("dataset.classes must be <= 2 * dims");
            if (ds.separation < 0.0) ck.fail("dataset.separation must be >= 0");
        } else if (kind == "idx") {
            ds.kind = DatasetSpec::Kind::Idx;
            ck.keys(d, "dataset", {"kind", "train_images", "train_labels", "test_images", "test_labels",
                                   "train_limit", "test_limit", "classes"});
            ds.classes = 0;
            ck.get(d, "train_images", ds.train_images, "dataset.");
            ck.get(d, "train_labels", ds.train_labels, "dataset.");
            ck.get(d, "test_images", ds.test_images, "dataset.");
            ck.get(d, "test_labels", ds.test_labels, "dataset.");
            ck.get(d, "train_limit", ds.train_limit, "dataset.");
            ck.get(d, "test_limit", ds.test_limit, "dataset.");
            ck.get(d, "classes", ds.classes, "dataset.");
            for (const char* k : {"train_images", "train_labels", "test_images", "test_labels"})
                if (!d.contains(k)) ck.fail(std::string("dataset.") + k + " is required for idx datasets");
        } else {
            ck.fail("dataset.kind must be 'synthetic' or 'idx'");
        }
    }

    // model
    if (root.contains("model")) {
        const json& m = root["model"];
        ck.keys(m, "model", {"hidden"});
        ck.get(m, "hidden", cfg.hidden, "model.");
        for (auto h : cfg.hidden)
            if (h == 0) ck.fail("model.hidden widths must be positive");
    }

    // constraints
    if (root.contains("constraints")) {
        const json& cs = root["constraints"];
        if (!cs.is_array()) {
            ck.fail("constraints must be an array");
        } else {
            const std::size_t n_layers = cfg.hidden.size() + 1;
            for (std::size_t i = 0; i < cs.size(); ++i) {
                const std::string where = "constraints[" + std::to_string(i) + "]";
                ck.keys(cs[i], where, {"kind", "target"});
                std::string kind, target = kAllGroups;
                ck.get(cs[i], "kind", kind, where + ".");
                ck.get(cs[i], "target", target, where + ".");
                const auto k = detail::constraint_from(kind);
                if (!k || *k == ConstraintKind::Affine) {
                    ck.fail(where + ".kind must be one of L1, L2, Orthogonality, NonNegativity");
                    continue;
                }
                bool known = target == kAllGroups;
                bool is_weight = false;
                for (std::size_t l = 0; l < n_layers; ++l) {
                    if (target == weight_group_name(l)) known = is_weight = true;
                    if (target == bias_group_name(l)) known = true;
                }
                if (!known) ck.fail(where + ".target '" + target + "' is not a model parameter group");
                if (*k == ConstraintKind::Orthogonality && !is_weight)
                    ck.fail(where + ": Orthogonality needs a weight-matrix target (W1, W2, ...)");
                cfg.constraints.push_back({*k, target, {}, 0.0});
            }
        }
    }

    // solver
    if (root.contains("solver")) {
        const json& s = root["solver"];
        ck.keys(s, "solver", {"kind", "lr", "decay"});
        std::string kind = "Adam";
        ck.get(s, "kind", kind, "solver.");
        if (kind == "Adam") cfg.solver_kind = SolverKind::Adam;
        else if (kind == "SGD") cfg.solver_kind = SolverKind::SGD;
        else ck.fail("solver.kind must be 'SGD' or 'Adam'");
        if (s.contains("lr")) {
            if (s["lr"].is_number()) cfg.lr = {s["lr"].get<double>()};
            else ck.get(s, "lr", cfg.lr, "solver.");
        }
        ck.get(s, "decay", cfg.decay, "solver.");
        if (cfg.lr.empty()) ck.fail("solver.lr grid must be nonempty");
        for (double v : cfg.lr)
            if (!(v > 0.0)) ck.fail("solver.lr values must be positive");
        if (!(cfg.decay > 0.0 && cfg.decay <= 1.0)) ck.fail("solver.decay must be in (0,1]");
    }

    // methods
    if (!root.contains("methods") || !root["methods"].is_object() || root["methods"].empty()) {
        ck.fail("'methods' must name at least one of FP, SAL, SADMM, ALM, ADMM");
    } else {
        for (Method m : kAllMethods) {
            const std::string name(to_string(m));
            if (!root["methods"].contains(name)) continue;
            const json& body = root["methods"][name];
            MethodGrid mg;
            mg.method = m;
            const auto& sch = detail::schema(m);
            if (!body.is_object()) {
                ck.fail("methods." + name + " must be an object");
                continue;
            }
            for (const auto& [k, v] : body.items()) {
                if (!sch.defaults.count(k)) {
                    ck.fail("unknown key 'methods." + name + "." + k + "'");
                    continue;
                }
                if (m == Method::FP && k == "rho") {
                    // a list of grid entries, each a number or a per-constraint array
                    if (v.is_array()) mg.grid[k] = std::vector<json>(v.begin(), v.end());
                    else mg.grid[k] = {v};
                } else if (v.is_array()) {
                    mg.grid[k] = std::vector<json>(v.begin(), v.end());
                } else {
                    mg.grid[k] = {v};
                }
                if (mg.grid[k].empty()) ck.fail("methods." + name + "." + k + " grid must be nonempty");
            }
            for (const auto& [k, v] : sch.defaults)
                if (!mg.grid.count(k)) mg.grid[k] = {v};
            cfg.methods.push_back(std::move(mg));
        }
        for (const auto& [k, v] : root["methods"].items())
            if (!detail::method_from(k)) ck.fail("unknown method '" + k + "'");
    }

    ck.get(root, "epochs", cfg.epochs, "");
    ck.get(root, "batch_size", cfg.batch_size, "");
    ck.get(root, "output_dir", cfg.output_dir, "");
    ck.get(root, "summary_includes_aborted", cfg.summary_includes_aborted, "");
    if (!root.contains("seeds")) ck.fail("'seeds' must list at least one seed");
    else ck.get(root, "seeds", cfg.seeds, "");
    if (root.contains("seeds") && cfg.seeds.empty()) ck.fail("'seeds' must list at least one seed");
    if (cfg.epochs == 0) ck.fail("epochs must be >= 1");
    if (cfg.batch_size == 0) ck.fail("batch_size must be >= 1");
    if (root.contains("cv_order")) {
        const json& p = root["cv_order"];
        if (p.is_string() && (p == "INF" || p == "inf")) cfg.cv = CvConfig::inf();
        else if (p.is_number() && p.get<double>() >= 1.0) cfg.cv = CvConfig{p.get<double>()};
        else ck.fail("cv_order must be a number >= 1 or \"INF\"");
    }

    // per-method value checks over every grid candidate
    auto each = [&](const MethodGrid& mg, const char* key, auto&& pred, const std::string& msg) {
        for (const json& v : mg.grid.at(key)) {
            if (!v.is_number() || !pred(v.get<double>())) {
                ck.fail(msg);
                return;
            }
        }
    };
    auto positive_int = [&](const MethodGrid& mg, const char* key, const std::string& msg) {
        for (const json& v : mg.grid.at(key))
            if (!v.is_number_integer() || v.get<long long>() <= 0) {
                ck.fail(msg);
                return;
            }
    };
    auto rule = [&](const MethodGrid& mg, const std::string& name) {
        for (const json& v : mg.grid.at("dual_rule"))
            if (!v.is_string() || (v != "as-printed" && v != "scaled")) {
                ck.fail("methods." + name + ".dual_rule must be 'as-printed' or 'scaled'");
                return;
            }
    };
    for (const auto& mg : cfg.methods) {
        const std::string name(to_string(mg.method));
        switch (mg.method) {
            case Method::FP:
                for (const json& v : mg.grid.at("rho")) {
                    if (v.is_number()) {
                        if (v.get<double>() < 0.0) ck.fail("methods.FP.rho values must be >= 0");
                    } else if (v.is_array()) {
                        if (v.size() != cfg.constraints.size())
                            ck.fail("methods.FP.rho per-constraint arrays need one value per constraint");
                        for (const json& x : v)
                            if (!x.is_number() || x.get<double>() < 0.0) ck.fail("methods.FP.rho values must be >= 0");
                    } else {
                        ck.fail("methods.FP.rho entries must be numbers or arrays of numbers");
                    }
                }
                break;
            case Method::SAL: {
                each(mg, "eta", [](double x) { return x > 0.0 && x < 1.0; }, "eta must be in (0,1)");
                each(mg, "sigma", [](double x) { return x > 1.0; }, "sigma must be > 1");
                each(mg, "mu_init", [](double x) { return x > 0.0; }, "mu_init must be > 0");
                each(mg, "mu_max", [](double x) { return x > 0.0; }, "mu_max must be > 0");
                each(mg, "eps_f", [](double x) { return x >= 0.0; }, "eps_f must be >= 0");
                each(mg, "eps_c", [](double x) { return x >= 0.0; }, "eps_c must be >= 0");
                positive_int(mg, "n_aug_lag", "n_aug_lag must be a positive integer");
                bool ordered = true;
                for (const json& a : mg.grid.at("mu_init"))
                    for (const json& b : mg.grid.at("mu_max"))
                        if (a.is_number() && b.is_number() && a.get<double>() > b.get<double>()) ordered = false;
                if (!ordered) ck.fail("mu_init must not exceed mu_max");
                break;
            }
            case Method::SADMM:
                each(mg, "rho", [](double x) { return x > 0.0; }, "methods.SADMM.rho must be > 0");
                each(mg, "eta0", [](double x) { return x > 0.0; }, "methods.SADMM.eta0 must be > 0");
                rule(mg, name);
                break;
            case Method::ALM:
                each(mg, "rho", [](double x) { return x > 0.0; }, "methods.ALM.rho must be > 0");
                positive_int(mg, "inner_max_iters", "methods.ALM.inner_max_iters must be a positive integer");
                break;
            case Method::ADMM:
                each(mg, "rho", [](double x) { return x > 0.0; }, "methods.ADMM.rho must be > 0");
                positive_int(mg, "inner_max_iters", "methods.ADMM.inner_max_iters must be a positive integer");
                rule(mg, name);
                break;
        }
    }

    if (!ck.problems.empty()) throw ConfigError(ErrorCode::ValidationError, ck.problems);
    return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), std::filesystem::path(path).parent_path());
}

}  // namespace cstrain::harness
