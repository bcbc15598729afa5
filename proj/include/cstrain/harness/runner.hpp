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

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cstrain/data.hpp"
#include "cstrain/harness/config.hpp"
#include "cstrain/harness/csv.hpp"
#include "cstrain/methods/admm.hpp"
#include "cstrain/methods/alm.hpp"
#include "cstrain/methods/fp.hpp"
#include "cstrain/methods/sal.hpp"
#include "cstrain/objectives.hpp"

namespace cstrain::harness {

struct ResultRow {
    std::size_t run_id = 0;
    std::string method;
    std::string params;
    std::uint64_t seed = 0;
    std::optional<double> cv_rel_final;  // nullopt when CV_0 = 0
    double cv_p2_final = 0.0;
    double accuracy = 0.0;
    double final_train_loss = 0.0;
    std::size_t epochs = 0;
    double wall_time_s = 0.0;
    std::string termination;

    bool aborted() const { return termination == "non-finite" || termination == "error"; }
};

struct SummaryStat {
    std::size_t n = 0;
    double mean = 0.0;
    double stdev = 0.0;  // sample standard deviation, 0 for n < 2
};

struct SummaryRow {
    std::string method;
    std::string params;  // empty for the per-method summary
    std::size_t n_runs = 0;
    std::size_t n_aborted = 0;
    SummaryStat cv_rel_final, cv_p2_final, accuracy;
};

inline SummaryStat mean_std(const std::vector<double>& xs) {
    SummaryStat s;
    s.n = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stdev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

/**
 * Mean and standard deviation per method (or per method and hyperparameter
 * point when `by_point`). Aborted runs are counted but left out of the
 * statistics unless `include_aborted`; runs with CV_0 = 0 never enter the
 * cv_rel_final statistic.
 */
inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows, bool include_aborted = false,
                                         bool by_point = false) {
    std::vector<SummaryRow> out;
    std::vector<std::vector<double>> cvr, cvp, acc;
    for (const auto& r : rows) {
        const std::string key_params = by_point ? r.params : "";
        std::size_t i = 0;
        while (i < out.size() && !(out[i].method == r.method && out[i].params == key_params)) ++i;
        if (i == out.size()) {
            out.push_back({r.method, key_params, 0, 0, {}, {}, {}});
            cvr.emplace_back();
            cvp.emplace_back();
            acc.emplace_back();
        }
        ++out[i].n_runs;
        if (r.aborted()) ++out[i].n_aborted;
        if (r.aborted() && !include_aborted) continue;
        if (r.cv_rel_final && std::isfinite(*r.cv_rel_final)) cvr[i].push_back(*r.cv_rel_final);
        cvp[i].push_back(r.cv_p2_final);
        acc[i].push_back(r.accuracy);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].cv_rel_final = mean_std(cvr[i]);
        out[i].cv_p2_final = mean_std(cvp[i]);
        out[i].accuracy = mean_std(acc[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV files

inline const char* kRunsHeader =
    "run_id,method,params,seed,cv_rel_final,cv_p2_final,accuracy,final_train_loss,epochs,wall_time_s,termination";

inline void write_runs_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out << kRunsHeader << '\n';
    for (const auto& r : rows)
        out << r.run_id << ',' << r.method << ',' << r.params << ',' << r.seed << ',' << csv::num(r.cv_rel_final) << ','
            << csv::num(r.cv_p2_final) << ',' << csv::num(r.accuracy) << ',' << csv::num(r.final_train_loss) << ','
            << r.epochs << ',' << csv::num(r.wall_time_s) << ',' << r.termination << '\n';
}

inline std::vector<ResultRow> read_runs_csv(const std::filesystem::path& path) {
    const csv::Table t = csv::read(path.string());
    std::vector<ResultRow> rows;
    const auto c_id = t.column("run_id"), c_m = t.column("method"), c_p = t.column("params"), c_s = t.column("seed"),
               c_cvr = t.column("cv_rel_final"), c_cvp = t.column("cv_p2_final"), c_acc = t.column("accuracy"),
               c_loss = t.column("final_train_loss"), c_ep = t.column("epochs"), c_w = t.column("wall_time_s"),
               c_t = t.column("termination");
    for (const auto& cells : t.rows) {
        ResultRow r;
        r.run_id = std::stoull(cells[c_id]);
        r.method = cells[c_m];
        r.params = cells[c_p];
        r.seed = std::stoull(cells[c_s]);
        r.cv_rel_final = csv::parse_num(cells[c_cvr]);
        r.cv_p2_final = csv::parse_num(cells[c_cvp]).value_or(std::nan(""));
        r.accuracy = csv::parse_num(cells[c_acc]).value_or(std::nan(""));
        r.final_train_loss = csv::parse_num(cells[c_loss]).value_or(std::nan(""));
        r.epochs = std::stoull(cells[c_ep]);
        r.wall_time_s = csv::parse_num(cells[c_w]).value_or(0.0);
        r.termination = cells[c_t];
        rows.push_back(std::move(r));
    }
    return rows;
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows, bool with_params) {
    out << "method," << (with_params ? "params," : "")
        << "n_runs,n_aborted,cv_rel_final_mean,cv_rel_final_std,cv_p2_final_mean,cv_p2_final_std,accuracy_mean,"
           "accuracy_std\n";
    for (const auto& r : rows) {
        out << r.method << ',';
        if (with_params) out << r.params << ',';
        out << r.n_runs << ',' << r.n_aborted << ',' << csv::num(r.cv_rel_final.mean) << ','
            << csv::num(r.cv_rel_final.stdev) << ',' << csv::num(r.cv_p2_final.mean) << ','
            << csv::num(r.cv_p2_final.stdev) << ',' << csv::num(r.accuracy.mean) << ',' << csv::num(r.accuracy.stdev)
            << '\n';
    }
}

inline void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows,
                              bool with_params = false) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    write_summary_csv(out, rows, with_params);
}

inline void write_trace_csv(const std::filesystem::path& path, const TrainingRecord& rec) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out << "epoch,train_loss,cv_p,cv_rel,cv_p2,accuracy,lambda_inf,penalty,lr\n";
    for (const auto& r : rec.rows)
        out << r.epoch << ',' << csv::num(r.train_loss) << ',' << csv::num(r.cv_p) << ',' << csv::num(r.cv_rel) << ','
            << csv::num(r.cv_p2) << ',' << csv::num(r.accuracy) << ',' << csv::num(r.lambda_inf) << ','
            << csv::num(r.penalty) << ',' << csv::num(r.lr) << '\n';
}

// ---------------------------------------------------------------------------
// running

struct ExperimentData {
    Dataset train;
    Dataset test;
};

inline std::string resolve(const ExperimentConfig& cfg, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (cfg.base_dir / path).string();
}

/// Train and test splits, both standardized with the training statistics.
inline ExperimentData load_data(const ExperimentConfig& cfg) {
    ExperimentData d;
    const auto& ds = cfg.dataset;
    if (ds.kind == DatasetSpec::Kind::Synthetic) {
        d.train = synth_gaussians(ds.n_per_class, ds.classes, ds.dims, ds.separation, ds.seed);
        d.test = synth_gaussians(ds.test_per_class, ds.classes, ds.dims, ds.separation, ds.seed + 1000003);
    } else {
        d.train = load_idx_raw(resolve(cfg, ds.train_images), resolve(cfg, ds.train_labels), ds.classes);
        d.test = load_idx_raw(resolve(cfg, ds.test_images), resolve(cfg, ds.test_labels), d.train.n_classes);
        if (ds.train_limit > 0) d.train = d.train.head(ds.train_limit);
        if (ds.test_limit > 0) d.test = d.test.head(ds.test_limit);
        d.test.n_classes = d.train.n_classes = std::max(d.train.n_classes, d.test.n_classes);
    }
    const Standardizer st = Standardizer::fit(d.train.samples.inputs);
    st.apply(d.train.samples.inputs);
    st.apply(d.test.samples.inputs);
    return d;
}

/// Seeds for parameter initialization and for batch shuffling are separate streams.
inline std::uint64_t shuffle_seed(std::uint64_t seed) { return seed ^ 0x9E3779B97F4A7C15ULL; }

inline TrainingRecord run_point(const ExperimentConfig& cfg, const ExperimentData& data, const HyperPoint& pt,
                                std::uint64_t seed) {
    const MlpObjective obj(cfg.model_for(data.train.dims(), static_cast<std::size_t>(data.train.n_classes)));
    ParamVector theta = obj.make_params();
    std::mt19937_64 init_rng(seed);
    init_glorot_uniform(obj.spec(), theta, init_rng);
    const ConstraintSet set(cfg.constraints);

    TrainOptions opt;
    opt.batch_size = cfg.batch_size;
    opt.epochs = cfg.epochs;
    opt.cv = cfg.cv;
    opt.seed = shuffle_seed(seed);
    opt.eval = &data.test;

    SolverConfig solver;
    solver.kind = cfg.solver_kind;
    solver.decay = cfg.decay;
    if (pt.values.count("lr")) solver.lr0 = pt.num("lr");

    switch (pt.method) {
        case Method::FP: {
            FpConfig fp;
            const json& rho = pt.values.at("rho");
            if (rho.is_array()) fp.rho_per_constraint = rho.get<std::vector<double>>();
            else fp.rho_per_constraint.assign(set.specs().size(), rho.get<double>());
            return fp_train(obj, set, fp, solver, data.train, std::move(theta), opt);
        }
        case Method::SAL: {
            SalConfig sal;
            sal.eta = pt.num("eta");
            sal.sigma = pt.num("sigma");
            sal.mu_init = pt.num("mu_init");
            sal.mu_max = pt.num("mu_max");
            sal.eps_f = pt.num("eps_f");
            sal.eps_c = pt.num("eps_c");
            sal.n_aug_lag = static_cast<std::size_t>(pt.values.at("n_aug_lag").get<long long>());
            sal.n_batch = cfg.batch_size;
            sal.n_shuffle = cfg.epochs;
            return sal_train(obj, set, sal, solver, data.train, std::move(theta), opt);
        }
        case Method::SADMM: {
            SadmmConfig s;
            s.rho = pt.num("rho");
            s.eta0 = pt.num("eta0");
            s.dual_rule = pt.str("dual_rule") == "scaled" ? DualRule::Scaled : DualRule::AsPrinted;
            return sadmm_train(obj, set, s, data.train, std::move(theta), opt);
        }
        case Method::ALM:
        case Method::ADMM: {
            TrainingRecord rec;
            EpochRecorder<MlpObjective> recorder(obj, set, data.train, opt);
            rec.rows.push_back(recorder.row(0, theta, 0.0, pt.num("rho"), 0.0));
            MinimizeOptions inner;
            inner.max_iters = static_cast<std::size_t>(pt.values.at("inner_max_iters").get<long long>());
            double lambda_inf = 0.0;
            try {
                if (pt.method == Method::ALM) {
                    AlmConfig a;
                    a.rho = pt.num("rho");
                    a.outer_iters = cfg.epochs;
                    a.inner = inner;
                    AlmResult r = alm_solve(obj, data.train.samples, set, std::move(theta), a);
                    lambda_inf = inf_norm(r.lambda);
                    rec.termination = r.converged ? Termination::Converged : Termination::Completed;
                    theta = std::move(r.theta);
                } else {
                    AdmmConfig a;
                    a.rho = pt.num("rho");
                    a.outer_iters = cfg.epochs;
                    a.inner = inner;
                    a.dual_rule = pt.str("dual_rule") == "scaled" ? DualRule::Scaled : DualRule::AsPrinted;
                    AdmmResult r = admm_solve(obj, data.train.samples, set, std::move(theta), a);
                    lambda_inf = r.state.lambda_inf();
                    rec.termination = r.converged ? Termination::Converged : Termination::Completed;
                    theta = std::move(r.theta);
                }
                rec.rows.push_back(recorder.row(cfg.epochs, theta, lambda_inf, pt.num("rho"), 0.0));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::InnerSolveDiverged && e.code() != ErrorCode::NonFiniteLoss) throw;
                rec.termination = Termination::NonFinite;
                rec.message = e.what();
            }
            rec.cv0 = recorder.cv0();
            rec.theta = std::move(theta);
            return rec;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown method");
}

inline ResultRow make_row(std::size_t run_id, const HyperPoint& pt, std::uint64_t seed, const TrainingRecord& rec,
                          double wall) {
    ResultRow r;
    r.run_id = run_id;
    r.method = std::string(to_string(pt.method));
    r.params = pt.label();
    r.seed = seed;
    r.wall_time_s = wall;
    r.termination = std::string(to_string(rec.termination));
    if (!rec.rows.empty()) {
        const EpochRow& last = rec.rows.back();
        r.cv_rel_final = last.cv_rel;
        r.cv_p2_final = last.cv_p2;
        r.accuracy = last.accuracy;
        r.final_train_loss = last.train_loss;
        r.epochs = last.epoch;
    }
    return r;
}

struct RunOptions {
    unsigned jobs = 1;
    std::optional<std::string> out_dir;
    std::uint64_t seed_offset = 0;
    bool write_files = true;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<SummaryRow> summary;
    std::vector<SummaryRow> summary_points;
    std::vector<TrainingRecord> records;
    std::filesystem::path out_dir;
};

/**
 * Runs every (hyperparameter point, seed) pair. Rows are ordered by point then
 * seed regardless of --jobs; a failed run becomes an aborted row.
 */
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& ro = {}) {
    const ExperimentData data = load_data(cfg);
    const auto points = cfg.points();
    struct Task {
        std::size_t point;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (std::size_t p = 0; p < points.size(); ++p)
        for (auto s : cfg.seeds) tasks.push_back({p, s + ro.seed_offset});

    ExperimentResult res;
    res.out_dir = ro.out_dir ? std::filesystem::path(*ro.out_dir) : std::filesystem::path(cfg.output_dir);
    if (ro.write_files) std::filesystem::create_directories(res.out_dir);
    res.rows.resize(tasks.size());
    res.records.resize(tasks.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            const auto& t = tasks[i];
            const auto start = std::chrono::steady_clock::now();
            TrainingRecord rec;
            try {
                rec = run_point(cfg, data, points[t.point], t.seed);
            } catch (const std::exception& e) {
                rec.message = e.what();
            }
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            ResultRow row = make_row(i, points[t.point], t.seed, rec, wall);
            if (rec.rows.empty()) row.termination = "error";
            if (ro.write_files) write_trace_csv(res.out_dir / ("trace_" + std::to_string(i) + ".csv"), rec);
            res.rows[i] = std::move(row);
            res.records[i] = std::move(rec);
        }
    };
    const unsigned jobs = std::max(1u, ro.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    res.summary = summarize(res.rows, cfg.summary_includes_aborted);
    res.summary_points = summarize(res.rows, cfg.summary_includes_aborted, /*by_point=*/true);
    if (ro.write_files) {
        write_runs_csv(res.out_dir / "runs.csv", res.rows);
        write_summary_csv(res.out_dir / "summary.csv", res.summary);
        write_summary_csv(res.out_dir / "summary_points.csv", res.summary_points, /*with_params=*/true);
    }
    return res;
}

}  // namespace cstrain::harness
