#include "motid/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <fstream>
#include <functional>
#include <memory>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "motid/preprocess.hpp"
#include "motid/rng.hpp"
#include "motid/telemetry.hpp"

namespace motid {

using nlohmann::json;

namespace {

constexpr double kAucClamp = 1e-4;  // keeps logits finite on saturated cells

std::string fmt(double v) {
    std::array<char, 32> buf;
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

struct FeatureCache {
    std::map<std::pair<std::string, int>, FeatureStream> streams;

    static FeatureCache build(const CorpusIndex& idx) {
        FeatureCache cache;
        for (const auto& [pid, sessions] : idx.entries) {
            for (const auto& [s, e] : sessions) {
                Recording r = load_recording(e.telemetry_path, e.sidecar_path);
                cache.streams[{pid, s}] = preprocess_recording(r);
            }
        }
        return cache;
    }

    const FeatureStream& get(const std::string& pid, int session) const {
        auto it = streams.find({pid, session});
        if (it == streams.end())
            throw std::runtime_error("feature cache miss: " + pid + " session " +
                                     std::to_string(session));
        return it->second;
    }
};

std::vector<FeatureWindow> collect_windows(const FeatureCache& cache,
                                           const std::vector<SpanAssign>& spans,
                                           WindowMode mode) {
    std::vector<FeatureWindow> out;
    for (const auto& a : spans) {
        auto ws = windows_in_span(cache.get(a.participant, a.session), a.start_s,
                                  a.end_s, mode);
        out.insert(out.end(), std::make_move_iterator(ws.begin()),
                   std::make_move_iterator(ws.end()));
    }
    return out;
}

// Session- or participant-level evaluation of one experiment cell.
EvalRow evaluate_cell(const SplitPlan& plan, const FeatureCache& cache,
                      const ExperimentConfig& cfg, std::uint64_t cell_seed,
                      bool participant_units, EvalRow row) {
    std::vector<FeatureWindow> train_windows =
        collect_windows(cache, plan.train, WindowMode::train);
    if (train_windows.empty())
        throw std::runtime_error("cell " + row.cell + ": no training windows");

    std::unique_ptr<NearestCentroid> baseline;
    std::unique_ptr<GruFunnel> funnel;
    LabelSpace labels;
    if (cfg.classifier == "funnel") {
        RecurrentFunnelConfig fc = cfg.funnel;
        fc.seed = cell_seed;
        funnel = std::make_unique<GruFunnel>(GruFunnel::train(train_windows, fc));
        labels = funnel->labels();
    } else {
        baseline = std::make_unique<NearestCentroid>(
            NearestCentroid::train(train_windows));
        labels = baseline->labels();
    }
    std::map<std::string, int> label_of;
    for (std::size_t i = 0; i < labels.size(); ++i)
        label_of[labels[i]] = static_cast<int>(i);

    // Units keyed by participant (and session unless aggregating the whole
    // participant); only enrolled identities are evaluated.
    std::map<std::pair<std::string, int>, std::vector<SpanAssign>> units;
    for (const auto& a : plan.test) {
        if (!label_of.count(a.participant)) continue;
        units[{a.participant, participant_units ? 0 : a.session}].push_back(a);
    }

    ScoreMatrix session_scores;
    session_scores.labels = labels;
    std::vector<int> true_labels;
    std::vector<int> predicted;
    std::vector<Eigen::RowVectorXd> score_rows;
    std::size_t unit_idx = 0;
    for (const auto& [key, spans] : units) {
        std::vector<FeatureWindow> ws =
            collect_windows(cache, spans, WindowMode::infer);
        ++unit_idx;
        if (ws.empty()) continue;
        ScoreMatrix sm = funnel ? funnel->predict_windows(ws)
                                : baseline->predict_windows(ws);
        SessionAggregate agg = aggregate_session(
            sm.scores, cfg.aggregate, mix_seed(cell_seed, 0xA66, unit_idx));
        score_rows.push_back(agg.session_row);
        predicted.push_back(agg.predicted);
        true_labels.push_back(label_of.at(key.first));
        session_scores.rows.push_back(
            {key.first, participant_units ? -1 : key.second, -1.0});
    }
    if (true_labels.empty())
        throw std::runtime_error("cell " + row.cell + ": no test units");

    session_scores.scores.resize(static_cast<Eigen::Index>(score_rows.size()),
                                 static_cast<Eigen::Index>(labels.size()));
    for (std::size_t i = 0; i < score_rows.size(); ++i)
        session_scores.scores.row(static_cast<Eigen::Index>(i)) = score_rows[i];

    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == true_labels[i]) ++hits;
    row.accuracy = static_cast<double>(hits) / static_cast<double>(predicted.size());

    auto records = rank_records(session_scores.scores, true_labels,
                                mix_seed(cell_seed, 0x72616E6B));
    std::size_t r1 = 0;
    for (const auto& rec : records)
        if (rec.rank == 1) ++r1;
    row.rank1 = static_cast<double>(r1) / static_cast<double>(records.size());
    row.auc = multiclass_auc(session_scores.scores, true_labels);
    int n = std::min<int>(cfg.metric_n, static_cast<int>(labels.size()));
    row.n_class_acc = n_class_accuracy(records, n);
    row.n_participants = static_cast<int>(labels.size());
    row.n_units = true_labels.size();
    return row;
}

CorpusIndex load_filtered_index(const ExperimentConfig& cfg) {
    CorpusIndex idx = read_index(cfg.corpus_index);
    idx = filter_participants(idx, cfg.min_sessions, cfg.min_total_seconds);
    if (idx.entries.size() < 2)
        throw std::runtime_error("corpus too small: fewer than 2 eligible participants");
    return idx;
}

void check_plan(const SplitPlan& plan, const CorpusIndex& idx,
                const std::string& cell) {
    auto issues = validate_plan(plan, idx);
    if (!issues.empty())
        throw std::runtime_error("invalid plan for " + cell + ": " + issues.front());
}

void run_cells(int workers, std::size_t n,
               const std::function<void(std::size_t)>& work) {
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) work(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = next++; i < n; i = next++) work(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

EvalReport run_table1(const ExperimentConfig& cfg) {
    CorpusIndex idx = load_filtered_index(cfg);
    FeatureCache cache = FeatureCache::build(idx);

    SplitPlan between = plan_between(idx, cfg.train_weeks, cfg.test_weeks);
    SplitPlan within = plan_within(idx);
    check_plan(between, idx, "table1 between");
    check_plan(within, idx, "table1 within");
    if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir / "plans");
        write_plan(between, cfg.out_dir / "plans" / "table1_between.json");
        write_plan(within, cfg.out_dir / "plans" / "table1_within.json");
    }

    struct Cond {
        const SplitPlan* plan;
        bool participant_units;
        const char* name;
        SplitKind kind;
    };
    const Cond conds[4] = {
        {&between, false, "between per-session", SplitKind::between},
        {&between, true, "between per-participant", SplitKind::between},
        {&within, false, "within per-session", SplitKind::within},
        {&within, true, "within per-participant", SplitKind::within}};

    EvalReport report;
    report.rows.resize(4);
    run_cells(cfg.workers, 4, [&](std::size_t i) {
        EvalRow row;
        row.experiment = "table1";
        row.cell = conds[i].name;
        row.kind = conds[i].kind;
        report.rows[i] = evaluate_cell(*conds[i].plan, cache, cfg,
                                       mix_seed(cfg.seed, 0x7431, i),
                                       conds[i].participant_units, row);
    });
    if (!cfg.out_dir.empty())
        write_report_csv(report, cfg.out_dir / "report.csv");
    return report;
}

DelayMatrixResult run_delay_matrix(const ExperimentConfig& cfg) {
    CorpusIndex idx = load_filtered_index(cfg);
    std::set<int> weeks = idx.weeks();
    if (weeks.size() < 3)
        throw std::runtime_error("delay-matrix: need at least 3 weeks of data");
    FeatureCache cache = FeatureCache::build(idx);

    std::vector<std::pair<int, int>> cells;
    for (int tw : weeks)
        for (int sw : weeks)
            if (tw != sw) cells.emplace_back(tw, sw);

    if (!cfg.out_dir.empty())
        std::filesystem::create_directories(cfg.out_dir / "plans");

    DelayMatrixResult result;
    result.report.rows.resize(cells.size());
    result.observations.resize(cells.size());
    run_cells(cfg.workers, cells.size(), [&](std::size_t i) {
        auto [tw, sw] = cells[i];
        SplitPlan plan = plan_delay_cell(idx, tw, sw);
        check_plan(plan, idx, "delay cell");
        if (!cfg.out_dir.empty())
            write_plan(plan, cfg.out_dir / "plans" /
                                 ("delay_t" + std::to_string(tw) + "_s" +
                                  std::to_string(sw) + ".json"));
        EvalRow row;
        row.experiment = "delay-matrix";
        row.cell = "train w" + std::to_string(tw) + " test w" + std::to_string(sw);
        row.kind = SplitKind::between;
        row.train_week = tw;
        row.test_week = sw;
        row = evaluate_cell(plan, cache, cfg,
                            mix_seed(cfg.seed, 0xDE1A,
                                     static_cast<std::uint64_t>(tw),
                                     static_cast<std::uint64_t>(sw)),
                            false, row);
        result.report.rows[i] = row;
        result.observations[i] = {tw, sw,
                                  std::clamp(row.auc, kAucClamp, 1.0 - kAucClamp)};
    });

    result.fit = fit_delay_model(result.observations);

    // Heatmap: rows = training week, columns = testing week, empty diagonal.
    std::vector<int> wk(weeks.begin(), weeks.end());
    const Eigen::Index W = static_cast<Eigen::Index>(wk.size());
    result.heatmap.title = "Multiclass AUC by training and testing week";
    for (int w : wk) {
        result.heatmap.x_labels.push_back("test w" + std::to_string(w));
        result.heatmap.y_labels.push_back("train w" + std::to_string(w));
    }
    result.heatmap.values = Eigen::MatrixXd::Zero(W, W);
    result.heatmap.has_data.setConstant(W, W, false);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto [tw, sw] = cells[i];
        Eigen::Index r = std::find(wk.begin(), wk.end(), tw) - wk.begin();
        Eigen::Index c = std::find(wk.begin(), wk.end(), sw) - wk.begin();
        result.heatmap.values(r, c) = result.report.rows[i].auc;
        result.heatmap.has_data(r, c) = true;
    }

    if (!cfg.out_dir.empty()) {
        write_report_csv(result.report, cfg.out_dir / "report.csv");
        emit_heatmap(result.heatmap, cfg.out_dir / "heatmap_delay.svg");
        json fit_json = {{"slope_logits_per_week", result.fit.slope},
                         {"pooled_intercept", result.fit.pooled_intercept},
                         {"intercepts", json::object()},
                         {"residuals", result.fit.residuals}};
        for (const auto& [w, b] : result.fit.intercepts)
            fit_json["intercepts"][std::to_string(w)] = b;
        std::ofstream out(cfg.out_dir / "delay_fit.json");
        out << fit_json.dump(2) << "\n";
    }
    return result;
}

DurationGridResult run_duration_grid(const ExperimentConfig& cfg) {
    CorpusIndex idx = load_filtered_index(cfg);
    bool ok = false;
    for (const auto& [pid, sessions] : idx.entries)
        if (sessions.size() >= 2) ok = true;
    if (!ok)
        throw std::runtime_error("duration-grid: need >= 2 sessions per participant");
    FeatureCache cache = FeatureCache::build(idx);

    const int session_counts[4] = {1, 2, 4, 7};
    const double minute_opts[4] = {1.0, 3.0, 10.0, 30.0};
    struct Cell {
        int n;
        double m;
        SplitKind kind;
    };
    std::vector<Cell> cells;
    for (int n : session_counts)
        for (double m : minute_opts)
            for (SplitKind k : {SplitKind::between, SplitKind::within})
                cells.push_back({n, m, k});

    if (!cfg.out_dir.empty())
        std::filesystem::create_directories(cfg.out_dir / "plans");

    DurationGridResult result;
    result.report.rows.resize(cells.size());
    run_cells(cfg.workers, cells.size(), [&](std::size_t i) {
        const Cell& cell = cells[i];
        // session choice depends only on (seed, n, m), shared across kinds
        std::uint64_t plan_seed =
            mix_seed(cfg.seed, 0xD0, static_cast<std::uint64_t>(cell.n),
                     static_cast<std::uint64_t>(cell.m));
        SplitPlan plan =
            plan_duration_cell(idx, cell.n, cell.m, plan_seed, cell.kind);
        check_plan(plan, idx, "duration cell");
        std::string kind_name =
            cell.kind == SplitKind::between ? "between" : "within";
        if (!cfg.out_dir.empty())
            write_plan(plan, cfg.out_dir / "plans" /
                                 ("duration_n" + std::to_string(cell.n) + "_m" +
                                  fmt(cell.m) + "_" + kind_name + ".json"));
        EvalRow row;
        row.experiment = "duration-grid";
        row.cell = "sessions " + std::to_string(cell.n) + " minutes " +
                   fmt(cell.m) + " " + kind_name;
        row.kind = cell.kind;
        row.sessions = cell.n;
        row.minutes = cell.m;
        result.report.rows[i] =
            evaluate_cell(plan, cache, cfg, plan_seed, false, row);
    });

    auto make_map = [&](SplitKind kind, const char* name) {
        HeatmapSpec spec;
        spec.title = std::string("Multiclass AUC, ") + name + "-session testing";
        for (double m : minute_opts)
            spec.x_labels.push_back(fmt(m) + " min");
        for (int n : session_counts)
            spec.y_labels.push_back(std::to_string(n) + " sess");
        spec.values = Eigen::MatrixXd::Zero(4, 4);
        spec.has_data.setConstant(4, 4, false);
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].kind != kind) continue;
            Eigen::Index r = std::find(session_counts, session_counts + 4,
                                       cells[i].n) -
                             session_counts;
            Eigen::Index c = std::find(minute_opts, minute_opts + 4,
                                       cells[i].m) -
                             minute_opts;
            spec.values(r, c) = result.report.rows[i].auc;
            spec.has_data(r, c) = true;
        }
        return spec;
    };
    result.between = make_map(SplitKind::between, "between");
    result.within = make_map(SplitKind::within, "within");

    if (!cfg.out_dir.empty()) {
        write_report_csv(result.report, cfg.out_dir / "report.csv");
        emit_heatmap(result.between, cfg.out_dir / "heatmap_duration_between.svg");
        emit_heatmap(result.within, cfg.out_dir / "heatmap_duration_within.svg");
    }
    return result;
}

void write_report_csv(const EvalReport& report,
                      const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "experiment,kind,cell,train_week,test_week,sessions,minutes,"
           "n_participants,n_units,accuracy,rank1,multiclass_auc,"
           "n_class_accuracy\n";
    for (const auto& r : report.rows) {
        out << r.experiment << ','
            << (r.kind == SplitKind::between ? "between" : "within") << ','
            << r.cell << ',' << r.train_week << ',' << r.test_week << ','
            << r.sessions << ',' << fmt(r.minutes) << ',' << r.n_participants
            << ',' << r.n_units << ',' << fmt(r.accuracy) << ',' << fmt(r.rank1)
            << ',' << fmt(r.auc) << ',' << fmt(r.n_class_acc) << '\n';
    }
}

EvalReport read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::getline(in, line);  // header
    EvalReport report;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 13)
            throw std::runtime_error("bad report row: " + line);
        EvalRow r;
        r.experiment = f[0];
        r.kind = f[1] == "between" ? SplitKind::between : SplitKind::within;
        r.cell = f[2];
        r.train_week = std::stoi(f[3]);
        r.test_week = std::stoi(f[4]);
        r.sessions = std::stoi(f[5]);
        r.minutes = std::stod(f[6]);
        r.n_participants = std::stoi(f[7]);
        r.n_units = std::stoul(f[8]);
        r.accuracy = std::stod(f[9]);
        r.rank1 = std::stod(f[10]);
        r.auc = std::stod(f[11]);
        r.n_class_acc = std::stod(f[12]);
        report.rows.push_back(r);
    }
    return report;
}

void render_report_figures(const EvalReport& report,
                           const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::vector<const EvalRow*> delay_rows, duration_rows;
    for (const auto& r : report.rows) {
        if (r.experiment == "delay-matrix") delay_rows.push_back(&r);
        if (r.experiment == "duration-grid") duration_rows.push_back(&r);
    }
    if (!delay_rows.empty()) {
        std::set<int> weeks;
        for (const auto* r : delay_rows) {
            weeks.insert(r->train_week);
            weeks.insert(r->test_week);
        }
        std::vector<int> wk(weeks.begin(), weeks.end());
        HeatmapSpec spec;
        spec.title = "Multiclass AUC by training and testing week";
        for (int w : wk) {
            spec.x_labels.push_back("test w" + std::to_string(w));
            spec.y_labels.push_back("train w" + std::to_string(w));
        }
        const Eigen::Index W = static_cast<Eigen::Index>(wk.size());
        spec.values = Eigen::MatrixXd::Zero(W, W);
        spec.has_data.setConstant(W, W, false);
        for (const auto* r : delay_rows) {
            Eigen::Index i = std::find(wk.begin(), wk.end(), r->train_week) -
                             wk.begin();
            Eigen::Index j = std::find(wk.begin(), wk.end(), r->test_week) -
                             wk.begin();
            spec.values(i, j) = r->auc;
            spec.has_data(i, j) = true;
        }
        emit_heatmap(spec, out_dir / "heatmap_delay.svg");
    }
    if (!duration_rows.empty()) {
        for (SplitKind kind : {SplitKind::between, SplitKind::within}) {
            std::set<int> sess;
            std::set<double> mins;
            for (const auto* r : duration_rows)
                if (r->kind == kind) {
                    sess.insert(r->sessions);
                    mins.insert(r->minutes);
                }
            if (sess.empty()) continue;
            std::vector<int> sv(sess.begin(), sess.end());
            std::vector<double> mv(mins.begin(), mins.end());
            HeatmapSpec spec;
            const char* name = kind == SplitKind::between ? "between" : "within";
            spec.title =
                std::string("Multiclass AUC, ") + name + "-session testing";
            for (double m : mv) spec.x_labels.push_back(fmt(m) + " min");
            for (int n : sv) spec.y_labels.push_back(std::to_string(n) + " sess");
            spec.values = Eigen::MatrixXd::Zero(
                static_cast<Eigen::Index>(sv.size()),
                static_cast<Eigen::Index>(mv.size()));
            spec.has_data.setConstant(static_cast<Eigen::Index>(sv.size()),
                                      static_cast<Eigen::Index>(mv.size()),
                                      false);
            for (const auto* r : duration_rows) {
                if (r->kind != kind) continue;
                Eigen::Index i =
                    std::find(sv.begin(), sv.end(), r->sessions) - sv.begin();
                Eigen::Index j =
                    std::find(mv.begin(), mv.end(), r->minutes) - mv.begin();
                spec.values(i, j) = r->auc;
                spec.has_data(i, j) = true;
            }
            emit_heatmap(spec,
                         out_dir / (std::string("heatmap_duration_") + name +
                                    ".svg"));
        }
    }
}

}  // namespace motid
