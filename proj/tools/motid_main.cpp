#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "motid/harness.hpp"
#include "motid/preprocess.hpp"
#include "motid/synthgen.hpp"
#include "motid/telemetry.hpp"

namespace fs = std::filesystem;
using namespace motid;

namespace {

int cmd_synth(const std::string& config_path, const std::string& out_dir,
              std::uint64_t seed, bool seed_set) {
    GenConfig cfg =
        config_path.empty() ? GenConfig{} : read_gen_config(config_path);
    if (seed_set) cfg.seed = seed;
    CorpusIndex idx = gen_corpus(cfg, out_dir);
    write_gen_config(cfg, fs::path(out_dir) / "gen_config.json");
    std::cout << "wrote " << idx.session_count() << " recordings for "
              << idx.entries.size() << " participants under " << out_dir << "\n";
    return 0;
}

int cmd_ingest(const std::string& telemetry_dir, const std::string& out_path) {
    CorpusIndex idx;
    std::size_t n = 0;
    for (const auto& entry : fs::directory_iterator(telemetry_dir)) {
        const fs::path& p = entry.path();
        if (p.extension() != ".jsonl") continue;
        fs::path meta = p;
        meta.replace_extension("");
        meta += ".meta.json";
        if (!fs::exists(meta)) {
            std::cerr << "warning: no sidecar for " << p << ", skipped\n";
            continue;
        }
        Recording r = load_recording(p, meta);
        auto diags = validate_recording(r);
        for (const auto& d : diags)
            if (d.kind != "tracking-loss")
                std::cerr << p.filename().string() << " frame " << d.frame
                          << ": " << d.kind << " (" << d.detail << ")\n";
        SessionEntry e;
        e.duration_s = r.duration();
        e.telemetry_path = p.string();
        e.sidecar_path = meta.string();
        idx.entries[r.participant_id][r.session_index] = e;
        ++n;
    }
    if (n == 0) {
        std::cerr << "error: no telemetry files found in " << telemetry_dir << "\n";
        return 2;
    }
    write_index(idx, out_path);
    std::cout << "indexed " << n << " recordings into " << out_path << "\n";
    return 0;
}

int cmd_preprocess(const std::string& index_path, const std::string& out_dir,
                   const std::string& mode_name) {
    CorpusIndex idx = read_index(index_path);
    WindowMode mode =
        mode_name == "infer" ? WindowMode::infer : WindowMode::train;
    fs::create_directories(out_dir);
    std::size_t total_windows = 0;
    for (auto& [pid, sessions] : idx.entries) {
        for (auto& [s, e] : sessions) {
            Recording r = load_recording(e.telemetry_path, e.sidecar_path);
            std::vector<Diagnostic> diags;
            FeatureStream stream = preprocess_recording(r, kFeatureRate, &diags);
            std::vector<FeatureWindow> windows;
            for (const auto& seg : stream.segments) {
                auto ws = make_windows(seg.rows, mode);
                for (auto& w : ws) {
                    w.participant = pid;
                    w.session = s;
                    w.start_t = seg.row_time(static_cast<std::size_t>(w.start_t));
                }
                windows.insert(windows.end(),
                               std::make_move_iterator(ws.begin()),
                               std::make_move_iterator(ws.end()));
            }
            fs::path fpath =
                fs::path(out_dir) / (pid + "_s" + std::to_string(s) + ".feat");
            write_feature_file(fpath, windows, mode);
            e.feature_path = fpath.string();
            total_windows += windows.size();
        }
    }
    write_index(idx, index_path);
    std::cout << "wrote " << total_windows << " windows under " << out_dir << "\n";
    return 0;
}

int cmd_run(const ExperimentConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    if (cfg.experiment == "table1") {
        EvalReport report = run_table1(cfg);
        for (const auto& r : report.rows)
            std::cout << r.cell << ": accuracy " << r.accuracy << ", AUC "
                      << r.auc << ", n-class " << r.n_class_acc << "\n";
    } else if (cfg.experiment == "delay-matrix") {
        DelayMatrixResult res = run_delay_matrix(cfg);
        std::cout << res.report.rows.size() << " cells; delay slope "
                  << res.fit.slope << " logits/week, pooled intercept "
                  << res.fit.pooled_intercept << "\n";
    } else if (cfg.experiment == "duration-grid") {
        DurationGridResult res = run_duration_grid(cfg);
        std::cout << res.report.rows.size() << " cells written\n";
    }
    std::cout << "report: " << (cfg.out_dir / "report.csv").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Motion identifiability pipeline"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    std::string synth_config, synth_out = "corpus";
    std::uint64_t synth_seed = 0;
    synth->add_option("--config", synth_config, "generator config JSON");
    synth->add_option("--out", synth_out, "output corpus directory");
    auto* seed_opt = synth->add_option("--seed", synth_seed, "override seed");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "index a telemetry directory");
    std::string ingest_dir, ingest_out = "index.json";
    ingest->add_option("--telemetry", ingest_dir, "telemetry directory")
        ->required();
    ingest->add_option("--out", ingest_out, "index output path");

    // preprocess
    auto* prep = app.add_subcommand("preprocess", "write feature files");
    std::string prep_index, prep_out = "features", prep_mode = "train";
    prep->add_option("--index", prep_index, "corpus index")->required();
    prep->add_option("--out", prep_out, "feature output directory");
    prep->add_option("--mode", prep_mode, "train|infer")
        ->check(CLI::IsMember({"train", "infer"}));

    // run
    auto* run = app.add_subcommand("run", "run an experiment");
    ExperimentConfig ecfg;
    std::string run_experiment, run_index, run_out = "out";
    std::string run_classifier = "baseline", run_aggregate = "logsum";
    run->add_option("experiment", run_experiment, "table1|delay-matrix|duration-grid")
        ->required()
        ->check(CLI::IsMember({"table1", "delay-matrix", "duration-grid"}));
    run->add_option("--index", run_index, "corpus index")->required();
    run->add_option("--out", run_out, "output directory");
    run->add_option("--seed", ecfg.seed, "experiment seed")->required();
    run->add_option("--classifier", run_classifier, "funnel|baseline")
        ->check(CLI::IsMember({"funnel", "baseline"}));
    run->add_option("--aggregate", run_aggregate, "logsum|vote")
        ->check(CLI::IsMember({"logsum", "vote"}));
    run->add_option("--workers", ecfg.workers, "concurrent cells");
    run->add_option("--min-sessions", ecfg.min_sessions,
                    "participant eligibility: session floor");
    run->add_option("--min-total-seconds", ecfg.min_total_seconds,
                    "participant eligibility: total data floor");
    run->add_option("--metric-n", ecfg.metric_n, "N for N-class accuracy");
    std::vector<int> widths, train_weeks, test_weeks;
    run->add_option("--funnel-widths", widths, "funnel layer widths");
    run->add_option("--funnel-epochs", ecfg.funnel.max_epochs, "max epochs");
    run->add_option("--train-weeks", train_weeks,
                    "table1: weeks used for training");
    run->add_option("--test-weeks", test_weeks, "table1: weeks used for testing");

    // report
    auto* rep = app.add_subcommand("report", "re-render figures from a report CSV");
    std::string rep_csv, rep_out = "figures";
    rep->add_option("--csv", rep_csv, "report CSV")->required();
    rep->add_option("--out", rep_out, "figure output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors -> 1
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_config, synth_out, synth_seed,
                             seed_opt->count() > 0);
        if (ingest->parsed()) return cmd_ingest(ingest_dir, ingest_out);
        if (prep->parsed()) return cmd_preprocess(prep_index, prep_out, prep_mode);
        if (run->parsed()) {
            ecfg.experiment = run_experiment;
            ecfg.corpus_index = run_index;
            ecfg.out_dir = run_out;
            ecfg.classifier = run_classifier;
            ecfg.aggregate = run_aggregate == "vote" ? AggregateMode::vote
                                                     : AggregateMode::logsum;
            if (!widths.empty()) ecfg.funnel.widths = widths;
            if (!train_weeks.empty())
                ecfg.train_weeks = {train_weeks.begin(), train_weeks.end()};
            if (!test_weeks.empty())
                ecfg.test_weeks = {test_weeks.begin(), test_weeks.end()};
            return cmd_run(ecfg);
        }
        if (rep->parsed()) {
            render_report_figures(read_report_csv(rep_csv), rep_out);
            std::cout << "figures written to " << rep_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
