#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "motid/harness.hpp"
#include "motid/synthgen.hpp"

using namespace motid;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Minimal XML well-formedness check: tags balance and nest properly.
bool xml_well_formed(const std::string& text) {
    std::vector<std::string> stack;
    std::size_t i = text.find('<');
    while (i != std::string::npos) {
        std::size_t close = text.find('>', i);
        if (close == std::string::npos) return false;
        std::string tag = text.substr(i + 1, close - i - 1);
        if (!tag.empty() && tag[0] == '?') {
            // declaration
        } else if (!tag.empty() && tag[0] == '!') {
            // comment / doctype
        } else if (!tag.empty() && tag[0] == '/') {
            std::string name = tag.substr(1);
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
        } else if (!tag.empty() && tag.back() == '/') {
            // self-closing
        } else if (!tag.empty()) {
            std::string name = tag.substr(0, tag.find_first_of(" \t\n"));
            stack.push_back(name);
        }
        i = text.find('<', close);
    }
    return stack.empty();
}

// One small zero-drift corpus shared by the harness tests: 4 participants,
// 4 weekly sessions of 9 minutes (long enough for every planner).
const fs::path& corpus_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "motid_harness_corpus";
        if (!fs::exists(d / "index.json")) {
            GenConfig cfg;
            cfg.n_participants = 4;
            cfg.weeks = 4;
            cfg.minutes_per_session = 9.0;
            cfg.seed = 11;
            gen_corpus(cfg, d);
        }
        return d;
    }();
    return dir;
}

ExperimentConfig base_config(const std::string& experiment, const fs::path& out) {
    ExperimentConfig cfg;
    cfg.corpus_index = corpus_dir() / "index.json";
    cfg.experiment = experiment;
    cfg.seed = 7;
    cfg.out_dir = out;
    cfg.min_sessions = 1;
    cfg.min_total_seconds = 0.0;
    cfg.train_weeks = {1, 2, 3};
    cfg.test_weeks = {4};
    return cfg;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("table1 on a strong-signal corpus is near-perfect") {
    fs::path out = fs::temp_directory_path() / "motid_t1_out";
    fs::remove_all(out);
    fs::create_directories(out);
    EvalReport report = run_table1(base_config("table1", out));
    REQUIRE(report.rows.size() == 4);
    for (const auto& r : report.rows) {
        CHECK(r.experiment == "table1");
        CHECK(r.n_participants == 4);
        CHECK(r.n_units >= 4);
        CHECK(r.accuracy >= 0.95);
        CHECK(r.auc >= 0.95);
        CHECK(r.n_class_acc >= 0.0);
        CHECK(r.n_class_acc <= 1.0);
    }
    // emitted plans revalidate independently
    CorpusIndex idx = read_index(corpus_dir() / "index.json");
    for (const char* name : {"table1_between.json", "table1_within.json"}) {
        SplitPlan plan = read_plan(out / "plans" / name);
        CHECK(validate_plan(plan, idx).empty());
    }
    CHECK(fs::exists(out / "report.csv"));
    fs::remove_all(out);
}

TEST_CASE("delay matrix covers all ordered week pairs deterministically") {
    fs::path out_a = fs::temp_directory_path() / "motid_dm_a";
    fs::path out_b = fs::temp_directory_path() / "motid_dm_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);
    fs::create_directories(out_a);
    fs::create_directories(out_b);

    DelayMatrixResult res = run_delay_matrix(base_config("delay-matrix", out_a));
    CHECK(res.report.rows.size() == 12);  // 4 weeks -> 4*3 cells
    CHECK(res.observations.size() == 12);
    CHECK(res.heatmap.x_labels.size() == 4);
    CHECK(res.heatmap.values.rows() == 4);
    for (int w = 0; w < 4; ++w) CHECK(!res.heatmap.has_data(w, w));
    for (const auto& o : res.observations) CHECK(o.delay() >= 1);

    // determinism: identical corpus + config + seed -> byte-identical CSV
    run_delay_matrix(base_config("delay-matrix", out_b));
    CHECK(slurp(out_a / "report.csv") == slurp(out_b / "report.csv"));

    // emitted plans revalidate
    CorpusIndex idx = read_index(corpus_dir() / "index.json");
    std::size_t n_plans = 0;
    for (const auto& entry : fs::directory_iterator(out_a / "plans")) {
        SplitPlan plan = read_plan(entry.path());
        CHECK(validate_plan(plan, idx).empty());
        ++n_plans;
    }
    CHECK(n_plans == 12);

    CHECK(fs::exists(out_a / "delay_fit.json"));
    CHECK(xml_well_formed(slurp(out_a / "heatmap_delay.svg")));
    fs::remove_all(out_a);
    fs::remove_all(out_b);
}

TEST_CASE("duration grid produces 32 cells and both heatmaps") {
    fs::path out = fs::temp_directory_path() / "motid_dg_out";
    fs::remove_all(out);
    fs::create_directories(out);
    DurationGridResult res = run_duration_grid(base_config("duration-grid", out));
    CHECK(res.report.rows.size() == 32);
    CHECK(res.between.values.rows() == 4);
    CHECK(res.within.values.rows() == 4);
    for (const auto& r : res.report.rows) {
        CHECK(r.sessions >= 1);
        CHECK(r.minutes >= 1.0);
        CHECK(r.auc >= 0.0);
        CHECK(r.auc <= 1.0);
    }
    CorpusIndex idx = read_index(corpus_dir() / "index.json");
    for (const auto& entry : fs::directory_iterator(out / "plans"))
        CHECK(validate_plan(read_plan(entry.path()), idx).empty());
    CHECK(xml_well_formed(slurp(out / "heatmap_duration_between.svg")));
    CHECK(xml_well_formed(slurp(out / "heatmap_duration_within.svg")));
    fs::remove_all(out);
}

TEST_CASE("report CSV round-trips") {
    EvalReport report;
    EvalRow r;
    r.experiment = "delay-matrix";
    r.cell = "train w1 test w3";
    r.kind = SplitKind::between;
    r.train_week = 1;
    r.test_week = 3;
    r.n_participants = 17;
    r.n_units = 34;
    r.accuracy = 0.8125;
    r.rank1 = 0.8125;
    r.auc = 0.912345678901;
    r.n_class_acc = 0.75;
    report.rows.push_back(r);

    fs::path p = fs::temp_directory_path() / "motid_report_test.csv";
    write_report_csv(report, p);
    EvalReport back = read_report_csv(p);
    fs::remove(p);
    REQUIRE(back.rows.size() == 1);
    CHECK(back.rows[0].experiment == "delay-matrix");
    CHECK(back.rows[0].cell == "train w1 test w3");
    CHECK(back.rows[0].train_week == 1);
    CHECK(back.rows[0].test_week == 3);
    CHECK(back.rows[0].n_units == 34);
    CHECK(back.rows[0].accuracy == 0.8125);
    CHECK(back.rows[0].auc == 0.912345678901);
}

TEST_CASE("emit_heatmap renders extremes and hatches missing cells") {
    HeatmapSpec spec;
    spec.title = "unit test grid";
    spec.x_labels = {"c0", "c1"};
    spec.y_labels = {"r0", "r1"};
    spec.values.resize(2, 2);
    spec.values << 0.0, 1.0, 1.0, 0.0;
    spec.has_data.setConstant(2, 2, true);
    spec.has_data(1, 1) = false;

    fs::path p = fs::temp_directory_path() / "motid_heatmap_test.svg";
    emit_heatmap(spec, p);
    std::string svg = slurp(p);
    fs::remove(p);
    CHECK(xml_well_formed(svg));
    CHECK(svg.find("0.000") != std::string::npos);
    CHECK(svg.find("1.000") != std::string::npos);
    CHECK(svg.find("nodata") != std::string::npos);
    CHECK(svg.find("unit test grid") != std::string::npos);
}

TEST_CASE("render_report_figures rebuilds figures from a CSV") {
    fs::path out = fs::temp_directory_path() / "motid_render_out";
    fs::remove_all(out);
    EvalReport report;
    for (int t = 1; t <= 3; ++t)
        for (int s = 1; s <= 3; ++s) {
            if (t == s) continue;
            EvalRow r;
            r.experiment = "delay-matrix";
            r.kind = SplitKind::between;
            r.cell = "train w" + std::to_string(t) + " test w" + std::to_string(s);
            r.train_week = t;
            r.test_week = s;
            r.auc = 0.5 + 0.05 * t;
            report.rows.push_back(r);
        }
    render_report_figures(report, out);
    CHECK(fs::exists(out / "heatmap_delay.svg"));
    CHECK(xml_well_formed(slurp(out / "heatmap_delay.svg")));
    fs::remove_all(out);
}

TEST_CASE("undersized corpus is rejected") {
    ExperimentConfig cfg = base_config("table1", "");
    cfg.min_sessions = 99;  // filters everyone out
    CHECK_THROWS_WITH_AS(run_table1(cfg), doctest::Contains("too small"),
                         std::runtime_error);
}

}  // TEST_SUITE
