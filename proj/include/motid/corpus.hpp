#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace motid {

struct SessionEntry {
    double duration_s = 0.0;
    std::string telemetry_path;
    std::string sidecar_path;
    std::string feature_path;  // optional, filled by preprocessing
};

struct CorpusIndex {
    // participant -> session(week) -> entry
    std::map<std::string, std::map<int, SessionEntry>> entries;

    std::set<int> weeks() const;
    std::size_t session_count() const;
};

enum class SplitKind { between, within };

struct SpanAssign {
    std::string participant;
    int session = 0;
    double start_s = 0.0;
    double end_s = 0.0;
};

struct SplitPlan {
    SplitKind kind = SplitKind::between;
    std::vector<SpanAssign> train;
    std::vector<SpanAssign> test;
    // metadata
    std::vector<int> train_weeks, test_weeks;
    double per_session_minutes = 0.0;      // duration-grid cells
    int sessions_per_participant = 0;      // duration-grid cells
    int delay_weeks = 0;                   // delay cells, signed test - train
};

// Retains participants with at least min_sessions sessions and at least
// min_total_seconds of data.
CorpusIndex filter_participants(const CorpusIndex& idx, int min_sessions = 5,
                                double min_total_seconds = 7200.0);

// All data in train_weeks trains; test_weeks sessions of train-represented
// participants test. Throws on overlapping week sets.
SplitPlan plan_between(const CorpusIndex& idx,
                       const std::set<int>& train_weeks = {1, 2, 3, 4, 5, 6},
                       const std::set<int>& test_weeks = {7, 8});

// Per session of duration D: train [0, f*D - buffer], test [f*D, D].
// Sessions whose train span would fall under 30 s are excluded.
SplitPlan plan_within(const CorpusIndex& idx, double train_fraction = 0.8,
                      double buffer_seconds = 120.0);

// One ordered (train_week, test_week) cell of the delay matrix.
SplitPlan plan_delay_cell(const CorpusIndex& idx, int train_week, int test_week);

// One cell of the duration grid: per participant, up to n_sessions randomly
// chosen sessions (always leaving one for between-session testing), start-
// anchored train spans of up to `minutes` per session. Sessions shorter than
// 480 s are dropped; participants left with fewer than 2 eligible sessions
// are excluded. Session choice depends only on (seed, participant) and is
// nested across n_sessions so that larger requests extend smaller ones.
SplitPlan plan_duration_cell(const CorpusIndex& idx, int n_sessions,
                             double minutes, std::uint64_t seed,
                             SplitKind kind);

// Independent audit of a plan against its index; returns human-readable
// violations, empty when clean.
std::vector<std::string> validate_plan(const SplitPlan& plan,
                                       const CorpusIndex& idx,
                                       double buffer_seconds = 120.0);

void write_index(const CorpusIndex& idx, const std::filesystem::path& path);
CorpusIndex read_index(const std::filesystem::path& path);

void write_plan(const SplitPlan& plan, const std::filesystem::path& path);
SplitPlan read_plan(const std::filesystem::path& path);

}  // namespace motid
