#include "motid/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "motid/rng.hpp"

namespace motid {

using nlohmann::json;

namespace {
constexpr double kMinTrainSpanSeconds = 30.0;
constexpr double kMinDurationCellSessionSeconds = 480.0;  // 8 minutes
}  // namespace

std::set<int> CorpusIndex::weeks() const {
    std::set<int> w;
    for (const auto& [pid, sessions] : entries)
        for (const auto& [s, e] : sessions) w.insert(s);
    return w;
}

std::size_t CorpusIndex::session_count() const {
    std::size_t n = 0;
    for (const auto& [pid, sessions] : entries) n += sessions.size();
    return n;
}

CorpusIndex filter_participants(const CorpusIndex& idx, int min_sessions,
                                double min_total_seconds) {
    CorpusIndex out;
    for (const auto& [pid, sessions] : idx.entries) {
        double total = 0.0;
        for (const auto& [s, e] : sessions) total += e.duration_s;
        if (static_cast<int>(sessions.size()) >= min_sessions &&
            total >= min_total_seconds)
            out.entries[pid] = sessions;
    }
    return out;
}

SplitPlan plan_between(const CorpusIndex& idx, const std::set<int>& train_weeks,
                       const std::set<int>& test_weeks) {
    for (int w : train_weeks)
        if (test_weeks.count(w))
            throw std::invalid_argument("plan_between: overlapping week sets");
    SplitPlan plan;
    plan.kind = SplitKind::between;
    plan.train_weeks.assign(train_weeks.begin(), train_weeks.end());
    plan.test_weeks.assign(test_weeks.begin(), test_weeks.end());
    for (const auto& [pid, sessions] : idx.entries) {
        bool has_train = false;
        for (const auto& [s, e] : sessions)
            if (train_weeks.count(s)) {
                plan.train.push_back({pid, s, 0.0, e.duration_s});
                has_train = true;
            }
        if (!has_train) continue;
        for (const auto& [s, e] : sessions)
            if (test_weeks.count(s)) plan.test.push_back({pid, s, 0.0, e.duration_s});
    }
    return plan;
}

SplitPlan plan_within(const CorpusIndex& idx, double train_fraction,
                      double buffer_seconds) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("plan_within: train_fraction must be in (0,1)");
    SplitPlan plan;
    plan.kind = SplitKind::within;
    for (const auto& [pid, sessions] : idx.entries) {
        for (const auto& [s, e] : sessions) {
            double d = e.duration_s;
            double train_end = train_fraction * d - buffer_seconds;
            if (train_end < kMinTrainSpanSeconds) continue;
            plan.train.push_back({pid, s, 0.0, train_end});
            plan.test.push_back({pid, s, train_fraction * d, d});
            if (std::find(plan.train_weeks.begin(), plan.train_weeks.end(), s) ==
                plan.train_weeks.end()) {
                plan.train_weeks.push_back(s);
                plan.test_weeks.push_back(s);
            }
        }
    }
    std::sort(plan.train_weeks.begin(), plan.train_weeks.end());
    std::sort(plan.test_weeks.begin(), plan.test_weeks.end());
    return plan;
}

SplitPlan plan_delay_cell(const CorpusIndex& idx, int train_week,
                          int test_week) {
    if (train_week == test_week)
        throw std::invalid_argument("plan_delay_cell: weeks must differ");
    SplitPlan plan =
        plan_between(idx, {train_week}, {test_week});
    plan.delay_weeks = test_week - train_week;
    return plan;
}

SplitPlan plan_duration_cell(const CorpusIndex& idx, int n_sessions,
                             double minutes, std::uint64_t seed,
                             SplitKind kind) {
    SplitPlan plan;
    plan.kind = kind;
    plan.sessions_per_participant = n_sessions;
    plan.per_session_minutes = minutes;
    for (const auto& [pid, sessions] : idx.entries) {
        std::vector<int> eligible;
        for (const auto& [s, e] : sessions)
            if (e.duration_s >= kMinDurationCellSessionSeconds) eligible.push_back(s);
        if (eligible.size() < 2) continue;  // cannot leave a test session

        // Seeded Fisher-Yates keyed only by (seed, participant): the first k
        // entries of the permutation are the chosen sessions, so choices are
        // nested across n_sessions.
        auto rng = make_rng(seed, fnv1a(pid));
        for (std::size_t i = eligible.size() - 1; i > 0; --i)
            std::swap(eligible[i], eligible[rng() % (i + 1)]);
        std::size_t k = std::min<std::size_t>(n_sessions, eligible.size() - 1);
        std::vector<int> chosen(eligible.begin(), eligible.begin() + k);
        std::sort(chosen.begin(), chosen.end());
        std::vector<int> held_out(eligible.begin() + k, eligible.end());
        std::sort(held_out.begin(), held_out.end());

        for (int s : chosen) {
            double d = sessions.at(s).duration_s;
            double max_train = 0.8 * d - 120.0;
            double span = std::min(minutes * 60.0, max_train);
            if (span < kMinTrainSpanSeconds) continue;
            plan.train.push_back({pid, s, 0.0, span});
            if (kind == SplitKind::within)
                plan.test.push_back({pid, s, 0.8 * d, d});
        }
        if (kind == SplitKind::between)
            for (int s : held_out)
                plan.test.push_back({pid, s, 0.0, sessions.at(s).duration_s});
    }
    return plan;
}

std::vector<std::string> validate_plan(const SplitPlan& plan,
                                       const CorpusIndex& idx,
                                       double buffer_seconds) {
    std::vector<std::string> issues;
    auto span_key = [](const SpanAssign& a) {
        return a.participant + "#" + std::to_string(a.session);
    };
    auto check_span = [&](const SpanAssign& a, const char* role) {
        auto pit = idx.entries.find(a.participant);
        if (pit == idx.entries.end()) {
            issues.push_back(std::string(role) + ": unknown participant " + a.participant);
            return;
        }
        auto sit = pit->second.find(a.session);
        if (sit == pit->second.end()) {
            issues.push_back(std::string(role) + ": unknown session " + span_key(a));
            return;
        }
        if (a.start_s < -1e-9 || a.end_s > sit->second.duration_s + 1e-9 ||
            a.end_s <= a.start_s)
            issues.push_back(std::string(role) + ": bad span " + span_key(a));
    };
    for (const auto& a : plan.train) check_span(a, "train");
    for (const auto& a : plan.test) check_span(a, "test");

    std::set<std::string> train_participants, train_sessions;
    std::map<std::string, double> train_end_by_session;
    for (const auto& a : plan.train) {
        train_participants.insert(a.participant);
        train_sessions.insert(span_key(a));
        auto& e = train_end_by_session[span_key(a)];
        e = std::max(e, a.end_s);
    }
    for (const auto& a : plan.test) {
        if (!train_participants.count(a.participant))
            issues.push_back("test participant not enrolled: " + a.participant);
        auto it = train_end_by_session.find(span_key(a));
        if (plan.kind == SplitKind::between) {
            if (it != train_end_by_session.end())
                issues.push_back("between plan reuses session " + span_key(a));
        } else if (it != train_end_by_session.end() &&
                   a.start_s < it->second + buffer_seconds - 1e-9) {
            issues.push_back("within plan violates buffer at " + span_key(a));
        }
    }
    return issues;
}

namespace {

json spans_to_json(const std::vector<SpanAssign>& spans, const char* role) {
    json arr = json::array();
    for (const auto& a : spans)
        arr.push_back({{"participant", a.participant},
                       {"session", a.session},
                       {"start_s", a.start_s},
                       {"end_s", a.end_s},
                       {"role", role}});
    return arr;
}

void spans_from_json(const json& arr, std::vector<SpanAssign>& out) {
    for (const auto& j : arr)
        out.push_back({j.at("participant").get<std::string>(),
                       j.at("session").get<int>(), j.at("start_s").get<double>(),
                       j.at("end_s").get<double>()});
}

}  // namespace

void write_index(const CorpusIndex& idx, const std::filesystem::path& path) {
    json parts = json::object();
    for (const auto& [pid, sessions] : idx.entries) {
        json js = json::object();
        for (const auto& [s, e] : sessions) {
            js[std::to_string(s)] = {{"duration_s", e.duration_s},
                                     {"telemetry", e.telemetry_path},
                                     {"sidecar", e.sidecar_path},
                                     {"features", e.feature_path}};
        }
        parts[pid] = js;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << json{{"participants", parts}}.dump(2) << "\n";
}

CorpusIndex read_index(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    json j = json::parse(in);
    CorpusIndex idx;
    for (const auto& [pid, sessions] : j.at("participants").items()) {
        for (const auto& [s, e] : sessions.items()) {
            SessionEntry entry;
            entry.duration_s = e.at("duration_s").get<double>();
            entry.telemetry_path = e.value("telemetry", "");
            entry.sidecar_path = e.value("sidecar", "");
            entry.feature_path = e.value("features", "");
            idx.entries[pid][std::stoi(s)] = entry;
        }
    }
    return idx;
}

void write_plan(const SplitPlan& plan, const std::filesystem::path& path) {
    json j = {{"kind", plan.kind == SplitKind::between ? "between" : "within"},
              {"train", spans_to_json(plan.train, "train")},
              {"test", spans_to_json(plan.test, "test")},
              {"metadata",
               {{"train_weeks", plan.train_weeks},
                {"test_weeks", plan.test_weeks},
                {"per_session_minutes", plan.per_session_minutes},
                {"sessions_per_participant", plan.sessions_per_participant},
                {"delay_weeks", plan.delay_weeks}}}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

SplitPlan read_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    json j = json::parse(in);
    SplitPlan plan;
    plan.kind = j.at("kind").get<std::string>() == "between" ? SplitKind::between
                                                             : SplitKind::within;
    spans_from_json(j.at("train"), plan.train);
    spans_from_json(j.at("test"), plan.test);
    const json& m = j.at("metadata");
    plan.train_weeks = m.at("train_weeks").get<std::vector<int>>();
    plan.test_weeks = m.at("test_weeks").get<std::vector<int>>();
    plan.per_session_minutes = m.at("per_session_minutes").get<double>();
    plan.sessions_per_participant = m.at("sessions_per_participant").get<int>();
    plan.delay_weeks = m.at("delay_weeks").get<int>();
    return plan;
}

}  // namespace motid
