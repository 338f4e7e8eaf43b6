#include "motid/synthgen.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "motid/rng.hpp"

namespace motid {

using nlohmann::json;

namespace {

constexpr std::uint64_t kProfileStream = 0x50524F46;  // profile draws
constexpr std::uint64_t kDriftStream = 0x44524946;    // random-walk steps
constexpr std::uint64_t kSessionStream = 0x53455353;  // phases + noise
constexpr std::uint64_t kThinStream = 0x5448494E;     // session thinning

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

struct Sinusoid {
    double amp, freq, phase;
    double at(double t) const { return amp * std::sin(2.0 * M_PI * freq * t + phase); }
};

}  // namespace

ParticipantProfile gen_profile(std::uint64_t seed, int participant_index) {
    auto rng = make_rng(seed, kProfileStream, static_cast<std::uint64_t>(participant_index));
    ParticipantProfile p;
    p.height = uniform(rng, 1.5, 1.9);
    p.arm_length = uniform(rng, 0.55, 0.75);
    auto jitter = [&] { return uniform(rng, -0.05, 0.05); };
    p.left_rest = p.arm_length * Eigen::Vector3d(-0.40, -0.62, -0.46) +
                  Eigen::Vector3d(jitter(), jitter(), jitter());
    p.right_rest = p.arm_length * Eigen::Vector3d(0.40, -0.62, -0.46) +
                   Eigen::Vector3d(jitter(), jitter(), jitter());
    for (int i = 0; i < 2; ++i) p.head_freqs.push_back(uniform(rng, 0.2, 0.8));
    for (int i = 0; i < 3; ++i) p.left_freqs.push_back(uniform(rng, 0.4, 2.0));
    for (int i = 0; i < 3; ++i) p.right_freqs.push_back(uniform(rng, 0.4, 2.0));
    p.gesture_amp = uniform(rng, 0.06, 0.18);
    p.noise_scale = uniform(rng, 0.005, 0.02);
    return p;
}

ParticipantProfile drifted_profile(const ParticipantProfile& profile, int week,
                                   const DriftModel& drift, std::uint64_t seed) {
    ParticipantProfile p = profile;
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int w = 2; w <= week; ++w) {
        auto rng = make_rng(seed, kDriftStream, static_cast<std::uint64_t>(w));
        p.height += drift.height_sd * gauss(rng);
        p.arm_length += drift.arm_sd * gauss(rng);
        for (int c = 0; c < 3; ++c) p.left_rest[c] += drift.rest_sd * gauss(rng);
        for (int c = 0; c < 3; ++c) p.right_rest[c] += drift.rest_sd * gauss(rng);
        for (double& f : p.head_freqs) f += drift.freq_sd * gauss(rng);
        for (double& f : p.left_freqs) f += drift.freq_sd * gauss(rng);
        for (double& f : p.right_freqs) f += drift.freq_sd * gauss(rng);
        p.gesture_amp += drift.amp_sd * gauss(rng);
        p.noise_scale += drift.noise_sd * gauss(rng);
    }
    // keep the drifted parameters physically sane
    p.height = std::clamp(p.height, 1.4, 2.1);
    p.arm_length = std::clamp(p.arm_length, 0.45, 0.85);
    for (double& f : p.head_freqs) f = std::clamp(f, 0.1, 3.0);
    for (double& f : p.left_freqs) f = std::clamp(f, 0.1, 3.0);
    for (double& f : p.right_freqs) f = std::clamp(f, 0.1, 3.0);
    p.gesture_amp = std::max(0.01, p.gesture_amp);
    p.noise_scale = std::max(0.001, p.noise_scale);
    return p;
}

Recording gen_session(const ParticipantProfile& profile, int week,
                      double minutes, double rate, const DriftModel& drift,
                      std::uint64_t seed) {
    ParticipantProfile p = drifted_profile(profile, week, drift, seed);

    auto rng = make_rng(seed, kSessionStream, static_cast<std::uint64_t>(week));
    auto phase = [&] { return uniform(rng, 0.0, 2.0 * M_PI); };

    // Head position sway (x, y, z) + orientation sway (yaw, pitch, roll).
    Sinusoid head_pos[3] = {{0.04, p.head_freqs[0], phase()},
                            {0.03, p.head_freqs[1], phase()},
                            {0.04, p.head_freqs[0] * 0.77, phase()}};
    Sinusoid head_rot[3] = {{0.25, p.head_freqs[0] * 0.31, phase()},
                            {0.12, p.head_freqs[1] * 0.83, phase()},
                            {0.06, p.head_freqs[0] * 0.53, phase()}};

    // Each hand: 3 sinusoids per position axis, 3 for orientation Euler angles.
    double rot_amp = 0.35 * (p.gesture_amp / 0.12);
    auto make_hand = [&](const std::vector<double>& freqs, Sinusoid pos[3][3],
                         Sinusoid rot[3]) {
        const double axis_scale[3] = {1.0, 0.8, 0.6};
        const double sin_scale[3] = {0.6, 0.3, 0.15};
        for (int a = 0; a < 3; ++a)
            for (int i = 0; i < 3; ++i)
                pos[a][i] = {p.gesture_amp * axis_scale[a] * sin_scale[i],
                             freqs[i] * (1.0 + 0.13 * a), phase()};
        for (int a = 0; a < 3; ++a)
            rot[a] = {rot_amp * axis_scale[a], freqs[(a + 1) % 3] * 1.3, phase()};
    };
    Sinusoid left_pos[3][3], right_pos[3][3], left_rot[3], right_rot[3];
    make_hand(p.left_freqs, left_pos, left_rot);
    make_hand(p.right_freqs, right_pos, right_rot);

    std::normal_distribution<double> gauss(0.0, 1.0);
    // explicit return type: the deduced Eigen expression would reference a
    // dead temporary
    auto noise3 = [&]() -> Eigen::Vector3d {
        return p.noise_scale *
               Eigen::Vector3d(gauss(rng), gauss(rng), gauss(rng));
    };
    auto noise_rot = [&] {
        Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
        if (axis.norm() < 1e-12) axis = Eigen::Vector3d::UnitX();
        return Quaternion::from_axis_angle(axis, p.noise_scale * gauss(rng));
    };

    Recording r;
    r.nominal_rate = rate;
    r.session_index = week;
    const std::size_t n = static_cast<std::size_t>(minutes * 60.0 * rate);
    r.frames.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        double t = k / rate;
        PoseFrame f;
        f.t = t;
        double yaw = head_rot[0].at(t);
        Eigen::Vector3d hp(head_pos[0].at(t), p.height + head_pos[1].at(t),
                           head_pos[2].at(t));
        f.head.position = hp + noise3();
        f.head.orientation =
            (Quaternion::from_euler(yaw, head_rot[1].at(t), head_rot[2].at(t)) *
             noise_rot())
                .normalized();

        Quaternion yaw_q = Quaternion::from_yaw(yaw);
        auto hand = [&](const Eigen::Vector3d& rest, Sinusoid pos[3][3],
                        Sinusoid rot[3]) {
            Eigen::Vector3d g;
            for (int a = 0; a < 3; ++a) {
                g[a] = 0.0;
                for (int i = 0; i < 3; ++i) g[a] += pos[a][i].at(t);
            }
            DevicePose d;
            d.position = hp + yaw_q.rotate(rest + g) + noise3();
            d.orientation = (yaw_q *
                             Quaternion::from_euler(rot[0].at(t), rot[1].at(t),
                                                    rot[2].at(t)) *
                             noise_rot())
                                .normalized();
            return d;
        };
        f.left = hand(p.left_rest, left_pos, left_rot);
        f.right = hand(p.right_rest, right_pos, right_rot);
        r.frames.push_back(f);
    }
    return r;
}

std::vector<Recording> gen_corpus_recordings(const GenConfig& cfg) {
    std::vector<Recording> out;
    for (int i = 0; i < cfg.n_participants; ++i) {
        char pid[16];
        std::snprintf(pid, sizeof(pid), "P%03d", i);
        ParticipantProfile profile = gen_profile(cfg.seed, i);
        std::uint64_t pseed = mix_seed(cfg.seed, fnv1a(pid));
        for (int w = 1; w <= cfg.weeks; ++w) {
            if (cfg.thinning > 0.0) {
                auto trng = make_rng(cfg.seed, kThinStream, fnv1a(pid), w);
                if (std::uniform_real_distribution<double>(0.0, 1.0)(trng) <
                    cfg.thinning)
                    continue;
            }
            Recording r = gen_session(profile, w, cfg.minutes_per_session,
                                      cfg.rate, cfg.drift, pseed);
            r.participant_id = pid;
            out.push_back(std::move(r));
        }
    }
    return out;
}

CorpusIndex gen_corpus(const GenConfig& cfg, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "telemetry");
    CorpusIndex idx;
    for (int i = 0; i < cfg.n_participants; ++i) {
        char pid[16];
        std::snprintf(pid, sizeof(pid), "P%03d", i);
        ParticipantProfile profile = gen_profile(cfg.seed, i);
        std::uint64_t pseed = mix_seed(cfg.seed, fnv1a(pid));
        for (int w = 1; w <= cfg.weeks; ++w) {
            if (cfg.thinning > 0.0) {
                auto trng = make_rng(cfg.seed, kThinStream, fnv1a(pid), w);
                if (std::uniform_real_distribution<double>(0.0, 1.0)(trng) <
                    cfg.thinning)
                    continue;
            }
            Recording r = gen_session(profile, w, cfg.minutes_per_session,
                                      cfg.rate, cfg.drift, pseed);
            r.participant_id = pid;
            std::string stem = std::string(pid) + "_s" + std::to_string(w);
            fs::path tele = out_dir / "telemetry" / (stem + ".jsonl");
            fs::path meta = out_dir / "telemetry" / (stem + ".meta.json");
            write_recording(r, tele, meta);
            SessionEntry e;
            e.duration_s = r.duration();
            e.telemetry_path = tele.string();
            e.sidecar_path = meta.string();
            idx.entries[pid][w] = e;
        }
    }
    write_index(idx, out_dir / "index.json");
    return idx;
}

GenConfig read_gen_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    json j = json::parse(in);
    GenConfig c;
    c.n_participants = j.value("n_participants", c.n_participants);
    c.weeks = j.value("weeks", c.weeks);
    c.minutes_per_session = j.value("minutes_per_session", c.minutes_per_session);
    c.rate = j.value("rate", c.rate);
    c.thinning = j.value("thinning", c.thinning);
    c.seed = j.value("seed", c.seed);
    if (j.contains("drift")) {
        const json& d = j.at("drift");
        c.drift.height_sd = d.value("height_sd", 0.0);
        c.drift.arm_sd = d.value("arm_sd", 0.0);
        c.drift.rest_sd = d.value("rest_sd", 0.0);
        c.drift.freq_sd = d.value("freq_sd", 0.0);
        c.drift.amp_sd = d.value("amp_sd", 0.0);
        c.drift.noise_sd = d.value("noise_sd", 0.0);
    }
    return c;
}

void write_gen_config(const GenConfig& cfg, const std::filesystem::path& path) {
    json j = {{"n_participants", cfg.n_participants},
              {"weeks", cfg.weeks},
              {"minutes_per_session", cfg.minutes_per_session},
              {"rate", cfg.rate},
              {"thinning", cfg.thinning},
              {"seed", cfg.seed},
              {"drift",
               {{"height_sd", cfg.drift.height_sd},
                {"arm_sd", cfg.drift.arm_sd},
                {"rest_sd", cfg.drift.rest_sd},
                {"freq_sd", cfg.drift.freq_sd},
                {"amp_sd", cfg.drift.amp_sd},
                {"noise_sd", cfg.drift.noise_sd}}}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace motid
