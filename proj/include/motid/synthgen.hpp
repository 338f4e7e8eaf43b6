#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "motid/corpus.hpp"
#include "motid/telemetry.hpp"

namespace motid {

// Seeded per-participant motion parameters. Motion is a sum of a few
// participant-specific sinusoids per channel plus white noise; realism is a
// non-goal, carrying a stable identity signal is the point.
struct ParticipantProfile {
    double height = 1.7;       // m
    double arm_length = 0.65;  // m
    Eigen::Vector3d left_rest, right_rest;  // head-relative rest offsets, m
    std::vector<double> head_freqs;         // Hz, 2 sinusoids
    std::vector<double> left_freqs, right_freqs;  // Hz, 3 sinusoids each
    double gesture_amp = 0.1;  // m
    double noise_scale = 0.01; // m (also used as rad for orientation noise)
};

// Per-week random-walk standard deviations; all zero means sessions are
// statistically identical across weeks.
struct DriftModel {
    double height_sd = 0.0;
    double arm_sd = 0.0;
    double rest_sd = 0.0;   // m, per rest-offset component
    double freq_sd = 0.0;   // Hz, per sinusoid
    double amp_sd = 0.0;    // m
    double noise_sd = 0.0;  // m

    bool is_zero() const {
        return height_sd == 0 && arm_sd == 0 && rest_sd == 0 && freq_sd == 0 &&
               amp_sd == 0 && noise_sd == 0;
    }
};

struct GenConfig {
    int n_participants = 20;
    int weeks = 8;
    double minutes_per_session = 10.0;
    double rate = 90.0;
    DriftModel drift;
    double thinning = 0.0;  // probability a (participant, week) session is absent
    std::uint64_t seed = 0;
};

ParticipantProfile gen_profile(std::uint64_t seed, int participant_index);

// Week-w parameters are the profile plus a seeded random walk of `drift`
// steps; timestamps are k/rate. The same argument tuple always yields a
// bit-identical Recording.
Recording gen_session(const ParticipantProfile& profile, int week,
                      double minutes, double rate, const DriftModel& drift,
                      std::uint64_t seed);

// Profile after w-1 drift steps (exposed for drift-property tests).
ParticipantProfile drifted_profile(const ParticipantProfile& profile, int week,
                                   const DriftModel& drift, std::uint64_t seed);

// Writes telemetry + sidecar files under out_dir/telemetry and an index.json;
// returns the index.
CorpusIndex gen_corpus(const GenConfig& cfg, const std::filesystem::path& out_dir);

// In-memory variant used by tests (no files, durations from the recordings).
std::vector<Recording> gen_corpus_recordings(const GenConfig& cfg);

GenConfig read_gen_config(const std::filesystem::path& path);
void write_gen_config(const GenConfig& cfg, const std::filesystem::path& path);

}  // namespace motid
