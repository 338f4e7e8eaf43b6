#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "motid/telemetry.hpp"

namespace motid {

inline constexpr int kFeatureDim = 36;      // velocity(18) + acceleration(18)
inline constexpr int kBodyDim = 18;
inline constexpr int kWindowFrames = 900;   // 30 s at 30 fps
inline constexpr double kFeatureRate = 30.0;
inline constexpr int kInferStepFrames = 30; // 1 s sliding step

// Pose after head-centric normalization: head position subtracted, head yaw
// removed. 18 values: left_pos(3), left_q(4), right_pos(3), right_q(4),
// head_q(4).
struct BodyRelativeFrame {
    Eigen::Vector3d left_pos, right_pos;
    Quaternion left_q, right_q, head_q;

    std::array<double, kBodyDim> flat() const {
        return {left_pos.x(),  left_pos.y(),  left_pos.z(),
                left_q.x,      left_q.y,      left_q.z,      left_q.w,
                right_pos.x(), right_pos.y(), right_pos.z(),
                right_q.x,     right_q.y,     right_q.z,     right_q.w,
                head_q.x,      head_q.y,      head_q.z,      head_q.w};
    }
};

struct FeatureWindow {
    // kWindowFrames x kFeatureDim, row per frame.
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> data;
    std::string participant;
    int session = 0;
    double start_t = 0.0;
};

enum class WindowMode { train, infer };

// Uniform-rate feature rows for one recording, one block per tracking-loss
// segment. Row k of a segment is at time start_t + (k + 2) / rate (two warm-up
// frames are consumed by the second derivative).
struct FeatureStream {
    struct Segment {
        double start_t = 0.0;
        double rate = kFeatureRate;
        std::vector<std::array<double, kFeatureDim>> rows;
        double row_time(std::size_t k) const { return start_t + (k + 2) / rate; }
    };
    std::string participant;
    int session = 0;
    std::vector<Segment> segments;
};

// Fixed-rate resampling: linear interpolation for positions, slerp for
// orientations, independently per tracking-loss segment, no extrapolation.
// Segments with fewer than 2 frames are skipped with a diagnostic.
Recording resample(const Recording& r, double rate = kFeatureRate,
                   std::vector<Diagnostic>* diags = nullptr);

// Returns the normalized frame and the yaw that was removed. When the head
// forward projects to (nearly) nothing on the horizontal plane the previous
// yaw is reused (0 if none).
std::pair<BodyRelativeFrame, double> body_relative(
    const PoseFrame& f, std::optional<double> prev_yaw = std::nullopt);

// First and second finite differences of the 18 body-relative values, scaled
// by the frame rate. Quaternion channels are hemisphere-aligned before
// differencing. Output length = input length - 2; throws on < 3 frames.
std::vector<std::array<double, kFeatureDim>> derivatives(
    const std::vector<BodyRelativeFrame>& frames, double rate);

// train: non-overlapping kWindowFrames windows, remainder dropped.
// infer: sliding windows stepped by kInferStepFrames.
std::vector<FeatureWindow> make_windows(
    const std::vector<std::array<double, kFeatureDim>>& rows, WindowMode mode,
    int window_frames = kWindowFrames, int step_frames = kInferStepFrames);

// Full pipeline for one recording: resample -> body-relative -> derivatives.
FeatureStream preprocess_recording(const Recording& r,
                                   double rate = kFeatureRate,
                                   std::vector<Diagnostic>* diags = nullptr);

// Windows built from feature rows whose timestamps fall inside [start_s,
// end_s], per segment. Metadata (participant/session/start_t) filled in.
std::vector<FeatureWindow> windows_in_span(const FeatureStream& s,
                                           double start_s, double end_s,
                                           WindowMode mode,
                                           int window_frames = kWindowFrames,
                                           int step_frames = kInferStepFrames);

// Persistence: header JSON line {participant, session, windows, frames,
// features, mode, layout} followed by raw little-endian float32, row-major
// [window][frame][feature].
void write_feature_file(const std::filesystem::path& path,
                        const std::vector<FeatureWindow>& windows,
                        WindowMode mode);
std::vector<FeatureWindow> read_feature_file(const std::filesystem::path& path,
                                             WindowMode* mode = nullptr);

}  // namespace motid
