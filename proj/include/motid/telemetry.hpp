#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "motid/quaternion.hpp"

namespace motid {

// World space is right-handed, +Y up, forward -Z. Units: meters, seconds.

struct DevicePose {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Quaternion orientation = Quaternion::identity();
};

struct PoseFrame {
    double t = 0.0;  // seconds since session start
    DevicePose head, left, right;
};

struct Recording {
    std::string participant_id;
    int session_index = 1;  // 1-based week number
    double nominal_rate = 90.0;
    std::vector<PoseFrame> frames;

    double duration() const {
        return frames.empty() ? 0.0 : frames.back().t - frames.front().t;
    }
};

class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what),
          line_(line) {}
    std::size_t line() const { return line_; }

  private:
    std::size_t line_;
};

struct Diagnostic {
    std::size_t frame = 0;
    std::string kind;    // e.g. "duplicate-timestamp", "tracking-loss"
    std::string detail;
};

// Gap between consecutive frames beyond which a stream is treated as broken
// into independent segments.
inline constexpr double kTrackingLossGapSeconds = 0.5;

// Parses the JSON-Lines telemetry format. Throws ParseError with the
// offending line number; quaternions with norm drift <= 1e-2 are
// renormalized, larger drift is rejected.
Recording parse_recording(std::istream& in);

// Telemetry file plus sidecar metadata ({"participant","session","nominal_rate"}).
Recording load_recording(const std::filesystem::path& telemetry,
                         const std::filesystem::path& sidecar);

void serialize_recording(const Recording& r, std::ostream& out);
void write_recording(const Recording& r, const std::filesystem::path& telemetry,
                     const std::filesystem::path& sidecar);

// Invariant check; empty result iff the recording is well formed. Gaps larger
// than kTrackingLossGapSeconds are flagged as tracking-loss boundaries.
std::vector<Diagnostic> validate_recording(const Recording& r);

// Half-open [begin, end) frame index ranges split at tracking-loss gaps.
std::vector<std::pair<std::size_t, std::size_t>> segment_bounds(
    const Recording& r, double gap_seconds = kTrackingLossGapSeconds);

}  // namespace motid
