#include "motid/preprocess.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace motid {

using nlohmann::json;

Recording resample(const Recording& r, double rate,
                   std::vector<Diagnostic>* diags) {
    Recording out;
    out.participant_id = r.participant_id;
    out.session_index = r.session_index;
    out.nominal_rate = rate;

    for (auto [begin, end] : segment_bounds(r)) {
        if (end - begin < 2) {
            if (diags)
                diags->push_back({begin, "segment-too-short",
                                  "fewer than 2 frames, skipped"});
            continue;
        }
        double t0 = r.frames[begin].t;
        double t_end = r.frames[end - 1].t;
        std::size_t i = begin;  // bracket cursor
        for (std::size_t k = 0;; ++k) {
            double t = t0 + k / rate;
            if (t > t_end + 1e-9) break;
            t = std::min(t, t_end);
            while (i + 2 < end && r.frames[i + 1].t < t) ++i;
            const PoseFrame& a = r.frames[i];
            const PoseFrame& b = r.frames[i + 1];
            double u = (t - a.t) / (b.t - a.t);
            PoseFrame f;
            f.t = t0 + k / rate;
            auto interp = [&](const DevicePose& da, const DevicePose& db) {
                DevicePose d;
                d.position = da.position + u * (db.position - da.position);
                d.orientation = slerp(da.orientation, db.orientation, u);
                return d;
            };
            f.head = interp(a.head, b.head);
            f.left = interp(a.left, b.left);
            f.right = interp(a.right, b.right);
            out.frames.push_back(f);
        }
    }
    return out;
}

std::pair<BodyRelativeFrame, double> body_relative(
    const PoseFrame& f, std::optional<double> prev_yaw) {
    Eigen::Vector3d fwd = f.head.orientation.rotate(Eigen::Vector3d(0, 0, -1));
    double yaw;
    double horiz = std::sqrt(fwd.x() * fwd.x() + fwd.z() * fwd.z());
    if (horiz < 1e-6) {
        yaw = prev_yaw.value_or(0.0);  // head looking straight up/down
    } else {
        yaw = std::atan2(-fwd.x(), -fwd.z());
    }
    Quaternion unyaw = Quaternion::from_yaw(-yaw);
    BodyRelativeFrame b;
    b.left_pos = unyaw.rotate(f.left.position - f.head.position);
    b.right_pos = unyaw.rotate(f.right.position - f.head.position);
    b.left_q = unyaw * f.left.orientation;
    b.right_q = unyaw * f.right.orientation;
    b.head_q = unyaw * f.head.orientation;
    return {b, yaw};
}

std::vector<std::array<double, kFeatureDim>> derivatives(
    const std::vector<BodyRelativeFrame>& frames, double rate) {
    const std::size_t n = frames.size();
    if (n < 3) throw std::invalid_argument("derivatives: need at least 3 frames");

    // Flatten with per-channel hemisphere alignment of the quaternion blocks.
    std::vector<std::array<double, kBodyDim>> flat(n);
    flat[0] = frames[0].flat();
    const int quat_offsets[3] = {3, 10, 14};
    for (std::size_t k = 1; k < n; ++k) {
        flat[k] = frames[k].flat();
        for (int off : quat_offsets) {
            double d = 0.0;
            for (int c = 0; c < 4; ++c) d += flat[k][off + c] * flat[k - 1][off + c];
            if (d < 0.0)
                for (int c = 0; c < 4; ++c) flat[k][off + c] = -flat[k][off + c];
        }
    }

    std::vector<std::array<double, kBodyDim>> vel(n);
    for (std::size_t k = 1; k < n; ++k)
        for (int c = 0; c < kBodyDim; ++c)
            vel[k][c] = (flat[k][c] - flat[k - 1][c]) * rate;

    std::vector<std::array<double, kFeatureDim>> out(n - 2);
    for (std::size_t k = 2; k < n; ++k) {
        auto& row = out[k - 2];
        for (int c = 0; c < kBodyDim; ++c) {
            row[c] = vel[k][c];
            row[kBodyDim + c] = (vel[k][c] - vel[k - 1][c]) * rate;
        }
    }
    return out;
}

std::vector<FeatureWindow> make_windows(
    const std::vector<std::array<double, kFeatureDim>>& rows, WindowMode mode,
    int window_frames, int step_frames) {
    std::vector<FeatureWindow> out;
    const std::size_t n = rows.size();
    if (n < static_cast<std::size_t>(window_frames)) return out;
    const int step = mode == WindowMode::train ? window_frames : step_frames;
    for (std::size_t start = 0; start + window_frames <= n; start += step) {
        FeatureWindow w;
        w.data.resize(window_frames, kFeatureDim);
        for (int i = 0; i < window_frames; ++i)
            for (int c = 0; c < kFeatureDim; ++c)
                w.data(i, c) = static_cast<float>(rows[start + i][c]);
        w.start_t = static_cast<double>(start);  // caller rewrites to seconds
        out.push_back(std::move(w));
    }
    return out;
}

FeatureStream preprocess_recording(const Recording& r, double rate,
                                   std::vector<Diagnostic>* diags) {
    Recording rs = resample(r, rate, diags);
    FeatureStream s;
    s.participant = r.participant_id;
    s.session = r.session_index;

    std::optional<double> prev_yaw;
    for (auto [begin, end] : segment_bounds(rs)) {
        std::vector<BodyRelativeFrame> body;
        body.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) {
            auto [b, yaw] = body_relative(rs.frames[i], prev_yaw);
            prev_yaw = yaw;
            body.push_back(b);
        }
        if (body.size() < 3) {
            if (diags)
                diags->push_back({begin, "segment-too-short",
                                  "fewer than 3 resampled frames, skipped"});
            continue;
        }
        FeatureStream::Segment seg;
        seg.start_t = rs.frames[begin].t;
        seg.rate = rate;
        seg.rows = derivatives(body, rate);
        s.segments.push_back(std::move(seg));
    }
    return s;
}

std::vector<FeatureWindow> windows_in_span(const FeatureStream& s,
                                           double start_s, double end_s,
                                           WindowMode mode, int window_frames,
                                           int step_frames) {
    std::vector<FeatureWindow> out;
    for (const auto& seg : s.segments) {
        const std::size_t n = seg.rows.size();
        if (n == 0) continue;
        // rows are uniform; find the contiguous index range inside the span
        double k0f = (start_s - seg.start_t) * seg.rate - 2.0;
        std::size_t k0 =
            k0f <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(k0f - 1e-9));
        std::size_t k1 = n;
        double k1f = (end_s - seg.start_t) * seg.rate - 2.0;
        if (k1f < -0.5)
            k1 = 0;
        else
            k1 = std::min<double>(n, std::floor(k1f + 1e-9) + 1);
        if (k0 >= k1) continue;
        std::vector<std::array<double, kFeatureDim>> rows(
            seg.rows.begin() + k0, seg.rows.begin() + k1);
        auto ws = make_windows(rows, mode, window_frames, step_frames);
        for (auto& w : ws) {
            w.participant = s.participant;
            w.session = s.session;
            w.start_t = seg.row_time(k0 + static_cast<std::size_t>(w.start_t));
        }
        out.insert(out.end(), std::make_move_iterator(ws.begin()),
                   std::make_move_iterator(ws.end()));
    }
    return out;
}

void write_feature_file(const std::filesystem::path& path,
                        const std::vector<FeatureWindow>& windows,
                        WindowMode mode) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    json header = {
        {"participant", windows.empty() ? "" : windows.front().participant},
        {"session", windows.empty() ? 0 : windows.front().session},
        {"windows", windows.size()},
        {"frames", kWindowFrames},
        {"features", kFeatureDim},
        {"mode", mode == WindowMode::train ? "train" : "infer"},
        {"layout", 1}};
    out << header.dump() << "\n";
    for (const auto& w : windows) {
        static_assert(sizeof(float) == 4);
        out.write(reinterpret_cast<const char*>(w.data.data()),
                  static_cast<std::streamsize>(w.data.size() * sizeof(float)));
    }
}

std::vector<FeatureWindow> read_feature_file(const std::filesystem::path& path,
                                             WindowMode* mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string header_line;
    std::getline(in, header_line);
    json header = json::parse(header_line);
    if (header.at("layout").get<int>() != 1)
        throw std::runtime_error(path.string() + ": unknown feature layout");
    const std::size_t n = header.at("windows").get<std::size_t>();
    const int frames = header.at("frames").get<int>();
    const int feats = header.at("features").get<int>();
    if (mode)
        *mode = header.at("mode").get<std::string>() == "train"
                    ? WindowMode::train
                    : WindowMode::infer;
    std::vector<FeatureWindow> out(n);
    for (auto& w : out) {
        w.participant = header.at("participant").get<std::string>();
        w.session = header.at("session").get<int>();
        w.data.resize(frames, feats);
        in.read(reinterpret_cast<char*>(w.data.data()),
                static_cast<std::streamsize>(w.data.size() * sizeof(float)));
        if (!in) throw std::runtime_error(path.string() + ": truncated feature file");
    }
    return out;
}

}  // namespace motid
