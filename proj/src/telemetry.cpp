#include "motid/telemetry.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace motid {

using nlohmann::json;

namespace {

constexpr double kQuatNormTolerance = 1e-2;
constexpr double kPositionBound = 100.0;  // meters, room-scale sanity bound

DevicePose parse_device(const json& j, std::size_t line, const char* name) {
    if (!j.is_object() || !j.contains("p") || !j.contains("q"))
        throw ParseError(line, std::string("missing device ") + name);
    const json& p = j.at("p");
    const json& q = j.at("q");
    if (!p.is_array() || p.size() != 3)
        throw ParseError(line, std::string(name) + ": position must be [x,y,z]");
    if (!q.is_array() || q.size() != 4)
        throw ParseError(line, std::string(name) + ": quaternion must be [x,y,z,w]");
    DevicePose d;
    for (int i = 0; i < 3; ++i) {
        double v = p[i].get<double>();
        if (!std::isfinite(v))
            throw ParseError(line, std::string(name) + ": non-finite position");
        if (std::abs(v) >= kPositionBound)
            throw ParseError(line, std::string(name) + ": position out of bounds");
        d.position[i] = v;
    }
    Quaternion quat{q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                    q[3].get<double>()};
    double n = quat.norm();
    if (!(n > 0.0) || !std::isfinite(n))
        throw ParseError(line, std::string(name) + ": degenerate quaternion");
    if (std::abs(n - 1.0) > kQuatNormTolerance)
        throw ParseError(line, std::string(name) + ": quaternion norm out of tolerance");
    d.orientation = quat.normalized();
    return d;
}

void append_double(std::string& out, double v) {
    std::array<char, 32> buf;
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    out.append(buf.data(), res.ptr);
}

void append_device(std::string& out, const DevicePose& d) {
    out += "{\"p\":[";
    for (int i = 0; i < 3; ++i) {
        if (i) out += ',';
        append_double(out, d.position[i]);
    }
    out += "],\"q\":[";
    append_double(out, d.orientation.x);
    out += ',';
    append_double(out, d.orientation.y);
    out += ',';
    append_double(out, d.orientation.z);
    out += ',';
    append_double(out, d.orientation.w);
    out += "]}";
}

}  // namespace

Recording parse_recording(std::istream& in) {
    Recording r;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(lineno, std::string("malformed line: ") + e.what());
        }
        if (!j.is_object() || !j.contains("t"))
            throw ParseError(lineno, "frame must be an object with \"t\"");
        PoseFrame f;
        f.t = j.at("t").get<double>();
        if (!std::isfinite(f.t) || f.t < 0.0)
            throw ParseError(lineno, "timestamp must be finite and >= 0");
        if (!r.frames.empty() && f.t <= r.frames.back().t)
            throw ParseError(lineno, "non-monotonic timestamp");
        if (!j.contains("head") || !j.contains("left") || !j.contains("right"))
            throw ParseError(lineno, "missing device (need head, left, right)");
        f.head = parse_device(j.at("head"), lineno, "head");
        f.left = parse_device(j.at("left"), lineno, "left");
        f.right = parse_device(j.at("right"), lineno, "right");
        r.frames.push_back(f);
    }
    if (r.frames.empty()) throw ParseError(lineno, "empty recording");
    return r;
}

Recording load_recording(const std::filesystem::path& telemetry,
                         const std::filesystem::path& sidecar) {
    std::ifstream meta_in(sidecar);
    if (!meta_in) throw std::runtime_error("cannot open sidecar " + sidecar.string());
    json meta = json::parse(meta_in);

    std::ifstream in(telemetry);
    if (!in) throw std::runtime_error("cannot open telemetry " + telemetry.string());
    Recording r = parse_recording(in);
    r.participant_id = meta.at("participant").is_string()
                           ? meta.at("participant").get<std::string>()
                           : meta.at("participant").dump();
    r.session_index = meta.at("session").get<int>();
    if (meta.contains("nominal_rate"))
        r.nominal_rate = meta.at("nominal_rate").get<double>();
    if (r.session_index < 1)
        throw std::runtime_error(sidecar.string() + ": session must be >= 1");
    return r;
}

void serialize_recording(const Recording& r, std::ostream& out) {
    std::string buf;
    for (const PoseFrame& f : r.frames) {
        buf.clear();
        buf += "{\"t\":";
        append_double(buf, f.t);
        buf += ",\"head\":";
        append_device(buf, f.head);
        buf += ",\"left\":";
        append_device(buf, f.left);
        buf += ",\"right\":";
        append_device(buf, f.right);
        buf += "}\n";
        out << buf;
    }
}

void write_recording(const Recording& r, const std::filesystem::path& telemetry,
                     const std::filesystem::path& sidecar) {
    std::ofstream out(telemetry);
    if (!out) throw std::runtime_error("cannot write " + telemetry.string());
    serialize_recording(r, out);
    json meta = {{"participant", r.participant_id},
                 {"session", r.session_index},
                 {"nominal_rate", r.nominal_rate}};
    std::ofstream mout(sidecar);
    if (!mout) throw std::runtime_error("cannot write " + sidecar.string());
    mout << meta.dump() << "\n";
}

std::vector<Diagnostic> validate_recording(const Recording& r) {
    std::vector<Diagnostic> diags;
    if (r.frames.empty()) {
        diags.push_back({0, "empty", "recording has no frames"});
        return diags;
    }
    if (r.session_index < 1)
        diags.push_back({0, "bad-session-index",
                         "session_index must be >= 1, got " +
                             std::to_string(r.session_index)});
    for (std::size_t i = 0; i < r.frames.size(); ++i) {
        const PoseFrame& f = r.frames[i];
        if (!std::isfinite(f.t) || f.t < 0.0)
            diags.push_back({i, "bad-timestamp", "non-finite or negative t"});
        for (const DevicePose* d : {&f.head, &f.left, &f.right}) {
            if (!d->position.allFinite() ||
                d->position.cwiseAbs().maxCoeff() >= kPositionBound) {
                diags.push_back({i, "bad-position", "non-finite or out of bounds"});
                break;
            }
        }
        for (const DevicePose* d : {&f.head, &f.left, &f.right}) {
            if (std::abs(d->orientation.norm() - 1.0) > 1e-6) {
                diags.push_back({i, "bad-quaternion", "norm not 1 within 1e-6"});
                break;
            }
        }
        if (i > 0) {
            double dt = f.t - r.frames[i - 1].t;
            if (dt == 0.0)
                diags.push_back({i, "duplicate-timestamp",
                                 "t repeats previous frame"});
            else if (dt < 0.0)
                diags.push_back({i, "non-monotonic-timestamp", "t decreases"});
            else if (dt > kTrackingLossGapSeconds)
                diags.push_back({i, "tracking-loss",
                                 "gap of " + std::to_string(dt) + " s"});
        }
    }
    return diags;
}

std::vector<std::pair<std::size_t, std::size_t>> segment_bounds(
    const Recording& r, double gap_seconds) {
    std::vector<std::pair<std::size_t, std::size_t>> segs;
    std::size_t begin = 0;
    for (std::size_t i = 1; i < r.frames.size(); ++i) {
        if (r.frames[i].t - r.frames[i - 1].t > gap_seconds) {
            segs.emplace_back(begin, i);
            begin = i;
        }
    }
    if (begin < r.frames.size()) segs.emplace_back(begin, r.frames.size());
    return segs;
}

}  // namespace motid
