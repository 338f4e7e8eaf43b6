#include <doctest.h>

#include <cmath>
#include <random>

#include "motid/preprocess.hpp"
#include "motid/rng.hpp"

using namespace motid;

namespace {

Quaternion random_unit_quat(std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    return Quaternion{g(rng), g(rng), g(rng), g(rng)}.normalized();
}

Recording constant_recording(int n, double dt) {
    Recording r;
    for (int k = 0; k < n; ++k) {
        PoseFrame f;
        f.t = k * dt;
        f.head.position = {0, 1.7, 0};
        f.left.position = {-0.3, 1.2, -0.4};
        f.right.position = {0.3, 1.2, -0.4};
        r.frames.push_back(f);
    }
    return r;
}

std::vector<BodyRelativeFrame> constant_body(int n) {
    std::vector<BodyRelativeFrame> v(n);
    for (auto& b : v) {
        b.left_pos = {-0.3, -0.5, -0.4};
        b.right_pos = {0.3, -0.5, -0.4};
        b.left_q = b.right_q = b.head_q = Quaternion::identity();
    }
    return v;
}

// Apply a world yaw + translation to every device of every frame.
Recording rigid_transform(const Recording& r, double yaw,
                          const Eigen::Vector3d& shift) {
    Quaternion q = Quaternion::from_yaw(yaw);
    Recording out = r;
    for (auto& f : out.frames)
        for (DevicePose* d : {&f.head, &f.left, &f.right}) {
            d->position = q.rotate(d->position) + shift;
            d->orientation = q * d->orientation;
        }
    return out;
}

}  // namespace

TEST_SUITE("preprocess") {

TEST_CASE("slerp endpoints and identical inputs") {
    auto rng = make_rng(11);
    for (int i = 0; i < 100; ++i) {
        Quaternion q0 = random_unit_quat(rng);
        Quaternion q1 = random_unit_quat(rng);
        double u = std::uniform_real_distribution<double>(0, 1)(rng);
        CHECK(slerp(q0, q0, u).angle_to(q0) < 1e-12);
        CHECK(slerp(q0, q1, 0.0).angle_to(q0) < 1e-12);
        CHECK(slerp(q0, q1, 1.0).angle_to(q1) < 1e-9);
        CHECK(std::abs(slerp(q0, q1, u).norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("slerp geodesic midpoint") {
    Quaternion mid =
        slerp(Quaternion::identity(), Quaternion::from_yaw(M_PI / 2), 0.5);
    CHECK(mid.angle_to(Quaternion::from_yaw(M_PI / 4)) < 1e-12);
}

TEST_CASE("resample is identity on an exact 30 Hz grid") {
    Recording r = constant_recording(90, 1.0 / 30.0);
    Recording out = resample(r, 30.0);
    REQUIRE(out.frames.size() == r.frames.size());
    for (std::size_t i = 0; i < r.frames.size(); ++i) {
        CHECK(out.frames[i].t == doctest::Approx(r.frames[i].t).epsilon(1e-14));
        CHECK((out.frames[i].left.position - r.frames[i].left.position).norm() <
              1e-12);
    }
}

TEST_CASE("linear position track resamples to the analytic line") {
    Recording r;
    for (int k = 0; k < 270; ++k) {
        PoseFrame f;
        f.t = k / 90.0;
        f.head.position = {f.t, 1.7, 0};
        f.left.position = {f.t, 1.2, -0.4};
        f.right.position = {f.t, 1.2, -0.4};
        r.frames.push_back(f);
    }
    Recording out = resample(r, 30.0);
    REQUIRE(out.frames.size() >= 89);
    for (std::size_t k = 0; k < out.frames.size(); ++k)
        CHECK(std::abs(out.frames[k].head.position.x() - k / 30.0) < 1e-12);
}

TEST_CASE("constant-rate rotation resamples to 3 degrees per output frame") {
    const double omega = M_PI / 2;  // 90 deg/s about +Y
    Recording r;
    for (int k = 0; k < 90; ++k) {
        PoseFrame f;
        f.t = k / 90.0;
        f.head.position = {0, 1.7, 0};
        f.head.orientation = Quaternion::from_yaw(omega * f.t);
        f.left.position = {-0.3, 1.2, -0.4};
        f.right.position = {0.3, 1.2, -0.4};
        r.frames.push_back(f);
    }
    Recording out = resample(r, 30.0);
    REQUIRE(out.frames.size() >= 30);
    for (std::size_t k = 1; k < out.frames.size(); ++k) {
        double step = out.frames[k].head.orientation.angle_to(
            out.frames[k - 1].head.orientation);
        CHECK(step == doctest::Approx(M_PI / 60).epsilon(1e-9));
    }
}

TEST_CASE("resampling is idempotent") {
    auto rng = make_rng(3);
    std::normal_distribution<double> g(0.0, 0.05);
    Recording r;
    for (int k = 0; k < 400; ++k) {
        PoseFrame f;
        f.t = k / 87.3;  // off-grid source rate
        f.head.position = {g(rng), 1.7 + g(rng), g(rng)};
        f.head.orientation = random_unit_quat(rng);
        f.left.position = {-0.3 + g(rng), 1.2, -0.4};
        f.right.position = {0.3, 1.2 + g(rng), -0.4};
        r.frames.push_back(f);
    }
    Recording once = resample(r, 30.0);
    Recording twice = resample(once, 30.0);
    REQUIRE(once.frames.size() == twice.frames.size());
    for (std::size_t i = 0; i < once.frames.size(); ++i) {
        CHECK(std::abs(once.frames[i].t - twice.frames[i].t) < 1e-12);
        CHECK((once.frames[i].head.position - twice.frames[i].head.position)
                  .norm() < 1e-12);
        CHECK(once.frames[i].head.orientation.angle_to(
                  twice.frames[i].head.orientation) < 1e-12);
    }
}

TEST_CASE("body_relative leaves a canonical rig unchanged") {
    PoseFrame f;
    f.head.position = {0, 1.7, 0};
    f.left.position = {-0.3, 1.2, -0.4};
    f.right.position = {0.3, 1.2, -0.4};
    auto [b, yaw] = body_relative(f);
    CHECK(yaw == doctest::Approx(0.0));
    CHECK((b.left_pos - Eigen::Vector3d(-0.3, -0.5, -0.4)).norm() < 1e-12);
    CHECK(b.head_q.angle_to(Quaternion::identity()) < 1e-12);
}

TEST_CASE("body_relative undoes a whole-rig translation + yaw") {
    PoseFrame f;
    f.head.position = {0, 1.7, 0};
    f.head.orientation = Quaternion::from_euler(0.0, 0.2, -0.1);
    f.left.position = {-0.3, 1.2, -0.4};
    f.left.orientation = Quaternion::from_euler(0.4, -0.3, 0.2);
    f.right.position = {0.3, 1.2, -0.4};
    auto [b0, yaw0] = body_relative(f);

    Recording rig;
    rig.frames.push_back(f);
    Recording moved = rigid_transform(rig, M_PI / 2, {5.0, 0.2, 3.0});
    auto [b1, yaw1] = body_relative(moved.frames[0]);
    CHECK((b1.left_pos - b0.left_pos).norm() < 1e-9);
    CHECK((b1.right_pos - b0.right_pos).norm() < 1e-9);
    CHECK(b1.head_q.angle_to(b0.head_q) < 1e-9);
    CHECK(b1.left_q.angle_to(b0.left_q) < 1e-9);
}

TEST_CASE("head facing +X maps right hand to (0,-0.3,-1)") {
    PoseFrame f;
    f.head.position = {2.0, 1.6, -1.0};
    f.head.orientation = Quaternion::from_yaw(-M_PI / 2);  // forward = +X
    f.right.position = f.head.position + Eigen::Vector3d(1.0, -0.3, 0.0);
    f.left.position = f.head.position;
    auto [b, yaw] = body_relative(f);
    CHECK(yaw == doctest::Approx(-M_PI / 2));
    CHECK((b.right_pos - Eigen::Vector3d(0.0, -0.3, -1.0)).norm() < 1e-12);
}

TEST_CASE("vertical gaze reuses the previous yaw") {
    PoseFrame f;
    f.head.position = {0, 1.7, 0};
    f.head.orientation =
        Quaternion::from_axis_angle(Eigen::Vector3d::UnitX(), M_PI / 2);
    auto [b, yaw] = body_relative(f, 0.7);
    CHECK(yaw == doctest::Approx(0.7));
    auto [b2, yaw2] = body_relative(f);
    CHECK(yaw2 == doctest::Approx(0.0));
}

TEST_CASE("derivatives of a constant stream vanish") {
    auto rows = derivatives(constant_body(10), 30.0);
    REQUIRE(rows.size() == 8);
    for (const auto& row : rows)
        for (double v : row) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("alternating-sign quaternions difference to zero") {
    auto frames = constant_body(8);
    for (std::size_t k = 1; k < frames.size(); k += 2) {
        frames[k].left_q = -frames[k].left_q;
        frames[k].head_q = -frames[k].head_q;
    }
    auto rows = derivatives(frames, 30.0);
    for (const auto& row : rows)
        for (double v : row) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("linear position ramp gives velocity 3 m/s, zero acceleration") {
    auto frames = constant_body(12);
    for (std::size_t k = 0; k < frames.size(); ++k)
        frames[k].left_pos.x() = 0.1 * static_cast<double>(k);
    auto rows = derivatives(frames, 30.0);
    for (const auto& row : rows) {
        CHECK(row[0] == doctest::Approx(3.0));   // left_pos.x velocity
        CHECK(row[18] == doctest::Approx(0.0));  // acceleration
    }
}

TEST_CASE("derivatives rejects fewer than 3 frames") {
    CHECK_THROWS_AS(derivatives(constant_body(2), 30.0), std::invalid_argument);
}

TEST_CASE("derivative linearity on position channels") {
    auto rng = make_rng(5);
    std::normal_distribution<double> g(0.0, 0.2);
    auto x = constant_body(20);
    auto y = constant_body(20);
    for (int k = 0; k < 20; ++k) {
        x[k].left_pos = {g(rng), g(rng), g(rng)};
        y[k].left_pos = {g(rng), g(rng), g(rng)};
    }
    const double a = 2.5, b = -1.25;
    auto combo = constant_body(20);
    for (int k = 0; k < 20; ++k)
        combo[k].left_pos = a * x[k].left_pos + b * y[k].left_pos;
    auto dx = derivatives(x, 30.0), dy = derivatives(y, 30.0),
         dc = derivatives(combo, 30.0);
    for (std::size_t k = 0; k < dc.size(); ++k)
        for (int c : {0, 1, 2, 18, 19, 20})
            CHECK(dc[k][c] ==
                  doctest::Approx(a * dx[k][c] + b * dy[k][c]).epsilon(1e-9));
}

TEST_CASE("window counts match the spec arithmetic") {
    std::vector<std::array<double, kFeatureDim>> rows;
    auto resize = [&](std::size_t n) {
        rows.assign(n, std::array<double, kFeatureDim>{});
    };
    resize(870);  // 29 s
    CHECK(make_windows(rows, WindowMode::train).empty());
    CHECK(make_windows(rows, WindowMode::infer).empty());
    resize(2850);  // 95 s
    CHECK(make_windows(rows, WindowMode::train).size() == 3);
    resize(1800);  // 60 s
    CHECK(make_windows(rows, WindowMode::infer).size() == 31);
}

TEST_CASE("feature file round-trips") {
    std::vector<std::array<double, kFeatureDim>> rows(1850);
    auto rng = make_rng(17);
    std::normal_distribution<double> g(0.0, 1.0);
    for (auto& row : rows)
        for (double& v : row) v = g(rng);
    auto windows = make_windows(rows, WindowMode::infer);
    for (auto& w : windows) {
        w.participant = "P007";
        w.session = 3;
    }
    auto path = std::filesystem::temp_directory_path() / "motid_feat_test.bin";
    write_feature_file(path, windows, WindowMode::infer);
    WindowMode mode;
    auto back = read_feature_file(path, &mode);
    std::filesystem::remove(path);
    CHECK(mode == WindowMode::infer);
    REQUIRE(back.size() == windows.size());
    CHECK(back[0].participant == "P007");
    CHECK(back[0].session == 3);
    for (std::size_t i = 0; i < back.size(); ++i)
        CHECK((back[i].data - windows[i].data).cwiseAbs().maxCoeff() == 0.0f);
}

TEST_CASE("windows_in_span respects span boundaries") {
    Recording r = constant_recording(90 * 120, 1.0 / 90.0);  // 120 s
    FeatureStream s = preprocess_recording(r);
    REQUIRE(s.segments.size() == 1);
    auto train = windows_in_span(s, 0.0, 60.0, WindowMode::train);
    CHECK(train.size() == 1);  // ~1798 rows in [0,60]
    auto infer = windows_in_span(s, 0.0, 120.0, WindowMode::infer);
    CHECK(infer.size() > 80);
    for (const auto& w : infer) CHECK(w.start_t >= 0.0);
}

}  // TEST_SUITE
