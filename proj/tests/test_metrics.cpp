#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "motid/metrics.hpp"
#include "motid/rng.hpp"

using namespace motid;

namespace {

// Brute-force Hand-Till oracle: mean over unordered class pairs of the
// symmetrized fraction of correctly ordered cross-class pairs (ties half).
double auc_oracle(const Eigen::MatrixXd& scores, const std::vector<int>& labels) {
    std::set<int> present(labels.begin(), labels.end());
    std::vector<int> classes(present.begin(), present.end());
    double total = 0.0;
    int pairs = 0;
    auto directional = [&](int i, int j) {
        // P(score_i of a class-i unit > score_i of a class-j unit)
        double wins = 0.0;
        int n = 0;
        for (std::size_t a = 0; a < labels.size(); ++a) {
            if (labels[a] != i) continue;
            for (std::size_t b = 0; b < labels.size(); ++b) {
                if (labels[b] != j) continue;
                double si = scores(static_cast<int>(a), i);
                double sj = scores(static_cast<int>(b), i);
                wins += si > sj ? 1.0 : (si == sj ? 0.5 : 0.0);
                ++n;
            }
        }
        return wins / n;
    };
    for (std::size_t a = 0; a < classes.size(); ++a)
        for (std::size_t b = a + 1; b < classes.size(); ++b) {
            total += 0.5 * (directional(classes[a], classes[b]) +
                            directional(classes[b], classes[a]));
            ++pairs;
        }
    return total / pairs;
}

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

// Exact enumeration oracle for small C: average over all (N-1)-subsets of
// distractor classes of the indicator that the true class outranks them all.
double n_class_oracle(const std::vector<RankRecord>& records, int N) {
    double total = 0.0;
    for (const auto& rec : records) {
        int C = rec.n_classes, r = rec.rank;
        // distractors are the C-1 other classes; "outranked by true" are the
        // C-r classes ranked below it. Count subsets avoiding the r-1 above.
        double good = binom(C - r, N - 1);
        total += good / binom(C - 1, N - 1);
    }
    return total / static_cast<double>(records.size());
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("separated two-class scores give AUC 1, constants give 0.5") {
    Eigen::MatrixXd s(4, 2);
    s << 0.9, 0.1, 0.8, 0.2, 0.2, 0.8, 0.1, 0.9;
    CHECK(multiclass_auc(s, {0, 0, 1, 1}) == doctest::Approx(1.0));
    Eigen::MatrixXd flat = Eigen::MatrixXd::Constant(6, 3, 0.25);
    CHECK(multiclass_auc(flat, {0, 1, 2, 0, 1, 2}) == doctest::Approx(0.5));
}

TEST_CASE("multiclass AUC matches the brute-force pairwise oracle") {
    auto rng = make_rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> cls(0, 2);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::MatrixXd s(12, 3);
        std::vector<int> labels;
        for (int r = 0; r < 12; ++r) {
            labels.push_back(cls(rng));
            // coarse grid to force ties
            for (int c = 0; c < 3; ++c) s(r, c) = std::floor(u(rng) * 5) / 5.0;
        }
        if (std::set<int>(labels.begin(), labels.end()).size() < 2) continue;
        CHECK(std::abs(multiclass_auc(s, labels) - auc_oracle(s, labels)) < 1e-12);
    }
}

TEST_CASE("two classes reduce to the Mann-Whitney AUC") {
    auto rng = make_rng(33);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd s(20, 2);
    std::vector<int> labels;
    for (int r = 0; r < 20; ++r) {
        double p = std::floor(u(rng) * 8) / 8.0;
        s(r, 0) = p;
        s(r, 1) = 1.0 - p;
        labels.push_back(r < 11 ? 0 : 1);
    }
    // Mann-Whitney U on column 0
    double wins = 0.0;
    int n = 0;
    for (int a = 0; a < 20; ++a)
        for (int b = 0; b < 20; ++b) {
            if (labels[a] != 0 || labels[b] != 1) continue;
            wins += s(a, 0) > s(b, 0) ? 1.0 : (s(a, 0) == s(b, 0) ? 0.5 : 0.0);
            ++n;
        }
    CHECK(std::abs(multiclass_auc(s, labels) - wins / n) < 1e-12);
}

TEST_CASE("AUC is invariant under monotone column transforms") {
    auto rng = make_rng(35);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd s(15, 3);
    std::vector<int> labels;
    for (int r = 0; r < 15; ++r) {
        labels.push_back(r % 3);
        for (int c = 0; c < 3; ++c) s(r, c) = u(rng);
    }
    Eigen::MatrixXd t = s;
    t.col(0) = (3.0 * s.col(0)).array().exp();
    t.col(1) = 5.0 * s.col(1).array() - 2.0;
    t.col(2) = s.col(2).array().atan();
    CHECK(std::abs(multiclass_auc(s, labels) - multiclass_auc(t, labels)) < 1e-12);
}

TEST_CASE("multiclass AUC needs at least two classes") {
    Eigen::MatrixXd s = Eigen::MatrixXd::Random(4, 3);
    CHECK_THROWS_AS(multiclass_auc(s, {1, 1, 1, 1}), std::invalid_argument);
}

TEST_CASE("n_class_accuracy formula instantiations") {
    CHECK(n_class_accuracy({{0, 3, 4}}, 2) == doctest::Approx(1.0 / 3.0));
    std::vector<RankRecord> recs = {{0, 1, 4}, {1, 1, 4}, {2, 3, 4}};
    CHECK(n_class_accuracy(recs, 2) == doctest::Approx(7.0 / 9.0));
    // N = C degenerates to top-1
    CHECK(n_class_accuracy(recs, 4) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("n_class_accuracy matches enumeration and is monotone in N") {
    auto rng = make_rng(41);
    std::vector<RankRecord> recs;
    for (int i = 0; i < 40; ++i) {
        int C = 5 + static_cast<int>(rng() % 6);
        int r = 1 + static_cast<int>(rng() % C);
        recs.push_back({0, r, C});
    }
    double prev = 2.0;
    for (int N = 2; N <= 5; ++N) {
        double v = n_class_accuracy(recs, N);
        CHECK(std::abs(v - n_class_oracle(recs, N)) < 1e-12);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    // N = 2 closed form
    double mean = 0.0;
    for (const auto& r : recs)
        mean += static_cast<double>(r.n_classes - r.rank) / (r.n_classes - 1);
    CHECK(n_class_accuracy(recs, 2) ==
          doctest::Approx(mean / recs.size()).epsilon(1e-12));
    CHECK_THROWS_AS(n_class_accuracy(recs, 1), std::invalid_argument);
}

TEST_CASE("rank_records basics") {
    Eigen::MatrixXd s(2, 183);
    s.setZero();
    for (int c = 0; c < 183; ++c) s(0, c) = -c;  // row 0: class 0 strictly best
    for (int c = 0; c < 183; ++c) s(1, c) = c;   // row 1: class 0 strictly worst
    auto recs = rank_records(s, {0, 0}, 7);
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].rank == 1);
    CHECK(recs[1].rank == 183);
    CHECK(recs[0].n_classes == 183);
}

TEST_CASE("tied top ranks split evenly across seeds") {
    Eigen::MatrixXd s(1, 3);
    s << 1.0, 1.0, 0.0;
    int rank1 = 0;
    const int trials = 10000;
    for (int seed = 0; seed < trials; ++seed) {
        auto recs = rank_records(s, {0}, seed);
        REQUIRE((recs[0].rank == 1 || recs[0].rank == 2));
        if (recs[0].rank == 1) ++rank1;
    }
    CHECK(rank1 > trials * 0.45);
    CHECK(rank1 < trials * 0.55);
}

TEST_CASE("accuracy counts seeded rank-1 hits") {
    Eigen::MatrixXd s(3, 3);
    s << 5, 1, 1, 1, 5, 1, 1, 1, 5;
    CHECK(accuracy(s, {0, 1, 2}, 0) == doctest::Approx(1.0));
    CHECK(accuracy(s, {1, 2, 0}, 0) == doctest::Approx(0.0));
    // constant predictor on balanced classes ~ 1/C
    Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(3000, 3);
    std::vector<int> labels(3000);
    for (int i = 0; i < 3000; ++i) labels[i] = i % 3;
    double acc = 0.0;
    for (int seed = 0; seed < 5; ++seed) acc += accuracy(flat, labels, seed);
    CHECK(acc / 5 == doctest::Approx(1.0 / 3.0).epsilon(0.1));
}

TEST_CASE("constant AUC yields zero slope and ln(4) intercept") {
    std::vector<DelayObservation> obs;
    for (int t = 1; t <= 4; ++t)
        for (int s = 1; s <= 4; ++s)
            if (t != s) obs.push_back({t, s, 0.8});
    DelayFit fit = fit_delay_model(obs);
    CHECK(fit.slope == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(fit.pooled_intercept == doctest::Approx(std::log(4.0)).epsilon(1e-10));
    for (double r : fit.residuals) CHECK(std::abs(r) < 1e-10);
}

TEST_CASE("noiseless planted delay model is recovered to 1e-10") {
    std::vector<DelayObservation> obs;
    for (int t = 1; t <= 8; ++t)
        for (int s = 1; s <= 8; ++s) {
            if (t == s) continue;
            double lg = 2.0 - 0.1 * std::abs(s - t);
            obs.push_back({t, s, sigmoid(lg)});
        }
    DelayFit fit = fit_delay_model(obs);
    CHECK(std::abs(fit.slope - (-0.1)) < 1e-10);
    CHECK(std::abs(fit.pooled_intercept - 2.0) < 1e-10);
    for (const auto& [week, b] : fit.intercepts) CHECK(std::abs(b - 2.0) < 1e-10);
}

TEST_CASE("planted per-week intercepts are recovered") {
    std::vector<DelayObservation> obs;
    auto intercept = [](int week) { return 1.5 + 0.07 * week; };
    for (int t = 1; t <= 6; ++t)
        for (int s = 1; s <= 6; ++s) {
            if (t == s) continue;
            obs.push_back({t, s, sigmoid(intercept(t) - 0.12 * std::abs(s - t))});
        }
    DelayFit fit = fit_delay_model(obs);
    CHECK(std::abs(fit.slope - (-0.12)) < 1e-10);
    for (const auto& [week, b] : fit.intercepts)
        CHECK(std::abs(b - intercept(week)) < 1e-10);
}

TEST_CASE("degenerate design matrix is rejected") {
    // delay is a function of the train week -> collinear with the dummies
    std::vector<DelayObservation> obs = {
        {1, 2, 0.9}, {1, 2, 0.85}, {2, 4, 0.8}, {2, 4, 0.75}};
    CHECK_THROWS_WITH_AS(fit_delay_model(obs), doctest::Contains("degenerate"),
                         std::invalid_argument);
    // a single distinct delay is rejected up front
    std::vector<DelayObservation> one = {{1, 2, 0.9}, {2, 3, 0.8}, {3, 4, 0.7}};
    CHECK_THROWS_AS(fit_delay_model(one), std::invalid_argument);
}

}  // TEST_SUITE
