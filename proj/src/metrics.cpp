#include "motid/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "motid/rng.hpp"

namespace motid {

namespace {

// Mann-Whitney rank sum with mid-ranks: A = P(x > y) + 0.5 P(x = y).
double pairwise_auc(const std::vector<double>& xi, const std::vector<double>& xj) {
    struct Item {
        double v;
        bool is_i;
    };
    std::vector<Item> items;
    items.reserve(xi.size() + xj.size());
    for (double v : xi) items.push_back({v, true});
    for (double v : xj) items.push_back({v, false});
    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.v < b.v; });
    double s_i = 0.0;
    std::size_t k = 0;
    while (k < items.size()) {
        std::size_t e = k;
        while (e + 1 < items.size() && items[e + 1].v == items[k].v) ++e;
        double mid_rank = (static_cast<double>(k + 1) + static_cast<double>(e + 1)) / 2.0;
        for (std::size_t m = k; m <= e; ++m)
            if (items[m].is_i) s_i += mid_rank;
        k = e + 1;
    }
    double ni = static_cast<double>(xi.size());
    double nj = static_cast<double>(xj.size());
    return (s_i - ni * (ni + 1.0) / 2.0) / (ni * nj);
}

}  // namespace

double multiclass_auc(const Eigen::MatrixXd& scores,
                      const std::vector<int>& labels) {
    if (static_cast<Eigen::Index>(labels.size()) != scores.rows())
        throw std::invalid_argument("multiclass_auc: labels/rows mismatch");
    std::set<int> present(labels.begin(), labels.end());
    if (present.size() < 2)
        throw std::invalid_argument("multiclass_auc: need at least 2 classes");

    std::map<int, std::vector<Eigen::Index>> by_class;
    for (Eigen::Index r = 0; r < scores.rows(); ++r)
        by_class[labels[r]].push_back(r);

    double total = 0.0;
    std::size_t pairs = 0;
    std::vector<int> classes(present.begin(), present.end());
    for (std::size_t a = 0; a < classes.size(); ++a) {
        for (std::size_t b = a + 1; b < classes.size(); ++b) {
            int i = classes[a], j = classes[b];
            auto column = [&](int cls, int col) {
                std::vector<double> v;
                for (Eigen::Index r : by_class[cls]) v.push_back(scores(r, col));
                return v;
            };
            double a_ij = pairwise_auc(column(i, i), column(j, i));
            double a_ji = pairwise_auc(column(j, j), column(i, j));
            total += (a_ij + a_ji) / 2.0;
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

std::vector<RankRecord> rank_records(const Eigen::MatrixXd& scores,
                                     const std::vector<int>& labels,
                                     std::uint64_t seed) {
    if (static_cast<Eigen::Index>(labels.size()) != scores.rows())
        throw std::invalid_argument("rank_records: labels/rows mismatch");
    std::vector<RankRecord> out;
    out.reserve(labels.size());
    const int C = static_cast<int>(scores.cols());
    for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        int c = labels[r];
        if (c < 0 || c >= C)
            throw std::invalid_argument("rank_records: label outside score columns");
        double sc = scores(r, c);
        int greater = 0, ties = 0;
        for (int j = 0; j < C; ++j) {
            if (j == c) continue;
            if (scores(r, j) > sc) ++greater;
            else if (scores(r, j) == sc) ++ties;
        }
        int offset = 0;
        if (ties > 0) {
            auto rng = make_rng(seed, static_cast<std::uint64_t>(r));
            offset = static_cast<int>(rng() % static_cast<std::uint64_t>(ties + 1));
        }
        out.push_back({c, greater + 1 + offset, C});
    }
    return out;
}

double n_class_accuracy(const std::vector<RankRecord>& records, int N) {
    if (records.empty())
        throw std::invalid_argument("n_class_accuracy: empty records");
    int min_c = records.front().n_classes;
    for (const auto& r : records) min_c = std::min(min_c, r.n_classes);
    if (N < 2 || N > min_c)
        throw std::invalid_argument("n_class_accuracy: N out of range");
    double total = 0.0;
    for (const auto& rec : records) {
        // C(C-r, N-1) / C(C-1, N-1) as a running product; 0 when C-r < N-1.
        double p = 1.0;
        for (int k = 0; k <= N - 2; ++k) {
            double num = rec.n_classes - rec.rank - k;
            double den = rec.n_classes - 1 - k;
            if (num <= 0.0) {
                p = 0.0;
                break;
            }
            p *= num / den;
        }
        total += p;
    }
    return total / static_cast<double>(records.size());
}

double accuracy(const Eigen::MatrixXd& scores, const std::vector<int>& labels,
                std::uint64_t seed) {
    if (labels.empty()) throw std::invalid_argument("accuracy: empty input");
    auto records = rank_records(scores, labels, seed);
    std::size_t hits = 0;
    for (const auto& r : records)
        if (r.rank == 1) ++hits;
    return static_cast<double>(hits) / static_cast<double>(records.size());
}

DelayFit fit_delay_model(const std::vector<DelayObservation>& obs) {
    std::set<int> delays, weeks;
    for (const auto& o : obs) {
        if (!(o.auc > 0.0 && o.auc < 1.0))
            throw std::invalid_argument("fit_delay_model: auc must be in (0,1)");
        delays.insert(o.delay());
        weeks.insert(o.train_week);
    }
    if (delays.size() < 2)
        throw std::invalid_argument("fit_delay_model: need >=2 distinct delays");

    std::vector<int> week_list(weeks.begin(), weeks.end());
    const Eigen::Index n = static_cast<Eigen::Index>(obs.size());
    const Eigen::Index p = static_cast<Eigen::Index>(week_list.size()) + 1;
    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, p);
    Eigen::VectorXd y(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& o = obs[r];
        auto it = std::find(week_list.begin(), week_list.end(), o.train_week);
        X(r, it - week_list.begin()) = 1.0;
        X(r, p - 1) = static_cast<double>(o.delay());
        y(r) = logit(o.auc);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < p)
        throw std::invalid_argument("fit_delay_model: degenerate design matrix");
    Eigen::VectorXd beta = qr.solve(y);

    DelayFit fit;
    fit.slope = beta(p - 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < week_list.size(); ++i) {
        fit.intercepts[week_list[i]] = beta(static_cast<Eigen::Index>(i));
        sum += beta(static_cast<Eigen::Index>(i));
    }
    fit.pooled_intercept = sum / static_cast<double>(week_list.size());
    Eigen::VectorXd res = y - X * beta;
    fit.residuals.assign(res.data(), res.data() + res.size());
    return fit;
}

}  // namespace motid
