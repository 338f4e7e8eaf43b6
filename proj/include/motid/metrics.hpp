#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "motid/scores.hpp"

namespace motid {

struct RankRecord {
    int true_class = 0;   // column index of the true participant
    int rank = 1;         // 1 = best, under descending score
    int n_classes = 2;
};

struct DelayObservation {
    int train_week = 0;
    int test_week = 0;
    double auc = 0.5;
    int delay() const { return std::abs(test_week - train_week); }
};

struct DelayFit {
    double slope = 0.0;              // logits per week of delay
    std::map<int, double> intercepts;  // per train week
    double pooled_intercept = 0.0;   // mean of week intercepts
    std::vector<double> residuals;
};

inline double logit(double p) { return std::log(p / (1.0 - p)); }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Hand-Till M: mean over unordered class pairs of the symmetrized pairwise
// AUC computed from mid-ranks of the column-i scores. labels[k] is the true
// column of row k; classes absent from labels are excluded from pairing.
double multiclass_auc(const Eigen::MatrixXd& scores,
                      const std::vector<int>& labels);

// Descending-score rank of the true class per row; exact ties are permuted
// by the seeded source.
std::vector<RankRecord> rank_records(const Eigen::MatrixXd& scores,
                                     const std::vector<int>& labels,
                                     std::uint64_t seed);

// Expected top-1 accuracy against the true class plus N-1 uniformly chosen
// distractors: mean over records of C(C-r, N-1) / C(C-1, N-1).
double n_class_accuracy(const std::vector<RankRecord>& records, int N);

// Fraction of rows whose top-scoring class is the true one (seeded
// tie-breaking).
double accuracy(const Eigen::MatrixXd& scores, const std::vector<int>& labels,
                std::uint64_t seed);

// OLS of logit(auc) on delay with fixed per-train-week intercept dummies.
DelayFit fit_delay_model(const std::vector<DelayObservation>& obs);

}  // namespace motid
