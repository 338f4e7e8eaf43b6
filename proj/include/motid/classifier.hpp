#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "motid/preprocess.hpp"
#include "motid/scores.hpp"

namespace motid {

struct RecurrentFunnelConfig {
    std::vector<int> widths = {256, 128, 64};  // strictly decreasing
    double learning_rate = 0.001;
    int batch_size = 64;
    int max_epochs = 100;
    int patience = 10;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;
};

// One stack of gated recurrent layers; the last hidden state feeds a dense
// softmax head. All parameters are plain matrices so gradients, Adam state
// and checkpoints share one traversal order.
struct GruLayer {
    Eigen::MatrixXd Wz, Uz, bz;  // update gate (in x out, out x out, 1 x out)
    Eigen::MatrixXd Wr, Ur, br;  // reset gate
    Eigen::MatrixXd Wh, Uh, bh;  // candidate
};

struct GruNet {
    int input_dim = 0;
    int n_classes = 0;
    std::vector<int> widths;
    std::vector<GruLayer> layers;
    Eigen::MatrixXd Wo, bo;  // head

    void init(std::uint64_t seed);

    // Fixed parameter traversal order (also the checkpoint block order):
    // per layer Wz,Uz,bz,Wr,Ur,br,Wh,Uh,bh then Wo,bo.
    void for_each_param(const std::function<void(const char*, Eigen::MatrixXd&)>& fn);
    std::vector<const Eigen::MatrixXd*> params() const;

    // x_t: sequence over time of (batch x input_dim) slices. Returns logits
    // (batch x n_classes).
    Eigen::MatrixXd forward(const std::vector<Eigen::MatrixXd>& x_t) const;

    // Mean cross-entropy over the batch plus full backpropagation through
    // time; gradients are written into `grad` (same shapes, zeroed here).
    double loss_and_grad(const std::vector<Eigen::MatrixXd>& x_t,
                         const std::vector<int>& labels, GruNet& grad) const;

    GruNet zeros_like() const;
};

struct TrainLogEntry {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

class GruFunnel {
  public:
    // Labels are taken from the windows' participant ids. Deterministic for a
    // fixed (windows, config) pair. Throws on a single class, shape mismatch,
    // or non-finite loss (with epoch/batch in the message).
    static GruFunnel train(const std::vector<FeatureWindow>& windows,
                           const RecurrentFunnelConfig& cfg,
                           std::vector<TrainLogEntry>* log = nullptr);

    ScoreMatrix predict_windows(const std::vector<FeatureWindow>& windows) const;

    // Full-batch plain gradient descent on the softmax head only (recurrent
    // weights frozen); returns the per-epoch loss curve.
    std::vector<double> head_only_loss_curve(
        const std::vector<FeatureWindow>& windows, double lr, int epochs);

    void save(const std::filesystem::path& path) const;
    static GruFunnel load(const std::filesystem::path& path);

    const LabelSpace& labels() const { return labels_; }
    const RecurrentFunnelConfig& config() const { return cfg_; }
    GruNet& net() { return net_; }

    GruFunnel() = default;
    GruFunnel(LabelSpace labels, RecurrentFunnelConfig cfg, GruNet net)
        : labels_(std::move(labels)), cfg_(std::move(cfg)), net_(std::move(net)) {}

  private:
    LabelSpace labels_;
    RecurrentFunnelConfig cfg_;
    GruNet net_;
};

enum class AggregateMode { logsum, vote };

struct SessionAggregate {
    int predicted = -1;          // label-space index
    Eigen::RowVectorXd session_row;  // column-wise sum of log probabilities
    bool tie = false;            // a seeded tie-break happened
};

// window_rows: normalized log-probability rows for one session's windows.
SessionAggregate aggregate_session(const Eigen::MatrixXd& window_rows,
                                   AggregateMode mode, std::uint64_t seed);

// Nearest-centroid sanity baseline over per-window channel means and
// standard deviations (72-dim summaries); same ScoreMatrix contract as the
// funnel, scores = softmax over negative distances.
class NearestCentroid {
  public:
    static NearestCentroid train(const std::vector<FeatureWindow>& windows);
    ScoreMatrix predict_windows(const std::vector<FeatureWindow>& windows) const;

    static Eigen::VectorXd summarize(const FeatureWindow& w);

    const LabelSpace& labels() const { return labels_; }
    const Eigen::MatrixXd& centroids() const { return centroids_; }

  private:
    LabelSpace labels_;
    Eigen::MatrixXd centroids_;  // classes x 72, standardized space
    Eigen::VectorXd scale_;      // per-dim standardization divisor
};

}  // namespace motid
