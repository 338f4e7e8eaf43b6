#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace motid {

// Ordered participant ids; one-hot position = list index. The ordering is
// persisted with any model that uses it.
using LabelSpace = std::vector<std::string>;

struct ScoreRowMeta {
    std::string participant;  // true identity of the unit
    int session = 0;
    double window_start = 0.0;  // seconds; -1 for aggregated session rows
};

// Rows = evaluation units (windows or sessions), columns = LabelSpace,
// values = log probabilities. Window rows are normalized (logsumexp 0);
// session rows are unnormalized sums.
struct ScoreMatrix {
    LabelSpace labels;
    Eigen::MatrixXd scores;
    std::vector<ScoreRowMeta> rows;

    int label_index(const std::string& id) const {
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == id) return static_cast<int>(i);
        return -1;
    }
};

}  // namespace motid
