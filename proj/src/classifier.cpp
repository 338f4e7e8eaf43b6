#include "motid/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "motid/rng.hpp"

namespace motid {

using nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 0x494E4954;
constexpr std::uint64_t kShuffleStream = 0x53484647;

Eigen::MatrixXd sigmoid_m(const Eigen::MatrixXd& x) {
    return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out = logits;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        double mx = out.row(r).maxCoeff();
        double lse = mx + std::log((out.row(r).array() - mx).exp().sum());
        out.row(r).array() -= lse;
    }
    return out;
}

void seeded_shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng() % i]);
}

// Batch slices over time from row-major float windows.
std::vector<Eigen::MatrixXd> batch_inputs(
    const std::vector<FeatureWindow>& windows,
    const std::vector<std::size_t>& idx, std::size_t begin, std::size_t end) {
    const Eigen::Index T = windows[idx[begin]].data.rows();
    const Eigen::Index D = windows[idx[begin]].data.cols();
    const Eigen::Index B = static_cast<Eigen::Index>(end - begin);
    std::vector<Eigen::MatrixXd> x_t(T, Eigen::MatrixXd(B, D));
    for (Eigen::Index b = 0; b < B; ++b) {
        const auto& data = windows[idx[begin + b]].data;
        for (Eigen::Index t = 0; t < T; ++t)
            for (Eigen::Index d = 0; d < D; ++d)
                x_t[t](b, d) = static_cast<double>(data(t, d));
    }
    return x_t;
}

struct LayerCache {
    std::vector<Eigen::MatrixXd> z, r, c, h_prev, h;
};

// Forward through all recurrent layers; fills caches when given.
Eigen::MatrixXd run_layers(const GruNet& net,
                           const std::vector<Eigen::MatrixXd>& x_t,
                           std::vector<LayerCache>* caches) {
    const std::size_t T = x_t.size();
    const Eigen::Index B = x_t[0].rows();
    if (caches) caches->assign(net.layers.size(), {});
    std::vector<Eigen::MatrixXd> input = x_t;
    Eigen::MatrixXd last_hidden;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const GruLayer& L = net.layers[l];
        const Eigen::Index H = L.Uz.rows();
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(B, H);
        LayerCache* cache = caches ? &(*caches)[l] : nullptr;
        if (cache) {
            cache->z.reserve(T);
            cache->r.reserve(T);
            cache->c.reserve(T);
            cache->h_prev.reserve(T);
            cache->h.reserve(T);
        }
        std::vector<Eigen::MatrixXd> out(T);
        for (std::size_t t = 0; t < T; ++t) {
            Eigen::MatrixXd z =
                sigmoid_m((input[t] * L.Wz + h * L.Uz).rowwise() + L.bz.row(0));
            Eigen::MatrixXd r =
                sigmoid_m((input[t] * L.Wr + h * L.Ur).rowwise() + L.br.row(0));
            Eigen::MatrixXd c =
                ((input[t] * L.Wh + (r.array() * h.array()).matrix() * L.Uh)
                     .rowwise() +
                 L.bh.row(0))
                    .array()
                    .tanh()
                    .matrix();
            Eigen::MatrixXd h_new =
                ((1.0 - z.array()) * h.array() + z.array() * c.array()).matrix();
            if (cache) {
                cache->z.push_back(z);
                cache->r.push_back(r);
                cache->c.push_back(c);
                cache->h_prev.push_back(h);
                cache->h.push_back(h_new);
            }
            h = std::move(h_new);
            out[t] = h;
        }
        last_hidden = h;
        input = std::move(out);
    }
    return last_hidden;
}

}  // namespace

void GruNet::init(std::uint64_t seed) {
    layers.assign(widths.size(), {});
    int in = input_dim;
    for (std::size_t l = 0; l < widths.size(); ++l) {
        int H = widths[l];
        GruLayer& L = layers[l];
        for (Eigen::MatrixXd* W : {&L.Wz, &L.Wr, &L.Wh}) W->resize(in, H);
        for (Eigen::MatrixXd* U : {&L.Uz, &L.Ur, &L.Uh}) U->resize(H, H);
        for (Eigen::MatrixXd* b : {&L.bz, &L.br, &L.bh}) b->setZero(1, H);
        in = H;
    }
    Wo.resize(in, n_classes);
    bo.setZero(1, n_classes);

    auto rng = make_rng(seed, kInitStream);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for_each_param([&](const char* name, Eigen::MatrixXd& m) {
        if (name[0] == 'b') return;  // biases stay zero
        double scale = 1.0 / std::sqrt(static_cast<double>(m.rows()));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = scale * gauss(rng);
    });
}

void GruNet::for_each_param(
    const std::function<void(const char*, Eigen::MatrixXd&)>& fn) {
    for (auto& L : layers) {
        fn("Wz", L.Wz);
        fn("Uz", L.Uz);
        fn("bz", L.bz);
        fn("Wr", L.Wr);
        fn("Ur", L.Ur);
        fn("br", L.br);
        fn("Wh", L.Wh);
        fn("Uh", L.Uh);
        fn("bh", L.bh);
    }
    fn("Wo", Wo);
    fn("bo", bo);
}

std::vector<const Eigen::MatrixXd*> GruNet::params() const {
    std::vector<const Eigen::MatrixXd*> out;
    const_cast<GruNet*>(this)->for_each_param(
        [&](const char*, Eigen::MatrixXd& m) { out.push_back(&m); });
    return out;
}

GruNet GruNet::zeros_like() const {
    GruNet g;
    g.input_dim = input_dim;
    g.n_classes = n_classes;
    g.widths = widths;
    g.layers.assign(layers.size(), {});
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const GruLayer& L = layers[l];
        GruLayer& G = g.layers[l];
        G.Wz.setZero(L.Wz.rows(), L.Wz.cols());
        G.Uz.setZero(L.Uz.rows(), L.Uz.cols());
        G.bz.setZero(1, L.bz.cols());
        G.Wr.setZero(L.Wr.rows(), L.Wr.cols());
        G.Ur.setZero(L.Ur.rows(), L.Ur.cols());
        G.br.setZero(1, L.br.cols());
        G.Wh.setZero(L.Wh.rows(), L.Wh.cols());
        G.Uh.setZero(L.Uh.rows(), L.Uh.cols());
        G.bh.setZero(1, L.bh.cols());
    }
    g.Wo.setZero(Wo.rows(), Wo.cols());
    g.bo.setZero(1, bo.cols());
    return g;
}

Eigen::MatrixXd GruNet::forward(const std::vector<Eigen::MatrixXd>& x_t) const {
    Eigen::MatrixXd hT = run_layers(*this, x_t, nullptr);
    return (hT * Wo).rowwise() + bo.row(0);
}

double GruNet::loss_and_grad(const std::vector<Eigen::MatrixXd>& x_t,
                             const std::vector<int>& labels, GruNet& grad) const {
    grad = zeros_like();
    const Eigen::Index B = x_t[0].rows();
    const std::size_t T = x_t.size();

    std::vector<LayerCache> caches;
    Eigen::MatrixXd hT = run_layers(*this, x_t, &caches);
    Eigen::MatrixXd logits = (hT * Wo).rowwise() + bo.row(0);
    Eigen::MatrixXd logp = log_softmax_rows(logits);

    double loss = 0.0;
    Eigen::MatrixXd dlogits = logp.array().exp().matrix();
    for (Eigen::Index b = 0; b < B; ++b) {
        loss -= logp(b, labels[static_cast<std::size_t>(b)]);
        dlogits(b, labels[static_cast<std::size_t>(b)]) -= 1.0;
    }
    loss /= static_cast<double>(B);
    dlogits /= static_cast<double>(B);

    grad.Wo = hT.transpose() * dlogits;
    grad.bo.row(0) = dlogits.colwise().sum();

    // dh_out per timestep for the current layer; top layer only gets the
    // head gradient at the final step.
    std::vector<Eigen::MatrixXd> dh_out(T);
    const Eigen::Index topH = widths.back();
    for (std::size_t t = 0; t + 1 < T; ++t) dh_out[t] = Eigen::MatrixXd::Zero(B, topH);
    dh_out[T - 1] = dlogits * Wo.transpose();

    for (std::size_t li = layers.size(); li-- > 0;) {
        const GruLayer& L = layers[li];
        GruLayer& G = grad.layers[li];
        const LayerCache& cc = caches[li];
        std::vector<Eigen::MatrixXd> dx(T);
        Eigen::MatrixXd dH_carry = Eigen::MatrixXd::Zero(B, L.Uz.rows());
        for (std::size_t t = T; t-- > 0;) {
            const Eigen::MatrixXd& input =
                li == 0 ? x_t[t] : caches[li - 1].h[t];
            Eigen::MatrixXd dh = dh_out[t] + dH_carry;
            const auto z = cc.z[t].array();
            const auto r = cc.r[t].array();
            const auto c = cc.c[t].array();
            const auto hp = cc.h_prev[t].array();

            Eigen::MatrixXd dc = (dh.array() * z).matrix();
            Eigen::MatrixXd dz = (dh.array() * (c - hp)).matrix();
            Eigen::MatrixXd dHp = (dh.array() * (1.0 - z)).matrix();

            Eigen::MatrixXd dac = (dc.array() * (1.0 - c * c)).matrix();
            Eigen::MatrixXd daz = (dz.array() * z * (1.0 - z)).matrix();

            G.Wh += input.transpose() * dac;
            G.Uh += (r * hp).matrix().transpose() * dac;
            G.bh.row(0) += dac.colwise().sum();

            Eigen::MatrixXd dRH = dac * L.Uh.transpose();
            Eigen::MatrixXd dr = (dRH.array() * hp).matrix();
            dHp += (dRH.array() * r).matrix();
            Eigen::MatrixXd dar = (dr.array() * r * (1.0 - r)).matrix();

            G.Wz += input.transpose() * daz;
            G.Uz += cc.h_prev[t].transpose() * daz;
            G.bz.row(0) += daz.colwise().sum();
            G.Wr += input.transpose() * dar;
            G.Ur += cc.h_prev[t].transpose() * dar;
            G.br.row(0) += dar.colwise().sum();

            dHp += daz * L.Uz.transpose() + dar * L.Ur.transpose();
            dx[t] = daz * L.Wz.transpose() + dar * L.Wr.transpose() +
                    dac * L.Wh.transpose();
            dH_carry = std::move(dHp);
        }
        dh_out = std::move(dx);
    }
    return loss;
}

GruFunnel GruFunnel::train(const std::vector<FeatureWindow>& windows,
                           const RecurrentFunnelConfig& cfg,
                           std::vector<TrainLogEntry>* log) {
    if (windows.empty()) throw std::invalid_argument("train: no windows");
    for (std::size_t i = 1; i < cfg.widths.size(); ++i)
        if (cfg.widths[i] >= cfg.widths[i - 1])
            throw std::invalid_argument("train: widths must be strictly decreasing");
    if (!(cfg.learning_rate > 0.0))
        throw std::invalid_argument("train: learning rate must be > 0");

    const Eigen::Index T = windows[0].data.rows();
    const Eigen::Index D = windows[0].data.cols();
    for (const auto& w : windows)
        if (w.data.rows() != T || w.data.cols() != D)
            throw std::invalid_argument("train: window shape mismatch");

    std::set<std::string> ids;
    for (const auto& w : windows) ids.insert(w.participant);
    if (ids.size() < 2) throw std::invalid_argument("train: need >= 2 classes");
    LabelSpace labels(ids.begin(), ids.end());
    std::map<std::string, int> label_of;
    for (std::size_t i = 0; i < labels.size(); ++i)
        label_of[labels[i]] = static_cast<int>(i);
    std::vector<int> y(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i)
        y[i] = label_of[windows[i].participant];

    GruNet net;
    net.input_dim = static_cast<int>(D);
    net.n_classes = static_cast<int>(labels.size());
    net.widths = cfg.widths;
    net.init(cfg.seed);

    // Validation slice: first val_fraction of a seeded shuffle, never
    // emptying a class on the training side.
    auto rng = make_rng(cfg.seed, kShuffleStream);
    std::vector<std::size_t> order(windows.size());
    std::iota(order.begin(), order.end(), 0);
    seeded_shuffle(order, rng);
    std::vector<int> train_count(labels.size(), 0);
    for (int c : y) ++train_count[static_cast<std::size_t>(c)];
    std::size_t val_target =
        static_cast<std::size_t>(cfg.val_fraction * static_cast<double>(windows.size()));
    std::vector<std::size_t> val_idx, train_idx;
    for (std::size_t i : order) {
        int c = y[i];
        if (val_idx.size() < val_target && train_count[c] > 1) {
            val_idx.push_back(i);
            --train_count[c];
        } else {
            train_idx.push_back(i);
        }
    }

    GruNet m = net.zeros_like(), v = net.zeros_like(), grad = net.zeros_like();
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    long step = 0;

    auto adam_step = [&]() {
        ++step;
        double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        std::vector<Eigen::MatrixXd*> pm, pg, pmm, pvv;
        net.for_each_param([&](const char*, Eigen::MatrixXd& x) { pm.push_back(&x); });
        grad.for_each_param([&](const char*, Eigen::MatrixXd& x) { pg.push_back(&x); });
        m.for_each_param([&](const char*, Eigen::MatrixXd& x) { pmm.push_back(&x); });
        v.for_each_param([&](const char*, Eigen::MatrixXd& x) { pvv.push_back(&x); });
        for (std::size_t i = 0; i < pm.size(); ++i) {
            pmm[i]->array() = beta1 * pmm[i]->array() + (1.0 - beta1) * pg[i]->array();
            pvv[i]->array() =
                beta2 * pvv[i]->array() + (1.0 - beta2) * pg[i]->array().square();
            pm[i]->array() -= cfg.learning_rate * (pmm[i]->array() / bc1) /
                              ((pvv[i]->array() / bc2).sqrt() + eps);
        }
    };

    auto eval_set = [&](const std::vector<std::size_t>& idx, double* acc) {
        double loss = 0.0;
        std::size_t hits = 0;
        for (std::size_t b = 0; b < idx.size(); b += cfg.batch_size) {
            std::size_t e = std::min(idx.size(), b + cfg.batch_size);
            auto x_t = batch_inputs(windows, idx, b, e);
            Eigen::MatrixXd logp = log_softmax_rows(net.forward(x_t));
            for (std::size_t i = b; i < e; ++i) {
                Eigen::Index row = static_cast<Eigen::Index>(i - b);
                loss -= logp(row, y[idx[i]]);
                Eigen::Index am;
                logp.row(row).maxCoeff(&am);
                if (am == y[idx[i]]) ++hits;
            }
        }
        if (acc) *acc = idx.empty() ? 0.0
                                    : static_cast<double>(hits) /
                                          static_cast<double>(idx.size());
        return idx.empty() ? 0.0 : loss / static_cast<double>(idx.size());
    };

    double best_val = std::numeric_limits<double>::infinity();
    GruNet best_net = net;
    int since_best = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        seeded_shuffle(train_idx, rng);
        double epoch_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t b = 0; b < train_idx.size(); b += cfg.batch_size) {
            std::size_t e = std::min(train_idx.size(), b + cfg.batch_size);
            auto x_t = batch_inputs(windows, train_idx, b, e);
            std::vector<int> yb;
            for (std::size_t i = b; i < e; ++i) yb.push_back(y[train_idx[i]]);
            double loss = net.loss_and_grad(x_t, yb, grad);
            if (!std::isfinite(loss))
                throw std::runtime_error("train: non-finite loss at epoch " +
                                         std::to_string(epoch) + " batch " +
                                         std::to_string(n_batches));
            adam_step();
            epoch_loss += loss;
            ++n_batches;
        }
        epoch_loss /= std::max<std::size_t>(1, n_batches);

        TrainLogEntry entry;
        entry.epoch = epoch;
        entry.train_loss = epoch_loss;
        if (!val_idx.empty()) {
            entry.val_loss = eval_set(val_idx, &entry.val_accuracy);
            if (entry.val_loss < best_val - 1e-9) {
                best_val = entry.val_loss;
                best_net = net;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                if (log) log->push_back(entry);
                break;
            }
        }
        if (log) log->push_back(entry);
    }
    if (!val_idx.empty()) net = best_net;
    return GruFunnel(std::move(labels), cfg, std::move(net));
}

ScoreMatrix GruFunnel::predict_windows(
    const std::vector<FeatureWindow>& windows) const {
    if (labels_.empty()) throw std::runtime_error("predict: empty label space");
    ScoreMatrix sm;
    sm.labels = labels_;
    sm.scores.resize(static_cast<Eigen::Index>(windows.size()),
                     static_cast<Eigen::Index>(labels_.size()));
    sm.rows.resize(windows.size());
    std::vector<std::size_t> idx(windows.size());
    std::iota(idx.begin(), idx.end(), 0);
    const int batch = 64;
    for (std::size_t b = 0; b < windows.size(); b += batch) {
        std::size_t e = std::min(windows.size(), b + batch);
        for (std::size_t i = b; i < e; ++i)
            if (windows[i].data.cols() != net_.input_dim)
                throw std::invalid_argument("predict: window shape mismatch");
        auto x_t = batch_inputs(windows, idx, b, e);
        Eigen::MatrixXd logp = log_softmax_rows(net_.forward(x_t));
        for (std::size_t i = b; i < e; ++i) {
            sm.scores.row(static_cast<Eigen::Index>(i)) =
                logp.row(static_cast<Eigen::Index>(i - b));
            sm.rows[i] = {windows[i].participant, windows[i].session,
                          windows[i].start_t};
        }
    }
    return sm;
}

std::vector<double> GruFunnel::head_only_loss_curve(
    const std::vector<FeatureWindow>& windows, double lr, int epochs) {
    std::map<std::string, int> label_of;
    for (std::size_t i = 0; i < labels_.size(); ++i)
        label_of[labels_[i]] = static_cast<int>(i);
    std::vector<std::size_t> idx(windows.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto x_t = batch_inputs(windows, idx, 0, windows.size());
    Eigen::MatrixXd hT = run_layers(net_, x_t, nullptr);  // frozen features
    const Eigen::Index B = hT.rows();
    std::vector<int> y;
    for (const auto& w : windows) y.push_back(label_of.at(w.participant));

    std::vector<double> curve;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        Eigen::MatrixXd logits = (hT * net_.Wo).rowwise() + net_.bo.row(0);
        Eigen::MatrixXd logp = log_softmax_rows(logits);
        double loss = 0.0;
        Eigen::MatrixXd dlogits = logp.array().exp().matrix();
        for (Eigen::Index b = 0; b < B; ++b) {
            loss -= logp(b, y[static_cast<std::size_t>(b)]);
            dlogits(b, y[static_cast<std::size_t>(b)]) -= 1.0;
        }
        loss /= static_cast<double>(B);
        dlogits /= static_cast<double>(B);
        curve.push_back(loss);
        net_.Wo -= lr * (hT.transpose() * dlogits);
        net_.bo.row(0) -= lr * dlogits.colwise().sum();
    }
    return curve;
}

void GruFunnel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    std::vector<std::string> block_names;
    const_cast<GruNet&>(net_).for_each_param(
        [&](const char* name, Eigen::MatrixXd&) { block_names.push_back(name); });
    json header = {{"layout", 1},
                   {"labels", labels_},
                   {"input_dim", net_.input_dim},
                   {"n_classes", net_.n_classes},
                   {"storage", "colmajor-float32"},
                   {"blocks", block_names},
                   {"config",
                    {{"widths", cfg_.widths},
                     {"learning_rate", cfg_.learning_rate},
                     {"batch_size", cfg_.batch_size},
                     {"max_epochs", cfg_.max_epochs},
                     {"patience", cfg_.patience},
                     {"val_fraction", cfg_.val_fraction},
                     {"seed", cfg_.seed}}}};
    out << header.dump() << "\n";
    const_cast<GruNet&>(net_).for_each_param([&](const char*, Eigen::MatrixXd& p) {
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            for (Eigen::Index i = 0; i < p.rows(); ++i) {
                float f = static_cast<float>(p(i, j));
                out.write(reinterpret_cast<const char*>(&f), sizeof(float));
            }
    });
}

GruFunnel GruFunnel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string header_line;
    std::getline(in, header_line);
    json header = json::parse(header_line);
    if (header.at("layout").get<int>() != 1)
        throw std::runtime_error(path.string() + ": unknown checkpoint layout");
    RecurrentFunnelConfig cfg;
    const json& jc = header.at("config");
    cfg.widths = jc.at("widths").get<std::vector<int>>();
    cfg.learning_rate = jc.at("learning_rate").get<double>();
    cfg.batch_size = jc.at("batch_size").get<int>();
    cfg.max_epochs = jc.at("max_epochs").get<int>();
    cfg.patience = jc.at("patience").get<int>();
    cfg.val_fraction = jc.at("val_fraction").get<double>();
    cfg.seed = jc.at("seed").get<std::uint64_t>();

    GruNet net;
    net.input_dim = header.at("input_dim").get<int>();
    net.n_classes = header.at("n_classes").get<int>();
    net.widths = cfg.widths;
    net.init(0);  // allocate shapes, values overwritten below
    net.for_each_param([&](const char*, Eigen::MatrixXd& p) {
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            for (Eigen::Index i = 0; i < p.rows(); ++i) {
                float f;
                in.read(reinterpret_cast<char*>(&f), sizeof(float));
                p(i, j) = static_cast<double>(f);
            }
    });
    if (!in) throw std::runtime_error(path.string() + ": truncated checkpoint");
    return GruFunnel(header.at("labels").get<LabelSpace>(), cfg, std::move(net));
}

SessionAggregate aggregate_session(const Eigen::MatrixXd& window_rows,
                                   AggregateMode mode, std::uint64_t seed) {
    if (window_rows.rows() == 0)
        throw std::invalid_argument("aggregate_session: empty input");
    SessionAggregate out;
    out.session_row = window_rows.colwise().sum();

    auto seeded_argmax = [&](const Eigen::RowVectorXd& row,
                             std::uint64_t salt) -> std::pair<int, bool> {
        double mx = row.maxCoeff();
        std::vector<int> best;
        for (Eigen::Index j = 0; j < row.size(); ++j)
            if (row(j) == mx) best.push_back(static_cast<int>(j));
        if (best.size() == 1) return {best[0], false};
        auto rng = make_rng(seed, salt);
        return {best[rng() % best.size()], true};
    };

    if (mode == AggregateMode::logsum) {
        auto [idx, tie] = seeded_argmax(out.session_row, 0);
        out.predicted = idx;
        out.tie = tie;
    } else {
        std::vector<int> votes(static_cast<std::size_t>(window_rows.cols()), 0);
        for (Eigen::Index r = 0; r < window_rows.rows(); ++r) {
            auto [idx, tie] = seeded_argmax(window_rows.row(r),
                                            static_cast<std::uint64_t>(r) + 1);
            out.tie = out.tie || tie;
            ++votes[static_cast<std::size_t>(idx)];
        }
        int mx = *std::max_element(votes.begin(), votes.end());
        std::vector<int> best;
        for (std::size_t j = 0; j < votes.size(); ++j)
            if (votes[j] == mx) best.push_back(static_cast<int>(j));
        if (best.size() == 1) {
            out.predicted = best[0];
        } else {
            auto rng = make_rng(seed, 0x564F5445);
            out.predicted = best[rng() % best.size()];
            out.tie = true;
        }
    }
    return out;
}

Eigen::VectorXd NearestCentroid::summarize(const FeatureWindow& w) {
    const Eigen::Index T = w.data.rows();
    const Eigen::Index D = w.data.cols();
    Eigen::VectorXd out(2 * D);
    for (Eigen::Index d = 0; d < D; ++d) {
        double mean = 0.0;
        for (Eigen::Index t = 0; t < T; ++t) mean += w.data(t, d);
        mean /= static_cast<double>(T);
        double var = 0.0;
        for (Eigen::Index t = 0; t < T; ++t) {
            double dv = w.data(t, d) - mean;
            var += dv * dv;
        }
        out(d) = mean;
        out(D + d) = std::sqrt(var / static_cast<double>(T));
    }
    return out;
}

NearestCentroid NearestCentroid::train(const std::vector<FeatureWindow>& windows) {
    if (windows.empty()) throw std::invalid_argument("baseline: no windows");
    std::set<std::string> ids;
    for (const auto& w : windows) ids.insert(w.participant);
    if (ids.size() < 2) throw std::invalid_argument("baseline: need >= 2 classes");

    NearestCentroid nc;
    nc.labels_.assign(ids.begin(), ids.end());
    const Eigen::Index D = 2 * windows[0].data.cols();

    Eigen::MatrixXd summaries(static_cast<Eigen::Index>(windows.size()), D);
    for (std::size_t i = 0; i < windows.size(); ++i)
        summaries.row(static_cast<Eigen::Index>(i)) = summarize(windows[i]);

    Eigen::RowVectorXd mean = summaries.colwise().mean();
    Eigen::RowVectorXd sd =
        ((summaries.rowwise() - mean).array().square().colwise().mean())
            .sqrt()
            .matrix();
    nc.scale_ = (sd.array() + 1e-9).matrix().transpose();

    nc.centroids_.setZero(static_cast<Eigen::Index>(nc.labels_.size()), D);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(nc.labels_.size()));
    std::map<std::string, Eigen::Index> label_of;
    for (std::size_t i = 0; i < nc.labels_.size(); ++i)
        label_of[nc.labels_[i]] = static_cast<Eigen::Index>(i);
    for (std::size_t i = 0; i < windows.size(); ++i) {
        Eigen::Index c = label_of[windows[i].participant];
        nc.centroids_.row(c) +=
            (summaries.row(static_cast<Eigen::Index>(i)).array() /
             nc.scale_.transpose().array())
                .matrix();
        counts(c) += 1.0;
    }
    for (Eigen::Index c = 0; c < nc.centroids_.rows(); ++c)
        nc.centroids_.row(c) /= counts(c);
    return nc;
}

ScoreMatrix NearestCentroid::predict_windows(
    const std::vector<FeatureWindow>& windows) const {
    ScoreMatrix sm;
    sm.labels = labels_;
    sm.scores.resize(static_cast<Eigen::Index>(windows.size()),
                     centroids_.rows());
    sm.rows.resize(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        Eigen::VectorXd s =
            (summarize(windows[i]).array() / scale_.array()).matrix();
        Eigen::RowVectorXd neg_d(centroids_.rows());
        for (Eigen::Index c = 0; c < centroids_.rows(); ++c)
            neg_d(c) = -(centroids_.row(c).transpose() - s).norm();
        // log-softmax over negative distances
        double mx = neg_d.maxCoeff();
        double lse = mx + std::log((neg_d.array() - mx).exp().sum());
        sm.scores.row(static_cast<Eigen::Index>(i)) =
            (neg_d.array() - lse).matrix();
        sm.rows[i] = {windows[i].participant, windows[i].session,
                      windows[i].start_t};
    }
    return sm;
}

}  // namespace motid
