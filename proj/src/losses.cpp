#include "engage/losses.hpp"

#include <cmath>
#include <string>

#include "engage/common.hpp"

namespace engage {

CenterBank::CenterBank(int dim, double update_rate) : update_rate(update_rate) {
    if (dim < 1) throw ValidationError("center bank dimension must be positive");
    if (update_rate < 0.0 || update_rate > 1.0)
        throw ValidationError("center update rate must be in [0, 1], got " +
                              std::to_string(update_rate));
    for (auto& c : centers) c.assign(static_cast<size_t>(dim), 0.0);
}

MseResult mse_loss(const std::vector<double>& predictions, const std::vector<double>& labels) {
    if (predictions.empty()) throw ValidationError("mse_loss: empty batch");
    if (predictions.size() != labels.size())
        throw ValidationError("mse_loss: " + std::to_string(predictions.size()) +
                              " predictions vs " + std::to_string(labels.size()) + " labels");
    const double n = static_cast<double>(predictions.size());
    MseResult res;
    res.d_predictions.resize(predictions.size());
    for (size_t i = 0; i < predictions.size(); ++i) {
        double diff = predictions[i] - labels[i];
        res.loss += diff * diff;
        res.d_predictions[i] = 2.0 * diff / n;
    }
    res.loss /= n;
    return res;
}

namespace {

double l2_distance(const Embedding& a, const Embedding& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Adds g * (C_a - C_b)/|C_a - C_b| to grad[a] and the negative to
// grad[b]; zero-length differences contribute nothing.
void add_norm_grad(std::array<Embedding, 4>& grads, const CenterBank& bank, int a, int b,
                   double norm, double g) {
    if (norm <= 0.0) return;
    const Embedding& ca = bank.centers[static_cast<size_t>(a)];
    const Embedding& cb = bank.centers[static_cast<size_t>(b)];
    for (size_t i = 0; i < ca.size(); ++i) {
        double u = (ca[i] - cb[i]) / norm;
        grads[static_cast<size_t>(a)][i] += g * u;
        grads[static_cast<size_t>(b)][i] -= g * u;
    }
}

} // namespace

CenterDistances center_distances(const CenterBank& bank) {
    CenterDistances d;
    for (int i = 0; i < 3; ++i) d.d1[static_cast<size_t>(i)] = l2_distance(bank.centers[i], bank.centers[i + 1]);
    for (int i = 0; i < 2; ++i) d.d2[static_cast<size_t>(i)] = l2_distance(bank.centers[i], bank.centers[i + 2]);
    d.d3 = l2_distance(bank.centers[0], bank.centers[3]);
    return d;
}

void rank_loss_values(const CenterDistances& dist, double delta, double& rank1, double& rank2) {
    if (delta <= 0.0) throw ValidationError("rank loss margin delta must be positive");
    rank1 = 0.0;
    rank2 = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) {
            double arg = delta - (dist.d2[static_cast<size_t>(i)] - dist.d1[static_cast<size_t>(j)]);
            if (arg > 0.0) rank1 += arg;
        }
    for (int j = 0; j < 3; ++j) {
        double arg = 2.0 * delta - (dist.d3 - dist.d1[static_cast<size_t>(j)]);
        if (arg > 0.0) rank2 += arg;
    }
}

RankLossResult rank_losses(const CenterBank& bank, double delta) {
    CenterDistances dist = center_distances(bank);
    RankLossResult res;
    for (auto& g : res.d_centers) g.assign(static_cast<size_t>(bank.dim()), 0.0);
    rank_loss_values(dist, delta, res.rank1, res.rank2);

    // Active hinge terms push d2/d3 up and d1 down; route through the
    // unit directions of the involved center pairs.
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j) {
            double arg = delta - (dist.d2[static_cast<size_t>(i)] - dist.d1[static_cast<size_t>(j)]);
            if (arg > 0.0) {
                add_norm_grad(res.d_centers, bank, i, i + 2, dist.d2[static_cast<size_t>(i)], -1.0);
                add_norm_grad(res.d_centers, bank, j, j + 1, dist.d1[static_cast<size_t>(j)], 1.0);
            }
        }
    for (int j = 0; j < 3; ++j) {
        double arg = 2.0 * delta - (dist.d3 - dist.d1[static_cast<size_t>(j)]);
        if (arg > 0.0) {
            add_norm_grad(res.d_centers, bank, 0, 3, dist.d3, -1.0);
            add_norm_grad(res.d_centers, bank, j, j + 1, dist.d1[static_cast<size_t>(j)], 1.0);
        }
    }
    return res;
}

namespace {

void check_batch(const std::vector<Embedding>& embeddings, const std::vector<int>& labels,
                 const CenterBank& bank, const char* op) {
    if (embeddings.empty()) throw ValidationError(std::string(op) + ": empty batch");
    if (embeddings.size() != labels.size())
        throw ValidationError(std::string(op) + ": batch size mismatch between embeddings and labels");
    for (size_t i = 0; i < embeddings.size(); ++i) {
        if (labels[i] < 0 || labels[i] > 3)
            throw ValidationError(std::string(op) + ": label index out of range at position " +
                                  std::to_string(i));
        if (static_cast<int>(embeddings[i].size()) != bank.dim())
            throw ValidationError(std::string(op) + ": embedding dim " +
                                  std::to_string(embeddings[i].size()) + " vs bank dim " +
                                  std::to_string(bank.dim()));
    }
}

} // namespace

CenterLossResult center_loss(const std::vector<Embedding>& embeddings,
                             const std::vector<int>& labels, const CenterBank& bank) {
    check_batch(embeddings, labels, bank, "center_loss");
    const double batch = static_cast<double>(embeddings.size());
    CenterLossResult res;
    res.d_embeddings.resize(embeddings.size());
    for (size_t i = 0; i < embeddings.size(); ++i) {
        const Embedding& c = bank.centers[static_cast<size_t>(labels[i])];
        res.d_embeddings[i].resize(embeddings[i].size());
        for (size_t j = 0; j < embeddings[i].size(); ++j) {
            double d = embeddings[i][j] - c[j];
            res.loss += d * d;
            res.d_embeddings[i][j] = d / batch;
        }
    }
    res.loss /= 2.0 * batch;
    return res;
}

void update_centers(CenterBank& bank, const std::vector<Embedding>& embeddings,
                    const std::vector<int>& labels) {
    check_batch(embeddings, labels, bank, "update_centers");
    for (int level = 0; level < 4; ++level) {
        int count = 0;
        Embedding sum(static_cast<size_t>(bank.dim()), 0.0);
        for (size_t i = 0; i < embeddings.size(); ++i) {
            if (labels[i] != level) continue;
            ++count;
            for (size_t j = 0; j < sum.size(); ++j)
                sum[j] += bank.centers[static_cast<size_t>(level)][j] - embeddings[i][j];
        }
        if (count == 0) continue;
        double step = bank.update_rate / (1.0 + static_cast<double>(count));
        for (size_t j = 0; j < sum.size(); ++j)
            bank.centers[static_cast<size_t>(level)][j] -= step * sum[j];
    }
}

CrlResult crl_loss(const std::vector<Embedding>& embeddings, const std::vector<int>& labels,
                   const CenterBank& bank, double delta) {
    CenterLossResult c = center_loss(embeddings, labels, bank);
    RankLossResult r = rank_losses(bank, delta);

    CrlResult res;
    res.center = c.loss;
    res.rank1 = r.rank1;
    res.rank2 = r.rank2;
    res.total = c.loss + r.rank1 + r.rank2;
    res.d_embeddings = std::move(c.d_embeddings);

    // Center-loss term also depends on the centers; fold it in so the
    // diagnostic gradient covers the full L_crl.
    res.d_centers = std::move(r.d_centers);
    const double batch = static_cast<double>(embeddings.size());
    for (size_t i = 0; i < embeddings.size(); ++i) {
        const Embedding& cvec = bank.centers[static_cast<size_t>(labels[i])];
        Embedding& g = res.d_centers[static_cast<size_t>(labels[i])];
        for (size_t j = 0; j < cvec.size(); ++j) g[j] += (cvec[j] - embeddings[i][j]) / batch;
    }
    return res;
}

double total_loss(double mse, double crl, double lambda) {
    if (lambda < 0.0) throw ValidationError("lambda_crl must be >= 0");
    return mse + lambda * crl;
}

} // namespace engage
