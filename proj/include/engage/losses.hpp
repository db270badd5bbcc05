#ifndef ENGAGE_LOSSES_HPP
#define ENGAGE_LOSSES_HPP

#include <array>
#include <vector>

namespace engage {

using Embedding = std::vector<double>;

// One prototype vector per engagement level in embedding space, plus the
// moving-average update rate. Centers start at zero and are pulled toward
// their class means by update_centers; they are not trained by SGD.
struct CenterBank {
    std::array<Embedding, 4> centers;
    double update_rate = 0.5;

    explicit CenterBank(int dim = 1, double update_rate = 0.5);
    int dim() const { return static_cast<int>(centers[0].size()); }
};

// Margin and mixing weight of the ranked-center regularizer in the total
// objective L = L_mse + lambda_crl * L_crl.
struct RankConfig {
    double delta = 1.0;
    double lambda_crl = 0.01;
};

// L2 distances between level centers: d1[i] = |C_i - C_{i+1}|,
// d2[i] = |C_i - C_{i+2}|, d3 = |C_0 - C_3|.
struct CenterDistances {
    std::array<double, 3> d1{};
    std::array<double, 2> d2{};
    double d3 = 0.0;
};

struct MseResult {
    double loss = 0.0;
    std::vector<double> d_predictions;
};

// loss = (1/n) sum (Y_i - r_i)^2, gradient 2(r_i - Y_i)/n.
MseResult mse_loss(const std::vector<double>& predictions, const std::vector<double>& labels);

CenterDistances center_distances(const CenterBank& bank);

struct RankLossResult {
    double rank1 = 0.0;
    double rank2 = 0.0;
    std::array<Embedding, 4> d_centers;
};

// Hinge sums over the margin constraints:
//   rank1 = sum_{i in 0..1} sum_{j in 0..2} max(0, delta - (d2[i] - d1[j]))
//   rank2 = sum_{j in 0..2}                 max(0, 2*delta - (d3 - d1[j]))
// Plain loss values from precomputed distances:
void rank_loss_values(const CenterDistances& dist, double delta, double& rank1, double& rank2);
// Full result with gradients w.r.t. the centers through the L2-norm chain
// rule. Hinge subgradient at the kink is 0; a zero-length distance
// contributes a zero direction.
RankLossResult rank_losses(const CenterBank& bank, double delta);

struct CenterLossResult {
    double loss = 0.0;
    std::vector<Embedding> d_embeddings;
};

// loss = (1/(2*batch)) sum |e_i - C_{label_i}|^2, gradient (e_i - C)/batch.
CenterLossResult center_loss(const std::vector<Embedding>& embeddings,
                             const std::vector<int>& labels, const CenterBank& bank);

// Standard center-update rule: for each level j present in the batch,
// C_j <- C_j - alpha * sum_{label_i=j}(C_j - e_i) / (1 + count_j).
void update_centers(CenterBank& bank, const std::vector<Embedding>& embeddings,
                    const std::vector<int>& labels);

struct CrlResult {
    double total = 0.0;
    double center = 0.0;
    double rank1 = 0.0;
    double rank2 = 0.0;
    std::vector<Embedding> d_embeddings;
    // Diagnostic only; training updates centers via update_centers.
    std::array<Embedding, 4> d_centers;
};

// L_crl = L_center + L_rank1 + L_rank2.
CrlResult crl_loss(const std::vector<Embedding>& embeddings, const std::vector<int>& labels,
                   const CenterBank& bank, double delta);

// L = mse + lambda * crl.
double total_loss(double mse, double crl, double lambda);

} // namespace engage

#endif
