#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "xlstance/latent.hpp"

namespace xlstance {

enum class BalancingSource { target_counts, batch_counts };

struct SeparabilityConfig {
    double epsilon = 1e-8;  // norm guard in the cosine dissimilarity
    double alpha = 1.0;     // weight of the separability term in the total loss
    BalancingSource balancing_source = BalancingSource::target_counts;
    // Class counts of the target training split; consulted when
    // balancing_source == target_counts. Unset means the trainer fills
    // it from the training corpus. Zero counts drive lambda to 0.
    std::optional<std::array<std::size_t, 3>> target_class_counts;
    // Literal batch sum by default; the normalized variant divides the
    // within-class numerator by the row count, making the loss invariant
    // under batch duplication.
    bool normalize_numerator = false;

    void validate() const;
};

// d(u, v) = 1 - <u,v> / (max(|u|, eps) * max(|v|, eps)), in [0, 2].
// The guard makes near-zero vectors look orthogonal to everything, so
// the value is defined for every input.
double cosine_dissim(std::span<const double> u, std::span<const double> v, double epsilon = 1e-8);

// min(count) / max(count) over the given classes. Returns 0 and sets
// *degenerate when any listed class count is zero; throws when all are.
double lambda_bf(std::span<const std::size_t> counts, bool* degenerate = nullptr);

struct SeparabilityResult {
    double loss = 0.0;
    std::vector<double> latent_grad;  // rows x dim; d(loss)/d(latent)
    bool degenerate = false;  // single-label batch or between-class spread below 1e-12
    double lambda = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
};

// Batchwise ratio of within-class dissimilarity to between-class-mean
// dissimilarity, scaled by the balancing factor. Gradient flows through
// each latent directly and through its class mean and the global mean.
// A batch with fewer than two distinct labels contributes a flagged zero.
SeparabilityResult separability_loss(const LatentBatch& batch, const SeparabilityConfig& cfg);

// Mean cross-entropy of row-wise softmax scores against labels.
double cross_entropy(std::span<const double> logits, std::size_t rows, std::size_t classes,
                     std::span<const std::size_t> labels);

// Same, also writing d(loss)/d(logits) (already averaged over rows).
double cross_entropy_with_grad(std::span<const double> logits, std::size_t rows,
                               std::size_t classes, std::span<const std::size_t> labels,
                               std::span<double> logit_grad);

// L = L_cls + alpha * L_sep. With alpha = 0 this reduces exactly to the
// cross-entropy term.
double total_loss(std::span<const double> logits, std::span<const std::size_t> labels,
                  const LatentBatch& batch, const SeparabilityConfig& cfg);

struct TotalLossParts {
    double total = 0.0;
    double cross_entropy = 0.0;
    double separability = 0.0;
    bool separability_degenerate = false;
};

// Training entry point: loss value plus gradients w.r.t. logits and
// latents (the latent gradient carries only the alpha * L_sep part; the
// classifier path contributes through the logit gradient).
TotalLossParts total_loss_with_grads(std::span<const double> logits,
                                     std::span<const std::size_t> labels,
                                     const LatentBatch& batch, const SeparabilityConfig& cfg,
                                     std::span<double> logit_grad, std::span<double> latent_grad);

}  // namespace xlstance
