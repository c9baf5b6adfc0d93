#include "xlstance/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

#include "xlstance/common.hpp"
#include "xlstance/kernels.hpp"

namespace xlstance {

namespace k = kernels;

void SeparabilityConfig::validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("separability: epsilon must be > 0");
    if (!(alpha >= 0.0)) throw ConfigError("separability: alpha must be >= 0");
}

double cosine_dissim(std::span<const double> u, std::span<const double> v, double epsilon) {
    if (u.size() != v.size()) throw std::invalid_argument("cosine_dissim: size mismatch");
    if (!(epsilon > 0.0)) throw std::invalid_argument("cosine_dissim: epsilon must be > 0");
    const std::size_t n = u.size();
    const double s = k::dot(u.data(), v.data(), n);
    const double ga = std::max(std::sqrt(k::dot(u.data(), u.data(), n)), epsilon);
    const double gb = std::max(std::sqrt(k::dot(v.data(), v.data(), n)), epsilon);
    return 1.0 - s / (ga * gb);
}

double lambda_bf(std::span<const std::size_t> counts, bool* degenerate) {
    if (counts.empty()) throw std::invalid_argument("lambda_bf: no class counts given");
    const auto [mn_it, mx_it] = std::minmax_element(counts.begin(), counts.end());
    if (*mx_it == 0) throw std::invalid_argument("lambda_bf: all class counts are zero");
    if (degenerate) *degenerate = (*mn_it == 0);
    if (*mn_it == 0) {
        std::fprintf(stderr,
                     "[xlstance] warning: a class count is zero; balancing factor "
                     "collapses to 0 and the separability term vanishes\n");
        return 0.0;
    }
    return static_cast<double>(*mn_it) / static_cast<double>(*mx_it);
}

namespace {

// d(u, v) with optional accumulation of wu * dd/du into gu and
// wv * dd/dv into gv. The max(norm, eps) guard is piecewise: below eps
// the guarded norm is constant, so that branch contributes no gradient.
double dissim_acc(const double* u, const double* v, std::size_t m, double eps, double wu,
                  double* gu, double wv, double* gv) {
    const double s = k::dot(u, v, m);
    const double a = std::sqrt(k::dot(u, u, m));
    const double b = std::sqrt(k::dot(v, v, m));
    const double ga = std::max(a, eps);
    const double gb = std::max(b, eps);
    const double inv = 1.0 / (ga * gb);
    if (gu != nullptr && wu != 0.0) {
        k::axpy(-wu * inv, v, gu, m);
        if (a > eps) k::axpy(wu * s / (ga * ga * gb * a), u, gu, m);
    }
    if (gv != nullptr && wv != 0.0) {
        k::axpy(-wv * inv, u, gv, m);
        if (b > eps) k::axpy(wv * s / (gb * gb * ga * b), v, gv, m);
    }
    return 1.0 - s * inv;
}

}  // namespace

SeparabilityResult separability_loss(const LatentBatch& batch, const SeparabilityConfig& cfg) {
    cfg.validate();
    batch.validate();
    const std::size_t n = batch.rows;
    const std::size_t m = batch.dim;

    SeparabilityResult out;
    out.latent_grad.assign(n * m, 0.0);
    if (n == 0) {
        out.degenerate = true;
        return out;
    }

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < n; ++r) groups[batch.labels[r]].push_back(r);
    if (groups.size() < 2) {
        // A single-label batch has no between-class structure to measure.
        out.degenerate = true;
        return out;
    }

    bool lambda_degenerate = false;
    if (cfg.balancing_source == BalancingSource::batch_counts) {
        std::vector<std::size_t> counts;
        counts.reserve(groups.size());
        for (const auto& [cls, members] : groups) counts.push_back(members.size());
        out.lambda = lambda_bf(counts, &lambda_degenerate);
    } else {
        if (!cfg.target_class_counts) {
            throw ConfigError(
                "separability: balancing_source=target_counts requires target_class_counts "
                "(the trainer derives it from the training split when left unset)");
        }
        out.lambda = lambda_bf(*cfg.target_class_counts, &lambda_degenerate);
    }

    std::vector<double> mu(m, 0.0);
    for (std::size_t r = 0; r < n; ++r) k::axpy(1.0, batch.row(r), mu.data(), m);
    k::scale(mu.data(), 1.0 / static_cast<double>(n), m);

    std::vector<std::vector<double>> class_mu;
    class_mu.reserve(groups.size());
    for (const auto& [cls, members] : groups) {
        std::vector<double> cm(m, 0.0);
        for (std::size_t r : members) k::axpy(1.0, batch.row(r), cm.data(), m);
        k::scale(cm.data(), 1.0 / static_cast<double>(members.size()), m);
        class_mu.push_back(std::move(cm));
    }

    // Numerator: sum over rows of d(z_r, mu_c(r)), gradient split between
    // the row itself and its class mean (spread evenly over the members).
    std::vector<double> grad_num(n * m, 0.0);
    std::vector<double> gmu(m);
    double numerator = 0.0;
    std::size_t gi = 0;
    for (const auto& [cls, members] : groups) {
        const double* cm = class_mu[gi].data();
        std::fill(gmu.begin(), gmu.end(), 0.0);
        for (std::size_t r : members) {
            numerator += dissim_acc(batch.row(r), cm, m, cfg.epsilon, 1.0,
                                    grad_num.data() + r * m, 1.0, gmu.data());
        }
        const double share = 1.0 / static_cast<double>(members.size());
        for (std::size_t r : members) k::axpy(share, gmu.data(), grad_num.data() + r * m, m);
        ++gi;
    }
    if (cfg.normalize_numerator) {
        numerator /= static_cast<double>(n);
        k::scale(grad_num.data(), 1.0 / static_cast<double>(n), n * m);
    }

    // Denominator: sum over classes of d(mu_c, mu); every row reaches it
    // through its class mean and through the global mean.
    std::vector<double> grad_den(n * m, 0.0);
    std::vector<double> hmu(m, 0.0);
    double denominator = 0.0;
    gi = 0;
    for (const auto& [cls, members] : groups) {
        std::fill(gmu.begin(), gmu.end(), 0.0);
        denominator += dissim_acc(class_mu[gi].data(), mu.data(), m, cfg.epsilon, 1.0,
                                  gmu.data(), 1.0, hmu.data());
        const double share = 1.0 / static_cast<double>(members.size());
        for (std::size_t r : members) k::axpy(share, gmu.data(), grad_den.data() + r * m, m);
        ++gi;
    }
    const double global_share = 1.0 / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) {
        k::axpy(global_share, hmu.data(), grad_den.data() + r * m, m);
    }

    out.numerator = numerator;
    out.denominator = denominator;
    // Exactly coincident class means leave rounding dust in the sum, not
    // a clean zero, so the undefined-ratio case is caught by a dust
    // threshold rather than an equality test.
    constexpr double kDenominatorDust = 1e-12;
    if (denominator < kDenominatorDust) {
        out.degenerate = true;
        return out;
    }
    out.degenerate = lambda_degenerate;
    out.loss = out.lambda * numerator / denominator;

    const double wn = out.lambda / denominator;
    const double wd = -out.lambda * numerator / (denominator * denominator);
    for (std::size_t i = 0; i < n * m; ++i) {
        out.latent_grad[i] = wn * grad_num[i] + wd * grad_den[i];
    }
    return out;
}

double cross_entropy(std::span<const double> logits, std::size_t rows, std::size_t classes,
                     std::span<const std::size_t> labels) {
    return cross_entropy_with_grad(logits, rows, classes, labels, {});
}

double cross_entropy_with_grad(std::span<const double> logits, std::size_t rows,
                               std::size_t classes, std::span<const std::size_t> labels,
                               std::span<double> logit_grad) {
    if (rows == 0) throw std::invalid_argument("cross_entropy: empty batch");
    if (logits.size() != rows * classes) {
        throw std::invalid_argument("cross_entropy: logits size does not match rows x classes");
    }
    if (labels.size() != rows) {
        throw std::invalid_argument("cross_entropy: labels size does not match rows");
    }
    const bool want_grad = !logit_grad.empty();
    if (want_grad && logit_grad.size() != logits.size()) {
        throw std::invalid_argument("cross_entropy: gradient buffer size mismatch");
    }
    double loss = 0.0;
    std::vector<double> p(classes);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* z = logits.data() + r * classes;
        if (labels[r] >= classes) throw std::invalid_argument("cross_entropy: label out of range");
        const double zmax = k::max(z, classes);
        double denom = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
            p[c] = std::exp(z[c] - zmax);
            denom += p[c];
        }
        for (std::size_t c = 0; c < classes; ++c) p[c] /= denom;
        loss -= std::log(std::max(p[labels[r]], 1e-300));
        if (want_grad) {
            double* g = logit_grad.data() + r * classes;
            for (std::size_t c = 0; c < classes; ++c) {
                g[c] = (p[c] - (c == labels[r] ? 1.0 : 0.0)) / static_cast<double>(rows);
            }
        }
    }
    return loss / static_cast<double>(rows);
}

double total_loss(std::span<const double> logits, std::span<const std::size_t> labels,
                  const LatentBatch& batch, const SeparabilityConfig& cfg) {
    const std::size_t classes = batch.rows == 0 ? 0 : logits.size() / batch.rows;
    const double ce = cross_entropy(logits, batch.rows, classes, labels);
    if (cfg.alpha == 0.0) return ce;
    return ce + cfg.alpha * separability_loss(batch, cfg).loss;
}

TotalLossParts total_loss_with_grads(std::span<const double> logits,
                                     std::span<const std::size_t> labels,
                                     const LatentBatch& batch, const SeparabilityConfig& cfg,
                                     std::span<double> logit_grad, std::span<double> latent_grad) {
    if (latent_grad.size() != batch.rows * batch.dim) {
        throw std::invalid_argument("total_loss: latent gradient buffer size mismatch");
    }
    const std::size_t classes = batch.rows == 0 ? 0 : logits.size() / batch.rows;
    TotalLossParts parts;
    parts.cross_entropy =
        cross_entropy_with_grad(logits, batch.rows, classes, labels, logit_grad);
    std::fill(latent_grad.begin(), latent_grad.end(), 0.0);
    if (cfg.alpha != 0.0) {
        SeparabilityResult sep = separability_loss(batch, cfg);
        parts.separability = sep.loss;
        parts.separability_degenerate = sep.degenerate;
        k::axpy(cfg.alpha, sep.latent_grad.data(), latent_grad.data(), latent_grad.size());
    }
    parts.total = parts.cross_entropy + cfg.alpha * parts.separability;
    return parts;
}

}  // namespace xlstance
