#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "xlstance/latent.hpp"
#include "xlstance/objectives.hpp"

namespace xlstance {

struct TensorInfo {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
    std::vector<std::size_t> shape;
};

// Flat double-precision parameter buffer with named tensor views and a
// parallel gradient buffer. The flat layout keeps finite-difference
// probing and whole-model optimizer steps trivial.
class ParameterStore {
public:
    std::size_t add(const std::string& name, std::vector<std::size_t> shape);

    bool has(const std::string& name) const;
    const TensorInfo& info(const std::string& name) const;
    const TensorInfo& info(std::size_t index) const { return tensors_[index]; }
    std::size_t tensor_count() const { return tensors_.size(); }
    std::size_t total_size() const { return values_.size(); }

    double* values(const std::string& name);
    const double* values(const std::string& name) const;
    double* grads(const std::string& name);

    double* values_flat() { return values_.data(); }
    const double* values_flat() const { return values_.data(); }
    double* grads_flat() { return grads_.data(); }
    const double* grads_flat() const { return grads_.data(); }

    void zero_grads();
    // Euclidean norm of the gradient over tensors selected by the mask.
    double grad_norm(const std::vector<bool>& tensor_mask) const;
    void scale_grads(const std::vector<bool>& tensor_mask, double factor);

    // Single-file binary checkpoint with a versioned header and named
    // tensors; layout documented in docs/formats.md.
    void save(const std::string& path) const;
    static ParameterStore load(const std::string& path);

private:
    std::size_t index_of(const std::string& name) const;

    std::vector<double> values_;
    std::vector<double> grads_;
    std::vector<TensorInfo> tensors_;
};

// Plain SGD with momentum. A per-tensor learning rate of 0 freezes that
// tensor (gradual unfreezing sets rates from the stage mask).
class SgdOptimizer {
public:
    explicit SgdOptimizer(double momentum = 0.9) : momentum_(momentum) {}
    void step(ParameterStore& params, const std::vector<double>& tensor_lr);

private:
    double momentum_;
    std::vector<double> velocity_;
};

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t embedding_dim = 64;
    std::size_t hidden_dim = 128;
    std::size_t head_hidden_dim = 64;
    std::size_t classes = 3;
    double dropout = 0.2;
    std::uint64_t init_seed = 0;

    std::size_t latent_dim() const { return 3 * hidden_dim; }
    void validate() const;
};

struct LmTrainConfig {
    std::size_t epochs = 3;
    std::size_t batch_size = 16;
    double lr = 0.5;
    double momentum = 0.9;
    double clip_norm = 5.0;
    double holdout_fraction = 0.1;  // trailing slice held out for validation
    std::uint64_t seed = 0;
    bool dropout_enabled = true;
};

struct LmStats {
    double holdout_loss_before = 0.0;
    double holdout_loss_after = 0.0;
    std::size_t train_sequences = 0;
    std::size_t holdout_sequences = 0;
};

// Where the separability term attaches: the pooled encoder latent
// (gradient reaches encoder parameters only) or the head's hidden layer.
enum class SepPoint { encoder_latent, head_hidden };

// Gradual unfreezing: stage 0 trains the head only, stage 1 adds encoder
// layer 3, stage 2 adds layer 2, stage 3 adds layer 1 and the embedding.
struct UnfreezeSchedule {
    std::array<std::size_t, 4> epochs_per_stage{1, 1, 1, 2};
    std::size_t total_epochs() const;
};

// Per-tensor trainable mask for a stage; masks grow monotonically with
// the stage index. Throws on stage > 3.
std::vector<bool> apply_stage(const ParameterStore& params, std::size_t stage);

struct ClassifierTrainConfig {
    UnfreezeSchedule schedule{};
    std::size_t batch_size = 32;
    double head_lr = 0.01;
    double encoder_lr = 0.001;
    double momentum = 0.9;
    double clip_norm = 5.0;
    std::uint64_t seed = 0;
    bool dropout_enabled = true;
    SepPoint sep_point = SepPoint::encoder_latent;
};

struct TrainLog {
    std::size_t epochs = 0;
    std::size_t batches = 0;
    // Batches whose separability term was a flagged zero (single label
    // in the batch, or zero between-class spread).
    std::size_t degenerate_batches = 0;
    double final_epoch_loss = 0.0;
    std::vector<double> lambda_per_epoch;  // filled in target-counts mode
};

struct ClassifierDataset {
    std::vector<std::vector<std::uint32_t>> sequences;  // numericalized, framed
    std::vector<std::size_t> labels;                    // stance indices
    std::vector<std::string> domains;

    std::size_t size() const { return sequences.size(); }
    void validate(std::size_t classes) const;
};

// Embedding, 3-layer LSTM encoder, LM decoder head, and a 2-layer
// classifier head over the concat(last, mean, max) pooled latent.
class StanceModel {
public:
    explicit StanceModel(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

    // Next-token training on raw id sequences; the trailing
    // holdout_fraction of sequences is held out for validation loss.
    LmStats pretrain_lm(const std::vector<std::vector<std::uint32_t>>& sequences,
                        const LmTrainConfig& cfg);
    // Same procedure starting from the current parameters (labels ignored
    // by construction; callers pass the task corpus text).
    LmStats finetune_lm(const std::vector<std::vector<std::uint32_t>>& sequences,
                        const LmTrainConfig& cfg);
    // Mean next-token cross-entropy in eval mode (no dropout, no updates).
    double lm_loss(const std::vector<std::vector<std::uint32_t>>& sequences) const;

    // Eval-mode latents, one row of dim 3H per sequence. Pad ids are
    // masked out of the recurrence and the pooling, so trailing padding
    // never changes the latent. Labels/domains are left defaulted for the
    // caller to fill.
    LatentBatch encode(const std::vector<std::vector<std::uint32_t>>& sequences) const;

    // Head forward: rows x classes logits.
    std::vector<double> classify(const LatentBatch& latents) const;
    std::vector<std::size_t> predict(const std::vector<std::vector<std::uint32_t>>& sequences) const;

    // Staged training with the combined objective. When sep uses
    // target_counts with the counts unset, they are derived from the
    // training labels (and recomputed each epoch).
    TrainLog train_classifier(const ClassifierDataset& data, const ClassifierTrainConfig& cfg,
                              SeparabilityConfig sep);

    // One forward/backward of the combined objective with dropout off,
    // accumulating parameter gradients; finite-difference harness entry.
    double classifier_loss(const ClassifierDataset& batch, const SeparabilityConfig& sep,
                           SepPoint sep_point, bool accumulate_grads);

    void save(const std::string& path) const;
    static StanceModel load(const std::string& path);

private:
    struct SeqCache;

    void init_params();
    void forward_sequence(const std::vector<std::uint32_t>& ids, SeqCache& cache,
                          bool use_dropout, std::uint64_t mask_salt) const;
    void backward_from_top(SeqCache& cache, std::vector<double>& dh_top);
    void backward_sequence(SeqCache& cache, const double* dlatent);
    double lm_batch(const std::vector<const std::vector<std::uint32_t>*>& seqs,
                    std::uint64_t mask_salt, bool use_dropout);
    double classifier_batch(const ClassifierDataset& data, const std::vector<std::size_t>& rows,
                            const SeparabilityConfig& sep, SepPoint sep_point, bool with_grads,
                            bool use_dropout, std::uint64_t mask_salt, bool* degenerate);

    ModelConfig cfg_;
    ParameterStore params_;
};

}  // namespace xlstance
