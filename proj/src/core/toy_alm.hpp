#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/dsp_frontend.hpp"
#include "core/mat.hpp"

namespace ttapt {

// A small frozen contrastive audio-text model. The audio encoder consumes
// time-pooled mel statistics (mean and std per bin); the text encoder is a
// per-token feed-forward block with positional embeddings, mean pooling and
// a final projection. Both project into a shared unit-norm embedding space
// compared by cosine similarity scaled by 1/tau.

struct ModelDims {
    int embed_dim = 64;     // d, shared embedding space
    int text_dim = 64;      // token embedding width
    int audio_hidden = 128;
    int text_hidden = 64;
    int max_tokens = 16;
    int vocab = 0;
    int n_mels = 64;

    void validate() const;
};

struct ToyModel {
    ModelDims dims;
    double tau = 0.07;
    NormStats norm; // frozen per-bin mel stats

    Mat tok_table; // vocab x text_dim
    Mat pos_table; // max_tokens x text_dim

    Mat a_w1; // audio_hidden x 2*n_mels
    Vec a_b1;
    Mat a_w2; // embed_dim x audio_hidden
    Vec a_b2;

    Mat t_w1; // text_hidden x text_dim
    Vec t_b1;
    Mat t_w2; // text_dim x text_hidden
    Vec t_b2;
    Mat t_proj; // embed_dim x text_dim
    Vec t_q;
};

ToyModel init_model(const ModelDims& dims, double tau, uint64_t seed);

// mean and population std per mel bin, concatenated -> 2*n_mels inputs
Vec pooled_stats(const MelSpectrogram& m);

// unit-norm embed_dim vector; input must already be normalized by the
// model's frozen stats (the caller owns that step).
Vec encode_audio(const ToyModel& model, const MelSpectrogram& m);
Vec encode_audio_from_stats(const ToyModel& model, const Vec& stats_in);

struct TextCache {
    Mat x;      // L x text_dim, token + positional
    Mat h;      // L x text_hidden, tanh activations
    Vec pooled; // text_dim
    Vec z;      // embed_dim, pre-normalization
    double z_norm = 0.0;
    Vec u; // embed_dim, unit
};

// tokens: L x text_dim continuous token vectors, 1 <= L <= max_tokens.
TextCache encode_text_cached(const ToyModel& model, const Mat& tokens);
Vec encode_text(const ToyModel& model, const Mat& tokens);

// Exact gradient of <upstream, encode_text(tokens)> with respect to each
// input token vector, L2-normalization Jacobian included.
Mat encode_text_vjp(const ToyModel& model, const Mat& tokens, const Vec& upstream);
Mat text_vjp_from_cache(const ToyModel& model, const TextCache& cache, const Vec& upstream);

// g[i][c] = <v_i, u_c> / tau
Mat logits(const Mat& v, const Mat& u, double tau);
// per-view text embeddings: u[i] is N x d, used when prompts are view-conditioned
Mat logits_per_view(const Mat& v, const std::vector<Mat>& u, double tau);

Vec softmax(const double* s, int n);

// ---- pretraining -----------------------------------------------------------

struct PretrainConfig {
    int epochs = 300;
    double lr = 2e-3;
    double target_acc = 0.6; // held-out zero-shot accuracy to stop at
    uint64_t seed = 0;
};

struct PretrainExample {
    Vec stats; // pooled_stats of the normalized mel
    int label = 0;
};

struct PretrainResult {
    int epochs_run = 0;
    double val_acc = 0.0;
    double final_loss = 0.0;
};

// Symmetric InfoNCE over in-batch audio/text pairs (one clip per class per
// batch). Stops once held-out zero-shot accuracy reaches target_acc; throws
// PretrainDivergence if the epoch budget runs out first. All model
// parameters are frozen by the caller afterwards.
PretrainResult pretrain_toy(ToyModel& model, const std::vector<PretrainExample>& train,
                            const std::vector<PretrainExample>& val,
                            const std::vector<std::vector<int>>& class_tokens,
                            const PretrainConfig& cfg);

// Gather the continuous token vectors for a token-id sequence (no offsets).
Mat gather_tokens(const ToyModel& model, const std::vector<int>& ids);

// Zero-shot class distribution of one audio embedding against plain class
// prompts; returns softmax over classes.
Vec zero_shot_distribution(const ToyModel& model, const Vec& audio_emb,
                           const std::vector<std::vector<int>>& class_tokens);

// ---- checkpoint ------------------------------------------------------------

void save_model(const std::string& path, const ToyModel& model);
ToyModel load_model(const std::string& path);

} // namespace ttapt
