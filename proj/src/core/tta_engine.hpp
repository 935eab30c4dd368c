#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/adamw.hpp"
#include "core/augment.hpp"
#include "core/prompt_nets.hpp"
#include "core/toy_alm.hpp"

namespace ttapt {

struct AdaptConfig {
    double lr = 1e-3;
    int steps_per_batch = 1;
    int batch_size = 5;
    double lambda_contrastive = 1.0;
    enum class Mode { Episodic, Online };
    Mode mode = Mode::Episodic;
    bool disable_cnet = false;
    bool disable_dnet = false;
    bool disable_contrastive = false;
    bool disable_entropy = false;
    bool condition_on_mean = false; // condition prompts on the view-mean embedding
    int n_views = 8;
    int max_time_mask = 8;
    int max_freq_mask = 4;
    uint64_t seed = 0;

    void validate() const;
};

// One unlabeled test clip as the engine sees it: labels never enter here.
struct EngineSample {
    int clip_id = 0;
    MelSpectrogram mel; // already normalized by the model's frozen stats
};

// Forward-pass artifacts for one sample, kept for the backward pass.
struct SampleForward {
    Mat v;                               // M x d view embeddings
    std::vector<Mlp::Cache> c_caches;    // per conditioning vector
    std::vector<Mlp::Cache> d_caches;
    std::vector<std::vector<TextCache>> text; // [conditioning][class]
    Mat g;                               // M x N per-view distributions
    Vec g_avg;                           // N
};

SampleForward forward_sample(const ToyModel& model, const PromptState& state,
                             const ViewSet& views, const AdaptConfig& cfg);
std::vector<SampleForward> forward_batch(const ToyModel& model, const PromptState& state,
                                         const std::vector<ViewSet>& batch,
                                         const AdaptConfig& cfg);

// batch-mean self-entropy of the averaged distributions, in [0, ln N]
double consistency_loss(const std::vector<Vec>& g_avg);
// negative mean pairwise MSE over unordered sample pairs, in [-2/N, 0];
// returns 0 for a single-sample batch
double contrastive_loss(const std::vector<Vec>& g_avg);

struct LossReport {
    std::optional<double> consistency;
    std::optional<double> contrastive;
    double final_loss = 0.0;
};

LossReport final_loss(const std::vector<Vec>& g_avg, const AdaptConfig& cfg);

PromptGradients backward_batch(const ToyModel& model, const PromptState& state,
                               const std::vector<SampleForward>& fwd, const AdaptConfig& cfg);

struct OptimizerState {
    AdamWState theta1, theta2;
    AdamWConfig cfg;

    void init(const PromptState& s) {
        theta1.init(s.c_net.n_params());
        theta2.init(s.d_net.n_params());
    }
};

void adamw_step_prompts(PromptState& state, const PromptGradients& grads, OptimizerState& opt,
                        double lr);

struct StepRecord {
    int batch = 0;
    int step = 0;
    LossReport loss;
};

struct Prediction {
    int clip_id = 0;
    int predicted = 0;
};

// JSON-lines sink for step records and predictions.
class TraceWriter {
  public:
    explicit TraceWriter(const std::string& path);
    ~TraceWriter();
    TraceWriter(const TraceWriter&) = delete;
    TraceWriter& operator=(const TraceWriter&) = delete;

    void write_step(const StepRecord& r);
    void write_pred(const Prediction& p);
    void write_reset(int batch_index);

  private:
    std::FILE* f_ = nullptr;
};

struct AdaptBatchResult {
    std::vector<Prediction> predictions;
    std::vector<StepRecord> trace;
};

AdaptBatchResult adapt_batch(const ToyModel& model, PromptState& state, OptimizerState& opt,
                             const std::vector<EngineSample>& batch, const AdaptConfig& cfg,
                             int batch_index, TraceWriter* trace);

struct AdaptRun {
    std::vector<Prediction> predictions;
    std::vector<StepRecord> trace;
    std::vector<int> reset_batches; // batch indices where state was reset
    Vec theta1_init, theta2_init;   // snapshots taken at run start
    OptimizerState opt;             // optimizer state after the final batch
};

// Episodic mode restores theta1/theta2 and fresh optimizer state before each
// batch; online mode carries both across the whole stream. Views are keyed
// by (seed, clip_id), so batch composition does not leak across batches.
AdaptRun run_adaptation(const ToyModel& model, PromptState& state,
                        const std::vector<EngineSample>& samples, const AdaptConfig& cfg,
                        TraceWriter* trace);

// Forward-only predictions under the current (e.g. previously adapted) state.
std::vector<Prediction> predict_all(const ToyModel& model, const PromptState& state,
                                    const std::vector<EngineSample>& samples,
                                    const AdaptConfig& cfg);

void save_run_checkpoint(const std::string& path, const nlohmann::json& config_echo,
                         uint64_t seed, const std::string& model_hash, const PromptState& state,
                         const OptimizerState& opt);

int argmax_lowest_tie(const Vec& v);

} // namespace ttapt
