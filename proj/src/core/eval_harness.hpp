#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/tta_engine.hpp"

namespace ttapt {

// Synthetic band-limited tone datasets with controllable domain shifts, the
// zero-shot / adapted evaluation protocols, and the report matrices.

struct SyntheticDatasetSpec {
    int n_classes = 8;
    int clips_per_class = 40;
    double clip_seconds = 1.0;
    double base_snr_db = 30.0;
    double snr_jitter_db = 0.0; // per-clip SNR drawn from base +- jitter
    int sample_rate = 44100;
    int prompt_prefix_len = 3; // class prompt = shared prefix + one id token
    uint64_t seed = 1;
    // class signatures are keyed by seed alone; clips are keyed by
    // (seed, role), so pretrain / val / test splits share classes but
    // never share clips
    std::string role = "test";

    void validate() const;
};

// Two tones plus an amplitude-modulation rate per class; separable through
// pooled mel statistics yet sensitive to tilt and noise shifts.
struct ClassSignature {
    double f1 = 0.0;
    double f2 = 0.0;
    double am_rate = 0.0;
};

std::vector<ClassSignature> class_signatures(const SyntheticDatasetSpec& spec);

struct LabeledClip {
    std::vector<float> samples;
    int label = -1; // -1 when the manifest carries no label
};

struct Dataset {
    int sample_rate = 44100;
    int n_classes = 0;
    std::vector<std::string> class_names;
    std::vector<std::vector<int>> class_tokens;
    std::vector<LabeledClip> clips;
    nlohmann::json shift_echo = "none";

    bool has_labels() const;
};

Dataset gen_dataset(const SyntheticDatasetSpec& spec);

enum class ShiftKind { None, AdditiveNoise, SpectralTilt, Gain, Combined };

ShiftKind shift_kind_from_string(const std::string& s);
std::string shift_kind_name(ShiftKind k);

struct DomainShiftSpec {
    ShiftKind kind = ShiftKind::None;
    double snr_db = 5.0;
    double tilt_db_per_oct = -3.0;
    double gain_db = 0.0;
    uint64_t seed = 1;

    nlohmann::json echo() const;
};

Dataset apply_shift(const Dataset& ds, const DomainShiftSpec& shift);

// ---- dataset directory (manifest.json + raw f32 clips) ---------------------

inline constexpr int kManifestSchemaVersion = 1;

void write_dataset(const std::string& dir, const Dataset& ds, bool include_labels = true);
Dataset load_dataset(const std::string& dir);

// ---- evaluation -------------------------------------------------------------

struct Metrics {
    int n_correct = 0;
    int n_total = 0;
    Vec per_class_accuracy;

    double accuracy() const { return n_total ? static_cast<double>(n_correct) / n_total : 0.0; }
};

Metrics compute_metrics(const std::vector<Prediction>& preds, const Dataset& ds);

// normalized mels for the engine; labels are deliberately not copied over
std::vector<EngineSample> engine_samples(const Dataset& ds, const ToyModel& model,
                                         const MelConfig& mel_cfg);

// argmax over plain p_origin distributions from the unaugmented view only
Metrics evaluate_zero_shot(const Dataset& ds, const ToyModel& model, const MelConfig& mel_cfg);
std::vector<Prediction> zero_shot_predictions(const Dataset& ds, const ToyModel& model,
                                              const MelConfig& mel_cfg);

struct RunReport {
    std::string kind = "adapt";
    std::string variant = "full";
    int mlp_depth = 3;
    int width_mult = 1;
    uint64_t seed = 0;
    std::string config_hash;
    std::optional<double> zero_shot_acc;
    std::optional<double> adapted_acc;
    std::optional<double> loss_first;
    std::optional<double> loss_final;
    AdaptConfig adapt_echo;

    std::optional<double> delta() const {
        if (zero_shot_acc && adapted_acc) return *adapted_acc - *zero_shot_acc;
        return std::nullopt;
    }
};

struct EvalContext {
    MelConfig mel;
    PromptNetConfig prompt;
    AdaptConfig adapt;
    std::string config_hash;
    uint64_t master_seed = 0; // echoed into report rows
};

RunReport evaluate_tta(const Dataset& ds, const ToyModel& model, const EvalContext& ctx,
                       TraceWriter* trace = nullptr, PromptState* out_state = nullptr,
                       AdaptRun* out_run = nullptr);

// {full, no_cnet, no_dnet, no_contrastive, no_entropy} x depth 1..4 x width x1/x2
std::vector<RunReport> ablation_matrix(const Dataset& ds, const ToyModel& model,
                                       const EvalContext& base, int jobs = 1);

struct CrossDomainCell {
    std::string adapt_shift;
    std::string test_shift;
    double zero_shot_acc = 0.0;
    double adapted_acc = 0.0;
};

std::vector<CrossDomainCell> cross_domain_matrix(const Dataset& clean,
                                                 const std::vector<DomainShiftSpec>& shifts,
                                                 const ToyModel& model, const EvalContext& ctx,
                                                 int jobs = 1);

// ---- CSV reports -------------------------------------------------------------

inline constexpr int kCsvSchemaVersion = 1;

std::string run_csv_header();
std::string run_csv_row(const RunReport& r);
void write_run_csv(const std::string& path, const std::vector<RunReport>& rows);

std::string crossdomain_csv_header();
void write_crossdomain_csv(const std::string& path, const std::string& config_hash,
                           uint64_t seed, const std::vector<CrossDomainCell>& cells);

// merge run CSVs into per-config means over seeds
void merge_report_csvs(const std::vector<std::string>& inputs, const std::string& out_path);

// ---- pretraining pipeline ----------------------------------------------------

struct PretrainPipelineResult {
    ToyModel model;
    PretrainResult stats;
};

struct PretrainPipelineConfig {
    SyntheticDatasetSpec data;
    MelConfig mel;
    ModelDims dims; // vocab filled in from the dataset
    double tau = 0.07;
    PretrainConfig pretrain;
    int val_clips_per_class = 8;
    // masked copies of each training clip, so the frozen encoder stays
    // meaningful on the masked views the adaptation loop feeds it
    int augmented_copies = 2;
    int max_time_mask = 24;
    int max_freq_mask = 12;
};

PretrainPipelineResult pretrain_pipeline(const PretrainPipelineConfig& cfg);

} // namespace ttapt
