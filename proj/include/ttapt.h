/* ttapt — test-time prompt adaptation for a toy contrastive audio-text model.
 *
 * C API over the shared library. All functions return a ttapt_status (0 on
 * success); the message for the most recent failure on the calling thread is
 * available through ttapt_last_error(). Handles are opaque and must be
 * released with their matching *_close function.
 */
#ifndef TTAPT_H
#define TTAPT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ttapt_status {
    TTAPT_OK = 0,
    TTAPT_E_INTERNAL = 1, /* numeric failures, IO faults, broken invariants */
    TTAPT_E_CONFIG = 2,   /* invalid configuration or missing input file */
    TTAPT_E_ARTIFACT = 3, /* artifact mismatch (e.g. pinned model hash) */
    TTAPT_E_SCHEMA = 4    /* unsupported file schema version */
} ttapt_status;

const char* ttapt_version(void);

/* Message for the last failing call on this thread; valid until the next
 * failing call. Never NULL. */
const char* ttapt_last_error(void);

/* ---- configuration ----------------------------------------------------- */

typedef struct ttapt_config ttapt_config;

/* path: JSON config file, or NULL for defaults only.
 * overrides_json: flat JSON object applied on top, or NULL.
 * Returns NULL on failure (see ttapt_last_error / ttapt_last_status). */
ttapt_config* ttapt_config_open(const char* path, const char* overrides_json);
ttapt_status ttapt_last_status(void);

/* Effective config as canonical JSON; owned by the handle. */
const char* ttapt_config_json(const ttapt_config* cfg);
/* 16 hex digits + NUL written into out (at least 17 bytes). */
void ttapt_config_hash(const ttapt_config* cfg, char* out);
void ttapt_config_close(ttapt_config* cfg);

/* ---- frozen model ------------------------------------------------------- */

typedef struct ttapt_model ttapt_model;

ttapt_model* ttapt_model_open(const ttapt_config* cfg, const char* checkpoint_path);
ttapt_status ttapt_model_dims(const ttapt_model* model, int* embed_dim, int* n_mels,
                              int* vocab);
void ttapt_model_close(ttapt_model* model);

/* ---- dataset directories ------------------------------------------------ */

typedef struct ttapt_dataset ttapt_dataset;

ttapt_dataset* ttapt_dataset_open(const char* dir);
ttapt_status ttapt_dataset_info(const ttapt_dataset* ds, int* n_clips, int* n_classes,
                                int* has_labels);
void ttapt_dataset_close(ttapt_dataset* ds);

/* ---- pipeline commands --------------------------------------------------- */

/* Pretrain the toy model and write a checkpoint. Reports the held-out
 * zero-shot accuracy reached. */
ttapt_status ttapt_pretrain(const ttapt_config* cfg, const char* out_checkpoint,
                            double* out_val_acc);

/* Generate a synthetic dataset directory (with the config's domain shift
 * applied, when one is set). */
ttapt_status ttapt_gen_data(const ttapt_config* cfg, const char* out_dir);

/* Run adaptation over a dataset; writes <out_prefix>.run.ckpt,
 * <out_prefix>.trace.jsonl and <out_prefix>.csv. The accuracy outputs are
 * set to -1 when the dataset carries no labels. */
ttapt_status ttapt_adapt(const ttapt_config* cfg, const ttapt_model* model,
                         const ttapt_dataset* ds, const char* out_prefix,
                         double* out_zero_shot_acc, double* out_adapted_acc);

/* Ablation matrix: 5 variants x depth 1..4 x width x1/x2 -> 40 CSV rows. */
ttapt_status ttapt_ablate(const ttapt_config* cfg, const ttapt_model* model,
                          const ttapt_dataset* ds, const char* out_csv);

/* Cross-domain matrix over the config's crossdomain_shifts list. */
ttapt_status ttapt_crossdomain(const ttapt_config* cfg, const ttapt_model* model,
                               const char* out_csv);

/* Merge run CSVs into per-config means over seeds. */
ttapt_status ttapt_report(const char* const* csv_paths, size_t n_paths, const char* out_csv);

/* Finite-difference check of the full adaptation gradient. */
ttapt_status ttapt_check_grad(const ttapt_config* cfg, double* out_max_rel_err, int* out_ok);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TTAPT_H */
