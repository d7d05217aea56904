#ifndef MAMMO_MAMMO_H_
#define MAMMO_MAMMO_H_

/* C interface to the multi-view mammography pipeline.
 *
 * Every function returns a mammo_status. On failure the message is available
 * from mammo_last_error() on the calling thread until the next call on that
 * thread. Strings returned through out-parameters are owned by the caller and
 * released with mammo_string_free. Handles are not thread-safe; distinct
 * handles may be used from distinct threads.
 */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define MAMMO_API __attribute__((visibility("default")))
#else
#define MAMMO_API
#endif

/* Values double as process exit codes of the command-line tool. */
typedef enum mammo_status {
  MAMMO_OK = 0,
  MAMMO_ERR_INTERNAL = 1,
  MAMMO_ERR_CONFIG = 2,
  MAMMO_ERR_IO = 3,
  MAMMO_ERR_TRAINING_REFUSED = 4,
  MAMMO_ERR_FORMAT_VERSION = 5,
  MAMMO_ERR_INTEGRITY = 6
} mammo_status;

typedef struct mammo_config mammo_config;
typedef struct mammo_forest mammo_forest;
typedef struct mammo_extractor mammo_extractor;

MAMMO_API const char* mammo_version(void);
MAMMO_API const char* mammo_last_error(void);
MAMMO_API void mammo_string_free(char* s);

/* Configuration --------------------------------------------------------- */

MAMMO_API mammo_status mammo_config_default(mammo_config** out);
MAMMO_API mammo_status mammo_config_load(const char* path, mammo_config** out);
MAMMO_API mammo_status mammo_config_parse(const char* text, mammo_config** out);
MAMMO_API void mammo_config_free(mammo_config* cfg);
/* Sets the seed of every section. */
MAMMO_API mammo_status mammo_config_set_seed(mammo_config* cfg, uint64_t seed);
/* "birads5" or "pathology3". */
MAMMO_API mammo_status mammo_config_set_scheme(mammo_config* cfg, const char* scheme);
/* `key` is "section.name" as in the config file. */
MAMMO_API mammo_status mammo_config_set(mammo_config* cfg, const char* key, const char* value);
MAMMO_API mammo_status mammo_config_render(const mammo_config* cfg, char** out_text);
/* paths.workspace. */
MAMMO_API mammo_status mammo_config_workspace(const mammo_config* cfg, char** out_path);

/* Workspace stages. `root` is the workspace directory. --------------------- */

MAMMO_API mammo_status mammo_synth(const mammo_config* cfg, const char* root);
/* Prints-ready per-split class table in *out_summary. */
MAMMO_API mammo_status mammo_split(const mammo_config* cfg, const char* root, int force, char** out_summary);
/* `views` is "L-CC", "R-CC", "L-MLO", "R-MLO" or "all". */
MAMMO_API mammo_status mammo_train_extractor(const mammo_config* cfg, const char* root, const char* views,
                                             char** out_summary);
MAMMO_API mammo_status mammo_extract(const mammo_config* cfg, const char* root, const char* views);
MAMMO_API mammo_status mammo_fuse(const mammo_config* cfg, const char* root, size_t* out_fused_rows,
                                  size_t* out_single_rows, int* out_incomplete_sides);
MAMMO_API mammo_status mammo_train_gbdt(const mammo_config* cfg, const char* root);
MAMMO_API mammo_status mammo_evaluate(const mammo_config* cfg, const char* root, char** out_report);
/* Runs every stage. With `synthesize` nonzero the dataset is generated first.
 * Deltas are multi-view minus single-view macro-F1; either pointer may be NULL. */
MAMMO_API mammo_status mammo_pipeline(const mammo_config* cfg, const char* root, int synthesize, char** out_report,
                                      double* out_study_delta, double* out_side_delta);

/* Trained models -------------------------------------------------------- */

MAMMO_API mammo_status mammo_forest_load(const char* path, mammo_forest** out);
MAMMO_API mammo_status mammo_forest_save(const mammo_forest* forest, const char* path);
MAMMO_API void mammo_forest_free(mammo_forest* forest);
MAMMO_API mammo_status mammo_forest_shape(const mammo_forest* forest, int* out_features, int* out_classes);
/* `x` is row-major rows x features; `out_proba` receives rows x classes. */
MAMMO_API mammo_status mammo_forest_predict_proba(const mammo_forest* forest, const double* x, size_t rows,
                                                  double* out_proba);

MAMMO_API mammo_status mammo_extractor_load(const char* path, mammo_extractor** out);
MAMMO_API void mammo_extractor_free(mammo_extractor* model);
MAMMO_API mammo_status mammo_extractor_channels(const mammo_extractor* model, int* out_channels);
/* Feature vector (channels values) of one PGM image, using `cfg` for cropping. */
MAMMO_API mammo_status mammo_extractor_features(const mammo_extractor* model, const mammo_config* cfg,
                                                const char* pgm_path, double* out_features);

#ifdef __cplusplus
}
#endif

#endif /* MAMMO_MAMMO_H_ */
