#ifndef RAVENBENCH_H
#define RAVENBENCH_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define RB_API __attribute__((visibility("default")))
#else
#define RB_API
#endif

/* Status codes. Values 2, 3 and 4 double as CLI exit codes. */
typedef enum rb_status {
    RB_OK = 0,
    RB_ERR_ARGUMENT = 1,
    RB_ERR_CONFIG = 2,
    RB_ERR_STAGE = 3,
    RB_ERR_EXTERNAL = 4,
    RB_ERR_BATTERY_MISMATCH = 5,
    RB_ERR_INTERNAL = 6
} rb_status;

typedef struct rb_battery rb_battery;
typedef struct rb_run rb_run;

RB_API const char* rb_version(void);

/* Message of the last failing call on this thread; "" when none. The
   kind is a short identifier such as "MissingResult". */
RB_API const char* rb_last_error(void);
RB_API const char* rb_last_error_kind(void);

/* ---- battery ------------------------------------------------------------ */

RB_API rb_status rb_battery_generate(uint64_t seed, int n_items, rb_battery** out);
RB_API void rb_battery_free(rb_battery* battery);
RB_API int rb_battery_size(const rb_battery* battery);
/* Correct option (0..7) of item `index`, or -1 when out of range. */
RB_API int rb_battery_answer(const rb_battery* battery, int index);
RB_API int rb_battery_rank(const rb_battery* battery, int index);
/* 16 hex digits, owned by the battery. */
RB_API const char* rb_battery_hash(const rb_battery* battery);
/* Writes manifest.json and per-item PNGs. */
RB_API rb_status rb_battery_write(const rb_battery* battery, const char* out_dir);

/* ---- runs --------------------------------------------------------------- */

/* Runs the full pipeline for a TOML config. workers <= 0 keeps the
   configured value. */
RB_API rb_status rb_evaluate(const char* config_path, int workers, rb_run** out);
/* Opens a finished run directory. */
RB_API rb_status rb_run_open(const char* run_dir, rb_run** out);
RB_API void rb_run_free(rb_run* run);
RB_API rb_status rb_run_score(const rb_run* run, int* correct, int* total);
RB_API int rb_run_choice(const rb_run* run, int item);
/* Fails with RB_ERR_STAGE when the run has no attainable threshold. */
RB_API rb_status rb_run_threshold(const rb_run* run, double* lo, double* hi, double* point);
RB_API int rb_run_boundary_warning(const rb_run* run);
RB_API const char* rb_run_dir(const rb_run* run);

/* ---- commands on finished runs ------------------------------------------ */

RB_API rb_status rb_psych(const char* run_dir);
RB_API rb_status rb_errors(const char* run_dir, const char* cohort_csv);
/* Writes the comparison JSON to out_json. cohort_csv may be NULL. */
RB_API rb_status rb_compare(const char* run_a, const char* run_b, const char* cohort_csv, const char* out_json);
/* SVG plots for `n` runs into out_dir. */
RB_API rb_status rb_plots(const char* const* run_dirs, size_t n, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif
