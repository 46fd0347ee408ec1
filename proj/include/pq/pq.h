/*
 * C interface to the power-quality engine: calibration, simulator, capture,
 * analysis, reporting and the HTTP daemon.
 *
 * Every call returns a pq_status. On failure, pq_last_error() returns a
 * message describing the most recent error on the calling thread. Handles
 * are opaque and released with their matching *_destroy function.
 */
#ifndef PQ_PQ_H
#define PQ_PQ_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define PQ_API __declspec(dllexport)
#else
#define PQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pq_status {
  PQ_OK = 0,
  PQ_ERR_INVALID_ARGUMENT = 1,
  PQ_ERR_DOMAIN = 2,
  PQ_ERR_INSUFFICIENT_DATA = 3,
  PQ_ERR_DEGENERATE_SIGNAL = 4,
  PQ_ERR_IO = 5,
  PQ_ERR_CONNECTION = 6,
  PQ_ERR_CONFLICT = 7,
  PQ_ERR_NOT_FOUND = 8,
  PQ_ERR_INTERNAL = 9
} pq_status;

typedef enum pq_event_kind {
  PQ_EVENT_SAG = 0,
  PQ_EVENT_SURGE = 1,
  PQ_EVENT_INTERRUPTION = 2
} pq_event_kind;

typedef struct pq_config pq_config;
typedef struct pq_simulator pq_simulator;
typedef struct pq_capture pq_capture;
typedef struct pq_daemon pq_daemon;

/* Sentinel session index selecting the most recent session. */
#define PQ_SESSION_LATEST (-1L)
/* Sentinel cycle count selecting every whole cycle of the session. */
#define PQ_CYCLES_ALL 0

PQ_API const char* pq_last_error(void);
PQ_API const char* pq_status_string(pq_status status);

/* ---- configuration ---------------------------------------------------- */

PQ_API pq_status pq_config_create(pq_config** out);
PQ_API void pq_config_destroy(pq_config* cfg);
/* key = value file; keys as for pq_config_set. */
PQ_API pq_status pq_config_load_file(pq_config* cfg, const char* path);
/* Keys: vref_volts, offset_volts, divider_ratio, nominal_voltage, sag_pu,
 * surge_pu, interruption_pu. */
PQ_API pq_status pq_config_set(pq_config* cfg, const char* key, const char* value);
PQ_API pq_status pq_config_get(const pq_config* cfg, const char* key, double* out);
PQ_API pq_status pq_config_validate(const pq_config* cfg);

PQ_API pq_status pq_divider_ratio(double r_top_ohms, double r_bottom_ohms, double* out);
PQ_API pq_status pq_adc_to_voltage(const pq_config* cfg, int count, double* out);
PQ_API pq_status pq_voltage_to_adc(const pq_config* cfg, double volts, int* out);

/* ---- simulator -------------------------------------------------------- */

PQ_API pq_status pq_sim_create(double fundamental_rms, pq_simulator** out);
PQ_API void pq_sim_destroy(pq_simulator* sim);
PQ_API pq_status pq_sim_add_harmonic(pq_simulator* sim, int order, double relative_amplitude,
                                     double phase_radians);
PQ_API pq_status pq_sim_set_noise(pq_simulator* sim, double sigma_volts, uint64_t seed);
PQ_API pq_status pq_sim_add_disturbance(pq_simulator* sim, pq_event_kind kind,
                                        uint64_t start_half_cycle, uint64_t duration_half_cycles,
                                        double magnitude_pu);
/* Length of the synthesized loop in cycles. Unset, it is 60 or just long
 * enough to hold every disturbance followed by one clean cycle. */
PQ_API pq_status pq_sim_set_loop_cycles(pq_simulator* sim, int cycles);
/* Serve a stored raw session instead of a synthesized waveform. */
PQ_API pq_status pq_sim_load_replay(pq_simulator* sim, const char* raw_file, long session);
/* Per-connection reading cap (0 = unlimited) and whether to loop. */
PQ_API pq_status pq_sim_set_limits(pq_simulator* sim, uint64_t max_readings, int loop);
/* Writes up to `capacity` volts of n_cycles of synthesized waveform. */
PQ_API pq_status pq_sim_synthesize(const pq_simulator* sim, int n_cycles, double* out,
                                   size_t capacity, size_t* written);
/* Starts serving on "tcp:<host>:<port>" in the background. */
PQ_API pq_status pq_sim_serve(pq_simulator* sim, const pq_config* cfg, const char* listen);
PQ_API pq_status pq_sim_port(const pq_simulator* sim, int* out);
PQ_API pq_status pq_sim_readings_sent(const pq_simulator* sim, uint64_t* out);
PQ_API pq_status pq_sim_stop(pq_simulator* sim);

/* ---- capture into dataRaw.bin ----------------------------------------- */

PQ_API pq_status pq_capture_open(const char* endpoint, int baud, const char* data_dir,
                                 pq_capture** out);
PQ_API void pq_capture_destroy(pq_capture* cap);
/* Blocks until `max_readings` readings (0 = unlimited) or `max_seconds`
 * (<= 0 = unlimited) elapse, the stream ends, or pq_capture_stop is called. */
PQ_API pq_status pq_capture_run(pq_capture* cap, uint64_t max_readings, double max_seconds);
/* Safe to call from another thread. */
PQ_API pq_status pq_capture_stop(pq_capture* cap);
PQ_API pq_status pq_capture_counts(const pq_capture* cap, uint64_t* readings, uint64_t* malformed);

/* ---- analysis --------------------------------------------------------- */

typedef struct pq_window_stats {
  int cycles;
  uint64_t start_index;
  double vrms;
  double vpeak;
  double thd;     /* valid only when has_thd != 0 */
  int has_thd;
  double nominal_frequency; /* referential, not measured */
  char session[32];
} pq_window_stats;

typedef struct pq_harmonic {
  int order;
  double magnitude;
  int is_spike;
} pq_harmonic;

PQ_API pq_status pq_analyze(const pq_config* cfg, const char* data_dir, long session, int cycles,
                            pq_window_stats* out);
/* Fills 24 entries (orders 2..25) and the fundamental magnitude. */
PQ_API pq_status pq_analyze_harmonics(const pq_config* cfg, const char* data_dir, long session,
                                      int cycles, double* fundamental, pq_harmonic out[24]);
/* Writes "hz,magnitude" rows of the display-scaled spectrum. */
PQ_API pq_status pq_analyze_fft_csv(const pq_config* cfg, const char* data_dir, long session,
                                    int cycles, const char* csv_path);

/* ---- reporting -------------------------------------------------------- */

typedef struct pq_report_summary {
  uint64_t half_cycles;
  uint64_t sags;
  uint64_t surges;
  uint64_t interruptions;
  double min_rms_volts;
  double max_rms_volts;
  double min_pu;
  double max_pu;
  char session[32];
} pq_report_summary;

/* Writes dataRMS.bin and Report.txt in data_dir for the chosen session. If
 * report_text is non-null the report text is copied (truncated) into it. */
PQ_API pq_status pq_report(const pq_config* cfg, const char* data_dir, long session,
                           pq_report_summary* out, char* report_text, size_t report_capacity);

/* ---- daemon ----------------------------------------------------------- */

PQ_API pq_status pq_daemon_create(const pq_config* cfg, const char* data_dir, pq_daemon** out);
PQ_API void pq_daemon_destroy(pq_daemon* daemon);
/* listen is "tcp:<host>:<port>"; static_dir may be null. */
PQ_API pq_status pq_daemon_listen(pq_daemon* daemon, const char* listen, const char* static_dir);
PQ_API pq_status pq_daemon_port(const pq_daemon* daemon, int* out);
PQ_API pq_status pq_daemon_stop(pq_daemon* daemon);

#ifdef __cplusplus
}
#endif

#endif
