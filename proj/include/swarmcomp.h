/* C interface to the swarmcomp engine.
 *
 * All functions return 0 on success, 1 on validation/input errors and 2 on
 * runtime errors; sc_last_error() describes the most recent failure on the
 * calling thread. Strings returned through char** out-parameters are owned
 * by the caller and must be released with sc_string_free().
 */
#ifndef SWARMCOMP_H
#define SWARMCOMP_H

#ifdef __cplusplus
extern "C" {
#endif

typedef struct sc_piece sc_piece;

const char* sc_version(void);

/* Thread-local message for the last failed call (empty string if none). */
const char* sc_last_error(void);

void sc_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Composition runs. config_json mirrors the CLI configuration schema  */
/* (system, n_bars, voices, iterations, seed, out_dir, policy, ...).   */
/* The result JSON carries best_score, best_iteration, score_trace,    */
/* the best piece and diagnostics.                                     */
int sc_compose(const char* config_json, char** out_result_json);

/* ------------------------------------------------------------------ */
/* Analyses over a piece given as JSON.                                */
int sc_analyze_musicology(const char* piece_json, char** out_json);

/* options_json (nullable): {"frame_len":1.0,"k":6,"n_null":20,"seed":0} */
int sc_analyze_graph(const char* piece_json, const char* options_json, char** out_json);

/* options_json (nullable): {"frame_len":1.0,"k":6,"top_k":6,"n_null":20,"seed":0} */
int sc_analyze_multiscale(const char* piece_json, const char* options_json, char** out_json);

/* Trait-trajectory equilibrium analysis. format is "json" or "csv".   */
int sc_equilibrium(const char* trajectory_text, const char* format, char** out_json);

/* Particle experiment. config_json: {"rule":"lj","steps":3000,        */
/* "seed":42,"n":1024,"rho":0.8,"out_dir":"...","stride":50}           */
int sc_particles(const char* config_json, char** out_json);

/* ------------------------------------------------------------------ */
/* Opaque piece handle.                                                */
int sc_piece_from_json(const char* piece_json, sc_piece** out);
int sc_piece_to_json(const sc_piece* piece, char** out_json);
int sc_piece_to_midi_file(const sc_piece* piece, const char* path);
void sc_piece_free(sc_piece* piece);

#ifdef __cplusplus
}
#endif

#endif /* SWARMCOMP_H */
