#ifndef PATROL_PATROL_H
#define PATROL_PATROL_H

/* C API for the patrol library: grid-map parsing, lockstep multi-agent
 * patrolling simulation, baseline strategies, MAPPO training and evaluation.
 *
 * All functions return PATROL_OK (0) on success or a nonzero status code.
 * On failure, patrol_last_error() returns a human-readable message for the
 * calling thread. Strings returned through char** out-parameters are heap
 * allocated and must be released with patrol_string_free().
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define PATROL_API __declspec(dllexport)
#else
#  define PATROL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t patrol_status;

enum {
  PATROL_OK = 0,
  PATROL_E_UNKNOWN_GLYPH = 1,
  PATROL_E_NON_RECTANGULAR = 2,
  PATROL_E_NO_STATION = 3,
  PATROL_E_NO_VERTEX = 4,
  PATROL_E_DISCONNECTED_GRAPH = 5,
  PATROL_E_TOO_MANY_AGENTS = 6,
  PATROL_E_UNKNOWN_AGENT = 7,
  PATROL_E_INVALID_ACTION = 8,
  PATROL_E_MESSAGE_OUT_OF_RANGE = 9,
  PATROL_E_NEGATIVE_IDLENESS = 10,
  PATROL_E_OUT_OF_RANGE = 11,
  PATROL_E_SHAPE_MISMATCH = 12,
  PATROL_E_ALL_ACTIONS_MASKED = 13,
  PATROL_E_NON_FINITE = 14,
  PATROL_E_NO_PATH_TO_STATION = 15,
  PATROL_E_PARTITION_FAILURE = 16,
  PATROL_E_INSUFFICIENT_SAMPLES = 17,
  PATROL_E_INVALID_HORIZON = 18,
  PATROL_E_LENGTH_MISMATCH = 19,
  PATROL_E_ZERO_PROBABILITY = 20,
  PATROL_E_NO_RECORDED_FORWARD = 21,
  PATROL_E_BAD_CONFIG = 22,
  PATROL_E_IO = 23,
  PATROL_E_INVALID_ARGUMENT = 24,
  PATROL_E_INTERNAL = 25
};

/* Cell kinds reported by patrol_map_cell_kind. */
enum {
  PATROL_CELL_VERTEX = 0,
  PATROL_CELL_OBSTACLE = 1,
  PATROL_CELL_STATION = 2
};

/* Action indices, in fixed order. */
enum {
  PATROL_ACTION_UP = 0,
  PATROL_ACTION_DOWN = 1,
  PATROL_ACTION_LEFT = 2,
  PATROL_ACTION_RIGHT = 3,
  PATROL_ACTION_STAY = 4
};

typedef struct patrol_map patrol_map;
typedef struct patrol_world patrol_world;

PATROL_API const char* patrol_version(void);

/* Message describing the most recent failure on the calling thread.
 * Valid until the next patrol_* call on the same thread. */
PATROL_API const char* patrol_last_error(void);

PATROL_API void patrol_string_free(char* s);

/* ---- maps ----
 * Map text format, one row per line: '.' vertex of priority 0, '1'..'9'
 * vertex with that priority, '#' obstacle, 'C' charging station. Lines
 * starting with ';' are comments. Rows must be equal length, at least one
 * station and one vertex must exist, and the non-obstacle cells must form
 * one 4-connected component. */
PATROL_API patrol_status patrol_map_parse(const char* text, patrol_map** out);
PATROL_API patrol_status patrol_map_load(const char* path, patrol_map** out);

/* options_json: {"width":W,"height":H,"obstacle_density":0.2,
 *                "priority_density":0.1,"stations":1,"seed":N} */
PATROL_API patrol_status patrol_map_generate(const char* options_json,
                                             patrol_map** out);

PATROL_API patrol_status patrol_map_render(const patrol_map* map,
                                           char** text_out);
PATROL_API void patrol_map_free(patrol_map* map);

PATROL_API int32_t patrol_map_width(const patrol_map* map);
PATROL_API int32_t patrol_map_height(const patrol_map* map);
/* Returns a PATROL_CELL_* value, or -1 if out of bounds. */
PATROL_API int32_t patrol_map_cell_kind(const patrol_map* map, int32_t row,
                                        int32_t col);
/* Returns the cell priority (-1 for obstacles), or INT32_MIN if out of
 * bounds. */
PATROL_API int32_t patrol_map_priority(const patrol_map* map, int32_t row,
                                       int32_t col);

/* ---- worlds ----
 * env_json holds the environment parameter object; any omitted field takes
 * its default: {"b_max":550,"b_swap_range":[80,150],"b_init_range":[0.9,1.0],
 * "p_dyn_max":0.05,"dt_minutes":0.1,"duration_multiplier_max":1.2,
 * "drain_range":[0.9,1.1],"init_idleness":"zero"} */
PATROL_API patrol_status patrol_world_create(const patrol_map* map,
                                             const char* env_json,
                                             uint32_t n_agents, uint64_t seed,
                                             patrol_world** out);
PATROL_API void patrol_world_free(patrol_world* world);

/* mask_out[5] receives 0/1 validity flags in action-index order. */
PATROL_API patrol_status patrol_world_valid_actions(const patrol_world* world,
                                                    uint32_t agent,
                                                    uint8_t mask_out[5]);

/* messages[i] in 1..16 and actions[i] a PATROL_ACTION_* value for each of
 * the n agent slots; entries for inactive agents are ignored. The step
 * outcome (duration, per-agent events, collision count, idleness stats) is
 * returned as a JSON object. */
PATROL_API patrol_status patrol_world_step(patrol_world* world,
                                           const uint32_t* messages,
                                           const uint32_t* actions, uint32_t n,
                                           char** outcome_json_out);

/* Full dynamic state (clock, step index, idleness matrix, agents). */
PATROL_API patrol_status patrol_world_state_json(const patrol_world* world,
                                                 char** state_json_out);

/* ---- experiments ----
 * Each call takes a JSON options object and returns a JSON report. When the
 * options contain "out_dir", result files (metrics.json, episodes.jsonl,
 * events.jsonl, ...) are also written there. Runs are fully determined by
 * (options, seed).
 *
 * simulate: {"config":{...}|"config_path":"...", "strategy":"cr|part|sebs|rl",
 *            "map_path":"...", "episodes":N, "horizon":N, "agents":N,
 *            "seed":N, "out_dir":"...", "events":true, "csv":true,
 *            "checkpoint":"...", "require_success":false, "burnin":0}
 * compare:  simulate options with "strategies":["cr","sebs",...]
 * evaluate: simulate options; strategy fixed to "rl", requires "checkpoint"
 * train:    {"config":{...}|"config_path":"...", "map_path":"...",
 *            "run_dir":"...", "seed":N} */
PATROL_API patrol_status patrol_simulate(const char* options_json,
                                         char** report_json_out);
PATROL_API patrol_status patrol_compare(const char* options_json,
                                        char** report_json_out);
PATROL_API patrol_status patrol_evaluate(const char* options_json,
                                         char** report_json_out);
PATROL_API patrol_status patrol_train(const char* options_json,
                                      char** report_json_out);

#ifdef __cplusplus
}
#endif

#endif /* PATROL_PATROL_H */
