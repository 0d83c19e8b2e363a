#ifndef ELASTIC_MCTS_H
#define ELASTIC_MCTS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EmcStatus {
  EMC_STATUS_OK = 0,
  EMC_STATUS_NULL_POINTER = 1,
  EMC_STATUS_INVALID_ARGUMENT = 2,
  EMC_STATUS_PARSE = 3,
  EMC_STATUS_ILLEGAL_ACTION = 4,
  EMC_STATUS_GAME_OVER = 5,
  EMC_STATUS_BUFFER_TOO_SMALL = 6,
  EMC_STATUS_PANIC = 7,
} EmcStatus;

typedef enum EmcOutcome {
  EMC_OUTCOME_ONGOING = 0,
  EMC_OUTCOME_PLAYER0_WINS = 1,
  EMC_OUTCOME_PLAYER1_WINS = 2,
  EMC_OUTCOME_DRAW = 3,
} EmcOutcome;

typedef enum EmcUnitKind {
  EMC_UNIT_KIND_KING = 0,
  EMC_UNIT_KIND_WARRIOR = 1,
  EMC_UNIT_KIND_ARCHER = 2,
  EMC_UNIT_KIND_HEALER = 3,
} EmcUnitKind;

/**
 * Opaque agent handle with its own random stream.
 */
typedef struct EmcAgent EmcAgent;

/**
 * Opaque game handle.
 */
typedef struct EmcGame EmcGame;

typedef struct EmcUnit {
  uint32_t id;
  uint8_t owner;
  /**
   * An [`EmcUnitKind`] value.
   */
  uint8_t kind;
  int32_t x;
  int32_t y;
  int32_t health;
} EmcUnit;

/**
 * One unit's action. `has_move`/`has_target` flag the optional parts;
 * both zero means DoNothing.
 */
typedef struct EmcAction {
  uint32_t unit_id;
  uint8_t has_move;
  uint8_t has_target;
  int32_t move_x;
  int32_t move_y;
  uint32_t target_id;
} EmcAction;

typedef struct EmcDecisionStats {
  uint64_t iterations;
  uint64_t fm_calls;
  uint64_t wall_micros;
  uint64_t tree_nodes;
  uint64_t groups;
} EmcDecisionStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *emc_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t emc_last_error_message(char *buf, size_t len);

/**
 * Builds a game from map text (MovingAI format), level text and an optional
 * unit attribute table (TOML; null for the default table).
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum EmcStatus emc_game_load(const char *map_text,
                             const char *level_text,
                             const char *config_text,
                             struct EmcGame **out);

/**
 * # Safety
 * `game` must be null or a handle from [`emc_game_load`] not yet freed.
 */
void emc_game_free(struct EmcGame *game);

/**
 * # Safety
 * `game` must be a live handle or null.
 */
enum EmcOutcome emc_game_outcome(const struct EmcGame *game);

/**
 * Turn counter, or 0 for a null handle.
 *
 * # Safety
 * `game` must be a live handle or null.
 */
uint32_t emc_game_turn(const struct EmcGame *game);

/**
 * # Safety
 * `game` must be a live handle or null.
 */
uint8_t emc_game_active_player(const struct EmcGame *game);

/**
 * Forward-model calls applied to this game so far.
 *
 * # Safety
 * `game` must be a live handle or null.
 */
uint64_t emc_game_fm_calls(const struct EmcGame *game);

/**
 * # Safety
 * `game` must be a live handle or null.
 */
size_t emc_game_unit_count(const struct EmcGame *game);

/**
 * Living unit at `index` (units are ordered by id).
 *
 * # Safety
 * `game` must be a live handle; `out` must be writable.
 */
enum EmcStatus emc_game_unit(const struct EmcGame *game, size_t index, struct EmcUnit *out);

/**
 * Writes up to `cap` legal actions of `unit_id` into `buf` and their total
 * number into `len`. Returns `BufferTooSmall` (with `len` set) when `cap` is short.
 *
 * # Safety
 * `game` must be a live handle, `buf` must hold `cap` actions, `len` must be writable.
 */
enum EmcStatus emc_game_legal_actions(const struct EmcGame *game,
                                      uint32_t unit_id,
                                      struct EmcAction *buf,
                                      size_t cap,
                                      size_t *len);

/**
 * Applies one validated action.
 *
 * # Safety
 * `game` must be a live handle.
 */
enum EmcStatus emc_game_apply(struct EmcGame *game, struct EmcAction action);

/**
 * Creates an agent by name (`combat`, `random`, `mcts`, `mcts_u`,
 * `elastic_mcts_u`) with its tuned preset and the given budget and seed.
 *
 * # Safety
 * `name` must be null or NUL-terminated; `out` must be writable.
 */
enum EmcStatus emc_agent_new(const char *name,
                             uint64_t fm_budget,
                             uint64_t seed,
                             struct EmcAgent **out);

/**
 * # Safety
 * `agent` must be null or a handle from [`emc_agent_new`] not yet freed.
 */
void emc_agent_free(struct EmcAgent *agent);

/**
 * Forgets per-game state (the drawn unit order). Call between games.
 *
 * # Safety
 * `agent` must be a live handle or null.
 */
void emc_agent_reset(struct EmcAgent *agent);

/**
 * Asks the agent for the next action of the side to move. The game is not
 * modified; pass the action to [`emc_game_apply`]. `stats` may be null.
 *
 * # Safety
 * Handles must be live; `out` must be writable; `stats` null or writable.
 */
enum EmcStatus emc_agent_act(struct EmcAgent *agent,
                             const struct EmcGame *game,
                             struct EmcAction *out,
                             struct EmcDecisionStats *stats);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ELASTIC_MCTS_H */
