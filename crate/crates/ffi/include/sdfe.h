#ifndef SDFE_H
#define SDFE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SDFE_DECISION_REJECT = 0,
  SDFE_DECISION_ACCEPT = 1,
  /**
   * Aborted session, or one that only served the artifact.
   */
  SDFE_DECISION_NONE = 2,
} SdfeDecision;

typedef enum {
  SDFE_GROUP_RISTRETTO = 0,
  /**
   * Small-order group for statistics only; offers no security.
   */
  SDFE_GROUP_TOY = 1,
} SdfeGroup;

typedef enum {
  SDFE_STATUS_OK = 0,
  SDFE_STATUS_NULL_ARGUMENT = 1,
  SDFE_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Unparsable model, key file, artifact or request.
   */
  SDFE_STATUS_MALFORMED = 3,
  /**
   * Keys, artifact and model disagree on the group.
   */
  SDFE_STATUS_GROUP_MISMATCH = 4,
  /**
   * The protocol run itself failed or was aborted.
   */
  SDFE_STATUS_PROTOCOL = 5,
  SDFE_STATUS_PANIC = 6,
} SdfeStatus;

/**
 * AHE key pair for one group.
 */
typedef struct SdfeKeys SdfeKeys;

/**
 * Server model.
 */
typedef struct SdfeModel SdfeModel;

/**
 * Heap bytes handed to the caller.
 */
typedef struct {
  uint8_t *data;
  size_t len;
} SdfeBytes;

/**
 * What the server learned from one session.
 */
typedef struct {
  SdfeDecision decision;
  /**
   * Binary mode: paths that decrypted to zero. Ternary mode: paths
   * flagged as cheating.
   */
  uint64_t detail;
  bool aborted;
  /**
   * Bytes on the wire including framing. File exchange reports the
   * request size and zero.
   */
  uint64_t client_bytes;
  uint64_t server_bytes;
} SdfeReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static NUL-terminated string.
 */
const char *sdfe_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `cap > 0`). Returns the full message length
 * without the terminator; `0` after a successful call.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t sdfe_last_error(char *buf, size_t cap);

/**
 * # Safety
 * `b` must be null or a value filled by this library and not yet freed.
 */
void sdfe_bytes_free(SdfeBytes *b);

/**
 * Parses and validates a compiled model (the JSON written by
 * `sdfe compile-model`).
 *
 * # Safety
 * `json` must be NUL-terminated; `model_out` writable.
 */
SdfeStatus sdfe_model_from_json(const char *json, SdfeModel **model_out);

/**
 * # Safety
 * `model` live; `json_out` writable.
 */
SdfeStatus sdfe_model_to_json(const SdfeModel *model, SdfeBytes *json_out);

/**
 * # Safety
 * `model` null or owned by the caller; not used afterwards.
 */
void sdfe_model_free(SdfeModel *model);

/**
 * Number of paths `P`, or 0 for a null handle.
 *
 * # Safety
 * `model` null or live.
 */
size_t sdfe_model_paths(const SdfeModel *model);

/**
 * Length of the feature vector the model expects.
 *
 * # Safety
 * `model` null or live.
 */
size_t sdfe_model_features(const SdfeModel *model);

/**
 * Plaintext evaluation on quantized input `x[0..len]`.
 *
 * # Safety
 * `x` readable for `len` values; outputs writable.
 */
SdfeStatus sdfe_model_oracle(const SdfeModel *model,
                             const uint32_t *x,
                             size_t len,
                             SdfeDecision *decision_out,
                             int64_t *score_out);

/**
 * Fresh key pair. `seed` may be null for OS randomness.
 *
 * # Safety
 * `seed` null or readable; `keys_out` writable.
 */
SdfeStatus sdfe_keys_generate(SdfeGroup group, const uint64_t *seed, SdfeKeys **keys_out);

/**
 * Loads the JSON key file format written by `sdfe keygen`.
 *
 * # Safety
 * `json` NUL-terminated; `keys_out` writable.
 */
SdfeStatus sdfe_keys_from_json(const char *json, SdfeKeys **keys_out);

/**
 * Serializes the key pair, secret included.
 *
 * # Safety
 * `keys` live; `json_out` writable.
 */
SdfeStatus sdfe_keys_to_json(const SdfeKeys *keys, SdfeBytes *json_out);

/**
 * # Safety
 * `keys` null or owned by the caller; not used afterwards.
 */
void sdfe_keys_free(SdfeKeys *keys);

/**
 * Encrypts `model` under the server's `keys` into the offline artifact.
 * `width` is the garbled comparand width (64 in production).
 *
 * # Safety
 * Handles live; `seed` null or readable; `artifact_out` writable.
 */
SdfeStatus sdfe_artifact_encode(const SdfeModel *model,
                                const SdfeKeys *keys,
                                uint16_t width,
                                const uint64_t *seed,
                                SdfeBytes *artifact_out);

/**
 * Client side of the one-flow binary mode: builds the request file for
 * input `x` from the artifact alone.
 *
 * # Safety
 * Buffers readable for their lengths; `request_out` writable.
 */
SdfeStatus sdfe_hbc_request(const uint8_t *artifact,
                            size_t artifact_len,
                            const uint32_t *x,
                            size_t x_len,
                            const uint64_t *seed,
                            SdfeBytes *request_out);

/**
 * Server side of the binary mode: answers one request file.
 *
 * # Safety
 * Handles live; `request` readable; `report_out` writable.
 */
SdfeStatus sdfe_hbc_serve(const SdfeModel *model,
                          const SdfeKeys *keys,
                          const uint8_t *request,
                          size_t request_len,
                          SdfeReport *report_out);

/**
 * Runs a complete session in-process (server and client on two threads)
 * for either mode. `adversary` names a client strategy as accepted by
 * the CLI (`honest`, `all-zeros`, `all-plus`, `corrupt-proof`, ...) and
 * may be null for `honest`.
 *
 * # Safety
 * Handles live; buffers readable; `adversary` null or NUL-terminated;
 * `report_out` writable.
 */
SdfeStatus sdfe_session_run(const SdfeModel *model,
                            const SdfeKeys *server_keys,
                            const uint8_t *artifact,
                            size_t artifact_len,
                            const uint32_t *x,
                            size_t x_len,
                            const char *adversary,
                            uint64_t seed,
                            SdfeReport *report_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDFE_H */
