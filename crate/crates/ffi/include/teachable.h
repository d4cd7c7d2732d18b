#ifndef TEACHABLE_H
#define TEACHABLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TeachableStatus {
  TEACHABLE_STATUS_OK = 0,
  TEACHABLE_STATUS_NULL_ARGUMENT = 1,
  TEACHABLE_STATUS_INVALID_UTF8 = 2,
  TEACHABLE_STATUS_BAD_JSON = 3,
  TEACHABLE_STATUS_BAD_FIXTURE = 4,
  TEACHABLE_STATUS_UNKNOWN_SCRIPT = 5,
  TEACHABLE_STATUS_ILLEGAL_INPUT = 6,
  TEACHABLE_STATUS_DIALOG = 7,
  TEACHABLE_STATUS_KB = 8,
  TEACHABLE_STATUS_SCRIPT_FAILED = 9,
  TEACHABLE_STATUS_INTERNAL = 10,
} TeachableStatus;

/*
 Opaque session handle.
 */
typedef struct TeachableSession TeachableSession;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Creates a session. `apps_dir` and `kb_path` may be null for the bundled
 apps and an empty knowledge base. The greeting messages are written to
 `out_messages` as a JSON array when it is not null.

 # Safety
 String arguments must be null or NUL-terminated. `out_session` must be valid for writes.
 */
enum TeachableStatus teachable_session_new(const char *apps_dir,
                                           const char *kb_path,
                                           struct TeachableSession **out_session,
                                           char **out_messages);

/*
 Releases a session. Null is ignored.

 # Safety
 `session` must come from `teachable_session_new` and not be used afterwards.
 */
void teachable_session_free(struct TeachableSession *session);

/*
 Sends one typed utterance. Writes the resulting messages as a JSON array.

 # Safety
 `session` must be live, `text` NUL-terminated, `out_messages` valid for writes.
 */
enum TeachableStatus teachable_session_send_text(struct TeachableSession *session,
                                                 const char *text,
                                                 char **out_messages);

/*
 Sends one turn given as JSON, e.g. `{"kind":"option","index":0}`.

 # Safety
 As for `teachable_session_send_text`.
 */
enum TeachableStatus teachable_session_send_json(struct TeachableSession *session,
                                                 const char *input_json,
                                                 char **out_messages);

/*
 Sets app environment values from a JSON object of strings.

 # Safety
 As for `teachable_session_send_text`; `out_messages` may be null.
 */
enum TeachableStatus teachable_session_set_env(struct TeachableSession *session,
                                               const char *env_json,
                                               char **out_messages);

/*
 Runs a stored script. `env_json` is null or a JSON object of strings.

 # Safety
 As for `teachable_session_send_text`.
 */
enum TeachableStatus teachable_session_run_script(struct TeachableSession *session,
                                                  const char *name,
                                                  const char *env_json,
                                                  char **out_messages);

/*
 Writes the session's knowledge base to `path`.

 # Safety
 `session` must be live and `path` NUL-terminated.
 */
enum TeachableStatus teachable_session_save_kb(struct TeachableSession *session, const char *path);

/*
 Message of the last failed call on this thread. Valid until the next failing call.
 */
const char *teachable_last_error_message(void);

/*
 Releases a string returned by this library. Null is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void teachable_string_free(char *s);

/*
 Library version, statically allocated.
 */
const char *teachable_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEACHABLE_H */
