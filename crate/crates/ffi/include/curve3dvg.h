#ifndef CURVE3DVG_H
#define CURVE3DVG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum C3dStatus {
  C3D_STATUS_OK = 0,
  C3D_STATUS_NULL_POINTER = 1,
  C3D_STATUS_INVALID_UTF8 = 2,
  C3D_STATUS_DOMAIN = 3,
  C3D_STATUS_ARGUMENT = 4,
  C3D_STATUS_CONFIG = 5,
  C3D_STATUS_INVALID_SCENE = 6,
  C3D_STATUS_INGESTION = 7,
  C3D_STATUS_RUN = 8,
  C3D_STATUS_IO = 9,
  C3D_STATUS_JSON = 10,
  C3D_STATUS_PNG = 11,
  C3D_STATUS_BEHIND_CAMERA = 12,
  C3D_STATUS_BUFFER_TOO_SMALL = 13,
  C3D_STATUS_PANIC = 14,
} C3dStatus;

/**
 * A pinhole camera.
 */
typedef struct C3dCamera C3dCamera;

/**
 * A curve-importance network.
 */
typedef struct C3dNet C3dNet;

/**
 * A 3D vector graphics scene.
 */
typedef struct C3dScene C3dScene;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Engine version as a static NUL-terminated string.
 */
const char *c3d_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next library call on the same thread.
 */
const char *c3d_last_error(void);

/**
 * Releases a string returned by the library. Null is ignored.
 */
void c3d_string_free(char *s);

/**
 * Parses a scene from its JSON document.
 */
enum C3dStatus c3d_scene_from_json(const char *json, struct C3dScene **out);

/**
 * Reads a scene JSON file.
 */
enum C3dStatus c3d_scene_load(const char *path, struct C3dScene **out);

/**
 * Serializes a scene to JSON; release the result with `c3d_string_free`.
 */
enum C3dStatus c3d_scene_to_json(const struct C3dScene *scene, char **out);

/**
 * Number of paths; 0 for a null handle.
 */
size_t c3d_scene_path_count(const struct C3dScene *scene);

void c3d_scene_free(struct C3dScene *scene);

/**
 * Camera at `position` looking at `look_at`; vectors are 3 doubles each.
 */
enum C3dStatus c3d_camera_new(const double *position,
                              const double *look_at,
                              const double *up,
                              double fov_deg,
                              uint32_t width,
                              uint32_t height,
                              struct C3dCamera **out);

/**
 * Camera on a sphere around the origin looking at it; elevation is
 * measured from +z, which is also the up direction.
 */
enum C3dStatus c3d_camera_orbit(double radius,
                                double azimuth_deg,
                                double elevation_deg,
                                double fov_deg,
                                uint32_t width,
                                uint32_t height,
                                struct C3dCamera **out);

void c3d_camera_free(struct C3dCamera *camera);

/**
 * Projects a 3D point: `out_xy` receives 2 normalized image coordinates,
 * `out_depth` (nullable) the camera-space depth.
 */
enum C3dStatus c3d_project_point(const struct C3dCamera *camera,
                                 const double *point,
                                 double *out_xy,
                                 double *out_depth);

/**
 * Reads a network file written by a fit run.
 */
enum C3dStatus c3d_net_load(const char *path, struct C3dNet **out);

void c3d_net_free(struct C3dNet *net);

/**
 * Renders `scene` into `out` as 8-bit RGBA rows (`width * height * 4`
 * bytes). `net` and `oracle` (a preset name supplying depth for visibility
 * votes) may be null.
 */
enum C3dStatus c3d_render_rgba8(const struct C3dScene *scene,
                                const struct C3dNet *net,
                                const struct C3dCamera *camera,
                                bool visibility_aware,
                                const char *oracle,
                                uint8_t *out,
                                size_t out_len);

/**
 * Renders `scene` to an SVG document; invisible paths are drawn faintly.
 */
enum C3dStatus c3d_render_svg(const struct C3dScene *scene,
                              const struct C3dNet *net,
                              const struct C3dCamera *camera,
                              bool visibility_aware,
                              const char *oracle,
                              char **out);

/**
 * Fits a scene to renders of an oracle preset. `config_json` (nullable) uses
 * the CLI config layout; `n_paths`, `steps` and `seed` override it.
 * Identical arguments give identical results.
 */
enum C3dStatus c3d_fit_oracle(const char *oracle,
                              const char *config_json,
                              size_t n_paths,
                              size_t steps,
                              uint64_t seed,
                              struct C3dScene **out_scene,
                              struct C3dNet **out_net);

/**
 * Runs the command-line interface with `argc` arguments (including the
 * program name) and returns its exit code: 0 success, 1 usage or
 * validation error, 2 runtime error.
 */
int c3d_run_cli(int argc, const char *const *argv);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURVE3DVG_H */
