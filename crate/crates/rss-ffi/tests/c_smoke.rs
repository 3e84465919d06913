//! Compiles and runs a real C program against the generated header and the
//! staticlib, exercising the ABI from the consumer side.

use std::path::PathBuf;
use std::process::Command;

const SMOKE_C: &str = r#"
#include <math.h>
#include <stdio.h>
#include "rss.h"

int main(void) {
  RssLongitudinalParams lon = {1.0, 2.0, 4.0, 8.0};
  RssLateralParams lat = {0.5, 1.0, 2.0, 2.0, 0.1};
  double d = 0.0;
  if (rss_longitudinal_safe_distance(&lon, 30.0, 30.0, &d) != RssStatus_Ok) return 1;
  if (fabs(d - 102.75) > 1e-9) return 2;
  if (rss_lateral_safe_distance(&lat, 1.0, -1.0, &d) != RssStatus_Ok) return 3;
  if (fabs(d - 2.475) > 1e-9) return 4;
  if (rss_longitudinal_safe_distance(0, 1.0, 1.0, &d) != RssStatus_NullPointer) return 5;

  RssWorld *world = rss_world_new(2, 3.5, 50.0);
  if (!world) return 6;
  if (rss_world_add_agent(world, 0, 0, 0.0, 1.75, 30.0, 0.0, 4.5, 1.8) != RssStatus_Ok) return 7;
  if (rss_world_add_agent(world, 1, 0, 114.5, 1.75, 30.0, 0.0, 4.5, 1.8) != RssStatus_Ok) return 8;
  RssVerdict v;
  if (rss_world_rule1(world, &lon, &v) != RssStatus_Ok) return 9;
  if (v.status != 0 || !v.has_margin || fabs(v.margin - 7.25) > 1e-9) return 10;
  RssProperResponse resp;
  if (rss_world_proper_response(world, &lon, &lat, &resp) != RssStatus_Ok) return 11;
  if (resp.maneuver != 0) return 12;
  rss_world_free(world);
  rss_world_free(0);
  return 0;
}
"#;

fn staticlib_path() -> PathBuf {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let profile = if cfg!(debug_assertions) { "debug" } else { "release" };
    manifest.join("../../target").join(profile).join("librss_ffi.a")
}

#[test]
fn c_program_links_and_passes() {
    let Ok(cc) = which_cc() else {
        eprintln!("no C compiler found; skipping link-level smoke test");
        return;
    };
    let lib = staticlib_path();
    assert!(lib.exists(), "staticlib not found at {}", lib.display());

    let dir = std::env::temp_dir().join(format!("rss-ffi-smoke-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let source = dir.join("smoke.c");
    let binary = dir.join("smoke");
    std::fs::write(&source, SMOKE_C).unwrap();

    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let compile = Command::new(&cc)
        .arg("-std=c11")
        .arg(format!("-I{}", include.display()))
        .arg(&source)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&binary)
        .output()
        .expect("compiler runs");
    assert!(
        compile.status.success(),
        "compile failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().expect("smoke binary runs");
    assert!(run.status.success(), "smoke binary exited with {:?}", run.status.code());

    let _ = std::fs::remove_dir_all(&dir);
}

fn which_cc() -> Result<String, ()> {
    for candidate in ["cc", "clang", "gcc"] {
        if Command::new(candidate).arg("--version").output().is_ok_and(|o| o.status.success()) {
            return Ok(candidate.to_string());
        }
    }
    Err(())
}
