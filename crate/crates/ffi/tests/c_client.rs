//! Compiles a C client against the generated header and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

const CLIENT: &str = r#"
#include <stdio.h>
#include <string.h>
#include "openmaps.h"

static char *slurp(const char *path) {
    FILE *f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long n = ftell(f);
    rewind(f);
    char *buf = malloc(n + 1);
    fread(buf, 1, n, f);
    buf[n] = 0;
    fclose(f);
    return buf;
}

static OmModel *load(const char *dir, const char *name) {
    char path[4096];
    snprintf(path, sizeof path, "%s/%s", dir, name);
    char *text = slurp(path);
    OmModel *m = NULL;
    char *err = NULL;
    if (!text || om_model_parse(text, &m, &err) != OM_OK) {
        fprintf(stderr, "cannot load %s: %s\n", name, err ? err : "");
        exit(3);
    }
    free(text);
    return m;
}

int main(int argc, char **argv) {
    OmModel *tu = load(argv[1], "tu.json"), *td = load(argv[1], "td.json");
    char *out = NULL;
    if (om_bisim(tu, td, NULL, 0, NULL, NULL, &out) != OM_OK) return 4;
    if (!strstr(out, "\"not-bisimilar\"")) return 5;
    const OmModel *inputs[2] = {tu, td};
    char *check = NULL;
    if (om_check_witness(out, inputs, 2, &check) != OM_OK) return 6;
    if (!strstr(check, "\"confirmed\"")) return 7;
    printf("%s %s\n", om_version(), "confirmed");
    om_string_free(out);
    om_string_free(check);
    om_model_free(tu);
    om_model_free(td);
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_client_links_and_confirms_a_witness() {
    let lib = target_dir().join("libopenmaps_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipped: needs cc and {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(&src, CLIENT).unwrap();
    let bin = dir.path().join("client");
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let cc = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .output()
        .unwrap();
    assert!(cc.status.success(), "{}", String::from_utf8_lossy(&cc.stderr));
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures");
    let run = Command::new(&bin).arg(&fixtures).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8(run.stdout).unwrap().trim(), format!("{} confirmed", env!("CARGO_PKG_VERSION")));
}
