//! Export of synthetic instances as Matrix Market files.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use berr_core::linalg::Backing;
use berr_core::problems::{write_matrix_market, write_matrix_market_vector};
use berr_core::Problem;

use crate::run::build_instance;
use crate::spec::{Disguise, ProblemSpec};
use crate::CliError;

/// `dir/stem_b.mtx` for `dir/stem.mtx`.
pub fn default_rhs_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map_or_else(|| "matrix".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_b.mtx"))
}

fn entries(p: &Problem) -> Vec<(usize, usize, f64)> {
    match p.op.backing() {
        Backing::Diagonal(d) => d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(),
        Backing::Csr(m) => m.triplets().collect(),
        _ => {
            let d = p.op.to_dense();
            let mut out = Vec::new();
            for i in 0..d.rows() {
                for (j, &v) in d.row(i).iter().enumerate() {
                    if v != 0.0 {
                        out.push((i, j, v));
                    }
                }
            }
            out
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<std::fs::File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::io("cannot create directory", dir, e))?;
    }
    std::fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io("cannot create", path, e))
}

/// Writes the matrix of `problem` to `out` and its right-hand side to `rhs_out`
/// (default [`default_rhs_path`]). Returns the right-hand-side path.
pub fn cmd_synth(
    problem: &ProblemSpec,
    disguise: Disguise,
    seed: u64,
    out: &Path,
    rhs_out: Option<&Path>,
) -> Result<PathBuf, CliError> {
    if problem.is_file() {
        return Err(CliError::Spec(
            "synth needs a synthetic problem, not a file".into(),
        ));
    }
    let p = build_instance(problem, disguise, seed)?;
    let n = p.n();
    let rhs_path = rhs_out.map_or_else(|| default_rhs_path(out), Path::to_path_buf);

    let mut w = create(out)?;
    write_matrix_market(&mut w, n, n, entries(&p))
        .map_err(|e| CliError::io("cannot write", out, e))?;
    w.flush()
        .map_err(|e| CliError::io("cannot write", out, e))?;

    let mut w = create(&rhs_path)?;
    write_matrix_market_vector(&mut w, &p.b)
        .map_err(|e| CliError::io("cannot write", &rhs_path, e))?;
    w.flush()
        .map_err(|e| CliError::io("cannot write", &rhs_path, e))?;
    log::info!("wrote {} and {}", out.display(), rhs_path.display());
    Ok(rhs_path)
}
