use std::path::Path;

use affine_psd::{io, AffineParams, SymMat};

use crate::error::{CliError, CliResult};
use crate::manifest::ManifestBuilder;

pub fn read_params(path: &Path, m: &mut ManifestBuilder) -> CliResult<AffineParams> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    m.input(path, &bytes);
    let text = String::from_utf8(bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    io::params_from_json(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Reads JSON from a file when `arg` names one, otherwise parses `arg` itself.
fn json_arg(arg: &str, m: &mut ManifestBuilder) -> CliResult<String> {
    let path = Path::new(arg);
    if path.is_file() {
        let bytes = std::fs::read(path)?;
        m.input(path, &bytes);
        String::from_utf8(bytes).map_err(|e| CliError::Input(format!("{arg}: {e}")))
    } else if arg.trim_start().starts_with(['{', '[']) {
        Ok(arg.to_string())
    } else {
        Err(CliError::Input(format!("{arg}: no such file and not inline JSON")))
    }
}

pub fn read_symmat(arg: &str, what: &str, dim: Option<usize>, m: &mut ManifestBuilder) -> CliResult<SymMat> {
    let text = json_arg(arg, m)?;
    let x = io::symmat_from_json(&text).map_err(|e| CliError::Input(format!("--{what}: {e}")))?;
    check_dim(&x, what, dim)?;
    Ok(x)
}

pub fn read_symmat_list(arg: &str, what: &str, dim: Option<usize>, m: &mut ManifestBuilder) -> CliResult<Vec<SymMat>> {
    let text = json_arg(arg, m)?;
    let list: Vec<SymMat> =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("--{what}: {e}")))?;
    if list.is_empty() {
        return Err(CliError::Input(format!("--{what}: empty list")));
    }
    for x in &list {
        check_dim(x, what, dim)?;
    }
    Ok(list)
}

fn check_dim(x: &SymMat, what: &str, dim: Option<usize>) -> CliResult<()> {
    match dim {
        Some(d) if x.dim() != d => Err(CliError::Input(format!(
            "--{what}: dimension mismatch, expected {d}, found {}",
            x.dim()
        ))),
        _ => Ok(()),
    }
}
