pub mod derive;
pub mod gauss;
pub mod lebesgue;
pub mod project;
pub mod refine;
pub mod solve;
pub mod verify;

use std::fs;
use std::path::Path;

use crate::CliError;

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let body = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&body)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub(crate) fn write_text(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .map_err(|e| CliError::Input(format!("cannot create {}: {e}", parent.display())))?;
        }
    }
    fs::write(path, body)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string(value).expect("serializable output");
    write_text(path, &body)
}
