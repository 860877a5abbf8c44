use std::fs;
use std::io::Write;
use std::path::Path;

use super::{AllocError, AnnotationState};

/// Reads and validates a state file.
pub fn load_state(path: &Path) -> Result<AnnotationState, AllocError> {
    let text = fs::read_to_string(path).map_err(|source| AllocError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_state(&text)
}

pub(crate) fn parse_state(text: &str) -> Result<AnnotationState, AllocError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let state: AnnotationState = serde_path_to_error::deserialize(de).map_err(|err| {
        let mut path = err.path().to_string();
        let inner = err.into_inner();
        let message = inner.to_string();
        // serde reports a missing field at its parent; point at the field itself
        if let Some(field) = missing_field(&message) {
            path = if path == "." {
                field.to_string()
            } else {
                format!("{path}.{field}")
            };
        }
        AllocError::Schema { path, message }
    })?;
    state.validate()?;
    Ok(state)
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}

/// Writes the state through a temporary file in the same directory and
/// renames it over `path`, so readers see either the old or the new file.
pub fn save_state(state: &AnnotationState, path: &Path) -> Result<(), AllocError> {
    let io_err = |source| AllocError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut body = serde_json::to_string_pretty(state).map_err(|e| AllocError::State(e.to_string()))?;
    body.push('\n');
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(body.as_bytes()).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}
