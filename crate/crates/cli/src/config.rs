//! JSON run configuration.
//!
//! Complex numbers are `[re, im]`, matrices nested row-major arrays of them.

use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use semimarkov::grid::TimeGrid;
use semimarkov::superop::{CMatrix, DensityMatrix, KrausMap};
use semimarkov::waiting_time::WaitingTimeSpec;

use crate::CliError;

type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub hilbert_dim: Option<usize>,
    pub kraus: Option<Vec<JsonMatrix>>,
    pub waiting_time: WaitingTimeSpec,
    pub grid: Option<TimeGrid>,
    pub initial_state: Option<JsonMatrix>,
    #[serde(default)]
    pub options: SolverOptions,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub trials: u64,
    pub seed: u64,
    pub streams: u64,
    pub stride: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { trials: 100_000, seed: 0, streams: 8, stride: 20 }
    }
}

/// Validated configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub hilbert_dim: usize,
    pub kraus: Option<KrausMap>,
    pub waiting_time: WaitingTimeSpec,
    pub grid: TimeGrid,
    pub initial_state: CMatrix,
    pub options: SolverOptions,
}

fn matrix(field: &str, rows: &JsonMatrix) -> Result<CMatrix, CliError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Config(format!("{field}: expected a non-empty square matrix")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        raw.waiting_time
            .validate()
            .map_err(|e| CliError::Config(format!("waiting_time: {e}")))?;
        let grid = raw.grid.unwrap_or(TimeGrid { t_end: 10.0, n_points: 1001 });
        grid.validate().map_err(|e| CliError::Config(format!("grid: {e}")))?;

        let kraus = match &raw.kraus {
            None => None,
            Some(ops) => {
                let ops = ops
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix(&format!("kraus[{i}]"), m))
                    .collect::<Result<Vec<_>, _>>()?;
                Some(KrausMap::new(ops).map_err(|e| CliError::Config(format!("kraus: {e}")))?)
            }
        };
        let dim = raw.hilbert_dim.or(kraus.as_ref().map(KrausMap::dim)).unwrap_or(2);
        if let Some(k) = &kraus {
            if k.dim() != dim {
                return Err(CliError::Config(format!(
                    "hilbert_dim: {dim} does not match Kraus operators of size {}",
                    k.dim()
                )));
            }
        }
        let initial_state = match &raw.initial_state {
            Some(m) => {
                let rho = matrix("initial_state", m)?;
                if rho.nrows() != dim {
                    return Err(CliError::Config(format!("initial_state: expected a {dim}×{dim} matrix")));
                }
                DensityMatrix::new(rho)
                    .map_err(|e| CliError::Config(format!("initial_state: {e}")))?
                    .into_inner()
            }
            None if dim == 2 => DensityMatrix::plus().into_inner(),
            None => CMatrix::from_element(dim, dim, Complex64::new(1.0 / dim as f64, 0.0)),
        };
        let o = &raw.options;
        if o.trials == 0 || o.streams == 0 || o.stride == 0 {
            return Err(CliError::Config("options: trials, streams and stride must be positive".into()));
        }
        Ok(Self {
            hilbert_dim: dim,
            kraus,
            waiting_time: raw.waiting_time,
            grid,
            initial_state,
            options: raw.options,
        })
    }

    pub fn require_kraus(&self) -> Result<&KrausMap, CliError> {
        self.kraus
            .as_ref()
            .ok_or_else(|| CliError::Config("kraus: field is required for this command".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = RunConfig::parse(
            r#"{"waiting_time": {"type": "erlang", "n": 2, "rate": 1.0},
                "kraus": [[[[0,0],[0,0]],[[1,0],[0,0]]], [[[0,0],[1,0]],[[0,0],[0,0]]]]}"#,
        )
        .unwrap();
        assert_eq!(cfg.hilbert_dim, 2);
        assert_eq!(cfg.grid.n_points, 1001);
        assert_eq!(cfg.options.trials, 100_000);
    }

    #[test]
    fn reports_position_of_syntax_errors() {
        let err = RunConfig::parse("{\n  \"waiting_time\": {\"type\": \"erlang\", \"n\": 2,}\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn rejects_non_trace_preserving_kraus() {
        let err = RunConfig::parse(
            r#"{"waiting_time": {"type": "exponential", "rate": 1.0},
                "kraus": [[[[0,0],[1,0]],[[0,0],[0,0]]]]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("kraus"), "{err}");
    }
}
