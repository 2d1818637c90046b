//! Text format for Bell inequalities.
//!
//! ```toml
//! settings = [2, 2]            # M_i for each party; the party count is its length
//! parties = 2                  # optional, must match
//! delta_c = 2.0                # optional, cross-checked by enumeration when feasible
//! alpha = [[0, 1, 0.5]]        # [party, setting, coeff]
//! beta = [[0, 1, 0, 0, 1.0]]   # [i, j, k, l, coeff]
//!
//! [[gamma]]
//! parties = [0, 1, 2]
//! settings = [0, 0, 1]
//! coeff = 1.0
//! ```
//!
//! Indices are 0-based. Two-body sums run over ordered pairs: `[0, 1, ...]` and
//! `[1, 0, ...]` are separate coefficients, so an unordered coefficient must be
//! written once (or split between the two orders).

use std::path::Path;

use serde::Deserialize;
use spinbell::bell::{BellInequality, Correlator, OneBody, TwoBody};

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInequality {
    parties: Option<usize>,
    settings: Vec<usize>,
    delta_c: Option<f64>,
    #[serde(default)]
    alpha: Vec<Vec<f64>>,
    #[serde(default)]
    beta: Vec<Vec<f64>>,
    #[serde(default)]
    gamma: Vec<RawCorrelator>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorrelator {
    parties: Vec<usize>,
    settings: Vec<usize>,
    coeff: f64,
}

fn index(value: f64, what: &str) -> CliResult<usize> {
    if value >= 0.0 && value.fract() == 0.0 && value < u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(CliError::Config(format!("{what}: {value} is not a non-negative integer index")))
    }
}

pub fn parse_inequality(text: &str) -> CliResult<BellInequality> {
    let raw: RawInequality = toml::from_str(text).map_err(|e| CliError::Config(format!("inequality: {e}")))?;
    if let Some(n) = raw.parties {
        if n != raw.settings.len() {
            return Err(CliError::Config(format!(
                "inequality.parties = {n} but settings lists {} parties",
                raw.settings.len()
            )));
        }
    }
    let alpha = raw
        .alpha
        .iter()
        .enumerate()
        .map(|(n, row)| match row.as_slice() {
            &[p, k, c] => Ok(OneBody {
                party: index(p, &format!("inequality.alpha[{n}]"))?,
                setting: index(k, &format!("inequality.alpha[{n}]"))?,
                coeff: c,
            }),
            _ => Err(CliError::Config(format!("inequality.alpha[{n}]: expected [party, setting, coeff]"))),
        })
        .collect::<CliResult<Vec<_>>>()?;
    let beta = raw
        .beta
        .iter()
        .enumerate()
        .map(|(n, row)| {
            let at = format!("inequality.beta[{n}]");
            match row.as_slice() {
                &[i, j, k, l, c] => Ok(TwoBody {
                    i: index(i, &at)?,
                    j: index(j, &at)?,
                    k: index(k, &at)?,
                    l: index(l, &at)?,
                    coeff: c,
                }),
                _ => Err(CliError::Config(format!("{at}: expected [i, j, k, l, coeff]"))),
            }
        })
        .collect::<CliResult<Vec<_>>>()?;
    let gamma = raw
        .gamma
        .into_iter()
        .map(|g| Correlator { parties: g.parties, settings: g.settings, coeff: g.coeff })
        .collect();
    Ok(BellInequality::new(raw.settings, alpha, beta, gamma, raw.delta_c)?)
}

pub fn load_inequality(path: &Path) -> CliResult<(BellInequality, String)> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })?;
    Ok((parse_inequality(&text)?, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHSH: &str = "settings = [2, 2]\ndelta_c = 2\nbeta = [[0, 1, 0, 0, 1], [0, 1, 0, 1, 1], [0, 1, 1, 0, 1], [0, 1, 1, 1, -1]]\n";

    #[test]
    fn chsh_file_parses() {
        let ineq = parse_inequality(CHSH).unwrap();
        assert!(ineq.is_chsh());
        assert_eq!(ineq.delta_c(), 2.0);
    }

    #[test]
    fn gamma_tables_parse() {
        let text = "settings = [2, 2, 2]\n[[gamma]]\nparties = [0, 1, 2]\nsettings = [1, 1, 1]\ncoeff = -1.0\n";
        let ineq = parse_inequality(text).unwrap();
        assert_eq!(ineq.gamma().len(), 1);
        assert_eq!(ineq.delta_c(), 1.0);
    }

    #[test]
    fn malformed_files_are_config_errors() {
        for text in [
            "settings = [2, 2]\nbeta = [[0, 1, 0, 1.0]]\n",
            "settings = [2, 2]\nalpha = [[0.5, 0, 1.0]]\n",
            "settings = [2, 2]\nparties = 3\n",
            "settings = [2, 2]\nunknown = 1\n",
            "settings = [2, 2]\ndelta_c = 1.5\nbeta = [[0, 1, 0, 0, 1], [0, 1, 0, 1, 1], [0, 1, 1, 0, 1], [0, 1, 1, 1, -1]]\n",
        ] {
            let err = parse_inequality(text).unwrap_err();
            assert_eq!(err.exit_status(), crate::error::ExitStatus::ConfigError, "{text}: {err}");
        }
    }
}
