use serde::{Deserialize, Serialize};

use crate::formulations::FormulationError;

/// Schemes with a per-optimization cost polynomial.
pub const COMPLEXITY_SCHEMES: [&str; 4] = ["p3-sdp", "p6", "p11", "p14"];

/// Evaluated interior-point cost order of one scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityRecord {
    pub scheme: String,
    pub n: usize,
    pub k: usize,
    pub j: usize,
    pub order: u128,
}

/// Per-iteration cost (coefficient formation plus factorisation) of an
/// interior-point solve of `scheme`, constants dropped, with n decision
/// variables and every cone counted at its size.
pub fn complexity_order(scheme: &str, n: usize, k: usize, j: usize) -> Result<u128, FormulationError> {
    let (n, k, j) = (n as u128, k as u128, j as u128);
    let value = match scheme {
        "p3-sdp" => {
            let v = k * n * n + j;
            v * (k * (1 + n.pow(3)) + 2 * j + v * (k * (1 + n * n) + 2 * j) + k * n * n + v * v)
        }
        "p6" => {
            let v = k * n + j;
            v * (2 * j * (1 + v) + 2 * k * n * n + v * v)
        }
        "p11" => {
            let v = k * n * n + j;
            let cubes = k * (n + 1).pow(2) + j * (n * j + 1).pow(3) + j * (n * n + 1).pow(3) + j + k * n.pow(3);
            let squares = k * (n + 1).pow(2) + j * (n * j + 1).pow(2) + j * (n * n + 1).pow(2) + j + k * n * n;
            v * (cubes + v * squares + v * (k * n * n) + v * v)
        }
        "p14" => {
            let v = 2 * n + j;
            let cubes = j * (n * j + 1).pow(3) + j * (n + 1).pow(3) + j;
            let squares = j * (n * j + 1).pow(2) + j + 12 * n * n;
            v * (cubes + v * squares + v * v)
        }
        other => return Err(FormulationError::UnknownScheme(other.to_string())),
    };
    Ok(value)
}
