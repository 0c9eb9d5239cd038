//! Named surfaces with exact integer coefficients.

use crate::discriminant::Surface;
use crate::error::{Error, Result};

pub const TRANSFORMED_FERMAT: &str = "z1*z4^2 + z4*z1^2 + z2*z3^2 + z3*z2^2";
pub const FERMAT: &str = "z1^3 + z2^3 + z3^3 + z4^3";
/// A perturbation of the Fermat cubic with no twistor fibers.
pub const GENERIC: &str = "z1^3 + z2^3 + z3^3 + z4^3 + 2*z1*z2*z3 - z2*z3*z4 + 3*i*z1^2*z4";

/// The cubic `z1 z4^2 + z4 z1^2 + z2 z3^2 + z3 z2^2 = 0`.
pub fn transformed_fermat() -> Surface {
    Surface::parse(TRANSFORMED_FERMAT).expect("preset parses")
}

pub fn fermat() -> Surface {
    Surface::parse(FERMAT).expect("preset parses")
}

pub fn generic() -> Surface {
    Surface::parse(GENERIC).expect("preset parses")
}

/// Resolve `preset:<name>`.
pub fn by_name(name: &str) -> Result<Surface> {
    match name {
        "transformed-fermat" => Ok(transformed_fermat()),
        "fermat" => Ok(fermat()),
        "generic" => Ok(generic()),
        _ => Err(Error::Parse(format!("unknown preset `{name}`"))),
    }
}
