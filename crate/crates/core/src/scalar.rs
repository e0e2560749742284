use num_complex::Complex;
use serde::{Deserialize, Serialize};

pub type C64 = Complex<f64>;

/// Whether a system lives over the reals or the complex numbers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }

    /// Real if every value has a zero imaginary part.
    pub fn infer<'a>(values: impl IntoIterator<Item = &'a C64>) -> Field {
        if values.into_iter().all(|z| z.im == 0.0) {
            Field::Real
        } else {
            Field::Complex
        }
    }
}

impl std::str::FromStr for Field {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(format!("unknown field `{other}` (expected real or complex)")),
        }
    }
}

#[cfg(test)]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[cfg(test)]
pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}
