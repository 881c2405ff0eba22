//! Initial perturbations written as short strings:
//! `none`, `gauss:<amp>`, `eig:<k>` and `bump:<amp>:<center>:<width>`.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    None,
    /// `amp · e^{−r²}`.
    Gauss { amp: f64 },
    /// The `k`-th discrete eigenfunction of the radial operator.
    Eig { k: usize },
    /// `amp · e^{−((r − center)/width)²}`.
    Bump { amp: f64, center: f64, width: f64 },
}

impl Perturbation {
    /// Value at `r` for the closed-form kinds; `None` for `eig`, which only
    /// exists on a grid.
    pub fn eval(&self, r: f64) -> Option<f64> {
        match *self {
            Perturbation::None => Some(0.0),
            Perturbation::Gauss { amp } => Some(amp * (-r * r).exp()),
            Perturbation::Bump { amp, center, width } => {
                let z = (r - center) / width;
                Some(amp * (-z * z).exp())
            }
            Perturbation::Eig { .. } => None,
        }
    }
}

fn number(field: &str, text: &str) -> Result<f64, String> {
    let v: f64 = text.parse().map_err(|_| format!("perturbation {field} '{text}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("perturbation {field} must be finite"))
    }
}

impl FromStr for Perturbation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["none"] => Ok(Perturbation::None),
            ["gauss", amp] => Ok(Perturbation::Gauss { amp: number("amplitude", amp)? }),
            ["eig", k] => {
                let k = k.parse().map_err(|_| format!("eigenfunction index '{k}' is not a non-negative integer"))?;
                Ok(Perturbation::Eig { k })
            }
            ["bump", amp, center, width] => {
                let width = number("width", width)?;
                if width <= 0.0 {
                    return Err("bump width must be positive".into());
                }
                Ok(Perturbation::Bump { amp: number("amplitude", amp)?, center: number("center", center)?, width })
            }
            _ => Err(format!(
                "unrecognised perturbation '{s}': expected none, gauss:<amp>, eig:<k> or bump:<amp>:<center>:<width>"
            )),
        }
    }
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::None => write!(f, "none"),
            Perturbation::Gauss { amp } => write!(f, "gauss:{amp}"),
            Perturbation::Eig { k } => write!(f, "eig:{k}"),
            Perturbation::Bump { amp, center, width } => write!(f, "bump:{amp}:{center}:{width}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        assert_eq!("none".parse::<Perturbation>(), Ok(Perturbation::None));
        assert_eq!("gauss:0.01".parse::<Perturbation>(), Ok(Perturbation::Gauss { amp: 0.01 }));
        assert_eq!("eig:2".parse::<Perturbation>(), Ok(Perturbation::Eig { k: 2 }));
        assert_eq!(
            "bump:0.1:2:0.5".parse::<Perturbation>(),
            Ok(Perturbation::Bump { amp: 0.1, center: 2.0, width: 0.5 })
        );
        for bad in ["", "gauss", "gauss:x", "eig:-1", "bump:1:2", "bump:1:2:0", "gauss:inf", "wave:1"] {
            assert!(bad.parse::<Perturbation>().is_err(), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        for s in ["none", "gauss:0.01", "eig:3", "bump:0.1:2:0.5"] {
            assert_eq!(s.parse::<Perturbation>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn values() {
        let g = Perturbation::Gauss { amp: 2.0 };
        assert_eq!(g.eval(0.0), Some(2.0));
        assert!((g.eval(1.0).unwrap() - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        let b = Perturbation::Bump { amp: 1.0, center: 3.0, width: 0.5 };
        assert_eq!(b.eval(3.0), Some(1.0));
        assert_eq!(Perturbation::Eig { k: 0 }.eval(1.0), None);
    }
}
