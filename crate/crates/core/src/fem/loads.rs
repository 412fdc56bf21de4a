//! Time-dependent loads and Dirichlet data.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Scalar load history.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeFn {
    /// Rises as `t` up to `peak`, returns linearly to zero at `end`.
    Hat { peak: f64, end: f64 },
    /// `amplitude · sin(omega · t)`.
    Sin { amplitude: f64, omega: f64 },
    Const(f64),
}

impl TimeFn {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeFn::Hat { peak, end } => {
                if t <= 0.0 || t >= end {
                    0.0
                } else if t <= peak {
                    t
                } else {
                    peak * (end - t) / (end - peak)
                }
            }
            TimeFn::Sin { amplitude, omega } => amplitude * (omega * t).sin(),
            TimeFn::Const(v) => v,
        }
    }
}

impl fmt::Display for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFn::Hat { peak, end } => write!(f, "hat({peak}, {end})"),
            TimeFn::Sin { amplitude, omega } => write!(f, "sin({amplitude}, {omega})"),
            TimeFn::Const(v) => write!(f, "const({v})"),
        }
    }
}

impl FromStr for TimeFn {
    type Err = Error;

    /// Parses `hat(peak, end)`, `sin(amplitude, omega)` or `const(v)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("bad time function '{s}': expected hat(a, b), sin(a, w) or const(v)"));
        let s = s.trim();
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let name = s[..open].trim();
        let args: Vec<f64> = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        if args.iter().any(|a| !a.is_finite()) {
            return Err(bad());
        }
        match (name, args.as_slice()) {
            ("hat", &[peak, end]) => {
                if !(0.0 < peak && peak < end) {
                    return Err(Error::InvalidInput(format!("hat needs 0 < peak < end (got {peak}, {end})")));
                }
                Ok(TimeFn::Hat { peak, end })
            }
            ("sin", &[amplitude, omega]) => Ok(TimeFn::Sin { amplitude, omega }),
            ("const", &[v]) => Ok(TimeFn::Const(v)),
            _ => Err(bad()),
        }
    }
}

/// Uniform reference traction `direction · f(t)` on a face set.
#[derive(Clone, Debug, PartialEq)]
pub struct Traction {
    pub set: String,
    pub direction: [f64; 3],
    pub time: TimeFn,
}

/// Fixed displacement components on the nodes of a face set. The velocity of
/// those components is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletBc {
    pub set: String,
    pub components: Vec<usize>,
    pub value: f64,
}

/// Body force per unit mass, `direction · f(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BodyForce {
    pub direction: [f64; 3],
    pub time: TimeFn,
}

impl BodyForce {
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let s = self.time.eval(t);
        self.direction.map(|d| d * s)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoadSpec {
    pub body: Option<BodyForce>,
    pub tractions: Vec<Traction>,
    pub dirichlet: Vec<DirichletBc>,
}

impl LoadSpec {
    pub fn body_force(&self, t: f64) -> [f64; 3] {
        self.body.as_ref().map_or([0.0; 3], |b| b.eval(t))
    }
}
