//! Rule-based DGA interpretation: Duval triangle, Rogers four-ratio and
//! the IEC ratio-code method.

use std::fmt;
use std::str::FromStr;

use crate::gas::{clamped_ratio, DiagnosisOutcome, FaultLabel, GasSample};
use crate::{Error, Result};

use DiagnosisOutcome::{Fault, DT, NF, UD};
use FaultLabel::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Duval,
    Rogers,
    Iec,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Duval, Method::Rogers, Method::Iec];

    pub fn diagnose(self, sample: &GasSample) -> Result<DiagnosisOutcome> {
        match self {
            Method::Duval => duval(sample),
            Method::Rogers => Ok(rogers(sample)),
            Method::Iec => Ok(iec_ratio(sample)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Duval => "duval",
            Method::Rogers => "rogers",
            Method::Iec => "iec",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "duval" => Ok(Method::Duval),
            "rogers" => Ok(Method::Rogers),
            "iec" => Ok(Method::Iec),
            _ => Err(Error::invalid(format!("unknown method {s:?}"))),
        }
    }
}

/// Position in the Duval triangle, in percent of CH4 + C2H4 + C2H2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuvalCoords {
    pub pct_ch4: f64,
    pub pct_c2h4: f64,
    pub pct_c2h2: f64,
}

impl DuvalCoords {
    pub fn of(sample: &GasSample) -> Result<Self> {
        let sum = sample.ch4 + sample.c2h4 + sample.c2h2;
        if sum <= 0.0 {
            return Err(Error::DuvalUndefined);
        }
        Ok(DuvalCoords {
            pct_ch4: 100.0 * sample.ch4 / sum,
            pct_c2h4: 100.0 * sample.c2h4 / sum,
            pct_c2h2: 100.0 * sample.c2h2 / sum,
        })
    }

    /// Zone lookup. Boundary points belong to the zone whose inequality
    /// is `>=` on that side.
    pub fn zone(&self) -> DiagnosisOutcome {
        let (ch4, c2h4, c2h2) = (self.pct_ch4, self.pct_c2h4, self.pct_c2h2);
        if ch4 >= 98.0 {
            Fault(PD)
        } else if c2h2 < 4.0 && c2h4 < 20.0 {
            Fault(T1)
        } else if c2h2 < 4.0 && c2h4 < 50.0 {
            Fault(T2)
        } else if c2h2 < 15.0 && c2h4 >= 50.0 {
            Fault(T3)
        } else if c2h2 >= 13.0 && c2h4 < 23.0 {
            Fault(D1)
        } else if (c2h2 >= 13.0 && c2h4 < 40.0) || (c2h2 >= 29.0 && c2h4 >= 40.0) {
            Fault(D2)
        } else {
            DT
        }
    }
}

pub fn duval(sample: &GasSample) -> Result<DiagnosisOutcome> {
    DuvalCoords::of(sample).map(|c| c.zone())
}

/// Ratio codes (CH4/H2, C2H6/CH4, C2H4/C2H6, C2H2/C2H4).
pub fn rogers_codes(s: &GasSample) -> [u8; 4] {
    let r1 = clamped_ratio(s.ch4, s.h2);
    let r2 = clamped_ratio(s.c2h6, s.ch4);
    let r3 = clamped_ratio(s.c2h4, s.c2h6);
    let r4 = clamped_ratio(s.c2h2, s.c2h4);
    let c1 = if r1 <= 0.1 {
        5
    } else if r1 < 1.0 {
        0
    } else if r1 < 3.0 {
        1
    } else {
        2
    };
    let c2 = u8::from(r2 >= 1.0);
    let c3 = if r3 < 1.0 {
        0
    } else if r3 < 3.0 {
        1
    } else {
        2
    };
    let c4 = if r4 < 0.5 {
        0
    } else if r4 < 3.0 {
        1
    } else {
        2
    };
    [c1, c2, c3, c4]
}

pub fn rogers(sample: &GasSample) -> DiagnosisOutcome {
    match rogers_codes(sample) {
        [0, 0, 0, 0] => NF,
        [5, 0, 0, 0] => Fault(PD),
        [1 | 2, 0, 0, 0] | [0, 1, 0, 0] => Fault(T1),
        [1, 1, 0, 0] | [0, 0, 1, 0] => Fault(T2),
        [1, 0, 1, 0] | [0, 0, 2, 0] => Fault(T3),
        [0, 0, 0, 1] => Fault(D1),
        [0, 0, 1 | 2, 1 | 2] => Fault(D2),
        _ => UD,
    }
}

/// Ratio codes (C2H2/C2H4, CH4/H2, C2H4/C2H6) plus the raw C2H2/C2H4 ratio.
pub fn iec_codes(s: &GasSample) -> ([u8; 3], f64) {
    let q1 = clamped_ratio(s.c2h2, s.c2h4);
    let q2 = clamped_ratio(s.ch4, s.h2);
    let q3 = clamped_ratio(s.c2h4, s.c2h6);
    let c1 = if q1 < 0.1 {
        0
    } else if q1 <= 3.0 {
        1
    } else {
        2
    };
    let c2 = if q2 < 0.1 {
        1
    } else if q2 <= 1.0 {
        0
    } else {
        2
    };
    let c3 = if q3 < 1.0 {
        0
    } else if q3 <= 3.0 {
        1
    } else {
        2
    };
    ([c1, c2, c3], q1)
}

pub fn iec_ratio(sample: &GasSample) -> DiagnosisOutcome {
    let (codes, q1) = iec_codes(sample);
    match codes {
        [0, 0, 0] => NF,
        [0, 1, 0] => Fault(PD),
        [1, 0, 2] if (0.6..=2.5).contains(&q1) => Fault(D2),
        [1 | 2, 0, 1 | 2] => Fault(D1),
        [0, 2, 0] => Fault(T1),
        [0, 2, 1] => Fault(T2),
        [0, 2, 2] => Fault(T3),
        _ => UD,
    }
}
