//! Gas samples, fault labels, and the 37 ratio parameters derived from
//! the five dissolved gases.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lower clamp applied to every ratio denominator (ppm).
pub const DENOMINATOR_FLOOR: f64 = 1e-3;

/// Number of ratio parameters in a [`ParamVector`].
pub const N_PARAMS: usize = 37;

/// The six fault classes. Declaration order is the canonical order used for
/// matrix indexing and tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultLabel {
    PD,
    D1,
    D2,
    T1,
    T2,
    T3,
}

impl FaultLabel {
    pub const COUNT: usize = 6;
    pub const ALL: [FaultLabel; 6] = [
        FaultLabel::PD,
        FaultLabel::D1,
        FaultLabel::D2,
        FaultLabel::T1,
        FaultLabel::T2,
        FaultLabel::T3,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FaultLabel::PD => "PD",
            FaultLabel::D1 => "D1",
            FaultLabel::D2 => "D2",
            FaultLabel::T1 => "T1",
            FaultLabel::T2 => "T2",
            FaultLabel::T3 => "T3",
        }
    }
}

impl fmt::Display for FaultLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FaultLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown fault label {s:?}")))
    }
}

/// Result of a diagnosis method. `NF`/`UD` only come from the ratio-code
/// methods; `DT` only from the Duval triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosisOutcome {
    Fault(FaultLabel),
    /// No fault.
    NF,
    /// Undefined: the ratio codes match no table row.
    UD,
    /// Mixed thermal/discharge zone of the Duval triangle.
    DT,
}

impl fmt::Display for DiagnosisOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiagnosisOutcome::Fault(l) => l.fmt(f),
            DiagnosisOutcome::NF => f.write_str("NF"),
            DiagnosisOutcome::UD => f.write_str("UD"),
            DiagnosisOutcome::DT => f.write_str("DT"),
        }
    }
}

impl FromStr for DiagnosisOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "NF" => Ok(DiagnosisOutcome::NF),
            "UD" => Ok(DiagnosisOutcome::UD),
            "DT" => Ok(DiagnosisOutcome::DT),
            other => other.parse().map(DiagnosisOutcome::Fault),
        }
    }
}

/// One transformer's dissolved-gas measurement, concentrations in ppm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasSample {
    pub id: String,
    pub h2: f64,
    pub ch4: f64,
    pub c2h6: f64,
    pub c2h4: f64,
    pub c2h2: f64,
    pub label: Option<FaultLabel>,
}

impl GasSample {
    /// Builds a validated sample. Every concentration must be finite and
    /// non-negative.
    pub fn new(id: impl Into<String>, gases: [f64; 5], label: Option<FaultLabel>) -> Result<Self> {
        let sample = GasSample {
            id: id.into(),
            h2: gases[0],
            ch4: gases[1],
            c2h6: gases[2],
            c2h4: gases[3],
            c2h2: gases[4],
            label,
        };
        sample.validate()?;
        Ok(sample)
    }

    pub fn validate(&self) -> Result<()> {
        const NAMES: [&str; 5] = ["h2", "ch4", "c2h6", "c2h4", "c2h2"];
        for (name, v) in NAMES.iter().zip(self.gases()) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!(
                    "sample {:?}: {name} = {v} is not a non-negative finite concentration",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Gases in the order H2, CH4, C2H6, C2H4, C2H2.
    pub fn gases(&self) -> [f64; 5] {
        [self.h2, self.ch4, self.c2h6, self.c2h4, self.c2h2]
    }

    pub fn aggregates(&self) -> Aggregates {
        aggregates(self)
    }

    pub fn params(&self) -> ParamVector {
        param_vector(self)
    }
}

/// Total-gas aggregates used as ratio denominators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregates {
    /// H2 + CH4 + C2H6 + C2H4 + C2H2
    pub th: f64,
    /// CH4 + C2H4 + C2H2
    pub thd: f64,
    /// H2 + C2H4 + C2H2
    pub thh: f64,
    /// CH4 + C2H6 + C2H4 + C2H2
    pub tch: f64,
}

pub fn aggregates(s: &GasSample) -> Aggregates {
    Aggregates {
        th: s.h2 + s.ch4 + s.c2h6 + s.c2h4 + s.c2h2,
        thd: s.ch4 + s.c2h4 + s.c2h2,
        thh: s.h2 + s.c2h4 + s.c2h2,
        tch: s.ch4 + s.c2h6 + s.c2h4 + s.c2h2,
    }
}

/// Division with the denominator clamped below at [`DENOMINATOR_FLOOR`].
pub fn clamped_ratio(num: f64, den: f64) -> f64 {
    num / den.max(DENOMINATOR_FLOOR)
}

/// The 37 ratio parameters of one sample. Parameter numbers are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector {
    values: [f64; N_PARAMS],
}

impl ParamVector {
    /// Parameter `number` in 1..=37.
    ///
    /// Panics when `number` is out of range.
    pub fn get(&self, number: usize) -> f64 {
        assert!(
            (1..=N_PARAMS).contains(&number),
            "parameter number {number} outside 1..=37"
        );
        self.values[number - 1]
    }

    /// Zero-based view: `as_slice()[i]` is parameter `i + 1`.
    pub fn as_slice(&self) -> &[f64; N_PARAMS] {
        &self.values
    }
}

/// Human-readable names for parameters 1..=37 (index 0 is parameter 1).
pub const PARAM_NAMES: [&str; N_PARAMS] = [
    "H2/TH",
    "CH4/TH",
    "C2H6/TH",
    "C2H4/TH",
    "C2H2/TH",
    "C2H2/H2",
    "C2H2/CH4",
    "C2H2/C2H6",
    "C2H2/C2H4",
    "C2H4/H2",
    "C2H4/CH4",
    "C2H4/C2H6",
    "C2H4/H2+C2H4/CH4",
    "H2",
    "CH4",
    "C2H6",
    "C2H4",
    "C2H2",
    "TH",
    "THD",
    "THH",
    "TCH",
    "H2/THD",
    "CH4/THD",
    "C2H6/THD",
    "C2H4/THD",
    "C2H2/THD",
    "H2/THH",
    "CH4/THH",
    "C2H6/THH",
    "C2H4/THH",
    "C2H2/THH",
    "H2/TCH",
    "CH4/TCH",
    "C2H6/TCH",
    "C2H4/TCH",
    "C2H2/TCH",
];

pub fn param_vector(s: &GasSample) -> ParamVector {
    let agg = aggregates(s);
    let gases = s.gases();
    let r = clamped_ratio;
    let mut v = [0.0; N_PARAMS];

    for (i, g) in gases.iter().enumerate() {
        v[i] = r(*g, agg.th);
    }
    v[5] = r(s.c2h2, s.h2);
    v[6] = r(s.c2h2, s.ch4);
    v[7] = r(s.c2h2, s.c2h6);
    v[8] = r(s.c2h2, s.c2h4);
    v[9] = r(s.c2h4, s.h2);
    v[10] = r(s.c2h4, s.ch4);
    v[11] = r(s.c2h4, s.c2h6);
    v[12] = v[9] + v[10];
    v[13..18].copy_from_slice(&gases);
    v[18] = agg.th;
    v[19] = agg.thd;
    v[20] = agg.thh;
    v[21] = agg.tch;
    for (block, den) in [(22, agg.thd), (27, agg.thh), (32, agg.tch)] {
        for (i, g) in gases.iter().enumerate() {
            v[block + i] = r(*g, den);
        }
    }
    ParamVector { values: v }
}
