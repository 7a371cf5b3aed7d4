//! Spectrum prediction for RB curves read from CSV.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::neuralnet::{TargetEncoding, TrainedNetwork};

/// Columns of a `run-rb` curve file: `n,F_uncorrected,F_corrected,kappa`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CurveSet {
    pub n: Vec<usize>,
    pub f_uncorrected: Option<Vec<f64>>,
    pub f_corrected: Option<Vec<f64>>,
    pub kappa: Option<Vec<f64>>,
}

const COLUMNS: [&str; 3] = ["F_uncorrected", "F_corrected", "kappa"];

pub fn write_curve_csv<W: Write>(curves: &CurveSet, mut out: W) -> std::io::Result<()> {
    let cols: Vec<(&str, &Vec<f64>)> = COLUMNS
        .iter()
        .zip([&curves.f_uncorrected, &curves.f_corrected, &curves.kappa])
        .filter_map(|(name, c)| c.as_ref().map(|c| (*name, c)))
        .collect();
    write!(out, "n")?;
    for (name, _) in &cols {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for (i, n) in curves.n.iter().enumerate() {
        write!(out, "{n}")?;
        for (_, c) in &cols {
            write!(out, ",{}", c[i])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_curve_csv(path: &Path) -> Result<CurveSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve_csv(&text, path)
}

fn parse_curve_csv(text: &str, path: &Path) -> Result<CurveSet> {
    let bad = |reason: String| Error::Malformed {
        path: path.into(),
        reason,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    if header.first() != Some(&"n") {
        return Err(bad("first column must be `n`".into()));
    }
    let slots: Vec<Option<usize>> = header[1..]
        .iter()
        .map(|h| COLUMNS.iter().position(|c| c == h))
        .collect();
    if let Some(i) = slots.iter().position(Option::is_none) {
        return Err(bad(format!("unknown column {:?}", header[i + 1])));
    }
    let mut n = Vec::new();
    let mut cols: [Option<Vec<f64>>; 3] = Default::default();
    for &s in slots.iter().flatten() {
        cols[s] = Some(Vec::new());
    }
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(bad(format!("row {}: expected {} fields", row + 1, header.len())));
        }
        n.push(
            fields[0]
                .parse()
                .map_err(|_| bad(format!("row {}: bad gate count {:?}", row + 1, fields[0])))?,
        );
        for (field, slot) in fields[1..].iter().zip(&slots) {
            let v: f64 = field
                .parse()
                .map_err(|_| bad(format!("row {}: bad value {field:?}", row + 1)))?;
            if !v.is_finite() {
                return Err(bad(format!("row {}: non-finite value", row + 1)));
            }
            cols[slot.unwrap()].as_mut().unwrap().push(v);
        }
    }
    if n.is_empty() {
        return Err(bad("no data rows".into()));
    }
    let [f_uncorrected, f_corrected, kappa] = cols;
    Ok(CurveSet {
        n,
        f_uncorrected,
        f_corrected,
        kappa,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Diagnostics {
    pub kappa_curve: Option<Vec<f64>>,
    pub f_curve: Option<Vec<f64>>,
    pub alpha_network_id: Option<String>,
    pub amplitude_network_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct SpectroscopyResult {
    pub predicted_alpha: Option<f64>,
    /// `A·t0`.
    pub predicted_amp: Option<f64>,
    pub diagnostics: Diagnostics,
    pub true_alpha: Option<f64>,
    pub true_amp: Option<f64>,
}

/// First 16 hex digits of the SHA-256 of the network's JSON form.
pub fn network_id(net: &TrainedNetwork) -> Result<String> {
    Ok(hex::encode(Sha256::digest(net.to_json()?.as_bytes()))[..16].to_string())
}

fn apply(net: &TrainedNetwork, enc: TargetEncoding, curve: &[f64]) -> Result<f64> {
    net.require(enc)?;
    if net.network.input_len() != curve.len() {
        return Err(Error::Dimension {
            expected: net.network.input_len(),
            got: curve.len(),
        });
    }
    net.predict_label(curve)
}

/// α from the κ curve and `A·t0` from the uncorrected curve, for whichever
/// network/curve pairs are supplied.
pub fn predict(
    curves: &CurveSet,
    alpha_net: Option<&TrainedNetwork>,
    amp_net: Option<&TrainedNetwork>,
) -> Result<SpectroscopyResult> {
    if alpha_net.is_none() && amp_net.is_none() {
        return Err(Error::Config("no network given".into()));
    }
    let mut out = SpectroscopyResult::default();
    if let Some(net) = alpha_net {
        let kappa = match (&curves.kappa, &curves.f_corrected, &curves.f_uncorrected) {
            (Some(k), _, _) => k.clone(),
            (None, Some(c), Some(u)) => c
                .iter()
                .zip(u)
                .map(|(c, u)| c.max(crate::rbsim::FIDELITY_FLOOR) / u.max(crate::rbsim::FIDELITY_FLOOR))
                .collect(),
            _ => return Err(Error::Config("exponent prediction needs a kappa column".into())),
        };
        out.predicted_alpha = Some(apply(net, TargetEncoding::Alpha, &kappa)?);
        out.diagnostics.kappa_curve = Some(kappa);
        out.diagnostics.alpha_network_id = Some(network_id(net)?);
    }
    if let Some(net) = amp_net {
        let f = curves
            .f_uncorrected
            .clone()
            .ok_or_else(|| Error::Config("amplitude prediction needs an F_uncorrected column".into()))?;
        out.predicted_amp = Some(apply(net, TargetEncoding::LogAmp, &f)?);
        out.diagnostics.f_curve = Some(f);
        out.diagnostics.amplitude_network_id = Some(network_id(net)?);
    }
    Ok(out)
}
