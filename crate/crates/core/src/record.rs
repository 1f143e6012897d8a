//! JSON documents for instanton records and their certificates.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::certify::{BitClass, Certificate};
use crate::channel::{ChannelKind, ChannelModel};
use crate::search::InstantonRecord;

pub const RECORD_SCHEMA: &str = "instanton-record/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordDocument {
    pub schema: String,
    pub code_id: String,
    pub channel: ChannelModel,
    /// `"s"` when the error rate decays as `exp(-length * s)`, `"s^2"` when
    /// it decays as `exp(-length * s^2 / 2)`.
    pub snr_units: String,
    pub n_it: usize,
    pub target_bit: usize,
    pub length: f64,
    pub xi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyDocument {
    pub green_bits: Vec<usize>,
    pub h_sum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    #[serde(rename = "N_c")]
    pub n_c: i64,
    #[serde(rename = "N_2")]
    pub n_2: i64,
    pub n_star: Option<i64>,
    pub m_2: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sum_sq: Option<i64>,
    pub length_exact: String,
    pub coloring: Vec<BitClass>,
    pub n_coeffs: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degeneracy: Option<DegeneracyDocument>,
}

impl From<&Certificate> for CertificateDocument {
    fn from(c: &Certificate) -> Self {
        CertificateDocument {
            n_c: c.n_c,
            n_2: c.n_2,
            n_star: c.n_star,
            m_2: c.m_2,
            sum_sq: c.sum_sq,
            length_exact: c.length_exact.to_string(),
            coloring: c.coloring.clone(),
            n_coeffs: c.n_coeffs.clone(),
            degeneracy: c.degeneracy.as_ref().map(|d| DegeneracyDocument {
                green_bits: d.green_bits.clone(),
                h_sum: d.h_sum.to_string(),
            }),
        }
    }
}

impl CertificateDocument {
    pub fn length_exact(&self) -> Result<Ratio<i64>, String> {
        parse_ratio(&self.length_exact)
    }
}

/// Parses `"p/q"` or `"p"`.
pub fn parse_ratio(text: &str) -> Result<Ratio<i64>, String> {
    text.trim()
        .parse::<Ratio<i64>>()
        .map_err(|e| format!("bad rational {text:?}: {e}"))
}

pub fn snr_units(kind: ChannelKind) -> &'static str {
    match kind {
        ChannelKind::Laplacian => "s",
        ChannelKind::Gaussian => "s^2",
    }
}

impl RecordDocument {
    pub fn new(record: &InstantonRecord, code_id: &str, certificate: Option<&Certificate>) -> Self {
        RecordDocument {
            schema: RECORD_SCHEMA.to_string(),
            code_id: code_id.to_string(),
            channel: record.channel,
            snr_units: snr_units(record.channel.kind).to_string(),
            n_it: record.n_it,
            target_bit: record.target_bit,
            length: record.length,
            xi: record.xi.clone(),
            certificate: certificate.map(CertificateDocument::from),
            warning: None,
        }
    }

    pub fn record(&self) -> InstantonRecord {
        InstantonRecord {
            xi: self.xi.clone(),
            target_bit: self.target_bit,
            n_it: self.n_it,
            channel: self.channel,
            length: self.length,
        }
    }
}
