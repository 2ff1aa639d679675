use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use trirank::decomp::SliceDecomposition;
use trirank::slicerank::ChainReport;
use trirank::{write_tensor, Check, Tensor3};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorId {
    pub id: String,
    /// sha256 of the canonical text form.
    pub sha256: String,
    pub field: String,
    pub dims: [usize; 3],
}

impl TensorId {
    pub fn new(id: &str, t: &Tensor3) -> TensorId {
        let digest = Sha256::digest(write_tensor(t).as_bytes());
        TensorId {
            id: id.to_string(),
            sha256: hex::encode(digest),
            field: t.field().designation().to_string(),
            dims: t.dims(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompSummary {
    pub terms: usize,
    pub working_field: String,
    pub verified: bool,
    pub r_used: usize,
    pub retries: u32,
    pub within_bound: Option<bool>,
}

impl DecompSummary {
    pub fn new(d: &SliceDecomposition, verified: bool) -> DecompSummary {
        DecompSummary {
            terms: d.len(),
            working_field: d.working_field.designation().to_string(),
            verified,
            r_used: d.r_used,
            retries: d.retries,
            within_bound: d.within_bound,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub ar_ms: u128,
    pub gr_ms: u128,
    pub sr_ms: u128,
    pub decompose_ms: Option<u128>,
}

impl Timings {
    pub fn ms(d: Duration) -> u128 {
        d.as_millis()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub schema: u32,
    pub tensor: TensorId,
    pub chain: ChainReport,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decomposition: Option<DecompSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timings: Option<Timings>,
}

impl RankReport {
    pub fn failed(&self) -> bool {
        self.chain.any_failed()
            || self
                .decomposition
                .as_ref()
                .is_some_and(|d| !d.verified || d.within_bound == Some(false))
    }
}

fn check_label(c: Check) -> &'static str {
    match c {
        Check::Pass => "pass",
        Check::Fail => "fail",
        Check::Skipped => "skipped",
        Check::Undetermined => "undetermined",
    }
}

/// One line of a corpus summary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub id: String,
    pub sha256: String,
    pub field: String,
    pub dims: String,
    pub ar: String,
    pub gr: String,
    pub gr_stable: String,
    pub sr_lo: String,
    pub sr_hi: String,
    pub sr_method: String,
    pub ratio_sr_gr: String,
    pub sr_3gr: String,
    pub gr_271ar: String,
    pub sr_813ar: String,
    pub decomp_terms: String,
    pub error: String,
}

impl SummaryRow {
    pub fn from_report(r: &RankReport) -> SummaryRow {
        let c = &r.chain;
        let [n1, n2, n3] = r.tensor.dims;
        SummaryRow {
            id: r.tensor.id.clone(),
            sha256: r.tensor.sha256.clone(),
            field: r.tensor.field.clone(),
            dims: format!("{n1}x{n2}x{n3}"),
            ar: format!("{:.9}", c.ar.value),
            gr: c.gr.gr.to_string(),
            gr_stable: c.gr.stable.to_string(),
            sr_lo: c.sr.lo.to_string(),
            sr_hi: c.sr.hi.to_string(),
            sr_method: format!("{:?}", c.sr.method),
            ratio_sr_gr: c.ratio_sr_gr.map(|(a, b)| format!("{a}/{b}")).unwrap_or_default(),
            sr_3gr: check_label(c.holds_sr_3gr).into(),
            gr_271ar: check_label(c.holds_gr_271ar).into(),
            sr_813ar: check_label(c.holds_sr_813ar).into(),
            decomp_terms: r.decomposition.as_ref().map(|d| d.terms.to_string()).unwrap_or_default(),
            error: String::new(),
        }
    }

    pub fn errored(id: &str, message: &str) -> SummaryRow {
        SummaryRow {
            id: id.to_string(),
            error: message.to_string(),
            ..SummaryRow::default()
        }
    }
}

pub fn write_rows<W: std::io::Write>(w: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record([
            "id", "sha256", "field", "dims", "ar", "gr", "gr_stable", "sr_lo", "sr_hi", "sr_method",
            "ratio_sr_gr", "sr_3gr", "gr_271ar", "sr_813ar", "decomp_terms", "error",
        ])?;
    }
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
