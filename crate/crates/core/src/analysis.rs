//! Batch analysis: distribution files, the per-point pipeline and its JSON
//! report.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::adaptation::{build_one_adapted, reduce_to_two_adapted_with, verify_adaptation};
use crate::conformal::{canonical_metric, weyl_tensor_with, CURVATURE_TOL};
use crate::conventions::Conventions;
use crate::distribution::{Distribution, NondegeneracyCertificate, PolynomialAnnihilators, Term, COORD_NAMES};
use crate::error::{Error, Result};
use crate::jet::{MultiIndex, DIM};
use crate::reduction::{flatness_test, reduce};
use crate::spin::{
    build_iso, contraction_residual, filtration_split, piece27_mismatch, spinor_kernel, weyl_to_spin_form,
    CANONICAL_SPINOR,
};

pub const DEFAULT_ORDER: usize = 5;
pub const DEFAULT_TOL: f64 = 1e-8;

/// Which optional stages to run; adaptation always runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Stages {
    pub reduction: bool,
    pub conformal: bool,
    pub spin: bool,
}

impl Stages {
    pub const ALL: Stages = Stages { reduction: true, conformal: true, spin: true };
    pub const ADAPTATION: Stages = Stages { reduction: false, conformal: false, spin: false };
}

impl Default for Stages {
    fn default() -> Self {
        Stages::ALL
    }
}

impl FromStr for Stages {
    type Err = Error;

    /// Comma-separated stage names, or `all`. The spin stage pulls in the
    /// reduction and conformal stages it depends on.
    fn from_str(s: &str) -> Result<Self> {
        let mut out = Stages::ADAPTATION;
        for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
            match name {
                "all" => out = Stages::ALL,
                "adaptation" => {}
                "reduction" => out.reduction = true,
                "conformal" => out.conformal = true,
                "spin" => out = Stages::ALL,
                other => return Err(Error::InvalidArgument(format!("unknown stage `{other}`"))),
            }
        }
        Ok(out)
    }
}

/// Contents of a distribution file.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionFile {
    pub order: usize,
    pub base_point: [f64; DIM],
    pub annihilators: PolynomialAnnihilators<f64>,
}

fn schema(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { location: location.into(), message: message.into() }
}

fn expect_object<'a>(v: &'a Value, at: &str) -> Result<&'a serde_json::Map<String, Value>> {
    v.as_object().ok_or_else(|| schema(at, "expected an object"))
}

fn expect_array<'a>(v: &'a Value, at: &str, len: Option<usize>) -> Result<&'a Vec<Value>> {
    let a = v.as_array().ok_or_else(|| schema(at, "expected an array"))?;
    if let Some(n) = len {
        if a.len() != n {
            return Err(schema(at, format!("expected {n} entries, found {}", a.len())));
        }
    }
    Ok(a)
}

fn expect_f64(v: &Value, at: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| schema(at, "expected a number"))
}

fn check_keys(obj: &serde_json::Map<String, Value>, allowed: &[&str], at: &str) -> Result<()> {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(schema(format!("{at}.{k}"), "unknown field"));
        }
    }
    for k in allowed {
        if !obj.contains_key(*k) {
            return Err(schema(at, format!("missing field `{k}`")));
        }
    }
    Ok(())
}

impl DistributionFile {
    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)
            .map_err(|e| schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))?;
        let top = expect_object(&v, "$")?;
        check_keys(top, &["order", "base_point", "annihilators"], "$")?;
        let order = top["order"]
            .as_u64()
            .ok_or_else(|| schema("$.order", "expected a nonnegative integer"))? as usize;
        let bp = expect_array(&top["base_point"], "$.base_point", Some(DIM))?;
        let mut base_point = [0.0; DIM];
        for (i, x) in bp.iter().enumerate() {
            base_point[i] = expect_f64(x, &format!("$.base_point[{i}]"))?;
        }
        let forms_v = expect_array(&top["annihilators"], "$.annihilators", Some(3))?;
        let mut forms: [Vec<Term<f64>>; 3] = Default::default();
        for (i, fv) in forms_v.iter().enumerate() {
            let at = format!("$.annihilators[{i}]");
            for (j, tv) in expect_array(fv, &at, None)?.iter().enumerate() {
                let at = format!("{at}[{j}]");
                let t = expect_object(tv, &at)?;
                check_keys(t, &["dcoord", "monomial", "coeff"], &at)?;
                let name = t["dcoord"].as_str().ok_or_else(|| schema(format!("{at}.dcoord"), "expected a string"))?;
                let dcoord = COORD_NAMES.iter().position(|n| *n == name).ok_or_else(|| {
                    schema(format!("{at}.dcoord"), format!("unknown coordinate `{name}`, expected one of {COORD_NAMES:?}"))
                })?;
                let mv = expect_array(&t["monomial"], &format!("{at}.monomial"), Some(DIM))?;
                let mut exps = [0u8; DIM];
                for (k, e) in mv.iter().enumerate() {
                    let at = format!("{at}.monomial[{k}]");
                    let n = e.as_u64().ok_or_else(|| schema(&at, "expected a nonnegative integer"))?;
                    exps[k] = u8::try_from(n).map_err(|_| schema(&at, "exponent too large"))?;
                }
                let coeff = expect_f64(&t["coeff"], &format!("{at}.coeff"))?;
                forms[i].push(Term { dcoord, monomial: MultiIndex(exps), coeff });
            }
        }
        Ok(DistributionFile { order, base_point, annihilators: PolynomialAnnihilators { forms } })
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        let forms: Vec<Value> = self
            .annihilators
            .forms
            .iter()
            .map(|terms| {
                Value::Array(
                    terms
                        .iter()
                        .map(|t| {
                            json!({
                                "dcoord": COORD_NAMES[t.dcoord],
                                "monomial": t.monomial.exponents().to_vec(),
                                "coeff": t.coeff,
                            })
                        })
                        .collect(),
                )
            })
            .collect();
        let v = json!({ "order": self.order, "base_point": self.base_point, "annihilators": forms });
        serde_json::to_string_pretty(&v).unwrap()
    }
}

#[derive(Clone, Debug)]
pub struct AnalysisRequest {
    pub annihilators: PolynomialAnnihilators<f64>,
    pub points: Vec<[f64; DIM]>,
    pub order: usize,
    pub tol: f64,
    pub stages: Stages,
    /// Adds wall-clock timings, which makes reports non-reproducible.
    pub timing: bool,
}

impl AnalysisRequest {
    pub fn new(annihilators: PolynomialAnnihilators<f64>, points: Vec<[f64; DIM]>) -> Self {
        AnalysisRequest { annihilators, points, order: DEFAULT_ORDER, tol: DEFAULT_TOL, stages: Stages::ALL, timing: false }
    }
}

/// Report for a single base point. Arrays follow the row-major layouts of
/// [`crate::reduction::FundamentalTensor`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct PointReport {
    pub base_point: [f64; DIM],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nondegeneracy: Option<NondegeneracyCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adaptation_residuals: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_matrix: Option<[[f64; 3]; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_skew: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced_p_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge_dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s4: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s3: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s2: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s4_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s3_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s2_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_relations: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weyl_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curvature_residuals: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spinor_kernel_dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical_spinor_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub piece27_mismatch: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_flat: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weyl_flat: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agreement: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl PointReport {
    /// No error and no verdict disagreement.
    pub fn ok(&self) -> bool {
        self.error.is_none() && self.agreement != Some(false)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AnalysisReport {
    pub order: usize,
    pub tol: f64,
    pub points: Vec<PointReport>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }

    pub fn all_ok(&self) -> bool {
        self.points.iter().all(PointReport::ok)
    }
}

pub fn analyze(req: &AnalysisRequest) -> AnalysisReport {
    analyze_with(req, &Conventions::default())
}

pub fn analyze_with(req: &AnalysisRequest, conv: &Conventions) -> AnalysisReport {
    let points = req
        .points
        .par_iter()
        .map(|p| {
            let start = Instant::now();
            let mut rep = PointReport { base_point: *p, ..Default::default() };
            if let Err(e) = analyze_point(req, *p, conv, &mut rep) {
                rep.error = Some(e.to_string());
            }
            if req.timing {
                rep.timing_ms = Some(start.elapsed().as_secs_f64() * 1e3);
            }
            rep
        })
        .collect();
    AnalysisReport { order: req.order, tol: req.tol, points }
}

fn analyze_point(req: &AnalysisRequest, base: [f64; DIM], conv: &Conventions, rep: &mut PointReport) -> Result<()> {
    let d = Distribution::from_annihilators(req.annihilators.to_forms(base, req.order)?)?;
    let cert = d.check_nondegenerate()?;
    rep.nondegeneracy = Some(cert.clone());
    if !cert.verdict {
        return Err(Error::Degenerate { ratio: cert.singular_ratio });
    }
    let one = build_one_adapted(&d)?;
    let rep1 = verify_adaptation(&one, &d)?;
    rep.p_matrix = Some(rep1.p);
    rep.p_skew = Some(rep1.p_skew);
    let cf = reduce_to_two_adapted_with(&one, &d, conv)?;
    let rep2 = verify_adaptation(&cf, &d)?;
    rep.reduced_p_norm = Some(rep2.p_norm());
    let mut residuals = rep1.residuals.clone();
    for (k, v) in &rep2.residuals {
        residuals.insert(format!("two_adapted_{k}"), *v);
    }
    rep.adaptation_residuals = Some(residuals);

    let mut tensor = None;
    if req.stages.reduction {
        let red = reduce(&cf)?;
        rep.gauge_dimension = Some(red.connection.gauge_dim());
        let t = &red.tensor;
        rep.s4 = Some(t.s4.clone());
        rep.s3 = Some(t.s3.clone());
        rep.s2 = Some(t.s2.clone());
        rep.s4_norm = Some(t.s4_norm());
        rep.s3_norm = Some(t.s3_norm());
        rep.s2_norm = Some(t.s2_norm());
        rep.s_relations = Some(t.relations().into_iter().map(|(k, v)| (k.to_string(), v)).collect());
        rep.s_flat = Some(flatness_test(t, req.tol)?);
        tensor = Some(red.tensor);
    }
    if req.stages.conformal {
        let g = canonical_metric(&cf)?;
        let ct = weyl_tensor_with(&g, conv)?;
        rep.curvature_residuals = Some(ct.residuals.iter().map(|(k, v)| (k.to_string(), *v)).collect());
        if ct.max_residual() > CURVATURE_TOL {
            return Err(Error::Integrity(format!("curvature identities fail by {:.3e}", ct.max_residual())));
        }
        rep.weyl_norm = Some(ct.weyl_norm());
        let weyl_flat = ct.weyl_norm() < req.tol;
        rep.weyl_flat = Some(weyl_flat);
        if let Some(s_flat) = rep.s_flat {
            rep.agreement = Some(s_flat == weyl_flat);
        }
        if req.stages.spin {
            let iso = build_iso(&cf, &g)?;
            let sw = weyl_to_spin_form(&ct, &iso)?;
            rep.spinor_kernel_dimension = Some(spinor_kernel(&sw).dimension);
            rep.canonical_spinor_residual = Some(contraction_residual(&sw, &CANONICAL_SPINOR));
            if let Some(t) = &tensor {
                if !weyl_flat {
                    rep.piece27_mismatch = Some(piece27_mismatch(&filtration_split(&sw)?, t));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip() {
        let f = DistributionFile {
            order: 5,
            base_point: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5],
            annihilators: PolynomialAnnihilators::perturbed(0.1, 1),
        };
        assert_eq!(DistributionFile::parse(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn schema_errors_name_the_field() {
        let f = DistributionFile { order: 5, base_point: [0.0; 6], annihilators: PolynomialAnnihilators::flat() };
        let mut v: Value = serde_json::from_str(&f.to_json()).unwrap();
        v["annihilators"][0][0]["monomial"] = json!([0, 0, 0, 0, 0]);
        match DistributionFile::parse(&v.to_string()) {
            Err(Error::Schema { location, .. }) => assert_eq!(location, "$.annihilators[0][0].monomial"),
            other => panic!("{other:?}"),
        }
        let bad = f.to_json().replacen("\"y1\"", "\"z1\"", 1);
        assert!(matches!(DistributionFile::parse(&bad), Err(Error::Schema { .. })));
        assert!(matches!(DistributionFile::parse("{"), Err(Error::Schema { .. })));
    }

    #[test]
    fn stage_names() {
        assert_eq!("all".parse::<Stages>().unwrap(), Stages::ALL);
        let s: Stages = "adaptation,reduction".parse().unwrap();
        assert!(s.reduction && !s.conformal);
        assert!("bogus".parse::<Stages>().is_err());
    }

    #[test]
    fn flat_and_perturbed_reports() {
        let req = AnalysisRequest::new(PolynomialAnnihilators::flat(), vec![[0.0; 6]]);
        let rep = analyze(&req);
        let p = &rep.points[0];
        assert!(p.error.is_none(), "{:?}", p.error);
        assert_eq!((p.s_flat, p.weyl_flat, p.agreement), (Some(true), Some(true), Some(true)));
        assert_eq!(p.spinor_kernel_dimension, Some(4));

        let req = AnalysisRequest::new(PolynomialAnnihilators::perturbed(0.1, 1), vec![[0.0; 6]]);
        let rep = analyze(&req);
        let p = &rep.points[0];
        assert_eq!((p.s_flat, p.weyl_flat, p.agreement), (Some(false), Some(false), Some(true)));
        assert!(p.spinor_kernel_dimension.unwrap() >= 1);
        assert!(p.piece27_mismatch.unwrap() < 1e-6);
        assert!(rep.all_ok());
    }

    #[test]
    fn low_order_is_reported_per_point() {
        let mut req = AnalysisRequest::new(PolynomialAnnihilators::flat(), vec![[0.0; 6], [0.1; 6]]);
        req.order = 3;
        let rep = analyze(&req);
        for p in &rep.points {
            assert!(p.error.as_deref().unwrap().contains("insufficient order"), "{:?}", p.error);
        }
        assert!(!rep.all_ok());
        req.order = 4;
        req.stages = "reduction,conformal".parse().unwrap();
        assert!(analyze(&req).all_ok());
    }
}
