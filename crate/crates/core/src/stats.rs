//! Institution features and ordinary least squares with classical inference.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::corpus::{InstitutionRecord, Region};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("institution {0:?} has zero enrollment")]
    ZeroEnrollment(String),
    #[error("no response rate for institution {0:?}")]
    MissingRate(String),
    #[error("{n} observations for {p} parameters leaves no residual degrees of freedom")]
    TooFewObservations { n: usize, p: usize },
    #[error("design is rank deficient: column {0:?} depends on earlier columns")]
    RankDeficient(String),
    #[error("design shape: {0}")]
    Shape(String),
}

/// Report names of the design columns, in column order.
pub const FEATURE_NAMES: [&str; 8] = [
    "M/F Ratio",
    "Enrollment",
    "Private",
    "Northeast",
    "West",
    "South",
    "Normalized cases count",
    "constant",
];

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub fn normalize_rate(count: u64, enrollment: u64) -> Option<f64> {
    (enrollment > 0).then(|| count as f64 / enrollment as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub response: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(feature_names: Vec<String>, rows: Vec<Vec<f64>>, response: Vec<f64>) -> Result<Self, StatsError> {
        if rows.len() != response.len() {
            return Err(StatsError::Shape(format!(
                "{} rows but {} responses",
                rows.len(),
                response.len()
            )));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != feature_names.len()) {
            return Err(StatsError::Shape(format!(
                "row {i} has {} values for {} features",
                rows[i].len(),
                feature_names.len()
            )));
        }
        Ok(DesignMatrix {
            feature_names,
            rows,
            response,
        })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn p(&self) -> usize {
        self.feature_names.len()
    }

    fn matrix(&self, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), cols, |i, j| self.rows[i][j])
    }
}

/// One row per institution in input order, with Midwest as the omitted
/// region and a trailing intercept column.
pub fn build_design(
    institutions: &[InstitutionRecord],
    rates: &BTreeMap<String, f64>,
) -> Result<DesignMatrix, StatsError> {
    let mut rows = Vec::with_capacity(institutions.len());
    let mut response = Vec::with_capacity(institutions.len());
    for inst in institutions {
        let rate = *rates
            .get(&inst.institution_id)
            .ok_or_else(|| StatsError::MissingRate(inst.institution_id.clone()))?;
        let cases = normalize_rate(inst.reported_cases, inst.enrollment)
            .ok_or_else(|| StatsError::ZeroEnrollment(inst.institution_id.clone()))?;
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        rows.push(vec![
            inst.mf_ratio,
            inst.enrollment as f64,
            flag(inst.is_private),
            flag(inst.region == Region::Northeast),
            flag(inst.region == Region::West),
            flag(inst.region == Region::South),
            cases,
            1.0,
        ]);
        response.push(rate);
    }
    DesignMatrix::new(FEATURE_NAMES.iter().map(|s| s.to_string()).collect(), rows, response)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub feature: String,
    pub coefficient: f64,
    pub std_err: f64,
    pub t_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub coefficients: Vec<Coefficient>,
    pub n: usize,
    pub dof: usize,
    pub rss: f64,
    /// Centered R²; NaN when the response is constant.
    pub r_squared: f64,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
}

impl RegressionResult {
    pub fn p(&self) -> usize {
        self.coefficients.len()
    }
}

fn rank_ok(x: &DMatrix<f64>) -> bool {
    let sv = x.clone().svd(false, false).singular_values;
    let max = sv.max();
    max > 0.0 && sv.min() >= RANK_TOLERANCE * max
}

/// Least squares through a QR factorization of the design.
///
/// Standard errors use `sigma^2 = RSS / (n - p)` and p-values the two-sided
/// Student-t tail with `n - p` degrees of freedom.
pub fn ols_fit(design: &DesignMatrix) -> Result<RegressionResult, StatsError> {
    let (n, p) = (design.n(), design.p());
    if p == 0 {
        return Err(StatsError::Shape("no features".into()));
    }
    if n <= p {
        return Err(StatsError::TooFewObservations { n, p });
    }
    let x = design.matrix(p);
    if !rank_ok(&x) {
        let bad = (1..=p)
            .find(|&j| !rank_ok(&design.matrix(j)))
            .expect("full design is deficient");
        return Err(StatsError::RankDeficient(design.feature_names[bad - 1].clone()));
    }
    let y = DVector::from_column_slice(&design.response);

    let qr = x.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * &y;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| StatsError::RankDeficient(design.feature_names[p - 1].clone()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| StatsError::RankDeficient(design.feature_names[p - 1].clone()))?;

    let fitted = &x * &beta;
    let residuals = &y - &fitted;
    let rss = residuals.norm_squared();
    let dof = n - p;
    let sigma2 = rss / dof as f64;
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - rss / tss } else { f64::NAN };

    let coefficients = (0..p)
        .map(|j| {
            // (X'X)^-1 = R^-1 R^-T, so its diagonal is the squared row norms of R^-1.
            let var = sigma2 * r_inv.row(j).norm_squared();
            let std_err = var.sqrt();
            let c = beta[j];
            let t_stat = if std_err > 0.0 {
                c / std_err
            } else if c == 0.0 {
                0.0
            } else {
                c.signum() * f64::INFINITY
            };
            Coefficient {
                feature: design.feature_names[j].clone(),
                coefficient: c,
                std_err,
                t_stat,
                p_value: t_pvalue(t_stat, dof as u64),
            }
        })
        .collect();

    Ok(RegressionResult {
        coefficients,
        n,
        dof,
        rss,
        r_squared,
        fitted: fitted.iter().copied().collect(),
        residuals: residuals.iter().copied().collect(),
    })
}

/// Two-sided tail probability of Student's t, `I_{v/(v+t^2)}(v/2, 1/2)`.
pub fn t_pvalue(t: f64, dof: u64) -> f64 {
    assert!(dof >= 1, "t distribution needs at least one degree of freedom");
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let v = dof as f64;
    beta_reg(v / 2.0, 0.5, v / (v + t * t)).clamp(0.0, 1.0)
}

/// Scientific notation with a signed two-digit exponent, `9.098e+01`.
pub fn sci(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.digits$e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub const REGRESSION_HEADER: &str = "feature,coefficient,std_err,t_stat,p_value";

/// CSV rows in design order followed by a `# n=.. p=.. r_squared=..` footer.
pub fn write_regression_report<W: Write>(result: &RegressionResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{REGRESSION_HEADER}")?;
    for c in &result.coefficients {
        writeln!(
            out,
            "{},{},{},{:.3},{}",
            c.feature,
            sci(c.coefficient, 3),
            sci(c.std_err, 3),
            c.t_stat,
            sci(c.p_value, 1)
        )?;
    }
    writeln!(out, "# n={} p={} r_squared={:.4}", result.n, result.p(), result.r_squared)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(names: &[&str], rows: Vec<Vec<f64>>, y: Vec<f64>) -> DesignMatrix {
        DesignMatrix::new(names.iter().map(|s| s.to_string()).collect(), rows, y).unwrap()
    }

    #[test]
    fn rates() {
        assert_eq!(normalize_rate(0, 5000), Some(0.0));
        assert_eq!(normalize_rate(10, 5000), Some(0.002));
        assert_eq!(normalize_rate(1, 0), None);
    }

    #[test]
    fn exact_line() {
        let d = design(&["x", "constant"], vec![vec![1.0, 1.0], vec![2.0, 1.0], vec![3.0, 1.0]], vec![3.0, 5.0, 7.0]);
        let fit = ols_fit(&d).unwrap();
        assert!((fit.coefficients[0].coefficient - 2.0).abs() < 1e-12);
        assert!((fit.coefficients[1].coefficient - 1.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
        assert!((0.0..=1.0).contains(&fit.coefficients[0].p_value));
    }

    #[test]
    fn size_and_rank_errors() {
        let d = design(&["x", "constant"], vec![vec![1.0, 1.0], vec![2.0, 1.0]], vec![1.0, 2.0]);
        assert!(matches!(ols_fit(&d), Err(StatsError::TooFewObservations { n: 2, p: 2 })));

        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64, 1.0]).collect();
        let d = design(&["x", "twice x", "constant"], rows, (0..6).map(|i| i as f64).collect());
        match ols_fit(&d) {
            Err(StatsError::RankDeficient(col)) => assert_eq!(col, "twice x"),
            other => panic!("{other:?}"),
        }
        assert!(DesignMatrix::new(vec!["a".into()], vec![vec![1.0, 2.0]], vec![1.0]).is_err());
    }

    #[test]
    fn pvalue_reference_points() {
        assert_eq!(t_pvalue(0.0, 5), 1.0);
        assert!((t_pvalue(2.0, 10) - 0.0734).abs() < 5e-4);
        assert_eq!(t_pvalue(f64::INFINITY, 3), 0.0);
        assert!(t_pvalue(40.0, 30) < 1e-20);
        // dof 1 is Cauchy: p = 1 - 2 atan(t) / pi
        let cauchy = 1.0 - 2.0 * 1.5f64.atan() / std::f64::consts::PI;
        assert!((t_pvalue(1.5, 1) - cauchy).abs() < 1e-12);
    }

    #[test]
    fn design_columns() {
        let inst = |id: &str, region, private| InstitutionRecord {
            institution_id: id.into(),
            enrollment: 5000,
            mf_ratio: 0.9,
            is_private: private,
            region,
            reported_cases: 10,
        };
        let insts = [inst("a", Region::Midwest, true), inst("b", Region::Northeast, false)];
        let rates: BTreeMap<String, f64> = [("a".to_string(), 0.1), ("b".to_string(), 0.2)].into();
        let d = build_design(&insts, &rates).unwrap();
        assert_eq!(d.feature_names, FEATURE_NAMES);
        assert_eq!(d.rows[0], [0.9, 5000.0, 1.0, 0.0, 0.0, 0.0, 0.002, 1.0]);
        assert_eq!(d.rows[1][2..6], [0.0, 1.0, 0.0, 0.0]);
        let missing: BTreeMap<String, f64> = [("a".to_string(), 0.1)].into();
        assert!(matches!(build_design(&insts, &missing), Err(StatsError::MissingRate(id)) if id == "b"));
    }

    #[test]
    fn scientific_format() {
        assert_eq!(sci(90.98, 3), "9.098e+01");
        assert_eq!(sci(1.075e-6, 3), "1.075e-06");
        assert_eq!(sci(0.0, 1), "0.0e+00");
        assert_eq!(sci(-5.7e-13, 1), "-5.7e-13");
    }

    #[test]
    fn report_layout() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 1.0]).collect();
        let d = design(&["x", "constant"], rows, vec![0.1, 1.2, 1.9, 3.2, 3.9]);
        let mut buf = Vec::new();
        write_regression_report(&ols_fit(&d).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REGRESSION_HEADER);
        assert!(lines[1].starts_with("x,"));
        assert!(lines[3].starts_with("# n=5 p=2 r_squared="));
    }
}
