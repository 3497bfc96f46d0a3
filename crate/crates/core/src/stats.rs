//! Two-sided t-tests and pre/during phase summaries.
//!
//! The Student-t tail comes from the regularized incomplete beta function,
//! evaluated by a modified-Lentz continued fraction:
//! `P(|T| > t) = I_{ν/(ν+t²)}(ν/2, 1/2)`.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = f64::from(m);
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)` for `a, b > 0`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

/// Two-sided tail probability `P(|T| ≥ |t|)` of Student's t with `df` degrees.
pub fn student_t_two_sided(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / (df + t * t), 0.5 * df, 0.5)
}

pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_sided(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Welch's unequal-variance t-test with Welch–Satterthwaite degrees of freedom.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(Error::SampleTooSmall(s.len()));
        }
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        if ma == mb {
            return Ok(TTest {
                t: 0.0,
                df: na + nb - 2.0,
                p: 1.0,
            });
        }
        return Err(Error::Validation("both samples are constant with different means".into()));
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(TTest {
        t,
        df,
        p: student_t_two_sided(t, df),
    })
}

/// Paired t-test on `b − a`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::Structural(format!("paired samples of length {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::SampleTooSmall(a.len()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let (md, vd) = mean_var(&diffs);
    let n = diffs.len() as f64;
    if vd == 0.0 {
        if md == 0.0 {
            return Ok(TTest {
                t: 0.0,
                df: n - 1.0,
                p: 1.0,
            });
        }
        return Err(Error::Validation("paired differences are constant and non-zero".into()));
    }
    // Sign follows a − b as in the Welch test.
    let t = -md / (vd / n).sqrt();
    Ok(TTest {
        t,
        df: n - 1.0,
        p: student_t_two_sided(t, n - 1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TestKind {
    #[default]
    Welch,
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    fn of(xs: &[f64]) -> Spread {
        Spread {
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicSummary {
    pub name: String,
    pub pre: Spread,
    pub during: Spread,
    /// `during.mean − pre.mean`.
    pub difference: f64,
    /// `None` when fewer than two units have a defined value.
    pub test: Option<TTest>,
}

impl CharacteristicSummary {
    pub fn significant(&self) -> bool {
        self.test.is_some_and(|t| t.p < SIGNIFICANCE_LEVEL)
    }
}

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSummary {
    pub units: usize,
    pub rows: Vec<CharacteristicSummary>,
}

/// Per-unit (state) characteristic values for one phase.
pub type PhaseMetrics = BTreeMap<String, BTreeMap<String, f64>>;

/// Compares two phases unit by unit. NaN values mark undefined metrics and
/// are left out of that characteristic.
pub fn summarize_phases(pre: &PhaseMetrics, during: &PhaseMetrics, kind: TestKind) -> Result<PhaseSummary> {
    let pre_units: BTreeSet<&String> = pre.keys().collect();
    let during_units: BTreeSet<&String> = during.keys().collect();
    if pre_units != during_units {
        return Err(Error::Structural("pre and during phases cover different units".into()));
    }
    if pre.len() < 2 {
        return Err(Error::SampleTooSmall(pre.len()));
    }
    let names: BTreeSet<&String> = pre.values().chain(during.values()).flat_map(|m| m.keys()).collect();
    let mut rows = Vec::with_capacity(names.len());
    for name in names {
        let mut pairs = Vec::new();
        for unit in &pre_units {
            let get = |phase: &PhaseMetrics| -> Result<f64> {
                phase[*unit]
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::Structural(format!("unit {unit} lacks characteristic {name}")))
            };
            let (x, y) = (get(pre)?, get(during)?);
            if !x.is_nan() && !y.is_nan() {
                pairs.push((x, y));
            }
        }
        if pairs.is_empty() {
            continue;
        }
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let (pre_s, during_s) = (Spread::of(&xs), Spread::of(&ys));
        let test = if pairs.len() < 2 {
            None
        } else {
            let res = match kind {
                TestKind::Welch => welch_t_test(&ys, &xs),
                TestKind::Paired => paired_t_test(&xs, &ys),
            };
            match res {
                Ok(t) => Some(t),
                Err(Error::Validation(_)) => Some(TTest {
                    t: f64::INFINITY.copysign(during_s.mean - pre_s.mean),
                    df: f64::NAN,
                    p: 0.0,
                }),
                Err(e) => return Err(e),
            }
        };
        rows.push(CharacteristicSummary {
            name: name.clone(),
            pre: pre_s,
            during: during_s,
            difference: during_s.mean - pre_s.mean,
            test,
        });
    }
    Ok(PhaseSummary { units: pre.len(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-14);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, 1) = x; I_x(a, 1) = x^a; I_x(1, b) = 1 − (1 − x)^b.
        for &x in &[0.1, 0.37, 0.5, 0.93] {
            assert_abs_diff_eq!(regularized_incomplete_beta(x, 1.0, 1.0), x, epsilon = 1e-14);
            assert_abs_diff_eq!(regularized_incomplete_beta(x, 3.5, 1.0), x.powf(3.5), epsilon = 1e-14);
            assert_abs_diff_eq!(
                regularized_incomplete_beta(x, 1.0, 2.5),
                1.0 - (1.0 - x).powf(2.5),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn t_cdf_closed_forms() {
        // ν = 1 is Cauchy; ν = 2 has F(t) = 1/2 + t / (2 sqrt(2 + t²)).
        for &t in &[-3.0, -0.4, 0.0, 1.1, 7.0] {
            let cauchy = 0.5 + f64::atan(t) / std::f64::consts::PI;
            assert_abs_diff_eq!(student_t_cdf(t, 1.0), cauchy, epsilon = 1e-13);
            let two = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
            assert_abs_diff_eq!(student_t_cdf(t, 2.0), two, epsilon = 1e-13);
        }
    }

    #[test]
    fn identical_samples() {
        let a = [1.0, 4.0, 2.5, 7.0];
        let r = welch_t_test(&a, &a).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
        let c = [3.0, 3.0, 3.0];
        let r = welch_t_test(&c, &c).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
        assert!(welch_t_test(&c, &[4.0, 4.0]).is_err());
    }

    #[test]
    fn small_samples_rejected() {
        assert!(matches!(welch_t_test(&[1.0], &[1.0, 2.0]), Err(Error::SampleTooSmall(1))));
        assert!(matches!(paired_t_test(&[1.0], &[2.0]), Err(Error::SampleTooSmall(1))));
    }

    #[test]
    fn welch_reference_case() {
        let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0], &[2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_abs_diff_eq!(r.t, -1.0 / (5.0f64 / 6.0).sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(r.t, -1.0954, epsilon = 1e-4);
        assert_abs_diff_eq!(r.df, 6.0, epsilon = 1e-12);
        assert!(r.p > 0.3 && r.p < 0.33);
    }

    #[test]
    fn separation_drives_p_to_zero() {
        let a = [1.0, 2.0, 3.0, 4.0, 2.5];
        let mut last = 1.0;
        for shift in [1.0, 10.0, 100.0] {
            let b: Vec<f64> = a.iter().map(|x| x + shift).collect();
            let p = welch_t_test(&a, &b).unwrap().p;
            assert!(p < last);
            last = p;
        }
        assert!(last < 1e-8);
    }

    #[test]
    fn paired_matches_one_sample_on_differences() {
        let pre = [1.0, 2.0, 4.0, 3.0];
        let during = [1.5, 2.2, 4.9, 3.1];
        let r = paired_t_test(&pre, &during).unwrap();
        assert_eq!(r.df, 3.0);
        assert!(r.t < 0.0);
        assert!(r.p > 0.0 && r.p < 1.0);
    }

    fn phase(rows: &[(&str, f64, f64)]) -> PhaseMetrics {
        rows.iter()
            .map(|&(unit, sigma, density)| {
                let m: BTreeMap<String, f64> =
                    [("sigma".to_string(), sigma), ("density".to_string(), density)].into_iter().collect();
                (unit.to_string(), m)
            })
            .collect()
    }

    #[test]
    fn identical_phases_summarize_to_zero() {
        let p = phase(&[("NY", 0.03, 0.5), ("LA", 0.02, 0.4), ("CA", 0.05, 0.45)]);
        let s = summarize_phases(&p, &p, TestKind::Welch).unwrap();
        assert_eq!(s.rows.len(), 2);
        for row in &s.rows {
            assert_eq!(row.difference, 0.0);
            assert_eq!(row.test.unwrap().p, 1.0);
            assert!(!row.significant());
        }
    }

    #[test]
    fn two_state_hand_means() {
        let pre = phase(&[("NY", 0.02, 0.5), ("LA", 0.04, 0.3)]);
        let during = phase(&[("NY", 0.03, 0.6), ("LA", 0.07, 0.5)]);
        let s = summarize_phases(&pre, &during, TestKind::Welch).unwrap();
        let sigma = s.rows.iter().find(|r| r.name == "sigma").unwrap();
        assert_abs_diff_eq!(sigma.pre.mean, 0.03, epsilon = 1e-15);
        assert_abs_diff_eq!(sigma.during.mean, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(sigma.difference, 0.02, epsilon = 1e-15);
        assert_eq!((sigma.pre.min, sigma.pre.max), (0.02, 0.04));
        let density = s.rows.iter().find(|r| r.name == "density").unwrap();
        assert_abs_diff_eq!(density.difference, 0.15, epsilon = 1e-15);
    }

    #[test]
    fn phase_errors() {
        let one = phase(&[("NY", 0.02, 0.5)]);
        assert!(matches!(summarize_phases(&one, &one, TestKind::Welch), Err(Error::SampleTooSmall(1))));
        let a = phase(&[("NY", 0.02, 0.5), ("LA", 0.02, 0.5)]);
        let b = phase(&[("NY", 0.02, 0.5), ("CA", 0.02, 0.5)]);
        assert!(matches!(summarize_phases(&a, &b, TestKind::Welch), Err(Error::Structural(_))));
    }

    fn sample() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-50.0f64..50.0, 2..12)
    }

    proptest! {
        #[test]
        fn welch_antisymmetric(a in sample(), b in sample()) {
            let (ab, ba) = (welch_t_test(&a, &b).unwrap(), welch_t_test(&b, &a).unwrap());
            prop_assert_eq!(ab.t, -ba.t);
            prop_assert_eq!(ab.p, ba.p);
            prop_assert!(ab.p > 0.0 && ab.p <= 1.0);
        }

        #[test]
        fn welch_shift_invariant(a in sample(), b in sample(), c in -100.0f64..100.0) {
            let sa: Vec<f64> = a.iter().map(|x| x + c).collect();
            let sb: Vec<f64> = b.iter().map(|x| x + c).collect();
            let (p0, p1) = (welch_t_test(&a, &b).unwrap().p, welch_t_test(&sa, &sb).unwrap().p);
            prop_assert!((p0 - p1).abs() < 1e-9);
        }

        #[test]
        fn summary_ignores_unit_naming_order(vals in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..8)) {
            let rows: Vec<(String, f64, f64)> = vals.iter().enumerate().map(|(k, v)| (format!("S{k}"), v.0, v.1)).collect();
            let renamed: Vec<(String, f64, f64)> = vals.iter().enumerate().map(|(k, v)| (format!("S{}", vals.len() - k), v.0, v.1)).collect();
            let build = |rows: &[(String, f64, f64)]| -> PhaseMetrics {
                rows.iter().map(|(u, s, d)| (u.clone(), [("sigma".to_string(), *s), ("density".to_string(), *d)].into_iter().collect())).collect()
            };
            let (a, b) = (build(&rows), build(&renamed));
            let (sa, sb) = (summarize_phases(&a, &a, TestKind::Welch).unwrap(), summarize_phases(&b, &b, TestKind::Welch).unwrap());
            for (x, y) in sa.rows.iter().zip(&sb.rows) {
                prop_assert!((x.pre.mean - y.pre.mean).abs() < 1e-12);
            }
        }
    }
}
