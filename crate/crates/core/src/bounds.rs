//! Closed-form regret bounds and validators for their hypotheses.
//!
//! All logarithms are natural. The universal constant `c` of the upper
//! bounds is a query parameter defaulting to 1.

use std::fmt;

use crate::error::{argument, Error, Result};

/// c in the small-loss membership argument.
pub const SMALL_LOSS_C: f64 = 64.0 / 9.0;

/// c₁ = (4/9)²(3√5 + 1)² in the small-variation membership argument.
pub fn small_variation_c1() -> f64 {
    let a = 3.0 * 5f64.sqrt() + 1.0;
    (4.0f64 / 9.0).powi(2) * a * a
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    Eq1Upper,
    Eq2Upper,
    Eq3FirstOrderUpper,
    Eq7HazanKaleUpper,
    Thm1Lower,
    Thm2Lower,
    Thm4Lower,
    Thm6Lower,
    Cor7Lower,
    Cor8Lower,
    Lemma5Lower,
}

impl BoundKind {
    pub const ALL: [BoundKind; 11] = [
        BoundKind::Eq1Upper,
        BoundKind::Eq2Upper,
        BoundKind::Eq3FirstOrderUpper,
        BoundKind::Eq7HazanKaleUpper,
        BoundKind::Thm1Lower,
        BoundKind::Thm2Lower,
        BoundKind::Thm4Lower,
        BoundKind::Thm6Lower,
        BoundKind::Cor7Lower,
        BoundKind::Cor8Lower,
        BoundKind::Lemma5Lower,
    ];

    /// Stable identifier used in configs and CSV output.
    pub fn id(self) -> &'static str {
        match self {
            BoundKind::Eq1Upper => "eq1_upper",
            BoundKind::Eq2Upper => "eq2_upper",
            BoundKind::Eq3FirstOrderUpper => "eq3_first_order_upper",
            BoundKind::Eq7HazanKaleUpper => "eq7_hazan_kale_upper",
            BoundKind::Thm1Lower => "thm1_lower",
            BoundKind::Thm2Lower => "thm2_lower",
            BoundKind::Thm4Lower => "thm4_lower",
            BoundKind::Thm6Lower => "thm6_lower",
            BoundKind::Cor7Lower => "cor7_lower",
            BoundKind::Cor8Lower => "cor8_lower",
            BoundKind::Lemma5Lower => "lemma5_lower",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == s)
    }

    pub fn is_lower(self) -> bool {
        !matches!(
            self,
            BoundKind::Eq1Upper | BoundKind::Eq2Upper | BoundKind::Eq3FirstOrderUpper | BoundKind::Eq7HazanKaleUpper
        )
    }

    /// Parameter names the bound reads.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            BoundKind::Eq1Upper => &["K", "T", "delta", "c"],
            BoundKind::Eq2Upper => &["K", "T", "delta", "c"],
            BoundKind::Eq3FirstOrderUpper => &["K", "T", "L_star", "c"],
            BoundKind::Eq7HazanKaleUpper => &["K", "T", "Q_T", "c"],
            BoundKind::Thm1Lower => &["K", "T", "delta"],
            BoundKind::Thm2Lower => &["K", "T", "delta", "C"],
            BoundKind::Thm4Lower | BoundKind::Thm6Lower => &["K", "T", "alpha"],
            BoundKind::Cor7Lower => &["K", "T", "rho"],
            BoundKind::Cor8Lower => &["K", "T"],
            BoundKind::Lemma5Lower => &["K", "T", "alpha"],
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Parameters of a bound; only those named by [`BoundKind::parameters`]
/// are read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub arms: Option<usize>,
    pub rounds: Option<usize>,
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    /// Constant C assumed in a mean-regret premise E[R_T] ≤ C√((K−1)T).
    pub regret_constant: Option<f64>,
    pub rho: Option<f64>,
    pub l_star: Option<f64>,
    pub q_t: Option<f64>,
    /// Universal constant c of the upper bounds.
    pub c: f64,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            arms: None,
            rounds: None,
            delta: None,
            alpha: None,
            regret_constant: None,
            rho: None,
            l_star: None,
            q_t: None,
            c: 1.0,
        }
    }
}

impl BoundParams {
    pub fn kt(arms: usize, rounds: usize) -> Self {
        Self { arms: Some(arms), rounds: Some(rounds), ..Self::default() }
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn regret_constant(mut self, c: f64) -> Self {
        self.regret_constant = Some(c);
        self
    }

    pub fn rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }

    pub fn l_star(mut self, l: f64) -> Self {
        self.l_star = Some(l);
        self
    }

    pub fn q_t(mut self, q: f64) -> Self {
        self.q_t = Some(q);
        self
    }

    pub fn c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    /// `name=value` pairs of the parameters `kind` reads, in its order.
    pub fn describe(&self, kind: BoundKind) -> String {
        kind.parameters()
            .iter()
            .map(|&name| {
                let v = match name {
                    "K" => self.arms.map(|v| v.to_string()),
                    "T" => self.rounds.map(|v| v.to_string()),
                    "delta" => self.delta.map(|v| v.to_string()),
                    "alpha" => self.alpha.map(|v| v.to_string()),
                    "C" => self.regret_constant.map(|v| v.to_string()),
                    "rho" => self.rho.map(|v| v.to_string()),
                    "L_star" => self.l_star.map(|v| v.to_string()),
                    "Q_T" => self.q_t.map(|v| v.to_string()),
                    "c" => Some(self.c.to_string()),
                    _ => None,
                };
                format!("{name}={}", v.unwrap_or_else(|| "?".into()))
            })
            .collect::<Vec<_>>()
            .join(";")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery {
    pub kind: BoundKind,
    pub params: BoundParams,
}

impl BoundQuery {
    pub fn new(kind: BoundKind, params: BoundParams) -> Self {
        Self { kind, params }
    }
}

/// One inequality of a theorem's statement, evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub label: String,
    pub holds: bool,
}

/// Outcome of checking every hypothesis of a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub bound: BoundKind,
    pub conditions: Vec<Condition>,
    /// The admissible parameter interval is empty at these K, T.
    pub vacuous: bool,
}

impl Verdict {
    pub fn ok(&self) -> bool {
        !self.vacuous && self.conditions.iter().all(|c| c.holds)
    }

    pub fn violated(&self) -> Vec<String> {
        let mut out: Vec<String> = self.conditions.iter().filter(|c| !c.holds).map(|c| c.label.clone()).collect();
        if self.vacuous {
            out.push("admissible interval is empty".into());
        }
        out
    }
}

struct Checker {
    conditions: Vec<Condition>,
}

impl Checker {
    fn new() -> Self {
        Self { conditions: Vec::new() }
    }

    fn check(&mut self, label: &str, holds: bool) {
        self.conditions.push(Condition { label: label.to_string(), holds });
    }

    /// Records a condition on a parameter that may be missing.
    fn need<T: Copy>(&mut self, label: &str, v: Option<T>, pred: impl FnOnce(T) -> bool) {
        self.check(label, v.is_some_and(pred));
    }
}

fn ln(x: f64) -> f64 {
    x.ln()
}

/// Evaluates every hypothesis of the bound individually.
pub fn validate_hypotheses(q: &BoundQuery) -> Verdict {
    let p = &q.params;
    let k = p.arms.map(|v| v as f64);
    let t = p.rounds.map(|v| v as f64);
    let mut c = Checker::new();
    let mut vacuous = false;
    c.need("K ≥ 2", p.arms, |k| k >= 2);
    c.need("T ≥ 1", p.rounds, |t| t >= 1);
    match q.kind {
        BoundKind::Eq1Upper | BoundKind::Eq2Upper => {
            c.need("δ ∈ (0, 1)", p.delta, |d| d > 0.0 && d < 1.0);
            c.check("c > 0", p.c > 0.0);
        }
        BoundKind::Eq3FirstOrderUpper => {
            c.need("0 ≤ L*_T ≤ T", p.l_star, |l| l >= 0.0 && t.is_some_and(|t| l <= t));
            c.check("c > 0", p.c > 0.0);
        }
        BoundKind::Eq7HazanKaleUpper => {
            c.check("T ≥ 2", t.is_some_and(|t| t >= 2.0));
            c.need("0 ≤ Q_T ≤ TK/4", p.q_t, |qt| {
                qt >= 0.0 && matches!((t, k), (Some(t), Some(k)) if qt <= t * k / 4.0)
            });
            c.check("c > 0", p.c > 0.0);
        }
        BoundKind::Thm1Lower => {
            c.need("δ ∈ (0, 1/4)", p.delta, |d| d > 0.0 && d < 0.25);
            c.check(
                "T ≥ 32(K−1) log(2/δ)",
                matches!((k, t, p.delta), (Some(k), Some(t), Some(d)) if t >= 32.0 * (k - 1.0) * ln(2.0 / d)),
            );
        }
        BoundKind::Thm2Lower => {
            c.need("C > 0", p.regret_constant, |cc| cc > 0.0);
            c.need("δ ∈ (0, 1/4)", p.delta, |d| d > 0.0 && d < 0.25);
            c.check(
                "√((K−1)/T) log(1/(4δ)) ≤ C",
                matches!((k, t, p.delta, p.regret_constant), (Some(k), Some(t), Some(d), Some(cc))
                    if ((k - 1.0) / t).sqrt() * ln(1.0 / (4.0 * d)) <= cc),
            );
            c.check(
                "T ≥ 32 log(2/δ)",
                matches!((t, p.delta), (Some(t), Some(d)) if t >= 32.0 * ln(2.0 / d)),
            );
        }
        BoundKind::Thm4Lower => {
            c.check("T ≥ K ∨ 118", matches!((k, t), (Some(k), Some(t)) if t >= k.max(118.0)));
            if let (Some(k), Some(t)) = (k, t) {
                let lo = (SMALL_LOSS_C * ln(32.0 * t)).max(k / 2.0) / t;
                vacuous = lo > 0.5;
                c.need("α ≥ (c log(32T) ∨ (K/2))/T", p.alpha, |a| a >= lo);
            } else {
                c.check("α ≥ (c log(32T) ∨ (K/2))/T", false);
            }
            c.need("α ≤ 1/2", p.alpha, |a| a <= 0.5);
        }
        BoundKind::Thm6Lower => {
            c.check("T ≥ (32K) ∨ 601", matches!((k, t), (Some(k), Some(t)) if t >= (32.0 * k).max(601.0)));
            if let (Some(k), Some(t)) = (k, t) {
                let lo = (2.0 * small_variation_c1() * ln(t)).max(8.0 * k) / t;
                vacuous = lo > 0.25;
                c.need("α ≥ (2c₁ log(T) ∨ 8K)/T", p.alpha, |a| a >= lo);
            } else {
                c.check("α ≥ (2c₁ log(T) ∨ 8K)/T", false);
            }
            c.need("α ≤ 1/4", p.alpha, |a| a <= 0.25);
        }
        BoundKind::Cor7Lower | BoundKind::Cor8Lower => {
            c.check(
                "T ≥ 32(K−1) log(14)",
                matches!((k, t), (Some(k), Some(t)) if t >= 32.0 * (k - 1.0) * ln(14.0)),
            );
            if q.kind == BoundKind::Cor7Lower {
                c.check(
                    "ρ ≥ 0.22√((K−1)/T)",
                    matches!((k, t, p.rho), (Some(k), Some(t), Some(r)) if r >= 0.22 * ((k - 1.0) / t).sqrt()),
                );
            }
        }
        BoundKind::Lemma5Lower => {
            c.need("α ∈ (0, 1)", p.alpha, |a| a > 0.0 && a < 1.0);
            c.check(
                "T ≥ K/(4(1−α))",
                matches!((k, t, p.alpha), (Some(k), Some(t), Some(a)) if t >= k / (4.0 * (1.0 - a))),
            );
        }
    }
    Verdict { bound: q.kind, conditions: c.conditions, vacuous }
}

/// The closed-form value, without looking at the hypotheses. Missing
/// parameters are an argument error.
pub fn bound_value(q: &BoundQuery) -> Result<f64> {
    let p = &q.params;
    let need_f = |v: Option<f64>, name: &str| v.ok_or_else(|| argument(format!("{} needs `{name}`", q.kind)));
    let k = p.arms.ok_or_else(|| argument(format!("{} needs `K`", q.kind)))? as f64;
    let t = p.rounds.ok_or_else(|| argument(format!("{} needs `T`", q.kind)))? as f64;
    let v = match q.kind {
        BoundKind::Eq1Upper => p.c * (k * t * ln(k / need_f(p.delta, "delta")?)).sqrt(),
        BoundKind::Eq2Upper => {
            let d = need_f(p.delta, "delta")?;
            p.c * (k * t).sqrt() * (ln(k).sqrt() + ln(1.0 / d) / ln(k).sqrt())
        }
        BoundKind::Eq3FirstOrderUpper => {
            let l = need_f(p.l_star, "L_star")?;
            p.c * ((l * k * ln(k)).sqrt() + k * ln(k * t))
        }
        BoundKind::Eq7HazanKaleUpper => {
            let qt = need_f(p.q_t, "Q_T")?;
            let lt = ln(t);
            p.c * (k * k * (qt * lt).sqrt() + k.powf(1.5) * lt * lt + k.powf(2.5) * lt)
        }
        BoundKind::Thm1Lower => ((k - 1.0) * t * ln(1.0 / (4.0 * need_f(p.delta, "delta")?))).sqrt() / 27.0,
        BoundKind::Thm2Lower => {
            let d = need_f(p.delta, "delta")?;
            let cc = need_f(p.regret_constant, "C")?;
            ((k - 1.0) * t).sqrt() * ln(1.0 / (4.0 * d)) / (203.0 * cc)
        }
        BoundKind::Thm4Lower => (need_f(p.alpha, "alpha")? * t * k).sqrt() / 27.0,
        BoundKind::Thm6Lower => (need_f(p.alpha, "alpha")? * t * k).sqrt() / 25.0,
        BoundKind::Cor7Lower | BoundKind::Cor8Lower => (t * (k - 1.0)).sqrt() / 504.0,
        BoundKind::Lemma5Lower => {
            let a = need_f(p.alpha, "alpha")?;
            (a * (1.0 - a) * t * k).sqrt() / 8.0
        }
    };
    Ok(v)
}

/// Evaluated bound together with the hypothesis verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue {
    pub value: f64,
    pub verdict: Verdict,
}

/// Evaluates the bound if its hypotheses hold, otherwise reports which
/// failed. With `override_hypotheses` the value is returned regardless and
/// the verdict is attached.
pub fn evaluate_bound(q: &BoundQuery, override_hypotheses: bool) -> Result<BoundValue> {
    let verdict = validate_hypotheses(q);
    if !verdict.ok() && !override_hypotheses {
        return Err(Error::Hypotheses(verdict));
    }
    Ok(BoundValue { value: bound_value(q)?, verdict })
}
