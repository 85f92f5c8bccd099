use serde::{Deserialize, Serialize};

use crate::dsp::BeatFiducials;
use crate::error::{domain, Result};
use crate::ops::OpCounters;

/// Trapezoidal membership: 0 outside `[a, d]`, 1 on `[b, c]`, linear between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trapezoid {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Trapezoid {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Trapezoid { a, b, c, d }
    }

    pub fn membership(&self, x: f64) -> f64 {
        if x < self.a || x > self.d {
            0.0
        } else if x < self.b {
            (x - self.a) / (self.b - self.a)
        } else if x <= self.c {
            1.0
        } else {
            (self.d - x) / (self.d - self.c)
        }
    }
}

/// Interval features of one beat, normalized by the reference RR interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RpFeature {
    /// Preceding RR over the running median RR.
    RrRatio,
    /// (R - P) / RR.
    Pr,
    /// (S - Q) / RR.
    Qrs,
    /// (T - R) / RR.
    Rt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeatClass {
    Normal,
    Abnormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub antecedents: Vec<(RpFeature, Trapezoid)>,
    pub class: BeatClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<FuzzyRule>,
    /// Number of preceding RR intervals in the running median.
    pub median_span: usize,
}

impl Default for RuleSet {
    /// Flags beats whose RR deviates strongly from the running median.
    fn default() -> Self {
        let rr = |t: Trapezoid, class| FuzzyRule { antecedents: vec![(RpFeature::RrRatio, t)], class };
        RuleSet {
            rules: vec![
                rr(Trapezoid::new(0.8, 0.9, 1.1, 1.2), BeatClass::Normal),
                rr(Trapezoid::new(1.3, 1.5, 10.0, 10.0), BeatClass::Abnormal),
                rr(Trapezoid::new(0.0, 0.0, 0.6, 0.8), BeatClass::Abnormal),
            ],
            median_span: 8,
        }
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Features of beat `i` in a sequence of delineated beats.
pub fn rp_features(beats: &[BeatFiducials], i: usize, span: usize) -> Result<Vec<(RpFeature, f64)>> {
    let Some(b) = beats.get(i) else {
        return domain(format!("no R peak for beat {i} of {}", beats.len()));
    };
    let rr: Vec<f64> = beats.windows(2).map(|w| w[1].r as f64 - w[0].r as f64).collect();
    let prev = if i > 0 { Some(rr[i - 1]) } else { None };
    let reference = if i >= 2 {
        let lo = (i - 1).saturating_sub(span.max(1));
        let mut h = rr[lo..i - 1].to_vec();
        median(&mut h)
    } else {
        prev.or_else(|| rr.first().copied()).unwrap_or(0.0)
    };
    let mut out = Vec::new();
    if let Some(p) = prev {
        out.push((RpFeature::RrRatio, p / reference));
    }
    if reference > 0.0 {
        let r = b.r as f64;
        if let Some(p) = b.p {
            out.push((RpFeature::Pr, (r - p as f64) / reference));
        }
        if let (Some(q), Some(s)) = (b.q, b.s) {
            out.push((RpFeature::Qrs, (s as f64 - q as f64) / reference));
        }
        if let Some(t) = b.t {
            out.push((RpFeature::Rt, (t as f64 - r) / reference));
        }
    }
    if out.is_empty() {
        return domain(format!("beat {i} has no interval to classify"));
    }
    Ok(out)
}

/// Max-min inference over `rules`; `Normal` when no rule fires or the
/// strongest normal and abnormal rules tie.
pub fn rp_classify(beats: &[BeatFiducials], i: usize, rules: &RuleSet, ops: &mut OpCounters) -> Result<BeatClass> {
    let feats = rp_features(beats, i, rules.median_span)?;
    let (mut normal, mut abnormal) = (0.0f64, 0.0f64);
    for rule in &rules.rules {
        let mut strength = 1.0f64;
        for (f, t) in &rule.antecedents {
            let mu = feats.iter().find(|(g, _)| g == f).map_or(0.0, |(_, v)| t.membership(*v));
            strength = strength.min(mu);
            ops.branch(5);
        }
        if rule.antecedents.is_empty() {
            strength = 0.0;
        }
        match rule.class {
            BeatClass::Normal => normal = normal.max(strength),
            BeatClass::Abnormal => abnormal = abnormal.max(strength),
        }
    }
    ops.branch(1);
    Ok(if abnormal > normal { BeatClass::Abnormal } else { BeatClass::Normal })
}
