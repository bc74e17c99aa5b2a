//! Text formats: data files, plan blocks and CSV output.

use std::fmt::Write as _;

use locband_core::calibration::{CalibrationPlan, Mode, PlanParams};
use locband_core::{BandwidthProfile, ConfidenceBand, Kernel};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FormatError {
    #[error("line {line}: cannot parse '{text}' as a number")]
    BadNumber { line: usize, text: String },
    #[error("line {line}: value {value} is not finite")]
    NonFinite { line: usize, value: f64 },
    #[error("line {line}: expected key=value, got '{text}'")]
    BadLine { line: usize, text: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{key}': invalid value '{value}'")]
    BadValue { key: String, value: String },
    #[error("missing key '{0}'")]
    MissingKey(String),
}

/// One finite real per line; blank lines and `#` comments are skipped.
/// Line numbers in errors are 1-based.
pub fn parse_data(text: &str) -> Result<Vec<f64>, FormatError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let v: f64 = s.parse().map_err(|_| FormatError::BadNumber { line: i + 1, text: s.to_string() })?;
        if !v.is_finite() {
            return Err(FormatError::NonFinite { line: i + 1, value: v });
        }
        out.push(v);
    }
    Ok(out)
}

/// `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, FormatError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let (k, v) = s.split_once('=').ok_or_else(|| FormatError::BadLine { line: i + 1, text: s.to_string() })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Theory => "theory",
        Mode::Practical => "practical",
    }
}

pub fn parse_mode(s: &str) -> Option<Mode> {
    match s {
        "theory" => Some(Mode::Theory),
        "practical" => Some(Mode::Practical),
        _ => None,
    }
}

const PARAM_KEYS: [&str; 11] = [
    "n",
    "epsilon",
    "beta_star_low",
    "beta_star_high",
    "l_star",
    "m_lower",
    "c1",
    "kappa1",
    "kappa2",
    "c2",
    "mode",
];

const DERIVED_KEYS: [&str; 11] =
    ["n_tilde", "j_min", "j_max", "mesh_count", "delta_n", "u_n", "m_n", "c3", "a_n", "b_n", "kernel_tv"];

pub fn params_to_pairs(p: &PlanParams) -> Vec<(String, String)> {
    vec![
        ("n".into(), p.n.to_string()),
        ("epsilon".into(), p.epsilon.to_string()),
        ("beta_star_low".into(), p.beta_star_low.to_string()),
        ("beta_star_high".into(), p.beta_star_high.to_string()),
        ("l_star".into(), p.l_star.to_string()),
        ("m_lower".into(), p.m_lower.to_string()),
        ("c1".into(), p.c1.to_string()),
        ("kappa1".into(), p.kappa1.to_string()),
        ("kappa2".into(), p.kappa2.to_string()),
        ("c2".into(), p.c2.to_string()),
        ("mode".into(), mode_name(p.mode).to_string()),
    ]
}

/// Knobs followed by every derived field, one per line.
pub fn plan_to_pairs(plan: &CalibrationPlan) -> Vec<(String, String)> {
    let mut v = params_to_pairs(&plan.params);
    v.extend([
        ("n_tilde".to_string(), plan.n_tilde.to_string()),
        ("j_min".to_string(), plan.j_min.to_string()),
        ("j_max".to_string(), plan.j_max.to_string()),
        ("mesh_count".to_string(), plan.mesh_count.to_string()),
        ("delta_n".to_string(), plan.delta_n.to_string()),
        ("u_n".to_string(), plan.u_n.to_string()),
        ("m_n".to_string(), plan.m_n.to_string()),
        ("c3".to_string(), plan.c3.to_string()),
        ("a_n".to_string(), plan.a_n.to_string()),
        ("b_n".to_string(), plan.b_n.to_string()),
        ("kernel_tv".to_string(), plan.kernel_tv.to_string()),
    ]);
    v
}

pub fn plan_to_text(plan: &CalibrationPlan) -> String {
    let mut s = String::new();
    for (k, v) in plan_to_pairs(plan) {
        let _ = writeln!(s, "{k}={v}");
    }
    s
}

/// Applies one knob to `p`. Derived keys are accepted and ignored, so a
/// serialized plan reads back; anything else is an unknown key.
pub fn apply_param(p: &mut PlanParams, key: &str, value: &str) -> Result<bool, FormatError> {
    let bad = || FormatError::BadValue { key: key.to_string(), value: value.to_string() };
    let f = || value.parse::<f64>().map_err(|_| bad());
    match key {
        "n" => p.n = value.parse().map_err(|_| bad())?,
        "epsilon" => p.epsilon = f()?,
        "beta_star_low" => p.beta_star_low = f()?,
        "beta_star_high" => p.beta_star_high = f()?,
        "l_star" => p.l_star = f()?,
        "m_lower" => p.m_lower = f()?,
        "c1" => p.c1 = f()?,
        "kappa1" => p.kappa1 = f()?,
        "kappa2" => p.kappa2 = f()?,
        "c2" => p.c2 = f()?,
        "mode" => p.mode = parse_mode(value).ok_or_else(bad)?,
        k if DERIVED_KEYS.contains(&k) => return Ok(false),
        k => return Err(FormatError::UnknownKey(k.to_string())),
    }
    Ok(true)
}

/// Reads the knobs of a plan block; missing knobs take practical defaults
/// for the kernel, but `n` is required.
pub fn params_from_text(text: &str, kernel: &Kernel) -> Result<PlanParams, FormatError> {
    let pairs = parse_pairs(text)?;
    let n = pairs
        .iter()
        .find(|(k, _)| k == "n")
        .ok_or_else(|| FormatError::MissingKey("n".into()))?
        .1
        .parse::<u64>()
        .map_err(|_| FormatError::BadValue { key: "n".into(), value: "?".into() })?;
    let mut p = PlanParams::practical(n, kernel);
    for (k, v) in &pairs {
        apply_param(&mut p, k, v)?;
    }
    Ok(p)
}

pub fn is_param_key(key: &str) -> bool {
    PARAM_KEYS.contains(&key)
}

/// Fields that a serialized plan carries but that are always recomputed.
pub fn is_derived_key(key: &str) -> bool {
    DERIVED_KEYS.contains(&key)
}

fn opt(v: Option<u32>) -> String {
    v.map(|j| j.to_string()).unwrap_or_default()
}

pub fn band_csv(band: &ConfidenceBand) -> String {
    let mut s = String::from("k,t_lo,t_hi,center,lo,hi,h_loc,j_hat_left,j_hat_right\n");
    for c in &band.cells {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            c.k,
            c.t_lo,
            c.t_hi,
            c.center,
            c.lo(),
            c.hi(),
            c.h_loc,
            opt(c.j_hat_left),
            opt(c.j_hat_right)
        );
    }
    s
}

/// Columns `k, t, j_hat, h_loc`; `h_loc` is empty at `k = 0`, which has no
/// cell to its left.
pub fn profile_csv(profile: &BandwidthProfile, plan: &CalibrationPlan) -> String {
    let mut s = String::from("k,t,j_hat,h_loc\n");
    for (k, j) in profile.j_hat.iter().enumerate() {
        let h = if k == 0 { String::new() } else { profile.h_loc[k - 1].to_string() };
        let _ = writeln!(s, "{},{},{},{}", k, plan.mesh_point(k as i64), j, h);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use locband_core::calibration::derive_plan;

    #[test]
    fn data_errors_carry_line_numbers() {
        assert_eq!(parse_data("1\n\n# c\n2.5\n").unwrap(), vec![1.0, 2.5]);
        assert_eq!(parse_data("1\nx\n"), Err(FormatError::BadNumber { line: 2, text: "x".into() }));
        assert!(matches!(parse_data("1\n2\ninf\n"), Err(FormatError::NonFinite { line: 3, .. })));
        assert!(matches!(parse_data("NaN"), Err(FormatError::NonFinite { line: 1, .. })));
    }

    #[test]
    fn plan_round_trip() {
        let k = Kernel::rectangular();
        let mut p = PlanParams::practical(3000, &k);
        p.c2 = 0.35;
        p.kappa1 = 0.61;
        let plan = derive_plan(&p, &k).unwrap();
        let text = plan_to_text(&plan);
        let back = params_from_text(&text, &k).unwrap();
        assert_eq!(back, p);
        assert_eq!(derive_plan(&back, &k).unwrap(), plan);
    }

    #[test]
    fn unknown_key_is_named() {
        let k = Kernel::rectangular();
        assert_eq!(params_from_text("n=100\nbogus=1\n", &k), Err(FormatError::UnknownKey("bogus".into())));
        assert_eq!(params_from_text("c2=1\n", &k), Err(FormatError::MissingKey("n".into())));
        assert!(matches!(params_from_text("n=100\nmode=fast\n", &k), Err(FormatError::BadValue { .. })));
    }
}
