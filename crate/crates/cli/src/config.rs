//! Flat `key = value` configuration with `[section]` headers.
//!
//! ```text
//! [plan]
//! seed = 7
//! replications = 2000
//! t_grid = 2^8, 2^9, 1024
//!
//! [env]
//! family = clipped_gaussian
//! k = 2
//! delta = 0.15
//!
//! [policy]
//! kind = exp3
//! ```
//!
//! `[plan]` and `[env]` appear once; `[policy]` may repeat. Lines starting
//! with `#` or `;` are comments. Target arms are 1-based.

use std::fmt::Write as _;

use banditlb::policies::{PolicyKind, Tuning};
use banditlb::runner::{EnvFamily, ExperimentPlan, Gap, PolicyTemplate, DEFAULT_MAX_TOTAL_ROUNDS};

use crate::error::CliError;

/// Master seed used when neither the config nor `--seed` gives one.
pub const DEFAULT_SEED: u64 = 0x00C0_FFEE;

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Section {
    name: String,
    entries: Vec<Entry>,
}

fn err(key: impl AsRef<str>, msg: impl AsRef<str>) -> CliError {
    CliError::Config(format!("{}: {}", key.as_ref(), msg.as_ref()))
}

fn parse_sections(text: &str) -> Result<Vec<Section>, CliError> {
    let mut sections: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            sections.push(Section { name: name.trim().to_string(), entries: Vec::new() });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("line {lineno}"), format!("expected `key = value`, got `{line}`")))?;
        let section = sections
            .last_mut()
            .ok_or_else(|| err(format!("line {lineno}"), "key outside any [section]"))?;
        let key = key.trim().to_string();
        if section.entries.iter().any(|e| e.key == key) {
            return Err(err(format!("{}.{key}", section.name), format!("duplicate key on line {lineno}")));
        }
        section.entries.push(Entry { key, value: value.trim().to_string(), line: lineno });
    }
    Ok(sections)
}

/// Key lookup for one section that tracks which keys were consumed.
struct Fields<'a> {
    name: &'a str,
    entries: &'a [Entry],
    used: Vec<bool>,
}

impl<'a> Fields<'a> {
    fn new(section: &'a Section) -> Self {
        Self { name: &section.name, entries: &section.entries, used: vec![false; section.entries.len()] }
    }

    fn key(&self, key: &str) -> String {
        format!("{}.{key}", self.name)
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(self.entries[i].value.as_str())
    }

    fn get<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| err(self.key(key), format!("cannot parse `{v}`"))),
        }
    }

    fn require<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, CliError> {
        self.get(key)?.ok_or_else(|| err(self.key(key), "missing key"))
    }

    fn finish(self) -> Result<(), CliError> {
        match self.used.iter().position(|u| !u) {
            Some(i) => {
                let e = &self.entries[i];
                Err(err(self.key(&e.key), format!("unknown or unused key (line {})", e.line)))
            }
            None => Ok(()),
        }
    }
}

/// Parses an integer, also accepting `2^e`.
fn parse_count(s: &str) -> Option<usize> {
    let s = s.trim();
    match s.split_once('^') {
        Some((b, e)) => b.trim().parse::<usize>().ok()?.checked_pow(e.trim().parse().ok()?),
        None => s.parse().ok(),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>, CliError> {
    value
        .split(',')
        .map(|item| parse_count(item).ok_or_else(|| err(key, format!("bad entry `{}`", item.trim()))))
        .collect()
}

fn plan_section<'a>(sections: &'a [Section], name: &str) -> Result<Option<&'a Section>, CliError> {
    let mut found = sections.iter().filter(|s| s.name == name);
    let first = found.next();
    if found.next().is_some() {
        return Err(err(name, "section appears more than once"));
    }
    Ok(first)
}

fn parse_env(section: &Section) -> Result<(EnvFamily, Option<Vec<usize>>), CliError> {
    let mut f = Fields::new(section);
    let family: String = f.require("family")?;
    let arms: usize = f.require("k")?;
    let env = match family.as_str() {
        "clipped_gaussian" => {
            let delta = f.require("delta")?;
            let mode = f.get::<String>("mode")?.unwrap_or_else(|| "high_probability".into());
            let gap = match mode.as_str() {
                "high_probability" => Gap::HighProbability,
                "calibrated" => Gap::Calibrated(f.require("c")?),
                "fixed" => Gap::Fixed(f.require("gap")?),
                other => return Err(err(f.key("mode"), format!("unknown mode `{other}`"))),
            };
            EnvFamily::ClippedGaussian { arms, delta, gap }
        }
        "bernoulli" | "bernoulli_mixture" | "bernoulli_null" => {
            let alpha = f.require("alpha")?;
            let epsilon = f.get("epsilon")?;
            match family.as_str() {
                "bernoulli" => EnvFamily::Bernoulli { arms, alpha, epsilon },
                "bernoulli_mixture" => EnvFamily::BernoulliMixture { arms, alpha, epsilon },
                _ => EnvFamily::BernoulliNull { arms, alpha, epsilon },
            }
        }
        other => return Err(err(f.key("family"), format!("unknown family `{other}`"))),
    };
    let targets = match f.raw("targets") {
        None => None,
        Some(v) => {
            let key = f.key("targets");
            let list = parse_list(&key, v)?;
            if let Some(bad) = list.iter().find(|&&j| j == 0 || j > arms) {
                return Err(err(key, format!("arm {bad} outside 1..={arms}")));
            }
            Some(list.into_iter().map(|j| j - 1).collect())
        }
    };
    f.finish()?;
    Ok((env, targets))
}

fn parse_policy(section: &Section) -> Result<PolicyTemplate, CliError> {
    let mut f = Fields::new(section);
    let kind: String = f.require("kind")?;
    let kind = PolicyKind::parse(&kind).map_err(|e| err(f.key("kind"), e.to_string()))?;
    let tuning = Tuning { eta: f.get("eta")?, gamma: f.get("gamma")?, beta: f.get("beta")? };
    f.finish()?;
    Ok(PolicyTemplate { kind, tuning })
}

/// Applies `section.key=value` overrides on top of the parsed sections.
fn apply_overrides(sections: &mut Vec<Section>, overrides: &[String]) -> Result<(), CliError> {
    for o in overrides {
        let (path, value) = o
            .split_once('=')
            .ok_or_else(|| err(o, "override must look like section.key=value"))?;
        let (name, key) = path
            .trim()
            .split_once('.')
            .ok_or_else(|| err(path, "override key must look like section.key"))?;
        if name == "policy" {
            return Err(err(path, "policy sections cannot be overridden; edit the config"));
        }
        let idx = match sections.iter().position(|s| s.name == name) {
            Some(i) => i,
            None => {
                sections.push(Section { name: name.to_string(), entries: Vec::new() });
                sections.len() - 1
            }
        };
        let entries = &mut sections[idx].entries;
        let value = value.trim().to_string();
        match entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value,
            None => entries.push(Entry { key: key.to_string(), value, line: 0 }),
        }
    }
    Ok(())
}

/// Parses config text into a plan, with optional `section.key=value` overrides.
pub fn parse_plan(text: &str, overrides: &[String]) -> Result<ExperimentPlan, CliError> {
    let mut sections = parse_sections(text)?;
    apply_overrides(&mut sections, overrides)?;
    if let Some(s) = sections.iter().find(|s| !matches!(s.name.as_str(), "plan" | "env" | "policy")) {
        return Err(err(&s.name, "unknown section"));
    }
    let plan = plan_section(&sections, "plan")?.ok_or_else(|| err("plan", "missing section"))?;
    let env = plan_section(&sections, "env")?.ok_or_else(|| err("env", "missing section"))?;

    let (family, targets) = parse_env(env)?;
    let policies = sections
        .iter()
        .filter(|s| s.name == "policy")
        .map(parse_policy)
        .collect::<Result<Vec<_>, _>>()?;
    if policies.is_empty() {
        return Err(err("policy", "at least one [policy] section is required"));
    }

    let mut f = Fields::new(plan);
    let master_seed = f.get("seed")?.unwrap_or(DEFAULT_SEED);
    let replications = f.require("replications")?;
    let grid = f.raw("t_grid").ok_or_else(|| err("plan.t_grid", "missing key"))?;
    let horizons = parse_list("plan.t_grid", grid)?;
    let tail_threshold = f.get("tail_threshold")?;
    let max_total_rounds = f.get("max_total_rounds")?.unwrap_or(DEFAULT_MAX_TOTAL_ROUNDS);
    f.finish()?;

    let mut out = ExperimentPlan::new(family, policies, horizons, replications, master_seed);
    out.targets = targets;
    out.tail_threshold = tail_threshold;
    out.max_total_rounds = max_total_rounds;
    out.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(out)
}

/// Serializes a plan back into config text that parses to the same plan.
pub fn plan_to_text(plan: &ExperimentPlan) -> String {
    let mut s = String::new();
    let grid: Vec<String> = plan.horizons.iter().map(|t| t.to_string()).collect();
    let _ = writeln!(s, "[plan]");
    let _ = writeln!(s, "seed = {}", plan.master_seed);
    let _ = writeln!(s, "replications = {}", plan.replications);
    let _ = writeln!(s, "t_grid = {}", grid.join(", "));
    if let Some(x) = plan.tail_threshold {
        let _ = writeln!(s, "tail_threshold = {x}");
    }
    let _ = writeln!(s, "max_total_rounds = {}", plan.max_total_rounds);

    let _ = writeln!(s, "\n[env]");
    let _ = writeln!(s, "family = {}", plan.family.name());
    let _ = writeln!(s, "k = {}", plan.family.arms());
    match plan.family {
        EnvFamily::ClippedGaussian { delta, gap, .. } => {
            let _ = writeln!(s, "delta = {delta}");
            match gap {
                Gap::HighProbability => {
                    let _ = writeln!(s, "mode = high_probability");
                }
                Gap::Calibrated(c) => {
                    let _ = writeln!(s, "mode = calibrated\nc = {c}");
                }
                Gap::Fixed(g) => {
                    let _ = writeln!(s, "mode = fixed\ngap = {g}");
                }
            }
        }
        EnvFamily::Bernoulli { alpha, epsilon, .. }
        | EnvFamily::BernoulliMixture { alpha, epsilon, .. }
        | EnvFamily::BernoulliNull { alpha, epsilon, .. } => {
            let _ = writeln!(s, "alpha = {alpha}");
            if let Some(e) = epsilon {
                let _ = writeln!(s, "epsilon = {e}");
            }
        }
    }
    if let Some(t) = &plan.targets {
        let arms: Vec<String> = t.iter().map(|j| (j + 1).to_string()).collect();
        let _ = writeln!(s, "targets = {}", arms.join(", "));
    }
    for p in &plan.policies {
        let _ = writeln!(s, "\n[policy]\nkind = {}", p.kind);
        for (name, v) in [("eta", p.tuning.eta), ("gamma", p.tuning.gamma), ("beta", p.tuning.beta)] {
            if let Some(v) = v {
                let _ = writeln!(s, "{name} = {v}");
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
[plan]
replications = 4
t_grid = 16

[env]
family = bernoulli_null
k = 2
alpha = 0.5

[policy]
kind = uniform
";

    #[test]
    fn minimal_config() {
        let plan = parse_plan(MINIMAL, &[]).unwrap();
        assert_eq!(plan.master_seed, DEFAULT_SEED);
        assert_eq!(plan.horizons, vec![16]);
        assert_eq!(plan.cells().len(), 1);
    }

    #[test]
    fn missing_family_names_key() {
        let text = MINIMAL.replace("family = bernoulli_null", "");
        let e = parse_plan(&text, &[]).unwrap_err();
        assert!(e.to_string().contains("env.family"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn unknown_key_rejected() {
        let text = MINIMAL.replace("k = 2", "k = 2\ncolour = red");
        assert!(parse_plan(&text, &[]).unwrap_err().to_string().contains("env.colour"));
        let text = MINIMAL.replace("alpha = 0.5", "alpha = 0.5\ndelta = 0.1");
        assert!(parse_plan(&text, &[]).is_err());
    }

    #[test]
    fn power_grid_and_overrides() {
        let text = MINIMAL.replace("t_grid = 16", "t_grid = 2^8, 2^9,1024");
        let plan = parse_plan(&text, &["plan.seed=9".into(), "env.k=3".into()]).unwrap();
        assert_eq!(plan.horizons, vec![256, 512, 1024]);
        assert_eq!(plan.master_seed, 9);
        assert_eq!(plan.family.arms(), 3);
        assert!(parse_plan(&text, &["policy.kind=exp3".into()]).is_err());
        assert!(parse_plan(&text, &["nonsense".into()]).is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for (from, to) in [
            ("t_grid = 16", "t_grid = 32, 16"),
            ("t_grid = 16", "t_grid = x"),
            ("replications = 4", "replications = 0"),
            ("alpha = 0.5", "alpha = 1.5"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert_eq!(parse_plan(&text, &[]).unwrap_err().exit_code(), 2, "{to}");
        }
    }

    #[test]
    fn round_trip_preserves_cells() {
        let text = "
[plan]
seed = 11
replications = 30
t_grid = 100, 200
tail_threshold = 1.25

[env]
family = clipped_gaussian
k = 3
delta = 0.1
mode = calibrated
c = 0.7
targets = 1, 3

[policy]
kind = exp3p(0.15)
beta = 0.5

[policy]
kind = exp3ix
eta = 0.01
gamma = 0.003
";
        let plan = parse_plan(text, &[]).unwrap();
        let again = parse_plan(&plan_to_text(&plan), &[]).unwrap();
        assert_eq!(plan, again);
        let ids: Vec<u64> = plan.cells().iter().map(|c| c.id).collect();
        let ids2: Vec<u64> = again.cells().iter().map(|c| c.id).collect();
        assert_eq!(ids, ids2);
        assert_eq!(plan.targets, Some(vec![0, 2]));
    }

    #[test]
    fn targets_are_one_based() {
        let text = MINIMAL.replace("bernoulli_null", "bernoulli").replace("alpha = 0.5", "alpha = 0.5\ntargets = 3");
        assert!(parse_plan(&text, &[]).is_err());
        let text = text.replace("targets = 3", "targets = 0");
        assert!(parse_plan(&text, &[]).is_err());
    }
}
