use contextual::scenario::{builtin_abc, builtin_chsh, parse_scenario, ChshState, Scenario, DEFAULT_CHSH_ANGLES};

use crate::{Builtin, CliError, CommonArgs, StateArg};

pub const DEFAULT_P: f64 = 1.0 / 3.0;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Checks that the scenario flags form one consistent source.
fn check_flags(c: &CommonArgs) -> Result<(), CliError> {
    match (&c.path, c.builtin) {
        (Some(_), Some(_)) => return Err(usage("give either a scenario file or --builtin, not both")),
        (None, None) => return Err(usage("no scenario: give a file path or --builtin abc|chsh")),
        _ => {}
    }
    let builtin = c.builtin;
    if c.p.is_some() && builtin != Some(Builtin::Abc) {
        return Err(usage("--p applies only to --builtin abc"));
    }
    if (c.state.is_some() || c.angles.is_some()) && builtin != Some(Builtin::Chsh) {
        return Err(usage("--state and --angles apply only to --builtin chsh"));
    }
    if let Some(p) = c.p {
        if !(0.0..=1.0).contains(&p) {
            return Err(usage(format!("--p must lie in [0, 1], got {p}")));
        }
    }
    if let Some(a) = &c.angles {
        if a.len() != 4 || a.iter().any(|x| !x.is_finite()) {
            return Err(usage("--angles takes four finite numbers t1,t2,t3,t4"));
        }
    }
    if !(c.tol.is_finite() && c.tol > 0.0) {
        return Err(usage(format!("--tol must be positive, got {}", c.tol)));
    }
    Ok(())
}

/// The scenario named by the flags, with `p` overriding `--p`.
pub fn load_with(c: &CommonArgs, p: Option<f64>) -> Result<Scenario, CliError> {
    check_flags(c)?;
    if let Some(path) = &c.path {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        return Ok(parse_scenario(&bytes)?);
    }
    match c.builtin.expect("checked") {
        Builtin::Abc => Ok(builtin_abc(p.or(c.p).unwrap_or(DEFAULT_P))?),
        Builtin::Chsh => {
            let state = match c.state.unwrap_or(StateArg::Singlet) {
                StateArg::Singlet => ChshState::Singlet,
                StateArg::Product00 => ChshState::Product00,
            };
            let angles = match &c.angles {
                Some(a) => [a[0], a[1], a[2], a[3]],
                None => DEFAULT_CHSH_ANGLES,
            };
            Ok(builtin_chsh(state, angles)?)
        }
    }
}

pub fn load(c: &CommonArgs) -> Result<Scenario, CliError> {
    load_with(c, None)
}

/// Parses `p=start:end:step` into the list of parameter values.
pub fn parse_sweep(c: &CommonArgs, spec: &str) -> Result<Vec<f64>, CliError> {
    if c.builtin != Some(Builtin::Abc) || c.p.is_some() {
        return Err(usage("--sweep needs --builtin abc without --p"));
    }
    let bad = || usage(format!("--sweep expects p=start:end:step, got `{spec}`"));
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    if name.trim() != "p" {
        return Err(usage(format!("cannot sweep `{name}`; only p is sweepable")));
    }
    let parts: Vec<f64> = range
        .split(':')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [start, end, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0) || end < start || start < 0.0 || end > 1.0 {
        return Err(bad());
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| (start + k as f64 * step).min(end)).collect())
}

/// Parses `a=1,b=1,c=-1`.
pub fn parse_cell(spec: &str) -> Result<Vec<(String, f64)>, CliError> {
    spec.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| usage(format!("--cell expects label=value pairs, got `{kv}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| usage(format!("--cell value `{v}` is not a number")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}
