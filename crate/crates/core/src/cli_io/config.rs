use std::collections::HashMap;

use crate::dynamics::{Preset, SimConfig};
use crate::error::{Error, Result};

/// Keys that must appear in every config file.
pub const REQUIRED_KEYS: [&str; 5] = ["dim", "n", "alpha", "t_end", "preset"];

/// Every accepted key, in serialization order.
pub const CONFIG_KEYS: [&str; 21] = [
    "dim",
    "n",
    "alpha",
    "t_end",
    "preset",
    "cfl_advect",
    "cfl_diffuse",
    "dealias",
    "output_cadence",
    "checkpoint_every",
    "gamma",
    "seed",
    "kernel.images",
    "init.rho_bar",
    "init.a",
    "init.eps",
    "init.k0",
    "init.ubar1",
    "init.ubar2",
    // accepted spellings of the same two fields
    "ubar1",
    "ubar2",
];

fn real(v: &str) -> std::result::Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("expected a number, got {v:?}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("expected a finite number, got {v:?}"))
    }
}

fn positive(v: &str, key: &str) -> std::result::Result<f64, String> {
    let x = real(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("{key} must be > 0"))
    }
}

fn count(v: &str) -> std::result::Result<usize, String> {
    v.parse().map_err(|_| format!("expected a non-negative integer, got {v:?}"))
}

/// Parses `value` for `key` and stores it in `cfg`, checking the key's own
/// range. Cross-key constraints are left to [`SimConfig::validate`].
pub fn set_key(cfg: &mut SimConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    match key {
        "dim" => {
            cfg.dim = match count(value)? {
                d @ (1 | 2) => d,
                _ => return Err("dim must be 1 or 2".into()),
            }
        }
        "n" => {
            let n = count(value)?;
            if n < 16 || !n.is_power_of_two() {
                return Err("n must be a power of two >= 16".into());
            }
            cfg.n = n;
        }
        "alpha" => {
            let a = real(value)?;
            if !(a > 0.0 && a < 2.0) {
                return Err("alpha must lie in (0,2)".into());
            }
            cfg.alpha = a;
        }
        "t_end" => {
            let t = real(value)?;
            if t < 0.0 {
                return Err("t_end must be >= 0".into());
            }
            cfg.t_end = t;
        }
        "preset" => {
            cfg.init.preset = Preset::from_name(value)
                .ok_or_else(|| format!("unknown preset {value:?} (perturbed_flock, flock, uniform)"))?
        }
        "cfl_advect" => cfg.cfl_advect = positive(value, key)?,
        "cfl_diffuse" => cfg.cfl_diffuse = positive(value, key)?,
        "dealias" => {
            cfg.dealias = value
                .parse()
                .map_err(|_| format!("expected true or false, got {value:?}"))?
        }
        "output_cadence" => cfg.output_cadence = positive(value, key)?,
        "checkpoint_every" => {
            cfg.checkpoint_every = match count(value)? {
                0 => return Err("checkpoint_every must be >= 1".into()),
                c => c,
            }
        }
        "gamma" => {
            let g = real(value)?;
            if !(g > 0.0 && g < 1.0) {
                return Err("gamma must lie in (0,1)".into());
            }
            cfg.gamma = g;
        }
        "seed" => cfg.seed = value.parse().map_err(|_| format!("expected a u64 seed, got {value:?}"))?,
        "kernel.images" => {
            cfg.kernel_images = match count(value)? {
                0 => return Err("kernel.images must be >= 1".into()),
                k => k,
            }
        }
        "init.rho_bar" => cfg.init.rho_bar = positive(value, key)?,
        "init.a" => {
            let a = real(value)?;
            if !(0.0..1.0).contains(&a) {
                return Err("init.a must lie in [0,1)".into());
            }
            cfg.init.a = a;
        }
        "init.eps" => {
            let e = real(value)?;
            if e < 0.0 {
                return Err("init.eps must be >= 0".into());
            }
            cfg.init.eps = e;
        }
        "init.k0" => {
            cfg.init.k0 = match count(value)? {
                0 => return Err("init.k0 must be >= 1".into()),
                k => k,
            }
        }
        "init.ubar1" | "ubar1" => cfg.init.ubar[0] = real(value)?,
        "init.ubar2" | "ubar2" => cfg.init.ubar[1] = real(value)?,
        _ => return Err(format!("unknown key {key:?}")),
    }
    Ok(())
}

fn canonical(key: &str) -> &str {
    match key {
        "ubar1" => "init.ubar1",
        "ubar2" => "init.ubar2",
        k => k,
    }
}

/// Parses a flat `key = value` config with `#` comments.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let mut cfg = SimConfig::new(1, 128, 1.0, 1.0, Preset::PerturbedFlock);
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
            line,
            msg: format!("expected `key = value`, got {content:?}"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(first) = seen.insert(canonical(key).to_string(), line) {
            return Err(Error::Config {
                line,
                msg: format!("duplicate key {key:?} (first set on line {first})"),
            });
        }
        set_key(&mut cfg, key, value).map_err(|msg| Error::Config { line, msg })?;
    }
    if let Some(missing) = REQUIRED_KEYS.iter().find(|k| !seen.contains_key(**k)) {
        return Err(Error::ConfigMissing(format!("required key {missing:?} is missing")));
    }
    if cfg.init.k0 > cfg.n / 3 {
        let line = seen.get("init.k0").or_else(|| seen.get("n")).copied().unwrap_or(0);
        return Err(Error::Config {
            line,
            msg: format!("init.k0 = {} exceeds the dealiased band n/3 = {}", cfg.init.k0, cfg.n / 3),
        });
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes every key, so that `parse_config(serialize_config(c)) == c`.
pub fn serialize_config(cfg: &SimConfig) -> String {
    let i = &cfg.init;
    format!(
        "dim = {}\nn = {}\nalpha = {}\nt_end = {}\npreset = {}\ncfl_advect = {}\ncfl_diffuse = {}\n\
         dealias = {}\noutput_cadence = {}\ncheckpoint_every = {}\ngamma = {}\nseed = {}\n\
         kernel.images = {}\ninit.rho_bar = {}\ninit.a = {}\ninit.eps = {}\ninit.k0 = {}\n\
         init.ubar1 = {}\ninit.ubar2 = {}\n",
        cfg.dim,
        cfg.n,
        cfg.alpha,
        cfg.t_end,
        i.preset.name(),
        cfg.cfl_advect,
        cfg.cfl_diffuse,
        cfg.dealias,
        cfg.output_cadence,
        cfg.checkpoint_every,
        cfg.gamma,
        cfg.seed,
        cfg.kernel_images,
        i.rho_bar,
        i.a,
        i.eps,
        i.k0,
        i.ubar[0],
        i.ubar[1],
    )
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    const MINIMAL: &str = "dim = 1\nn = 128\nalpha = 1.0\nt_end = 1.0\npreset = perturbed_flock\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg, SimConfig::new(1, 128, 1.0, 1.0, Preset::PerturbedFlock));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{MINIMAL}init.eps = 0.01 # smaller\n");
        assert_eq!(parse_config(&text).unwrap().init.eps, 0.01);
    }

    #[test]
    fn alpha_range_error_names_line() {
        let text = MINIMAL.replace("alpha = 1.0", "alpha = 2.5");
        match parse_config(&text) {
            Err(Error::Config { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("alpha must lie in (0,2)"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_errors() {
        let bad = format!("{MINIMAL}colour = blue\n");
        assert!(matches!(parse_config(&bad), Err(Error::Config { line: 6, .. })));
        let bad = format!("{MINIMAL}dealias = maybe\n");
        assert!(matches!(parse_config(&bad), Err(Error::Config { line: 6, .. })));
        let bad = format!("{MINIMAL}seed = 1\nseed = 2\n");
        assert!(matches!(parse_config(&bad), Err(Error::Config { line: 7, .. })));
        let bad = MINIMAL.replace("preset = perturbed_flock\n", "");
        assert!(matches!(parse_config(&bad), Err(Error::ConfigMissing(_))));
        let bad = format!("{MINIMAL}init.k0 = 60\n");
        assert!(matches!(parse_config(&bad), Err(Error::Config { line: 6, .. })));
        assert!(matches!(parse_config("dim 1"), Err(Error::Config { line: 1, .. })));
    }

    #[test]
    fn zero_end_time_is_accepted() {
        let text = MINIMAL.replace("t_end = 1.0", "t_end = 0");
        assert_eq!(parse_config(&text).unwrap().t_end, 0.0);
    }

    #[test]
    fn every_key_round_trips() {
        let text = serialize_config(&SimConfig::new(2, 64, 0.5, 3.0, Preset::Flock));
        for key in CONFIG_KEYS.iter().filter(|k| k.starts_with("init.") || !k.starts_with("ubar")) {
            assert!(text.contains(&format!("{key} = ")), "{key}");
        }
    }

    proptest! {
        #[test]
        fn parse_serialize_round_trip(
            dim in 1usize..=2,
            log_n in 4u32..=9,
            alpha in 0.01f64..1.99,
            t_end in 0.0f64..100.0,
            preset in 0usize..3,
            cfl in (0.01f64..1.0, 0.01f64..1.0),
            dealias: bool,
            cadence in 0.001f64..5.0,
            every in 1usize..50,
            gamma in 0.01f64..0.99,
            seed: u64,
            images in 1usize..40,
            init in (0.1f64..5.0, 0.0f64..0.99, 0.0f64..1.0, 1usize..=5, -3.0f64..3.0, -3.0f64..3.0),
        ) {
            let presets = [Preset::PerturbedFlock, Preset::Flock, Preset::Uniform];
            let mut cfg = SimConfig::new(dim, 1 << log_n, alpha, t_end, presets[preset]);
            cfg.cfl_advect = cfl.0;
            cfg.cfl_diffuse = cfl.1;
            cfg.dealias = dealias;
            cfg.output_cadence = cadence;
            cfg.checkpoint_every = every;
            cfg.gamma = gamma;
            cfg.seed = seed;
            cfg.kernel_images = images;
            cfg.init.rho_bar = init.0;
            cfg.init.a = init.1;
            cfg.init.eps = init.2;
            cfg.init.k0 = init.3;
            cfg.init.ubar = [init.4, init.5];
            let back = parse_config(&serialize_config(&cfg)).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
