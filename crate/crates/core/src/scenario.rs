//! TOML scenario files.
//!
//! ```toml
//! n = 5
//! V = 1.0
//! m = 0            # optional, default 0
//! sep = 0.1        # optional, default V/10; 0 disables
//! seed = 7
//! max_rounds = 100
//! obstacles = [[[2.0, 0.0], [3.0, 0.0], [3.0, 1.0], [2.0, 1.0]]]
//!
//! [behavior]
//! kind = "leader_follow"   # gather | formation | leader_follow | idle
//! spacing = 0.1
//! gain = 0.5
//! leader_index = 0
//! waypoints = [[4.0, 0.5]]
//! waypoint_tolerance = 0.05
//! max_step = 0.2
//!
//! [init]
//! box = [0.0, 0.0, 2.0, 2.0]     # or: positions = [[0.0, 0.0], ...]
//! ```

use std::collections::HashMap;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

use crate::engine::{ConfigError, Init, WorldConfig};
use crate::geom2d::{Point2, Polygon};
use crate::motion::{BehaviorKind, BehaviorSpec};

pub const DEFAULT_MAX_ROUNDS: usize = 1_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("{origin}:{line}: {source}")]
    Invalid {
        origin: String,
        line: usize,
        #[source]
        source: ConfigError,
    },
}

impl ScenarioError {
    /// Key named by a validation failure, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            ScenarioError::Invalid { source, .. } => Some(&source.key),
            _ => None,
        }
    }
}

type Xy = [f64; 2];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    n: Option<Spanned<usize>>,
    #[serde(rename = "V")]
    v: Spanned<f64>,
    m: Option<Spanned<usize>>,
    sep: Option<Spanned<f64>>,
    seed: Option<u64>,
    max_rounds: Option<usize>,
    behavior: Spanned<RawBehavior>,
    obstacles: Option<Vec<Spanned<Vec<Xy>>>>,
    init: Spanned<RawInit>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBehavior {
    kind: BehaviorKind,
    spacing: Option<Spanned<f64>>,
    gain: Option<Spanned<f64>>,
    leader_index: Option<Spanned<usize>>,
    waypoints: Option<Spanned<Vec<Xy>>>,
    waypoint_tolerance: Option<Spanned<f64>>,
    max_step: Option<Spanned<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInit {
    positions: Option<Spanned<Vec<Xy>>>,
    #[serde(rename = "box")]
    bbox: Option<Spanned<[f64; 4]>>,
}

#[derive(Serialize)]
struct OutScenario<'a> {
    n: usize,
    #[serde(rename = "V")]
    v: f64,
    m: usize,
    sep: f64,
    seed: u64,
    max_rounds: usize,
    obstacles: Vec<Vec<Xy>>,
    behavior: OutBehavior<'a>,
    init: OutInit,
}

#[derive(Serialize)]
struct OutBehavior<'a> {
    kind: &'a BehaviorKind,
    spacing: f64,
    gain: f64,
    leader_index: usize,
    waypoints: Vec<Xy>,
    waypoint_tolerance: f64,
    max_step: f64,
}

#[derive(Serialize)]
struct OutInit {
    #[serde(skip_serializing_if = "Option::is_none")]
    positions: Option<Vec<Xy>>,
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    bbox: Option<[f64; 4]>,
}

fn xy(p: Point2) -> Xy {
    [p.x, p.y]
}

fn point(a: Xy) -> Point2 {
    Point2::new(a[0], a[1])
}

fn line_of(text: &str, span: &Range<usize>) -> usize {
    text[..span.start.min(text.len())].matches('\n').count() + 1
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<WorldConfig, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, &path.display().to_string())
}

/// Parses and validates scenario text; `origin` labels diagnostics.
pub fn parse_scenario(text: &str, origin: &str) -> Result<WorldConfig, ScenarioError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Parse {
        origin: origin.to_string(),
        message: e.to_string(),
    })?;

    let mut spans: HashMap<&str, Range<usize>> = HashMap::new();
    let invalid = |spans: &HashMap<&str, Range<usize>>, err: ConfigError| {
        let line = spans
            .get(err.key.as_str())
            .map(|s| line_of(text, s))
            .unwrap_or(1);
        ScenarioError::Invalid {
            origin: origin.to_string(),
            line,
            source: err,
        }
    };

    spans.insert("V", raw.v.span());
    let v = *raw.v.get_ref();
    let behavior_raw = raw.behavior.get_ref();
    spans.insert("behavior", raw.behavior.span());
    let mut behavior = BehaviorSpec::with_defaults(behavior_raw.kind, v);
    macro_rules! take {
        ($field:expr, $key:literal, $dst:expr) => {
            if let Some(f) = &$field {
                spans.insert($key, f.span());
                $dst = f.get_ref().clone();
            }
        };
    }
    take!(behavior_raw.spacing, "behavior.spacing", behavior.desired_spacing);
    take!(behavior_raw.gain, "behavior.gain", behavior.spring_gain);
    take!(behavior_raw.leader_index, "behavior.leader_index", behavior.leader_index);
    take!(behavior_raw.waypoint_tolerance, "behavior.waypoint_tolerance", behavior.waypoint_tolerance);
    take!(behavior_raw.max_step, "behavior.max_step", behavior.max_step);
    if let Some(w) = &behavior_raw.waypoints {
        spans.insert("behavior.waypoints", w.span());
        behavior.waypoints = w.get_ref().iter().copied().map(point).collect();
    }

    let mut m = 0;
    take!(raw.m, "m", m);
    let mut sep = 0.1 * v;
    take!(raw.sep, "sep", sep);

    let mut obstacles = Vec::new();
    for (idx, o) in raw.obstacles.iter().flatten().enumerate() {
        spans.insert("obstacles", o.span());
        let poly = Polygon::new(o.get_ref().iter().copied().map(point).collect())
            .map_err(|e| invalid(&spans, ConfigError::new("obstacles", format!("obstacle {idx}: {e}"))))?;
        obstacles.push(poly);
    }

    spans.insert("init", raw.init.span());
    let init_raw = raw.init.get_ref();
    let init = match (&init_raw.positions, &init_raw.bbox) {
        (Some(pos), None) => {
            spans.insert("init.positions", pos.span());
            Init::Positions(pos.get_ref().iter().copied().map(point).collect())
        }
        (None, Some(b)) => {
            spans.insert("init.box", b.span());
            let [x0, y0, x1, y1] = *b.get_ref();
            Init::Box {
                min: Point2::new(x0, y0),
                max: Point2::new(x1, y1),
            }
        }
        _ => {
            return Err(invalid(
                &spans,
                ConfigError::new("init", "exactly one of `positions` or `box` is required"),
            ))
        }
    };

    let n = match (&raw.n, &init) {
        (Some(n), _) => {
            spans.insert("n", n.span());
            *n.get_ref()
        }
        (None, Init::Positions(p)) => p.len(),
        (None, Init::Box { .. }) => {
            return Err(invalid(&spans, ConfigError::new("n", "required with `init.box`")))
        }
    };

    let world = WorldConfig {
        n,
        visibility: v,
        m,
        sep,
        obstacles,
        behavior,
        init,
        max_rounds: raw.max_rounds.unwrap_or(DEFAULT_MAX_ROUNDS),
        seed: raw.seed.unwrap_or(0),
    };
    world.validate().map_err(|e| invalid(&spans, e))?;
    Ok(world)
}

/// Renders a config as scenario text that loads back to an equal config.
pub fn to_toml_string(world: &WorldConfig) -> String {
    let b = &world.behavior;
    let init = match &world.init {
        Init::Positions(p) => OutInit {
            positions: Some(p.iter().copied().map(xy).collect()),
            bbox: None,
        },
        Init::Box { min, max } => OutInit {
            positions: None,
            bbox: Some([min.x, min.y, max.x, max.y]),
        },
    };
    let out = OutScenario {
        n: world.n,
        v: world.visibility,
        m: world.m,
        sep: world.sep,
        seed: world.seed,
        max_rounds: world.max_rounds,
        obstacles: world
            .obstacles
            .iter()
            .map(|o| o.vertices().iter().copied().map(xy).collect())
            .collect(),
        behavior: OutBehavior {
            kind: &b.kind,
            spacing: b.desired_spacing,
            gain: b.spring_gain,
            leader_index: b.leader_index,
            waypoints: b.waypoints.iter().copied().map(xy).collect(),
            waypoint_tolerance: b.waypoint_tolerance,
            max_step: b.max_step,
        },
        init,
    };
    toml::to_string(&out).expect("scenario serializes to TOML")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n = 5
V = 1.0
seed = 7
max_rounds = 100

[behavior]
kind = "gather"

[init]
box = [0, 0, 2, 2]
"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let w = parse_scenario(MINIMAL, "minimal.toml").unwrap();
        assert_eq!(w.n, 5);
        assert_eq!(w.m, 0);
        assert_eq!(w.sep, 0.1);
        assert_eq!(w.behavior.max_step, 0.2);
        assert_eq!(w.behavior.desired_spacing, 0.1);
        assert_eq!(w.behavior.kind, BehaviorKind::Gather);
        assert_eq!(w.seed, 7);
        assert_eq!(w.max_rounds, 100);
        assert_eq!(
            w.init,
            Init::Box {
                min: Point2::new(0.0, 0.0),
                max: Point2::new(2.0, 2.0)
            }
        );
    }

    #[test]
    fn sep_at_or_above_range_names_key_and_line() {
        let text = MINIMAL.replace("seed = 7", "seed = 7\nsep = 1.0");
        let err = parse_scenario(&text, "bad.toml").unwrap_err();
        assert_eq!(err.key(), Some("sep"));
        let msg = err.to_string();
        assert!(msg.starts_with("bad.toml:5: sep:"), "{msg}");
    }

    #[test]
    fn disconnected_positions_rejected() {
        let text = r#"
V = 1.0
[behavior]
kind = "idle"
[init]
positions = [[0, 0], [0.5, 0], [3, 0]]
"#;
        let err = parse_scenario(text, "d.toml").unwrap_err();
        assert_eq!(err.key(), Some("init.positions"));
        assert!(err.to_string().contains("d.toml:6:"), "{err}");
    }

    #[test]
    fn parse_errors_carry_location() {
        let err = parse_scenario("V = 1.0\n[behavior]\nkind = \"dance\"\n", "x.toml").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { .. }));
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_scenario("V = 1.0\nbogus = 1\n", "x.toml").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn init_needs_exactly_one_source() {
        let text = MINIMAL.replace("box = [0, 0, 2, 2]", "box = [0, 0, 2, 2]\npositions = [[0, 0]]");
        assert_eq!(parse_scenario(&text, "x").unwrap_err().key(), Some("init"));
    }

    #[test]
    fn n_inferred_from_positions() {
        let text = r#"
V = 2.0
[behavior]
kind = "leader_follow"
waypoints = [[5, 0]]
[init]
positions = [[0, 0], [0.5, 0]]
"#;
        let w = parse_scenario(text, "x").unwrap();
        assert_eq!(w.n, 2);
        assert_eq!(w.behavior.waypoints, vec![Point2::new(5.0, 0.0)]);
    }

    #[test]
    fn round_trip_with_obstacles() {
        let text = r#"
n = 3
V = 1.5
m = 1
sep = 0.12
seed = 99
max_rounds = 42
obstacles = [[[2, 0], [3, 0], [3, 1], [2, 1]], [[5, 5], [5, 6], [6, 5]]]
[behavior]
kind = "leader_follow"
leader_index = 2
waypoints = [[4, 0.5], [7.25, 1]]
gain = 0.3
[init]
positions = [[0, 0], [0.7, 0.1], [0.3, 0.9]]
"#;
        let w = parse_scenario(text, "x").unwrap();
        let again = parse_scenario(&to_toml_string(&w), "y").unwrap();
        assert_eq!(w, again);
    }
}
