//! Versioned line-oriented scene description.
//!
//! ```text
//! SCENE v1 disc d=2
//! disc.center=0.5,0.5
//! disc.radius=0.25
//! ```
//!
//! `box-union` scenes use repeated `box=lo_1,..,lo_d,hi_1,..,hi_d` lines;
//! `two-link` scenes use `link.lengths`, optional `link.base` (default
//! `0.5,0.5`), repeated `obstacle.disc=wx,wy,r` and optional
//! `grid.resolution`. Every kind accepts `distribution=uniform`. Blank
//! lines and `#` comments are ignored; unknown keys are errors.

use std::path::Path;

use super::{parse_decimal_list, SceneError, SceneOracle, TwoLink, DEFAULT_GRID_RESOLUTION};

pub fn load_scene(path: impl AsRef<Path>) -> Result<SceneOracle, SceneError> {
    let text = std::fs::read_to_string(path)?;
    parse_scene(&text)
}

pub fn parse_scene(text: &str) -> Result<SceneOracle, SceneError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header) = lines
        .next()
        .ok_or_else(|| SceneError::Version(String::new()))?;
    let (kind, dim) = parse_header(header)?;

    let mut center = None;
    let mut radius = None;
    let mut boxes = Vec::new();
    let mut lengths = None;
    let mut base = None;
    let mut obstacles = Vec::new();
    let mut resolution = None;

    for (line, text) in lines {
        let (key, value) = text.split_once('=').ok_or_else(|| SceneError::Parse {
            line,
            message: format!("expected key=value, got `{text}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        let numbers = |want: usize| -> Result<Vec<f64>, SceneError> {
            let v = parse_decimal_list(value).ok_or_else(|| SceneError::Parse {
                line,
                message: format!("`{key}` needs comma-separated decimals"),
            })?;
            if v.len() != want {
                return Err(SceneError::Parse {
                    line,
                    message: format!("`{key}` needs {want} values, got {}", v.len()),
                });
            }
            Ok(v)
        };
        let once = |slot: bool| {
            if slot {
                Err(SceneError::Parse {
                    line,
                    message: format!("duplicate key `{key}`"),
                })
            } else {
                Ok(())
            }
        };
        match (kind, key) {
            (_, "distribution") => {
                if value != "uniform" {
                    return Err(SceneError::Parse {
                        line,
                        message: format!("unsupported distribution `{value}`"),
                    });
                }
            }
            ("disc", "disc.center") => {
                once(center.is_some())?;
                center = Some(numbers(dim)?);
            }
            ("disc", "disc.radius") => {
                once(radius.is_some())?;
                radius = Some(numbers(1)?[0]);
            }
            ("box-union", "box") => {
                let v = numbers(2 * dim)?;
                boxes.push((v[..dim].to_vec(), v[dim..].to_vec()));
            }
            ("two-link", "link.lengths") => {
                once(lengths.is_some())?;
                let v = numbers(2)?;
                lengths = Some([v[0], v[1]]);
            }
            ("two-link", "link.base") => {
                once(base.is_some())?;
                let v = numbers(2)?;
                base = Some([v[0], v[1]]);
            }
            ("two-link", "obstacle.disc") => {
                let v = numbers(3)?;
                obstacles.push([v[0], v[1], v[2]]);
            }
            ("two-link", "grid.resolution") => {
                once(resolution.is_some())?;
                resolution = Some(value.parse::<usize>().map_err(|_| SceneError::Parse {
                    line,
                    message: format!("grid.resolution must be a positive integer, got `{value}`"),
                })?);
            }
            _ => {
                return Err(SceneError::Parse {
                    line,
                    message: format!("unknown key `{key}` for a {kind} scene"),
                })
            }
        }
    }

    let missing = |what: &str| SceneError::Parse {
        line: 0,
        message: format!("missing required key `{what}`"),
    };
    match kind {
        "disc" => SceneOracle::disc(
            center.ok_or_else(|| missing("disc.center"))?,
            radius.ok_or_else(|| missing("disc.radius"))?,
        ),
        "box-union" => SceneOracle::box_union(dim, boxes),
        _ => TwoLink::new(
            lengths.ok_or_else(|| missing("link.lengths"))?,
            base.unwrap_or([0.5, 0.5]),
            obstacles,
            resolution.unwrap_or(DEFAULT_GRID_RESOLUTION),
        )
        .map(SceneOracle::TwoLink),
    }
}

fn parse_header(header: &str) -> Result<(&'static str, usize), SceneError> {
    let bad = || SceneError::Version(header.to_string());
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "SCENE" || parts[1] != "v1" {
        return Err(bad());
    }
    let kind = match parts[2] {
        "disc" => "disc",
        "box-union" => "box-union",
        "two-link" => "two-link",
        other => {
            return Err(SceneError::Parse {
                line: 1,
                message: format!("unknown scene kind `{other}`"),
            })
        }
    };
    let dim: usize = parts[3]
        .strip_prefix("d=")
        .and_then(|d| d.parse().ok())
        .filter(|&d| d >= 1)
        .ok_or_else(|| SceneError::Parse {
            line: 1,
            message: format!("bad dimension `{}`", parts[3]),
        })?;
    if kind == "two-link" && dim != 2 {
        return Err(SceneError::Parse {
            line: 1,
            message: "two-link scenes have d=2".into(),
        });
    }
    Ok((kind, dim))
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

pub(super) fn write_scene(scene: &SceneOracle) -> String {
    let mut out = format!("SCENE v1 {} d={}\n", scene.kind().as_str(), scene.dim());
    match scene {
        SceneOracle::Disc(d) => {
            out += &format!("disc.center={}\n", join(d.center()));
            out += &format!("disc.radius={}\n", d.radius());
        }
        SceneOracle::BoxUnion(b) => {
            for bx in b.boxes() {
                out += &format!("box={},{}\n", join(&bx.lo), join(&bx.hi));
            }
        }
        SceneOracle::TwoLink(t) => {
            out += &format!("link.lengths={}\n", join(&t.lengths()));
            out += &format!("link.base={}\n", join(&t.base()));
            for o in t.obstacles() {
                out += &format!("obstacle.disc={}\n", join(o));
            }
            out += &format!("grid.resolution={}\n", t.resolution());
        }
    }
    out += "distribution=uniform\n";
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Label, SceneKind};

    #[test]
    fn parses_each_kind() {
        let disc = parse_scene("SCENE v1 disc d=2\ndisc.center=0.5,0.5\ndisc.radius=0.25\n").unwrap();
        assert_eq!(disc.kind(), SceneKind::Disc);
        assert_eq!(disc.label(&[0.5, 0.5]).unwrap(), Label::Forbidden);

        let boxes = parse_scene("SCENE v1 box-union d=2\n# two boxes\nbox=0.1,0.1,0.3,0.3\n\nbox=0.6,0.6,0.9,0.9\n").unwrap();
        assert_eq!(boxes.label(&[0.7, 0.7]).unwrap(), Label::Forbidden);

        let arm = parse_scene(
            "SCENE v1 two-link d=2\nlink.lengths=0.3,0.2\nobstacle.disc=0.95,0.5,0.05\ngrid.resolution=32\n",
        )
        .unwrap();
        assert_eq!(arm.label(&[0.5, 0.5]).unwrap(), Label::Forbidden);
    }

    #[test]
    fn round_trips_canonical_text() {
        let text = "SCENE v1 two-link d=2\nlink.lengths=0.3,0.2\nlink.base=0.5,0.5\nobstacle.disc=0.95,0.5,0.05\ngrid.resolution=32\ndistribution=uniform\n";
        let scene = parse_scene(text).unwrap();
        assert_eq!(scene.to_scene_file(), text);
        let again = parse_scene(&scene.to_scene_file()).unwrap();
        assert_eq!(again.id(), scene.id());
    }

    #[test]
    fn error_paths() {
        assert!(matches!(parse_scene("SCENE v2 disc d=2\n"), Err(SceneError::Version(_))));
        assert!(matches!(parse_scene(""), Err(SceneError::Version(_))));
        assert!(matches!(
            parse_scene("SCENE v1 disc d=2\ndisc.center=0.5,0.5\ndisc.radius=0.25\ncolor=red\n"),
            Err(SceneError::Parse { line: 4, .. })
        ));
        assert!(matches!(
            parse_scene("SCENE v1 disc d=2\ndisc.center=0.5\ndisc.radius=0.25\n"),
            Err(SceneError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_scene("SCENE v1 disc d=2\ndisc.radius=0.25\n"),
            Err(SceneError::Parse { .. })
        ));
        assert!(parse_scene("SCENE v1 disc d=2\ndisc.center=0.5,0.5\ndisc.radius=0,25\n").is_err());
        assert!(parse_scene("SCENE v1 two-link d=3\nlink.lengths=0.3,0.2\n").is_err());
        assert!(parse_scene("SCENE v1 disc d=2\ndisc.center=0.5,0.5\ndisc.radius=0.25\ndistribution=gaussian\n").is_err());
    }
}
