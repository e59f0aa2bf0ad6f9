//! `--error kind:key=value,...` arguments.

use signcoach_core::joint::{Axis, JointId};
use signcoach_core::synth::Perturbation;

use crate::error::CliError;

struct Params<'a> {
    kind: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn take(&mut self, key: &str) -> Result<&'a str, CliError> {
        let k = self
            .pairs
            .iter()
            .position(|(n, _)| *n == key)
            .ok_or_else(|| CliError::Argument(format!("{}: missing `{key}`", self.kind)))?;
        Ok(self.pairs.remove(k).1)
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, CliError> {
        let v = self.take(key)?;
        v.parse()
            .map_err(|_| CliError::Argument(format!("{}: `{key}` has a bad value `{v}`", self.kind)))
    }

    fn joint(&mut self) -> Result<JointId, CliError> {
        let v = self.take("joint")?;
        v.parse().map_err(|_| CliError::Argument(format!("{}: unknown joint `{v}`", self.kind)))
    }

    fn done(self) -> Result<(), CliError> {
        match self.pairs.first() {
            Some((k, _)) => Err(CliError::Argument(format!("{}: unknown key `{k}`", self.kind))),
            None => Ok(()),
        }
    }
}

/// Parses one `--error` value. `none` yields no perturbation.
///
/// ```text
/// time-warp:factor=1.25
/// joint-offset:joint=right-wrist,axis=x,magnitude=0.3,frames=10-25
/// handshape-swap:keyframe=0,shape=fist
/// path-deviation:joint=right-elbow,amplitude=0.5,frequency=1
/// jitter:sigma=0.01
/// ```
pub fn parse_error_arg(arg: &str) -> Result<Option<Perturbation>, CliError> {
    let (kind, rest) = arg.split_once(':').unwrap_or((arg, ""));
    let mut pairs = Vec::new();
    for item in rest.split(',').filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Argument(format!("{kind}: expected key=value, found `{item}`")))?;
        pairs.push((k.trim(), v.trim()));
    }
    let mut p = Params { kind, pairs };
    let out = match kind {
        "none" => None,
        "time-warp" => Some(Perturbation::TimeWarp { factor: p.num("factor")? }),
        "joint-offset" => {
            let joint = p.joint()?;
            let axis: Axis = p.num("axis")?;
            let magnitude = p.num("magnitude")?;
            let frames = p.take("frames")?;
            let (a, b) = frames
                .split_once('-')
                .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
                .ok_or_else(|| CliError::Argument(format!("joint-offset: frames must be A-B, not `{frames}`")))?;
            Some(Perturbation::JointOffset {
                joint,
                axis,
                magnitude,
                frame_range: (a, b),
            })
        }
        "handshape-swap" => Some(Perturbation::HandshapeSwap {
            keyframe_index: p.num("keyframe")?,
            replacement_id: p.take("shape")?.to_string(),
        }),
        "path-deviation" => Some(Perturbation::PathDeviation {
            joint: p.joint()?,
            amplitude: p.num("amplitude")?,
            frequency: p.num("frequency")?,
        }),
        "jitter" => Some(Perturbation::Jitter { sigma: p.num("sigma")? }),
        other => return Err(CliError::Argument(format!("unknown error kind `{other}`"))),
    };
    p.done()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        assert_eq!(parse_error_arg("none").unwrap(), None);
        assert_eq!(
            parse_error_arg("time-warp:factor=1.25").unwrap(),
            Some(Perturbation::TimeWarp { factor: 1.25 })
        );
        assert_eq!(
            parse_error_arg("joint-offset:joint=right-wrist,axis=x,magnitude=0.3,frames=10-25").unwrap(),
            Some(Perturbation::JointOffset {
                joint: JointId::RightWrist,
                axis: Axis::X,
                magnitude: 0.3,
                frame_range: (10, 25),
            })
        );
        assert_eq!(
            parse_error_arg("handshape-swap:keyframe=1,shape=fist").unwrap(),
            Some(Perturbation::HandshapeSwap {
                keyframe_index: 1,
                replacement_id: "fist".into()
            })
        );
        assert!(matches!(
            parse_error_arg("path-deviation:joint=right-elbow,amplitude=0.5,frequency=1").unwrap(),
            Some(Perturbation::PathDeviation { .. })
        ));
        assert!(matches!(parse_error_arg("jitter:sigma=0.01").unwrap(), Some(Perturbation::Jitter { .. })));
    }

    #[test]
    fn rejects_bad_arguments() {
        for bad in [
            "warp:factor=2",
            "time-warp",
            "time-warp:factor=fast",
            "time-warp:factor=2,extra=1",
            "joint-offset:joint=tail,axis=x,magnitude=1,frames=0-1",
            "joint-offset:joint=head,axis=x,magnitude=1,frames=3",
            "jitter:sigma",
        ] {
            assert!(parse_error_arg(bad).is_err(), "{bad}");
        }
    }
}
