//! Text forms of velocity fields, backgrounds and vortex lists used in
//! config values.

use osgood_core::euler2d::{breakdown_vortex, loglog_vortex};
use osgood_core::field::Point;
use osgood_core::flow::AnalyticField;
use osgood_core::profile::SingularProfile;
use osgood_core::transport::Background;

use crate::error::{Error, Result};

fn numbers(s: &str, what: &str, count: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("{what} {s:?}: {e}")))?;
    if v.len() != count || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{what} {s:?} needs {count} finite numbers")));
    }
    Ok(v)
}

/// `zero`, `hyperbolic`, `rotation[:omega]` or `bahouri-chemin[:K]`.
pub fn analytic_field(s: &str) -> Result<AnalyticField> {
    let t = s.trim().to_ascii_lowercase();
    let (name, arg) = match t.split_once(':') {
        Some((a, b)) => (a.to_string(), Some(b.to_string())),
        None => (t.clone(), None),
    };
    match (name.as_str(), arg) {
        ("zero", None) => Ok(AnalyticField::Zero),
        ("hyperbolic", None) => Ok(AnalyticField::Hyperbolic),
        ("rotation", a) => {
            let om = match a {
                Some(a) => numbers(&a, "rotation rate", 1)?[0],
                None => 1.0,
            };
            Ok(AnalyticField::rotation(om))
        }
        ("bahouri-chemin", a) => {
            let k = match a {
                Some(a) => a
                    .trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Config(format!("truncation in {s:?}: {e}")))?,
                None => 64,
            };
            if k == 0 {
                return Err(Error::Config("Bahouri-Chemin truncation must be positive".into()));
            }
            Ok(AnalyticField::BahouriChemin { k })
        }
        _ => Err(Error::Config(format!("unknown velocity field {s:?}"))),
    }
}

/// `zero`, `sign`, `patch:cx,cy,radius,amplitude` or
/// `gaussian:cx,cy,amplitude,width`.
pub fn background(s: &str) -> Result<Background> {
    let t = s.trim().to_ascii_lowercase();
    match t.split_once(':') {
        None if t == "zero" => Ok(Background::Zero),
        None if t == "sign" => Ok(Background::Sign),
        Some(("patch", a)) => {
            let v = numbers(a, "patch", 4)?;
            Ok(Background::Patch {
                center: [v[0], v[1]],
                radius: v[2],
                amplitude: v[3],
            })
        }
        Some(("gaussian", a)) => {
            let v = numbers(a, "gaussian", 4)?;
            Ok(Background::Gaussian {
                center: [v[0], v[1]],
                amplitude: v[2],
                width: v[3],
            })
        }
        _ => Err(Error::Config(format!("unknown background {s:?}"))),
    }
}

/// Semicolon-separated `gamma@x,y[:loglog|breakdown]`.
pub fn vortex_list(s: &str) -> Result<Vec<SingularProfile>> {
    s.split(';')
        .filter(|v| !v.trim().is_empty())
        .map(|v| {
            let (head, kind) = match v.split_once(':') {
                Some((h, k)) => (h, k.trim().to_ascii_lowercase()),
                None => (v, "loglog".to_string()),
            };
            let (g, c) = head
                .split_once('@')
                .ok_or_else(|| Error::Config(format!("vortex {v:?} must read gamma@x,y")))?;
            let gamma = numbers(g, "vortex strength", 1)?[0];
            let c = numbers(c, "vortex center", 2)?;
            let center: Point = [c[0], c[1]];
            let p = match kind.as_str() {
                "loglog" => loglog_vortex(center, gamma),
                "breakdown" => breakdown_vortex(center, gamma),
                _ => return Err(Error::Config(format!("unknown vortex profile {kind:?}"))),
            };
            p.map_err(|e| Error::Config(format!("vortex {v:?}: {e}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fields() {
        assert!(matches!(analytic_field("Hyperbolic").unwrap(), AnalyticField::Hyperbolic));
        assert!(matches!(
            analytic_field("bahouri-chemin:15").unwrap(),
            AnalyticField::BahouriChemin { k: 15 }
        ));
        assert!(matches!(
            analytic_field("rotation:0.5").unwrap(),
            AnalyticField::RigidRotation { omega, .. } if omega == 0.5
        ));
        assert!(analytic_field("shear").is_err());
        assert!(analytic_field("bahouri-chemin:0").is_err());
    }

    #[test]
    fn backgrounds() {
        assert!(matches!(background("patch:0,0,0.2,0.5").unwrap(), Background::Patch { radius, .. } if radius == 0.2));
        assert!(background("patch:0,0,0.2").is_err());
        assert!(matches!(background("sign").unwrap(), Background::Sign));
    }

    #[test]
    fn vortices() {
        let v = vortex_list("1@3,3; -0.5@1,2:breakdown").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[1].gamma, -0.5);
        assert!(vortex_list("1@3").is_err());
        assert!(vortex_list("1@3,3:patch").is_err());
    }
}
