//! Named models used by the CLI and the Python bindings.

use std::str::FromStr;

use serde::Serialize;

use crate::barrier::BarrierSpec;
use crate::elastic::PermutationCoin;
use crate::error::{Error, Result};
use crate::lattice::CoinField;
use crate::shape::{make_corner_family, make_shape_family, CornerFamily, CornerPreset, ShapeFamily, Weave};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Free,
    Corner,
    OneCorner,
    OpenCorner,
    PhaseCorner,
    BarrierTrivial,
    BarrierRandom,
    ShapeTrivial,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Free,
        Preset::Corner,
        Preset::OneCorner,
        Preset::OpenCorner,
        Preset::PhaseCorner,
        Preset::BarrierTrivial,
        Preset::BarrierRandom,
        Preset::ShapeTrivial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Free => "free",
            Preset::Corner => "corner",
            Preset::OneCorner => "one-corner",
            Preset::OpenCorner => "open-corner",
            Preset::PhaseCorner => "phase-corner",
            Preset::BarrierTrivial => "barrier-trivial",
            Preset::BarrierRandom => "barrier-random",
            Preset::ShapeTrivial => "shape-trivial",
        }
    }

    pub fn corner_preset(self) -> Option<CornerPreset> {
        match self {
            Preset::Corner => Some(CornerPreset::Unperturbed),
            Preset::OneCorner => Some(CornerPreset::OneCorner),
            Preset::OpenCorner => Some(CornerPreset::OpenCorner),
            Preset::PhaseCorner => Some(CornerPreset::PhaseCorner),
            _ => None,
        }
    }

    pub fn uses_eps(self) -> bool {
        matches!(self, Preset::OneCorner | Preset::OpenCorner | Preset::PhaseCorner | Preset::ShapeTrivial)
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Preset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown preset '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PresetParams {
    pub m0: i64,
    pub n0: i64,
    #[serde(rename = "M0")]
    pub big_m0: i64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for PresetParams {
    fn default() -> Self {
        PresetParams { m0: 2, n0: 2, big_m0: 1, eps: 0.0, seed: 1 }
    }
}

/// A preset instantiated at concrete parameters.
#[derive(Clone, Debug)]
pub struct Model {
    pub preset: Preset,
    pub coin: CoinField,
    pub corner: Option<CornerFamily>,
    pub barrier: Option<BarrierSpec>,
    pub shape: Option<ShapeFamily>,
}

impl Model {
    pub fn elastic(&self) -> Option<PermutationCoin> {
        PermutationCoin::from_coin_field(&self.coin)
    }
}

pub fn build(preset: Preset, p: &PresetParams) -> Result<Model> {
    if !(0.0..=1.0).contains(&p.eps) {
        return Err(Error::InvalidParameter(format!("eps must lie in [0, 1], got {}", p.eps)));
    }
    let mut model = Model { preset, coin: CoinField::free(1), corner: None, barrier: None, shape: None };
    if let Some(cp) = preset.corner_preset() {
        let fam = make_corner_family(p.m0, p.n0, p.eps, cp)?;
        model.coin = fam.coin_field();
        model.corner = Some(fam);
        return Ok(model);
    }
    match preset {
        Preset::Free => model.coin = CoinField::new(p.big_m0)?,
        Preset::BarrierTrivial | Preset::BarrierRandom | Preset::ShapeTrivial => {
            let spec = if preset == Preset::BarrierRandom {
                BarrierSpec::random_interior(p.big_m0, p.seed)?
            } else {
                BarrierSpec::trivial(p.big_m0)?
            };
            if preset == Preset::ShapeTrivial {
                let fam = make_shape_family(&spec, p.eps, Weave::Full)?;
                model.coin = fam.coin_field();
                model.shape = Some(fam);
            } else {
                model.coin = spec.coin_field();
            }
            model.barrier = Some(spec);
        }
        _ => unreachable!("corner presets handled above"),
    }
    Ok(model)
}
