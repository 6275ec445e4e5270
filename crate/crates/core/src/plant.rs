//! Planted Bohr pairs on torus models and their perturbations.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{bohr_preimage, first_projection, make_torus, Arc, Character, GroupModel};
use crate::subset::Subset;

#[derive(Clone, Debug)]
pub struct Planted {
    pub group: GroupModel,
    pub chi: Character,
    pub arc_a: Arc,
    pub arc_b: Arc,
    pub a: Subset,
    pub b: Subset,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantSpec {
    pub dims: Vec<usize>,
    pub len_a: usize,
    pub len_b: usize,
    #[serde(default)]
    pub noise: usize,
}

/// `χ⁻¹[0, len_a)` and `χ⁻¹[0, len_b)` for the first-coordinate projection.
pub fn plant(dims: &[usize], len_a: usize, len_b: usize) -> Result<Planted> {
    let group = make_torus(dims)?;
    let chi = first_projection(&group).ok_or_else(|| Error::pre("planting needs a torus model"))?;
    if len_a == 0 || len_b == 0 || len_a + len_b > chi.modulus {
        return Err(Error::OutOfRange(format!("arc lengths {len_a}, {len_b} on Z_{}", chi.modulus)));
    }
    let arc_a = Arc::new(chi.modulus, 0, len_a);
    let arc_b = Arc::new(chi.modulus, 0, len_b);
    let a = bohr_preimage(&group, &chi, &arc_a)?;
    let b = bohr_preimage(&group, &chi, &arc_b)?;
    Ok(Planted { group, chi, arc_a, arc_b, a, b })
}

pub fn plant_spec(spec: &PlantSpec) -> Result<Planted> {
    let mut p = plant(&spec.dims, spec.len_a, spec.len_b)?;
    p.a = move_cells(&p.group, &p.chi, &p.a, &p.arc_a, spec.noise)?;
    Ok(p)
}

fn column(g: &GroupModel, chi: &Character, c: usize) -> Vec<usize> {
    (0..g.order()).filter(|&x| chi.eval(x) == c).collect()
}

/// Move `k` cells out of distinct interior columns of the arc, alternating
/// between the two columns just outside it (two per column at most).
pub fn move_cells(g: &GroupModel, chi: &Character, s: &Subset, arc: &Arc, k: usize) -> Result<Subset> {
    let m = chi.modulus;
    if k > 4 || (k > 0 && arc.length < k + 2) || arc.length + 2 > m {
        return Err(Error::OutOfRange(format!("cannot move {k} cells around an arc of length {}", arc.length)));
    }
    let mut out = s.clone();
    let after = (arc.start + arc.length) % m;
    let before = (arc.start + m - 1) % m;
    for i in 0..k {
        let src = column(g, chi, (arc.start + 1 + i) % m);
        let x = *src.iter().find(|&&x| out.contains(x)).ok_or_else(|| Error::pre("source column is empty"))?;
        let dst = column(g, chi, if i % 2 == 0 { after } else { before });
        let y = *dst.iter().find(|&&y| !out.contains(y)).ok_or_else(|| Error::pre("target column is full"))?;
        out.remove(x);
        out.insert(y);
    }
    Ok(out)
}

/// Remove `removals` random members and add `additions` random cells from
/// the two columns bordering the arc.
pub fn random_noise<R: Rng>(
    g: &GroupModel,
    chi: &Character,
    s: &Subset,
    arc: &Arc,
    removals: usize,
    additions: usize,
    rng: &mut R,
) -> Subset {
    let m = chi.modulus;
    let mut out = s.clone();
    let members = s.indices();
    for &x in members.choose_multiple(rng, removals.min(members.len())) {
        out.remove(x);
    }
    let border: Vec<usize> = [(arc.start + arc.length) % m, (arc.start + m - 1) % m]
        .iter()
        .flat_map(|&c| column(g, chi, c))
        .filter(|&y| !s.contains(y))
        .collect();
    for &y in border.choose_multiple(rng, additions.min(border.len())) {
        out.insert(y);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::deficit;
    use crate::Q;

    #[test]
    fn planted_deficit() {
        let p = plant(&[48, 5], 10, 12).unwrap();
        assert_eq!((p.a.len(), p.b.len()), (50, 60));
        let r = deficit(&p.group, &p.a, &p.b).unwrap();
        assert_eq!(r.deficit, Q::new(-1, 48));
        assert_eq!(r.excess, Q::from_integer(0));
    }

    #[test]
    fn noise_moves_cells() {
        let p = plant(&[48, 5], 10, 12).unwrap();
        for k in 0..=4 {
            let a = move_cells(&p.group, &p.chi, &p.a, &p.arc_a, k).unwrap();
            assert_eq!(a.len(), 50);
            assert_eq!(a.symmetric_difference(&p.a).len(), 2 * k);
        }
        let one = move_cells(&p.group, &p.chi, &p.a, &p.arc_a, 1).unwrap();
        assert_eq!(deficit(&p.group, &one, &p.b).unwrap().excess, Q::new(5, 240));
        assert!(move_cells(&p.group, &p.chi, &p.a, &p.arc_a, 5).is_err());
    }
}
