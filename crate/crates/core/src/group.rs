//! Finite group models, subgroups, quotients, characters and Bohr preimages.

use std::collections::VecDeque;
use std::sync::OnceLock;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::subset::Subset;
use crate::Q;

const EXHAUSTIVE_AXIOM_LIMIT: usize = 512;
const SAMPLED_AXIOM_TRIPLES: usize = 1 << 20;
const CACHED_TABLE_LIMIT: usize = 4096;

#[derive(Clone, Debug)]
enum Kind {
    Cyclic(usize),
    Product(Box<GroupModel>, Box<GroupModel>),
    Table(Vec<u32>),
}

/// A finite group on the dense index set `0..N`.
///
/// Cyclic groups multiply by addition mod `n`; products use the row-major
/// pair index `(g, h) -> g * |H| + h`.
#[derive(Clone, Debug)]
pub struct GroupModel {
    label: String,
    order: usize,
    identity: usize,
    abelian: bool,
    kind: Kind,
    inv: Vec<u32>,
    table: OnceLock<Option<Vec<u32>>>,
}

impl PartialEq for GroupModel {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order
            && self.identity == other.identity
            && (0..self.order).all(|a| (0..self.order).all(|b| self.mul(a, b) == other.mul(a, b)))
    }
}

pub fn make_cyclic(n: usize) -> GroupModel {
    assert!(n >= 1, "cyclic group needs n >= 1");
    let inv = (0..n).map(|a| ((n - a) % n) as u32).collect();
    GroupModel {
        label: format!("Z_{n}"),
        order: n,
        identity: 0,
        abelian: true,
        kind: Kind::Cyclic(n),
        inv,
        table: OnceLock::new(),
    }
}

pub fn make_product(g: &GroupModel, h: &GroupModel) -> Result<GroupModel> {
    let order = (g.order as u128) * (h.order as u128);
    if order > u32::MAX as u128 {
        return Err(Error::Overflow(order));
    }
    let order = order as usize;
    let m = h.order;
    let inv = (0..order).map(|i| (g.inv(i / m) * m + h.inv(i % m)) as u32).collect();
    Ok(GroupModel {
        label: format!("{}x{}", g.label, h.label),
        order,
        identity: g.identity * m + h.identity,
        abelian: g.abelian && h.abelian,
        kind: Kind::Product(Box::new(g.clone()), Box::new(h.clone())),
        inv,
        table: OnceLock::new(),
    })
}

/// Product of cyclic groups `Z_{n1} x Z_{n2} x ...`.
pub fn make_torus(dims: &[usize]) -> Result<GroupModel> {
    let mut it = dims.iter();
    let first = it.next().ok_or_else(|| Error::pre("torus needs at least one factor"))?;
    let mut g = make_cyclic(*first);
    for &n in it {
        g = make_product(&g, &make_cyclic(n))?;
    }
    Ok(g)
}

/// Validate a Cayley table (row `a`, column `b` holds `a*b`).
pub fn make_from_table(table: Vec<Vec<usize>>) -> Result<GroupModel> {
    let n = table.len();
    if n == 0 {
        return Err(Error::BadTable("empty table".into()));
    }
    let mut flat = Vec::with_capacity(n * n);
    for (r, row) in table.iter().enumerate() {
        if row.len() != n {
            return Err(Error::BadTable(format!("row {r} has {} entries, expected {n}", row.len())));
        }
        for &v in row {
            if v >= n {
                return Err(Error::BadTable(format!("entry {v} in row {r} out of range")));
            }
            flat.push(v as u32);
        }
    }
    let at = |a: usize, b: usize| flat[a * n + b] as usize;
    let identity = (0..n)
        .find(|&e| (0..n).all(|g| at(e, g) == g && at(g, e) == g))
        .ok_or(Error::AxiomViolation { axiom: "identity", witness: vec![] })?;
    let mut inv = vec![0u32; n];
    for g in 0..n {
        let h = (0..n)
            .find(|&h| at(g, h) == identity && at(h, g) == identity)
            .ok_or(Error::AxiomViolation { axiom: "inverse", witness: vec![g] })?;
        inv[g] = h as u32;
    }
    let assoc = |a: usize, b: usize, c: usize| at(at(a, b), c) == at(a, at(b, c));
    if n <= EXHAUSTIVE_AXIOM_LIMIT {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if !assoc(a, b, c) {
                        return Err(Error::AxiomViolation { axiom: "associativity", witness: vec![a, b, c] });
                    }
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6b656d706c6162);
        for _ in 0..SAMPLED_AXIOM_TRIPLES {
            let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
            if !assoc(a, b, c) {
                return Err(Error::AxiomViolation { axiom: "associativity", witness: vec![a, b, c] });
            }
        }
    }
    let abelian = (0..n).all(|a| (a + 1..n).all(|b| at(a, b) == at(b, a)));
    Ok(GroupModel {
        label: format!("table{n}"),
        order: n,
        identity,
        abelian,
        kind: Kind::Table(flat),
        inv,
        table: OnceLock::new(),
    })
}

/// Symmetric group on three letters.
///
/// Indices: 0 = e, 1 = (123), 2 = (132), 3 = (12), 4 = (13), 5 = (23).
pub fn make_s3() -> GroupModel {
    let perms: [[usize; 3]; 6] = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [2, 1, 0], [0, 2, 1]];
    let find = |p: [usize; 3]| perms.iter().position(|q| *q == p).unwrap();
    // (a*b)(x) = a(b(x)): apply b first.
    let table = (0..6)
        .map(|a| (0..6).map(|b| find([0, 1, 2].map(|x| perms[a][perms[b][x]]))).collect())
        .collect();
    let mut g = make_from_table(table).expect("S3 table is a group");
    g.label = "S_3".into();
    g
}

impl GroupModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn is_abelian(&self) -> bool {
        self.abelian
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        match &self.kind {
            Kind::Cyclic(n) => {
                let s = a + b;
                if s >= *n {
                    s - n
                } else {
                    s
                }
            }
            Kind::Table(t) => t[a * self.order + b] as usize,
            Kind::Product(g, h) => {
                if let Some(Some(t)) = self.table.get() {
                    return t[a * self.order + b] as usize;
                }
                let m = h.order;
                g.mul(a / m, b / m) * m + h.mul(a % m, b % m)
            }
        }
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a] as usize
    }

    /// Precompute a full multiplication table for small product groups.
    pub fn warm(&self) {
        if matches!(self.kind, Kind::Product(..)) {
            self.table.get_or_init(|| {
                (self.order <= CACHED_TABLE_LIMIT).then(|| {
                    let (g, h) = match &self.kind {
                        Kind::Product(g, h) => (g, h),
                        _ => unreachable!(),
                    };
                    let m = h.order;
                    let mut t = Vec::with_capacity(self.order * self.order);
                    for a in 0..self.order {
                        for b in 0..self.order {
                            t.push((g.mul(a / m, b / m) * m + h.mul(a % m, b % m)) as u32);
                        }
                    }
                    t
                })
            });
        }
    }

    pub fn pow(&self, g: usize, k: usize) -> usize {
        let mut acc = self.identity;
        let mut base = g;
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }

    pub fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    pub fn conj(&self, g: usize, h: usize) -> usize {
        self.mul(self.mul(g, h), self.inv(g))
    }

    /// Orders of the cyclic factors when the model is a product of cyclic groups.
    pub fn torus_factors(&self) -> Option<Vec<usize>> {
        match &self.kind {
            Kind::Cyclic(n) => Some(vec![*n]),
            Kind::Product(g, h) => {
                let mut f = g.torus_factors()?;
                f.extend(h.torus_factors()?);
                Some(f)
            }
            Kind::Table(_) => None,
        }
    }

    /// The two factors of a product model.
    pub fn factors(&self) -> Option<(&GroupModel, &GroupModel)> {
        match &self.kind {
            Kind::Product(g, h) => Some((g, h)),
            _ => None,
        }
    }

    pub fn is_table_model(&self) -> bool {
        matches!(self.kind, Kind::Table(_))
    }

    pub fn is_cyclic_model(&self) -> bool {
        matches!(self.kind, Kind::Cyclic(_))
    }

    /// Mixed-radix coordinates of `g` (torus models only).
    pub fn coords(&self, g: usize) -> Option<Vec<usize>> {
        let dims = self.torus_factors()?;
        let mut out = vec![0; dims.len()];
        let mut r = g;
        for (i, d) in dims.iter().enumerate().rev() {
            out[i] = r % d;
            r /= d;
        }
        Some(out)
    }

    pub fn from_coords(&self, c: &[usize]) -> Option<usize> {
        let dims = self.torus_factors()?;
        (dims.len() == c.len()).then(|| c.iter().zip(&dims).fold(0, |acc, (x, d)| acc * d + x % d))
    }

    pub fn check_subset(&self, s: &Subset) -> Result<()> {
        if s.universe() != self.order {
            return Err(Error::ParentMismatch { expected: self.order, got: s.universe() });
        }
        Ok(())
    }

    pub fn left_translate(&self, g: usize, s: &Subset) -> Subset {
        Subset::from_indices(self.order, s.iter().map(|x| self.mul(g, x)))
    }

    pub fn right_translate(&self, s: &Subset, g: usize) -> Subset {
        Subset::from_indices(self.order, s.iter().map(|x| self.mul(x, g)))
    }

    pub fn inverse_set(&self, s: &Subset) -> Subset {
        Subset::from_indices(self.order, s.iter().map(|x| self.inv(x)))
    }

    pub fn measure(&self, s: &Subset) -> Q {
        Q::new(s.len() as i64, self.order as i64)
    }

    /// Least common multiple of all element orders.
    pub fn exponent(&self) -> usize {
        if let Some(f) = self.torus_factors() {
            return f.iter().fold(1, |a, b| a.lcm(b));
        }
        (0..self.order).fold(1, |a, g| a.lcm(&self.element_order(g)))
    }

    /// Exponent of the abelianization `G / [G, G]`.
    pub fn abelian_exponent(&self) -> usize {
        if self.abelian {
            return self.exponent();
        }
        let k = commutator_subgroup(self);
        (0..self.order).fold(1, |acc, g| {
            let mut x = g;
            let mut ord = 1;
            while !k.members.contains(x) {
                x = self.mul(x, g);
                ord += 1;
            }
            acc.lcm(&ord)
        })
    }

    /// Check every group axiom; exhaustive up to 512 elements, sampled above.
    pub fn validate(&self) -> Result<()> {
        let n = self.order;
        for g in 0..n {
            if self.mul(self.identity, g) != g || self.mul(g, self.identity) != g {
                return Err(Error::AxiomViolation { axiom: "identity", witness: vec![g] });
            }
            if self.mul(g, self.inv(g)) != self.identity {
                return Err(Error::AxiomViolation { axiom: "inverse", witness: vec![g] });
            }
        }
        let assoc = |a, b, c| self.mul(self.mul(a, b), c) == self.mul(a, self.mul(b, c));
        if n <= EXHAUSTIVE_AXIOM_LIMIT {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if !assoc(a, b, c) {
                            return Err(Error::AxiomViolation { axiom: "associativity", witness: vec![a, b, c] });
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..SAMPLED_AXIOM_TRIPLES {
                let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                if !assoc(a, b, c) {
                    return Err(Error::AxiomViolation { axiom: "associativity", witness: vec![a, b, c] });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgroup {
    pub members: Subset,
    pub generator: Option<usize>,
}

impl Subgroup {
    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn trivial(g: &GroupModel) -> Subgroup {
        Subgroup { members: Subset::from_indices(g.order(), [g.identity()]), generator: Some(g.identity()) }
    }

    pub fn whole(g: &GroupModel) -> Subgroup {
        Subgroup { members: Subset::full(g.order()), generator: None }
    }

    /// Check closure, identity and inverses.
    pub fn is_subgroup_of(&self, g: &GroupModel) -> bool {
        self.members.contains(g.identity())
            && self.members.iter().all(|a| {
                self.members.contains(g.inv(a)) && self.members.iter().all(|b| self.members.contains(g.mul(a, b)))
            })
    }
}

pub fn cyclic_subgroup(g: &GroupModel, x: usize) -> Subgroup {
    let mut members = Subset::empty(g.order());
    let mut y = g.identity();
    while members.insert(y) {
        y = g.mul(y, x);
    }
    Subgroup { members, generator: Some(x) }
}

/// Subgroup generated by a set of elements.
pub fn generated_subgroup(g: &GroupModel, gens: &[usize]) -> Subgroup {
    let mut members = Subset::from_indices(g.order(), [g.identity()]);
    let mut queue = VecDeque::from([g.identity()]);
    while let Some(x) = queue.pop_front() {
        for &s in gens {
            let y = g.mul(x, s);
            if members.insert(y) {
                queue.push_back(y);
            }
        }
    }
    let generator = match gens {
        [one] => Some(*one),
        _ => None,
    };
    Subgroup { members, generator }
}

pub fn commutator_subgroup(g: &GroupModel) -> Subgroup {
    let n = g.order();
    let mut comms = Subset::empty(n);
    for a in 0..n {
        for b in 0..n {
            comms.insert(g.mul(g.mul(a, b), g.mul(g.inv(a), g.inv(b))));
        }
    }
    let mut s = generated_subgroup(g, &comms.indices());
    s.generator = None;
    s
}

/// First element conjugating `h` off itself, if any.
pub fn normality_witness(g: &GroupModel, h: &Subgroup) -> Option<usize> {
    if g.is_abelian() {
        return None;
    }
    (0..g.order()).find(|&x| h.members.iter().any(|y| !h.members.contains(g.conj(x, y))))
}

/// Quotient by a normal subgroup, with the projection map.
///
/// Coset classes are numbered by their smallest element. When `G` is a
/// product of cyclic groups and `H` is a product of whole coordinate factors,
/// the quotient is built as the product of the remaining factors instead.
pub fn quotient(g: &GroupModel, h: &Subgroup) -> Result<(GroupModel, Vec<usize>)> {
    g.check_subset(&h.members)?;
    if let Some(w) = normality_witness(g, h) {
        return Err(Error::NotNormal(w));
    }
    if let Some(kept) = coordinate_complement(g, h) {
        let dims = g.torus_factors().unwrap();
        let qdims: Vec<usize> = kept.iter().map(|&i| dims[i]).collect();
        let q = if qdims.is_empty() { make_cyclic(1) } else { make_torus(&qdims)? };
        let proj = (0..g.order())
            .map(|x| {
                let c = g.coords(x).unwrap();
                let qc: Vec<usize> = kept.iter().map(|&i| c[i]).collect();
                if qc.is_empty() {
                    0
                } else {
                    q.from_coords(&qc).unwrap()
                }
            })
            .collect();
        return Ok((q, proj));
    }
    let n = g.order();
    let mut proj = vec![usize::MAX; n];
    let mut reps = Vec::new();
    for x in 0..n {
        if proj[x] != usize::MAX {
            continue;
        }
        let id = reps.len();
        reps.push(x);
        for y in h.members.iter() {
            proj[g.mul(x, y)] = id;
        }
    }
    let table = reps.iter().map(|&a| reps.iter().map(|&b| proj[g.mul(a, b)]).collect()).collect();
    let q = make_from_table(table)?.with_label(format!("{}/H{}", g.label(), h.order()));
    Ok((q, proj))
}

/// Indices of the coordinate factors not absorbed by `h`, when `h` is
/// exactly a product of whole coordinate factors of a torus model.
pub fn coordinate_complement(g: &GroupModel, h: &Subgroup) -> Option<Vec<usize>> {
    let dims = g.torus_factors()?;
    let id = vec![0; dims.len()];
    let mut full = vec![false; dims.len()];
    for (i, &d) in dims.iter().enumerate() {
        let mut e = id.clone();
        e[i] = 1 % d;
        full[i] = d > 1 && h.members.contains(g.from_coords(&e)?);
    }
    let expected: usize = dims.iter().zip(&full).map(|(d, f)| if *f { *d } else { 1 }).product();
    if expected != h.order() {
        return None;
    }
    let ok = h.members.iter().all(|x| {
        let c = g.coords(x).unwrap();
        c.iter().zip(&full).all(|(v, f)| *f || *v == 0)
    });
    ok.then(|| (0..dims.len()).filter(|&i| !full[i] && dims[i] > 1).collect())
}

/// A homomorphism into the cyclic group `Z_m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Character {
    pub modulus: usize,
    pub image: Vec<u32>,
    pub surjective: bool,
}

impl Character {
    pub fn new(modulus: usize, image: Vec<u32>) -> Character {
        let mut hit = vec![false; modulus];
        for &v in &image {
            hit[v as usize] = true;
        }
        let surjective = hit.iter().all(|&h| h);
        Character { modulus, image, surjective }
    }

    pub fn eval(&self, g: usize) -> usize {
        self.image[g] as usize
    }

    pub fn is_trivial(&self) -> bool {
        self.image.iter().all(|&v| v == 0)
    }

    pub fn kernel(&self) -> Subset {
        Subset::from_fn(self.image.len(), |g| self.image[g] == 0)
    }

    pub fn is_homomorphism(&self, g: &GroupModel) -> bool {
        let m = self.modulus;
        self.image.len() == g.order()
            && self.eval(g.identity()) == 0
            && (0..g.order()).all(|a| (0..g.order()).all(|b| self.eval(g.mul(a, b)) == (self.eval(a) + self.eval(b)) % m))
    }

    /// Rescale onto the image subgroup, making the character surjective.
    pub fn onto_image(&self) -> Character {
        let step = self.image.iter().fold(self.modulus, |acc, &v| acc.gcd(&(v as usize)));
        let m = self.modulus / step;
        Character::new(m, self.image.iter().map(|&v| v / step as u32).collect())
    }

    /// Pull back along a projection `G -> Q`.
    pub fn compose(&self, proj: &[usize]) -> Character {
        Character::new(self.modulus, proj.iter().map(|&q| self.image[q]).collect())
    }

    /// Multiply by a unit `u` of `Z_m`.
    pub fn scaled(&self, u: usize) -> Character {
        let m = self.modulus as u64;
        Character::new(self.modulus, self.image.iter().map(|&v| ((v as u64 * u as u64) % m) as u32).collect())
    }
}

/// Greedy generating set: repeatedly add the smallest element outside the
/// subgroup generated so far.
pub fn generating_set(g: &GroupModel) -> Vec<usize> {
    let mut gens = Vec::new();
    let mut sub = Subgroup::trivial(g);
    while sub.order() < g.order() {
        let x = (0..g.order()).find(|&x| !sub.members.contains(x)).unwrap();
        gens.push(x);
        sub = generated_subgroup(g, &gens);
    }
    gens
}

/// All homomorphisms `G -> Z_m`.
pub fn enumerate_characters(g: &GroupModel, m: usize) -> Vec<Character> {
    assert!(m >= 1);
    let gens = generating_set(g);
    let options: Vec<Vec<usize>> = gens
        .iter()
        .map(|&s| {
            let o = g.element_order(s);
            (0..m).filter(|r| (r * o) % m == 0).collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut choice = vec![0usize; gens.len()];
    loop {
        let imgs: Vec<usize> = choice.iter().zip(&options).map(|(&c, o)| o[c]).collect();
        if let Some(ch) = extend_character(g, m, &gens, &imgs) {
            out.push(ch);
        }
        let mut i = 0;
        loop {
            if i == gens.len() {
                return out;
            }
            choice[i] += 1;
            if choice[i] < options[i].len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn extend_character(g: &GroupModel, m: usize, gens: &[usize], imgs: &[usize]) -> Option<Character> {
    let n = g.order();
    let mut val = vec![u32::MAX; n];
    val[g.identity()] = 0;
    let mut queue = VecDeque::from([g.identity()]);
    while let Some(x) = queue.pop_front() {
        for (&s, &r) in gens.iter().zip(imgs) {
            let y = g.mul(x, s);
            let v = ((val[x] as usize + r) % m) as u32;
            if val[y] == u32::MAX {
                val[y] = v;
                queue.push_back(y);
            } else if val[y] != v {
                return None;
            }
        }
    }
    Some(Character::new(m, val))
}

/// A cyclic arc `{start, start+1, ..., start+length-1}` in `Z_m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub modulus: usize,
    pub start: usize,
    pub length: usize,
}

impl Arc {
    pub fn new(modulus: usize, start: usize, length: usize) -> Arc {
        assert!(length <= modulus && modulus >= 1);
        Arc { modulus, start: start % modulus, length }
    }

    pub fn contains(&self, r: usize) -> bool {
        (r + self.modulus - self.start) % self.modulus < self.length
    }

    pub fn measure(&self) -> Q {
        Q::new(self.length as i64, self.modulus as i64)
    }

    pub fn residues(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.length).map(|i| (self.start + i) % self.modulus)
    }
}

pub fn bohr_preimage(g: &GroupModel, chi: &Character, arc: &Arc) -> Result<Subset> {
    if chi.modulus != arc.modulus {
        return Err(Error::ModulusMismatch { character: chi.modulus, arc: arc.modulus });
    }
    if chi.image.len() != g.order() {
        return Err(Error::ParentMismatch { expected: g.order(), got: chi.image.len() });
    }
    Ok(Subset::from_fn(g.order(), |x| arc.contains(chi.eval(x))))
}

/// Projection of a torus model onto its first coordinate, as a character.
pub fn first_projection(g: &GroupModel) -> Option<Character> {
    let dims = g.torus_factors()?;
    let image = (0..g.order()).map(|x| g.coords(x).unwrap()[0] as u32).collect();
    Some(Character::new(dims[0], image))
}

/// Left stabilizer `{g : gS = S}`.
pub fn stabilizer(g: &GroupModel, s: &Subset) -> Subgroup {
    let members = Subset::from_fn(g.order(), |x| s.iter().all(|y| s.contains(g.mul(x, y))));
    Subgroup { members, generator: None }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_basics() {
        let z1 = make_cyclic(1);
        assert_eq!(z1.order(), 1);
        assert_eq!(z1.identity(), 0);
        let z6 = make_cyclic(6);
        assert_eq!(z6.mul(2, 5), 1);
        assert_eq!(z6.inv(2), 4);
        let z13 = make_cyclic(13);
        assert!(z13.is_abelian());
        assert_eq!(z13.order(), 13);
        z13.validate().unwrap();
    }

    #[test]
    fn product_orders_and_axioms() {
        let g = make_product(&make_cyclic(12), &make_cyclic(3)).unwrap();
        assert_eq!(g.order(), 36);
        g.validate().unwrap();
        assert_eq!(g.torus_factors(), Some(vec![12, 3]));
        assert_eq!(g.coords(7), Some(vec![2, 1]));
        assert_eq!(g.from_coords(&[2, 1]), Some(7));
        let s = make_s3();
        let p = make_product(&s, &make_cyclic(20)).unwrap();
        assert!(!p.is_abelian());
        p.validate().unwrap();
    }

    #[test]
    fn table_validation() {
        let s3 = make_s3();
        assert!(!s3.is_abelian());
        let z4: Vec<Vec<usize>> = (0..4).map(|a| (0..4).map(|b| (a + b) % 4).collect()).collect();
        assert!(make_from_table(z4).unwrap().is_abelian());
        // a magma with identity and inverses but not associative (the 5-element loop-like table)
        let bad = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        match make_from_table(bad) {
            Err(Error::AxiomViolation { axiom: "associativity", witness }) => {
                let g = |a: usize, b: usize| [[0, 1, 2, 3, 4], [1, 0, 3, 4, 2], [2, 4, 0, 1, 3], [3, 2, 4, 0, 1], [4, 3, 1, 2, 0]][a][b];
                let (a, b, c) = (witness[0], witness[1], witness[2]);
                assert_ne!(g(g(a, b), c), g(a, g(b, c)));
            }
            other => panic!("expected associativity violation, got {other:?}"),
        }
    }

    #[test]
    fn subgroups() {
        let z12 = make_cyclic(12);
        assert_eq!(cyclic_subgroup(&z12, 4).members.indices(), vec![0, 4, 8]);
        assert_eq!(cyclic_subgroup(&z12, 0).order(), 1);
        assert_eq!(cyclic_subgroup(&z12, 5).order(), 12);
        assert!(cyclic_subgroup(&z12, 4).is_subgroup_of(&z12));
    }

    #[test]
    fn quotients() {
        let g = make_torus(&[12, 3]).unwrap();
        let h = Subgroup { members: Subset::from_fn(36, |x| x / 3 == 0), generator: Some(1) };
        let (q, proj) = quotient(&g, &h).unwrap();
        assert_eq!(q, make_cyclic(12));
        assert!((0..36).all(|x| proj[x] == x / 3));
        let (q, _) = quotient(&g, &Subgroup::trivial(&g)).unwrap();
        assert_eq!(q.order(), 36);
        let s3 = make_s3();
        let a3 = cyclic_subgroup(&s3, 1);
        let (q, proj) = quotient(&s3, &a3).unwrap();
        assert_eq!(q.order(), 2);
        assert!((0..6).all(|x| q.mul(proj[x], proj[x]) == q.identity()));
        let not_normal = cyclic_subgroup(&s3, 3);
        assert!(matches!(quotient(&s3, &not_normal), Err(Error::NotNormal(_))));
    }

    #[test]
    fn characters() {
        let z13 = make_cyclic(13);
        let chars = enumerate_characters(&z13, 13);
        assert_eq!(chars.len(), 13);
        assert!(chars.iter().all(|c| c.is_homomorphism(&z13)));
        let g = make_torus(&[4, 6]).unwrap();
        let one = enumerate_characters(&g, 1);
        assert_eq!(one.len(), 1);
        assert!(one[0].is_trivial());
        let s3 = make_s3();
        let c3 = enumerate_characters(&s3, 3);
        assert_eq!(c3.len(), 1);
        assert!(c3[0].is_trivial());
        assert_eq!(enumerate_characters(&s3, 2).len(), 2);
        assert_eq!(s3.abelian_exponent(), 2);
        assert_eq!(make_torus(&[48, 5]).unwrap().abelian_exponent(), 240);
    }

    #[test]
    fn bohr_sets() {
        let g = make_torus(&[48, 5]).unwrap();
        let chi = first_projection(&g).unwrap();
        let a = bohr_preimage(&g, &chi, &Arc::new(48, 0, 10)).unwrap();
        assert_eq!(a.measure(), Q::new(10, 48));
        assert_eq!(bohr_preimage(&g, &chi, &Arc::new(48, 5, 48)).unwrap().len(), 240);
        assert!(bohr_preimage(&g, &chi, &Arc::new(48, 5, 0)).unwrap().is_empty());
        assert!(bohr_preimage(&g, &chi, &Arc::new(47, 0, 3)).is_err());
    }
}
