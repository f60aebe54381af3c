//! Principal typings over the universal lattice of variable sets.
//!
//! Typing a command from the environment that maps every variable to its own
//! singleton yields the dependency sets `Δ_C`. Every typing in every other
//! lattice can be read off from them through the Galois connection
//! ([`alpha`], [`gamma`]) determined by a concrete environment.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lang::Command;
use crate::lattice::{Elem, Lattice, VarSet};
use crate::typing::{spc, TypeEnv};

/// The pair `⟨Δ₀, Δ_C⟩` for a fixed command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrincipalTyping {
    pub universe: Vec<String>,
    pub delta0: TypeEnv,
    pub delta_c: TypeEnv,
}

impl PrincipalTyping {
    pub fn lattice(&self) -> &Arc<Lattice> {
        self.delta0.lattice()
    }

    /// `Δ_C(x)` as a set of variable names.
    pub fn dependencies(&self, var: &str) -> Result<VarSet> {
        let e = self.delta_c.get(var)?;
        Ok(self.lattice().set_of(e).expect("principal typings live in a powerset lattice"))
    }

    fn require_universe(&self, env: &TypeEnv) -> Result<()> {
        if env.vars().eq(self.universe.iter().map(String::as_str)) {
            Ok(())
        } else {
            Err(Error::DomainMismatch(format!(
                "environment over [{}] but principal typing over [{}]",
                env.vars().collect::<Vec<_>>().join(", "),
                self.universe.join(", ")
            )))
        }
    }
}

/// The environment mapping each variable to its own singleton.
pub fn delta0(lattice: &Arc<Lattice>) -> Result<TypeEnv> {
    let universe = lattice
        .universe()
        .ok_or_else(|| Error::DomainMismatch(format!("`{}` is not a powerset lattice", lattice.name())))?;
    let mut bindings = Vec::with_capacity(universe.len());
    for v in universe {
        let e = lattice.elem_of_set(&BTreeSet::from([v.clone()]))?;
        bindings.push((v.clone(), e));
    }
    Ok(TypeEnv::new(lattice.clone(), bindings))
}

/// Computes the principal typing of `c` over the given variable universe.
pub fn principal<S: Into<String>>(c: &Command, universe: impl IntoIterator<Item = S>) -> Result<PrincipalTyping> {
    let universe: BTreeSet<String> = universe.into_iter().map(Into::into).collect();
    if let Some(missing) = c.floating_vars().into_iter().find(|v| !universe.contains(v)) {
        return Err(Error::UndeclaredVariable(missing));
    }
    let lattice = Arc::new(Lattice::powerset(universe.iter().cloned())?);
    let delta0 = delta0(&lattice)?;
    let delta_c = spc(lattice.bottom(), &delta0, c)?;
    Ok(PrincipalTyping {
        universe: universe.into_iter().collect(),
        delta0,
        delta_c,
    })
}

/// `α_Γ(X) = ⊔_{x∈X} Γ(x)`.
pub fn alpha(env: &TypeEnv, set: &VarSet) -> Result<Elem> {
    let lat = env.lattice();
    let mut acc = lat.bottom();
    for x in set {
        acc = lat.join(acc, env.get(x)?);
    }
    Ok(acc)
}

/// `γ_Γ(t) = {x | Γ(x) ⊑ t}`.
pub fn gamma(env: &TypeEnv, t: Elem) -> Result<VarSet> {
    let lat = env.lattice();
    if !lat.contains(t) {
        return Err(Error::UnknownElement(format!("#{}", t.raw())));
    }
    Ok(env
        .iter()
        .filter(|&(_, e)| lat.leq(e, t))
        .map(|(x, _)| x.to_string())
        .collect())
}

/// The least post-environment for `env`, read off the principal typing:
/// `Γ'(x) = ⊔_{y ∈ Δ_C(x)} Γ(y)`.
pub fn derive_smallest(pt: &PrincipalTyping, env: &TypeEnv) -> Result<TypeEnv> {
    pt.require_universe(env)?;
    let mut bindings = Vec::with_capacity(pt.universe.len());
    for x in &pt.universe {
        bindings.push((x.clone(), alpha(env, &pt.dependencies(x)?)?));
    }
    Ok(TypeEnv::new(env.lattice().clone(), bindings))
}

/// The greatest pre-environment for a given post-environment:
/// `Γ(x) = ⊓{Γ'(y) | x ∈ Δ_C(y)}`, top when `x` occurs in no `Δ_C(y)`.
pub fn derive_greatest(pt: &PrincipalTyping, post: &TypeEnv) -> Result<TypeEnv> {
    pt.require_universe(post)?;
    let lat = post.lattice();
    let mut users: BTreeMap<&str, Vec<Elem>> = pt.universe.iter().map(|x| (x.as_str(), Vec::new())).collect();
    for y in &pt.universe {
        let bound = post.get(y)?;
        for x in pt.dependencies(y)? {
            if let Some(v) = users.get_mut(x.as_str()) {
                v.push(bound);
            }
        }
    }
    let bindings = users
        .into_iter()
        .map(|(x, bounds)| (x.to_string(), lat.meet_all(bounds)));
    Ok(TypeEnv::new(lat.clone(), bindings))
}

/// Decides whether typing `first = ⟨Γ₁, Γ'₁⟩` subsumes `second = ⟨Γ₂, Γ'₂⟩`
/// (possibly over different lattices): every dependency pair permitted by the
/// first is permitted by the second.
pub fn subsumes(first: (&TypeEnv, &TypeEnv), second: (&TypeEnv, &TypeEnv)) -> Result<bool> {
    let (g1, g1p) = first;
    let (g2, g2p) = second;
    let same = g1.same_domain(g1p) && g1.same_domain(g2) && g1.same_domain(g2p);
    if !same {
        return Err(Error::DomainMismatch("typings range over different variables".into()));
    }
    let (l1, l2) = (g1.lattice(), g2.lattice());
    if **l1 != **g1p.lattice() || **l2 != **g2p.lattice() {
        return Err(Error::DomainMismatch("a typing mixes two lattices".into()));
    }
    for (x, a1) in g1.iter() {
        let a2 = g2.get(x)?;
        for (y, b1) in g1p.iter() {
            if l1.leq(a1, b1) && !l2.leq(a2, g2p.get(y)?) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The independence view `∇(x) = Var − Δ(x)` of a dependency environment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependenceEnv {
    pub universe: Vec<String>,
    pub map: BTreeMap<String, VarSet>,
}

impl IndependenceEnv {
    /// Pointwise reverse inclusion.
    pub fn preceq(&self, other: &IndependenceEnv) -> bool {
        self.map
            .iter()
            .all(|(k, a)| other.map.get(k).is_some_and(|b| a.is_superset(b)))
    }
}

pub fn to_independence(d: &TypeEnv) -> Result<IndependenceEnv> {
    let lat = d.lattice();
    let universe = lat
        .universe()
        .ok_or_else(|| Error::DomainMismatch(format!("`{}` is not a powerset lattice", lat.name())))?;
    let map = d
        .iter()
        .map(|(x, e)| {
            let deps = lat.set_of(e).unwrap_or_default();
            let set = universe.iter().filter(|v| !deps.contains(*v)).cloned().collect();
            (x.to_string(), set)
        })
        .collect();
    Ok(IndependenceEnv {
        universe: universe.to_vec(),
        map,
    })
}

pub fn from_independence(n: &IndependenceEnv) -> Result<TypeEnv> {
    let lattice = Arc::new(Lattice::powerset(n.universe.iter().cloned())?);
    let all: VarSet = n.universe.iter().cloned().collect();
    let mut bindings = Vec::with_capacity(n.map.len());
    for (x, indep) in &n.map {
        let deps: VarSet = all.difference(indep).cloned().collect();
        bindings.push((x.clone(), lattice.elem_of_set(&deps)?));
    }
    Ok(TypeEnv::new(lattice, bindings))
}
