//! Hand-encoded example models: a three-variable chain and the epidemic
//! family (individuals who travel, get sick and are treated with one of two
//! medications, all linked to a shared `Epid` variable).

use crate::model::{BackgroundKnowledge, FactorGraph, FactorGraphBuilder};

/// Table shared by both factors of the chain; symmetric in its arguments.
pub const CHAIN_TABLE: [f64; 4] = [1.0, 2.0, 2.0, 1.0];

pub const EPID_PRIOR: [f64; 2] = [1.2, 0.8];
/// `(Epid, Travel, Sick)`
pub const TRAVEL_SICK: [f64; 8] = [0.9, 1.7, 2.3, 0.4, 1.1, 3.2, 0.6, 2.8];
/// `(Treat, Sick, Epid)`
pub const TREAT: [f64; 8] = [1.5, 0.8, 2.1, 0.3, 0.7, 1.9, 2.6, 1.2];
/// `(Travel)`
pub const TRAVEL: [f64; 2] = [0.35, 1.65];

pub const TRAVEL_SICK_ALT: [f64; 8] = [2.2, 0.5, 1.4, 3.1, 0.9, 1.6, 0.2, 1.8];
pub const TREAT_ALT: [f64; 8] = [0.6, 2.4, 1.3, 1.7, 3.0, 0.4, 1.1, 0.9];
pub const TRAVEL_ALT: [f64; 2] = [1.45, 0.55];

/// `A - f1 - B - f2 - C` with both factors holding `table`.
pub fn chain(table: [f64; 4]) -> FactorGraph {
    FactorGraph::builder()
        .boolean("A")
        .boolean("B")
        .boolean("C")
        .known("f1", &["A", "B"], &table)
        .known("f2", &["B", "C"], &table)
        .build()
}

/// Which tables an individual's factors carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tables {
    Main,
    Alt,
    Unknown,
}

#[derive(Debug, Clone, Copy)]
pub struct Person<'a> {
    pub name: &'a str,
    pub travel_sick: Tables,
    pub treat: Tables,
    pub travel: Tables,
}

impl<'a> Person<'a> {
    pub fn uniform(name: &'a str, t: Tables) -> Self {
        Self {
            name,
            travel_sick: t,
            treat: t,
            travel: t,
        }
    }
}

pub const MEDICATIONS: [&str; 2] = ["m1", "m2"];

fn add(
    b: FactorGraphBuilder,
    id: &str,
    args: &[&str],
    t: Tables,
    main: &[f64],
    alt: &[f64],
) -> FactorGraphBuilder {
    match t {
        Tables::Main => b.known(id, args, main),
        Tables::Alt => b.known(id, args, alt),
        Tables::Unknown => b.unknown(id, args),
    }
}

/// Epidemic model over the given people. Factor ids are
/// `f1.<name>`, `f2.<name>.<med>` and `f3.<name>`, plus the prior `f0`.
pub fn epidemic(people: &[Person]) -> FactorGraph {
    let mut b = FactorGraph::builder()
        .boolean("Epid")
        .known("f0", &["Epid"], &EPID_PRIOR);
    for p in people {
        let travel = format!("Travel.{}", p.name);
        let sick = format!("Sick.{}", p.name);
        b = b.boolean(&travel).boolean(&sick);
        b = add(
            b,
            &format!("f1.{}", p.name),
            &["Epid", &travel, &sick],
            p.travel_sick,
            &TRAVEL_SICK,
            &TRAVEL_SICK_ALT,
        );
        for m in MEDICATIONS {
            let treat = format!("Treat.{}.{m}", p.name);
            b = b.boolean(&treat);
            b = add(
                b,
                &format!("f2.{}.{m}", p.name),
                &[&treat, &sick, "Epid"],
                p.treat,
                &TREAT,
                &TREAT_ALT,
            );
        }
        b = add(
            b,
            &format!("f3.{}", p.name),
            &[&travel],
            p.travel,
            &TRAVEL,
            &TRAVEL_ALT,
        );
    }
    b.build()
}

/// alice and bob, everything known.
pub fn epidemic_known() -> FactorGraph {
    epidemic(&[
        Person::uniform("alice", Tables::Main),
        Person::uniform("bob", Tables::Main),
    ])
}

/// alice and bob plus eve, whose factors are all unknown.
pub fn epidemic_new_individual() -> FactorGraph {
    epidemic(&[
        Person::uniform("alice", Tables::Main),
        Person::uniform("bob", Tables::Main),
        Person::uniform("eve", Tables::Unknown),
    ])
}

/// alice and bob on the main tables, dave on the alternative tables, and
/// eve with alternative travel tables but unknown treatment factors.
pub fn epidemic_two_groups() -> FactorGraph {
    epidemic(&[
        Person::uniform("alice", Tables::Main),
        Person::uniform("bob", Tables::Main),
        Person::uniform("dave", Tables::Alt),
        Person {
            name: "eve",
            travel_sick: Tables::Alt,
            treat: Tables::Unknown,
            travel: Tables::Alt,
        },
    ])
}

/// Factor ownership for eve and dave in [`epidemic_two_groups`].
pub fn epidemic_two_groups_background() -> BackgroundKnowledge {
    let own = |name: &str| {
        let mut v = vec![format!("f1.{name}"), format!("f3.{name}")];
        v.extend(MEDICATIONS.iter().map(|m| format!("f2.{name}.{m}")));
        v
    };
    BackgroundKnowledge::new()
        .with_individual("eve", own("eve"))
        .with_individual("dave", own("dave"))
}
