//! The domino tiling reduction: domino systems become sentences of the
//! fragment with two freely usable linear orders, together with finite
//! expanded-grid fragments and tiling checks at desk scale.

use std::collections::BTreeMap;
use itertools::Itertools;
use thiserror::Error;

use crate::formula::Formula;
use crate::structures::{model_check, Assignment, Element, FiniteStructure};
use crate::vocab::Vocabulary;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error("domino systems need at least one tile")]
    EmptyTiles,
    #[error("unknown tile `{0}`")]
    UnknownTile(String),
    #[error("labeling misses cell ({0},{1})")]
    PartialLabeling(usize, usize),
    #[error("format: {0}")]
    Format(String),
}

/// A domino system: tiles with horizontal and vertical adjacency sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominoSystem {
    pub tiles: Vec<String>,
    pub horizontal: Vec<(usize, usize)>,
    pub vertical: Vec<(usize, usize)>,
}

impl DominoSystem {
    pub fn new(
        tiles: Vec<String>,
        horizontal: Vec<(usize, usize)>,
        vertical: Vec<(usize, usize)>,
    ) -> Result<DominoSystem, ReductionError> {
        if tiles.is_empty() {
            return Err(ReductionError::EmptyTiles);
        }
        Ok(DominoSystem {
            tiles,
            horizontal,
            vertical,
        })
    }

    pub fn tile_index(&self, name: &str) -> Result<usize, ReductionError> {
        self.tiles
            .iter()
            .position(|t| t == name)
            .ok_or_else(|| ReductionError::UnknownTile(name.to_string()))
    }

    fn predicate(&self, d: usize) -> String {
        format!("P_{}", self.tiles[d])
    }
}

/// Text format: `tiles: a b c`, `H: (a,b) (b,c)`, `V: (a,a)`.
pub fn read_domino_system(text: &str) -> Result<DominoSystem, ReductionError> {
    let mut tiles = Vec::new();
    let mut horizontal = Vec::new();
    let mut vertical = Vec::new();
    for raw in text.lines() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| ReductionError::Format(format!("expected `key: ...` in `{line}`")))?;
        match key.trim() {
            "tiles" => {
                tiles = rest.split_whitespace().map(|s| s.to_string()).collect();
            }
            dir @ ("H" | "V") => {
                let mut pairs = Vec::new();
                let mut rest = rest.trim();
                while !rest.is_empty() {
                    if !rest.starts_with('(') {
                        return Err(ReductionError::Format(format!(
                            "expected `(` near `{rest}`"
                        )));
                    }
                    let close = rest
                        .find(')')
                        .ok_or_else(|| ReductionError::Format("unclosed pair".into()))?;
                    let body = &rest[1..close];
                    let (a, b) = body.split_once(',').ok_or_else(|| {
                        ReductionError::Format(format!("bad pair `({body})`"))
                    })?;
                    pairs.push((a.trim().to_string(), b.trim().to_string()));
                    rest = rest[close + 1..].trim_start();
                }
                let sys = DominoSystem {
                    tiles: tiles.clone(),
                    horizontal: vec![],
                    vertical: vec![],
                };
                let resolved: Result<Vec<(usize, usize)>, _> = pairs
                    .iter()
                    .map(|(a, b)| Ok((sys.tile_index(a)?, sys.tile_index(b)?)))
                    .collect();
                if dir == "H" {
                    horizontal = resolved?;
                } else {
                    vertical = resolved?;
                }
            }
            other => {
                return Err(ReductionError::Format(format!("unknown key `{other}`")));
            }
        }
    }
    DominoSystem::new(tiles, horizontal, vertical)
}

pub fn write_domino_system(sys: &DominoSystem) -> String {
    let pair_list = |pairs: &[(usize, usize)]| {
        pairs
            .iter()
            .map(|&(a, b)| format!("({},{})", sys.tiles[a], sys.tiles[b]))
            .join(" ")
    };
    format!(
        "tiles: {}\nH: {}\nV: {}\n",
        sys.tiles.join(" "),
        pair_list(&sys.horizontal),
        pair_list(&sys.vertical)
    )
}

fn lt(order: &str, a: &str, b: &str) -> Formula {
    Formula::atom(order, &[a, b])
}

/// `x = y | x <i y`.
fn leq(order: &str, a: &str, b: &str) -> Formula {
    Formula::or(Formula::eq(a, b), lt(order, a, b))
}

/// The successor-separation helper: `x <i y & (z <=i x | y <=i z)`.
fn sigma(order: &str, x: &str, y: &str, z: &str) -> Formula {
    Formula::and(
        lt(order, x, y),
        Formula::or(leq(order, z, x), leq(order, y, z)),
    )
}

/// `forall z . sigma_i(x, y, z)`.
fn beta(order: &str, x: &str, y: &str) -> Formula {
    Formula::forall(&["z"], sigma(order, x, y, "z"))
}

/// The grid axioms: successors exist, the two adjacency relations follow
/// the induced successors of the two orders, and the quaternary relation
/// ties quasi-squares together.
pub fn grid_axioms() -> Formula {
    let eta_g = Formula::forall(
        &["x"],
        Formula::and(
            Formula::exists(&["y"], Formula::atom("H", &["x", "y"])),
            Formula::exists(&["y"], Formula::atom("V", &["x", "y"])),
        ),
    );
    let eta_h = Formula::forall(
        &["x", "y", "z"],
        Formula::implies(Formula::atom("H", &["x", "y"]), sigma("<1", "x", "y", "z")),
    );
    let eta_v = Formula::forall(
        &["x", "y", "z"],
        Formula::implies(Formula::atom("V", &["x", "y"]), sigma("<2", "x", "y", "z")),
    );
    let eta_ne = Formula::forall(
        &["x"],
        Formula::exists(&["y", "z", "t"], Formula::atom("N", &["x", "y", "z", "t"])),
    );
    let eta_na = Formula::forall(
        &["x", "y", "z", "t", "u"],
        Formula::implies(
            Formula::atom("N", &["x", "y", "z", "t"]),
            Formula::conjoin(
                vec![
                    sigma("<1", "x", "y", "u"),
                    sigma("<2", "x", "t", "u"),
                    sigma("<2", "y", "z", "u"),
                    sigma("<1", "t", "z", "u"),
                ],
                "x",
            ),
        ),
    );
    Formula::conjoin(vec![eta_g, eta_h, eta_v, eta_ne, eta_na], "x")
}

/// The tiling-correctness sentence for a system: every point carries
/// exactly one tile and adjacent points carry allowed tile pairs.
pub fn tiling_formula(sys: &DominoSystem) -> Formula {
    let one_tile = {
        let some = Formula::disjoin(
            (0..sys.tiles.len())
                .map(|d| Formula::atom(sys.predicate(d), &["x"]))
                .collect(),
            "x",
        );
        let mut unique = Vec::new();
        for d in 0..sys.tiles.len() {
            for d2 in (d + 1)..sys.tiles.len() {
                unique.push(Formula::not(Formula::and(
                    Formula::atom(sys.predicate(d), &["x"]),
                    Formula::atom(sys.predicate(d2), &["x"]),
                )));
            }
        }
        Formula::forall(
            &["x"],
            Formula::conjoin(
                std::iter::once(some).chain(unique).collect(),
                "x",
            ),
        )
    };
    let adjacency = |rel: &str, allowed: &[(usize, usize)]| {
        Formula::forall(
            &["x", "y"],
            Formula::implies(
                Formula::atom(rel, &["x", "y"]),
                Formula::disjoin(
                    allowed
                        .iter()
                        .map(|&(d, d2)| {
                            Formula::and(
                                Formula::atom(sys.predicate(d), &["x"]),
                                Formula::atom(sys.predicate(d2), &["y"]),
                            )
                        })
                        .collect(),
                    "x",
                ),
            ),
        )
    };
    Formula::conjoin(
        vec![
            one_tile,
            adjacency("H", &sys.horizontal),
            adjacency("V", &sys.vertical),
        ],
        "x",
    )
}

/// The full reduction output: grid axioms conjoined with the tiling
/// sentence, over `{H, V, N, <1, <2}` plus one unary predicate per tile.
pub fn domino_to_formula(sys: &DominoSystem) -> Formula {
    Formula::and(grid_axioms(), tiling_formula(sys))
}

/// A finite truncation of the expanded grid.
#[derive(Debug, Clone)]
pub struct GridFragment {
    pub structure: FiniteStructure,
    pub k: usize,
    /// Elements whose horizontal, vertical and quaternary successors all
    /// exist inside the fragment.
    pub interior: Vec<Element>,
}

impl GridFragment {
    pub fn cell(&self, i: usize, j: usize) -> Element {
        j * self.k + i
    }
}

/// Builds the k-by-k truncation: both lexicographic orders, the adjacency
/// relations, the quaternary squares, and optional tile labels.
pub fn build_grid_fragment(
    k: usize,
    sys: Option<&DominoSystem>,
    labeling: Option<&BTreeMap<(usize, usize), String>>,
) -> Result<GridFragment, ReductionError> {
    assert!(k >= 2, "fragments need at least two rows and columns");
    let mut pairs = vec![
        ("H".to_string(), 2),
        ("V".to_string(), 2),
        ("N".to_string(), 4),
        ("<1".to_string(), 2),
        ("<2".to_string(), 2),
    ];
    if let Some(sys) = sys {
        for d in 0..sys.tiles.len() {
            pairs.push((sys.predicate(d), 1));
        }
    }
    let vocab = Vocabulary::from_pairs(pairs).expect("grid vocabulary");
    let mut st = FiniteStructure::new(&vocab, k * k);
    let cell = |i: usize, j: usize| j * k + i;
    for j in 0..k {
        for i in 0..k {
            if i + 1 < k {
                st.add_tuple("H", vec![cell(i, j), cell(i + 1, j)]).unwrap();
            }
            if j + 1 < k {
                st.add_tuple("V", vec![cell(i, j), cell(i, j + 1)]).unwrap();
            }
            if i + 1 < k && j + 1 < k {
                // corners (a, b, d, c): right and top neighbours close the square
                st.add_tuple(
                    "N",
                    vec![cell(i, j), cell(i + 1, j), cell(i + 1, j + 1), cell(i, j + 1)],
                )
                .unwrap();
            }
        }
    }
    for (i, j) in (0..k).cartesian_product(0..k) {
        for (i2, j2) in (0..k).cartesian_product(0..k) {
            if j < j2 || (j == j2 && i < i2) {
                st.add_tuple("<1", vec![cell(i, j), cell(i2, j2)]).unwrap();
            }
            if i < i2 || (i == i2 && j < j2) {
                st.add_tuple("<2", vec![cell(i, j), cell(i2, j2)]).unwrap();
            }
        }
    }
    if let Some(labels) = labeling {
        let sys = sys.expect("labels need a domino system");
        for j in 0..k {
            for i in 0..k {
                let tile = labels
                    .get(&(i, j))
                    .ok_or(ReductionError::PartialLabeling(i, j))?;
                let d = sys.tile_index(tile)?;
                st.add_tuple(&sys.predicate(d), vec![cell(i, j)]).unwrap();
            }
        }
    }
    let interior = (0..k - 1)
        .cartesian_product(0..k - 1)
        .map(|(j, i)| cell(i, j))
        .collect();
    Ok(GridFragment {
        structure: st,
        k,
        interior,
    })
}

/// Direct adjacency check of a labeling against the system.
pub fn check_tiling_direct(
    sys: &DominoSystem,
    k: usize,
    labels: &BTreeMap<(usize, usize), String>,
) -> Result<bool, ReductionError> {
    let mut grid = vec![vec![0usize; k]; k];
    for j in 0..k {
        for i in 0..k {
            let tile = labels
                .get(&(i, j))
                .ok_or(ReductionError::PartialLabeling(i, j))?;
            grid[j][i] = sys.tile_index(tile)?;
        }
    }
    for j in 0..k {
        for i in 0..k {
            if i + 1 < k && !sys.horizontal.contains(&(grid[j][i], grid[j][i + 1])) {
                return Ok(false);
            }
            if j + 1 < k && !sys.vertical.contains(&(grid[j][i], grid[j + 1][i])) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Model-checking route: the tiling sentence evaluated on the labeled
/// fragment. Agrees with the direct check.
pub fn check_tiling_via_formula(
    sys: &DominoSystem,
    k: usize,
    labels: &BTreeMap<(usize, usize), String>,
) -> Result<bool, ReductionError> {
    let fragment = build_grid_fragment(k, Some(sys), Some(labels))?;
    let f = tiling_formula(sys);
    model_check(&fragment.structure, &f, &Assignment::new())
        .map_err(|e| ReductionError::Format(e.to_string()))
}
