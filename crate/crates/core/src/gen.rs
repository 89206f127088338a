//! Seeded synthetic inputs: PCB cases shaped like real boards (an IC with
//! a pin grid, passives on both layers) and GSRC-like hard-block circuits.
//! Lengths are in mil.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::bookshelf::{Block, BookshelfCircuit, Terminal};
use crate::io::case::{CaseFile, ComponentDoc, IcDoc, OutlineDoc};
use crate::model::{IcPin, Layer, Net, PairRule, SpacingRules};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaseSpec {
    pub name: String,
    pub top: usize,
    pub bottom: usize,
    pub pins: usize,
    pub nets: usize,
    /// Share of bottom components whose first net is close-to-pin.
    pub closetopin_fraction: f64,
    pub pin_pitch: f64,
    /// Upper bound on bottom component area over IC area.
    pub max_density: f64,
    pub default_gap: f64,
    pub seed: u64,
}

impl Default for CaseSpec {
    fn default() -> Self {
        CaseSpec {
            name: "synthetic".into(),
            top: 0,
            bottom: 0,
            pins: 0,
            nets: 0,
            closetopin_fraction: 0.1,
            pin_pitch: 40.0,
            max_density: 0.3,
            default_gap: 2.0,
            seed: 0,
        }
    }
}

impl CaseSpec {
    pub fn new(name: &str, top: usize, bottom: usize, pins: usize, nets: usize, seed: u64) -> Self {
        CaseSpec {
            name: name.into(),
            top,
            bottom,
            pins,
            nets,
            seed,
            ..Default::default()
        }
    }

    pub fn case1(seed: u64) -> Self {
        Self::new("case1", 0, 148, 1932, 518, seed)
    }

    pub fn case2(seed: u64) -> Self {
        Self::new("case2", 80, 0, 662, 214, seed)
    }

    pub fn case3(seed: u64) -> Self {
        Self::new("case3", 19, 61, 642, 213, seed)
    }

    pub fn case4(seed: u64) -> Self {
        Self::new("case4", 39, 104, 441, 392, seed)
    }

    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        match name {
            "case1" => Some(Self::case1(seed)),
            "case2" => Some(Self::case2(seed)),
            "case3" => Some(Self::case3(seed)),
            "case4" => Some(Self::case4(seed)),
            _ => None,
        }
    }
}

/// Passive footprints (prefix, length, width).
const FOOTPRINTS: [(&str, f64, f64); 6] = [
    ("R", 40.0, 20.0),
    ("C", 40.0, 20.0),
    ("R", 63.0, 31.0),
    ("C", 63.0, 31.0),
    ("C", 79.0, 49.0),
    ("L", 79.0, 49.0),
];

struct Part {
    id: String,
    w: f64,
    h: f64,
    layer: Layer,
    group: usize,
}

fn dist(a: &IcPin, b: &IcPin) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// A case with the requested counts. Bottom components gather in groups
/// around dense pin blobs; top components attach to pins on the IC rim.
/// The same spec always yields the same document.
pub fn generate_case(spec: &CaseSpec) -> CaseFile {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_comp = spec.top + spec.bottom;

    let mut parts: Vec<Part> = Vec::with_capacity(n_comp);
    let mut counters = std::collections::BTreeMap::new();
    for k in 0..n_comp {
        let (prefix, w, h) = FOOTPRINTS[rng.random_range(0..FOOTPRINTS.len())];
        let n = counters.entry(prefix).or_insert(0usize);
        *n += 1;
        parts.push(Part {
            id: format!("{prefix}{n}"),
            w,
            h,
            layer: if k < spec.top { Layer::Top } else { Layer::Bottom },
            group: 0,
        });
    }

    // Pin grid: at least one pin per component and enough area for the
    // bottom layer at the requested density.
    let bottom_area: f64 = parts.iter().filter(|p| p.layer == Layer::Bottom).map(|p| p.w * p.h).sum();
    let n_pins = spec.pins.max(if n_comp > 0 { 4 } else { 0 });
    let side_cells = ((n_pins as f64).sqrt().ceil() as usize).max(1);
    let min_side = (bottom_area / spec.max_density).sqrt();
    let pitch = spec.pin_pitch.max(min_side / side_cells as f64).ceil();
    let ic_side = pitch * side_cells as f64;
    let mut grid: Vec<(usize, usize)> = (0..side_cells).flat_map(|r| (0..side_cells).map(move |c| (c, r))).collect();
    grid.shuffle(&mut rng);
    grid.truncate(n_pins);
    grid.sort_unstable_by_key(|&(c, r)| (r, c));
    let rim = |&(c, r): &(usize, usize)| c == 0 || r == 0 || c + 1 == side_cells || r + 1 == side_cells;
    let pins: Vec<IcPin> = grid
        .iter()
        .enumerate()
        .map(|(k, cell)| IcPin {
            id: format!("P{}", k + 1),
            x: (cell.0 as f64 + 0.5) * pitch,
            y: (cell.1 as f64 + 0.5) * pitch,
            layer: if spec.top > 0 && rim(cell) { Layer::Top } else { Layer::Bottom },
        })
        .collect();
    let rim_pins: Vec<usize> = (0..pins.len()).filter(|&p| pins[p].layer == Layer::Top).collect();
    let inner_pins: Vec<usize> = (0..pins.len()).filter(|&p| pins[p].layer == Layer::Bottom).collect();

    // Bottom groups around random blob centers.
    let bottom_idx: Vec<usize> = (0..n_comp).filter(|&i| parts[i].layer == Layer::Bottom).collect();
    let n_groups = (bottom_idx.len() / 15).max(1);
    let centers: Vec<usize> = (0..n_groups)
        .filter_map(|_| inner_pins.get(rng.random_range(0..inner_pins.len().max(1))).copied())
        .collect();
    for (k, &i) in bottom_idx.iter().enumerate() {
        parts[i].group = k % n_groups;
    }
    let blob_pins: Vec<Vec<usize>> = centers
        .iter()
        .map(|&c| {
            let mut near: Vec<usize> = inner_pins.clone();
            near.sort_by(|&a, &b| dist(&pins[a], &pins[c]).total_cmp(&dist(&pins[b], &pins[c])).then(a.cmp(&b)));
            near.truncate(40.max(bottom_idx.len() / n_groups * 3));
            near
        })
        .collect();

    let max_dim = FOOTPRINTS.iter().map(|f| f.1).fold(0.0, f64::max);
    let mut c2p_pins: Vec<usize> = Vec::new();
    let mut used_pins = std::collections::BTreeSet::new();
    let mut nets: Vec<Net> = Vec::new();
    let mut pick_pin = |rng: &mut ChaCha8Rng, pool: &[usize], isolated: bool, c2p: &mut Vec<usize>| -> Option<usize> {
        for _ in 0..64 {
            let p = *pool.get(rng.random_range(0..pool.len().max(1)))?;
            if !isolated {
                return Some(p);
            }
            // Close-to-pin pins keep three footprints apart from each other.
            if !used_pins.contains(&p) && c2p.iter().all(|&q| dist(&pins[p], &pins[q]) >= 3.0 * max_dim) {
                c2p.push(p);
                used_pins.insert(p);
                return Some(p);
            }
        }
        None
    };

    // One pin net per component while the net budget lasts.
    let mut order: Vec<usize> = (0..n_comp).collect();
    order.shuffle(&mut rng);
    // Close-to-pin nets go to bottom components: a top component has to
    // clear the IC body and cannot sit next to a pin under it.
    let mut c2p_left = (spec.closetopin_fraction * spec.bottom as f64).round() as usize;
    for &i in &order {
        if nets.len() >= spec.nets {
            break;
        }
        let pool: &[usize] = match parts[i].layer {
            Layer::Top if !rim_pins.is_empty() => &rim_pins,
            Layer::Top => &inner_pins,
            Layer::Bottom => &blob_pins[parts[i].group.min(blob_pins.len().saturating_sub(1))],
        };
        let want_c2p = parts[i].layer == Layer::Bottom && c2p_left > 0;
        c2p_left -= usize::from(want_c2p);
        let pin = if want_c2p {
            pick_pin(&mut rng, pool, true, &mut c2p_pins).map(|p| (p, true))
        } else {
            None
        }
        .or_else(|| pick_pin(&mut rng, pool, false, &mut c2p_pins).map(|p| (p, false)));
        if let Some((p, c2p)) = pin {
            nets.push(Net {
                id: String::new(),
                members: vec![parts[i].id.clone(), pins[p].id.clone()],
                close_to_pin: c2p,
            });
        }
    }

    // Remaining nets: component pairs in the same group or layer, some with
    // a shared pin.
    let c2p_set: std::collections::BTreeSet<&str> = nets.iter().filter(|n| n.close_to_pin).map(|n| n.members[0].as_str()).collect();
    let plain: Vec<usize> = (0..n_comp).filter(|&i| !c2p_set.contains(parts[i].id.as_str())).collect();
    let mut attempts = 0;
    while nets.len() < spec.nets && n_comp > 0 && attempts < 100 * spec.nets {
        attempts += 1;
        let a = plain.get(rng.random_range(0..plain.len().max(1))).copied().unwrap_or(0);
        let peers: Vec<usize> = plain
            .iter()
            .copied()
            .filter(|&b| b != a && parts[b].layer == parts[a].layer && (parts[b].layer == Layer::Top || parts[b].group == parts[a].group || rng.random_bool(0.05)))
            .collect();
        let mut members = vec![parts[a].id.clone()];
        if let Some(&b) = peers.get(rng.random_range(0..peers.len().max(1))) {
            members.push(parts[b].id.clone());
        }
        if members.len() == 1 || rng.random_bool(0.4) {
            let pool: &[usize] = match parts[a].layer {
                Layer::Top if !rim_pins.is_empty() => &rim_pins,
                Layer::Top => &inner_pins,
                Layer::Bottom => &blob_pins[parts[a].group.min(blob_pins.len().saturating_sub(1))],
            };
            if let Some(&p) = pool.get(rng.random_range(0..pool.len().max(1))) {
                members.push(pins[p].id.clone());
            }
        }
        if members.len() >= 2 {
            nets.push(Net {
                id: String::new(),
                members,
                close_to_pin: false,
            });
        }
    }
    for (k, n) in nets.iter_mut().enumerate() {
        n.id = format!("N{}", k + 1);
    }

    CaseFile {
        name: Some(spec.name.clone()),
        board: Some(OutlineDoc {
            width: 3.0 * ic_side,
            height: 3.0 * ic_side,
        }),
        ic: IcDoc {
            outline: OutlineDoc {
                width: ic_side,
                height: ic_side,
            },
            pins,
        },
        components: parts
            .iter()
            .map(|p| ComponentDoc {
                id: p.id.clone(),
                w: p.w,
                h: p.h,
                layer: p.layer,
                x: None,
                y: None,
                r: None,
            })
            .collect(),
        nets,
        spacing: SpacingRules {
            default_gap: spec.default_gap,
            pair_overrides: vec![PairRule {
                a: "L*".into(),
                b: "C*".into(),
                gap: 3.0 * spec.default_gap,
            }],
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircuitSpec {
    pub blocks: usize,
    pub terminals: usize,
    pub nets: usize,
    pub min_side: u32,
    pub max_side: u32,
    pub seed: u64,
}

impl Default for CircuitSpec {
    fn default() -> Self {
        CircuitSpec {
            blocks: 100,
            terminals: 334,
            nets: 885,
            min_side: 20,
            max_side: 120,
            seed: 0,
        }
    }
}

/// A GSRC-like hard-block circuit: integer block sizes, terminals on the
/// rim of a square frame, nets of degree 2 to 5 that mostly join blocks
/// with nearby indices.
pub fn generate_circuit(spec: &CircuitSpec) -> BookshelfCircuit {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let blocks: Vec<Block> = (0..spec.blocks)
        .map(|k| Block {
            name: format!("sb{k}"),
            width: rng.random_range(spec.min_side..=spec.max_side) as f64,
            height: rng.random_range(spec.min_side..=spec.max_side) as f64,
            soft: None,
        })
        .collect();
    let area: f64 = blocks.iter().map(|b| b.width * b.height).sum();
    let side = area.sqrt().ceil();
    let terminals: Vec<Terminal> = (0..spec.terminals)
        .map(|k| {
            let t = k as f64 / spec.terminals.max(1) as f64 * 4.0;
            let along = (t.fract() * side).round();
            let (x, y) = match t as usize {
                0 => (along, 0.0),
                1 => (side, along),
                2 => (side - along, side),
                _ => (0.0, side - along),
            };
            Terminal {
                name: format!("p{}", k + 1),
                x,
                y,
            }
        })
        .collect();
    let mut nets = Vec::with_capacity(spec.nets);
    if spec.blocks > 0 {
        for _ in 0..spec.nets {
            let degree = *[2, 2, 2, 3, 3, 4, 5].get(rng.random_range(0..7)).unwrap_or(&2);
            let anchor = rng.random_range(0..spec.blocks);
            let mut members: Vec<String> = Vec::with_capacity(degree);
            members.push(blocks[anchor].name.clone());
            while members.len() < degree {
                let name = if !terminals.is_empty() && rng.random_bool(0.15) {
                    terminals[rng.random_range(0..terminals.len())].name.clone()
                } else {
                    let span = (spec.blocks / 10).max(2) as i64;
                    let j = (anchor as i64 + rng.random_range(-span..=span)).rem_euclid(spec.blocks as i64) as usize;
                    blocks[j].name.clone()
                };
                if !members.contains(&name) {
                    members.push(name);
                } else if spec.blocks + terminals.len() <= degree {
                    break;
                }
            }
            nets.push(members);
        }
    }
    BookshelfCircuit { blocks, terminals, nets }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LayerMode;

    #[test]
    fn table_shapes() {
        for (spec, mode) in [
            (CaseSpec::case1(1), LayerMode::BottomOnly),
            (CaseSpec::case2(1), LayerMode::TopOnly),
            (CaseSpec::case3(1), LayerMode::TwoLayer),
        ] {
            let doc = generate_case(&spec);
            assert_eq!(doc.ic.pins.len(), spec.pins);
            assert_eq!(doc.nets.len(), spec.nets);
            let p = doc.to_problem().unwrap();
            assert_eq!(p.layer_mode(), mode);
            assert_eq!(p.layer_components(Layer::Top).len(), spec.top);
            assert_eq!(p.layer_components(Layer::Bottom).len(), spec.bottom);
            assert_eq!(p.nets().iter().any(|n| n.close_to_pin), spec.bottom > 0);
        }
    }

    #[test]
    fn empty_spec_is_valid() {
        let doc = generate_case(&CaseSpec::new("e", 0, 0, 0, 0, 0));
        let p = doc.to_problem().unwrap();
        assert!(p.components().is_empty() && p.nets().is_empty());
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = generate_case(&CaseSpec::case3(7)).to_json();
        let b = generate_case(&CaseSpec::case3(7)).to_json();
        assert_eq!(a, b);
        assert_ne!(a, generate_case(&CaseSpec::case3(8)).to_json());
    }

    #[test]
    fn closetopin_pins_are_apart() {
        let doc = generate_case(&CaseSpec::case1(3));
        let p = doc.to_problem().unwrap();
        let c2p: Vec<&IcPin> = p
            .components()
            .iter()
            .filter_map(|c| c.close_to_pin_target.as_ref())
            .map(|id| &p.ic_pins()[p.pin_index(id).unwrap()])
            .collect();
        for i in 0..c2p.len() {
            for j in i + 1..c2p.len() {
                assert!(dist(c2p[i], c2p[j]) >= 3.0 * 79.0);
            }
        }
    }

    #[test]
    fn circuit_counts() {
        let c = generate_circuit(&CircuitSpec {
            blocks: 30,
            terminals: 12,
            nets: 50,
            seed: 2,
            ..Default::default()
        });
        assert_eq!((c.blocks.len(), c.terminals.len(), c.nets.len()), (30, 12, 50));
        assert!(c.nets.iter().all(|n| n.len() >= 2));
    }
}
