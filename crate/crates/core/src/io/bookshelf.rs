//! GSRC Bookshelf floorplanning files: `.blocks`, `.nets` and `.pl`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Component, IcPin, Layer, Net, Outline, PlacementProblem, SpacingRules};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftShape {
    pub area: f64,
    pub min_aspect: f64,
    pub max_aspect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub width: f64,
    pub height: f64,
    pub soft: Option<SoftShape>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Terminal {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BookshelfCircuit {
    pub blocks: Vec<Block>,
    pub terminals: Vec<Terminal>,
    /// Member names of every net, in file order.
    pub nets: Vec<Vec<String>>,
}

/// The three files of one circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct BookshelfPaths {
    pub blocks: PathBuf,
    pub nets: PathBuf,
    pub pl: Option<PathBuf>,
}

impl BookshelfPaths {
    /// `dir/name.blocks`, `dir/name.nets` and `dir/name.pl` if present.
    pub fn from_stem(dir: impl AsRef<Path>, name: &str) -> Self {
        let dir = dir.as_ref();
        let pl = dir.join(format!("{name}.pl"));
        BookshelfPaths {
            blocks: dir.join(format!("{name}.blocks")),
            nets: dir.join(format!("{name}.nets")),
            pl: pl.exists().then_some(pl),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Non-empty lines with comments stripped, numbered from 1.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty() && !l.starts_with("UCSC")).then_some((i + 1, l))
    })
}

/// `Key : value` header lines.
fn header(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once(':')?;
    let k = k.trim();
    (!k.contains(char::is_whitespace)).then_some((k, v.trim()))
}

fn num<T: std::str::FromStr>(path: &Path, line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(path, line, format!("expected {what}, found `{tok}`")))
}

#[derive(Default)]
struct Counts {
    soft: Option<(usize, usize)>,
    hard: Option<(usize, usize)>,
    terminals: Option<(usize, usize)>,
}

fn parse_blocks(path: &Path, text: &str) -> Result<(Vec<Block>, Vec<String>)> {
    let mut blocks = Vec::new();
    let mut terminals = Vec::new();
    let mut counts = Counts::default();
    let (mut n_soft, mut n_hard) = (0usize, 0usize);
    for (ln, line) in lines(text) {
        if let Some((k, v)) = header(line) {
            let n: usize = num(path, ln, v, "a count")?;
            match k {
                "NumSoftRectangularBlocks" => counts.soft = Some((n, ln)),
                "NumHardRectilinearBlocks" => counts.hard = Some((n, ln)),
                "NumTerminals" => counts.terminals = Some((n, ln)),
                _ => return Err(parse_err(path, ln, format!("unknown header `{k}`"))),
            }
            continue;
        }
        let mut toks = line.split_whitespace();
        let name = toks.next().unwrap_or_default().to_string();
        let kind = toks
            .next()
            .ok_or_else(|| parse_err(path, ln, format!("missing block type for `{name}`")))?;
        match kind {
            "terminal" => terminals.push(name),
            "hardrectilinear" => {
                let rest: String = toks.collect::<Vec<_>>().join(" ");
                let cleaned = rest.replace(['(', ')', ','], " ");
                let mut nums = cleaned.split_whitespace();
                let k: usize = num(path, ln, nums.next().unwrap_or(""), "a vertex count")?;
                let coords: Vec<f64> = nums.map(|t| num(path, ln, t, "a coordinate")).collect::<Result<_>>()?;
                if k < 3 || coords.len() != 2 * k {
                    return Err(parse_err(path, ln, format!("expected {k} vertices for `{name}`")));
                }
                let xs = coords.iter().step_by(2);
                let ys = coords.iter().skip(1).step_by(2);
                let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                if !(x1 > x0 && y1 > y0) {
                    return Err(parse_err(path, ln, format!("block `{name}` has zero area")));
                }
                n_hard += 1;
                blocks.push(Block {
                    name,
                    width: x1 - x0,
                    height: y1 - y0,
                    soft: None,
                });
            }
            "softrectangular" => {
                let v: Vec<f64> = toks.map(|t| num(path, ln, t, "a number")).collect::<Result<_>>()?;
                let [area, min_aspect, max_aspect] = v[..] else {
                    return Err(parse_err(path, ln, format!("expected area and aspect bounds for `{name}`")));
                };
                if !(area > 0.0 && min_aspect > 0.0 && min_aspect <= max_aspect) {
                    return Err(parse_err(path, ln, format!("invalid soft block `{name}`")));
                }
                n_soft += 1;
                let soft = SoftShape {
                    area,
                    min_aspect,
                    max_aspect,
                };
                let (width, height) = soft_dims(&soft);
                blocks.push(Block {
                    name,
                    width,
                    height,
                    soft: Some(soft),
                });
            }
            other => return Err(parse_err(path, ln, format!("unknown block type `{other}`"))),
        }
    }
    for (want, got, what) in [
        (counts.soft, n_soft, "soft blocks"),
        (counts.hard, n_hard, "hard blocks"),
        (counts.terminals, terminals.len(), "terminals"),
    ] {
        if let Some((n, ln)) = want {
            if n != got {
                return Err(parse_err(path, ln, format!("header declares {n} {what}, file has {got}")));
            }
        }
    }
    Ok((blocks, terminals))
}

/// Shape used for a soft block: the square, or the nearest allowed aspect
/// ratio (height / width).
pub fn soft_dims(s: &SoftShape) -> (f64, f64) {
    let aspect = 1.0f64.clamp(s.min_aspect, s.max_aspect);
    let w = (s.area / aspect).sqrt();
    (w, s.area / w)
}

fn parse_nets(path: &Path, text: &str) -> Result<Vec<Vec<String>>> {
    let mut nets: Vec<Vec<String>> = Vec::new();
    let mut remaining = 0usize;
    let mut declared: Option<(usize, usize)> = None;
    let mut pins_declared: Option<(usize, usize)> = None;
    let mut n_pins = 0usize;
    let mut last_line = 0;
    for (ln, line) in lines(text) {
        last_line = ln;
        if let Some((k, v)) = header(line) {
            match k {
                "NumNets" => declared = Some((num(path, ln, v, "a count")?, ln)),
                "NumPins" => pins_declared = Some((num(path, ln, v, "a count")?, ln)),
                "NetDegree" => {
                    if remaining != 0 {
                        return Err(parse_err(path, ln, format!("previous net is missing {remaining} pins")));
                    }
                    let deg = v.split_whitespace().next().unwrap_or("");
                    remaining = num(path, ln, deg, "a net degree")?;
                    nets.push(Vec::new());
                }
                _ if remaining > 0 => {
                    // A pin line with offsets, e.g. `bk1 B : %0.0 %0.0`.
                    push_pin(path, ln, line, &mut nets, &mut remaining)?;
                    n_pins += 1;
                }
                _ => return Err(parse_err(path, ln, format!("unknown header `{k}`"))),
            }
            continue;
        }
        if remaining == 0 {
            return Err(parse_err(path, ln, "pin line outside of a net"));
        }
        push_pin(path, ln, line, &mut nets, &mut remaining)?;
        n_pins += 1;
    }
    if remaining != 0 {
        return Err(parse_err(path, last_line, format!("last net is missing {remaining} pins")));
    }
    if let Some((n, ln)) = declared {
        if n != nets.len() {
            return Err(parse_err(path, ln, format!("header declares {n} nets, file has {}", nets.len())));
        }
    }
    if let Some((n, ln)) = pins_declared {
        if n != n_pins {
            return Err(parse_err(path, ln, format!("header declares {n} pins, file has {n_pins}")));
        }
    }
    Ok(nets)
}

fn push_pin(path: &Path, ln: usize, line: &str, nets: &mut [Vec<String>], remaining: &mut usize) -> Result<()> {
    let name = line
        .split_whitespace()
        .next()
        .ok_or_else(|| parse_err(path, ln, "empty pin line"))?;
    nets.last_mut()
        .ok_or_else(|| parse_err(path, ln, "pin line outside of a net"))?
        .push(name.to_string());
    *remaining -= 1;
    Ok(())
}

fn parse_pl(path: &Path, text: &str) -> Result<Vec<(String, f64, f64, usize)>> {
    lines(text)
        .map(|(ln, line)| {
            let mut t = line.split_whitespace();
            let name = t.next().unwrap_or_default().to_string();
            let x = num(path, ln, t.next().unwrap_or(""), "an x coordinate")?;
            let y = num(path, ln, t.next().unwrap_or(""), "a y coordinate")?;
            Ok((name, x, y, ln))
        })
        .collect()
}

pub fn parse_bookshelf(paths: &BookshelfPaths) -> Result<BookshelfCircuit> {
    let (blocks, terminal_names) = parse_blocks(&paths.blocks, &read(&paths.blocks)?)?;
    let nets = parse_nets(&paths.nets, &read(&paths.nets)?)?;

    let mut seen = HashSet::new();
    for name in blocks.iter().map(|b| &b.name).chain(&terminal_names) {
        if !seen.insert(name.as_str()) {
            return Err(Error::Model(format!("duplicate block or terminal `{name}`")));
        }
    }
    for (k, net) in nets.iter().enumerate() {
        for m in net {
            if !seen.contains(m.as_str()) {
                return Err(Error::Reference {
                    name: m.clone(),
                    context: format!("net {k} of {}", paths.nets.display()),
                });
            }
        }
    }

    let mut coords = std::collections::HashMap::new();
    if let Some(pl) = &paths.pl {
        for (name, x, y, ln) in parse_pl(pl, &read(pl)?)? {
            if !seen.contains(name.as_str()) {
                return Err(parse_err(pl, ln, format!("unknown block `{name}`")));
            }
            coords.insert(name, (x, y));
        }
    }
    let terminals = terminal_names
        .into_iter()
        .map(|name| {
            let &(x, y) = coords.get(&name).ok_or_else(|| Error::Reference {
                name: name.clone(),
                context: "terminal without a position in the .pl file".into(),
            })?;
            Ok(Terminal { name, x, y })
        })
        .collect::<Result<_>>()?;
    Ok(BookshelfCircuit { blocks, terminals, nets })
}

impl BookshelfCircuit {
    pub fn total_block_area(&self) -> f64 {
        self.blocks.iter().map(|b| b.width * b.height).sum()
    }

    pub fn num_pins(&self) -> usize {
        self.nets.iter().map(Vec::len).sum()
    }

    pub fn blocks_text(&self) -> String {
        let n_soft = self.blocks.iter().filter(|b| b.soft.is_some()).count();
        let mut s = String::from("UCSC blocks 1.0\n\n");
        let _ = writeln!(s, "NumSoftRectangularBlocks : {n_soft}");
        let _ = writeln!(s, "NumHardRectilinearBlocks : {}", self.blocks.len() - n_soft);
        let _ = writeln!(s, "NumTerminals : {}\n", self.terminals.len());
        for b in &self.blocks {
            match &b.soft {
                Some(soft) => {
                    let _ = writeln!(s, "{} softrectangular {} {} {}", b.name, soft.area, soft.min_aspect, soft.max_aspect);
                }
                None => {
                    let (w, h) = (b.width, b.height);
                    let _ = writeln!(s, "{} hardrectilinear 4 (0, 0) (0, {h}) ({w}, {h}) ({w}, 0)", b.name);
                }
            }
        }
        s.push('\n');
        for t in &self.terminals {
            let _ = writeln!(s, "{} terminal", t.name);
        }
        s
    }

    pub fn nets_text(&self) -> String {
        let mut s = String::from("UCSC nets 1.0\n\n");
        let _ = writeln!(s, "NumNets : {}", self.nets.len());
        let _ = writeln!(s, "NumPins : {}\n", self.num_pins());
        for net in &self.nets {
            let _ = writeln!(s, "NetDegree : {}", net.len());
            for m in net {
                let _ = writeln!(s, "{m} B");
            }
        }
        s
    }

    pub fn pl_text(&self) -> String {
        let mut s = String::from("UCSC pl 1.0\n\n");
        for b in &self.blocks {
            let _ = writeln!(s, "{} 0 0", b.name);
        }
        for t in &self.terminals {
            let _ = writeln!(s, "{} {} {}", t.name, t.x, t.y);
        }
        s
    }

    /// Writes `dir/name.{blocks,nets,pl}` and returns their paths.
    pub fn write(&self, dir: impl AsRef<Path>, name: &str) -> Result<BookshelfPaths> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = BookshelfPaths {
            blocks: dir.join(format!("{name}.blocks")),
            nets: dir.join(format!("{name}.nets")),
            pl: Some(dir.join(format!("{name}.pl"))),
        };
        for (p, text) in [
            (&paths.blocks, self.blocks_text()),
            (&paths.nets, self.nets_text()),
            (paths.pl.as_ref().expect("set above"), self.pl_text()),
        ] {
            std::fs::write(p, text).map_err(|e| Error::io(p, e))?;
        }
        Ok(paths)
    }

    /// A bottom-layer placement problem inside `outline`. Terminals become
    /// fixed pins with coordinates scaled from their bounding box corner at
    /// the origin onto the outline; nets without members are dropped.
    pub fn to_problem(&self, outline: Outline) -> Result<PlacementProblem> {
        let max_x = self.terminals.iter().map(|t| t.x).fold(0.0, f64::max);
        let max_y = self.terminals.iter().map(|t| t.y).fold(0.0, f64::max);
        let sx = if max_x > 0.0 { outline.width / max_x } else { 1.0 };
        let sy = if max_y > 0.0 { outline.height / max_y } else { 1.0 };
        let pins = self
            .terminals
            .iter()
            .map(|t| IcPin {
                id: t.name.clone(),
                x: (t.x * sx).clamp(0.0, outline.width),
                y: (t.y * sy).clamp(0.0, outline.height),
                layer: Layer::Bottom,
            })
            .collect();
        let comps = self
            .blocks
            .iter()
            .map(|b| {
                let mut c = Component::new(b.name.clone(), b.width, b.height, Layer::Bottom);
                c.x = outline.width / 2.0;
                c.y = outline.height / 2.0;
                c
            })
            .collect();
        let nets = self
            .nets
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_empty())
            .map(|(k, m)| Net {
                id: format!("net{k}"),
                members: m.clone(),
                close_to_pin: false,
            })
            .collect();
        PlacementProblem::new(comps, nets, pins, outline, None, SpacingRules::uniform(0.0))
    }
}
