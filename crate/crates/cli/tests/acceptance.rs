//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use geofuse::fusion::{read_gft, write_gft, AppliedNorm, Provenance};
use geofuse::metrics::{
    average_precision, efficiency_experiment, epoch_schedule, subset_sample, ConfusionMatrix, EfficiencyConfig,
};
use geofuse::prior::{
    boost_and_renormalize, generate_prior, Boost, CoOccurrenceSource, PriorConfig, DEFAULT_BLUR_SIGMA, DEFAULT_EPSILON,
};
use geofuse::raster::{read_ascii_grid, write_ascii_grid};
use geofuse::rng::SplitMix64;
use geofuse::token::{
    build_token_sequence, encode_location_stub, encoder_block_backward, encoder_block_forward, gradient_check,
    patch_count, patchify, BlockWeights, LocationToken, Projection, SequenceParts,
};
use geofuse::vector::{binary_mask, rasterize_classes, BinaryMask, ClassEntry, Coord, Feature, Geometry, TagSelector};
use geofuse::{ClassMap, Error, FusedTensor, GeoTransform, Grid, GridKind, PriorStack, VectorLayer};
use nalgebra::{DMatrix, DVector};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- criterion 1

fn mirror(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}

struct PriorScene {
    coarse: Vec<usize>,
    fine: Vec<usize>,
    boosts: Vec<(Vec<bool>, usize, f64)>,
}

const PW: usize = 16;
const PH: usize = 16;
const NC: usize = 8;
const NF: usize = 4;

fn prior_scene(seed: u64) -> PriorScene {
    let mut rng = SplitMix64::new(seed);
    // Blocky coarse map with some classes left unobserved.
    let palette: Vec<usize> = (0..5).map(|_| rng.next_below(NC as u64) as usize).collect();
    let blocks: Vec<usize> = (0..16).map(|_| palette[rng.next_below(5) as usize]).collect();
    let coarse = (0..PW * PH).map(|i| blocks[(i / PW / 4) * 4 + (i % PW) / 4]).collect();
    let fine = (0..PW * PH).map(|_| rng.next_below(NF as u64) as usize).collect();
    let boosts = (0..2)
        .map(|_| {
            let p = 0.1 + 0.3 * rng.next_f64();
            let mask = (0..PW * PH).map(|_| rng.next_f64() < p).collect();
            (mask, rng.next_below(NF as u64) as usize, 0.25 + 1.5 * rng.next_f64())
        })
        .collect();
    PriorScene { coarse, fine, boosts }
}

/// Counting, broadcast, direct 2-D convolution with mirrored edges, then
/// boosts and renormalization, all written out longhand.
fn prior_oracle(s: &PriorScene, sigma: f64) -> Vec<Vec<f64>> {
    let mut counts = vec![vec![0.0f64; NF]; NC];
    for (c, l) in s.coarse.iter().zip(&s.fine) {
        counts[*c][*l] += 1.0;
    }
    let table: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            if total == 0.0 {
                vec![1.0 / NF as f64; NF]
            } else {
                row.iter().map(|n| (n + DEFAULT_EPSILON) / (total + NF as f64 * DEFAULT_EPSILON)).collect()
            }
        })
        .collect();
    let r = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            kernel.push((dx, dy, (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp()));
        }
    }
    let ksum: f64 = kernel.iter().map(|k| k.2).sum();
    let mut out = vec![vec![0.0; PW * PH]; NF];
    for (l, plane) in out.iter_mut().enumerate() {
        for y in 0..PH {
            for x in 0..PW {
                plane[y * PW + x] = kernel
                    .iter()
                    .map(|&(dx, dy, k)| {
                        let src = mirror(y as isize + dy, PH) * PW + mirror(x as isize + dx, PW);
                        k / ksum * table[s.coarse[src]][l]
                    })
                    .sum();
            }
        }
    }
    for (mask, class, weight) in &s.boosts {
        for (i, &m) in mask.iter().enumerate() {
            if m {
                out[*class][i] += weight;
            }
        }
    }
    for i in 0..PW * PH {
        let total: f64 = out.iter().map(|p| p[i]).sum();
        for plane in out.iter_mut() {
            plane[i] /= total;
        }
    }
    out
}

fn cat(w: usize, h: usize, data: Vec<f64>) -> Grid {
    Grid::new(w, h, GeoTransform::north_up(0.0, h as f64 * 30.0, 30.0), data, None, GridKind::Categorical).unwrap()
}

fn prior_config(s: &PriorScene, sigma: f64) -> PriorConfig {
    let as_grid = |v: &[usize]| cat(PW, PH, v.iter().map(|&c| c as f64).collect());
    let coarse = as_grid(&s.coarse);
    PriorConfig {
        coarse_name: "coarse".into(),
        coarse: coarse.clone(),
        n_coarse: NC,
        n_fine: NF,
        source: CoOccurrenceSource::Estimate { pairs: vec![(coarse, as_grid(&s.fine))], epsilon: DEFAULT_EPSILON },
        blur_sigma: sigma,
        boosts: s
            .boosts
            .iter()
            .enumerate()
            .map(|(k, (m, class, weight))| Boost {
                name: format!("mask{k}"),
                mask: BinaryMask::new(cat(PW, PH, m.iter().map(|&b| b as u8 as f64).collect())).unwrap(),
                target_class: *class,
                weight: *weight,
            })
            .collect(),
    }
}

fn criterion_1() -> Check {
    let mut worst = 0.0f64;
    let mut worst_sum = 0.0f64;
    for seed in 0..25 {
        let s = prior_scene(seed);
        let prior = generate_prior(&prior_config(&s, DEFAULT_BLUR_SIGMA)).map_err(|e| e.to_string())?;
        let expect = prior_oracle(&s, DEFAULT_BLUR_SIGMA);
        for (l, ch) in prior.channels().iter().enumerate() {
            for (i, v) in ch.data().iter().enumerate() {
                worst = worst.max((v - expect[l][i]).abs());
            }
        }
        worst_sum = worst_sum.max(prior.simplex_error().0);
    }
    ensure(worst <= 1e-5 && worst_sum <= 1e-5, || format!("max diff {worst:e}, max |sum-1| {worst_sum:e}"))?;
    Ok(format!("25 scenes, max |prior - oracle| {worst:.1e}, max |sum-1| {worst_sum:.1e}"))
}

// ---------------------------------------------------------------- criterion 2

fn criterion_2() -> Check {
    let t = GeoTransform::north_up(0.0, 1.0, 1.0);
    let half = Grid::new(1, 1, t, vec![0.5], None, GridKind::Continuous).unwrap();
    let prior = PriorStack::new(vec![half.clone(), half]).unwrap();
    let mask = BinaryMask::new(Grid::new(1, 1, t, vec![1.0], None, GridKind::Categorical).unwrap()).unwrap();
    let out = boost_and_renormalize(&prior, &[Boost { name: "m".into(), mask, target_class: 0, weight: 1.0 }])
        .map_err(|e| e.to_string())?;
    ensure(out.pixel(0) == [0.75, 0.25], || format!("boosted pixel {:?}", out.pixel(0)))?;
    ensure(DEFAULT_BLUR_SIGMA == 1.0, || format!("default sigma {DEFAULT_BLUR_SIGMA}"))?;
    let recorded = generate_prior(&prior_config(&prior_scene(1), DEFAULT_BLUR_SIGMA)).unwrap();
    let m = recorded.manifest().unwrap();
    ensure(m.get("blur_sigma") == Some("1"), || format!("manifest sigma {:?}", m.get("blur_sigma")))?;
    Ok("(0.5, 0.5) + w=1 -> (0.75, 0.25) exactly; default blur sigma = 1 px".into())
}

// ---------------------------------------------------------------- criterion 3

#[derive(Clone)]
enum Shape {
    Point((f64, f64)),
    Line(Vec<(f64, f64)>),
    Poly(Vec<(f64, f64)>),
}

/// Even-odd rule by ray crossing.
fn crossings_odd(ring: &[(f64, f64)], p: (f64, f64)) -> bool {
    let mut inside = false;
    for k in 0..ring.len() - 1 {
        let (a, b) = (ring[k], ring[k + 1]);
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) / (b.1 - a.1) * (b.0 - a.0);
            if p.0 < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn seg_dist(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.0 - a.0) * vx + (p.1 - a.1) * vy) / len2).clamp(0.0, 1.0) };
    ((p.0 - a.0 - t * vx).powi(2) + (p.1 - a.1 - t * vy).powi(2)).sqrt()
}

impl Shape {
    fn covers(&self, p: (f64, f64), r: f64) -> bool {
        let path = |pts: &[(f64, f64)]| pts.windows(2).map(|s| seg_dist(p, s[0], s[1])).fold(f64::INFINITY, f64::min);
        match self {
            Shape::Point(q) => ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt() < r,
            Shape::Line(pts) => path(pts) < r,
            Shape::Poly(ring) => crossings_odd(ring, p) || path(ring) < r,
        }
    }

    fn geometry(&self) -> Geometry {
        let c = |v: &[(f64, f64)]| v.iter().map(|&p| Coord::from(p)).collect::<Vec<_>>();
        match self {
            Shape::Point(p) => Geometry::Point(Coord::from(*p)),
            Shape::Line(v) => Geometry::LineString(c(v)),
            Shape::Poly(v) => Geometry::Polygon { exterior: c(v), holes: vec![] },
        }
    }
}

const KINDS: [&str; 4] = ["road", "water", "building", "park"];

fn raster_scene(rng: &mut SplitMix64) -> Vec<(Shape, &'static str)> {
    // Grid covers x in [0, 160], y in [0, 160]; shapes may poke outside.
    let pt = |rng: &mut SplitMix64| (-10.0 + 180.0 * rng.next_f64(), -10.0 + 180.0 * rng.next_f64());
    let n = rng.next_below(6) as usize;
    (0..n)
        .map(|_| {
            let shape = match rng.next_below(3) {
                0 => Shape::Point(pt(rng)),
                1 => Shape::Line((0..2 + rng.next_below(3)).map(|_| pt(rng)).collect()),
                // Arbitrary vertex order, so rings may self-intersect.
                _ => {
                    let mut ring: Vec<(f64, f64)> = (0..3 + rng.next_below(5)).map(|_| pt(rng)).collect();
                    ring.push(ring[0]);
                    Shape::Poly(ring)
                }
            };
            (shape, KINDS[rng.next_below(4) as usize])
        })
        .collect()
}

fn criterion_3() -> Check {
    let t = GeoTransform::north_up(0.0, 160.0, 10.0);
    let entry = |pat: &str, class, color, buffer| ClassEntry {
        selector: TagSelector::new("kind", pat),
        class_id: class,
        color,
        buffer,
    };
    let map = ClassMap::new(
        vec![
            entry("water", 1, [0, 0, 255], 0.0),
            entry("road", 2, [90, 90, 90], 10.0),
            entry("b*", 3, [200, 0, 0], 5.0),
        ],
        0,
        [0, 0, 0],
    )
    .unwrap();
    let mut rng = SplitMix64::new(2024);
    let mut pixels = 0usize;
    for scene_id in 0..100 {
        let scene = raster_scene(&mut rng);
        let layer = VectorLayer::new(
            scene
                .iter()
                .map(|(s, k)| Feature {
                    geometry: s.geometry(),
                    properties: BTreeMap::from([("kind".to_string(), k.to_string())]),
                })
                .collect(),
        );
        let classes = rasterize_classes(&layer, &map, &t, 16, 16).map_err(|e| e.to_string())?;
        let radius = if scene_id % 2 == 0 { 10.0 } else { 25.0 * rng.next_f64() };
        let sel = TagSelector::new("kind", "*");
        let mask = binary_mask(&layer, &sel, radius, &t, 16, 16).map_err(|e| e.to_string())?;
        for row in 0..16 {
            for col in 0..16 {
                let p = t.pixel_center(col, row);
                let mut expect = 0.0;
                for e in map.entries() {
                    for (s, kind) in &scene {
                        let hit = match e.selector.pattern.as_str() {
                            "b*" => kind.starts_with('b'),
                            pat => *kind == pat,
                        };
                        if hit && s.covers(p, e.buffer) {
                            expect = e.class_id as f64;
                        }
                    }
                }
                let got = classes.get(col, row);
                ensure(got == expect, || format!("scene {scene_id} pixel ({col},{row}): class {got}, oracle {expect}"))?;
                let m = scene.iter().any(|(s, _)| s.covers(p, radius));
                ensure(mask.is_set(row * 16 + col) == m, || {
                    format!("scene {scene_id} pixel ({col},{row}): mask disagrees at radius {radius}")
                })?;
                pixels += 1;
            }
        }
    }
    Ok(format!("100 scenes, {pixels} pixels, classes and masks (incl. 10 m radius) match the oracle exactly"))
}

// ---------------------------------------------------------------- criterion 4

fn criterion_4() -> Check {
    let d = 6;
    let mut rng = SplitMix64::new(4);
    let loc: Vec<f64> = (0..256).map(|_| rng.next_gaussian()).collect();
    let proj = Projection::seeded(256, d, 11).unwrap();
    let cls = DVector::from_fn(d, |_, _| rng.next_gaussian());
    for n in 1..=16usize {
        for r in 0..=3usize {
            let patches = DMatrix::from_fn(n, d, |_, _| rng.next_gaussian());
            let regs = DMatrix::from_fn(r, d, |_, _| rng.next_gaussian());
            let pos = DMatrix::from_fn(n + 2 + r, d, |_, _| rng.next_gaussian());
            let seq = build_token_sequence(&SequenceParts {
                cls: &cls,
                location: Some(LocationToken { embedding: &loc, projection: &proj }),
                patches: &patches,
                registers: &regs,
                pos_embed: &pos,
            })
            .map_err(|e| format!("N={n} R={r}: {e}"))?;
            ensure(seq.len() == n + 2 + r, || format!("N={n} R={r}: length {}", seq.len()))?;
            let loc_id = seq.positional_ids()[seq.location_index().unwrap()];
            ensure(loc_id == n + 1, || format!("N={n} R={r}: loc id {loc_id}"))?;
        }
    }
    let n = patch_count(120, 120, 8).map_err(|e| e.to_string())?;
    ensure(n == 225, || format!("patch count {n}"))?;
    let image = FusedTensor::new(
        120,
        120,
        None,
        (0..10).map(|c| (0..120 * 120).map(|i| ((i + c) % 7) as f32).collect()).collect(),
        (0..10).map(|c| Provenance::new(format!("b{c}"), AppliedNorm::Identity)).collect(),
    )
    .unwrap();
    let embed = Projection::seeded(10 * 8 * 8, d, 3).unwrap();
    let rows = patchify(&image, 8, &embed).map_err(|e| e.to_string())?.nrows();
    ensure(rows == 225, || format!("patchify rows {rows}"))?;
    Ok("len = N+2+R and loc id = N+1 for N in 1..=16, R in 0..=3; 10x120x120 / patch 8 -> N = 225".into())
}

// ---------------------------------------------------------------- criterion 5

fn criterion_5() -> Check {
    let mut rng = SplitMix64::new(55);
    let x = DMatrix::from_fn(3, 4, |_, _| rng.next_gaussian());
    let w = BlockWeights::seeded(4, 16, 0.5, 56);
    let report = gradient_check(&x, &w, 1e-4).map_err(|e| e.to_string())?;
    ensure(report.len() == 16, || format!("{} tensors checked", report.len()))?;
    let (name, worst) = report.iter().copied().fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    ensure(worst <= 1e-4, || format!("{name}: relative error {worst:e}"))?;

    // Same instance under a random upstream gradient, finite differences taken here.
    let g = DMatrix::from_fn(3, 4, |_, _| rng.next_gaussian());
    let loss = |w: &BlockWeights| encoder_block_forward(&x, w).unwrap().component_mul(&g).sum();
    let (grads, _) = encoder_block_backward(&x, &w, &g).map_err(|e| e.to_string())?;
    let mut worst_g = 0.0f64;
    for (idx, (tname, analytic)) in grads.tensors().into_iter().enumerate() {
        for e in 0..analytic.len() {
            let mut wp = w.clone();
            wp.tensors_mut()[idx].1.as_mut_slice()[e] += 1e-4;
            let mut wm = w.clone();
            wm.tensors_mut()[idx].1.as_mut_slice()[e] -= 1e-4;
            let numeric = (loss(&wp) - loss(&wm)) / 2e-4;
            let a = analytic.as_slice()[e];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            ensure(rel <= 1e-4, || format!("{tname}[{e}] random upstream: analytic {a}, numeric {numeric}"))?;
            worst_g = worst_g.max(rel);
        }
    }
    Ok(format!("16 tensors, worst relative error {worst:.1e} (sum loss), {worst_g:.1e} (random upstream)"))
}

// ---------------------------------------------------------------- criterion 6

fn ap_prefix_oracle(scores: &[f64], truth: &[bool]) -> f64 {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let pos = truth.iter().filter(|&&t| t).count() as f64;
    let (mut prev_recall, mut total) = (0.0, 0.0);
    for k in 1..=idx.len() {
        let tp = idx[..k].iter().filter(|&&i| truth[i]).count() as f64;
        let recall = tp / pos;
        total += (recall - prev_recall) * (tp / k as f64);
        prev_recall = recall;
    }
    total
}

fn criterion_6() -> Check {
    let mut rng = SplitMix64::new(6);
    let mut checked = 0;
    for draw in 0..200 {
        let n = 1 + rng.next_below(8) as usize;
        let labels = 1 + rng.next_below(3) as usize;
        for l in 0..labels {
            let scores: Vec<f64> = (0..n).map(|_| rng.next_below(6) as f64 / 5.0).collect();
            let truth: Vec<bool> = (0..n).map(|_| rng.next_below(2) == 1).collect();
            if !truth.iter().any(|&t| t) {
                continue;
            }
            let (got, want) = (average_precision(&scores, &truth), ap_prefix_oracle(&scores, &truth));
            ensure((got - want).abs() < 1e-12, || format!("draw {draw} label {l}: AP {got} vs oracle {want}"))?;
            checked += 1;
        }
    }
    let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &[true, false, true, false]);
    ensure(ap == 5.0 / 6.0, || format!("4-point AP {ap:?}"))?;
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let k = 1 + rng.next_below(6) as usize;
        let counts = (0..k * k).map(|_| rng.next_below(40)).collect();
        let scores = ConfusionMatrix::from_counts(k, counts).unwrap().scores();
        for c in &scores.per_class {
            worst = worst.max((c.dice - 2.0 * c.iou / (1.0 + c.iou)).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("Dice identity off by {worst:e}"))?;
    Ok(format!("{checked} label instances match prefix oracle; 4-point AP == 5/6; Dice identity within {worst:.0e}"))
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Check {
    let table = [(0.01, 700), (0.02, 350), (0.05, 140), (0.10, 70), (0.20, 35), (0.35, 20), (0.50, 14), (0.75, 9), (1.0, 7)];
    for (f, e) in table {
        let got = epoch_schedule(f).map_err(|err| err.to_string())?;
        ensure(got == e, || format!("fraction {f}: {got} epochs, table says {e}"))?;
    }
    Ok("all nine published fractions match (1% -> 700 ... 100% -> 7)".into())
}

// ---------------------------------------------------------------- criterion 8

const BIN: &str = env!("CARGO_BIN_EXE_geofuse");

fn write_prior_inputs(dir: &Path) {
    let s = prior_scene(8);
    let grid = |v: Vec<f64>| write_ascii_grid(&cat(PW, PH, v)).unwrap();
    fs::write(dir.join("coarse.asc"), grid(s.coarse.iter().map(|&c| c as f64).collect())).unwrap();
    fs::write(dir.join("fine.asc"), grid(s.fine.iter().map(|&c| c as f64).collect())).unwrap();
    for (k, (m, _, _)) in s.boosts.iter().enumerate() {
        fs::write(dir.join(format!("mask{k}.asc")), grid(m.iter().map(|&b| b as u8 as f64).collect())).unwrap();
    }
    let boosts: String = s
        .boosts
        .iter()
        .enumerate()
        .map(|(k, (_, class, weight))| format!("boost = name=mask{k} class={class} weight={weight} mask=mask{k}.asc\n"))
        .collect();
    fs::write(
        dir.join("cfg.txt"),
        format!("[prior]\ncoarse = coarse.asc\nn_coarse = {NC}\nn_fine = {NF}\npair = coarse.asc, fine.asc\n{boosts}"),
    )
    .unwrap();
}

fn prior_run(dir: &Path, threads: usize, out: &str) -> Result<(Vec<u8>, Vec<u8>), String> {
    let o = Command::new(BIN)
        .args(["prior", "--config", "cfg.txt", "--out", out])
        .current_dir(dir)
        .env("GEOFUSE_THREADS", threads.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || format!("prior run failed: {}", String::from_utf8_lossy(&o.stderr)))?;
    let gft = fs::read(dir.join(out)).map_err(|e| e.to_string())?;
    let manifest = fs::read(dir.join(format!("{out}.manifest"))).map_err(|e| e.to_string())?;
    Ok((gft, manifest))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn criterion_8() -> Check {
    for (n, f, seed) in [(1572, 0.05, 1), (1000, 0.35, 7), (50_000, 0.01, 99)] {
        let a = in_pool(1, || subset_sample(n, f, seed).unwrap());
        let b = in_pool(8, || subset_sample(n, f, seed).unwrap());
        let c = subset_sample(n, f, seed).unwrap();
        ensure(a == b && b == c, || format!("subset_sample({n}, {f}, {seed}) differs between runs"))?;
    }
    let coords = [(0.0, 0.0), (40.01, -105.27), (-33.87, 151.21), (90.0, 180.0), (-90.0, -179.5)];
    for (lat, lon) in coords {
        let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
        let a = bits(in_pool(1, || encode_location_stub(lat, lon, 17).unwrap()));
        let b = bits(in_pool(8, || encode_location_stub(lat, lon, 17).unwrap()));
        let c = bits(encode_location_stub(lat, lon, 17).unwrap());
        ensure(a == b && b == c, || format!("stub encoding of ({lat}, {lon}) differs between runs"))?;
    }
    let s = prior_scene(8);
    let lib1 = in_pool(1, || generate_prior(&prior_config(&s, 1.0)).unwrap());
    let lib8 = in_pool(8, || generate_prior(&prior_config(&s, 1.0)).unwrap());
    let bits = |p: &PriorStack| p.channels().iter().flat_map(|c| c.data().iter().map(|v| v.to_bits())).collect::<Vec<_>>();
    ensure(bits(&lib1) == bits(&lib8), || "generate_prior differs between 1 and 8 threads".into())?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_prior_inputs(dir.path());
    let first = prior_run(dir.path(), 1, "a.gft")?;
    let second = prior_run(dir.path(), 1, "b.gft")?;
    let eight = prior_run(dir.path(), 8, "c.gft")?;
    ensure(first == second, || "two `prior` CLI runs differ".into())?;
    ensure(first == eight, || "`prior` CLI output differs between GEOFUSE_THREADS=1 and 8".into())?;
    Ok(format!(
        "subset, stub encoder and `prior` CLI ({} + {} bytes) bitwise identical across runs and 1 vs 8 threads",
        first.0.len(),
        first.1.len()
    ))
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9() -> Check {
    let cfg = EfficiencyConfig::default();
    ensure(cfg.n_train == 32, || format!("n_train {}", cfg.n_train))?;
    let trials = efficiency_experiment(&cfg, 0..20).map_err(|e| e.to_string())?;
    let wins = trials.iter().filter(|t| t.stacked_wins()).count();
    let mean = |f: fn(&geofuse::metrics::EfficiencyTrial) -> f64| trials.iter().map(f).sum::<f64>() / 20.0;
    let (opt, stk) = (mean(|t| t.r2_optical), mean(|t| t.r2_stacked));
    ensure(wins >= 18, || format!("stacked wins {wins}/20"))?;
    Ok(format!("stacked beats optical-only in {wins}/20 seeds (mean test R2 {stk:.3} vs {opt:.3})"))
}

// --------------------------------------------------------------- criterion 10

fn random_tensor(rng: &mut SplitMix64) -> FusedTensor {
    let (c, h, w) = (1 + rng.next_below(5) as usize, 1 + rng.next_below(9) as usize, 1 + rng.next_below(9) as usize);
    // Arbitrary finite bit patterns, subnormals and -0.0 included.
    let value = |rng: &mut SplitMix64| loop {
        let v = f32::from_bits(rng.next_u64() as u32);
        if v.is_finite() {
            return v;
        }
    };
    let channels = (0..c).map(|_| (0..h * w).map(|_| value(rng)).collect()).collect();
    let provenance = (0..c)
        .map(|k| {
            let norm = match rng.next_below(4) {
                0 => AppliedNorm::Identity,
                1 => AppliedNorm::Byte255,
                2 => AppliedNorm::CategoricalRgb,
                _ => AppliedNorm::MinMax { min: rng.next_gaussian(), max: 1e3 * rng.next_f64() },
            };
            let mut p = Provenance::new(format!("layer{k}:{}", rng.next_below(1000)), norm);
            if rng.next_below(2) == 0 {
                p.manifest = Some(format!("{:016x}", rng.next_u64()));
            }
            p
        })
        .collect();
    let t = (rng.next_below(2) == 0).then(|| GeoTransform::north_up(1e5 * rng.next_f64(), 4e6 * rng.next_f64(), 0.6));
    FusedTensor::new(w, h, t, channels, provenance).unwrap()
}

fn random_grid(rng: &mut SplitMix64) -> Grid {
    let (w, h) = (1 + rng.next_below(12) as usize, 1 + rng.next_below(12) as usize);
    let scale = 10f64.powi(rng.next_below(4) as i32);
    let mut data: Vec<f64> = (0..w * h).map(|_| (rng.next_below(1_999_999) as f64 - 999_999.0) / scale).collect();
    let nodata = (rng.next_below(2) == 0).then_some(-9999.0);
    if nodata.is_some() {
        data[rng.next_below((w * h) as u64) as usize] = -9999.0;
    }
    let t = GeoTransform::north_up(500_000.0 + rng.next_below(100_000) as f64 * 0.5, 4_000_000.25, 0.5 + rng.next_below(60) as f64);
    Grid::new(w, h, t, data, nodata, GridKind::Continuous).unwrap()
}

fn criterion_10() -> Check {
    let mut rng = SplitMix64::new(10);
    let mut fuzzed = 0usize;
    for i in 0..100 {
        let t = random_tensor(&mut rng);
        let bytes = write_gft(&t).map_err(|e| e.to_string())?;
        let back = read_gft(&bytes).map_err(|e| format!("instance {i}: {e}"))?;
        let same = back.width() == t.width()
            && back.height() == t.height()
            && back.transform() == t.transform()
            && back.provenance() == t.provenance()
            && back.to_chw().iter().map(|v| v.to_bits()).eq(t.to_chw().iter().map(|v| v.to_bits()));
        ensure(same, || format!("GFT instance {i} does not round-trip"))?;
        for cut in 0..bytes.len() {
            let r = catch_unwind(AssertUnwindSafe(|| read_gft(&bytes[..cut])));
            ensure(matches!(r, Ok(Err(Error::Format(_)))), || format!("instance {i} cut at {cut}: {r:?}"))?;
            fuzzed += 1;
        }
        for _ in 0..50 {
            let mut bad = bytes.clone();
            let at = rng.next_below(bad.len() as u64) as usize;
            bad[at] ^= (rng.next_below(255) + 1) as u8;
            ensure(catch_unwind(AssertUnwindSafe(|| read_gft(&bad))).is_ok(), || format!("instance {i}: panic on corrupt byte {at}"))?;
            fuzzed += 1;
        }

        let g = random_grid(&mut rng);
        let text = write_ascii_grid(&g).map_err(|e| e.to_string())?;
        let back = read_ascii_grid(&text).map_err(|e| format!("grid {i}: {e}"))?;
        let same = back.width() == g.width()
            && back.height() == g.height()
            && back.transform() == g.transform()
            && back.nodata() == g.nodata()
            && back.data().iter().map(|v| v.to_bits()).eq(g.data().iter().map(|v| v.to_bits()));
        ensure(same, || format!("ASCII grid {i} does not round-trip"))?;
        ensure(write_ascii_grid(&back).unwrap() == text, || format!("ASCII grid {i} is not byte-stable"))?;
    }
    Ok(format!("100 GFT + 100 ASCII instances bit-exact; {fuzzed} truncated/corrupted GFT inputs handled without panic"))
}

fn main() {
    let criteria: [(u32, Duration, fn() -> Check); 10] = [
        (1, Duration::from_secs(5), criterion_1),
        (2, Duration::from_secs(1), criterion_2),
        (3, Duration::from_secs(10), criterion_3),
        (4, Duration::from_secs(1), criterion_4),
        (5, Duration::from_secs(5), criterion_5),
        (6, Duration::from_secs(10), criterion_6),
        (7, Duration::from_secs(1), criterion_7),
        (8, Duration::from_secs(30), criterion_8),
        (9, Duration::from_secs(10), criterion_9),
        (10, Duration::from_secs(10), criterion_10),
    ];
    let mut failed = 0;
    for (id, budget, check) in criteria {
        let start = Instant::now();
        let result = catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let result = result.and_then(|m| {
            if took <= budget {
                Ok(m)
            } else {
                Err(format!("{m}; took {took:.2?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(m) => println!("PASS criterion {id}: {m} [{took:.2?}]"),
            Err(m) => {
                failed += 1;
                println!("FAIL criterion {id}: {m} [{took:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
