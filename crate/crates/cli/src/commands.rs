use std::ffi::OsString;
use std::path::{Path, PathBuf};

use geofuse::fusion::{read_matrix_gft, stack_channels, write_matrix_gft, StackInput};
use geofuse::metrics::{
    efficiency_experiment, epoch_schedule, format_report, format_report_csv, multilabel_metrics, r_squared,
    ridge_probe, segmentation_metrics, subset_sample, EfficiencyConfig, EPOCH_TABLE,
};
use geofuse::prior::{
    generate_prior, Boost, CoOccurrenceSource, PriorConfig, DEFAULT_BLUR_SIGMA, DEFAULT_EPSILON,
};
use geofuse::raster::write_ascii_grid;
use geofuse::rng::SplitMix64;
use geofuse::token::{
    build_token_sequence, cosine_disagreement, cosine_distance_map, init_registers, pairwise_cosine, patchify, pca,
    pca_rgb, EmbeddingRow, EmbeddingSet, LocationEncoder, LocationToken, Projection, SequenceParts,
    StubLocationEncoder, LOCATION_DIM,
};
use geofuse::vector::{binary_mask, parse_geojson, rasterize_classes, to_rgb_raster, TagSelector};
use geofuse::{ClassMap, CoOccurrenceMatrix, GeoTransform, Grid, NormRule, VectorLayer};
use nalgebra::{DMatrix, DVector};

use crate::io::{
    read_bytes, read_class_grid, read_grid, read_number_column, read_number_rows, read_tensor, read_text,
    write_atomic, write_tensor,
};
use crate::spec::{item_error, parse_boost, parse_input, parse_pair, BoostSource, InputSpec, Section};
use crate::{
    AnalyzeCommand, CliError, CliResult, Context, DistmapArgs, EmbedArgs, EpochsArgs, MetricsCommand, PriorArgs,
    ProbeArgs, RasterizeArgs, ReportFormat, RgbArgs, StackArgs, SubsetArgs, TokensArgs,
};

pub const DEFAULT_PATCH: usize = 8;
pub const DEFAULT_DIM: usize = 384;
/// Standard deviation of the seeded cls and positional tables.
const TABLE_STD: f64 = 0.02;

fn text_out(ctx: &Context, sec: &Section) -> Option<PathBuf> {
    ctx.out.clone().or_else(|| sec.path(None, "out"))
}

fn binary_out(ctx: &Context, sec: &Section) -> CliResult<PathBuf> {
    text_out(ctx, sec).ok_or_else(|| CliError::Usage("binary output needs --out".into()))
}

pub fn footprint_desc(g: &Grid) -> String {
    let t = g.transform();
    format!("{}x{} origin ({}, {}) pixel ({}, {})", g.width(), g.height(), t.origin_x, t.origin_y, t.pixel_w, t.pixel_h)
}

fn read_classmap(path: &Path) -> CliResult<ClassMap> {
    ClassMap::parse(&read_text(path)?).map_err(|e| CliError::data(path, e))
}

fn read_vector(path: &Path) -> CliResult<VectorLayer> {
    parse_geojson(&read_bytes(path)?).map_err(|e| CliError::data(path, e))
}

pub fn rasterize(ctx: &mut Context, a: RasterizeArgs) -> CliResult<()> {
    let cfg = ctx.config.clone();
    let sec = Section::new(cfg.as_ref(), "rasterize");
    let vector_path = sec.require(sec.path(a.vector, "vector"), "vector")?;
    let select = sec.value(a.select, "select")?;
    let radius = sec.value(a.radius, "radius")?.unwrap_or(0.0);
    let f = a.footprint;
    let (transform, w, h) = match sec.path(f.like, "like") {
        Some(p) => {
            let g = read_grid(&p)?;
            (*g.transform(), g.width(), g.height())
        }
        None => {
            let w = sec.require(sec.value(f.width, "width")?, "width")?;
            let h = sec.require(sec.value(f.height, "height")?, "height")?;
            let ox = sec.require(sec.value(f.origin_x, "origin_x")?, "origin_x")?;
            let oy = sec.require(sec.value(f.origin_y, "origin_y")?, "origin_y")?;
            let gsd = sec.require(sec.value(f.gsd, "gsd")?, "gsd")?;
            (GeoTransform::north_up(ox, oy, gsd), w, h)
        }
    };
    let layer = read_vector(&vector_path)?;
    let out = text_out(ctx, &sec);
    let (grid, summary) = match select {
        Some(s) => {
            let selector: TagSelector = s.parse()?;
            let mask = binary_mask(&layer, &selector, radius, &transform, w, h)?;
            let n = mask.count();
            (mask.into_grid(), format!("mask {w}x{h}, {n} pixels set"))
        }
        None => {
            let map_path = sec.require(sec.path(a.classmap, "classmap"), "classmap")?;
            let map = read_classmap(&map_path)?;
            let unmatched = layer.features.iter().filter(|f| !map.covers(f)).count();
            let g = rasterize_classes(&layer, &map, &transform, w, h)?;
            (g, format!("classes {w}x{h}, {} features, {unmatched} unmatched", layer.len()))
        }
    };
    let text = String::from_utf8(write_ascii_grid(&grid)?).expect("ASCII grid writer emits UTF-8");
    ctx.emit_text(out, &text, &summary)
}

pub fn rgb(ctx: &mut Context, a: RgbArgs) -> CliResult<()> {
    let cfg = ctx.config.clone();
    let sec = Section::new(cfg.as_ref(), "rgb");
    let classes = sec.require(sec.path(a.classes, "classes"), "classes")?;
    let map_path = sec.require(sec.path(a.classmap, "classmap"), "classmap")?;
    let sigma = sec.value(a.sigma, "sigma")?;
    let out = binary_out(ctx, &sec)?;
    let grid = read_class_grid(&classes)?;
    let map = read_classmap(&map_path)?;
    let [r, g, b] = to_rgb_raster(&grid, &map, sigma)?;
    let tensor = stack_channels(&[
        StackInput::new("rgb:r", &r, NormRule::CategoricalRgb),
        StackInput::new("rgb:g", &g, NormRule::CategoricalRgb),
        StackInput::new("rgb:b", &b, NormRule::CategoricalRgb),
    ])?;
    write_tensor(&out, &tensor)?;
    ctx.wrote(&out, &format!("3 channels {}x{}", tensor.width(), tensor.height()))
}

fn build_boost(spec: crate::spec::BoostSpec, coarse: &Grid) -> CliResult<Boost> {
    let mask = match &spec.source {
        BoostSource::Mask(p) => {
            let g = read_class_grid(p)?;
            geofuse::vector::BinaryMask::new(g).map_err(|e| CliError::data(p, e))?
        }
        BoostSource::Vector { path, select, radius } => {
            let layer = read_vector(path)?;
            binary_mask(&layer, select, *radius, coarse.transform(), coarse.width(), coarse.height())
                .map_err(|e| CliError::data(path, e))?
        }
    };
    Ok(Boost { name: spec.name, mask, target_class: spec.class, weight: spec.weight })
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s: OsString = out.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

pub fn prior(ctx: &mut Context, a: PriorArgs) -> CliResult<()> {
    let cfg = ctx.config.clone();
    let sec = Section::new(cfg.as_ref(), "prior");
    let coarse_path = sec.require(sec.path(a.coarse, "coarse"), "coarse")?;
    let n_coarse = sec.require(sec.value(a.n_coarse, "n_coarse")?, "n_coarse")?;
    let n_fine = sec.require(sec.value(a.n_fine, "n_fine")?, "n_fine")?;
    let matrix = sec.path(a.cooccurrence, "cooccurrence");
    let pairs = sec.list(a.pair, "pair");
    let epsilon = sec.value(a.epsilon, "epsilon")?.unwrap_or(DEFAULT_EPSILON);
    let sigma = sec.value(a.sigma, "sigma")?.unwrap_or(DEFAULT_BLUR_SIGMA);
    let boost_items = sec.list(a.boost, "boost");
    let out = binary_out(ctx, &sec)?;

    let coarse = read_class_grid(&coarse_path)?;
    let source = match (matrix, pairs.is_empty()) {
        (Some(m), true) => {
            CoOccurrenceSource::Matrix(CoOccurrenceMatrix::parse(&read_text(&m)?).map_err(|e| CliError::data(&m, e))?)
        }
        (None, false) => {
            let mut grids = Vec::with_capacity(pairs.len());
            for item in &pairs {
                let (c, f) = parse_pair(item).map_err(|e| item_error(item, e))?;
                grids.push((read_class_grid(&c)?, read_class_grid(&f)?));
            }
            CoOccurrenceSource::Estimate { pairs: grids, epsilon }
        }
        (Some(_), false) => {
            return Err(CliError::Usage("give either a co-occurrence matrix or training pairs, not both".into()))
        }
        (None, true) => return Err(CliError::Usage("missing --cooccurrence or --pair".into())),
    };
    let mut boosts = Vec::with_capacity(boost_items.len());
    for item in &boost_items {
        let spec = parse_boost(item).map_err(|e| item_error(item, e))?;
        boosts.push(build_boost(spec, &coarse)?);
    }
    let coarse_name = coarse_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| coarse_path.display().to_string());
    let stack = generate_prior(&PriorConfig {
        coarse_name,
        coarse,
        n_coarse,
        n_fine,
        source,
        blur_sigma: sigma,
        boosts,
    })?;
    let manifest = stack.manifest().expect("generate_prior records a manifest");
    let hash = manifest.hash();
    let manifest_text = manifest.to_text();
    let tensor = geofuse::fusion::proc_stack(&[], &stack, &[])?;
    write_tensor(&out, &tensor)?;
    let mpath = manifest_path(&out);
    write_atomic(&mpath, manifest_text.as_bytes())?;
    let (dev, _) = stack.simplex_error();
    ctx.wrote(&out, &format!("{n_fine} channels {}x{} max |sum-1| {dev:e}", stack.width(), stack.height()))?;
    ctx.wrote(&mpath, &format!("manifest_sha256={hash}"))
}

fn to_inputs<'a>(specs: &[InputSpec], grids: &'a [Grid]) -> Vec<StackInput<'a>> {
    specs.iter().zip(grids).map(|(s, g)| StackInput::new(s.name.clone(), g, s.rule)).collect()
}

fn load_inputs(specs: &[InputSpec]) -> CliResult<Vec<Grid>> {
    specs.iter().map(|s| read_grid(&s.path)).collect()
}

pub fn stack(ctx: &mut Context, a: StackArgs) -> CliResult<()> {
    let cfg = ctx.config.clone();
    let sec = Section::new(cfg.as_ref(), "stack");
    let parse_all = |items: Vec<crate::spec::Item>| -> CliResult<Vec<InputSpec>> {
        items.iter().map(|i| parse_input(i).map_err(|e| item_error(i, e))).collect()
    };
    let inputs = parse_all(sec.list(a.input, "input"))?;
    let extras = parse_all(sec.list(a.extra, "extra"))?;
    let prior_path = sec.path(a.prior, "prior");
    let out = binary_out(ctx, &sec)?;
    if inputs.is_empty() {
        return Err(CliError::Usage("missing --input (or `input` in [stack])".into()));
    }
    let in_grids = load_inputs(&inputs)?;
    let ex_grids = load_inputs(&extras)?;
    let first = (&inputs[0], &in_grids[0]);
    for (s, g) in inputs.iter().zip(&in_grids).chain(extras.iter().zip(&ex_grids)).skip(1) {
        if !g.same_footprint(first.1) {
            return Err(CliError::Invalid(format!(
                "layer '{}' ({}) is not aligned with layer '{}' ({}): {} vs {}",
                s.name,
                s.path.display(),
                first.0.name,
                first.0.path.display(),
                footprint_desc(g),
                footprint_desc(first.1)
            )));
        }
    }
    let mut tensor = stack_channels(&to_inputs(&inputs, &in_grids))?;
    if let Some(p) = prior_path {
        let prior = read_tensor(&p)?;
        if prior.width() != tensor.width()
            || prior.height() != tensor.height()
            || prior.transform() != tensor.transform()
        {
            return Err(CliError::Invalid(format!(
                "prior ({}) is not aligned with layer '{}' ({}): {}x{} vs {}",
                p.display(),
                first.0.name,
                first.0.path.display(),
                prior.width(),
                prior.height(),
                footprint_desc(first.1)
            )));
        }
        tensor = tensor.concat(prior)?;
    }
    if !extras.is_empty() {
        tensor = tensor.concat(stack_channels(&to_inputs(&extras, &ex_grids))?)?;
    }
    write_tensor(&out, &tensor)?;
    let names: Vec<&str> = tensor.provenance().iter().map(|p| p.source.as_str()).collect();
    ctx.wrote(
        &out,
        &format!("{} channels {}x{} [{}]", tensor.n_channels(), tensor.width(), tensor.height(), names.join(", ")),
    )
}

fn read_projection(path: &Path, dim: usize) -> CliResult<Projection> {
    let (rows, cols, data) = read_matrix_gft(&read_bytes(path)?).map_err(|e| CliError::data(path, e))?;
    if rows != LOCATION_DIM || cols != dim {
        return Err(CliError::Invalid(format!(
            "{}: projection is {rows}x{cols}, expected {LOCATION_DIM}x{dim}",
            path.display()
        )));
    }
    Projection::new(DMatrix::from_row_slice(rows, cols, &data), DVector::zeros(cols)).map_err(|e| CliError::data(path, e))
}

pub fn tokens(ctx: &mut Context, a: TokensArgs) -> CliResult<()> {
    let cfg = ctx.config.clone();
    let sec = Section::new(cfg.as_ref(), "tokens");
    let image_path = sec.require(sec.path(a.image, "image"), "image")?;
    let patch = sec.value(a.patch, "patch")?.unwrap_or(DEFAULT_PATCH);
    let dim = sec.value(a.dim, "dim")?.unwrap_or(DEFAULT_DIM);
    let registers = sec.value(a.registers, "registers")?.unwrap_or(0);
    let lat = sec.value(a.lat, "lat")?;
    let lon = sec.value(a.lon, "lon")?;
    let proj_path = sec.path(a.projection, "projection");
    let out = binary_out(ctx, &sec)?;
    if dim == 0 {
        return Err(CliError::Invalid("--dim must be positive".into()));
    }
    let coord = match (lat, lon) {
        (Some(la), Some(lo)) => Some((la, lo)),
        (None, None) => None,
        _ => return Err(CliError::Usage("--lat and --lon go together".into())),
    };

    let image = read_tensor(&image_path)?;
    let mut seeds = SplitMix64::new(ctx.seed);
    let (s_patch, s_cls, s_pos, s_reg, s_proj) =
        (seeds.next_u64(), seeds.next_u64(), seeds.next_u64(), seeds.next_u64(), seeds.next_u64());
    let embed = Projection::seeded(image.n_channels() * patch * patch, dim, s_patch)?;
    let patches = patchify(&image, patch, &embed).map_err(|e| CliError::data(&image_path, e))?;
    let n = patches.nrows();
    let cls = DVector::from_iterator(dim, init_registers(1, dim, s_cls).iter().map(|v| v * TABLE_STD));
    let pos = init_registers(n + 2 + registers, dim, s_pos) * TABLE_STD;
    let regs = init_registers(registers, dim, s_reg);
    let loc_embedding = match coord {
        Some((la, lo)) => Some(StubLocationEncoder::new(ctx.seed).encode(la, lo)?),
        None => None,
    };
    let projection = match (&loc_embedding, proj_path) {
        (None, _) => None,
        (Some(_), Some(p)) => Some(read_projection(&p, dim)?),
        (Some(_), None) => Some(Projection::seeded(LOCATION_DIM, dim, s_proj)?),
    };
    let location = match (&loc_embedding, &projection) {
        (Some(e), Some(p)) => Some(LocationToken { embedding: e, projection: p }),
        _ => None,
    };
    let seq = build_token_sequence(&SequenceParts {
        cls: &cls,
        location,
        patches: &patches,
        registers: &regs,
        pos_embed: &pos,
    })?;
    let z0 = seq.z0();
    let row_major: Vec<f64> = z0.transpose().iter().copied().collect();
    let bytes = write_matrix_gft("z0", seq.len(), seq.dim(), &row_major)?;
    write_atomic(&out, &bytes)?;
    let loc_id = seq
        .location_index()
        .map_or_else(|| "none".to_string(), |i| seq.positional_ids()[i].to_string());
    ctx.wrote(
        &out,
        &format!(
            "tokens={} patches={} registers={} loc_id={loc_id} dim={}",
            seq.len(),
            seq.n_patches(),
            seq.n_registers(),
            seq.dim()
        ),
    )
}

fn parse_points(path: &Path) -> CliResult<Vec<(f64, f64, String)>> {
    let text = read_text(path)?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = s.split(',').map(str::trim).collect();
        let coords = (fields[0].parse::<f64>(), fields.get(1).map(|f| f.parse::<f64>()));
        match coords {
            (Ok(lat), Some(Ok(lon))) if fields.len() <= 3 => {
                points.push((lat, lon, fields.get(2).copied().unwrap_or("").to_string()))
            }
            _ if points.is_empty() && i == 0 => {}
            _ => {
                return Err(CliError::Invalid(format!(
                    "{}:{}: expected lat,lon[,group]",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(points)
}

pub fn embed(ctx: &mut Context, a: EmbedArgs) -> CliResult<()> {
    let points = parse_points(&a.points)?;
    let encoder = StubLocationEncoder::new(ctx.seed);
    let rows = points
        .into_iter()
        .map(|(lat, lon, group)| Ok(EmbeddingRow { lat, lon, group, vector: encoder.encode(lat, lon)? }))
        .collect::<CliResult<Vec<_>>>()?;
    let set = EmbeddingSet::new(rows)?;
    let summary = format!("{} embeddings of width {} ({})", set.len(), set.dim(), encoder.descriptor());
    let text = set.to_csv()?;
    let out = ctx.out.clone();
    ctx.emit_text(out, &text, &summary)
}

fn read_embeddings(path: &Path) -> CliResult<EmbeddingSet> {
    EmbeddingSet::from_csv(&read_text(path)?).map_err(|e| CliError::data(path, e))
}

fn reference_row(set: &EmbeddingSet, a: &DistmapArgs) -> CliResult<usize> {
    match (a.ref_row, a.ref_lat, a.ref_lon) {
        (Some(r), _, _) if r < set.len() => Ok(r),
        (Some(r), _, _) => Err(CliError::Invalid(format!("--ref-row {r} but the set has {} rows", set.len()))),
        (None, Some(lat), Some(lon)) => {
            let d = |row: &EmbeddingRow| (row.lat - lat).powi(2) + (row.lon - lon).powi(2);
            set.rows()
                .iter()
                .enumerate()
                .min_by(|(i, x), (j, y)| d(x).total_cmp(&d(y)).then(i.cmp(j)))
                .map(|(i, _)| i)
                .ok_or_else(|| CliError::Invalid("embedding set is empty".into()))
        }
        _ => Err(CliError::Usage("distmap needs --ref-row or --ref-lat/--ref-lon".into())),
    }
}

pub fn analyze(ctx: &mut Context, cmd: AnalyzeCommand) -> CliResult<()> {
    let out = ctx.out.clone();
    match cmd {
        AnalyzeCommand::Cosine { embeddings } => {
            let set = read_embeddings(&embeddings)?;
            let (labels, m) = pairwise_cosine(&set)?;
            let mut text = format!("group,{}\n", labels.join(","));
            for (r, label) in labels.iter().enumerate() {
                let cells: Vec<String> = (0..labels.len()).map(|c| m[(r, c)].to_string()).collect();
                text.push_str(&format!("{label},{}\n", cells.join(",")));
            }
            ctx.emit_text(out, &text, &format!("{0}x{0} group cosine matrix", labels.len()))
        }
        AnalyzeCommand::Distmap(a) => {
            let set = read_embeddings(&a.embeddings)?;
            let r = reference_row(&set, &a)?;
            let reference = set.rows()[r].vector.clone();
            let (column, values) = match &a.after {
                None => ("distance", cosine_distance_map(&set, &reference)?),
                Some(p) => {
                    let after = read_embeddings(p)?;
                    let ref_after = after
                        .rows()
                        .get(r)
                        .map(|row| row.vector.clone())
                        .ok_or_else(|| CliError::Invalid(format!("{}: no row {r}", p.display())))?;
                    ("disagreement", cosine_disagreement(&set, &after, &reference, &ref_after)?)
                }
            };
            let mut text = format!("lat,lon,group,{column}\n");
            for (row, v) in set.rows().iter().zip(&values) {
                text.push_str(&format!("{},{},{},{v}\n", row.lat, row.lon, row.group));
            }
            ctx.emit_text(out, &text, &format!("{} rows, reference row {r}", values.len()))
        }
        AnalyzeCommand::Pca { embeddings, k } => {
            let set = read_embeddings(&embeddings)?;
            let p = pca(&set, k)?;
            let colors = (set.len() >= 3).then(|| pca_rgb(&set)).transpose()?;
            let eig: Vec<String> = p.eigenvalues.iter().map(f64::to_string).collect();
            let mut text = format!("# eigenvalues={} rank={}\nlat,lon,group", eig.join(" "), p.rank);
            for c in 0..p.scores.ncols() {
                text.push_str(&format!(",pc{}", c + 1));
            }
            if colors.is_some() {
                text.push_str(",r,g,b");
            }
            text.push('\n');
            for (i, row) in set.rows().iter().enumerate() {
                text.push_str(&format!("{},{},{}", row.lat, row.lon, row.group));
                for c in 0..p.scores.ncols() {
                    text.push_str(&format!(",{}", p.scores[(i, c)]));
                }
                if let Some(rgb) = &colors {
                    let [r, g, b] = rgb.colors[i];
                    text.push_str(&format!(",{r},{g},{b}"));
                }
                text.push('\n');
            }
            ctx.emit_text(out, &text, &format!("{} rows, {} components, rank {}", set.len(), p.scores.ncols(), p.rank))
        }
    }
}

pub fn subset(ctx: &mut Context, a: SubsetArgs) -> CliResult<()> {
    let cfg = ctx.config.clone();
    let sec = Section::new(cfg.as_ref(), "subset");
    let n = sec.require(sec.value(a.n, "n")?, "n")?;
    let fraction = sec.require(sec.value(a.fraction, "fraction")?, "fraction")?;
    let plan = subset_sample(n, fraction, ctx.seed)?;
    let summary = format!("{} of {n} indices, {} epochs", plan.indices.len(), plan.epochs);
    let out = text_out(ctx, &sec);
    ctx.emit_text(out, &plan.to_csv(), &summary)
}

pub fn epochs(ctx: &mut Context, a: EpochsArgs) -> CliResult<()> {
    let text = match a.fraction {
        Some(f) => format!("fraction={f}\nepochs={}\n", epoch_schedule(f)?),
        None => {
            let mut t = String::from("fraction,epochs\n");
            for (f, e) in EPOCH_TABLE {
                t.push_str(&format!("{f},{e}\n"));
            }
            t
        }
    };
    let out = ctx.out.clone();
    ctx.emit_text(out, &text, "epoch schedule")
}

fn render(pairs: &[(String, String)], format: ReportFormat) -> String {
    match format {
        ReportFormat::Kv => format_report(pairs),
        ReportFormat::Csv => format_report_csv(pairs),
    }
}

fn truth_matrix(path: &Path) -> CliResult<Vec<Vec<bool>>> {
    read_number_rows(path)?
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .map(|v| match v {
                    0.0 => Ok(false),
                    1.0 => Ok(true),
                    _ => Err(CliError::Invalid(format!("{}: row {}: truth value {v} is not 0 or 1", path.display(), i + 1))),
                })
                .collect()
        })
        .collect()
}

pub fn metrics(ctx: &mut Context, cmd: MetricsCommand) -> CliResult<()> {
    let out = ctx.out.clone();
    let (pairs, format, what) = match cmd {
        MetricsCommand::Seg { pred, truth, classes, format } => {
            let r = segmentation_metrics(&read_class_grid(&pred)?, &read_class_grid(&truth)?, classes)?;
            (r.report(), format, format!("mean_iou={} mean_dice={}", r.mean_iou(), r.mean_dice()))
        }
        MetricsCommand::Reg { pred, truth, format } => {
            let p = read_number_column(&pred)?;
            let t = read_number_column(&truth)?;
            let r2 = r_squared(&p, &t)?;
            (vec![("n".to_string(), p.len().to_string()), ("r2".to_string(), r2.to_string())], format, format!("r2={r2}"))
        }
        MetricsCommand::Multilabel { scores, truth, threshold, format } => {
            let s = read_number_rows(&scores)?;
            let t = truth_matrix(&truth)?;
            let r = multilabel_metrics(&s, &t, threshold)?;
            (r.report(), format, format!("macro_f1={} macro_ap={}", r.macro_f1, r.macro_ap))
        }
    };
    ctx.emit_text(out, &render(&pairs, format), &what)
}

fn split_xy(path: &Path) -> CliResult<(DMatrix<f64>, Vec<f64>)> {
    let rows = read_number_rows(path)?;
    let width = rows.first().map_or(0, Vec::len);
    if width < 2 {
        return Err(CliError::Invalid(format!("{}: need at least one feature column and a target", path.display())));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != width) {
        return Err(CliError::Invalid(format!("{}: row {} has {} values, expected {width}", path.display(), i + 1, rows[i].len())));
    }
    let x = DMatrix::from_fn(rows.len(), width - 1, |r, c| rows[r][c]);
    let y = rows.iter().map(|r| r[width - 1]).collect();
    Ok((x, y))
}

pub fn probe(ctx: &mut Context, a: ProbeArgs) -> CliResult<()> {
    let defaults = EfficiencyConfig::default();
    let lambda = a.lambda.unwrap_or(defaults.lambda);
    let out = ctx.out.clone();
    if let (Some(train), Some(test)) = (&a.train, &a.test) {
        let (tx, ty) = split_xy(train)?;
        let (vx, vy) = split_xy(test)?;
        if tx.ncols() != vx.ncols() {
            return Err(CliError::Invalid(format!("train has {} features, test has {}", tx.ncols(), vx.ncols())));
        }
        let (_, r2) = ridge_probe(&tx, &ty, &vx, &vy, lambda)?;
        let mut pairs = vec![
            ("n_train".to_string(), ty.len().to_string()),
            ("n_test".to_string(), vy.len().to_string()),
            ("features".to_string(), tx.ncols().to_string()),
            ("lambda".to_string(), lambda.to_string()),
            ("r2".to_string(), r2.to_string()),
        ];
        if let Some(k) = a.optical_cols {
            if k == 0 || k > tx.ncols() {
                return Err(CliError::Invalid(format!("--optical-cols {k} outside 1..={}", tx.ncols())));
            }
            let (_, r2k) = ridge_probe(&tx.columns(0, k).into_owned(), &ty, &vx.columns(0, k).into_owned(), &vy, lambda)?;
            pairs.push((format!("r2_first{k}"), r2k.to_string()));
        }
        return ctx.emit_text(out, &format_report(&pairs), &format!("r2={r2}"));
    }
    let cfg = EfficiencyConfig {
        n_train: a.n_train.unwrap_or(defaults.n_train),
        n_test: a.n_test.unwrap_or(defaults.n_test),
        lambda,
        ..defaults
    };
    let seeds = ctx.seed..ctx.seed.saturating_add(a.seeds);
    let trials = efficiency_experiment(&cfg, seeds)?;
    let wins = trials.iter().filter(|t| t.stacked_wins()).count();
    let mut text = String::from("seed,r2_optical,r2_stacked,stacked_wins\n");
    for t in &trials {
        text.push_str(&format!("{},{},{},{}\n", t.seed, t.r2_optical, t.r2_stacked, t.stacked_wins()));
    }
    let tally = format!("stacked_wins={wins}/{}", trials.len());
    text.push_str(&format!("# {tally}\n"));
    ctx.emit_text(out, &text, &tally)
}

