use hotcs::config::parse_config;
use hotcs::pipelines::{self, area_ratio, image_references, measure, measurements_for, SweepCell};
use hotcs_core::datagen::{gen_channel_trace, gen_image, ChannelParams, ImageParams};
use hotcs_core::solvers::SolverConfig;
use hotcs_core::{CVector, PriorTransform, C64};

const GOLDEN_BOOST: &str = r#"{"schema_version":1,"seed":2024,"pipeline":{"name":"boost","prior":"dct",
"signal":{"kind":"synthetic_audio","n":256,"max_bin":60},"measurements":64,"snr_db":30,"rounds":3,"trials":3}}"#;

fn run(text: &str) -> pipelines::PipelineReport {
    pipelines::run(&parse_config(text).unwrap()).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn boost_report_matches_golden_file() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/boost_golden.csv");
    let csv = run(GOLDEN_BOOST).table.to_csv();
    if std::env::var_os("HOTCS_BLESS").is_some() {
        std::fs::write(path, &csv).unwrap();
    }
    assert_eq!(csv, std::fs::read_to_string(path).unwrap());
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let cfgs = [
        GOLDEN_BOOST,
        r#"{"schema_version":1,"seed":4,"pipeline":{"name":"sequential_estimation","channel":{"n":16,"steps":8},"ratio":0.5,"snr_db":25,"trials":3}}"#,
        r#"{"schema_version":1,"seed":4,"pipeline":{"name":"image_cs","image":{"kind":"synthetic_image","size":16},"ratios":[0.4,0.7],"snrs_db":[25],"trials":2}}"#,
    ];
    for text in cfgs {
        let one = in_pool(1, || run(text));
        let three = in_pool(3, || run(text));
        assert_eq!(one.table, three.table);
        assert_eq!(one.summary, three.summary);
    }
}

#[test]
fn measurement_helpers() {
    assert_eq!(measurements_for(0.45, 64), 29);
    assert_eq!(measurements_for(0.0, 64), 1);
    assert_eq!(measurements_for(2.0, 64), 64);
    let x = CVector::new((0..16).map(|i| C64::new(i as f64 - 7.5, 0.0)).collect()).unwrap();
    let a = measure(&x, 8, None, false, true, 1, 2).unwrap();
    let b = measure(&x, 8, None, false, true, 1, 3).unwrap();
    assert_eq!(a.y, b.y);
    assert_eq!(a.model.sigma2(), 0.0);
    let noisy = measure(&x, 8, Some(20.0), false, true, 1, 2).unwrap();
    assert_ne!(noisy.y, a.y);
    assert!(measure(&x, 17, None, false, false, 1, 2).is_err());
}

#[test]
fn area_ratio_counts_cells() {
    let cell = |p: f64, h: f64| SweepCell {
        ratio: 0.5,
        snr_db: 30.0,
        nmse_prior: p,
        nmse_hot: h,
        corr_prior: 0.0,
        corr_hot: 0.0,
        unconverged_prior: 0,
        unconverged_hot: 0,
    };
    let cells = [cell(0.05, 0.01), cell(0.2, 0.05), cell(0.3, 0.09), cell(0.5, 0.4)];
    assert_eq!(area_ratio(&cells, 0.1), (1, 3, Some(3.0)));
    assert_eq!(area_ratio(&cells[1..], 0.1), (0, 2, None));
}

#[test]
fn frozen_on_grid_channel_is_recovered_exactly() {
    let p = ChannelParams { n: 32, paths: 3, steps: 6, ar_coeff: 1.0, on_grid: true, ..ChannelParams::default() };
    let trace = gen_channel_trace(&p, 9).unwrap();
    assert!(trace.windows(2).all(|w| w[0] == w[1]));
    let prior = PriorTransform::dft(32).unwrap();
    let solver = SolverConfig::Omp { max_atoms: 3, residual_tol: 0.0 };
    let s = pipelines::sequential_estimation(&trace, 0.5, None, &prior, &solver, 1).unwrap();
    assert_eq!(s.nmse_hot.len(), 6);
    assert!(s.nmse_prior.iter().all(|&e| e <= 1e-20), "{:?}", s.nmse_prior);
    assert!(s.nmse_hot.iter().all(|&e| e <= 1e-20), "{:?}", s.nmse_hot);
}

#[test]
fn topk_full_retention_is_lossless() {
    let img = gen_image(&ImageParams { size: 32, ..ImageParams::default() }, 3).unwrap();
    let prior = PriorTransform::haar(32, None).unwrap();
    let refs = image_references(&img, 2).unwrap();
    let r = pipelines::image_topk_compression(&img, &prior, &refs, 1.0).unwrap();
    assert_eq!(r.kept, 32 * 32);
    assert!(r.nmse_prior <= 1e-24 && r.nmse_hot <= 1e-24);
    assert!(pipelines::image_topk_compression(&img, &prior, &refs, 0.0).is_err());
}

#[test]
fn image_references_are_reproducible() {
    let params = ImageParams { size: 32, ..ImageParams::default() };
    let a = image_references(&gen_image(&params, 5).unwrap(), 2).unwrap();
    let b = image_references(&gen_image(&params, 5).unwrap(), 2).unwrap();
    assert_eq!(a.refs(), b.refs());
    assert_eq!(a.len(), 2);
}

#[test]
fn every_pipeline_runs_on_a_small_config() {
    let cfgs = [
        r#"{"schema_version":1,"seed":1,"pipeline":{"name":"weak_guides_strong","prior":"dct","signal":{"kind":"synthetic_audio","n":128,"max_bin":40},"measurements":48,"snr_db":20,"hyper_sweep":[0.5,1,2],"trials":2}}"#,
        r#"{"schema_version":1,"seed":1,"pipeline":{"name":"phase_transition_sweep","source":{"kind":"synthetic_audio","n":128,"max_bin":40},"prior":"dct","ratios":[0.3,0.6],"snrs_db":[20,30],"trials":1}}"#,
        r#"{"schema_version":1,"seed":1,"pipeline":{"name":"image_topk","image":{"kind":"synthetic_image","size":32},"keep_fractions":[0.05,0.1,0.2]}}"#,
    ];
    for text in cfgs {
        let rep = run(text);
        assert!(!rep.table.to_csv().is_empty());
        assert!(rep.summary.get("pipeline").is_some());
    }
}
