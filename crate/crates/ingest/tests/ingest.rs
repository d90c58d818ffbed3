use std::fs;
use std::path::PathBuf;

use cfpose_ingest::{
    load_image, rgb_to_hsv, save_image, segment_hsv, HsvThreshold, IngestError, Intrinsics, Raster,
};
use proptest::prelude::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn single_white_pixel_ppm() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("white.ppm");
    fs::write(&path, b"P6\n1 1\n255\n\xff\xff\xff").unwrap();
    let r = load_image(&path).unwrap();
    assert_eq!((r.width(), r.height()), (1, 1));
    assert_eq!(r.pixel(0, 0), [255, 255, 255]);
    let seg = segment_hsv(&r, &HsvThreshold::default(), &Intrinsics::new(800.0));
    assert!(matches!(seg, Err(IngestError::EmptySegmentation)));
}

#[test]
fn ppm_and_png_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let raster = Raster::new(2, 2, vec![255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30]).unwrap();
    for name in ["a.ppm", "a.png"] {
        let path = dir.path().join(name);
        save_image(&path, &raster).unwrap();
        assert_eq!(load_image(&path).unwrap(), raster);
    }
    assert!(matches!(
        save_image(&dir.path().join("a.bmp"), &raster),
        Err(IngestError::UnsupportedFormat(_))
    ));
}

#[test]
fn bad_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.png");
    assert!(matches!(load_image(&missing), Err(IngestError::Io(_))));

    let junk = dir.path().join("junk.dat");
    fs::write(&junk, b"definitely not an image").unwrap();
    assert!(matches!(load_image(&junk), Err(IngestError::UnsupportedFormat(_))));
    // The extension is used as a hint when the content is unrecognizable.
    let junk_png = dir.path().join("junk.png");
    fs::write(&junk_png, b"definitely not an image").unwrap();
    assert!(matches!(load_image(&junk_png), Err(IngestError::CorruptFile(_))));

    let truncated = dir.path().join("cut.png");
    let bytes = fs::read(fixture("wall.png")).unwrap();
    fs::write(&truncated, &bytes[..bytes.len() / 3]).unwrap();
    assert!(matches!(load_image(&truncated), Err(IngestError::CorruptFile(_))));
}

#[test]
fn wall_fixture_segments_to_reference_count() {
    let reference = fs::read_to_string(fixture("wall_reference.txt")).unwrap();
    let nums: Vec<usize> = reference.split_whitespace().map(|s| s.parse().unwrap()).collect();
    let raster = load_image(&fixture("wall.png")).unwrap();
    assert_eq!((raster.width() as usize, raster.height() as usize), (nums[0], nums[1]));

    let set = segment_hsv(&raster, &HsvThreshold::default(), &Intrinsics::new(800.0)).unwrap();
    let expected = nums[2] as f64;
    let got = set.len() as f64;
    assert!((got - expected).abs() <= 0.02 * expected, "{got} vs {expected}");
    assert_eq!(set.dim(), 2);
    assert!(set.points().iter().all(|p| p.z == 1.0));
    let gray = set.gray().unwrap();
    assert!(gray.iter().all(|g| (0.0..=1.0).contains(g)));
}

#[test]
fn uniform_images() {
    let intr = Intrinsics::new(100.0);
    let red = Raster::filled(4, 3, [220, 10, 10]);
    let set = segment_hsv(&red, &HsvThreshold::default(), &intr).unwrap();
    assert_eq!(set.len(), 12);
    // Row-major: first pixel is the top-left corner, relative to the image center.
    let p0 = set.points()[0];
    assert!((p0.x - (-2.0 / 100.0)).abs() < 1e-15 && (p0.y - (-1.5 / 100.0)).abs() < 1e-15);
    let p1 = set.points()[1];
    assert!((p1.x - (-1.0 / 100.0)).abs() < 1e-15 && p1.y == p0.y);

    let blue = Raster::filled(4, 3, [10, 10, 220]);
    assert!(matches!(
        segment_hsv(&blue, &HsvThreshold::default(), &intr),
        Err(IngestError::EmptySegmentation)
    ));
}

#[test]
fn explicit_principal_point() {
    let mut r = Raster::filled(5, 5, [0, 0, 0]);
    r.set_pixel(3, 1, [255, 0, 0]);
    let intr = Intrinsics { focal_length: 2.0, principal_point: Some([1.0, 1.0]) };
    let set = segment_hsv(&r, &HsvThreshold::default(), &intr).unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!((set.points()[0].x, set.points()[0].y), (1.0, 0.0));
    assert_eq!(intr.to_pixel(&r, 1.0, 0.0), (3.0, 1.0));
    assert!((set.gray().unwrap()[0] - 0.299).abs() < 1e-12);
}

#[test]
fn hsv_matches_reference_table() {
    let text = fs::read_to_string(fixture("hsv_grid.csv")).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let rgb = [f[0], f[1], f[2]].map(|s| s.parse::<u8>().unwrap());
        let [h, s, v] = [f[3], f[4], f[5]].map(|s| s.parse::<f64>().unwrap());
        let (gh, gs, gv) = rgb_to_hsv(rgb);
        let dh = (gh - h).abs();
        assert!(dh.min(360.0 - dh) < 1e-9, "{rgb:?}: hue {gh} vs {h}");
        assert!((gs - s).abs() < 1e-9 && (gv - v).abs() < 1e-9, "{rgb:?}");
        rows += 1;
    }
    assert_eq!(rows, 216);
}

proptest! {
    #[test]
    fn hsv_ranges(r: u8, g: u8, b: u8) {
        let (h, s, v) = rgb_to_hsv([r, g, b]);
        prop_assert!((0.0..360.0).contains(&h));
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn segmentation_count_matches_pixel_test(seed in proptest::collection::vec(any::<u8>(), 48)) {
        let raster = Raster::new(4, 4, seed).unwrap();
        let thr = HsvThreshold::default();
        let expected = (0..4).flat_map(|y| (0..4).map(move |x| (x, y)))
            .filter(|&(x, y)| thr.accepts(raster.pixel(x, y)))
            .count();
        match segment_hsv(&raster, &thr, &Intrinsics::new(10.0)) {
            Ok(set) => prop_assert_eq!(set.len(), expected),
            Err(IngestError::EmptySegmentation) => prop_assert_eq!(expected, 0),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
