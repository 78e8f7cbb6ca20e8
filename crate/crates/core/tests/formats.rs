use texton_core::animation::{SHEAR_KEYFRAMES, SHEAR_PERTURBATION_STD};
use texton_core::editing::DEFAULT_GAMMA;
use texton_core::io::{decode_ppm, encode_ppm, set_from_str, set_to_string, Provenance, Tensor, TextonDocument};
use texton_core::objectives::{LossWeights, MatchWeights, ReconstructionWeights};
use texton_core::RgbImage;

const GOLDEN: &str = include_str!("data/golden.json");

#[test]
fn golden_document_round_trips_byte_for_byte() {
    let doc = TextonDocument::parse(GOLDEN).unwrap();
    assert_eq!(doc.to_canonical_string().unwrap(), GOLDEN);
    assert_eq!(
        doc.provenance,
        Some(Provenance {
            op: "synth".into(),
            seed: Some(42)
        })
    );
    let set = set_from_str(GOLDEN).unwrap();
    assert_eq!(set.len(), 3);
    assert_eq!(set_to_string(&set, doc.provenance.clone()).unwrap(), GOLDEN);
}

#[test]
fn golden_document_rejects_unknown_fields() {
    let tampered = GOLDEN.replacen("\"n_f\"", "\"extra\": 1,\n  \"n_f\"", 1);
    assert!(TextonDocument::parse(&tampered).is_err());
}

#[test]
fn ppm_with_comments_decodes() {
    let bytes = b"P6\n# a comment\n2 1\n# another\n255\n\x00\x80\xff\x10\x20\x30";
    let img = decode_ppm(bytes).unwrap();
    assert_eq!((img.width(), img.height()), (2, 1));
    assert_eq!(img.to_rgb8(), vec![0, 128, 255, 16, 32, 48]);
    let canonical = encode_ppm(&img);
    assert!(canonical.starts_with(b"P6\n2 1\n255\n"));
    assert_eq!(encode_ppm(&decode_ppm(&canonical).unwrap()), canonical);
}

#[test]
fn tensor_round_trip() {
    let t = Tensor::new(vec![2, 3, 1], vec![0.5, -1.0, 2.25, 0.0, 1e-3, 7.0]).unwrap();
    let bytes = t.to_bytes();
    assert_eq!(&bytes[..4], b"TXG1");
    assert_eq!(Tensor::from_bytes(&bytes).unwrap(), t);
    assert!(Tensor::from_bytes(&bytes[..bytes.len() - 1]).is_err());
}

#[test]
fn ppm_round_trip_of_rendered_pixels() {
    let img = RgbImage::from_fn(5, 3, |x, y| [x as f64 / 4.0, y as f64 / 2.0, 0.3]);
    let ppm = encode_ppm(&img);
    assert_eq!(encode_ppm(&decode_ppm(&ppm).unwrap()), ppm);
}

#[test]
fn published_constants() {
    let m = MatchWeights::default();
    assert_eq!(
        (m.mean, m.covariance, m.direction, m.feature, m.existence, m.segmentation),
        (1.2, 2.0, 0.01, 10.0, 4.0, 200.0)
    );
    let r = ReconstructionWeights::default();
    assert_eq!((r.l1, r.perceptual), (2.0, 0.2));
    let w = LossWeights::default();
    assert_eq!((w.texture, w.gan, w.patch_gan), (0.01, 0.1, 0.1));
    assert_eq!(DEFAULT_GAMMA, 0.5);
    assert_eq!(SHEAR_PERTURBATION_STD, 1.0 / 30.0);
    assert_eq!(SHEAR_KEYFRAMES, 10);
}
