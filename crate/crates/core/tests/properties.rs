//! End-to-end properties over small random images.

use hdrll::codec::{LosslessCoderSpec, LossyCoderSpec};
use hdrll::container::{decode_hdr, decode_sdr, decode_sdr_bytes, deserialize, encode, serialize, EncodeConfig, Mode};
use hdrll::radiance::{merge_planes, parse_hdr, split_planes, write_hdr, HeaderLine, Orientation, RadianceImage};
use proptest::prelude::*;

/// Canonical RGBE pixels: all zero, or a largest mantissa of at least 128.
fn pixel() -> impl Strategy<Value = [u8; 4]> {
    prop_oneof![
        1 => Just([0u8; 4]),
        8 => (0..3usize, 128..=255u8, any::<u8>(), any::<u8>(), 100..=160u8).prop_map(|(slot, max, a, b, e)| {
            let mut m = [a.min(max), b.min(max), 0];
            m.rotate_right(slot);
            m[slot] = max;
            [m[0], m[1], m[2], e]
        }),
    ]
}

fn image(max_side: usize) -> impl Strategy<Value = RadianceImage> {
    (1..=max_side, 1..=max_side, 0..8u8, 0..3usize)
        .prop_flat_map(|(w, h, o, vars)| {
            (
                Just((w, h, o)),
                prop::collection::vec(pixel(), w * h),
                prop::collection::vec("[A-Z]{1,6}", vars),
            )
        })
        .prop_map(|((w, h, o), pixels, keys)| {
            let mut img = RadianceImage::new(w, h, pixels).unwrap();
            img.orientation = Orientation::from_u8(o).unwrap();
            for (i, k) in keys.into_iter().enumerate() {
                img.header.push(HeaderLine::var(k, format!("v{i}")));
            }
            img
        })
}

fn mode() -> impl Strategy<Value = Mode> {
    prop::sample::select(Mode::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hdr_file_round_trip(img in image(40), rle in any::<bool>()) {
        prop_assert_eq!(parse_hdr(&write_hdr(&img, rle).unwrap()).unwrap(), img);
    }

    #[test]
    fn split_merge_identity(img in image(24)) {
        let merged = merge_planes(&split_planes(&img)).unwrap();
        prop_assert_eq!((merged.width, merged.height), (img.width, img.height));
        prop_assert_eq!(merged.pixels, img.pixels);
    }

    #[test]
    fn lossless_end_to_end(
        img in image(20),
        mode in mode(),
        quality in 1..=100u8,
        sigma in prop::sample::select(vec![0.0, 0.4, 1.0, 2.5]),
        lossy_id in 0..=1u8,
        lossless_id in 0..=1u8,
    ) {
        let cfg = EncodeConfig {
            mode,
            sigma,
            lossy: LossyCoderSpec { coder_id: lossy_id, quality },
            lossless: LosslessCoderSpec { coder_id: lossless_id },
            ..EncodeConfig::default()
        };
        let stream = encode(&img, &cfg).unwrap();
        let bytes = serialize(&stream).unwrap();
        let back = deserialize(&bytes).unwrap();
        prop_assert_eq!(&back, &stream);
        prop_assert_eq!(decode_hdr(&back).unwrap(), img);
        prop_assert_eq!(decode_sdr_bytes(&bytes).unwrap().image, decode_sdr(&stream).unwrap());
    }
}
