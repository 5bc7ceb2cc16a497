use std::ffi::CStr;
use std::ptr;

use hdrll::radiance::write_hdr;
use hdrll::synth::{generate, Kind};
use hdrll_ffi::*;

fn sample_hdr() -> Vec<u8> {
    write_hdr(&generate(Kind::Gradient, 24, 1, 0), true).unwrap()
}

fn last_error() -> String {
    let p = hdrll_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn encode_decode_round_trip() {
    let file = sample_hdr();
    unsafe {
        let mut img = ptr::null_mut();
        assert_eq!(
            hdrll_image_from_hdr(file.as_ptr(), file.len(), &mut img),
            HdrllStatus::Ok
        );
        assert_eq!((hdrll_image_width(img), hdrll_image_height(img)), (24, 24));

        let mut stream = HdrllBuffer {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(hdrll_encode(img, ptr::null(), &mut stream), HdrllStatus::Ok);
        assert!(stream.len > 0);

        let mut back = ptr::null_mut();
        assert_eq!(hdrll_decode_hdr(stream.data, stream.len, &mut back), HdrllStatus::Ok);
        let (mut a, mut alen, mut b, mut blen) = (ptr::null(), 0, ptr::null(), 0);
        assert_eq!(hdrll_image_pixels(img, &mut a, &mut alen), HdrllStatus::Ok);
        assert_eq!(hdrll_image_pixels(back, &mut b, &mut blen), HdrllStatus::Ok);
        assert_eq!(alen, 24 * 24 * 4);
        assert_eq!(std::slice::from_raw_parts(a, alen), std::slice::from_raw_parts(b, blen));

        let mut file_out = HdrllBuffer {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(hdrll_image_to_hdr(back, &mut file_out), HdrllStatus::Ok);
        assert_eq!(std::slice::from_raw_parts(file_out.data, file_out.len), &file[..]);

        hdrll_buffer_free(&mut file_out);
        hdrll_buffer_free(&mut stream);
        assert!(stream.data.is_null());
        hdrll_buffer_free(&mut stream);
        hdrll_image_free(back);
        hdrll_image_free(img);
        hdrll_image_free(ptr::null_mut());
    }
}

#[test]
fn sdr_from_truncated_stream() {
    let file = sample_hdr();
    unsafe {
        let mut img = ptr::null_mut();
        assert_eq!(
            hdrll_image_from_hdr(file.as_ptr(), file.len(), &mut img),
            HdrllStatus::Ok
        );
        let mut opts = hdrll_encode_options_default();
        opts.mode = HdrllMode::NoSlrme as u32;
        opts.quality = 60;
        let mut stream = HdrllBuffer {
            data: ptr::null_mut(),
            len: 0,
        };
        assert_eq!(hdrll_encode(img, &opts, &mut stream), HdrllStatus::Ok);
        let bytes = std::slice::from_raw_parts(stream.data, stream.len).to_vec();

        let d = hdrll::container::decode_sdr_bytes(&bytes).unwrap();
        let cut = &bytes[..d.bytes_read + 3];
        let mut sdr = ptr::null_mut();
        assert_eq!(hdrll_decode_sdr(cut.as_ptr(), cut.len(), &mut sdr), HdrllStatus::Ok);
        assert_eq!((hdrll_sdr_width(sdr), hdrll_sdr_height(sdr)), (24, 24));
        let (mut rgb, mut len) = (ptr::null(), 0);
        assert_eq!(hdrll_sdr_rgb(sdr, &mut rgb, &mut len), HdrllStatus::Ok);
        assert_eq!(std::slice::from_raw_parts(rgb, len), d.image.interleaved());

        let mut none = ptr::null_mut();
        assert_eq!(
            hdrll_decode_hdr(cut.as_ptr(), cut.len(), &mut none),
            HdrllStatus::Corrupt
        );
        let header_and_base = &bytes[..d.bytes_read];
        assert_eq!(
            hdrll_decode_hdr(header_and_base.as_ptr(), header_and_base.len(), &mut none),
            HdrllStatus::MissingEnhancement
        );
        assert!(none.is_null());

        hdrll_sdr_free(sdr);
        hdrll_buffer_free(&mut stream);
        hdrll_image_free(img);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut img = ptr::null_mut();
        let junk = b"not an hdr file";
        assert_eq!(
            hdrll_image_from_hdr(junk.as_ptr(), junk.len(), &mut img),
            HdrllStatus::Format
        );
        assert!(last_error().contains("signature"));
        assert!(img.is_null());

        assert_eq!(
            hdrll_image_from_hdr(ptr::null(), 5, &mut img),
            HdrllStatus::InvalidArgument
        );
        assert_eq!(
            hdrll_encode(ptr::null(), ptr::null(), ptr::null_mut()),
            HdrllStatus::InvalidArgument
        );

        let px = [128u8, 64, 32, 129];
        assert_eq!(hdrll_image_from_rgbe(1, 1, px.as_ptr(), &mut img), HdrllStatus::Ok);
        let mut opts = hdrll_encode_options_default();
        let mut out = HdrllBuffer {
            data: ptr::null_mut(),
            len: 0,
        };
        opts.mode = 9;
        assert_eq!(hdrll_encode(img, &opts, &mut out), HdrllStatus::InvalidArgument);
        opts = hdrll_encode_options_default();
        opts.lossy_coder = 42;
        assert_eq!(hdrll_encode(img, &opts, &mut out), HdrllStatus::Unsupported);
        opts = hdrll_encode_options_default();
        opts.quality = 0;
        assert_eq!(hdrll_encode(img, &opts, &mut out), HdrllStatus::InvalidArgument);

        opts = hdrll_encode_options_default();
        assert_eq!(hdrll_encode(img, &opts, &mut out), HdrllStatus::Ok);
        let last = out.len - 1;
        *out.data.add(last) ^= 0x40;
        let mut back = ptr::null_mut();
        let s = hdrll_decode_hdr(out.data, out.len, &mut back);
        assert!(matches!(s, HdrllStatus::Checksum | HdrllStatus::Corrupt), "{s:?}");
        assert!(!last_error().is_empty());

        hdrll_buffer_free(&mut out);
        hdrll_image_free(img);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(hdrll_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
