//! Minimal NIfTI-1 reader/writer.
//!
//! Supported subset: single-file `.nii`, little-endian, datatypes
//! float32/int16/uint8, no extensions, spacing and origin only (no full
//! affine math). Files are written as float32 with `vox_offset = 352` and
//! magic `n+1\0`.

use std::fs;
use std::path::Path;

use byteorder::{ByteOrder, LittleEndian};
use thiserror::Error;

use super::{GridGeom, Volume3D, VolumeError};

const HEADER_SIZE: usize = 348;
const VOX_OFFSET: usize = 352;

const DT_UINT8: i16 = 2;
const DT_INT16: i16 = 4;
const DT_FLOAT32: i16 = 16;

mod offset {
    pub const SIZEOF_HDR: usize = 0;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const BITPIX: usize = 72;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const XYZT_UNITS: usize = 123;
    pub const QFORM_CODE: usize = 252;
    pub const SFORM_CODE: usize = 254;
    pub const QOFFSET_X: usize = 268;
    pub const QOFFSET_Y: usize = 272;
    pub const QOFFSET_Z: usize = 276;
    pub const SROW_X: usize = 280;
    pub const SROW_Y: usize = 296;
    pub const SROW_Z: usize = 312;
    pub const MAGIC: usize = 344;
}

#[derive(Debug, Error)]
pub enum NiftiError {
    #[error("truncated header: file has {0} bytes, need at least 348")]
    TruncatedHeader(usize),
    #[error("malformed magic {0:?}, expected \"n+1\\0\"")]
    BadMagic([u8; 4]),
    #[error("unsupported datatype code {0} (supported: uint8=2, int16=4, float32=16)")]
    UnsupportedDatatype(i16),
    #[error("truncated payload: expected {expected} bytes after vox_offset, got {got}")]
    TruncatedPayload { expected: usize, got: usize },
    #[error("unsupported layout: {0}")]
    UnsupportedLayout(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Read a NIfTI-1 volume. Integer datatypes are converted to reals; the
/// scl_slope/scl_inter scaling is applied when present.
pub fn read_nifti(path: impl AsRef<Path>) -> Result<Volume3D, VolumeError> {
    let bytes = fs::read(path.as_ref()).map_err(NiftiError::Io)?;
    parse_nifti(&bytes).map_err(VolumeError::from)
}

fn parse_nifti(bytes: &[u8]) -> Result<Volume3D, NiftiError> {
    if bytes.len() < HEADER_SIZE {
        return Err(NiftiError::TruncatedHeader(bytes.len()));
    }
    let magic: [u8; 4] = bytes[offset::MAGIC..offset::MAGIC + 4].try_into().unwrap();
    if &magic != b"n+1\0" {
        return Err(NiftiError::BadMagic(magic));
    }
    let sizeof_hdr = LittleEndian::read_i32(&bytes[offset::SIZEOF_HDR..offset::SIZEOF_HDR + 4]);
    if sizeof_hdr != 348 {
        return Err(NiftiError::UnsupportedLayout(format!(
            "sizeof_hdr = {sizeof_hdr}; only little-endian NIfTI-1 is supported"
        )));
    }

    let ndim = LittleEndian::read_i16(&bytes[offset::DIM..offset::DIM + 2]);
    if !(1..=7).contains(&ndim) {
        return Err(NiftiError::UnsupportedLayout(format!("dim[0] = {ndim}")));
    }
    let mut dim = [1i16; 7];
    for (i, d) in dim.iter_mut().enumerate() {
        let off = offset::DIM + 2 + i * 2;
        *d = LittleEndian::read_i16(&bytes[off..off + 2]);
    }
    if ndim < 3 {
        return Err(NiftiError::UnsupportedLayout(format!(
            "need 3 spatial dimensions, file has {ndim}"
        )));
    }
    for (i, &d) in dim.iter().enumerate().take(ndim as usize).skip(3) {
        if d > 1 {
            return Err(NiftiError::UnsupportedLayout(format!(
                "non-singleton trailing dimension dim[{}] = {d}",
                i + 1
            )));
        }
    }
    let (nx, ny, nz) = (dim[0], dim[1], dim[2]);
    if nx < 1 || ny < 1 || nz < 1 {
        return Err(NiftiError::UnsupportedLayout(format!(
            "non-positive spatial dims ({nx}, {ny}, {nz})"
        )));
    }
    let (nx, ny, nz) = (nx as usize, ny as usize, nz as usize);
    let nvox = nx * ny * nz;

    let datatype = LittleEndian::read_i16(&bytes[offset::DATATYPE..offset::DATATYPE + 2]);
    let elem_size = match datatype {
        DT_UINT8 => 1usize,
        DT_INT16 => 2,
        DT_FLOAT32 => 4,
        other => return Err(NiftiError::UnsupportedDatatype(other)),
    };

    let mut pixdim = [0.0f32; 4];
    for (i, p) in pixdim.iter_mut().enumerate() {
        let off = offset::PIXDIM + i * 4;
        *p = LittleEndian::read_f32(&bytes[off..off + 4]);
    }
    let spacing = (pixdim[1], pixdim[2], pixdim[3]);

    let vox_offset = LittleEndian::read_f32(&bytes[offset::VOX_OFFSET..offset::VOX_OFFSET + 4]);
    if !vox_offset.is_finite() || vox_offset < HEADER_SIZE as f32 || vox_offset.fract() != 0.0 {
        return Err(NiftiError::UnsupportedLayout(format!(
            "bad vox_offset {vox_offset}"
        )));
    }
    let vox_offset = vox_offset as usize;

    let scl_slope = LittleEndian::read_f32(&bytes[offset::SCL_SLOPE..offset::SCL_SLOPE + 4]);
    let scl_inter = LittleEndian::read_f32(&bytes[offset::SCL_INTER..offset::SCL_INTER + 4]);
    let apply_scl = scl_slope.is_finite()
        && scl_inter.is_finite()
        && scl_slope != 0.0
        && (scl_slope != 1.0 || scl_inter != 0.0);

    let sform_code = LittleEndian::read_i16(&bytes[offset::SFORM_CODE..offset::SFORM_CODE + 2]);
    let origin = if sform_code > 0 {
        (
            LittleEndian::read_f32(&bytes[offset::SROW_X + 12..offset::SROW_X + 16]),
            LittleEndian::read_f32(&bytes[offset::SROW_Y + 12..offset::SROW_Y + 16]),
            LittleEndian::read_f32(&bytes[offset::SROW_Z + 12..offset::SROW_Z + 16]),
        )
    } else {
        (
            LittleEndian::read_f32(&bytes[offset::QOFFSET_X..offset::QOFFSET_X + 4]),
            LittleEndian::read_f32(&bytes[offset::QOFFSET_Y..offset::QOFFSET_Y + 4]),
            LittleEndian::read_f32(&bytes[offset::QOFFSET_Z..offset::QOFFSET_Z + 4]),
        )
    };

    let expected = nvox * elem_size;
    let payload = bytes
        .len()
        .checked_sub(vox_offset)
        .ok_or(NiftiError::TruncatedPayload { expected, got: 0 })?;
    if payload < expected {
        return Err(NiftiError::TruncatedPayload {
            expected,
            got: payload,
        });
    }
    let raw = &bytes[vox_offset..vox_offset + expected];

    let mut data = Vec::with_capacity(nvox);
    match datatype {
        DT_UINT8 => data.extend(raw.iter().map(|&b| b as f32)),
        DT_INT16 => {
            for ch in raw.chunks_exact(2) {
                data.push(LittleEndian::read_i16(ch) as f32);
            }
        }
        DT_FLOAT32 => {
            for ch in raw.chunks_exact(4) {
                data.push(LittleEndian::read_f32(ch));
            }
        }
        _ => unreachable!(),
    }
    if apply_scl {
        for v in &mut data {
            *v = *v * scl_slope + scl_inter;
        }
    }

    let geom = GridGeom {
        dims: (nx, ny, nz),
        spacing_mm: spacing,
        origin_mm: origin,
    };
    Volume3D::new(geom, data).map_err(|e| match e {
        VolumeError::NonFinite => NiftiError::UnsupportedLayout("non-finite voxel values".into()),
        other => NiftiError::UnsupportedLayout(other.to_string()),
    })
}

/// Write a volume as a float32 little-endian NIfTI-1 file.
pub fn write_nifti(v: &Volume3D, path: impl AsRef<Path>) -> Result<(), VolumeError> {
    let bytes = encode_nifti(v);
    fs::write(path.as_ref(), bytes).map_err(NiftiError::Io)?;
    Ok(())
}

fn encode_nifti(v: &Volume3D) -> Vec<u8> {
    let (nx, ny, nz) = v.dims();
    let (sx, sy, sz) = v.spacing_mm();
    let (ox, oy, oz) = v.origin_mm();
    let mut buf = vec![0u8; VOX_OFFSET + v.data().len() * 4];

    LittleEndian::write_i32(&mut buf[offset::SIZEOF_HDR..offset::SIZEOF_HDR + 4], 348);
    // regular / dim_info defaults are zero

    LittleEndian::write_i16(&mut buf[offset::DIM..offset::DIM + 2], 3);
    let dims = [nx as i16, ny as i16, nz as i16, 1, 1, 1, 1];
    for (i, d) in dims.iter().enumerate() {
        let off = offset::DIM + 2 + i * 2;
        LittleEndian::write_i16(&mut buf[off..off + 2], *d);
    }

    LittleEndian::write_i16(&mut buf[offset::DATATYPE..offset::DATATYPE + 2], DT_FLOAT32);
    LittleEndian::write_i16(&mut buf[offset::BITPIX..offset::BITPIX + 2], 32);

    let pixdim = [1.0f32, sx, sy, sz, 0.0, 0.0, 0.0, 0.0];
    for (i, p) in pixdim.iter().enumerate() {
        let off = offset::PIXDIM + i * 4;
        LittleEndian::write_f32(&mut buf[off..off + 4], *p);
    }

    LittleEndian::write_f32(
        &mut buf[offset::VOX_OFFSET..offset::VOX_OFFSET + 4],
        VOX_OFFSET as f32,
    );
    LittleEndian::write_f32(&mut buf[offset::SCL_SLOPE..offset::SCL_SLOPE + 4], 1.0);
    LittleEndian::write_f32(&mut buf[offset::SCL_INTER..offset::SCL_INTER + 4], 0.0);
    buf[offset::XYZT_UNITS] = 2; // millimeters

    LittleEndian::write_i16(&mut buf[offset::QFORM_CODE..offset::QFORM_CODE + 2], 0);
    LittleEndian::write_i16(&mut buf[offset::SFORM_CODE..offset::SFORM_CODE + 2], 1);
    LittleEndian::write_f32(&mut buf[offset::QOFFSET_X..offset::QOFFSET_X + 4], ox);
    LittleEndian::write_f32(&mut buf[offset::QOFFSET_Y..offset::QOFFSET_Y + 4], oy);
    LittleEndian::write_f32(&mut buf[offset::QOFFSET_Z..offset::QOFFSET_Z + 4], oz);

    let srow_x = [sx, 0.0, 0.0, ox];
    let srow_y = [0.0, sy, 0.0, oy];
    let srow_z = [0.0, 0.0, sz, oz];
    for (row, base) in [
        (srow_x, offset::SROW_X),
        (srow_y, offset::SROW_Y),
        (srow_z, offset::SROW_Z),
    ] {
        for (i, val) in row.iter().enumerate() {
            LittleEndian::write_f32(&mut buf[base + i * 4..base + i * 4 + 4], *val);
        }
    }

    buf[offset::MAGIC..offset::MAGIC + 4].copy_from_slice(b"n+1\0");

    for (i, &val) in v.data().iter().enumerate() {
        let off = VOX_OFFSET + i * 4;
        LittleEndian::write_f32(&mut buf[off..off + 4], val);
    }
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn handmade_header_reads_back() {
        // 348-byte header with dim=(3,2,2,2), float32 payload of 8 values,
        // assembled by hand from the NIfTI-1 byte layout.
        let mut bytes = vec![0u8; 352 + 32];
        LittleEndian::write_i32(&mut bytes[0..4], 348);
        LittleEndian::write_i16(&mut bytes[40..42], 3);
        LittleEndian::write_i16(&mut bytes[42..44], 2);
        LittleEndian::write_i16(&mut bytes[44..46], 2);
        LittleEndian::write_i16(&mut bytes[46..48], 2);
        LittleEndian::write_i16(&mut bytes[70..72], 16); // float32
        LittleEndian::write_i16(&mut bytes[72..74], 32);
        LittleEndian::write_f32(&mut bytes[80..84], 1.5);
        LittleEndian::write_f32(&mut bytes[84..88], 2.0);
        LittleEndian::write_f32(&mut bytes[88..92], 2.5);
        LittleEndian::write_f32(&mut bytes[108..112], 352.0);
        bytes[344..348].copy_from_slice(b"n+1\0");
        let values = [1.0f32, -2.0, 3.0, -4.0, 5.0, -6.0, 7.0, -8.0];
        for (i, v) in values.iter().enumerate() {
            LittleEndian::write_f32(&mut bytes[352 + 4 * i..356 + 4 * i], *v);
        }

        let vol = parse_nifti(&bytes).unwrap();
        assert_eq!(vol.dims(), (2, 2, 2));
        assert_eq!(vol.spacing_mm(), (1.5, 2.0, 2.5));
        assert_eq!(vol.data(), &values);
    }

    #[test]
    fn roundtrip_is_bit_exact_for_float32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.nii");
        let geom = GridGeom {
            dims: (3, 4, 5),
            spacing_mm: (0.7, 1.3, 2.9),
            origin_mm: (-12.5, 3.0, 9.25),
        };
        let data: Vec<f32> = (0..60).map(|i| (i as f32 * 0.37).sin() * 1e3).collect();
        let v = Volume3D::new(geom, data).unwrap();
        write_nifti(&v, &path).unwrap();
        let back = read_nifti(&path).unwrap();
        assert_eq!(back.dims(), v.dims());
        assert_eq!(back.spacing_mm(), v.spacing_mm());
        assert_eq!(back.origin_mm(), v.origin_mm());
        assert_eq!(back.data(), v.data(), "float32 round-trip must be bit-exact");
    }

    #[test]
    fn single_voxel_file_is_356_bytes() {
        let v = Volume3D::new(GridGeom::new((1, 1, 1), (1.0, 1.0, 1.0)), vec![7.0]).unwrap();
        let bytes = encode_nifti(&v);
        assert_eq!(bytes.len(), 352 + 4);
        let back = parse_nifti(&bytes).unwrap();
        assert_eq!(back.data(), &[7.0]);
    }

    #[test]
    fn hundred_zero_bytes_is_truncated_header() {
        assert!(matches!(
            parse_nifti(&[0u8; 100]),
            Err(NiftiError::TruncatedHeader(100))
        ));
    }

    #[test]
    fn bad_magic_is_reported() {
        let v = Volume3D::new(GridGeom::new((1, 1, 1), (1.0, 1.0, 1.0)), vec![0.0]).unwrap();
        let mut bytes = encode_nifti(&v);
        bytes[344..348].copy_from_slice(b"ni1\0");
        assert!(matches!(parse_nifti(&bytes), Err(NiftiError::BadMagic(_))));
    }

    #[test]
    fn unsupported_datatype_is_reported() {
        let v = Volume3D::new(GridGeom::new((1, 1, 1), (1.0, 1.0, 1.0)), vec![0.0]).unwrap();
        let mut bytes = encode_nifti(&v);
        LittleEndian::write_i16(&mut bytes[70..72], 64); // float64
        assert!(matches!(
            parse_nifti(&bytes),
            Err(NiftiError::UnsupportedDatatype(64))
        ));
    }

    #[test]
    fn truncated_payload_is_reported() {
        let v = Volume3D::new(GridGeom::new((2, 2, 2), (1.0, 1.0, 1.0)), vec![1.0; 8]).unwrap();
        let mut bytes = encode_nifti(&v);
        bytes.truncate(352 + 16);
        assert!(matches!(
            parse_nifti(&bytes),
            Err(NiftiError::TruncatedPayload { expected: 32, got: 16 })
        ));
    }

    #[test]
    fn int16_converts_and_scales() {
        let v = Volume3D::new(GridGeom::new((2, 1, 1), (1.0, 1.0, 1.0)), vec![0.0, 0.0]).unwrap();
        let mut bytes = encode_nifti(&v);
        LittleEndian::write_i16(&mut bytes[70..72], 4); // int16
        LittleEndian::write_i16(&mut bytes[72..74], 16);
        LittleEndian::write_f32(&mut bytes[112..116], 0.5); // scl_slope
        LittleEndian::write_f32(&mut bytes[116..120], 10.0); // scl_inter
        bytes.truncate(352);
        bytes.extend_from_slice(&(-6i16).to_le_bytes());
        bytes.extend_from_slice(&(4i16).to_le_bytes());
        let vol = parse_nifti(&bytes).unwrap();
        assert_eq!(vol.data(), &[7.0, 12.0]);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let v = Volume3D::new(GridGeom::new((1, 1, 1), (1.0, 1.0, 1.0)), vec![0.0]).unwrap();
        assert!(write_nifti(&v, "/nonexistent-dir/x.nii").is_err());
    }
}
