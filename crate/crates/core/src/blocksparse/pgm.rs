use super::BlockLayout;
use crate::error::{Error, Result};

/// Largest block grid `render_pgm` will draw.
pub const MAX_IMAGE_ROWS: usize = 8192;

/// Binary PGM (P5), one pixel per block: kept blocks black, skipped white.
pub fn render_pgm(layout: &BlockLayout) -> Result<Vec<u8>> {
    let rows = layout.grid_rows();
    if rows > MAX_IMAGE_ROWS {
        return Err(Error::ImageTooLarge {
            rows,
            limit: MAX_IMAGE_ROWS,
        });
    }
    let header = format!("P5\n{rows} {rows}\n255\n");
    let mut out = Vec::with_capacity(header.len() + rows * rows);
    out.extend_from_slice(header.as_bytes());
    for r in 0..rows {
        let start = out.len();
        out.resize(start + rows, 255);
        for &c in layout.row(r) {
            out[start + c as usize] = 0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocksparse::blockify;
    use crate::grid::GridShape;
    use crate::pattern::{PatternKind, PatternSpec};

    #[test]
    fn dense_is_all_black() {
        let g = GridShape::new(4, 4).unwrap();
        let img = render_pgm(&blockify(&g, &PatternSpec::dense(), 2).unwrap()).unwrap();
        let header = b"P5\n8 8\n255\n";
        assert_eq!(&img[..header.len()], header);
        assert!(img[header.len()..].iter().all(|&p| p == 0));
        assert_eq!(img.len(), header.len() + 64);
    }

    #[test]
    fn single_pixel() {
        let g = GridShape::new(1, 3).unwrap();
        let img = render_pgm(&blockify(&g, &PatternSpec::radial(), 8).unwrap()).unwrap();
        assert_eq!(img, b"P5\n1 1\n255\n\0");
    }

    #[test]
    fn too_large_is_refused() {
        let g = GridShape::new(1, 8193).unwrap();
        let layout = BlockLayout::from_parts(g, 1, PatternKind::Dense, false, vec![0; 8194], vec![]).unwrap();
        assert!(matches!(render_pgm(&layout), Err(Error::ImageTooLarge { rows: 8193, .. })));
    }
}
