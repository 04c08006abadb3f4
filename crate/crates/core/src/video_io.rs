//! Raw video containers and the luma planes the analysis runs on.
//!
//! Only 8-bit progressive YUV4MPEG2 (4:2:0 or 4:4:4) and headerless planar
//! `.yuv` are read. Chroma is consumed from the stream and dropped; every
//! frame is kept as a single luma [`FramePlane`].

use std::borrow::Cow;
use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};

use thiserror::Error;

/// Smallest accepted frame width or height.
pub const MIN_DIMENSION: usize = 16;

const Y4M_SIGNATURE: &[u8] = b"YUV4MPEG2";
const FRAME_MARKER: &[u8] = b"FRAME";
const MAX_HEADER_LEN: usize = 4096;

#[derive(Debug, Error)]
pub enum VideoError {
    #[error(
        "invalid frame geometry {width}x{height}: both dimensions must be at least {MIN_DIMENSION}"
    )]
    Geometry { width: usize, height: usize },
    #[error("sample buffer holds {actual} bytes, expected {expected}")]
    SampleCount { expected: usize, actual: usize },
    #[error("missing YUV4MPEG2 signature at byte {offset}")]
    Signature { offset: u64 },
    #[error("malformed header at byte {offset}: {reason}")]
    Header { offset: u64, reason: String },
    #[error("unsupported stream parameter `{token}` at byte {offset}")]
    Unsupported { offset: u64, token: String },
    #[error("malformed FRAME marker at byte {offset}")]
    FrameMarker { offset: u64 },
    #[error("truncated payload for frame {frame} at byte {offset}: expected {expected} bytes, got {got}")]
    Truncated {
        frame: usize,
        offset: u64,
        expected: usize,
        got: usize,
    },
    #[error("no frames")]
    NoFrames,
    #[error("frame {index} is {width}x{height}, sequence is {expected_width}x{expected_height}")]
    MismatchedFrame {
        index: usize,
        width: usize,
        height: usize,
        expected_width: usize,
        expected_height: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One 8-bit luma plane, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct FramePlane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl fmt::Debug for FramePlane {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FramePlane")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

impl FramePlane {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self, VideoError> {
        if width < MIN_DIMENSION || height < MIN_DIMENSION {
            return Err(VideoError::Geometry { width, height });
        }
        if samples.len() != width * height {
            return Err(VideoError::SampleCount {
                expected: width * height,
                actual: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, VideoError> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a plane by evaluating `f(x, y)` for every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, VideoError> {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Self::new(width, height, samples)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[u8] {
        &self.samples[y * self.width..(y + 1) * self.width]
    }

    pub fn same_geometry(&self, other: &FramePlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Returns the plane edge-replicated up to the next multiple of `block`
    /// in each dimension, borrowing when no padding is needed.
    pub fn padded_to_multiple(&self, block: usize) -> Cow<'_, FramePlane> {
        let padded_w = self.width.div_ceil(block) * block;
        let padded_h = self.height.div_ceil(block) * block;
        if padded_w == self.width && padded_h == self.height {
            return Cow::Borrowed(self);
        }
        let mut samples = Vec::with_capacity(padded_w * padded_h);
        for y in 0..padded_h {
            let row = self.row(y.min(self.height - 1));
            samples.extend_from_slice(row);
            let last = row[self.width - 1];
            samples.extend(std::iter::repeat_n(last, padded_w - self.width));
        }
        Cow::Owned(FramePlane {
            width: padded_w,
            height: padded_h,
            samples,
        })
    }
}

/// Frame rate as a rational number; informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRate {
    pub num: u32,
    pub den: u32,
}

impl Default for FrameRate {
    fn default() -> Self {
        Self { num: 30, den: 1 }
    }
}

impl fmt::Display for FrameRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.num, self.den)
    }
}

/// Chroma subsampling of an input stream. Only used to size the chroma
/// payload that gets skipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChromaFormat {
    Yuv420,
    Yuv444,
}

impl ChromaFormat {
    fn chroma_plane_len(self, width: usize, height: usize) -> usize {
        match self {
            ChromaFormat::Yuv420 => width.div_ceil(2) * height.div_ceil(2),
            ChromaFormat::Yuv444 => width * height,
        }
    }

    /// Luma plus both chroma planes.
    pub fn frame_len(self, width: usize, height: usize) -> usize {
        width * height + 2 * self.chroma_plane_len(width, height)
    }
}

/// An ordered run of equally sized luma frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoSequence {
    frames: Vec<FramePlane>,
    pub frame_rate: FrameRate,
    pub source_name: String,
}

impl VideoSequence {
    pub fn new(
        frames: Vec<FramePlane>,
        frame_rate: FrameRate,
        source_name: impl Into<String>,
    ) -> Result<Self, VideoError> {
        let first = frames.first().ok_or(VideoError::NoFrames)?;
        let (w, h) = (first.width, first.height);
        if let Some((index, bad)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.width != w || f.height != h)
        {
            return Err(VideoError::MismatchedFrame {
                index,
                width: bad.width,
                height: bad.height,
                expected_width: w,
                expected_height: h,
            });
        }
        Ok(Self {
            frames,
            frame_rate,
            source_name: source_name.into(),
        })
    }

    pub fn frames(&self) -> &[FramePlane] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<FramePlane> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false; a sequence holds at least one frame.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }
}

/// Byte reader that remembers how far into the stream it is.
struct Tracked<R> {
    inner: R,
    offset: u64,
}

impl<R: BufRead> Tracked<R> {
    /// Reads up to and excluding the next `\n`. Returns `None` on clean EOF.
    fn read_line(&mut self, what: &str) -> Result<Option<Vec<u8>>, VideoError> {
        let start = self.offset;
        let mut line = Vec::new();
        let n = (&mut self.inner)
            .take(MAX_HEADER_LEN as u64 + 1)
            .read_until(b'\n', &mut line)?;
        self.offset += n as u64;
        if n == 0 {
            return Ok(None);
        }
        if line.last() != Some(&b'\n') {
            return Err(VideoError::Header {
                offset: start,
                reason: format!("{what} line is not newline-terminated"),
            });
        }
        line.pop();
        Ok(Some(line))
    }

    /// Fills `buf` as far as the stream allows and returns the byte count.
    fn fill(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let mut got = 0;
        while got < buf.len() {
            match self.inner.read(&mut buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        self.offset += got as u64;
        Ok(got)
    }
}

struct Y4mHeader {
    width: usize,
    height: usize,
    frame_rate: FrameRate,
    chroma: ChromaFormat,
}

fn parse_dimension(token: &str, offset: u64) -> Result<usize, VideoError> {
    token[1..].parse().map_err(|_| VideoError::Header {
        offset,
        reason: format!("bad dimension token `{token}`"),
    })
}

fn parse_header(line: &[u8], offset: u64) -> Result<Y4mHeader, VideoError> {
    if !line.starts_with(Y4M_SIGNATURE) || line.get(Y4M_SIGNATURE.len()).is_some_and(|&b| b != b' ')
    {
        return Err(VideoError::Signature { offset });
    }
    let text =
        std::str::from_utf8(&line[Y4M_SIGNATURE.len()..]).map_err(|_| VideoError::Header {
            offset,
            reason: "header is not ASCII".into(),
        })?;

    let mut width = None;
    let mut height = None;
    let mut frame_rate = FrameRate::default();
    let mut chroma = ChromaFormat::Yuv420;
    let mut pos = offset + Y4M_SIGNATURE.len() as u64;
    for raw in text.split(' ') {
        let token_offset = pos;
        pos += raw.len() as u64 + 1;
        if raw.is_empty() {
            continue;
        }
        match raw.as_bytes()[0] {
            b'W' => width = Some(parse_dimension(raw, token_offset)?),
            b'H' => height = Some(parse_dimension(raw, token_offset)?),
            b'F' => {
                let parsed = raw[1..]
                    .split_once(':')
                    .and_then(|(n, d)| Some((n.parse().ok()?, d.parse().ok()?)));
                match parsed {
                    Some((num, den)) if num > 0 && den > 0 => frame_rate = FrameRate { num, den },
                    _ => {
                        return Err(VideoError::Header {
                            offset: token_offset,
                            reason: format!("bad frame rate `{raw}`"),
                        })
                    }
                }
            }
            b'I' => {
                if !matches!(&raw[1..], "p" | "?") {
                    return Err(VideoError::Unsupported {
                        offset: token_offset,
                        token: raw.to_string(),
                    });
                }
            }
            b'C' => {
                chroma = match &raw[1..] {
                    "420" | "420jpeg" | "420paldv" | "420mpeg2" => ChromaFormat::Yuv420,
                    "444" => ChromaFormat::Yuv444,
                    _ => {
                        return Err(VideoError::Unsupported {
                            offset: token_offset,
                            token: raw.to_string(),
                        })
                    }
                }
            }
            // Aspect ratio and extension tokens carry nothing we use.
            b'A' | b'X' => {}
            _ => {
                return Err(VideoError::Header {
                    offset: token_offset,
                    reason: format!("unknown token `{raw}`"),
                })
            }
        }
    }

    let missing = |what: &str| VideoError::Header {
        offset,
        reason: format!("missing {what}"),
    };
    let width = width.ok_or_else(|| missing("width"))?;
    let height = height.ok_or_else(|| missing("height"))?;
    if width < MIN_DIMENSION || height < MIN_DIMENSION {
        return Err(VideoError::Geometry { width, height });
    }
    Ok(Y4mHeader {
        width,
        height,
        frame_rate,
        chroma,
    })
}

/// Reads frames of `frame_len` bytes, keeping the leading luma plane.
fn read_payload<R: BufRead>(
    src: &mut Tracked<R>,
    frame: usize,
    width: usize,
    height: usize,
    frame_len: usize,
    scratch: &mut Vec<u8>,
) -> Result<FramePlane, VideoError> {
    scratch.resize(frame_len, 0);
    let offset = src.offset;
    let got = src.fill(scratch)?;
    if got != frame_len {
        return Err(VideoError::Truncated {
            frame,
            offset,
            expected: frame_len,
            got,
        });
    }
    FramePlane::new(width, height, scratch[..width * height].to_vec())
}

/// Parses a YUV4MPEG2 stream into its luma planes.
pub fn load_y4m<R: Read>(stream: R) -> Result<VideoSequence, VideoError> {
    let mut src = Tracked {
        inner: BufReader::new(stream),
        offset: 0,
    };
    let line = src
        .read_line("header")?
        .ok_or(VideoError::Signature { offset: 0 })?;
    let header = parse_header(&line, 0)?;
    let frame_len = header.chroma.frame_len(header.width, header.height);

    let mut frames = Vec::new();
    let mut scratch = Vec::new();
    loop {
        let marker_offset = src.offset;
        let Some(marker) = src.read_line("FRAME")? else {
            break;
        };
        let well_formed = marker.starts_with(FRAME_MARKER)
            && marker.get(FRAME_MARKER.len()).is_none_or(|&b| b == b' ');
        if !well_formed {
            return Err(VideoError::FrameMarker {
                offset: marker_offset,
            });
        }
        frames.push(read_payload(
            &mut src,
            frames.len(),
            header.width,
            header.height,
            frame_len,
            &mut scratch,
        )?);
    }
    VideoSequence::new(frames, header.frame_rate, String::new())
}

/// Parses headerless planar YUV with caller-supplied geometry.
pub fn load_raw_yuv<R: Read>(
    stream: R,
    width: usize,
    height: usize,
    chroma: ChromaFormat,
    frame_rate: FrameRate,
) -> Result<VideoSequence, VideoError> {
    if width < MIN_DIMENSION || height < MIN_DIMENSION {
        return Err(VideoError::Geometry { width, height });
    }
    let mut src = Tracked {
        inner: BufReader::new(stream),
        offset: 0,
    };
    let frame_len = chroma.frame_len(width, height);
    let mut frames = Vec::new();
    let mut scratch = Vec::new();
    loop {
        if src.inner.fill_buf()?.is_empty() {
            break;
        }
        frames.push(read_payload(
            &mut src,
            frames.len(),
            width,
            height,
            frame_len,
            &mut scratch,
        )?);
    }
    VideoSequence::new(frames, frame_rate, String::new())
}

/// Writes `seq` as 4:2:0 YUV4MPEG2 with neutral (128) chroma and returns
/// the number of bytes emitted.
pub fn write_y4m<W: Write>(seq: &VideoSequence, sink: W) -> Result<usize, VideoError> {
    if seq.frames.is_empty() {
        return Err(VideoError::NoFrames);
    }
    let mut sink = io::BufWriter::new(sink);
    let (w, h) = (seq.width(), seq.height());
    let header = format!("YUV4MPEG2 W{w} H{h} F{} Ip A0:0 C420jpeg\n", seq.frame_rate);
    sink.write_all(header.as_bytes())?;
    let chroma = vec![128u8; 2 * ChromaFormat::Yuv420.chroma_plane_len(w, h)];
    let mut written = header.len();
    for frame in &seq.frames {
        sink.write_all(b"FRAME\n")?;
        sink.write_all(&frame.samples)?;
        sink.write_all(&chroma)?;
        written += FRAME_MARKER.len() + 1 + frame.samples.len() + chroma.len();
    }
    sink.flush()?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(header: &str, frames: usize, frame_len: usize) -> Vec<u8> {
        let mut out = header.as_bytes().to_vec();
        for i in 0..frames {
            out.extend_from_slice(b"FRAME\n");
            out.extend((0..frame_len).map(|j| ((i * 7 + j) % 251) as u8));
        }
        out
    }

    #[test]
    fn loads_420_header_and_frames() {
        let data = stream("YUV4MPEG2 W64 H48 F30:1 C420\n", 3, 64 * 48 * 3 / 2);
        let seq = load_y4m(&data[..]).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!((seq.width(), seq.height()), (64, 48));
        assert_eq!(seq.frame_rate, FrameRate { num: 30, den: 1 });
        assert_eq!(seq.frames()[1].get(0, 0), 7);
        assert_eq!(seq.frames()[2].get(5, 0), 19);
    }

    #[test]
    fn loads_444() {
        let data = stream("YUV4MPEG2 W16 H16 F25:1 Ip C444\n", 2, 16 * 16 * 3);
        let seq = load_y4m(&data[..]).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.frames()[1].get(0, 0), 7);
    }

    #[test]
    fn frame_parameters_are_tolerated() {
        let mut data = b"YUV4MPEG2 W16 H16\nFRAME Ixyz\n".to_vec();
        data.extend(vec![9u8; 16 * 16 * 3 / 2]);
        let seq = load_y4m(&data[..]).unwrap();
        assert_eq!(seq.frames()[0].get(15, 15), 9);
    }

    #[test]
    fn zero_frames_is_an_error() {
        let data = b"YUV4MPEG2 W64 H48 F30:1 C420\n";
        assert!(matches!(load_y4m(&data[..]), Err(VideoError::NoFrames)));
    }

    #[test]
    fn bad_signature_reports_offset() {
        let data = b"YUV4MPEG3 W64 H48\n";
        assert!(matches!(
            load_y4m(&data[..]),
            Err(VideoError::Signature { offset: 0 })
        ));
    }

    #[test]
    fn high_bit_depth_is_rejected_with_offset() {
        let data = b"YUV4MPEG2 W64 H48 C420p10\n";
        match load_y4m(&data[..]) {
            Err(VideoError::Unsupported { offset, token }) => {
                assert_eq!(token, "C420p10");
                assert_eq!(offset, 18);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn interlaced_is_rejected() {
        let data = b"YUV4MPEG2 W64 H48 It\n";
        assert!(matches!(
            load_y4m(&data[..]),
            Err(VideoError::Unsupported { .. })
        ));
    }

    #[test]
    fn truncated_payload_reports_offset() {
        let mut data = stream("YUV4MPEG2 W16 H16 C420\n", 1, 384);
        data.extend_from_slice(b"FRAME\n");
        data.extend(vec![0u8; 100]);
        match load_y4m(&data[..]) {
            Err(VideoError::Truncated {
                frame,
                offset,
                expected,
                got,
            }) => {
                assert_eq!(frame, 1);
                assert_eq!(offset, 23 + 6 + 384 + 6);
                assert_eq!(expected, 384);
                assert_eq!(got, 100);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn garbage_between_frames_is_rejected() {
        let mut data = stream("YUV4MPEG2 W16 H16 C420\n", 1, 384);
        data.extend_from_slice(b"FRAMEX\n");
        assert!(matches!(
            load_y4m(&data[..]),
            Err(VideoError::FrameMarker { offset: 413 })
        ));
    }

    #[test]
    fn write_size_arithmetic() {
        let seq = VideoSequence::new(
            vec![FramePlane::filled(16, 16, 128).unwrap()],
            FrameRate::default(),
            "flat",
        )
        .unwrap();
        let mut out = Vec::new();
        let n = write_y4m(&seq, &mut out).unwrap();
        let header_len = out.iter().position(|&b| b == b'\n').unwrap() + 1;
        assert_eq!(n, out.len());
        assert_eq!(n, header_len + 6 + 16 * 16 + 2 * 8 * 8);
        assert!(out[header_len + 6..].iter().all(|&b| b == 128));
    }

    #[test]
    fn write_rejects_empty_sequence() {
        let seq = VideoSequence {
            frames: vec![],
            frame_rate: FrameRate::default(),
            source_name: String::new(),
        };
        assert!(matches!(
            write_y4m(&seq, Vec::new()),
            Err(VideoError::NoFrames)
        ));
    }

    #[test]
    fn odd_dimensions_round_chroma_up() {
        let frame = FramePlane::from_fn(17, 19, |x, y| (x * 3 + y) as u8).unwrap();
        let seq = VideoSequence::new(vec![frame], FrameRate::default(), "").unwrap();
        let mut out = Vec::new();
        write_y4m(&seq, &mut out).unwrap();
        let back = load_y4m(&out[..]).unwrap();
        assert_eq!(back, seq);
    }

    #[test]
    fn raw_yuv_frames_split_on_geometry() {
        let data: Vec<u8> = (0..2 * 384).map(|i| (i % 256) as u8).collect();
        let seq = load_raw_yuv(
            &data[..],
            16,
            16,
            ChromaFormat::Yuv420,
            FrameRate::default(),
        )
        .unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.frames()[1].get(0, 0), (384 % 256) as u8);
        assert!(matches!(
            load_raw_yuv(
                &data[..500],
                16,
                16,
                ChromaFormat::Yuv420,
                FrameRate::default()
            ),
            Err(VideoError::Truncated { frame: 1, .. })
        ));
    }

    #[test]
    fn padding_replicates_edges() {
        let plane = FramePlane::from_fn(18, 17, |x, y| (x + 20 * y) as u8).unwrap();
        let padded = plane.padded_to_multiple(16);
        assert_eq!((padded.width(), padded.height()), (32, 32));
        assert_eq!(padded.get(31, 0), plane.get(17, 0));
        assert_eq!(padded.get(3, 31), plane.get(3, 16));
        assert_eq!(padded.get(31, 31), plane.get(17, 16));
        assert_eq!(padded.get(4, 5), plane.get(4, 5));

        let aligned = FramePlane::filled(32, 16, 0).unwrap();
        assert!(matches!(aligned.padded_to_multiple(16), Cow::Borrowed(_)));
    }

    #[test]
    fn plane_geometry_is_validated() {
        assert!(matches!(
            FramePlane::new(8, 16, vec![0; 128]),
            Err(VideoError::Geometry { .. })
        ));
        assert!(matches!(
            FramePlane::new(16, 16, vec![0; 10]),
            Err(VideoError::SampleCount { .. })
        ));
        let a = FramePlane::filled(16, 16, 0).unwrap();
        let b = FramePlane::filled(32, 16, 0).unwrap();
        assert!(matches!(
            VideoSequence::new(vec![a, b], FrameRate::default(), ""),
            Err(VideoError::MismatchedFrame { index: 1, .. })
        ));
    }
}
