use crate::math::Vec3;

use super::{AnimationClip, BvhError, Channel, Joint, Skeleton};

/// Line-aware whitespace tokenizer.
struct Cursor<'a> {
    lines: Vec<&'a str>,
    /// 0-based index of the line `tokens` came from.
    line: usize,
    tokens: Vec<&'a str>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let text = text.strip_prefix('\u{feff}').unwrap_or(text);
        let lines: Vec<&str> = text.lines().collect();
        let tokens = lines
            .first()
            .map(|l| l.split_whitespace().collect())
            .unwrap_or_default();
        Cursor {
            lines,
            line: 0,
            tokens,
            pos: 0,
        }
    }

    /// 1-based number of the current line.
    fn line_no(&self) -> usize {
        (self.line + 1).min(self.lines.len().max(1))
    }

    fn skip_exhausted_lines(&mut self) {
        while self.pos >= self.tokens.len() && self.line + 1 < self.lines.len() {
            self.line += 1;
            self.tokens = self.lines[self.line].split_whitespace().collect();
            self.pos = 0;
        }
    }

    fn peek(&mut self) -> Option<(usize, &'a str)> {
        self.skip_exhausted_lines();
        self.tokens.get(self.pos).map(|t| (self.line + 1, *t))
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let tok = self.peek()?;
        self.pos += 1;
        Some(tok)
    }

    fn expect_any(&mut self) -> Result<(usize, &'a str), BvhError> {
        self.next().ok_or(BvhError::UnexpectedEof {
            line: self.line_no(),
        })
    }

    fn expect(&mut self, keyword: &'static str) -> Result<usize, BvhError> {
        let (line, tok) = self.expect_any()?;
        if tok == keyword {
            Ok(line)
        } else {
            Err(BvhError::UnexpectedToken {
                line,
                expected: keyword,
                found: tok.to_string(),
            })
        }
    }

    /// Remaining tokens on the current line, joined by single spaces. Stops
    /// before a `{` so `ROOT Hips {` is accepted.
    fn rest_of_line(&mut self) -> String {
        let mut parts = Vec::new();
        while let Some(tok) = self.tokens.get(self.pos) {
            if *tok == "{" {
                break;
            }
            parts.push(*tok);
            self.pos += 1;
        }
        parts.join(" ")
    }

    fn number(&mut self) -> Result<f64, BvhError> {
        let (line, tok) = self.expect_any()?;
        parse_number(line, tok)
    }

    fn integer(&mut self) -> Result<usize, BvhError> {
        let (line, tok) = self.expect_any()?;
        tok.parse().map_err(|_| BvhError::MalformedNumber {
            line,
            token: tok.to_string(),
        })
    }

    /// Moves to the start of the next line, failing if tokens remain on this one.
    fn finish_line(&mut self) -> Result<(), BvhError> {
        if let Some(tok) = self.tokens.get(self.pos) {
            return Err(BvhError::UnexpectedToken {
                line: self.line + 1,
                expected: "end of line",
                found: tok.to_string(),
            });
        }
        self.pos = self.tokens.len();
        Ok(())
    }
}

fn parse_number(line: usize, tok: &str) -> Result<f64, BvhError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(BvhError::MalformedNumber {
            line,
            token: tok.to_string(),
        }),
    }
}

/// Parses BVH text into a skeleton (unit scale 1.0) and its animation clip.
pub fn parse_bvh(text: &str) -> Result<(Skeleton, AnimationClip), BvhError> {
    let mut cur = Cursor::new(text);

    match cur.peek() {
        Some((_, "HIERARCHY")) => {
            cur.next();
        }
        Some((line, _)) => {
            return Err(BvhError::MissingSection {
                section: "HIERARCHY",
                line,
            })
        }
        None => {
            return Err(BvhError::MissingSection {
                section: "HIERARCHY",
                line: 1,
            })
        }
    }

    let mut joints = Vec::new();
    match cur.expect_any() {
        Ok((_, "ROOT")) => {}
        Ok((line, "MOTION")) => {
            return Err(BvhError::UnexpectedToken {
                line,
                expected: "ROOT",
                found: "MOTION".into(),
            })
        }
        Ok((line, tok)) => {
            return Err(BvhError::UnexpectedToken {
                line,
                expected: "ROOT",
                found: tok.to_string(),
            })
        }
        Err(_) => {
            return Err(BvhError::MissingSection {
                section: "MOTION",
                line: cur.line_no(),
            })
        }
    }
    let name = cur.rest_of_line();
    parse_joint_body(&mut cur, &mut joints, name, None, false)?;

    let motion_line = match cur.next() {
        Some((line, "MOTION")) => line,
        Some((line, "}")) => return Err(BvhError::UnbalancedBraces { line }),
        Some((line, "ROOT")) => {
            return Err(BvhError::UnexpectedToken {
                line,
                expected: "MOTION (only one ROOT is supported)",
                found: "ROOT".into(),
            })
        }
        Some((line, tok)) => {
            return Err(BvhError::UnexpectedToken {
                line,
                expected: "MOTION",
                found: tok.to_string(),
            })
        }
        None => {
            return Err(BvhError::MissingSection {
                section: "MOTION",
                line: cur.line_no(),
            })
        }
    };

    let skeleton = Skeleton::new(joints).map_err(|e| BvhError::InvalidHeader {
        line: motion_line,
        message: e.to_string(),
    })?;
    let width = skeleton.channel_count();

    let (frames_line, declared_frames) = parse_frames_header(&mut cur)?;
    if declared_frames == 0 {
        return Err(BvhError::InvalidHeader {
            line: frames_line,
            message: "clip must declare at least one frame".into(),
        });
    }
    let (time_line, frame_time) = parse_frame_time_header(&mut cur)?;
    if frame_time.is_nan() || frame_time <= 0.0 {
        return Err(BvhError::InvalidHeader {
            line: time_line,
            message: format!("frame time must be positive, got {frame_time}"),
        });
    }
    cur.finish_line()?;

    let mut values = Vec::with_capacity(declared_frames.min(1 << 16) * width);
    let mut rows = 0usize;
    let mut last_line = time_line;
    for (idx, raw) in cur.lines.iter().enumerate().skip(cur.line + 1) {
        let line = idx + 1;
        let mut toks = raw.split_whitespace().peekable();
        if toks.peek().is_none() {
            continue;
        }
        last_line = line;
        if rows == declared_frames {
            return Err(BvhError::FrameCountMismatch {
                line,
                declared: declared_frames,
                found: rows + 1,
            });
        }
        let start = values.len();
        for tok in toks {
            values.push(parse_number(line, tok)?);
        }
        let found = values.len() - start;
        if found != width {
            return Err(BvhError::ChannelMismatch {
                line,
                row: rows,
                expected: width,
                found,
            });
        }
        rows += 1;
    }
    // Channel-less skeletons have blank motion rows; accept the declared count.
    if width == 0 && rows == 0 {
        rows = declared_frames;
    }
    if rows != declared_frames {
        return Err(BvhError::FrameCountMismatch {
            line: last_line,
            declared: declared_frames,
            found: rows,
        });
    }

    let clip = AnimationClip::from_flat(frame_time, width, rows, values).map_err(|e| {
        BvhError::InvalidHeader {
            line: time_line,
            message: e.to_string(),
        }
    })?;
    Ok((skeleton, clip))
}

/// Parses `{ OFFSET ... CHANNELS ... children }` for a joint whose name has
/// already been consumed.
fn parse_joint_body(
    cur: &mut Cursor<'_>,
    joints: &mut Vec<Joint>,
    name: String,
    parent: Option<usize>,
    is_end_site: bool,
) -> Result<(), BvhError> {
    match cur.next() {
        Some((_, "{")) => {}
        Some((line, _)) => return Err(BvhError::UnbalancedBraces { line }),
        None => {
            return Err(BvhError::UnbalancedBraces {
                line: cur.line_no(),
            })
        }
    }

    let index = joints.len();
    joints.push(Joint {
        name,
        parent,
        offset: Vec3::ZERO,
        channels: Vec::new(),
        is_end_site,
    });

    loop {
        let Some((line, tok)) = cur.next() else {
            return Err(BvhError::UnbalancedBraces {
                line: cur.line_no(),
            });
        };
        match tok {
            "}" => return Ok(()),
            "OFFSET" => {
                let x = cur.number()?;
                let y = cur.number()?;
                let z = cur.number()?;
                joints[index].offset = Vec3::new(x, y, z);
            }
            "CHANNELS" if !is_end_site => {
                let count = cur.integer()?;
                let mut channels = Vec::with_capacity(count);
                for _ in 0..count {
                    let (cline, ctok) = cur.expect_any()?;
                    let channel: Channel = ctok.parse().map_err(|_| BvhError::UnknownChannel {
                        line: cline,
                        name: ctok.to_string(),
                    })?;
                    if channels.contains(&channel) {
                        return Err(BvhError::DuplicateChannel {
                            line: cline,
                            joint: joints[index].name.clone(),
                            channel: channel.to_string(),
                        });
                    }
                    channels.push(channel);
                }
                joints[index].channels = channels;
            }
            "JOINT" if !is_end_site => {
                let child = cur.rest_of_line();
                if child.is_empty() {
                    return Err(BvhError::UnexpectedToken {
                        line,
                        expected: "joint name",
                        found: String::new(),
                    });
                }
                parse_joint_body(cur, joints, child, Some(index), false)?;
            }
            "End" if !is_end_site => {
                cur.expect("Site")?;
                let child = format!("{}_End", joints[index].name);
                parse_joint_body(cur, joints, child, Some(index), true)?;
            }
            "MOTION" | "ROOT" | "HIERARCHY" => return Err(BvhError::UnbalancedBraces { line }),
            other => {
                return Err(BvhError::UnexpectedToken {
                    line,
                    expected: if is_end_site {
                        "OFFSET or }"
                    } else {
                        "OFFSET, CHANNELS, JOINT, End Site or }"
                    },
                    found: other.to_string(),
                })
            }
        }
    }
}

fn parse_frames_header(cur: &mut Cursor<'_>) -> Result<(usize, usize), BvhError> {
    let (line, tok) = cur.expect_any()?;
    let attached = match tok {
        "Frames:" => None,
        t if t.starts_with("Frames:") => Some(&t["Frames:".len()..]),
        "Frames" => {
            cur.expect(":")?;
            None
        }
        other => {
            return Err(BvhError::UnexpectedToken {
                line,
                expected: "Frames:",
                found: other.to_string(),
            })
        }
    };
    let count = match attached {
        Some(num) => num.parse().map_err(|_| BvhError::MalformedNumber {
            line,
            token: num.to_string(),
        })?,
        None => cur.integer()?,
    };
    Ok((line, count))
}

fn parse_frame_time_header(cur: &mut Cursor<'_>) -> Result<(usize, f64), BvhError> {
    let line = cur.expect("Frame")?;
    let (tline, tok) = cur.expect_any()?;
    let value = match tok {
        "Time:" => cur.number()?,
        t if t.starts_with("Time:") => parse_number(tline, &t["Time:".len()..])?,
        other => {
            return Err(BvhError::UnexpectedToken {
                line: tline,
                expected: "Time:",
                found: other.to_string(),
            })
        }
    };
    Ok((line, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mocap::fixtures::MINIMAL;

    #[test]
    fn parses_minimal_file() {
        let (skel, clip) = parse_bvh(MINIMAL).unwrap();
        assert_eq!(skel.len(), 3);
        let names: Vec<_> = skel.joints().iter().map(|j| j.name.as_str()).collect();
        assert_eq!(names, ["Hips", "Chest", "Chest_End"]);
        assert_eq!(skel.joints().iter().filter(|j| !j.is_end_site).count(), 2);
        assert!(skel.joints()[2].is_end_site);
        assert_eq!(skel.joints()[1].parent, Some(0));
        assert_eq!(skel.joints()[2].parent, Some(1));
        assert_eq!(skel.joints()[1].offset, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(
            skel.joints()[1].channels,
            [Channel::Zrotation, Channel::Xrotation, Channel::Yrotation]
        );
        assert_eq!(skel.channel_count(), 9);
        assert_eq!(clip.frame_count(), 2);
        assert_eq!(clip.frame_time(), 0.033333);
        assert_eq!(clip.frame(1).unwrap()[8], 60.0);
    }

    #[test]
    fn hierarchy_only_is_missing_motion() {
        let text = MINIMAL.split("MOTION").next().unwrap();
        let err = parse_bvh(text).unwrap_err();
        assert!(
            matches!(
                err,
                BvhError::MissingSection {
                    section: "MOTION",
                    ..
                }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn motion_only_is_missing_hierarchy() {
        let err = parse_bvh("MOTION\nFrames: 1\nFrame Time: 0.1\n\n").unwrap_err();
        assert_eq!(
            err,
            BvhError::MissingSection {
                section: "HIERARCHY",
                line: 1
            }
        );
        assert!(matches!(
            parse_bvh(""),
            Err(BvhError::MissingSection { .. })
        ));
    }

    #[test]
    fn short_row_is_channel_mismatch() {
        let text = MINIMAL.replace("1 2 3 10 20 30 40 50 60", "1 2 3 10 20 30 40 50");
        let err = parse_bvh(&text).unwrap_err();
        assert_eq!(
            err,
            BvhError::ChannelMismatch {
                line: 20,
                row: 1,
                expected: 9,
                found: 8
            }
        );
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn bad_number_reports_line() {
        let text = MINIMAL.replace("OFFSET 0 1 0", "OFFSET 0 1x 0");
        let err = parse_bvh(&text).unwrap_err();
        assert_eq!(
            err,
            BvhError::MalformedNumber {
                line: 8,
                token: "1x".into()
            }
        );
        let text = MINIMAL.replace("1 2 3 10", "1 2 nan 10");
        assert!(matches!(
            parse_bvh(&text),
            Err(BvhError::MalformedNumber { line: 20, .. })
        ));
    }

    #[test]
    fn missing_close_brace() {
        let text = MINIMAL.replacen("  }\n}", "  }\n", 1);
        let err = parse_bvh(&text).unwrap_err();
        assert!(
            matches!(err, BvhError::UnbalancedBraces { line: 16 }),
            "{err:?}"
        );
    }

    #[test]
    fn extra_close_brace() {
        let text = MINIMAL.replacen("}\nMOTION", "}\n}\nMOTION", 1);
        let err = parse_bvh(&text).unwrap_err();
        assert!(
            matches!(err, BvhError::UnbalancedBraces { line: 16 }),
            "{err:?}"
        );
    }

    #[test]
    fn frame_count_must_match_rows() {
        let text = MINIMAL.replace("Frames: 2", "Frames: 3");
        assert!(matches!(
            parse_bvh(&text),
            Err(BvhError::FrameCountMismatch {
                declared: 3,
                found: 2,
                ..
            })
        ));
        let text = MINIMAL.replace("Frames: 2", "Frames: 1");
        assert!(matches!(
            parse_bvh(&text),
            Err(BvhError::FrameCountMismatch {
                declared: 1,
                line: 20,
                ..
            })
        ));
    }

    #[test]
    fn duplicate_rotation_axis_rejected() {
        let text = MINIMAL.replace(
            "CHANNELS 3 Zrotation Xrotation Yrotation",
            "CHANNELS 3 Zrotation Zrotation Yrotation",
        );
        assert!(matches!(
            parse_bvh(&text),
            Err(BvhError::DuplicateChannel { line: 9, .. })
        ));
    }

    #[test]
    fn tolerates_crlf_tabs_and_attached_headers() {
        let text = MINIMAL
            .replace('\n', "\r\n")
            .replace("  ", "\t")
            .replace("Frames: 2", "Frames:2");
        let (skel, clip) = parse_bvh(&text).unwrap();
        assert_eq!(skel.len(), 3);
        assert_eq!(clip.frame_count(), 2);
    }

    #[test]
    fn zero_frame_time_rejected() {
        let text = MINIMAL.replace("Frame Time: 0.033333", "Frame Time: 0");
        assert!(matches!(
            parse_bvh(&text),
            Err(BvhError::InvalidHeader { line: 18, .. })
        ));
    }

    #[test]
    fn unknown_channel_rejected() {
        let text = MINIMAL.replace("Xposition", "Wposition");
        assert!(matches!(
            parse_bvh(&text),
            Err(BvhError::UnknownChannel { line: 5, .. })
        ));
    }
}
