//! Time-tag CSV streams: `channel,timestamp_ps`, one event per line.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const HEADER: &str = "channel,timestamp_ps";

/// Out-of-order tolerance of the parser, in picoseconds.
pub const REORDER_BUFFER_PS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    Trig,
    D1,
    D2,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::Trig => "TRIG",
            Channel::D1 => "D1",
            Channel::D2 => "D2",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "TRIG" => Ok(Channel::Trig),
            "D1" => Ok(Channel::D1),
            "D2" => Ok(Channel::D2),
            other => Err(format!("unknown channel `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub channel: Channel,
    pub timestamp_ps: u64,
}

impl Event {
    pub fn new(channel: Channel, timestamp_ps: u64) -> Self {
        Self { channel, timestamp_ps }
    }
}

/// Events ordered by timestamp; ties keep their input order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TimeTagStream {
    events: Vec<Event>,
}

impl TimeTagStream {
    /// Sorts stably by timestamp.
    pub fn from_events(mut events: Vec<Event>) -> Self {
        events.sort_by_key(|e| e.timestamp_ps);
        Self { events }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, channel: Channel) -> usize {
        self.events.iter().filter(|e| e.channel == channel).count()
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        Self::read_with_buffer(reader, REORDER_BUFFER_PS)
    }

    /// Parses a stream, accepting events up to `reorder_ps` earlier than the
    /// latest timestamp seen so far. Blank and `#` lines are skipped.
    pub fn read_with_buffer<R: BufRead>(reader: R, reorder_ps: u64) -> Result<Self> {
        let mut events = Vec::new();
        let mut seen_header = false;
        let mut latest = 0u64;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let text = line.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            if !seen_header {
                if text != HEADER {
                    return Err(parse_err(format!("expected header `{HEADER}`, found `{text}`")));
                }
                seen_header = true;
                continue;
            }
            let (ch, ts) = text
                .split_once(',')
                .ok_or_else(|| parse_err(format!("expected `channel,timestamp_ps`, found `{text}`")))?;
            let channel: Channel = ch.trim().parse().map_err(parse_err)?;
            let timestamp_ps: u64 = ts
                .trim()
                .parse()
                .map_err(|e| parse_err(format!("bad timestamp `{}`: {e}", ts.trim())))?;
            if timestamp_ps.saturating_add(reorder_ps) < latest {
                return Err(parse_err(format!(
                    "timestamp {timestamp_ps} ps is {} ps before an earlier event, beyond the {reorder_ps} ps reorder buffer",
                    latest - timestamp_ps
                )));
            }
            latest = latest.max(timestamp_ps);
            events.push(Event { channel, timestamp_ps });
        }
        if !seen_header {
            return Err(Error::Parse { line: 0, message: format!("missing header `{HEADER}`") });
        }
        Ok(Self::from_events(events))
    }

    pub fn read_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::from(e).context(path.display()))?;
        Self::read(std::io::BufReader::new(file)).map_err(|e| e.context(path.display()))
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{HEADER}")?;
        for e in &self.events {
            writeln!(out, "{},{}", e.channel, e.timestamp_ps)?;
        }
        Ok(())
    }
}

/// Parses a time-tag file.
pub fn parse_timetags(path: impl AsRef<Path>) -> Result<TimeTagStream> {
    TimeTagStream::read_path(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<TimeTagStream> {
        TimeTagStream::read(s.as_bytes())
    }

    #[test]
    fn header_only_is_empty() {
        assert!(parse("channel,timestamp_ps\n").unwrap().is_empty());
    }

    #[test]
    fn three_line_fixture() {
        let s = parse("# run 1\nchannel,timestamp_ps\nTRIG,0\nD1,1000000\nD2,1500000\n").unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.events()[2].timestamp_ps - s.events()[1].timestamp_ps, 500_000);
    }

    #[test]
    fn small_skew_is_reordered_stably() {
        let s = parse("channel,timestamp_ps\nD1,500\nD2,400\nTRIG,400\n").unwrap();
        let ch: Vec<_> = s.events().iter().map(|e| e.channel).collect();
        assert_eq!(ch, [Channel::D2, Channel::Trig, Channel::D1]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("channel,timestamp_ps\nTRIG,0\nD3,5\n", 3),
            ("channel,timestamp_ps\nD1,x\n", 2),
            ("channel,timestamp_ps\nD1,5000000\nD2,10\n", 3),
            ("chan,ts\n", 1),
            ("channel,timestamp_ps\nD1\n", 2),
        ];
        for (text, line) in cases {
            match parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("expected parse error for {text:?}, got {other:?}"),
            }
        }
        assert!(parse("").is_err());
    }

    #[test]
    fn write_then_parse_round_trips() {
        let s = TimeTagStream::from_events(vec![
            Event::new(Channel::Trig, 0),
            Event::new(Channel::D2, 17),
            Event::new(Channel::D1, u64::MAX / 2),
        ]);
        let mut buf = Vec::new();
        s.write(&mut buf).unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), s);
    }
}
