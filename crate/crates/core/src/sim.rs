//! Kinematic playback of planned trajectories: note events, timing errors,
//! activity timelines, MIDI and SVG artifacts.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::arena::Arena;
use crate::collision::{horizon, segments};
use crate::dream::TimedTrajectory;
use crate::error::{Error, Result};
use crate::model::Task;

/// Minimum spacing between two events on one lane.
pub const RETRIGGER_S: f64 = 0.05;

pub const TICKS_PER_QUARTER: u16 = 480;
/// 120 bpm.
pub const MICROS_PER_QUARTER: u32 = 500_000;
pub const NOTE_LENGTH_S: f64 = 0.1;
pub const NOTE_VELOCITY: u8 = 100;

const PITCHES: [(&str, u8); 7] =
    [("G3", 55), ("A3", 57), ("B3", 59), ("C4", 60), ("D4", 62), ("E4", 64), ("G4", 67)];

pub fn note_to_midi(note: &str) -> Result<u8> {
    PITCHES.iter().find(|(n, _)| *n == note).map(|&(_, p)| p).ok_or_else(|| Error::UnmappedNote(note.to_string()))
}

pub fn midi_to_note(pitch: u8) -> Option<&'static str> {
    PITCHES.iter().find(|&&(_, p)| p == pitch).map(|&(n, _)| n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoteEvent {
    pub note: String,
    pub lane: usize,
    pub robot_id: usize,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskTiming {
    pub task_id: usize,
    pub lane: Option<usize>,
    pub target: f64,
    pub played: Option<f64>,
    pub error: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    Moving,
    Waiting,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Interval {
    pub robot_id: usize,
    pub state: Activity,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub dt: f64,
    pub duration: f64,
    pub events: Vec<NoteEvent>,
    pub timings: Vec<TaskTiming>,
    /// Tasks with no matching event.
    pub missed: Vec<usize>,
    /// Events not matched to any task.
    pub extra_events: usize,
    pub timeline: Vec<Interval>,
    pub max_speed: f64,
}

impl SimReport {
    pub fn max_timing_error(&self) -> f64 {
        self.timings.iter().filter_map(|t| t.error).fold(0.0, f64::max)
    }

    pub fn success(&self) -> bool {
        self.missed.is_empty() && self.extra_events == 0
    }

    /// Timeline intervals of one robot, in time order.
    pub fn intervals_of(&self, robot_id: usize) -> impl Iterator<Item = &Interval> {
        self.timeline.iter().filter(move |i| i.robot_id == robot_id)
    }
}

/// Steps every robot with period `dt`, firing an event whenever a robot's
/// path crosses a lane's midline inside that lane. Event times come from
/// interpolating the crossing inside the step, not from the step boundary.
pub fn run(trajectories: &[TimedTrajectory], arena: &Arena, tasks: &[Task], dt: f64) -> Result<SimReport> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Invariant(format!("time step must be positive, got {dt}")));
    }
    let duration = horizon(trajectories);
    let midline = arena.lanes.first().map_or(0.0, |l| l.midpoint.y);
    let steps = (duration / dt).ceil() as usize + 1;

    let mut events = Vec::new();
    let mut max_speed: f64 = 0.0;
    for traj in trajectories {
        let mut t0 = 0.0;
        let mut p0 = traj.position_at(t0);
        for k in 1..=steps {
            let t1 = (k as f64 * dt).min(duration.max(dt));
            let p1 = traj.position_at(t1);
            if t1 > t0 {
                max_speed = max_speed.max(p0.distance(p1) / (t1 - t0));
            }
            let (a, b) = (p0.y - midline, p1.y - midline);
            if a * b < 0.0 || (b == 0.0 && a != 0.0) {
                let s = a / (a - b);
                let x = p0.x + (p1.x - p0.x) * s;
                if let Some(lane) = arena.lane_at_x(x) {
                    events.push(NoteEvent {
                        note: lane.note.clone(),
                        lane: lane.index,
                        robot_id: traj.robot_id,
                        time: t0 + (t1 - t0) * s,
                    });
                }
            }
            (t0, p0) = (t1, p1);
        }
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.lane.cmp(&b.lane)).then(a.robot_id.cmp(&b.robot_id)));
    let mut last_on_lane: HashMap<usize, f64> = HashMap::new();
    events.retain(|e| match last_on_lane.get(&e.lane) {
        Some(&t) if e.time - t < RETRIGGER_S => false,
        _ => {
            last_on_lane.insert(e.lane, e.time);
            true
        }
    });

    let mut used = vec![false; events.len()];
    let mut timings = Vec::with_capacity(tasks.len());
    let mut missed = Vec::new();
    for task in tasks {
        let best = events
            .iter()
            .enumerate()
            .filter(|(i, e)| !used[*i] && Some(e.lane) == task.lane)
            .min_by(|(_, a), (_, b)| (a.time - task.time).abs().total_cmp(&(b.time - task.time).abs()))
            .map(|(i, e)| (i, e.time));
        if let Some((i, _)) = best {
            used[i] = true;
        } else {
            missed.push(task.id);
        }
        let played = best.map(|(_, t)| t);
        timings.push(TaskTiming {
            task_id: task.id,
            lane: task.lane,
            target: task.time,
            played,
            error: played.map(|t| (t - task.time).abs()),
        });
    }
    let extra_events = used.iter().filter(|u| !**u).count();
    Ok(SimReport {
        dt,
        duration,
        events,
        timings,
        missed,
        extra_events,
        timeline: timeline(trajectories, duration),
        max_speed,
    })
}

/// Moving/waiting intervals per robot, tiling `[0, until]`.
pub fn timeline(trajectories: &[TimedTrajectory], until: f64) -> Vec<Interval> {
    let mut out = Vec::new();
    for traj in trajectories {
        let mut mine: Vec<Interval> = Vec::new();
        for seg in segments(traj, until) {
            if seg.t1 <= seg.t0 {
                continue;
            }
            let state = if seg.is_stationary() { Activity::Waiting } else { Activity::Moving };
            match mine.last_mut() {
                Some(last) if last.state == state && last.end == seg.t0 => last.end = seg.t1,
                _ => mine.push(Interval { robot_id: traj.robot_id, state, start: seg.t0, end: seg.t1 }),
            }
        }
        if mine.is_empty() {
            mine.push(Interval { robot_id: traj.robot_id, state: Activity::Waiting, start: 0.0, end: until });
        }
        out.extend(mine);
    }
    out
}

pub fn write_events_csv<W: Write>(events: &[NoteEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["note", "lane", "robot_id", "time_s"])?;
    for e in events {
        w.write_record([e.note.clone(), e.lane.to_string(), e.robot_id.to_string(), e.time.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timeline_csv<W: Write>(report: &SimReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["robot_id", "state", "start_s", "end_s"])?;
    for i in &report.timeline {
        let state = match i.state {
            Activity::Moving => "moving",
            Activity::Waiting => "waiting",
        };
        w.write_record([i.robot_id.to_string(), state.to_string(), i.start.to_string(), i.end.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Gantt-style chart: one band per robot, solid while moving, dashed while
/// waiting, with a tick at every note the robot plays.
pub fn timeline_svg(report: &SimReport) -> String {
    let mut robots: Vec<usize> = report.timeline.iter().map(|i| i.robot_id).collect();
    robots.dedup();
    let (left, band, width) = (70.0, 30.0, 900.0);
    let span = report.duration.max(1.0);
    let x = |t: f64| left + width * t / span;
    let height = 40.0 + band * robots.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" font-family="sans-serif" font-size="12">"#,
        left + width + 20.0
    );
    for (row, &id) in robots.iter().enumerate() {
        let y = 20.0 + band * (row as f64 + 0.5);
        let _ = writeln!(svg, r#"<text x="5" y="{}">robot {id}</text>"#, y + 4.0);
        for i in report.intervals_of(id) {
            let dash = match i.state {
                Activity::Moving => "",
                Activity::Waiting => r#" stroke-dasharray="4 3""#,
            };
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{y}" x2="{:.2}" y2="{y}" stroke="black" stroke-width="2"{dash}/>"#,
                x(i.start),
                x(i.end)
            );
        }
        for e in report.events.iter().filter(|e| e.robot_id == id) {
            let _ = writeln!(
                svg,
                r#"<line x1="{0:.2}" y1="{1}" x2="{0:.2}" y2="{2}" stroke="red"><title>{3} {4:.3} s</title></line>"#,
                x(e.time),
                y - 8.0,
                y + 8.0,
                e.note,
                e.time
            );
        }
    }
    let axis_y = 20.0 + band * robots.len() as f64 + 12.0;
    let _ = writeln!(svg, r#"<text x="{left}" y="{axis_y}">0 s</text>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="{axis_y}" text-anchor="end">{:.1} s</text>"#, left + width, span);
    svg.push_str("</svg>\n");
    svg
}

fn push_vlq(buf: &mut Vec<u8>, mut value: u32) {
    let mut bytes = [0u8; 5];
    let mut n = 0;
    loop {
        bytes[n] = (value & 0x7f) as u8;
        n += 1;
        value >>= 7;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        buf.push(if i == 0 { bytes[i] } else { bytes[i] | 0x80 });
    }
}

fn seconds_to_ticks(t: f64) -> u32 {
    let per_second = f64::from(TICKS_PER_QUARTER) * 1e6 / f64::from(MICROS_PER_QUARTER);
    (t * per_second).round().max(0.0) as u32
}

/// Standard MIDI file, format 0, one track; a note-on per event and a note-off
/// `NOTE_LENGTH_S` later.
pub fn midi_bytes(events: &[NoteEvent]) -> Result<Vec<u8>> {
    let length = seconds_to_ticks(NOTE_LENGTH_S);
    // (tick, on?, pitch); offs sort before ons at equal ticks.
    let mut messages = Vec::with_capacity(2 * events.len());
    for e in events {
        let pitch = note_to_midi(&e.note)?;
        let tick = seconds_to_ticks(e.time);
        messages.push((tick, true, pitch));
        messages.push((tick + length, false, pitch));
    }
    messages.sort_by_key(|&(tick, on, pitch)| (tick, on, pitch));

    let mut track = Vec::new();
    push_vlq(&mut track, 0);
    let tempo = MICROS_PER_QUARTER.to_be_bytes();
    track.extend_from_slice(&[0xff, 0x51, 0x03, tempo[1], tempo[2], tempo[3]]);
    let mut now = 0;
    for (tick, on, pitch) in messages {
        push_vlq(&mut track, tick - now);
        now = tick;
        if on {
            track.extend_from_slice(&[0x90, pitch, NOTE_VELOCITY]);
        } else {
            track.extend_from_slice(&[0x80, pitch, 0]);
        }
    }
    push_vlq(&mut track, 0);
    track.extend_from_slice(&[0xff, 0x2f, 0x00]);

    let mut out = Vec::with_capacity(22 + track.len());
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&0u16.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&TICKS_PER_QUARTER.to_be_bytes());
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(track.len() as u32).to_be_bytes());
    out.extend_from_slice(&track);
    Ok(out)
}

pub fn emit_midi(events: &[NoteEvent], path: &std::path::Path) -> Result<()> {
    std::fs::write(path, midi_bytes(events)?)?;
    Ok(())
}

pub fn emit_timeline(report: &SimReport, csv_path: &std::path::Path, svg_path: &std::path::Path) -> Result<()> {
    write_timeline_csv(report, std::fs::File::create(csv_path)?)?;
    std::fs::write(svg_path, timeline_svg(report))?;
    Ok(())
}
