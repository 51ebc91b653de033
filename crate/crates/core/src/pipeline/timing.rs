use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

/// Stage names in pipeline order.
pub const STAGES: [&str; 5] = ["preprocess", "tts", "facegen", "merge", "encode"];

/// Monotonic time source in seconds; injectable for reproducible benchmarks.
pub trait Clock: Send + Sync {
    fn now(&self) -> f64;
}

/// Wall clock measured from construction.
#[derive(Debug)]
pub struct SystemClock(Instant);

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock(Instant::now())
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Clock that advances by scripted increments, one per reading after the
/// first, cycling through `steps`.
#[derive(Debug)]
pub struct ScriptedClock {
    steps: Vec<f64>,
    state: Mutex<(f64, usize, bool)>,
}

impl ScriptedClock {
    pub fn new(steps: Vec<f64>) -> Self {
        ScriptedClock { steps, state: Mutex::new((0.0, 0, false)) }
    }
}

impl Clock for ScriptedClock {
    fn now(&self) -> f64 {
        let mut s = self.state.lock().expect("clock poisoned");
        if s.2 && !self.steps.is_empty() {
            s.0 += self.steps[s.1 % self.steps.len()];
            s.1 += 1;
        }
        s.2 = true;
        s.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    /// Exclusive wall time of the stage.
    pub seconds: f64,
    /// Wall seconds per second of output.
    pub seconds_per_second: f64,
    pub rtf: f64,
}

/// Per-stage cost of producing one second of output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTimingReport {
    pub stages: Vec<StageTiming>,
    pub output_seconds: f64,
    pub total_seconds: f64,
}

impl StageTimingReport {
    pub fn new(output_seconds: f64) -> Self {
        StageTimingReport { stages: Vec::new(), output_seconds, total_seconds: 0.0 }
    }

    pub fn record(&mut self, stage: &str, seconds: f64) {
        let per = if self.output_seconds > 0.0 { seconds / self.output_seconds } else { 0.0 };
        self.stages.push(StageTiming { stage: stage.to_string(), seconds, seconds_per_second: per, rtf: per });
    }

    pub fn stage(&self, name: &str) -> Option<&StageTiming> {
        self.stages.iter().find(|s| s.stage == name)
    }

    pub fn end_to_end_rtf(&self) -> f64 {
        if self.output_seconds > 0.0 {
            self.total_seconds / self.output_seconds
        } else {
            0.0
        }
    }

    /// Stage-wise sum of two runs, rescaled to their combined output length.
    pub fn merged(&self, other: &StageTimingReport) -> StageTimingReport {
        let mut out = StageTimingReport::new(self.output_seconds + other.output_seconds);
        for st in &self.stages {
            let extra = other.stage(&st.stage).map_or(0.0, |o| o.seconds);
            out.record(&st.stage, st.seconds + extra);
        }
        out.total_seconds = self.total_seconds + other.total_seconds;
        out
    }

    /// Tab-separated table with header `stage  seconds_per_second  rtf`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("stage\tseconds_per_second\trtf\n");
        for st in &self.stages {
            s.push_str(&format!("{}\t{:.6}\t{:.6}\n", st.stage, st.seconds_per_second, st.rtf));
        }
        s
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Per-stage median across `reports`; stage order follows the first report.
pub fn median_report(reports: &[StageTimingReport]) -> StageTimingReport {
    let Some(first) = reports.first() else {
        return StageTimingReport::new(0.0);
    };
    if reports.len() == 1 {
        return first.clone();
    }
    let mut out = StageTimingReport::new(median(reports.iter().map(|r| r.output_seconds).collect()));
    out.total_seconds = median(reports.iter().map(|r| r.total_seconds).collect());
    for st in &first.stages {
        let pick = |f: fn(&StageTiming) -> f64| {
            median(reports.iter().filter_map(|r| r.stage(&st.stage)).map(f).collect())
        };
        out.stages.push(StageTiming {
            stage: st.stage.clone(),
            seconds: pick(|s| s.seconds),
            seconds_per_second: pick(|s| s.seconds_per_second),
            rtf: pick(|s| s.rtf),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rtf_is_seconds_per_output_second() {
        let mut r = StageTimingReport::new(2.0);
        r.record("tts", 0.8);
        assert_eq!(r.stage("tts").unwrap().rtf, 0.4);
        assert_eq!(r.to_tsv(), "stage\tseconds_per_second\trtf\ntts\t0.400000\t0.400000\n");
    }

    #[test]
    fn median_of_two_is_midpoint() {
        let mk = |s| {
            let mut r = StageTimingReport::new(1.0);
            r.record("tts", s);
            r
        };
        let m = median_report(&[mk(0.2), mk(0.4)]);
        assert!((m.stage("tts").unwrap().rtf - 0.3).abs() < 1e-12);
        assert_eq!(median_report(&[mk(0.2)]), mk(0.2));
    }

    #[test]
    fn scripted_clock_advances() {
        let c = ScriptedClock::new(vec![0.5, 1.0]);
        assert_eq!([c.now(), c.now(), c.now(), c.now()], [0.0, 0.5, 1.5, 2.0]);
    }
}
