//! Trace CSV and float formatting.

use std::io::Write;

use varbandit_core::types::{ActionRecord, RunTrace};

pub const TRACE_HEADER: [&str; 6] = ["t", "action_id", "reward", "gap", "cum_regret", "phase"];

/// 17 significant digits in scientific notation; round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Listed actions print as their index, vectors as `v:` and `;`-joined
/// components.
pub fn action_id(a: &ActionRecord) -> String {
    match a {
        ActionRecord::Index(i) => i.to_string(),
        ActionRecord::Vector(v) => {
            let parts: Vec<String> = v.iter().map(|&x| fmt_f64(x)).collect();
            format!("v:{}", parts.join(";"))
        }
    }
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn write_trace<W: Write>(w: W, trace: &RunTrace) -> csv::Result<()> {
    let mut out = csv_writer(w);
    out.write_record(TRACE_HEADER)?;
    for (step, cum) in trace.steps().iter().zip(trace.cum_regret()) {
        out.write_record([
            step.t.to_string(),
            action_id(&step.action),
            fmt_f64(step.reward),
            fmt_f64(step.gap),
            fmt_f64(*cum),
            step.phase.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn trace_to_string(trace: &RunTrace) -> String {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;
    use varbandit_core::types::{Phase, TraceMeta};

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 0.0, 123456.789] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn trace_layout() {
        let mut t = RunTrace::new(TraceMeta::default());
        t.push(ActionRecord::Index(1), 0.25, 0.5, Phase::Variance(1));
        t.push(
            ActionRecord::Vector(Arc::from(vec![1.0, 0.0])),
            0.5,
            0.0,
            Phase::Exploit,
        );
        let s = trace_to_string(&t);
        let lines: Vec<&str> = s.split('\n').collect();
        assert_eq!(lines[0], "t,action_id,reward,gap,cum_regret,phase");
        assert_eq!(
            lines[1],
            "1,1,2.5000000000000000e-1,5.0000000000000000e-1,5.0000000000000000e-1,variance:1"
        );
        assert!(lines[2].starts_with("2,v:1.0000000000000000e0;0.0000000000000000e0,"));
        assert!(lines[2].ends_with(",exploit"));
        assert_eq!(lines[3], "");
        assert!(!s.contains('\r'));
    }
}
