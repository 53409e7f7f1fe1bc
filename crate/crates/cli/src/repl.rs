use std::io::{self, BufRead, Write};

use construe::dialogue::Session;

pub const PROMPT: &str = "| ?- ";

/// Line-oriented loop over `input`. Lines starting with `:` are commands:
/// `:slots`, `:chart`, `:calendar`, `:transcript`, `:quit`.
pub fn run<R: BufRead, W: Write>(session: &mut Session, input: R, mut out: W, trace: bool) -> io::Result<()> {
    let mut last_chart: Option<String> = None;
    write!(out, "{PROMPT}")?;
    out.flush()?;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        match line {
            "" => {}
            ":quit" | ":q" => break,
            ":slots" => write!(out, "{}", session.acc.block())?,
            ":chart" => match &last_chart {
                Some(c) => write!(out, "{c}")?,
                None => writeln!(out, "no chart yet")?,
            },
            ":calendar" => {
                if session.calendar.is_empty() {
                    writeln!(out, "no events")?;
                }
                for e in &session.calendar.events {
                    writeln!(out, "{}  {e}", e.id)?;
                }
            }
            ":transcript" => write!(out, "{}", session.transcript_text())?,
            cmd if cmd.starts_with(':') => writeln!(out, "unknown command {cmd}")?,
            utterance => {
                let r = session.run_turn(utterance);
                let chart = r.trace();
                if trace {
                    write!(out, "{chart}")?;
                }
                last_chart = Some(chart);
                writeln!(out, "--- {}", r.reply.text)?;
            }
        }
        write!(out, "{PROMPT}")?;
        out.flush()?;
    }
    writeln!(out)?;
    Ok(())
}
