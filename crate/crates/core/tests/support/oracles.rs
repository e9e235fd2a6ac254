//! Independent checks for the engine's headline properties. Each returns a
//! short detail line on success or the first discrepancy on failure.
//!
//! Shared by this crate's integration tests and the workspace acceptance
//! runner, which pulls the file in with `#[path]`.

#![allow(dead_code)]

use std::fs;
use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Deserialize;
use storyboard_core::events::{extract_events, render_event_text, ExtractError};
use storyboard_core::metrics::{
    micsi_scores, sus_score, ttr, MicsiResponse, MicsiSubscale, SusResponse, MICSI_POSITIVE,
};
use storyboard_core::model::Position;
use storyboard_core::model::ProjectId;
use storyboard_core::pipeline::NullSink;
use storyboard_core::prompt::{
    chapter_template_body, PromptCall, TemplateId, CHARACTER_BODY, SCENERY_BODY, SUMMARY_BODY,
};
use storyboard_core::store::{ProjectStore, StoreError, WriteFault};
use storyboard_core::{generate_story, MockProvider, NodeKind, StoryProject, StoryStructure};

pub type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

#[derive(Deserialize)]
struct GoldenCase {
    expected: String,
    #[serde(flatten)]
    call: PromptCall,
}

/// Template bodies and compiled fixtures against the files in `dir`.
pub fn golden_prompts(dir: &Path) -> Outcome {
    let read = |name: &str| fs::read_to_string(dir.join(name)).map_err(|e| format!("{name}: {e}"));
    let templates = [
        ("scenery.template.txt", SCENERY_BODY.to_string()),
        ("character_appearance.template.txt", CHARACTER_BODY.to_string()),
        ("chapter.template.txt", chapter_template_body()),
        ("summary.template.txt", SUMMARY_BODY.to_string()),
    ];
    for (file, body) in &templates {
        ensure(read(file)? == *body, || format!("{file} differs from the built-in template"))?;
    }
    let cases: Vec<GoldenCase> =
        serde_json::from_str(&read("cases.json")?).map_err(|e| format!("cases.json: {e}"))?;
    let mut kinds = Vec::new();
    for case in &cases {
        let compiled = case.call.compile().map_err(|e| format!("{}: {e}", case.expected))?;
        ensure(compiled.text == read(&case.expected)?, || {
            format!("{} differs from the compiled prompt", case.expected)
        })?;
        if !kinds.contains(&compiled.template_id) {
            kinds.push(compiled.template_id);
        }
    }
    ensure(kinds.len() == 4, || format!("only {} templates covered", kinds.len()))?;
    Ok(format!("4 templates, {} compiled fixtures byte-identical", cases.len()))
}

/// The worked example plus every single-action graph with up to three
/// characters on each side.
pub fn event_extraction() -> Outcome {
    let mut p = StoryProject::new(
        ProjectId::new("x").unwrap(),
        "t",
        "drama",
        StoryStructure::Free,
    );
    let b = p.add_board();
    let at = Position::default();
    let ids: Vec<_> = ["Ahmad", "John", "Ben"]
        .iter()
        .map(|n| p.add_character(n).unwrap())
        .collect();
    let nodes: Vec<_> = ids
        .iter()
        .map(|c| p.add_node(b, NodeKind::character(*c), at).unwrap())
        .collect();
    let act = p.add_node(b, NodeKind::action("humiliated"), at).unwrap();
    p.add_edge(b, nodes[0], act).unwrap();
    p.add_edge(b, act, nodes[1]).unwrap();
    p.add_edge(b, act, nodes[2]).unwrap();
    let events = extract_events(p.board(b).unwrap(), &p).map_err(|e| e.to_string())?;
    ensure(events.len() == 1, || format!("{} events from the example", events.len()))?;
    let text = render_event_text(&events[0], &p);
    ensure(text == "Ahmad humiliated John and Ben", || format!("rendered {text:?}"))?;

    let mut configs = 0;
    for inbound in 0u8..8 {
        for outbound in 0u8..8 {
            configs += 1;
            let mut p = StoryProject::new(
                ProjectId::new("x").unwrap(),
                "t",
                "drama",
                StoryStructure::Free,
            );
            let b = p.add_board();
            let act = p.add_node(b, NodeKind::action("met"), at).unwrap();
            let mut subjects = Vec::new();
            let mut objects = Vec::new();
            for i in 0..3 {
                if inbound & (1 << i) != 0 {
                    let c = p.add_character(&format!("S{i}")).unwrap();
                    let n = p.add_node(b, NodeKind::character(c), at).unwrap();
                    p.add_edge(b, n, act).unwrap();
                    subjects.push(c);
                }
                if outbound & (1 << i) != 0 {
                    let c = p.add_character(&format!("O{i}")).unwrap();
                    let n = p.add_node(b, NodeKind::character(c), at).unwrap();
                    p.add_edge(b, act, n).unwrap();
                    objects.push(c);
                }
            }
            let should_accept = inbound != 0 && outbound != 0;
            match extract_events(p.board(b).unwrap(), &p) {
                Ok(ev) if should_accept => {
                    ensure(
                        ev.len() == 1 && ev[0].subjects == subjects && ev[0].objects == objects,
                        || format!("in={inbound:03b} out={outbound:03b}: wrong sides {ev:?}"),
                    )?;
                }
                Err(ExtractError::IncompleteEvent { .. }) if !should_accept => {}
                other => {
                    return Err(format!(
                        "in={inbound:03b} out={outbound:03b}: expected accept={should_accept}, got {other:?}"
                    ))
                }
            }
        }
    }
    Ok(format!("example renders; {configs} brute-force configurations agree"))
}

/// Project with `n` boards, each holding one complete event.
pub fn linear_project(n: usize) -> StoryProject {
    let structure = match n {
        3 => StoryStructure::ThreeAct,
        5 => StoryStructure::FiveAct,
        _ => StoryStructure::Free,
    };
    let mut p = StoryProject::new(ProjectId::new("chain").unwrap(), "Chain", "drama", structure);
    let a = p.add_character("Ahmad").unwrap();
    let j = p.add_character("John").unwrap();
    let at = Position::default();
    for k in 0..n {
        let b = p.add_board();
        let na = p.add_node(b, NodeKind::character(a), at).unwrap();
        let nj = p.add_node(b, NodeKind::character(j), at).unwrap();
        let act = p
            .add_node(b, NodeKind::custom_action(format!("met at step {}", k + 1)), at)
            .unwrap();
        p.add_edge(b, na, act).unwrap();
        p.add_edge(b, act, nj).unwrap();
    }
    p
}

/// Chapter k's prompt holds summaries 1..k-1 once each, in order, and no
/// later summary; exactly two text calls per chapter.
pub fn summary_chaining(n: usize) -> Outcome {
    let project = linear_project(n);
    let mock = MockProvider::new();
    let chapters =
        generate_story(&project, &mock, &mut NullSink).map_err(|e| format!("n={n}: {e}"))?;
    ensure(chapters.len() == n, || format!("n={n}: {} chapters", chapters.len()))?;
    let summaries: Vec<String> = chapters
        .iter()
        .map(|c| c.summary.clone().unwrap_or_default())
        .collect();
    ensure(summaries.iter().all(|s| !s.is_empty()), || format!("n={n}: missing summary"))?;
    let prompts: Vec<String> = mock
        .received()
        .into_iter()
        .filter(|p| p.template_id == TemplateId::Chapter)
        .map(|p| p.text)
        .collect();
    ensure(prompts.len() == n, || format!("n={n}: {} chapter prompts", prompts.len()))?;
    for (k, prompt) in prompts.iter().enumerate() {
        let mut last = 0;
        for (j, s) in summaries.iter().enumerate() {
            let count = prompt.matches(s.as_str()).count();
            if j < k {
                ensure(count == 1, || {
                    format!("n={n}: chapter {} has summary {} {count} times", k + 1, j + 1)
                })?;
                let pos = prompt.find(s.as_str()).unwrap();
                ensure(pos >= last, || format!("n={n}: chapter {} summaries out of order", k + 1))?;
                last = pos;
            } else {
                ensure(count == 0, || {
                    format!("n={n}: chapter {} leaks summary {}", k + 1, j + 1)
                })?;
            }
        }
    }
    ensure(mock.text_calls() == 2 * n, || {
        format!("n={n}: {} text calls, expected {}", mock.text_calls(), 2 * n)
    })?;
    Ok(format!("n={n}: {} text calls", mock.text_calls()))
}

/// Free needs at least one board, three-act exactly three, five-act five.
pub fn structure_validation() -> Outcome {
    let mut checked = 0;
    for structure in [StoryStructure::Free, StoryStructure::ThreeAct, StoryStructure::FiveAct] {
        for n in 0..=6 {
            let mut p = StoryProject::new(ProjectId::new("s").unwrap(), "t", "drama", structure);
            for _ in 0..n {
                p.add_board();
            }
            let expected = match structure {
                StoryStructure::Free => n >= 1,
                StoryStructure::ThreeAct => n == 3,
                StoryStructure::FiveAct => n == 5,
            };
            let got = p.validate_structure().is_valid();
            ensure(got == expected, || {
                format!("{structure:?} with {n} boards: valid={got}, expected {expected}")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} structure/board-count cases"))
}

/// Anchor points, then seeded random responses against a separate formula:
/// 2.5 * (20 + sum of odd items - sum of even items).
pub fn sus_scoring(seed: u64) -> Outcome {
    let score = |items: [i64; 10]| -> Result<f64, String> {
        Ok(sus_score(&SusResponse::new(&items).map_err(|e| e.to_string())?))
    };
    for (items, expected) in [
        ([3; 10], 50.0),
        ([5, 1, 5, 1, 5, 1, 5, 1, 5, 1], 100.0),
        ([1, 5, 1, 5, 1, 5, 1, 5, 1, 5], 0.0),
    ] {
        let got = score(items)?;
        ensure(got == expected, || format!("{items:?} scored {got}, expected {expected}"))?;
    }
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..20 {
        let items: [i64; 10] = std::array::from_fn(|_| rng.gen_range(1..=5));
        let odd: i64 = items.iter().step_by(2).sum();
        let even: i64 = items.iter().skip(1).step_by(2).sum();
        let oracle = 2.5 * (20 + odd - even) as f64;
        let got = score(items)?;
        ensure(got == oracle, || format!("{items:?} scored {got}, oracle {oracle}"))?;
    }
    Ok("neutral 50, max 100, min 0; 20 random responses match".into())
}

pub fn micsi_scoring(seed: u64) -> Outcome {
    let scores = |paired: Vec<Vec<i64>>, single: [i64; 4]| {
        MicsiResponse::new(&paired, &single)
            .map(|r| micsi_scores(&r))
            .map_err(|e| e.to_string())
    };
    let s = scores(vec![vec![6, 7]; 5], [5, 4, 5, 4])?;
    let e = s[&MicsiSubscale::Enjoyment];
    ensure(e.score == 6.5 && e.positive, || format!("(6,7) gave {e:?}"))?;
    let c = s[&MicsiSubscale::Communication];
    ensure(c.score == 5.0 && c.positive, || format!("5 gave {c:?}"))?;
    let a = s[&MicsiSubscale::Alignment];
    ensure(a.score == 4.0 && !a.positive, || format!("4 gave {a:?}"))?;
    let edge = scores(vec![vec![4, 5]; 5], [1; 4])?;
    let r = edge[&MicsiSubscale::Immersion];
    ensure(r.score == 4.5 && !r.positive, || format!("(4,5) gave {r:?}"))?;

    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..200 {
        let paired: Vec<Vec<i64>> =
            (0..5).map(|_| vec![rng.gen_range(1..=7), rng.gen_range(1..=7)]).collect();
        let single: [i64; 4] = std::array::from_fn(|_| rng.gen_range(1..=7));
        let s = scores(paired.clone(), single)?;
        for (scale, pair) in MicsiSubscale::PAIRED.iter().zip(&paired) {
            let v = s[scale].score;
            let (lo, hi) = (pair[0].min(pair[1]) as f64, pair[0].max(pair[1]) as f64);
            ensure(v >= lo && v <= hi, || format!("{scale} {pair:?} -> {v}"))?;
            ensure(s[scale].positive == (v >= MICSI_POSITIVE), || format!("{scale} flag"))?;
        }
    }
    Ok("(6,7) -> 6.5; threshold at 5; 200 random pair means in range".into())
}

pub fn ttr_metric(seed: u64) -> Outcome {
    let check = |text: &str, expected: f64| -> Result<(), String> {
        let got = ttr(text).map_err(|e| e.to_string())?;
        ensure(got == expected, || format!("ttr({text:?}) = {got}, expected {expected}"))
    };
    check("a a a a", 0.25)?;
    check("one two three four five", 1.0)?;
    check("The the THE tHe", 0.25)?;

    let vocabulary = ["sea", "Ship", "storm", "Ahmad", "john", "night", "x", "and"];
    let mut rng = StdRng::seed_from_u64(seed);
    for _ in 0..100 {
        let len = rng.gen_range(1..40);
        let words: Vec<&str> = (0..len)
            .map(|_| vocabulary[rng.gen_range(0..vocabulary.len())])
            .collect();
        let t = words.join(" ");
        let single = ttr(&t).map_err(|e| e.to_string())?;
        let doubled = ttr(&format!("{t} {t}")).map_err(|e| e.to_string())?;
        ensure(doubled <= single, || format!("doubling raised ttr for {t:?}"))?;
        let upper = ttr(&t.to_uppercase()).map_err(|e| e.to_string())?;
        ensure(upper == single, || format!("case changed ttr for {t:?}"))?;
    }
    Ok("repeats 0.25, distinct 1.0; 100 random streams monotone and case-invariant".into())
}

/// Byte-stable round trip, truncated documents, and an interrupted write.
pub fn persistence(dir: &Path) -> Outcome {
    let store = ProjectStore::open(dir).map_err(|e| e.to_string())?;
    let mut project = linear_project(3);
    project.id = ProjectId::new("persist").unwrap();
    let chapters = generate_story(&project, &MockProvider::new(), &mut NullSink)
        .map_err(|e| e.to_string())?;
    project.replace_chapters(chapters).map_err(|e| e.to_string())?;
    store.create(&project).map_err(|e| e.to_string())?;
    let path = store.document_path(&project.id);
    let first = fs::read(&path).map_err(|e| e.to_string())?;
    let loaded = store.load(&project.id).map_err(|e| e.to_string())?;
    ensure(loaded == project, || "loaded project differs".into())?;
    store.save(&loaded).map_err(|e| e.to_string())?;
    let second = fs::read(&path).map_err(|e| e.to_string())?;
    ensure(first == second, || "save/load/save changed the bytes".into())?;

    // An interrupted write must leave the previous document readable.
    let mut edited = loaded.clone();
    edited.set_title("Interrupted");
    store.inject_fault(WriteFault::CrashBeforeRename { written: first.len() / 2 });
    ensure(store.save(&edited).is_err(), || "injected crash did not fail the save".into())?;
    let after = store.load(&project.id).map_err(|e| e.to_string())?;
    ensure(after == loaded, || "interrupted save changed the document".into())?;

    // Every truncation point must be reported as corrupt, never loaded.
    let step = (first.len() / 64).max(1);
    let mut truncations = 0;
    for cut in (0..first.len()).step_by(step) {
        fs::write(&path, &first[..cut]).map_err(|e| e.to_string())?;
        match store.load(&project.id) {
            Err(StoreError::CorruptDocument { backup, .. }) => {
                ensure(backup.is_some(), || format!("cut at {cut}: no backup offered"))?;
            }
            other => return Err(format!("cut at {cut}: expected CorruptDocument, got {other:?}")),
        }
        truncations += 1;
    }
    fs::write(&path, &first).map_err(|e| e.to_string())?;
    let restored = store.load_backup(&project.id).map_err(|e| e.to_string())?;
    ensure(restored == loaded, || "backup differs".into())?;
    Ok(format!(
        "{} byte document stable; crash keeps old copy; {truncations} truncations all corrupt",
        first.len()
    ))
}
