//! Word error rate between a reference and an ASR transcript, and keyword
//! groundedness with exact and fuzzy matching.

use screeneval::text::{groundedness, jaccard, keyword_set, partial_ratio, word_error_rate, DEFAULT_FUZZY_THRESHOLD};

fn main() {
    let reference = "Erm, I've been feeling really worried lately and I can't sleep at night.";
    let asr = "I've been feeling really worry lately and I can sleep at night";

    let w = word_error_rate(reference, asr).expect("non-empty reference");
    println!(
        "WER {:.3}: {} substitutions, {} deletions, {} insertions over {} words",
        w.wer, w.substitutions, w.deletions, w.insertions, w.n_ref_tokens
    );

    for (kw, text) in [("worried", asr), ("panic attacks", asr), ("can't sleep", reference)] {
        println!("partial_ratio({kw:?}) = {:.1}", partial_ratio(kw, text).expect("keyword"));
    }

    let cited = ["worried", "Can't sleep", "panic attacks", "feeling worried lately"];
    let g = groundedness(cited, asr, DEFAULT_FUZZY_THRESHOLD).expect("transcript");
    for m in &g.per_keyword {
        println!("  {:<24} {:?} ({:.1})", m.keyword, m.match_kind, m.best_score);
    }
    println!("grounded {}/{}", g.n_grounded, g.n_keywords);

    let run1 = keyword_set(["worried", "can't sleep"]);
    let run2 = keyword_set(["Worried", "restless"]);
    println!("Jaccard between runs = {:.3}", jaccard(&run1, &run2));
}
