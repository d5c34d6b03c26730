#!/usr/bin/env python3
"""Regenerates tests/fixtures and tests/goldens.

Everything here is computed independently of the C++ library: prompt texts are
assembled from the frozen template wording, and the expected numbers for the
scripted scenarios (corpus mean, scaled uncertainties, trajectory counters,
EM/F1 aggregates) are derived with plain Python arithmetic. The test suite
compares engine output against these files byte-for-byte or value-for-value,
so a regression in either side shows up as a mismatch.

Deterministic: rerunning produces identical bytes.
"""

from __future__ import annotations

import json
import pathlib
import string

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"
GOLDENS = ROOT / "tests" / "goldens"

# ---------------------------------------------------------------------------
# Frozen prompt wording (kept in sync with the engine's embedded templates;
# the golden tests exist to catch drift on either side).
# ---------------------------------------------------------------------------

INITIAL = (
    "Write a short answer for the question based on the given documents.\n"
    "{documents}\n"
    "Question: {question}\n"
    "Answer:"
)
PROBE = (
    "Write a short answer for the question based on the given document.\n"
    "Document: {document}\n"
    "Question: {question}\n"
    "Answer:"
)
CALIBRATION = (
    "Write a short answer for the question based on the given documents. Each document and "
    "each previous answer is annotated with an uncertainty score from 0 to 100, where a "
    "lower score means the content is more reliable.\n"
    "{documents}\n"
    "Question: {question}\n"
    "Previous Generated Answer:\n"
    "{history}\n"
    "Answer:"
)
KEY_TAG = (
    "Write a short answer for the question based on the given documents.\n"
    "<KEY> means this document contains key information of the question.\n"
    "{documents}\n"
    "Question: {question}\n"
    "Answer:"
)
GSM8K = (
    "Explain your reasoning and give a final answer for the given question. The initial "
    "reasoning steps are annotated with uncertainty scores from 0 to 100, where a lower "
    "score means the step is more reliable.\n"
    "Question: {question}\n"
    "Reasoning Steps:\n"
    "{steps}\n"
    "Final Answer:"
)


def doc_lines(texts, scores=None):
    out = []
    for i, text in enumerate(texts, start=1):
        line = f"Document [{i}]: {text}"
        if scores is not None:
            line += f" (Uncertainty Score: {scores[i - 1]})"
        out.append(line)
    return "\n".join(out)


# ---------------------------------------------------------------------------
# Independent score math
# ---------------------------------------------------------------------------


def product(probs):
    p = 1.0
    for x in probs:
        p *= x
    return p


def scale_uncertainty(raw, mean):
    """Piecewise scaling of a raw confidence onto the 0-100 uncertainty axis."""
    if raw >= mean:
        s = (raw - mean) / (1.0 - mean)
    else:
        s = raw / mean - 1.0
    confidence = 100.0 * (0.5 + 0.5 * s)
    return 100.0 - confidence


def normalize(text):
    cleaned = "".join(ch for ch in text.lower() if ch not in string.punctuation)
    return " ".join(t for t in cleaned.split() if t not in ("a", "an", "the"))


def f1(pred, golds):
    best = 0.0
    p_toks = normalize(pred).split()
    for gold in golds:
        g_toks = normalize(gold).split()
        if not p_toks and not g_toks:
            best = max(best, 1.0)
            continue
        if not p_toks or not g_toks:
            continue
        counts = {}
        for t in g_toks:
            counts[t] = counts.get(t, 0) + 1
        common = 0
        for t in p_toks:
            if counts.get(t, 0) > 0:
                counts[t] -= 1
                common += 1
        if common == 0:
            continue
        prec = common / len(p_toks)
        rec = common / len(g_toks)
        best = max(best, 2 * prec * rec / (prec + rec))
    return best


def em(pred, golds):
    return int(any(normalize(pred) == normalize(g) for g in golds))


def write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2) + "\n")


def write_jsonl(path, records):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n")


def write_text(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ---------------------------------------------------------------------------
# Scenario A: 20 samples, one calibration round, all four transition classes.
# ---------------------------------------------------------------------------

PROBE_PROBS = [0.9, 0.6, 0.3]  # doc raw uncertainties 0.1 / 0.4 / 0.7 -> 0 / 50 / 100


def scenario_a():
    classes = ["IC"] * 6 + ["CI"] * 3 + ["II"] * 2 + ["CC"] * 9
    r0_probs = {"IC": [0.5, 0.5], "CI": [0.8], "II": [0.4], "CC": [0.9, 0.9]}
    r1_probs = {"IC": [0.85], "CI": [0.45], "II": [0.35], "CC": [0.95]}

    samples, script = [], []
    texts = []  # (class, r0_text, r1_text, gold)
    for i, cls in enumerate(classes):
        sid = f"a{i:02d}"
        question = f"What value is recorded under entry {sid} in the registry?"
        gold = f"gold value {sid}"
        wrong = f"wrong value {sid}"
        other = f"other wrong value {sid}"
        docs = [
            {
                "id": f"d{j}",
                "title": f"Registry {sid} part {j}",
                "text": f"Entry {sid} document {j} lists measurement series {j} of the registry.",
            }
            for j in range(3)
        ]
        samples.append(
            {
                "id": sid,
                "question": question,
                "qtype": "bridge" if i < 10 else "comparison",
                "split": "validation",
                "gold_answers": [gold],
                "documents": docs,
            }
        )

        r0_text = gold if cls in ("CI", "CC") else wrong
        if cls == "IC" or cls == "CC":
            r1_text = gold
        elif cls == "CI":
            r1_text = wrong
        else:  # II: sample 9 repeats its answer, sample 10 moves to another wrong one
            r1_text = wrong if i == 9 else other
        texts.append((cls, r0_text, r1_text, gold))

        for j, doc in enumerate(docs):
            script.append(
                {
                    "match_contains": ["document.\nDocument: ", doc["text"]],
                    "text": f"probe answer {sid} {j}",
                    "probs": [PROBE_PROBS[j]],
                }
            )
        script.append(
            {
                "match_contains": [question, "Round 1:"],
                "text": r1_text,
                "probs": r1_probs[cls],
            }
        )
        script.append(
            {
                "match_contains": [question, "documents.\nDocument [1]"],
                "text": r0_text,
                "probs": r0_probs[cls],
            }
        )

    # Expected values, worked out from the probabilities above.
    r0_raw = {c: product(p) for c, p in r0_probs.items()}
    r1_raw = {c: product(p) for c, p in r1_probs.items()}
    mean = sum(r0_raw[c] for c in classes) / len(classes)
    unc0 = {c: scale_uncertainty(r0_raw[c], mean) for c in r0_raw}
    unc1 = {c: scale_uncertainty(r1_raw[c], mean) for c in r1_raw}

    counts = {c: classes.count(c) for c in ("IC", "CI", "II", "CC")}
    per_round_1 = {
        c: {"count": counts[c], "mean_uncertainty": unc1[c]} for c in counts
    }

    final_em = 0.0
    final_f1 = 0.0
    for cls, _r0, r1_text, gold in texts:
        final_em += em(r1_text, [gold])
        final_f1 += f1(r1_text, [gold])
    n = len(classes)

    expected = {
        "corpus_mean": mean,
        "uncertainty_round0": unc0,
        "uncertainty_round1": unc1,
        "transition_counts": counts,
        "per_round_1": per_round_1,
        "trajectory": {
            "n_traces": n,
            "excluded": 0,
            "initially_incorrect": counts["IC"] + counts["II"],
            "calibrated_success": counts["IC"],
            "calibrated_fail": 1,
            "never_changed": 1,
            "rounds_to_success": {"1": counts["IC"]},
            "within_two_rounds_fraction": 1.0,
        },
        "final_choice": 1,
        "eval": {"em": final_em / n * 100.0, "f1": final_f1 / n * 100.0},
        "auroc": 1.0,
    }

    write_jsonl(FIXTURES / "scenario_a_samples.jsonl", samples)
    write_jsonl(FIXTURES / "scenario_a_script.jsonl", script)
    write_json(FIXTURES / "scenario_a_expected.json", expected)


# ---------------------------------------------------------------------------
# Scenario B: 5 samples for the trainset builder (stop-on-correct traces).
# ---------------------------------------------------------------------------


def scenario_b():
    samples, script = [], []
    r0 = {"s1": 0.9, "s2": 0.8, "s3": 0.3, "s4": 0.35, "s5": 0.2}

    for sid in ("s1", "s2", "s3", "s4", "s5"):
        question = f"Which code belongs to ledger {sid}?"
        gold = f"gold code {sid}"
        docs = [
            {
                "id": f"d{j}",
                "title": f"Ledger {sid} page {j}",
                "text": f"Ledger {sid} page {j} shows archived code columns {j}.",
            }
            for j in range(3)
        ]
        samples.append(
            {
                "id": sid,
                "question": question,
                "qtype": "single_hop",
                "split": "train",
                "gold_answers": [gold],
                "documents": docs,
            }
        )
        for j, doc in enumerate(docs):
            script.append(
                {
                    "match_contains": ["document.\nDocument: ", doc["text"]],
                    "text": f"probe answer {sid} {j}",
                    "probs": [PROBE_PROBS[j]],
                }
            )
        if sid in ("s1", "s2"):
            r0_text = gold  # correct immediately: preserve candidates
        else:
            r0_text = f"wrong code {sid} try 1"
            if sid in ("s3", "s4"):
                # Corrected in round 2: round entries in descending order so the
                # longer-history prompt matches its own entry first.
                script.append(
                    {
                        "match_contains": [question, "Round 2:"],
                        "text": gold,
                        "probs": [0.7],
                    }
                )
                script.append(
                    {
                        "match_contains": [question, "Round 1:"],
                        "text": f"wrong code {sid} try 2",
                        "probs": [0.5],
                    }
                )
            else:
                # Never correct: one reusable entry answers every round.
                script.append(
                    {
                        "match_contains": [question, "Previous Generated Answer:"],
                        "text": f"wrong code {sid} forever",
                        "probs": [0.4],
                    }
                )
        script.append(
            {
                "match_contains": [question, "documents.\nDocument [1]"],
                "text": r0_text,
                "probs": [r0[sid]],
            }
        )

    expected = {
        "corpus_mean": sum(r0.values()) / len(r0),
        "preserve_ids": ["s1", "s2"],
        "revise_ids": ["s3", "s4"],
        "pruned_ids": ["s5"],
        "revise_rounds_consumed": 2,
    }
    write_jsonl(FIXTURES / "scenario_b_samples.jsonl", samples)
    write_jsonl(FIXTURES / "scenario_b_script.jsonl", script)
    write_json(FIXTURES / "scenario_b_expected.json", expected)


# ---------------------------------------------------------------------------
# Dataset loader fixtures in the source formats.
# ---------------------------------------------------------------------------

TITLES = ["Alpha", "Bravo", "Charlie", "Delta", "Echo",
          "Foxtrot", "Golf", "Hotel", "India", "Juliet"]


def hotpot_record(rid, question, answer, qtype, support, n_docs=10):
    context = [
        [t, [f"{t} covers topic {i} in detail.", f"It also mentions item {i}."]]
        for i, t in enumerate(TITLES[:n_docs])
    ]
    return {
        "_id": rid,
        "question": question,
        "answer": answer,
        "type": qtype,
        "level": "medium",
        "supporting_facts": [[t, 0] for t in support],
        "context": context,
    }


def hotpotqa_fixture():
    records = [
        hotpot_record("h1", "Which topic links Alpha and Bravo?", "shared harbor",
                      "bridge", ["Alpha", "Bravo"]),
        hotpot_record("h2", "Is Charlie older than Delta?", "yes",
                      "comparison", ["Charlie", "Delta"]),
        # Only nine candidate documents: must be skipped.
        hotpot_record("h3", "What does Echo describe?", "a canal",
                      "bridge", ["Echo", "Alpha"], n_docs=9),
        # Only one supporting title: must be skipped.
        hotpot_record("h4", "What does Golf describe?", "a statue",
                      "bridge", ["Golf"]),
        # Malformed: required key missing.
        {"_id": "h5", "question": "Broken record?", "type": "bridge",
         "supporting_facts": [], "context": []},
    ]
    write_text(FIXTURES / "hotpot_dev.json", json.dumps(records, indent=1) + "\n")


def nq_fixture():
    def passage(i, gold=False):
        p = {"title": f"Page {i}", "text": f"Passage {i} text about the capital."}
        if gold:
            p["is_gold"] = True
        return p

    records = [
        {"id": "n1", "question": "What is the capital of France?", "answers": ["Paris"],
         "passages": [passage(i, gold=(i == 3)) for i in range(12)]},
        # Too few distractors: padded with duplicates.
        {"id": "n2", "question": "What is the capital of Italy?", "answers": ["Rome"],
         "passages": [passage(i, gold=(i == 0)) for i in range(6)]},
        # No gold passage: skipped.
        {"id": "n3", "question": "What is the capital of Spain?", "answers": ["Madrid"],
         "passages": [passage(i) for i in range(11)]},
        # No reference answers: skipped.
        {"id": "n4", "question": "What is the capital of Norway?", "answers": [],
         "passages": [passage(i, gold=(i == 0)) for i in range(11)]},
        # Gold but nothing else: skipped.
        {"id": "n5", "question": "What is the capital of Peru?", "answers": ["Lima"],
         "passages": [passage(0, gold=True)]},
    ]
    write_jsonl(FIXTURES / "nq_pages.jsonl", records)


def gsm8k_fixture():
    g1_steps = [
        "The plant sells 500 units in the first quarter.",
        "Sales grow by 10% each quarter after that.",
        "Second quarter sales are 500 * 1.1 = 550 units.",
        "Third quarter sales are 550 * 1.1 = 605 units.",
        "Fourth quarter sales are 605 * 1.1 = 665.5 units.",
        "Unit price is evaluated at the yearly average.",
        "Total revenue for the year comes to 55,000 dollars.",
    ]
    records = [
        {"id": "g1", "question": "What is the plant's yearly revenue?",
         "answer": "\n".join(g1_steps) + "\n#### 55,000"},
        {"id": "g2", "question": "How many apples are left from 10 after eating 2?",
         "answer": "Start with 10 apples.\nEating 2 leaves 10 - 2 = 8.\n#### 8"},
        # No final-answer marker: skipped.
        {"id": "g3", "question": "How far is the station?",
         "answer": "The walk takes twenty minutes at normal pace."},
        {"id": "g4", "question": "What does the ticket cost after the discount?",
         "answer": "The base price is 10 dollars.\nThe discount is 25%.\n"
                   "10 * 0.75 = 7.50 dollars.\n#### $7.50."},
    ]
    write_jsonl(FIXTURES / "gsm8k.jsonl", records)


# ---------------------------------------------------------------------------
# Prompt goldens: one fixed example per renderer.
# ---------------------------------------------------------------------------

GOLDEN_QUESTION = "Which observatory kept the reference meridian?"
GOLDEN_DOCS = [
    "The Royal Observatory in Greenwich set the prime meridian.",
    "The Paris Observatory predates Greenwich by nearly a decade.",
    "Nautical almanacs used Greenwich as reference from 1767.",
]


def goldens():
    write_text(
        GOLDENS / "initial_qa.txt",
        INITIAL.format(documents=doc_lines(GOLDEN_DOCS), question=GOLDEN_QUESTION),
    )
    write_text(
        GOLDENS / "doc_probe.txt",
        PROBE.format(document=GOLDEN_DOCS[0], question=GOLDEN_QUESTION),
    )
    history = (
        "Round 1: The Paris Observatory (Uncertainty Score: 73)\n"
        "Round 2: The Royal Observatory (Uncertainty Score: 51)"
    )
    write_text(
        GOLDENS / "calibration.txt",
        CALIBRATION.format(
            documents=doc_lines(GOLDEN_DOCS, scores=[0, 50, 100]),
            question=GOLDEN_QUESTION,
            history=history,
        ),
    )
    tagged = ["<KEY> " + GOLDEN_DOCS[0]] + GOLDEN_DOCS[1:]
    write_text(
        GOLDENS / "key_tag.txt",
        KEY_TAG.format(documents=doc_lines(tagged), question=GOLDEN_QUESTION),
    )
    steps = [
        ("Natalia sold 48 / 2 = 24 clips in May.", 57),
        ("Altogether she sold 48 + 24 = 72 clips.", 12),
        ("The final answer is 72.", 8),
    ]
    step_lines = "\n".join(
        f"{i}. {text}(Uncertainty Score: {score})" for i, (text, score) in enumerate(steps, 1)
    )
    write_text(
        GOLDENS / "gsm8k_calibration.txt",
        GSM8K.format(question="How many clips did Natalia sell in April and May?",
                     steps=step_lines),
    )


def main():
    scenario_a()
    scenario_b()
    hotpotqa_fixture()
    nq_fixture()
    gsm8k_fixture()
    goldens()
    print(f"fixtures -> {FIXTURES}")
    print(f"goldens  -> {GOLDENS}")


if __name__ == "__main__":
    main()
