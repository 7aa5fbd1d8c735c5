#!/usr/bin/env python3
"""Freeze corpus BLEU reference values computed by sacrebleu.

Writes tests/data/bleu_oracle.json. Rerun only when the test corpora need to
change; the C++ tests read the frozen file and never call Python.

    python3 tools/make_bleu_oracle.py > tests/data/bleu_oracle.json
"""

import json
import random
import sys

import sacrebleu
from sacrebleu.metrics import BLEU

SEED = 20260917
N_CORPORA = 50

VOCAB = [
    "der", "die", "das", "Haus", "ist", "klein", "groß", "und", "nicht",
    "Wahlen", "Vorzeitige", "Klima", "Krise", "Öl", "Straße", "über",
    "3.5", "1,000", "2024", "$5", "100%", "e-mail", "U.S.", "l'été",
    "Hallo,", "wie", "geht's?", "gut.", "(ja)", "\"nein\"", "a/b", "x+y",
    "€20", "–", "naïve", "café", "日本", "東京", "A", "a",
]


def sentence(rng: random.Random) -> str:
    n = rng.randint(0, 9)
    words = [rng.choice(VOCAB) for _ in range(n)]
    if words and rng.random() < 0.3:
        words[-1] += rng.choice([".", "!", "?", ","])
    return " ".join(words)


def perturb(rng: random.Random, ref: str) -> str:
    words = ref.split()
    out = []
    for w in words:
        r = rng.random()
        if r < 0.15:
            continue
        if r < 0.3:
            out.append(rng.choice(VOCAB))
        elif r < 0.35:
            out.append(w.upper())
        else:
            out.append(w)
        if rng.random() < 0.08:
            out.append(rng.choice(VOCAB))
    return " ".join(out)


def make_scorer():
    return BLEU(tokenize="intl", smooth_method="exp", lowercase=False)


def score(hyps, refs):
    bleu = make_scorer()
    result = bleu.corpus_score(hyps, [refs])
    return {
        "score": result.score,
        "correct": list(result.counts),
        "total": list(result.totals),
        "sys_len": result.sys_len,
        "ref_len": result.ref_len,
    }


def main() -> None:
    rng = random.Random(SEED)
    corpora = []
    for _ in range(N_CORPORA):
        size = rng.randint(1, 6)
        refs = [sentence(rng) for _ in range(size)]
        hyps = [perturb(rng, r) if rng.random() < 0.85 else sentence(rng) for r in refs]
        corpora.append({"hypotheses": hyps, "references": refs, **score(hyps, refs)})

    # Pooled counts differ from the mean of the halves' scores.
    hyps = ["das Haus ist klein", "die Krise"]
    refs = ["das Haus ist klein", "die Klima Krise ist groß und nicht klein"]
    halves = {
        "hypotheses": hyps,
        "references": refs,
        "whole": score(hyps, refs)["score"],
        "first": score(hyps[:1], refs[:1])["score"],
        "second": score(hyps[1:], refs[1:])["score"],
    }

    sig = make_scorer()
    sig.corpus_score(["a"], [["a"]])
    json.dump(
        {
            "generator": f"sacrebleu {sacrebleu.__version__}",
            "signature": str(sig.get_signature()),
            "corpora": corpora,
            "halves": halves,
        },
        sys.stdout,
        ensure_ascii=False,
        indent=1,
    )
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
