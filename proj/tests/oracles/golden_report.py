#!/usr/bin/env python3
"""Golden scores fixture and the report.json expected from it.

Preferences: stereo iff l_stereo > l_anti (ties go to anti); meaningful iff
max(l_stereo, l_anti) > l_unrelated. Histograms: 64 shared bins over the
joint [min, max], additive smoothing 1e-9. alpha = bbs.
"""
import json
import pathlib
import random

from histogram_jsd import histogram, jsd
from mpmath import mpf

FIX = pathlib.Path(__file__).resolve().parents[1] / "fixtures"
BBS = 0.6


def display(v):
    s = "%.2f" % (v * 100.0)
    return "0.00" if s == "-0.00" else s


def main():
    rng = random.Random(674)
    scores = []
    for i in range(200):
        tid = "g%03d" % i
        if i % 37 == 5:
            scores.append({"triplet_id": tid, "l_stereo": None, "l_anti": None, "l_unrelated": None, "mode": "mlm",
                           "valid": False, "error": "provider timeout"})
            continue
        ls = round(rng.gauss(-2.0, 0.6), 6)
        la = ls if i % 23 == 0 else round(rng.gauss(-2.2, 0.7), 6)
        lu = round(rng.gauss(-3.0, 0.8), 6)
        scores.append({"triplet_id": tid, "l_stereo": ls, "l_anti": la, "l_unrelated": lu, "mode": "mlm",
                       "valid": True})
    valid = [s for s in scores if s["valid"]]
    n = len(valid)
    n_stereo = sum(1 for s in valid if s["l_stereo"] > s["l_anti"])
    n_meaningful = sum(1 for s in valid if max(s["l_stereo"], s["l_anti"]) > s["l_unrelated"])
    ss, lms = n_stereo / n, n_meaningful / n
    st = [s["l_stereo"] for s in valid]
    an = [s["l_anti"] for s in valid]
    lo, hi = min(st + an), max(st + an)
    eps = mpf("1e-9")
    j = float(jsd(histogram(st, lo, hi, 64, eps), histogram(an, lo, hi, 64, eps)))
    icat = lms * min(ss, 1 - ss) / 0.5
    eicat = lms * (BBS * (1 - j) + (1 - BBS) * BBS)
    report = {
        "model_id": "unigram", "mode": "mlm", "lms": lms, "ss": ss, "jsd": j, "bbs": BBS, "icat": icat,
        "eicat": eicat, "alpha": BBS, "n_triplets": n, "n_invalid_kb": 0, "n_rejected": 0,
        "n_failed": len(scores) - n, "bins": 64,
        "display": {k: display(v) for k, v in
                    [("lms", lms), ("ss", ss), ("jsd", j), ("bbs", BBS), ("icat", icat), ("eicat", eicat)]},
    }
    (FIX / "golden_scores.jsonl").write_text("".join(json.dumps(s, separators=(",", ":")) + "\n" for s in scores))
    (FIX / "golden_report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(report["display"])


if __name__ == "__main__":
    main()
