#!/usr/bin/env python3
"""Line count and id set of the toy corpus, read without the library."""
import json
import pathlib

FIX = pathlib.Path(__file__).resolve().parents[1] / "fixtures"
lines = [l for l in (FIX / "toy_corpus.jsonl").read_text(encoding="utf-8").splitlines() if l.strip()]
ids = sorted(json.loads(l)["id"] for l in lines)
assert len(ids) == len(set(ids))
(FIX / "toy_corpus_ids.json").write_text(json.dumps({"count": len(lines), "ids": ids}) + "\n")
print(len(lines), "records")
