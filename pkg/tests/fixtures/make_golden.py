"""Regenerate the golden de-domaining outputs with the brute-force oracle.

Run from the repository root: ``python3 tests/fixtures/make_golden.py``.
Only the oracle and the standard library are used, so the goldens do not
depend on the matcher they check.
"""

import json
import re
import sys
import unicodedata
from pathlib import Path

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE.parent))

from oracles import dedomain_oracle  # noqa: E402


def norm(s):
    return " ".join(unicodedata.normalize("NFC", s).split()).lower()


def count_tokens(term):
    return len(re.findall(r"[一-鿿]|[a-z0-9]+|\S", term))


def main():
    terms = set()
    for line in (HERE / "mini_film.dict").read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            terms.add(norm(line.split("\t")[0]))
    out_lines, examples = [], []
    totals = {"examples_touched": 0, "match_events": 0, "replaced_tokens": 0}
    for line in (HERE / "mini_film.jsonl").read_text(encoding="utf-8").splitlines():
        rec = json.loads(line)
        utts = [norm(u) for u in rec["context"]] + [norm(rec["response"])]
        new, spans = zip(*(dedomain_oracle(u, terms) for u in utts))
        out_lines.append(json.dumps({"context": list(new[:-1]), "response": new[-1]},
                                    ensure_ascii=False))
        examples.append([[list(s) for s in ss] for ss in spans])
        found = [s for ss in spans for s in ss]
        totals["match_events"] += len(found)
        totals["replaced_tokens"] += sum(count_tokens(s[2]) for s in found)
        totals["examples_touched"] += bool(found)
    (HERE / "golden" / "mini_film.dd.jsonl").write_text("\n".join(out_lines) + "\n", encoding="utf-8")
    report = {"examples": examples, "totals": totals}
    (HERE / "golden" / "mini_film.report.json").write_text(
        json.dumps(report, ensure_ascii=False, sort_keys=True, indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
