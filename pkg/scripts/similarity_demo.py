"""Print the cross-domain n-gram similarity table for synthetic corpora.

Set --shared-fraction 0 to see how disjoint template banks look.
"""

import argparse

from dialaug.dedomain import compile_matcher, dedomain_corpus
from dialaug.experiment import lexicon_dictionary, make_template_spec
from dialaug.lowres import synthesize_corpora
from dialaug.similarity import build_profile, similarity_table


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shared-fraction", type=float, default=0.8)
    ap.add_argument("--count", type=int, default=500)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    spec = make_template_spec(shared_fraction=args.shared_fraction)
    profiles = []
    for corpus in synthesize_corpora(spec, args.count, args.seed):
        matcher = compile_matcher(lexicon_dictionary(spec, corpus.domain))
        profiles.append(build_profile(dedomain_corpus(matcher, corpus)[0]))
    table = similarity_table(profiles)
    print(f"{'domain':<12} {'Uni':>7} {'Bi':>7} {'Tri':>7} {'Quad':>7}")
    for row in table.to_json()["rows"]:
        print(f"{row['domain']:<12} " + " ".join(f"{row[c]:>7.2f}" for c in ("Uni", "Bi", "Tri", "Quad")))


if __name__ == "__main__":
    main()
