"""Replay the two-turn NEWPROB transcript through the loop and print each trial."""

import argparse
import json

from cegisplan.cegis import cegis_solve
from cegisplan.corpus import builtin_corpus
from cegisplan.oracle import ScriptedOracle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--record", help="write the JSON-lines run record here")
    args = ap.parse_args()

    c = builtin_corpus()
    rec = cegis_solve(c.problems["newprob"], ScriptedOracle(c.transcripts["newprob"]))
    for t in rec.trials:
        print(f"trial {t.index}: {t.verdict['status']}")
        if t.counterexample:
            print(json.dumps(t.counterexample, indent=2))
    print(f"outcome: {rec.outcome} after {rec.trials_used} trial(s)")
    if args.record:
        rec.write(args.record)


if __name__ == "__main__":
    main()
