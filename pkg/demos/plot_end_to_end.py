"""
End to end from the command line
================================

Generate a two-colour image set, then drive prepare, codebook, extract and
evaluate exactly as a shell user would. Takes about half a minute.
"""

import sys
import tempfile
from pathlib import Path

from visent.cli import main
from visent.synthetic import write_colour_dataset

root = Path(tempfile.mkdtemp(prefix="visent-demo-"))
manifest, lexicon = write_colour_dataset(root, n=120, seed=0)


def run(*args):
    argv = [str(a) for a in args]
    print("$ visent", " ".join(argv))
    code = main(argv)
    if code:
        sys.exit(code)


samples = root / "samples.tsv"
run("prepare", "--manifest", manifest, "--lexicon", lexicon, "--out", samples)
run("codebook", "--samples", samples, "--codebook-size", 200, "--out", root / "codebook.bin")
run("extract", "--samples", samples, "--method", "lowlevel", "--codebook", root / "codebook.bin",
    "--out", root / "low.bin")
run("extract", "--samples", samples, "--method", "fc7", "--random-weights", "--threads", 2,
    "--out", root / "fc7.bin")
run("evaluate", "--samples", samples, "--store", root / "low.bin", "--store", root / "fc7.bin",
    "--runs", 3, "--out", root / "report")
print("outputs in", root)
