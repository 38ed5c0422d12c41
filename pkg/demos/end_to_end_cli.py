"""Drive the command line through a complete workflow in a scratch directory:
synthesize a dataset, train the allocator on it, solve one drop with the
iterative optimizer, then benchmark three schemes on the validation split.

Each step prints the shell command it is equivalent to, so this file doubles
as a cheat sheet.

Run:  python3 demos/end_to_end_cli.py   (a few seconds)
"""

import json
import os
import tempfile

from risalloc import ScenarioConfig
from risalloc.cli import main

work = tempfile.mkdtemp(prefix="risalloc-demo-")
print(f"working in {work}\n")

# small scenario so the whole tour stays interactive
scenario = ScenarioConfig(n_bs_antennas=2, ris_side=4, num_ues=2)
config = {
    "scenario": scenario.to_dict(),
    "training": {"hidden": [32, 32, 32, 32], "max_epochs": 10, "batch_size": 8},
    "bcd": {"max_outer_iters": 80},
}
cfg_path = os.path.join(work, "config.json")
with open(cfg_path, "w") as fh:
    json.dump(config, fh, indent=2)
print(f"wrote {cfg_path}")


def run(*argv):
    print(f"\n$ risalloc {' '.join(argv)}")
    rc = main(list(argv))
    assert rc == 0, f"exit code {rc}"


ds = os.path.join(work, "ds")
ckpt = os.path.join(work, "model.ckpt")
solve_dir = os.path.join(work, "solve")
table = os.path.join(work, "comparison.csv")

run("generate", "--config", cfg_path, "--n-train", "24", "--n-val", "8",
    "--seed", "1", "--out", ds)
run("train", "--data", ds, "--out", ckpt, "--config", cfg_path)
run("bcd", "--data", ds, "--index", "0", "--alpha", "1.0",
    "--config", cfg_path, "--out", solve_dir)
run("compare", "--data", ds, "--scheme", "uniform", "--scheme", "bcd",
    "--scheme", "nn+pca", "--model", ckpt, "--config", cfg_path,
    "--out", table)

print("\nfiles produced:")
for root, _, names in sorted(os.walk(work)):
    for name in sorted(names):
        path = os.path.join(root, name)
        rel = os.path.relpath(path, work)
        print(f"  {rel:32s} {os.path.getsize(path):8d} bytes")

with open(os.path.join(solve_dir, "result.json")) as fh:
    result = json.load(fh)
print("\nsolver verdict on drop 0:")
print(f"  outer iterations : {result['outer_iterations']}")
print(f"  utility, relaxed : {result['utility_relaxed']:.9f}")
print(f"  utility, binary  : {result['utility_binary']:.9f}")

print("\nscheme comparison (validation split):")
with open(table) as fh:
    print("  " + "  ".join(fh.read().splitlines()[0].split(",")))
    fh.seek(0)
    for line in fh.read().splitlines()[1:]:
        print("  " + "  ".join(line.split(",")))
