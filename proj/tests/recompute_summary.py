#!/usr/bin/env python3
"""Run a config twice through the CLI, then rebuild summary.csv from records.csv.

usage: recompute_summary.py <gqh executable> <config.json> <scratch dir>

Fails unless both runs give byte-identical records.csv and every summary
statistic matches the recomputation exactly.
"""

import csv
import json
import math
import shutil
import subprocess
import sys
from pathlib import Path

HEADER = "arm,seed,epoch,loss,w1_oracle,risk,b,ms"


def run(exe, config, out):
    if out.exists():
        shutil.rmtree(out)
    subprocess.run([exe, "run", str(config), "--out", str(out)], check=True, stdout=subprocess.DEVNULL)
    return (out / "records.csv").read_bytes()


def mean_std(xs):
    if not xs:
        return None, None
    total = 0.0
    for x in xs:
        total += x
    mean = total / len(xs)
    if len(xs) == 1:
        return mean, 0.0
    ss = 0.0
    for x in xs:
        ss += (x - mean) * (x - mean)
    return mean, math.sqrt(ss / (len(xs) - 1))


def recompute(records_path, arms, threshold):
    with open(records_path, newline="") as f:
        lines = f.read().splitlines()
    if lines[0] != HEADER:
        raise SystemExit(f"bad records header: {lines[0]!r}")
    rows = list(csv.DictReader(lines))
    out = {}
    for arm in arms:
        by_seed = {}
        for r in rows:
            if r["arm"] == arm:
                by_seed.setdefault(int(r["seed"]), []).append(r)
        loss, w1, risk, b, reach = [], [], [], [], []
        has_w1 = False
        for seed, rs in by_seed.items():
            last = max(rs, key=lambda r: int(r["epoch"]))
            loss.append(float(last["loss"]))
            risk.append(float(last["risk"]))
            b.append(float(last["b"]))
            if last["w1_oracle"] != "":
                has_w1 = True
                w1.append(float(last["w1_oracle"]))
                for r in sorted(rs, key=lambda r: int(r["epoch"])):
                    if r["w1_oracle"] != "" and float(r["w1_oracle"]) <= threshold:
                        reach.append(float(r["epoch"]))
                        break
        out[arm] = {
            "seeds": len(by_seed),
            "final_loss": mean_std(loss),
            "final_w1": mean_std(w1),
            "final_risk": mean_std(risk),
            "final_b": mean_std(b),
            "epochs": mean_std(reach)[0] if has_w1 else None,
            "reached": len(reach) if has_w1 else None,
        }
    return out


def parse(field):
    return None if field == "" else float(field)


def main():
    exe, config, scratch = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
    cfg = json.loads(config.read_text())
    arms = [a["name"] for a in cfg["arms"]]
    threshold = cfg.get("w1_threshold", 0.05)

    first = run(exe, config, scratch / "a")
    second = run(exe, config, scratch / "b")
    if first != second:
        raise SystemExit("records.csv differs between identical runs")

    expected = recompute(scratch / "a" / "records.csv", arms, threshold)
    with open(scratch / "a" / "summary.csv", newline="") as f:
        summary = list(csv.DictReader(f))
    if [row["arm"] for row in summary] != arms:
        raise SystemExit("summary arms do not match the config")

    failures = []
    for row in summary:
        exp = expected[row["arm"]]
        checks = [("seeds", float(row["seeds"]), float(exp["seeds"]))]
        for key in ("final_loss", "final_w1", "final_risk", "final_b"):
            m, s = exp[key]
            checks.append((key + "_mean", parse(row[key + "_mean"]), m))
            checks.append((key + "_std", parse(row[key + "_std"]), s))
        checks.append(("epochs_to_w1_threshold_mean", parse(row["epochs_to_w1_threshold_mean"]), exp["epochs"]))
        reached = None if exp["reached"] is None else float(exp["reached"])
        checks.append(("reached_w1_threshold", parse(row["reached_w1_threshold"]), reached))
        for name, got, want in checks:
            if got != want:
                failures.append(f"{row['arm']}.{name}: summary {got!r} != recomputed {want!r}")
    if failures:
        raise SystemExit("\n".join(failures))
    print(f"summary of {len(arms)} arms matches records.csv exactly; repeated run is byte-identical")


if __name__ == "__main__":
    main()
