"""Smoke test for the describeworld_py extension module.

Build first:  pip install --no-build-isolation -e crates/python
Run:          python3 python/smoke_test.py
"""

import json
import os
import subprocess
import sys
import tempfile

import numpy as np

import describeworld_py as dw

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
TASK = "make stick"


def check(cond, what):
    print(("PASS " if cond else "FAIL ") + what)
    if not cond:
        sys.exit(1)


def main():
    env = dw.Env()
    tasks = env.task_texts()
    check(len(tasks) == 10604, "task universe has 10604 tasks")

    grid, inventory = env.reset(TASK, 3)
    check(np.asarray(grid).shape == (8, 8, 3), "observation is 8x8x3")
    again, _ = dw.Env().reset(TASK, 3)
    check(grid == again, "same task and seed give the same observation")

    total, done, info = 0, False, {}
    while not done:
        grid, inventory, reward, done, info = env.step(env.expert_action())
        total += reward
    check(info.get("outcome") == "goal_complete", "expert completes the task")
    check(total == env.total_reward, "step rewards sum to the episode total")

    env.reset(TASK, 3)
    steps = 0
    while True:
        _, _, reward, done, info = env.step("place_4")
        steps += 1
        if done:
            break
    check(steps == 300 and info["outcome"] == "timeout", "idle agent times out at step 300")

    binary = os.path.join(REPO, "target", "release", "describeworld")
    if os.path.exists(binary):
        with tempfile.TemporaryDirectory() as tmp:
            manifest = os.path.join(tmp, "split.json")
            data = os.path.join(tmp, "data.jsonl")
            subprocess.run([binary, "splits", "build", "random", "--out", manifest], check=True)
            subprocess.run(
                [binary, "dataset", "export", "--manifest", manifest, "--limit", "5",
                 "--demos", "2", "--out", data],
                check=True,
            )
            records = [json.loads(r) for r in dw.load_dataset(data)]
            check(len(records) == 10, "dataset of 5 tasks x 2 demos has 10 records")
            short = json.loads(dw.truncate_record(json.dumps(records[0]), 5))
            check(short["length"] == min(5, records[0]["length"]), "truncation keeps the last transitions")
    else:
        print("SKIP dataset round trip (build the release binary first)")


if __name__ == "__main__":
    main()
