#!/usr/bin/env python3
# Stand-in for the simulator shim. Behaviour comes from STUB_SHIM_MODE.
import json
import os
import subprocess
import sys
import time

args = sys.argv[1:]
if len(args) != 2 or args[0] != "--request":
    print("usage: stub_shim.py --request <request.json>", file=sys.stderr)
    sys.exit(2)

with open(args[1]) as f:
    req = json.load(f)
out = req["output_dir"]
mode = os.environ.get("STUB_SHIM_MODE", "ok")
if os.environ.get("STUB_SHIM_PIDFILE"):
    with open(os.environ["STUB_SHIM_PIDFILE"], "a") as f:
        f.write(f"{os.getpid()}\n")


def write_result(doc):
    tmp = os.path.join(out, ".result.tmp")
    with open(tmp, "w") as f:
        json.dump(doc, f)
    os.replace(tmp, os.path.join(out, "result.json"))


if mode == "ok":
    frames = max(1, round(req["max_sim_seconds"] * 20))
    with open(req["script_path"]) as f:
        script = f.read()
    video = {"kind": "sim-video", "script": script, "seed": req["seed"], "frames": frames, "fps": 20.0}
    with open(os.path.join(out, "video.mockvid"), "w") as f:
        json.dump(video, f)
    print("stub: simulated", frames, "frames")
    write_result({"status": "ok", "video_path": "video.mockvid", "frames": frames, "fps": 20.0,
                  "log_excerpt": "stub run", "wall_time_s": 0.01})
    sys.exit(0)
if mode == "scenario_error":
    print("Traceback: InvalidScenarioError: object placement failed", file=sys.stderr)
    write_result({"status": "scenario_error"})
    sys.exit(3)
if mode == "hang":
    # leaves a grandchild behind unless the caller kills the group
    child = subprocess.Popen(["sleep", "300"])
    if os.environ.get("STUB_SHIM_PIDFILE"):
        with open(os.environ["STUB_SHIM_PIDFILE"], "a") as f:
            f.write(f"{child.pid}\n")
    time.sleep(300)
if mode == "partial":
    with open(os.path.join(out, "result.json"), "w") as f:
        f.write('{"status": "ok", "video_pa')
    sys.exit(0)
if mode == "no_result":
    sys.exit(0)
if mode == "mismatch":
    write_result({"status": "runtime_error", "log_excerpt": "lost connection"})
    sys.exit(0)
if mode == "crash":
    print("segfault in simulator client", file=sys.stderr)
    sys.exit(1)
print("unknown STUB_SHIM_MODE", mode, file=sys.stderr)
sys.exit(2)
