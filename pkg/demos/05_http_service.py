"""End-to-end study over HTTP: ingest, serve, vote, tally, ensemble.

Spawns a real `votesr serve` process on a loopback port, drives five
scripted raters through it with nothing but stdlib urllib, then reads the
live tally and downloads the ensembled PNG. Everything lands in
demos/out/study-store, including the append-only ballot log.
"""

import json
import shutil
import socket
import subprocess
import sys
import time
import urllib.error
import urllib.request
from pathlib import Path

import numpy as np

from votesr import Image, SampleSet, ScaleFactor, degrade
from votesr.cli import main as votesr_main
from votesr.io import save_png

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)


def api(base: str, path: str, payload: dict | None = None):
    req = urllib.request.Request(base + path)
    if payload is not None:
        req.data = json.dumps(payload).encode()
        req.add_header("Content-Type", "application/json")
    with urllib.request.urlopen(req) as resp:
        body = resp.read()
    return json.loads(body) if resp.headers.get_content_type() == "application/json" else body


def write_demo_set(parent: Path, sset: SampleSet) -> None:
    """Materialize the sample-set directory layout from FORMATS.md."""
    root = parent / sset.set_id
    root.mkdir()
    names = [f"cand_{i:04d}.png" for i in range(sset.n_candidates)]
    manifest = {"set_id": sset.set_id, "factor": sset.factor.value,
                "candidates": names, "label_question": sset.label_question}
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2))
    save_png(sset.lr, root / "lr.png")
    for name, cand in zip(names, sset.candidates):
        save_png(cand, root / name)


# -- build and ingest a sample set, configure the study ---------------------

store_dir = OUT / "study-store"
src_dir = OUT / "study-src"
for d in (store_dir, src_dir):
    if d.exists():
        shutil.rmtree(d)
src_dir.mkdir(parents=True)

rng = np.random.default_rng(5)
truth = Image(rng.random((28, 28, 1)))
sset = SampleSet(
    "digit-1", degrade(truth, ScaleFactor(4)),
    tuple(Image(np.clip(truth.data + rng.normal(0, 0.03 + 0.02 * i, truth.data.shape), 0, 1))
          for i in range(6)),
    ScaleFactor(4), label_question="which digit?",
)
write_demo_set(src_dir, sset)
assert votesr_main(["ingest", str(src_dir), "--store", str(store_dir)]) == 0
assert votesr_main(["study", "task1", "digit-1", "--store", str(store_dir),
                    "--labels", "5,6", "--seed", "17"]) == 0

# -- serve -------------------------------------------------------------------

with socket.socket() as s:
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
base = f"http://127.0.0.1:{port}"
server = subprocess.Popen(
    [sys.executable, "-m", "votesr.cli", "serve",
     "--store", str(store_dir), "--bind", f"127.0.0.1:{port}"],
)
try:
    for _ in range(100):
        try:
            study = api(base, "/api/v1/study")
            break
        except (urllib.error.URLError, ConnectionError):
            time.sleep(0.1)
    else:
        raise RuntimeError("server never came up")
    print(f"serving study {study['study_id']} on {base} "
          f"(note: no shuffle_seed in the public config)")

    # -- five raters vote ----------------------------------------------------
    for i in range(5):
        voter = f"rater-{i}"
        sid = api(base, "/api/v1/sessions", {"voter_id": voter})["session_id"]
        round_view = api(base, f"/api/v1/sessions/{sid}/round")
        order = round_view["display_order"]
        # every rater picks the two leftmost tiles on their own screen
        resp = api(base, f"/api/v1/sessions/{sid}/ballot",
                   {"selections": [0, 1], "label": "5" if i < 4 else "6"})
        print(f"{voter}: saw order {order}, picked positions [0, 1] "
              f"-> {resp['status']}")

    # -- read results ----------------------------------------------------------
    tally_body = api(base, "/api/v1/sets/digit-1/tally")
    print(f"votes: {tally_body['votes']}  labels: {tally_body['label_counts']}")

    png = api(base, "/api/v1/sets/digit-1/ensemble?k=3")
    (OUT / "service_ensemble.png").write_bytes(png)
    print(f"top-3 ensemble -> {OUT / 'service_ensemble.png'} ({len(png)} bytes)")

    ndjson = api(base, "/api/v1/export/ballots").decode()
    print(f"ballot log export: {len(ndjson.splitlines())} records "
          f"(also on disk at {store_dir / 'ballots.jsonl'})")
finally:
    server.terminate()
    server.wait(timeout=10)
print("server stopped; the store directory is the archival artifact.")
