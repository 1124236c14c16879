"""File-backed persistence: sample-set catalog, ballot log, session table.

Layout under the store root:

    study.json              study configuration (with shuffle_seed)
    sets/<set_id>/          one ingested sample set (manifest + PNGs)
    sessions/<id>.json      session state
    ballots.jsonl           append-only ballot log

The ballot log is the archival artifact of a study: records are only ever
appended, through a single writer that fsyncs before the caller may
acknowledge anything.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shutil
import threading
from pathlib import Path

from .ensemble import Ballot, SampleSet, ballot_from_record, ballot_to_record
from .errors import ImageError, StoreError
from .image import Image, ScaleFactor
from .io import load_png
from .study import Session, StudyConfig

_CAND_RE = re.compile(r"^cand_(\d{4})\.png$")


def _read_manifest(path: Path) -> dict:
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise StoreError(f"{path}: manifest missing") from None
    except json.JSONDecodeError as e:
        raise StoreError(f"{path}: invalid JSON ({e.msg})") from None
    if not isinstance(manifest, dict):
        raise StoreError(f"{path}: manifest must be a JSON object")
    return manifest


def _check_set_dir(set_dir: Path) -> dict:
    """Validate one sample-set directory; returns its parsed manifest.

    Errors name the offending file so operators can fix the layout.
    """
    manifest = _read_manifest(set_dir / "manifest.json")
    set_id = manifest.get("set_id")
    if set_id != set_dir.name:
        raise StoreError(
            f"{set_dir / 'manifest.json'}: set_id {set_id!r} != directory name {set_dir.name!r}"
        )
    factor = manifest.get("factor")
    if not isinstance(factor, int) or isinstance(factor, bool) or factor < 1:
        raise StoreError(f"{set_dir / 'manifest.json'}: bad factor {factor!r}")
    names = manifest.get("candidates")
    if not isinstance(names, list) or not names:
        raise StoreError(f"{set_dir / 'manifest.json'}: candidates must be a non-empty list")
    for i, name in enumerate(names):
        m = _CAND_RE.match(name) if isinstance(name, str) else None
        if m is None or int(m.group(1)) != i:
            raise StoreError(
                f"{set_dir / 'manifest.json'}: candidate {i} must be named "
                f"cand_{i:04d}.png, got {name!r}"
            )
    lq = manifest.get("label_question")
    if lq is not None and (not isinstance(lq, str) or not lq):
        raise StoreError(f"{set_dir / 'manifest.json'}: label_question must be a non-empty string")

    lr_path = set_dir / "lr.png"
    if not lr_path.exists():
        raise StoreError(f"{lr_path}: missing lr.png")
    try:
        lr = load_png(lr_path)
    except ImageError as e:
        raise StoreError(f"{lr_path}: {e}") from None
    want = (lr.height * factor, lr.width * factor, lr.channels)
    for name in names:
        cand_path = set_dir / name
        if not cand_path.exists():
            raise StoreError(f"{cand_path}: missing candidate file")
        try:
            cand = load_png(cand_path)
        except ImageError as e:
            raise StoreError(f"{cand_path}: {e}") from None
        if cand.shape != want:
            raise StoreError(
                f"{cand_path}: dimensions {cand.shape} do not match "
                f"lr x factor {want}"
            )
    hr_path = set_dir / "hr.png"
    if hr_path.exists():
        try:
            hr = load_png(hr_path)
        except ImageError as e:
            raise StoreError(f"{hr_path}: {e}") from None
        if hr.shape != want:
            raise StoreError(f"{hr_path}: dimensions {hr.shape} do not match candidates {want}")
    return manifest


def _dir_digest(set_dir: Path) -> dict[str, str]:
    """name -> sha256, over every file in the set directory."""
    out = {}
    for p in sorted(set_dir.iterdir()):
        if p.is_file():
            out[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
    return out


class Store:
    """Single-directory persistence with an fsync'd append-only ballot log."""

    def __init__(self, root: str | Path, create: bool = False):
        self.root = Path(root)
        if create:
            self.root.mkdir(parents=True, exist_ok=True)
        if not self.root.is_dir():
            raise StoreError(f"{self.root}: store directory does not exist")
        self.sets_dir = self.root / "sets"
        self.sessions_dir = self.root / "sessions"
        self.ballot_path = self.root / "ballots.jsonl"
        if create:
            self.sets_dir.mkdir(exist_ok=True)
            self.sessions_dir.mkdir(exist_ok=True)
        self._log_lock = threading.Lock()
        self._log_fh = None
        self._set_cache: dict[str, SampleSet] = {}
        self._ballots: list[tuple[Ballot, str]] = []
        self._ballot_keys: set[tuple[str, str]] = set()
        self._load_ballots()

    # -- study config ------------------------------------------------------

    @property
    def study_path(self) -> Path:
        return self.root / "study.json"

    def save_study(self, config: StudyConfig) -> None:
        self.study_path.write_text(
            json.dumps(config.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )

    def load_study(self) -> StudyConfig:
        if not self.study_path.exists():
            raise StoreError(f"{self.study_path}: no study configured")
        return StudyConfig.from_json_dict(
            json.loads(self.study_path.read_text(encoding="utf-8"))
        )

    # -- sample sets -------------------------------------------------------

    def list_sets(self) -> list[str]:
        if not self.sets_dir.is_dir():
            return []
        return sorted(p.name for p in self.sets_dir.iterdir() if p.is_dir())

    def set_dir(self, set_id: str) -> Path:
        return self.sets_dir / set_id

    def manifest(self, set_id: str) -> dict:
        path = self.set_dir(set_id) / "manifest.json"
        if not path.exists():
            raise StoreError(f"unknown set {set_id!r}")
        return _read_manifest(path)

    def get_set(self, set_id: str) -> SampleSet:
        """Load (and cache) a SampleSet from its directory."""
        if set_id in self._set_cache:
            return self._set_cache[set_id]
        manifest = self.manifest(set_id)
        set_dir = self.set_dir(set_id)
        lr = load_png(set_dir / "lr.png")
        candidates = tuple(load_png(set_dir / name) for name in manifest["candidates"])
        sset = SampleSet(
            set_id=set_id,
            lr=lr,
            candidates=candidates,
            factor=ScaleFactor(manifest["factor"]),
            label_question=manifest.get("label_question"),
        )
        self._set_cache[set_id] = sset
        return sset

    def validate(self) -> None:
        """Check every cataloged set's files exist and decode; raises
        StoreError naming the first offending file."""
        for set_id in self.list_sets():
            _check_set_dir(self.set_dir(set_id))

    def rater_image_paths(self, set_id: str) -> dict[str, Path]:
        """name -> path of every rater-visible image (never hr.png)."""
        manifest = self.manifest(set_id)
        set_dir = self.set_dir(set_id)
        out = {"lr.png": set_dir / "lr.png"}
        for name in manifest["candidates"]:
            out[name] = set_dir / name
        return out

    # -- ballot log --------------------------------------------------------

    def _load_ballots(self) -> None:
        self._ballots.clear()
        self._ballot_keys.clear()
        if not self.ballot_path.exists():
            return
        with open(self.ballot_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    ballot = ballot_from_record(record)
                except Exception as e:
                    raise StoreError(
                        f"{self.ballot_path}:{lineno}: corrupt ballot record ({e})"
                    ) from None
                self._ballots.append((ballot, record["submitted_at"]))
                self._ballot_keys.add((ballot.voter_id, ballot.set_id))

    def append_ballot(self, ballot: Ballot, submitted_at: str | None = None) -> dict:
        """Durably append one record; returns it only after write+fsync."""
        record = ballot_to_record(ballot, submitted_at)
        line = json.dumps(record, separators=(",", ":"), sort_keys=True) + "\n"
        with self._log_lock:
            if self._log_fh is None:
                self._log_fh = open(self.ballot_path, "ab")
            self._log_fh.write(line.encode("utf-8"))
            self._log_fh.flush()
            os.fsync(self._log_fh.fileno())
            self._ballots.append((ballot, record["submitted_at"]))
            self._ballot_keys.add((ballot.voter_id, ballot.set_id))
        return record

    def has_ballot(self, voter_id: str, set_id: str) -> bool:
        with self._log_lock:
            return (voter_id, set_id) in self._ballot_keys

    def ballots_for_set(self, set_id: str) -> list[Ballot]:
        with self._log_lock:
            return [b for b, _ts in self._ballots if b.set_id == set_id]

    def all_ballot_records(self) -> list[dict]:
        with self._log_lock:
            return [ballot_to_record(b, ts) for b, ts in self._ballots]

    def ballot_count(self) -> int:
        with self._log_lock:
            return len(self._ballots)

    def close(self) -> None:
        with self._log_lock:
            if self._log_fh is not None:
                self._log_fh.flush()
                os.fsync(self._log_fh.fileno())
                self._log_fh.close()
                self._log_fh = None

    # -- sessions ----------------------------------------------------------

    def session_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.json"

    def save_session(self, session: Session) -> None:
        self.sessions_dir.mkdir(exist_ok=True)
        path = self.session_path(session.session_id)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(session.to_json_dict(), indent=2), encoding="utf-8")
        os.replace(tmp, path)

    def load_session(self, session_id: str) -> Session:
        path = self.session_path(session_id)
        if not path.exists():
            raise StoreError(f"unknown session {session_id!r}")
        return Session.from_json_dict(json.loads(path.read_text(encoding="utf-8")))

    def has_session(self, session_id: str) -> bool:
        return self.session_path(session_id).exists()


def ingest_samples(store: Store, directory: str | Path) -> list[str]:
    """Register every sample-set subdirectory of `directory` in the store.

    Returns the ids of newly added sets (the catalog delta). Re-ingesting a
    byte-identical set is a no-op; a same-id set with different content is
    an error, since candidates are immutable once ingested.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise StoreError(f"{directory}: not a directory")
    delta: list[str] = []
    store.sets_dir.mkdir(exist_ok=True)
    for set_dir in sorted(p for p in directory.iterdir() if p.is_dir()):
        if not (set_dir / "manifest.json").exists():
            continue  # unrelated directory
        _check_set_dir(set_dir)
        set_id = set_dir.name
        dest = store.set_dir(set_id)
        if dest.exists():
            if _dir_digest(set_dir) == _dir_digest(dest):
                continue  # idempotent re-ingest
            raise StoreError(
                f"set {set_id!r} already ingested with different content"
            )
        shutil.copytree(set_dir, dest)
        delta.append(set_id)
    return delta
