#!/usr/bin/env python3
"""Fetch the EIA Monthly Energy Review petroleum CSV and pin a snapshot.

The library never touches the network; this script wraps one plain HTTP
download (or copies an already-downloaded file), resolves the distillate
and propane MSN codes from the file's own Description column, and
writes the snapshot next to a .meta.json sidecar recording what was
chosen. The test suite discovers the snapshot through that sidecar.

Find the CSV under https://www.eia.gov/totalenergy/data/monthly/ in the
petroleum section (refinery and blender net production); pass either the
CSV link or a local path:

    python scripts/fetch_mer.py https://www.eia.gov/totalenergy/data/browser/csv.php?tbl=T03.02
    python scripts/fetch_mer.py ~/Downloads/MER_T03_02.csv

If description matching is ambiguous for a vintage, pin the codes by
hand with --distillate-msn / --propane-msn (use `mercast list` to browse).
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
import urllib.request
from datetime import datetime, timezone
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mercast.ingest import CatalogEntry, list_series

REPO_ROOT = Path(__file__).resolve().parents[1]
DEFAULT_OUT = REPO_ROOT / "data" / "mer_snapshot.csv"

ROLE_TERMS = {
    "distillate": ("distillate fuel oil", "refinery and blender net production"),
    "propane": ("propane", "refinery and blender net production"),
}


def retrieve(source: str, dest: Path) -> str:
    dest.parent.mkdir(parents=True, exist_ok=True)
    if source.startswith(("http://", "https://")):
        with urllib.request.urlopen(source, timeout=120) as resp, dest.open("wb") as out:
            shutil.copyfileobj(resp, out)
        return source
    src = Path(source).expanduser()
    shutil.copyfile(src, dest)
    return str(src.resolve())


def resolve_role(catalog: list[CatalogEntry], role: str, pinned: str | None) -> CatalogEntry:
    if pinned:
        for entry in catalog:
            if entry.msn == pinned:
                return entry
        raise SystemExit(f"error: --{role}-msn {pinned} is not in this file")
    terms = ROLE_TERMS[role]
    hits = [e for e in catalog if all(t in e.description.lower() for t in terms)]
    if len(hits) == 1:
        return hits[0]
    print(f"error: {len(hits)} candidates for role {role!r}; pin one with --{role}-msn:", file=sys.stderr)
    for entry in hits or catalog:
        print(f"  {entry.msn:12s} {entry.description}", file=sys.stderr)
    raise SystemExit(1)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("source", help="CSV URL or path to an already-downloaded MER petroleum file")
    parser.add_argument("--out", type=Path, default=DEFAULT_OUT, help=f"snapshot destination (default {DEFAULT_OUT})")
    parser.add_argument("--distillate-msn", default=None, help="skip description matching for the distillate role")
    parser.add_argument("--propane-msn", default=None, help="skip description matching for the propane role")
    args = parser.parse_args(argv)

    origin = retrieve(args.source, args.out)
    catalog = list_series(args.out)
    roles = {
        "distillate": resolve_role(catalog, "distillate", args.distillate_msn),
        "propane": resolve_role(catalog, "propane", args.propane_msn),
    }

    meta = {
        "source": origin,
        "retrieved": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "series": {
            role: {
                "msn": e.msn,
                "description": e.description,
                "unit": e.unit,
                "first": e.first.isoformat(),
                "last": e.last.isoformat(),
                "n_months": e.n_months,
            }
            for role, e in roles.items()
        },
    }
    sidecar = args.out.with_suffix(".meta.json")
    sidecar.write_text(json.dumps(meta, indent=2) + "\n")

    print(f"snapshot: {args.out}")
    print(f"sidecar:  {sidecar}")
    for role, e in roles.items():
        print(f"{role:10s} -> {e.msn}  {e.description}  [{e.first.isoformat()} .. {e.last.isoformat()}]")
    print("run the pinned-data acceptance tests with: python -m pytest tests/test_acceptance.py")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
