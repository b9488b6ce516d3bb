#!/usr/bin/env python3
"""Regenerate include/cmcs/detail/psl_snapshot.inc from data/public_suffix_list.dat.

Comments and blank lines are dropped; the remaining rules are emitted as a
sequence of raw string literals (each under 16 KiB) that concatenate into one
newline-separated rule list.
"""

import pathlib
import re
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
SRC = ROOT / "data" / "public_suffix_list.dat"
DST = ROOT / "include" / "cmcs" / "detail" / "psl_snapshot.inc"
CHUNK = 12000


def main() -> int:
    text = SRC.read_text(encoding="utf-8")
    version = re.search(r"^// VERSION: (\S+)", text, re.M)
    rules = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("//"):
            continue
        rules.append(line.split()[0])

    chunks, cur = [], ""
    for rule in rules:
        if len(cur) + len(rule) + 1 > CHUNK:
            chunks.append(cur)
            cur = ""
        cur += rule + "\n"
    if cur:
        chunks.append(cur)

    out = ["// Generated by tools/gen_psl_snapshot.py. Do not edit.",
           f"// Source: data/public_suffix_list.dat ({version.group(1) if version else 'unknown'})",
           f"// Rules: {len(rules)}",
           ""]
    out.append(f'#define CMCS_PSL_SNAPSHOT_VERSION "{version.group(1) if version else "unknown"}"')
    out.append("")
    out.append("inline constexpr const char* kPslSnapshotChunks[] = {")
    for c in chunks:
        out.append('  R"PSL(' + c + ')PSL",')
    out.append("};")
    DST.write_text("\n".join(out) + "\n", encoding="utf-8")
    print(f"wrote {DST} ({len(rules)} rules, {len(chunks)} chunks)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
