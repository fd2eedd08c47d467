"""Collects per-criterion outcomes so the terminal summary can print them."""

import time

TITLES = {
    1: "intro example values",
    2: "tightness instances",
    3: "shrinkage factors",
    4: "static method agreement",
    5: "adaptive method ordering",
    6: "bound sandwiches in sweeps",
    7: "down-hull equivalence",
    8: "constraint-wise static optimality",
    9: "LP core against basis enumeration",
    10: "desk-scale trends and runtime",
}

RUNTIME_LIMIT = 900.0
START = time.perf_counter()
OUTCOMES = {}  # criterion -> list of (name, ok, detail)


def record(crit, name, ok, detail=""):
    OUTCOMES.setdefault(crit, []).append((name, bool(ok), detail))
    print(f"criterion {crit} [{name}]: {'PASS' if ok else 'FAIL'} {detail}")
    return ok


def summary_lines():
    elapsed = time.perf_counter() - START
    lines = []
    for crit, title in TITLES.items():
        items = OUTCOMES.get(crit)
        if crit == 10 and items is not None:
            items = items + [("runtime", elapsed < RUNTIME_LIMIT, f"{elapsed:.0f}s")]
        if not items:
            lines.append(f"SKIP criterion {crit}: {title} (not run)")
            continue
        failed = [f"{n}: {d}" for n, ok, d in items if not ok]
        flag = "FAIL" if failed else "PASS"
        tail = f" -- {'; '.join(failed)}" if failed else f" ({len(items)} checks)"
        lines.append(f"{flag} criterion {crit}: {title}{tail}")
    return lines
