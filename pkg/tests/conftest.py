import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(mod.TITLES):
        parts = mod.RESULTS.get(k)
        if not parts:
            tr.write_line(f"criterion {k:2d} NOT RUN  {mod.TITLES[k]}")
            continue
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{p[0] + ': ' if p[0] else ''}{'ok' if p[1] else 'FAILED'} {p[2]}".strip()
                           for p in parts)
        tr.write_line(f"criterion {k:2d} {'PASS' if ok else 'FAIL'}  {mod.TITLES[k]}  [{detail}]")
