"""Per-criterion outcomes, filled by test_acceptance and printed at session end."""

RESULTS = {}


def record(n, ok, detail=""):
    RESULTS[n] = ("PASS" if ok else "FAIL", detail)
    line = f"criterion {n}: {RESULTS[n][0]}" + (f"  ({detail})" if detail else "")
    print(line)
    return line
