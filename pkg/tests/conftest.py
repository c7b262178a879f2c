import functools
import time

# number -> (title, passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


def criterion(number, title):
    """Record a PASS/FAIL line for an acceptance test; the detail is the test's return value."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            clock = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                first = (str(exc).strip().splitlines() or [""])[0]
                ACCEPTANCE[number] = (title, False, f"{type(exc).__name__}: {first}"[:160])
                print(f"criterion {number} FAIL: {title}")
                raise
            detail = f"{detail}; {time.perf_counter() - clock:.1f} s" if detail else ""
            ACCEPTANCE[number] = (title, True, detail)
            print(f"criterion {number} PASS: {title} ({detail})")

        return run

    return wrap


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number}. {title}: {detail}")
