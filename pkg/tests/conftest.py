def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(results, key=lambda k: int(k[1:])):
        ok, detail = results[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'} {detail}")
