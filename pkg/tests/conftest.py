import pytest

_VERDICTS = []


class Verdicts:
    """Collects one pass/fail line per acceptance criterion."""

    def record(self, ident, title, clauses, detail=""):
        ok = all(clauses.values())
        failed = [name for name, good in clauses.items() if not good]
        line = f"{ident} {'PASS' if ok else 'FAIL'}: {title}"
        if failed:
            line += f" [failed: {', '.join(failed)}]"
        if detail:
            line += f" ({detail})"
        _VERDICTS.append(line)
        print(line)
        return ok


@pytest.fixture
def verdicts():
    return Verdicts()


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_VERDICTS, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
