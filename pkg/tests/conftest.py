from hypothesis import settings

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("#", 1)[1].split()[0])):
            terminalreporter.write_line(line)


settings.register_profile("default_no_deadline", deadline=None)
settings.load_profile("default_no_deadline")
