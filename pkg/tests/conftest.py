import sys


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines where capture can't swallow them."""
    verdicts = []
    for name, mod in list(sys.modules.items()):
        if name.rpartition(".")[2] == "test_acceptance":
            verdicts = getattr(mod, "VERDICTS", []) or verdicts
    if not verdicts:
        return
    terminalreporter.section("acceptance verdicts")
    for line in verdicts:
        terminalreporter.write_line(line)
