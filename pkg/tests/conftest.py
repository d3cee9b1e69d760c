import torch

torch.set_num_threads(1)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    from acceptance_registry import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        ok, detail = RESULTS[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")
