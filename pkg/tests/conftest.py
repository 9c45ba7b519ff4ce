import pytest

# criterion number -> (passed, note); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, note = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {note}")


@pytest.fixture(scope="session")
def gamma1():
    from nzpatterns.automaton import builtin
    return builtin("gamma1")


@pytest.fixture(scope="session")
def gamma3():
    from nzpatterns.automaton import builtin
    return builtin("gamma3")


@pytest.fixture(scope="session")
def gamma3_bundle(gamma3):
    from nzpatterns import construction as cs
    a = cs.assign_alphabet(gamma3, 10)
    return a, cs.build_families(gamma3, a)


@pytest.fixture(scope="session")
def gamma1_bundle(gamma1):
    from nzpatterns import construction as cs
    a = cs.assign_alphabet(gamma1, 10)
    return a, cs.build_families(gamma1, a)
