import pytest

from smforge import analyze, compile_machine, corpus_model_text, parse


def parse_ok(text: str, filename: str = "<test>"):
    unit = parse(text, filename)
    assert not isinstance(unit, list), "\n".join(str(d) for d in unit)
    return unit


def analyze_ok(unit):
    model = analyze(unit)
    assert not isinstance(model, list), "\n".join(str(d) for d in model)
    return model


def diagnostics_of(text: str):
    """Parse + analyze, returning all diagnostics (parse or analysis)."""
    unit = parse(text, "<test>")
    if isinstance(unit, list):
        return unit
    result = analyze(unit)
    if isinstance(result, list):
        return result
    return result.warnings


def codes(diags) -> list[str]:
    return [d.code for d in diags]


@pytest.fixture(scope="session")
def aggregation_text():
    return corpus_model_text("aggregation")


@pytest.fixture(scope="session")
def taxis_text():
    return corpus_model_text("taxis")


@pytest.fixture(scope="session")
def aggregation_model(aggregation_text):
    return analyze_ok(parse_ok(aggregation_text, "aggregation.rcm"))


@pytest.fixture(scope="session")
def taxis_model(taxis_text):
    return analyze_ok(parse_ok(taxis_text, "taxis.rcm"))


@pytest.fixture(scope="session")
def aggregation_cm(aggregation_model):
    return compile_machine(aggregation_model, "AggregationFSM")


@pytest.fixture(scope="session")
def taxis_cm(taxis_model):
    return compile_machine(taxis_model, "SwarmTaxisFSM")
