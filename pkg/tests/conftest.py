from pathlib import Path

import pytest

from agentlens.ingest import parse_log
from agentlens.providers import ProviderConfig
from agentlens.summarize import SummaryEngine

FIXTURES = Path(__file__).parent / "fixtures"
SMALLTOWN = FIXTURES / "smalltown.jsonl"


@pytest.fixture(scope="session")
def smalltown_text():
    return SMALLTOWN.read_text("utf-8")


@pytest.fixture(scope="session")
def smalltown(smalltown_text):
    timeline, report = parse_log(smalltown_text)
    assert report.ok, report.errors
    return timeline


@pytest.fixture(scope="session")
def offline_engine(tmp_path_factory):
    """One shared offline engine so per-tick summaries/embeddings of the
    fixture are computed once per test session."""
    cache = tmp_path_factory.mktemp("shared-cache")
    return SummaryEngine(cache, ProviderConfig(offline=True))
