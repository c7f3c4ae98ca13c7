import pytest


@pytest.fixture(autouse=True)
def _isolated_cue_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("AGL_CACHE_DIR", str(tmp_path / "cue_cache"))
