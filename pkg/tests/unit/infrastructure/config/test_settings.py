from src.infrastructure.config.settings import FrapSettings, get_settings


def test_defaults(monkeypatch):
    monkeypatch.delenv("FRAP_SEED", raising=False)
    monkeypatch.delenv("FRAP_WORKERS", raising=False)
    settings = FrapSettings(_env_file=None)
    assert settings.FRAP_SEED is None
    assert settings.FRAP_WORKERS == 4
    assert settings.FRAP_VERIFY_MANIFEST is None


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("FRAP_SEED", "7")
    monkeypatch.setenv("FRAP_LOG_LEVEL", "debug")
    settings = FrapSettings(_env_file=None)
    assert settings.FRAP_SEED == 7
    assert settings.FRAP_LOG_LEVEL == "debug"


def test_settings_are_cached():
    assert get_settings() is get_settings()
