from pydantic_settings import BaseSettings, SettingsConfigDict


class AppConfig(BaseSettings):
    """
    Конфигурация приложения
    """

    VERSION: str = "0.1.0"
    PROJECT_DESC: str = "Numerical distribution estimation under local differential privacy"
    PROJECT_NAME: str = "ldp-numeric-distribution"
    ENVIRONMENT: str = "development"

    LOGLEVEL: str = "INFO"
    # Пустая строка отключает отправку логов в Loki
    LOKI_URL: str = ""

    model_config = SettingsConfigDict(env_prefix="APP_", env_file=".env", extra="ignore")


class EmConfigDefaults(BaseSettings):
    """
    Значения по умолчанию для EM / EMS реконструкции
    """

    MAX_ITERS: int = 10_000
    TAU_FACTOR: float = 1e-3  # tau для EM = TAU_FACTOR * e^eps
    TAU_SMOOTHED: float = 1e-3  # tau для EMS

    model_config = SettingsConfigDict(env_prefix="EM_", env_file=".env", extra="ignore")


class AdmmConfigDefaults(BaseSettings):
    """
    Значения по умолчанию для HH-ADMM
    """

    MAX_ITERS: int = 5_000
    TOL: float = 1e-8
    RHO: float = 1.0

    model_config = SettingsConfigDict(env_prefix="ADMM_", env_file=".env", extra="ignore")


class HarnessConfig(BaseSettings):
    """
    Конфигурация экспериментального стенда
    """

    REPETITIONS: int = 20
    THREADS: int = 4
    RANGE_TRIALS: int = 1000
    MAX_USERS: int = 100_000
    SEED: int = 0
    BETA: int = 4  # ветвление дерева для HH и HH-ADMM
    OLH_CHUNK: int = 4096  # пользователей на блок при агрегации OLH

    model_config = SettingsConfigDict(env_prefix="HARNESS_", env_file=".env", extra="ignore")


class Settings(BaseSettings):
    """
    Контейнер всех настроек приложения
    """

    app_cfg: AppConfig = AppConfig()
    em_cfg: EmConfigDefaults = EmConfigDefaults()
    admm_cfg: AdmmConfigDefaults = AdmmConfigDefaults()
    harness_cfg: HarnessConfig = HarnessConfig()


config = Settings()
